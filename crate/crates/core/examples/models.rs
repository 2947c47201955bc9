//! The four classifiers on one section: parameter counts, class
//! distributions and attention weights from untrained, seeded weights.

use deontic::embed::{EmbeddingDims, EmbeddingSetup};
use deontic::model::{count_parameters, predict_section, ModelConfig, ModelParams, ModelVariant};
use deontic::text::{assemble_section, ClassLabel, MAX_SECTION_SENTENCES};

fn main() {
    let section = assemble_section(
        "demo",
        "1",
        "A Party shall not directly solicit the employment of: (i) in the case of Client, Supplier's employees \
         engaged in the provision of the Services, (ii) in the case of Supplier, Client's employees engaged. \
         Nothing in this section will restrict either Party's right to recruit.",
        &[],
        MAX_SECTION_SENTENCES,
    )
    .unwrap()
    .remove(0);
    let words: Vec<&str> = section
        .sentences
        .iter()
        .flat_map(|s| s.tokens.iter().map(|t| t.surface.as_str()))
        .collect();
    let dims = EmbeddingDims { word: 16, pos: 4, shape: 2 };
    let mut setup = EmbeddingSetup::with_dims(dims);
    setup.min_count = 1;

    for variant in ModelVariant::ALL {
        let mut config = ModelConfig::new(variant, 8);
        config.dims = dims;
        config.context = 5;
        let table = setup.build(&words, 1).unwrap();
        let counted = count_parameters(&config, table.vocab().len(), table.trainable);
        let params = ModelParams::init(config, table, 42).unwrap();
        assert_eq!(counted, params.parameter_count());
        println!("\n{} ({} trainable parameters)", variant.display_name(), counted.total());

        let encoded: Vec<_> = section.sentences.iter().map(|s| params.embeddings.encode(s)).collect();
        for (s, p) in section.sentences.iter().zip(predict_section(&params, &encoded).unwrap()) {
            let label = ClassLabel::from_index(p.label()).unwrap();
            let head: String = s.text.chars().take(40).collect();
            print!("  {head:<40} -> {:<22}", label.display_name());
            if let Some(scores) = &p.scores {
                let (best, w) = scores
                    .iter()
                    .enumerate()
                    .fold((0, 0.0), |acc, (i, &w)| if w > acc.1 { (i, w) } else { acc });
                print!(" top attention {:?} {w:.3}", s.tokens[best].surface);
            }
            println!();
        }
    }
}
