//! Trains a small attentive model and writes an HTML attention heatmap of
//! held-out prohibitions; prints an ANSI rendering to the terminal.
//!
//! `cargo run --release --example heatmap -- [out.html]`

use deontic::corpus::generate_synthetic;
use deontic::embed::{EmbeddingDims, EmbeddingSetup};
use deontic::heatmap::{attention_heatmap, render_ansi, render_html};
use deontic::model::ModelVariant;
use deontic::text::{ClassLabel, Section};
use deontic::train::{fit, TrainConfig};

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "attention.html".into());
    let corpus = generate_synthetic(160, 12);
    let (train, dev) = corpus.sections.split_at(130);
    let setup = EmbeddingSetup::with_dims(EmbeddingDims { word: 40, pos: 8, shape: 4 });
    let config = TrainConfig {
        hidden: 24,
        max_epochs: 15,
        seed: 2,
        ..TrainConfig::default()
    };
    let fitted = fit(ModelVariant::BilstmAtt, train, dev, &config, &setup).unwrap();

    // one held-out section per prohibition sentence
    let probes: Vec<Section> = dev
        .iter()
        .flat_map(|s| {
            s.sentences
                .iter()
                .filter(|x| x.label == Some(ClassLabel::Prohibition))
                .map(|x| Section {
                    doc_id: s.doc_id.clone(),
                    section_id: s.section_id.clone(),
                    sentences: vec![x.clone()],
                })
        })
        .take(12)
        .collect();
    let rows = attention_heatmap(&fitted.params, &probes).unwrap();
    std::fs::write(&out, render_html(&rows, "BILSTM-ATT attention")).unwrap();
    print!("{}", render_ansi(&rows));
    println!("wrote {out}");
}
