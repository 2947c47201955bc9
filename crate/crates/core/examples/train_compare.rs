//! Trains the flat, attentive, context-extended and hierarchical models on
//! one synthetic corpus and prints a side-by-side evaluation table.
//!
//! `cargo run --release --example train_compare -- [sections] [hidden] [epochs]`

use std::time::Instant;

use deontic::corpus::{assign_splits, cluster_sections, generate_synthetic, ClusterOptions, Split};
use deontic::embed::{EmbeddingDims, EmbeddingSetup};
use deontic::eval::{evaluate_model, render_table, MetricsOptions};
use deontic::model::ModelVariant;
use deontic::train::{fit, TrainConfig};

fn arg(i: usize, default: usize) -> usize {
    std::env::args().nth(i).map_or(default, |s| s.parse().expect("numeric argument"))
}

fn main() {
    let (sections, hidden, epochs) = (arg(1, 120), arg(2, 24), arg(3, 12));
    let corpus = generate_synthetic(sections, 5);
    let clusters = cluster_sections(&corpus.sections, &ClusterOptions::default()).unwrap();
    let sizes: Vec<usize> = corpus.sections.iter().map(|s| s.sentences.len()).collect();
    let assignment = assign_splits(&clusters, &sizes, [0.70, 0.18, 0.12], 5).unwrap();
    let (train, dev, test) = (
        corpus.subset(&assignment, Split::Train),
        corpus.subset(&assignment, Split::Dev),
        corpus.subset(&assignment, Split::Test),
    );
    println!("sentences: train {} dev {} test {}", assignment.sentences[0], assignment.sentences[1], assignment.sentences[2]);

    let setup = EmbeddingSetup::with_dims(EmbeddingDims { word: 50, pos: 10, shape: 5 });
    let mut reports = Vec::new();
    for variant in ModelVariant::ALL {
        let config = TrainConfig {
            hidden,
            max_epochs: epochs,
            batch_size: if variant.is_hierarchical() { 2 } else { 16 },
            context: 10,
            seed: 1,
            ..TrainConfig::default()
        };
        let clock = Instant::now();
        let fitted = fit(variant, &train, &dev, &config, &setup).unwrap();
        let r = &fitted.report;
        println!(
            "{:<14} params {:>7}  epochs {:>2}  best {:>2}  dev loss {:.4}  {:.1}s",
            variant.display_name(),
            r.parameters.total(),
            r.epochs.len(),
            r.best_epoch,
            r.best_dev_loss,
            clock.elapsed().as_secs_f64()
        );
        let metrics = evaluate_model(&fitted.params, &test, MetricsOptions::default()).unwrap();
        reports.push((variant.display_name(), metrics));
    }
    let table: Vec<(&str, _)> = reports.iter().map(|(n, r)| (*n, r)).collect();
    println!("\n{}", render_table(&table));
}
