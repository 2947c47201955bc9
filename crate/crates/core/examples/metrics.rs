//! Per-class precision, recall, F1 and PR-AUC with macro and micro
//! averages, rendered as a comparison table.

use deontic::eval::{micro_macro, pr_auc, render_table, MetricsOptions};
use deontic::text::ClassLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noisy_predictions(gold: &[ClassLabel], noise: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gold.iter()
        .map(|g| {
            let mut p: Vec<f64> = (0..ClassLabel::COUNT).map(|_| rng.gen::<f64>() * noise).collect();
            p[g.index()] += 1.0 - noise;
            let z: f64 = p.iter().sum();
            p.iter().map(|x| x / z).collect()
        })
        .collect()
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let weights = [49.0, 35.0, 4.0, 3.0, 8.0, 1.0];
    let total: f64 = weights.iter().sum();
    let gold: Vec<ClassLabel> = (0..2000)
        .map(|_| {
            let mut r = rng.gen::<f64>() * total;
            let mut k = 0;
            while r > weights[k] {
                r -= weights[k];
                k += 1;
            }
            ClassLabel::ALL[k]
        })
        .collect();

    let sharp = micro_macro(&gold, &noisy_predictions(&gold, 0.6, 1), MetricsOptions::default());
    let blurry = micro_macro(&gold, &noisy_predictions(&gold, 0.85, 2), MetricsOptions::default());
    println!("{}", render_table(&[("SHARP", &sharp), ("BLURRY", &blurry)]));

    let without_none = micro_macro(
        &gold,
        &noisy_predictions(&gold, 0.6, 1),
        MetricsOptions { micro_includes_none: false },
    );
    println!("micro F1 with None {:.4}, without None {:.4}", sharp.micro_avg.f1, without_none.micro_avg.f1);

    // average precision on a hand-checkable ranking
    let scores = [0.9, 0.8, 0.7, 0.6, 0.5];
    let positives = [true, false, true, false, false];
    println!("AP of [+ - + - -] = {:.4} (= (1 + 2/3) / 2)", pr_auc(&scores, &positives).unwrap());
}
