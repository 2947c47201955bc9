//! Near-duplicate-aware splitting: generate a corpus, plant near copies,
//! cluster by edit-distance similarity and assign whole clusters to
//! train/dev/test, then confirm no similar pair straddles two splits.

use deontic::corpus::{
    assign_splits, cluster_sections, generate_synthetic, inject_near_duplicates, leaking_pairs, ClusterOptions, Split,
};

fn main() {
    let base = generate_synthetic(150, 21);
    let (corpus, planted) = inject_near_duplicates(&base, 20, 4);
    println!("{} sections, {} planted near-duplicates", corpus.sections.len(), planted.len());

    let options = ClusterOptions::default();
    let clusters = cluster_sections(&corpus.sections, &options).unwrap();
    let multi = clusters.iter().filter(|c| c.len() > 1).count();
    println!("{} clusters, {} with more than one section", clusters.len(), multi);

    let sizes: Vec<usize> = corpus.sections.iter().map(|s| s.sentences.len()).collect();
    let assignment = assign_splits(&clusters, &sizes, [0.70, 0.18, 0.12], 9).unwrap();
    for (split, (n, f)) in Split::ALL.iter().zip(assignment.sentences.iter().zip(assignment.fractions())) {
        println!("  {split:<5} {n:>5} sentences ({:.1}%)", 100.0 * f);
    }
    for w in &assignment.warnings {
        println!("  warning: {w}");
    }

    let together = planted
        .iter()
        .filter(|(a, b)| assignment.splits[*a] == assignment.splits[*b])
        .count();
    println!("planted pairs kept together: {together}/{}", planted.len());
    let leaks = leaking_pairs(&corpus.sections, &assignment.splits, &options).unwrap();
    println!("cross-split pairs with similarity >= {}: {}", options.threshold, leaks.len());

    print!("\n{}", assignment.to_table(&corpus.sections).lines().take(6).collect::<Vec<_>>().join("\n"));
    println!("\n...");
}
