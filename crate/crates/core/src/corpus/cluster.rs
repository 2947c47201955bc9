use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::levenshtein::Pattern;
use super::CorpusError;
use crate::text::Section;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceUnit {
    Char,
    Token,
}

impl FromStr for DistanceUnit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "char" => Ok(DistanceUnit::Char),
            "token" => Ok(DistanceUnit::Token),
            _ => Err(format!("unknown distance unit {s:?} (expected char or token)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    pub threshold: f64,
    pub unit: DistanceUnit,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            threshold: 0.8,
            unit: DistanceUnit::Char,
        }
    }
}

impl ClusterOptions {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(CorpusError::Split(format!(
                "threshold must be in (0, 1], got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// `1 − d/max(|a|,|b|)`; two empty sequences are identical.
pub fn similarity<T: Eq + std::hash::Hash + Copy>(a: &[T], b: &[T]) -> f64 {
    let m = a.len().max(b.len());
    if m == 0 {
        return 1.0;
    }
    ratio(super::levenshtein_seq(a, b), m)
}

fn ratio(d: usize, m: usize) -> f64 {
    if m == 0 {
        1.0
    } else {
        1.0 - d as f64 / m as f64
    }
}

/// Each section as a symbol sequence in the chosen unit.
fn sequences(sections: &[Section], unit: DistanceUnit) -> Vec<Vec<u32>> {
    match unit {
        DistanceUnit::Char => sections
            .iter()
            .map(|s| s.text().chars().map(u32::from).collect())
            .collect(),
        DistanceUnit::Token => {
            let mut ids: HashMap<&str, u32> = HashMap::new();
            sections
                .iter()
                .map(|s| {
                    s.sentences
                        .iter()
                        .flat_map(|x| &x.tokens)
                        .map(|t| {
                            let n = ids.len() as u32;
                            *ids.entry(t.surface.as_str()).or_insert(n)
                        })
                        .collect()
                })
                .collect()
        }
    }
}

/// Pairs `(i, j)`, `i < j`, with similarity at least `threshold`.
fn similar_pairs(seqs: &[Vec<u32>], threshold: f64, keep: impl Fn(usize, usize) -> bool + Sync) -> Vec<(usize, usize, f64)> {
    let mut pairs: Vec<(usize, usize, f64)> = (0..seqs.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let pattern = Pattern::new(&seqs[i]);
            let mut row = Vec::new();
            for j in i + 1..seqs.len() {
                if !keep(i, j) {
                    continue;
                }
                let (la, lb) = (seqs[i].len(), seqs[j].len());
                let m = la.max(lb);
                // the length difference bounds the distance from below
                if ratio(la.abs_diff(lb), m) < threshold {
                    continue;
                }
                let s = ratio(pattern.distance(&seqs[j]), m);
                if s >= threshold {
                    row.push((i, j, s));
                }
            }
            row
        })
        .collect();
    pairs.sort_by_key(|&(i, j, _)| (i, j));
    pairs
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Single-linkage clusters: the connected components of the graph joining
/// every pair with similarity ≥ threshold. Clusters are ordered by their
/// first member; members ascend.
pub fn cluster_sections(sections: &[Section], options: &ClusterOptions) -> Result<Vec<Vec<usize>>, CorpusError> {
    options.validate()?;
    let seqs = sequences(sections, options.unit);
    let mut uf = UnionFind((0..sections.len()).collect());
    for (i, j, _) in similar_pairs(&seqs, options.threshold, |_, _| true) {
        uf.union(i, j);
    }
    let mut by_root: HashMap<usize, usize> = HashMap::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..sections.len() {
        let r = uf.find(i);
        let k = *by_root.entry(r).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[k].push(i);
    }
    Ok(clusters)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn key(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Split::ALL
            .into_iter()
            .find(|x| x.key() == s)
            .ok_or_else(|| format!("unknown split {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitAssignment {
    /// Split of each section, in corpus order.
    pub splits: Vec<Split>,
    pub clusters: Vec<Vec<usize>>,
    /// Split of each cluster, parallel to `clusters`.
    pub cluster_splits: Vec<Split>,
    /// Sentences per split, in `Split::ALL` order.
    pub sentences: [usize; 3],
    pub warnings: Vec<String>,
}

impl SplitAssignment {
    /// Realized sentence share of each split.
    pub fn fractions(&self) -> [f64; 3] {
        let total: usize = self.sentences.iter().sum();
        self.sentences.map(|n| if total == 0 { 0.0 } else { n as f64 / total as f64 })
    }

    /// Three-column table: doc_id, section_id, split.
    pub fn to_table(&self, sections: &[Section]) -> String {
        let mut out = String::from("doc_id\tsection_id\tsplit\n");
        for (s, split) in sections.iter().zip(&self.splits) {
            out.push_str(&format!("{}\t{}\t{}\n", s.doc_id, s.section_id, split));
        }
        out
    }
}

const RATIO_SLACK: f64 = 0.05;

/// Shuffles clusters by `seed`, then hands each to the split furthest below
/// its target sentence count. Clusters are never divided.
pub fn assign_splits(
    clusters: &[Vec<usize>],
    sentence_counts: &[usize],
    ratios: [f64; 3],
    seed: u64,
) -> Result<SplitAssignment, CorpusError> {
    if ratios.iter().any(|r| !(*r > 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return Err(CorpusError::Split(format!(
            "ratios must be positive and sum to 1, got {ratios:?}"
        )));
    }
    let size = |c: &Vec<usize>| c.iter().map(|&i| sentence_counts[i]).sum::<usize>();
    let total: usize = clusters.iter().map(size).sum();
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut filled = [0usize; 3];
    let mut cluster_splits = vec![Split::Train; clusters.len()];
    for &c in &order {
        let mut best = 0;
        let mut best_deficit = f64::NEG_INFINITY;
        for k in 0..3 {
            let deficit = ratios[k] * total as f64 - filled[k] as f64;
            if deficit > best_deficit {
                best = k;
                best_deficit = deficit;
            }
        }
        cluster_splits[c] = Split::ALL[best];
        filled[best] += size(&clusters[c]);
    }

    let mut splits = vec![Split::Train; sentence_counts.len()];
    for (c, members) in clusters.iter().enumerate() {
        for &i in members {
            splits[i] = cluster_splits[c];
        }
    }
    let mut warnings = Vec::new();
    if total > 0 {
        let largest = clusters.iter().map(size).max().unwrap_or(0);
        let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
        if largest as f64 > max_ratio * total as f64 {
            warnings.push(format!(
                "largest cluster holds {largest} of {total} sentences; split ratios cannot be met"
            ));
        }
        for k in 0..3 {
            let got = filled[k] as f64 / total as f64;
            if (got - ratios[k]).abs() > RATIO_SLACK {
                warnings.push(format!(
                    "{} split holds {:.3} of sentences, target {:.3}",
                    Split::ALL[k],
                    got,
                    ratios[k]
                ));
            }
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(SplitAssignment {
        splits,
        clusters: clusters.to_vec(),
        cluster_splits,
        sentences: filled,
        warnings,
    })
}

/// Every cross-split pair with similarity ≥ threshold, checked pair by pair
/// without reference to the clusters.
pub fn leaking_pairs(
    sections: &[Section],
    splits: &[Split],
    options: &ClusterOptions,
) -> Result<Vec<(usize, usize, f64)>, CorpusError> {
    options.validate()?;
    if splits.len() != sections.len() {
        return Err(CorpusError::Split(format!(
            "{} splits for {} sections",
            splits.len(),
            sections.len()
        )));
    }
    let seqs = sequences(sections, options.unit);
    Ok(similar_pairs(&seqs, options.threshold, |i, j| splits[i] != splits[j]))
}
