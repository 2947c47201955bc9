//! Corpus files, near-duplicate clustering, cluster-level splits and the
//! synthetic contract generator.

mod cluster;
mod jsonl;
mod levenshtein;
mod synth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::Section;

pub use cluster::{
    assign_splits, cluster_sections, leaking_pairs, similarity, ClusterOptions, DistanceUnit, Split, SplitAssignment,
};
pub use jsonl::{parse_corpus, read_corpus, render_corpus, write_corpus};
pub use levenshtein::{levenshtein, levenshtein_dp, levenshtein_seq, levenshtein_within};
pub use synth::{generate_synthetic, inject_near_duplicates, list_item_accounting, ListAccounting};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate section {doc_id}/{section_id} at line {line}")]
    DuplicateSection {
        doc_id: String,
        section_id: String,
        line: usize,
    },
    #[error("split: {0}")]
    Split(String),
}

/// Where a corpus came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance {
            source: "file".into(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub sections: Vec<Section>,
    pub provenance: Provenance,
}

impl Corpus {
    pub fn new(sections: Vec<Section>, provenance: Provenance) -> Self {
        Corpus { sections, provenance }
    }

    pub fn sentence_count(&self) -> usize {
        self.sections.iter().map(|s| s.sentences.len()).sum()
    }

    /// Sentences per gold class, in class order; unlabeled sentences are
    /// not counted.
    pub fn label_counts(&self) -> [usize; crate::text::ClassLabel::COUNT] {
        let mut out = [0; crate::text::ClassLabel::COUNT];
        for s in self.sections.iter().flat_map(|s| &s.sentences) {
            if let Some(l) = s.label {
                out[l.index()] += 1;
            }
        }
        out
    }

    /// Sections in `split` under `assignment`, in corpus order.
    pub fn subset(&self, assignment: &SplitAssignment, split: Split) -> Vec<Section> {
        self.sections
            .iter()
            .zip(&assignment.splits)
            .filter(|(_, s)| **s == split)
            .map(|(sec, _)| sec.clone())
            .collect()
    }
}
