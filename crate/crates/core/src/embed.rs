//! Word, POS and shape vectors, and the concatenated token representation.
//!
//! A token vector is `[word; pos; shape]`. Out-of-vocabulary words fall back
//! first to their lower-cased form, then to a per-POS `unk` vector, so every
//! token the text pipeline produces has a representation.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::Tensor;
use crate::text::{PosTag, Sentence, TokenRecord, TokenShape, POS_TAGS};
use crate::train::init::{glorot_with, uniform_with};

/// Reserved first row of every word table.
pub const PAD_TOKEN: &str = "<pad>";
/// Half-width of the uniform range used for random word vectors.
pub const RANDOM_RANGE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("embedding configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingDims {
    pub word: usize,
    pub pos: usize,
    pub shape: usize,
}

impl Default for EmbeddingDims {
    fn default() -> Self {
        EmbeddingDims {
            word: 200,
            pos: 25,
            shape: 5,
        }
    }
}

impl EmbeddingDims {
    pub fn total(&self) -> usize {
        self.word + self.pos + self.shape
    }
}

/// Token → vector map preserving insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorMap {
    dim: usize,
    entries: Vec<(String, Vec<f64>)>,
    index: HashMap<String, usize>,
    /// Lines whose token had already been seen (the later line wins).
    pub duplicates: usize,
}

impl VectorMap {
    pub fn new(dim: usize) -> Self {
        VectorMap {
            dim,
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn insert(&mut self, token: String, vector: Vec<f64>) {
        assert_eq!(vector.len(), self.dim, "vector for {token:?} has wrong dimension");
        match self.index.get(&token) {
            Some(&i) => {
                self.entries[i].1 = vector;
                self.duplicates += 1;
            }
            None => {
                self.index.insert(token.clone(), self.entries.len());
                self.entries.push((token, vector));
            }
        }
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| self.entries[i].1.as_slice())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(t, v)| (t.as_str(), v.as_slice()))
    }
}

/// Reads the plain-text vector format: one `token v1 … vd` per line, with an
/// optional `count dim` header line.
pub fn load_pretrained(path: &Path, expected_dim: usize) -> Result<VectorMap, EmbeddingError> {
    let file = File::open(path).map_err(|source| EmbeddingError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_vectors(BufReader::new(file), expected_dim).map_err(|e| match e {
        EmbeddingError::Io { source, .. } => EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn read_vectors<R: BufRead>(reader: R, expected_dim: usize) -> Result<VectorMap, EmbeddingError> {
    let mut map = VectorMap::new(expected_dim);
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|source| EmbeddingError::Io {
            path: PathBuf::new(),
            source,
        })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if lineno == 1 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            let dim: usize = fields[1].parse().expect("checked above");
            if dim != expected_dim {
                return Err(EmbeddingError::Format {
                    line: 1,
                    message: format!("header declares dimension {dim}, expected {expected_dim}"),
                });
            }
            continue;
        }
        let values = &fields[1..];
        if values.len() != expected_dim {
            return Err(EmbeddingError::Format {
                line: lineno,
                message: format!("{} values for {:?}, expected {expected_dim}", values.len(), fields[0]),
            });
        }
        let vector = values
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| EmbeddingError::Format {
                        line: lineno,
                        message: format!("invalid number {v:?}"),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        map.insert(fields[0].to_string(), vector);
    }
    if map.duplicates > 0 {
        log::warn!("{} duplicate tokens in vector file; later lines won", map.duplicates);
    }
    Ok(map)
}

/// Uniform `(−0.05, 0.05)` vectors for `vocab`, drawn from one seeded
/// stream in vocabulary order: the `k`-th token always gets the `k`-th draw.
pub fn random_table(vocab: &[String], dim: usize, seed: u64) -> VectorMap {
    assert!(dim > 0, "dimension must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map = VectorMap::new(dim);
    for token in vocab {
        let v = uniform_with(&mut rng, &[dim], RANDOM_RANGE).into_data();
        map.insert(token.clone(), v);
    }
    map
}

/// Which tables receive gradient updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableFlags {
    pub word: bool,
    pub unk: bool,
    pub pos: bool,
    pub shape: bool,
}

impl Default for TableFlags {
    fn default() -> Self {
        TableFlags {
            word: false,
            unk: true,
            pos: true,
            shape: true,
        }
    }
}

/// Where a token's word part comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordRow {
    Vocab(usize),
    Unk(PosTag),
}

/// The four lookup tables. Rows of `unk` and `pos` follow [`POS_TAGS`];
/// rows of `shape` follow [`TokenShape::ALL`]; row 0 of `word` is
/// [`PAD_TOKEN`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dims: EmbeddingDims,
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    pub word: Tensor,
    pub unk: Tensor,
    pub pos: Tensor,
    pub shape: Tensor,
    pub trainable: TableFlags,
}

/// A sentence reduced to table row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSentence {
    pub words: Vec<WordRow>,
    pub pos: Vec<usize>,
    pub shapes: Vec<usize>,
    /// `false` marks padding that the models must ignore.
    pub mask: Vec<bool>,
    pub label: Option<usize>,
}

impl EncodedSentence {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn valid_len(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Appends `extra` masked copies of the pad word.
    pub fn padded(&self, extra: usize) -> Self {
        let mut out = self.clone();
        for _ in 0..extra {
            out.words.push(WordRow::Vocab(0));
            out.pos.push(0);
            out.shapes.push(0);
            out.mask.push(false);
        }
        out
    }
}

impl EmbeddingTable {
    /// Assembles a table from explicit matrices, validating every shape.
    pub fn from_parts(
        vocab: Vec<String>,
        word: Tensor,
        unk: Tensor,
        pos: Tensor,
        shape: Tensor,
        trainable: TableFlags,
    ) -> Result<Self, EmbeddingError> {
        let dims = EmbeddingDims {
            word: word.cols(),
            pos: pos.cols(),
            shape: shape.cols(),
        };
        let check = |name: &str, t: &Tensor, rows: usize, cols: usize| {
            if t.ndim() != 2 || t.rows() != rows || t.cols() != cols {
                Err(EmbeddingError::Config(format!(
                    "{name} table has shape {:?}, expected [{rows}, {cols}]",
                    t.shape()
                )))
            } else {
                Ok(())
            }
        };
        if vocab.first().map(String::as_str) != Some(PAD_TOKEN) {
            return Err(EmbeddingError::Config(format!("vocabulary must start with {PAD_TOKEN}")));
        }
        check("word", &word, vocab.len(), dims.word)?;
        check("unk", &unk, POS_TAGS.len(), dims.word)?;
        check("pos", &pos, POS_TAGS.len(), dims.pos)?;
        check("shape", &shape, TokenShape::ALL.len(), dims.shape)?;
        let index = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(EmbeddingTable {
            dims,
            vocab,
            index,
            word,
            unk,
            pos,
            shape,
            trainable,
        })
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn word_row(&self, surface: &str) -> WordRow {
        if let Some(&i) = self.index.get(surface) {
            return WordRow::Vocab(i);
        }
        if let Some(&i) = self.index.get(&surface.to_lowercase()) {
            return WordRow::Vocab(i);
        }
        WordRow::Unk(PosTag::of("NN"))
    }

    fn resolve(&self, token: &TokenRecord) -> WordRow {
        match self.word_row(&token.surface) {
            WordRow::Unk(_) => WordRow::Unk(token.pos),
            hit => hit,
        }
    }

    pub fn is_known(&self, surface: &str) -> bool {
        matches!(self.word_row(surface), WordRow::Vocab(_))
    }

    /// `[word-or-unk; pos; shape]`, length `dims.total()`.
    pub fn lookup(&self, token: &TokenRecord) -> Result<Vec<f64>, EmbeddingError> {
        let word = match self.resolve(token) {
            WordRow::Vocab(i) => self.word.row_slice(i),
            WordRow::Unk(tag) => self.unk.row_slice(tag.index()),
        };
        let (p, s) = (token.pos.index(), token.shape.index());
        if p >= self.pos.rows() || s >= self.shape.rows() {
            return Err(EmbeddingError::Config(format!(
                "no vector for POS {} or shape {}",
                token.pos,
                token.shape.key()
            )));
        }
        let mut out = Vec::with_capacity(self.dims.total());
        out.extend_from_slice(word);
        out.extend_from_slice(self.pos.row_slice(p));
        out.extend_from_slice(self.shape.row_slice(s));
        Ok(out)
    }

    /// `[n × dims.total()]`, row `t` = `lookup(token_t)`.
    pub fn embed_sentence(&self, sentence: &Sentence) -> Result<Tensor, EmbeddingError> {
        let rows = sentence
            .tokens
            .iter()
            .map(|t| self.lookup(t))
            .collect::<Result<Vec<_>, _>>()?;
        Tensor::from_rows(&rows).map_err(|e| EmbeddingError::Config(e.to_string()))
    }

    pub fn encode(&self, sentence: &Sentence) -> EncodedSentence {
        EncodedSentence {
            words: sentence.tokens.iter().map(|t| self.resolve(t)).collect(),
            pos: sentence.tokens.iter().map(|t| t.pos.index()).collect(),
            shapes: sentence.tokens.iter().map(|t| t.shape.index()).collect(),
            mask: vec![true; sentence.tokens.len()],
            label: sentence.label.map(|l| l.index()),
        }
    }

    pub fn parameter_count(&self) -> usize {
        let f = self.trainable;
        [(f.word, &self.word), (f.unk, &self.unk), (f.pos, &self.pos), (f.shape, &self.shape)]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, t)| t.len())
            .sum()
    }
}

/// How to build an [`EmbeddingTable`] for a training run.
#[derive(Debug, Clone)]
pub struct EmbeddingSetup {
    pub dims: EmbeddingDims,
    pub words: Option<VectorMap>,
    pub pos: Option<VectorMap>,
    pub shapes: Option<VectorMap>,
    /// Minimum training-corpus frequency for a word to get its own row when
    /// no pretrained vectors are given; rarer words use `unk` vectors.
    pub min_count: usize,
    pub train_words: bool,
}

impl Default for EmbeddingSetup {
    fn default() -> Self {
        EmbeddingSetup {
            dims: EmbeddingDims::default(),
            words: None,
            pos: None,
            shapes: None,
            min_count: 2,
            train_words: false,
        }
    }
}

impl EmbeddingSetup {
    pub fn with_dims(dims: EmbeddingDims) -> Self {
        EmbeddingSetup {
            dims,
            ..Default::default()
        }
    }

    /// Builds the table. `corpus_words` lists training-corpus surfaces in
    /// order of appearance (repeats allowed; they are counted).
    pub fn build(&self, corpus_words: &[&str], seed: u64) -> Result<EmbeddingTable, EmbeddingError> {
        let d = self.dims;
        if d.word == 0 || d.pos == 0 || d.shape == 0 {
            return Err(EmbeddingError::Config("embedding dimensions must be positive".into()));
        }
        for (name, map, dim) in [("word", &self.words, d.word), ("pos", &self.pos, d.pos), ("shape", &self.shapes, d.shape)] {
            if let Some(m) = map {
                if m.dim() != dim {
                    return Err(EmbeddingError::Config(format!(
                        "{name} vectors have dimension {}, expected {dim}",
                        m.dim()
                    )));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut vocab = vec![PAD_TOKEN.to_string()];
        let mut word_rows = vec![vec![0.0; d.word]];
        match &self.words {
            Some(pre) => {
                for (tok, v) in pre.iter().filter(|(t, _)| *t != PAD_TOKEN && !t.starts_with("unk-")) {
                    vocab.push(tok.to_string());
                    word_rows.push(v.to_vec());
                }
            }
            None => {
                let mut counts: HashMap<&str, usize> = HashMap::new();
                let mut order = Vec::new();
                for &w in corpus_words {
                    let c = counts.entry(w).or_insert(0);
                    if *c == 0 {
                        order.push(w);
                    }
                    *c += 1;
                }
                let kept: Vec<String> = order
                    .into_iter()
                    .filter(|w| counts[w] >= self.min_count.max(1) && *w != PAD_TOKEN)
                    .map(String::from)
                    .collect();
                let table = random_table(&kept, d.word, rng.gen());
                for (tok, v) in table.iter() {
                    vocab.push(tok.to_string());
                    word_rows.push(v.to_vec());
                }
            }
        }
        let word = Tensor::from_rows(&word_rows).expect("rows share the word dimension");

        let unk_names: Vec<String> = POS_TAGS.iter().map(|t| format!("unk-{}", t.to_lowercase())).collect();
        let mut unk = random_table(&unk_names, d.word, rng.gen());
        if let Some(pre) = &self.words {
            for name in &unk_names {
                if let Some(v) = pre.get(name) {
                    unk.insert(name.clone(), v.to_vec());
                }
            }
        }
        let unk = Tensor::from_rows(&unk.iter().map(|(_, v)| v.to_vec()).collect::<Vec<_>>())
            .expect("rows share the word dimension");

        let pos = symbol_table(&mut rng, POS_TAGS.iter().copied(), d.pos, self.pos.as_ref());
        let shape = symbol_table(&mut rng, TokenShape::ALL.iter().map(|s| s.key()), d.shape, self.shapes.as_ref());

        EmbeddingTable::from_parts(
            vocab,
            word,
            unk,
            pos,
            shape,
            TableFlags {
                word: self.train_words,
                ..TableFlags::default()
            },
        )
    }
}

/// Glorot-uniform rows, overridden by pretrained vectors where available.
fn symbol_table<'a>(
    rng: &mut ChaCha8Rng,
    symbols: impl Iterator<Item = &'a str>,
    dim: usize,
    pretrained: Option<&VectorMap>,
) -> Tensor {
    let symbols: Vec<&str> = symbols.collect();
    let mut t = glorot_with(rng, symbols.len(), dim);
    if let Some(pre) = pretrained {
        for (i, s) in symbols.iter().enumerate() {
            if let Some(v) = pre.get(s) {
                t.row_slice_mut(i).copy_from_slice(v);
            }
        }
    }
    t
}
