//! The four sentence classifiers and their building blocks.
//!
//! * `bilstm`: BiLSTM over token vectors, last states pooled, softmax LR.
//! * `bilstm-att`: as above but pooled by self-attention.
//! * `x-bilstm-att`: BiLSTM over the sentence plus up to `context` tokens of
//!   section context on each side; attention sees the sentence rows only.
//! * `h-bilstm-att`: attention-pooled sentence embeddings fed to a second
//!   BiLSTM over the section, one LR prediction per upper state.

mod checkpoint;
mod forward;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{EmbeddingDims, EmbeddingError, EmbeddingTable, TableFlags};
use crate::tensor::{Tensor, TensorError};
use crate::text::ClassLabel;
use crate::train::init::glorot_with;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use forward::{
    attention_pool, bilstm_encode, classify_flat, classify_section_hier, classify_with_context, last_state_pool,
    argmax, lstm_cell_step, predict_section, Bound, CellVars, Forward, Prediction, SentenceVars,
};

/// Longest context window, in tokens, on each side of a sentence.
pub const MAX_CONTEXT: usize = 150;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("model configuration: {0}")]
    Config(String),
    #[error("sentence has no unmasked tokens")]
    EmptySentence,
    #[error("model has no attention")]
    NoAttention,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelVariant {
    #[serde(rename = "bilstm")]
    Bilstm,
    #[serde(rename = "bilstm-att")]
    BilstmAtt,
    #[serde(rename = "x-bilstm-att")]
    XBilstmAtt,
    #[serde(rename = "h-bilstm-att")]
    HBilstmAtt,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::Bilstm,
        ModelVariant::BilstmAtt,
        ModelVariant::XBilstmAtt,
        ModelVariant::HBilstmAtt,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ModelVariant::Bilstm => "bilstm",
            ModelVariant::BilstmAtt => "bilstm-att",
            ModelVariant::XBilstmAtt => "x-bilstm-att",
            ModelVariant::HBilstmAtt => "h-bilstm-att",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelVariant::Bilstm => "BILSTM",
            ModelVariant::BilstmAtt => "BILSTM-ATT",
            ModelVariant::XBilstmAtt => "X-BILSTM-ATT",
            ModelVariant::HBilstmAtt => "H-BILSTM-ATT",
        }
    }

    pub fn has_attention(self) -> bool {
        self != ModelVariant::Bilstm
    }

    pub fn is_hierarchical(self) -> bool {
        self == ModelVariant::HBilstmAtt
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase().replace('_', "-");
        ModelVariant::ALL
            .into_iter()
            .find(|v| v.key() == lower)
            .ok_or_else(|| {
                let names: Vec<_> = ModelVariant::ALL.iter().map(|v| v.key()).collect();
                format!("unknown model {s:?}; expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: ModelVariant,
    pub hidden: usize,
    /// Context tokens on each side; used by `x-bilstm-att` only.
    pub context: usize,
    pub dropout: f64,
    pub classes: usize,
    pub dims: EmbeddingDims,
}

impl ModelConfig {
    pub fn new(variant: ModelVariant, hidden: usize) -> Self {
        ModelConfig {
            variant,
            hidden,
            context: MAX_CONTEXT,
            dropout: 0.5,
            classes: ClassLabel::COUNT,
            dims: EmbeddingDims::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden == 0 {
            return Err(ModelError::Config("hidden size must be positive".into()));
        }
        if self.context > MAX_CONTEXT {
            return Err(ModelError::Config(format!("context {} exceeds {MAX_CONTEXT}", self.context)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.classes < 2 {
            return Err(ModelError::Config("at least two classes are required".into()));
        }
        Ok(())
    }
}

/// Gate order in every `4u`-wide block: input, forget, cell, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams {
    /// `[input_dim × 4u]`
    pub w: Tensor,
    /// `[u × 4u]`
    pub u: Tensor,
    /// `[1 × 4u]`
    pub b: Tensor,
}

/// Initial forget-gate bias.
pub const FORGET_BIAS: f64 = 1.0;

impl LstmCellParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmCellParams {
            w: Tensor::zeros(&[input_dim, 4 * hidden]),
            u: Tensor::zeros(&[hidden, 4 * hidden]),
            b: Tensor::zeros(&[1, 4 * hidden]),
        }
    }

    /// Glorot-uniform `W` and `U`, zero bias except [`FORGET_BIAS`] on the
    /// forget block.
    pub fn glorot(rng: &mut ChaCha8Rng, input_dim: usize, hidden: usize) -> Self {
        let w = glorot_with(rng, input_dim, 4 * hidden);
        let u = glorot_with(rng, hidden, 4 * hidden);
        let mut b = Tensor::zeros(&[1, 4 * hidden]);
        b.data_mut()[hidden..2 * hidden].fill(FORGET_BIAS);
        LstmCellParams { w, u, b }
    }

    pub fn input_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn hidden(&self) -> usize {
        self.u.rows()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let u = self.hidden();
        let ok = self.w.ndim() == 2
            && self.w.cols() == 4 * u
            && self.u.ndim() == 2
            && self.u.cols() == 4 * u
            && self.b.shape() == [1, 4 * u];
        if ok {
            Ok(())
        } else {
            Err(ModelError::Config(format!(
                "inconsistent LSTM shapes W {:?}, U {:?}, b {:?}",
                self.w.shape(),
                self.u.shape(),
                self.b.shape()
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmParams {
    pub fwd: LstmCellParams,
    pub bwd: LstmCellParams,
}

impl BiLstmParams {
    pub fn glorot(rng: &mut ChaCha8Rng, input_dim: usize, hidden: usize) -> Self {
        BiLstmParams {
            fwd: LstmCellParams::glorot(rng, input_dim, hidden),
            bwd: LstmCellParams::glorot(rng, input_dim, hidden),
        }
    }
}

/// Attention head: `score_t ∝ exp(tanh(vᵀh_t + b))`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    /// `[2u × 1]`
    pub v: Tensor,
    /// `[1]`
    pub b: Tensor,
}

impl AttentionParams {
    pub fn glorot(rng: &mut ChaCha8Rng, state_dim: usize) -> Self {
        AttentionParams {
            v: glorot_with(rng, state_dim, 1),
            b: Tensor::scalar(0.0),
        }
    }
}

/// Multinomial logistic regression layer.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputParams {
    /// `[2u × k]`
    pub w: Tensor,
    /// `[1 × k]`
    pub b: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub embeddings: EmbeddingTable,
    pub encoder: BiLstmParams,
    pub attention: Option<AttentionParams>,
    pub upper: Option<BiLstmParams>,
    pub output: OutputParams,
}

impl ModelParams {
    /// Glorot-initialized parameters around an existing embedding table.
    pub fn init(config: ModelConfig, embeddings: EmbeddingTable, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        if embeddings.dims != config.dims {
            return Err(ModelError::Config(format!(
                "embedding dimensions {:?} do not match configuration {:?}",
                embeddings.dims, config.dims
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = config.hidden;
        let encoder = BiLstmParams::glorot(&mut rng, config.dims.total(), u);
        let attention = config
            .variant
            .has_attention()
            .then(|| AttentionParams::glorot(&mut rng, 2 * u));
        let upper = config
            .variant
            .is_hierarchical()
            .then(|| BiLstmParams::glorot(&mut rng, 2 * u, u));
        let output = OutputParams {
            w: glorot_with(&mut rng, 2 * u, config.classes),
            b: Tensor::zeros(&[1, config.classes]),
        };
        Ok(ModelParams {
            config,
            embeddings,
            encoder,
            attention,
            upper,
            output,
        })
    }

    /// Every tensor with its stable name and whether it is trained.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor, bool)> {
        let flags = self.embeddings.trainable;
        let e = &self.embeddings;
        let mut out = vec![
            ("embed.word".to_string(), &e.word, flags.word),
            ("embed.unk".to_string(), &e.unk, flags.unk),
            ("embed.pos".to_string(), &e.pos, flags.pos),
            ("embed.shape".to_string(), &e.shape, flags.shape),
        ];
        push_bilstm(&mut out, "encoder", &self.encoder);
        if let Some(a) = &self.attention {
            out.push(("attention.v".into(), &a.v, true));
            out.push(("attention.b".into(), &a.b, true));
        }
        if let Some(up) = &self.upper {
            push_bilstm(&mut out, "upper", up);
        }
        out.push(("output.W".into(), &self.output.w, true));
        out.push(("output.b".into(), &self.output.b, true));
        out
    }

    /// Mutable trainable tensors, in [`ModelParams::named_tensors`] order.
    pub fn trainable_mut(&mut self) -> Vec<&mut Tensor> {
        let flags = self.embeddings.trainable;
        let e = &mut self.embeddings;
        let mut out: Vec<&mut Tensor> = Vec::new();
        for (on, t) in [
            (flags.word, &mut e.word),
            (flags.unk, &mut e.unk),
            (flags.pos, &mut e.pos),
            (flags.shape, &mut e.shape),
        ] {
            if on {
                out.push(t);
            }
        }
        out.extend(bilstm_mut(&mut self.encoder));
        if let Some(a) = &mut self.attention {
            out.push(&mut a.v);
            out.push(&mut a.b);
        }
        if let Some(up) = &mut self.upper {
            out.extend(bilstm_mut(up));
        }
        out.push(&mut self.output.w);
        out.push(&mut self.output.b);
        out
    }

    pub fn trainable(&self) -> Vec<&Tensor> {
        self.named_tensors()
            .into_iter()
            .filter(|(_, _, on)| *on)
            .map(|(_, t, _)| t)
            .collect()
    }

    pub fn parameter_count(&self) -> ParamCount {
        count_parameters(&self.config, self.embeddings.vocab().len(), self.embeddings.trainable)
    }
}

fn bilstm_mut(b: &mut BiLstmParams) -> [&mut Tensor; 6] {
    let BiLstmParams { fwd, bwd } = b;
    [&mut fwd.w, &mut fwd.u, &mut fwd.b, &mut bwd.w, &mut bwd.u, &mut bwd.b]
}

fn push_bilstm<'a>(out: &mut Vec<(String, &'a Tensor, bool)>, prefix: &str, b: &'a BiLstmParams) {
    for (dir, c) in [("fwd", &b.fwd), ("bwd", &b.bwd)] {
        out.push((format!("{prefix}.{dir}.W"), &c.w, true));
        out.push((format!("{prefix}.{dir}.U"), &c.u, true));
        out.push((format!("{prefix}.{dir}.b"), &c.b, true));
    }
}

/// Learnable scalars per component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParamCount {
    pub embeddings: usize,
    pub encoder: usize,
    pub attention: usize,
    pub upper: usize,
    pub output: usize,
}

impl ParamCount {
    pub fn total(&self) -> usize {
        self.embeddings + self.encoder + self.attention + self.upper + self.output
    }
}

/// `4(du + u² + u)`.
pub fn lstm_cell_param_count(input_dim: usize, hidden: usize) -> usize {
    4 * (input_dim * hidden + hidden * hidden + hidden)
}

/// Learnable scalars for `config` with a word table of `vocab_size` rows.
/// Frozen tables contribute nothing.
pub fn count_parameters(config: &ModelConfig, vocab_size: usize, trainable: TableFlags) -> ParamCount {
    let d = config.dims;
    let tags = crate::text::POS_TAGS.len();
    let shapes = crate::text::TokenShape::ALL.len();
    let u = config.hidden;
    let mut embeddings = 0;
    if trainable.word {
        embeddings += vocab_size * d.word;
    }
    if trainable.unk {
        embeddings += tags * d.word;
    }
    if trainable.pos {
        embeddings += tags * d.pos;
    }
    if trainable.shape {
        embeddings += shapes * d.shape;
    }
    ParamCount {
        embeddings,
        encoder: 2 * lstm_cell_param_count(d.total(), u),
        attention: if config.variant.has_attention() { 2 * u + 1 } else { 0 },
        upper: if config.variant.is_hierarchical() {
            2 * lstm_cell_param_count(2 * u, u)
        } else {
            0
        },
        output: 2 * u * config.classes + config.classes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbeddingSetup;

    #[test]
    fn cell_count_closed_form() {
        assert_eq!(lstm_cell_param_count(4, 3), 96);
        let cfg = ModelConfig {
            dims: EmbeddingDims { word: 2, pos: 1, shape: 1 },
            ..ModelConfig::new(ModelVariant::Bilstm, 3)
        };
        assert_eq!(count_parameters(&cfg, 10, TableFlags::default()).encoder, 192);
    }

    #[test]
    fn count_ordering_across_variants() {
        let counts: Vec<usize> = ModelVariant::ALL
            .iter()
            .map(|&v| count_parameters(&ModelConfig::new(v, 100), 5000, TableFlags::default()).total())
            .collect();
        assert!(counts[0] < counts[1]);
        assert_eq!(counts[1], counts[2]);
        assert!(counts[2] < counts[3]);
        assert_eq!(counts[1] - counts[0], 201);
    }

    #[test]
    fn counted_matches_tensor_sizes() {
        let dims = EmbeddingDims { word: 4, pos: 3, shape: 2 };
        let table = EmbeddingSetup {
            min_count: 1,
            ..EmbeddingSetup::with_dims(dims)
        }
        .build(&["a", "b"], 0)
        .unwrap();
        for v in ModelVariant::ALL {
            let cfg = ModelConfig {
                dims,
                ..ModelConfig::new(v, 3)
            };
            let mut p = ModelParams::init(cfg, table.clone(), 1).unwrap();
            let live: usize = p.trainable().iter().map(|t| t.len()).sum();
            assert_eq!(live, p.parameter_count().total(), "{v}");
            let n = p.trainable().len();
            assert_eq!(p.trainable_mut().len(), n);
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in ModelVariant::ALL {
            assert_eq!(v.key().parse::<ModelVariant>().unwrap(), v);
        }
        let err = "cnn".parse::<ModelVariant>().unwrap_err();
        assert!(err.contains("h-bilstm-att"));
    }

    #[test]
    fn forget_bias_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = LstmCellParams::glorot(&mut rng, 4, 3);
        assert_eq!(&c.b.data()[3..6], &[1.0, 1.0, 1.0]);
        assert_eq!(&c.b.data()[..3], &[0.0; 3]);
    }
}
