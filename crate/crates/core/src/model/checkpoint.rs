use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingTable, TableFlags};
use crate::tensor::Tensor;
use crate::text::{ClassLabel, TokenShape, POS_TAGS};

use super::{
    AttentionParams, BiLstmParams, LstmCellParams, ModelConfig, ModelError, ModelParams, ModelVariant, OutputParams,
};

pub const CHECKPOINT_VERSION: &str = "1";

#[derive(Debug, Serialize, Deserialize)]
struct Array {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    version: String,
    variant: ModelVariant,
    config: ModelConfig,
    classes: Vec<String>,
    pos_tags: Vec<String>,
    shapes: Vec<String>,
    vocab: Vec<String>,
    trainable: TableFlags,
    params: Vec<Array>,
}

impl ModelParams {
    pub fn to_json(&self) -> String {
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION.into(),
            variant: self.config.variant,
            config: self.config,
            classes: ClassLabel::ALL.iter().map(|c| c.key().to_string()).collect(),
            pos_tags: POS_TAGS.iter().map(|t| t.to_string()).collect(),
            shapes: TokenShape::ALL.iter().map(|s| s.key().to_string()).collect(),
            vocab: self.embeddings.vocab().to_vec(),
            trainable: self.embeddings.trainable,
            params: self
                .named_tensors()
                .into_iter()
                .map(|(name, t, _)| Array {
                    name,
                    shape: t.shape().to_vec(),
                    data: t.data().to_vec(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: CheckpointFile = serde_json::from_str(text).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        if file.version != CHECKPOINT_VERSION {
            return Err(ModelError::Checkpoint(format!("unsupported version {:?}", file.version)));
        }
        if file.variant != file.config.variant {
            return Err(ModelError::Checkpoint("variant disagrees with configuration".into()));
        }
        let classes: Vec<&str> = ClassLabel::ALL.iter().map(|c| c.key()).collect();
        if file.classes != classes {
            return Err(ModelError::Checkpoint(format!(
                "class set {:?} differs from {:?}",
                file.classes, classes
            )));
        }
        if file.pos_tags != POS_TAGS || file.shapes != TokenShape::ALL.iter().map(|s| s.key()).collect::<Vec<_>>() {
            return Err(ModelError::Checkpoint("POS or shape symbol set differs".into()));
        }
        file.config.validate()?;
        let mut arrays = std::collections::HashMap::new();
        for a in file.params {
            let t = Tensor::new(a.shape, a.data).map_err(|e| ModelError::Checkpoint(format!("{}: {e}", a.name)))?;
            arrays.insert(a.name, t);
        }
        let mut take = |name: &str| {
            arrays
                .remove(name)
                .ok_or_else(|| ModelError::Checkpoint(format!("missing array {name}")))
        };
        let mut cell = |prefix: &str| -> Result<LstmCellParams, ModelError> {
            let c = LstmCellParams {
                w: take(&format!("{prefix}.W"))?,
                u: take(&format!("{prefix}.U"))?,
                b: take(&format!("{prefix}.b"))?,
            };
            c.validate()?;
            Ok(c)
        };
        let encoder = BiLstmParams {
            fwd: cell("encoder.fwd")?,
            bwd: cell("encoder.bwd")?,
        };
        let upper = if file.variant.is_hierarchical() {
            Some(BiLstmParams {
                fwd: cell("upper.fwd")?,
                bwd: cell("upper.bwd")?,
            })
        } else {
            None
        };
        let attention = if file.variant.has_attention() {
            Some(AttentionParams {
                v: take("attention.v")?,
                b: take("attention.b")?,
            })
        } else {
            None
        };
        let output = OutputParams {
            w: take("output.W")?,
            b: take("output.b")?,
        };
        let embeddings = EmbeddingTable::from_parts(
            file.vocab,
            take("embed.word")?,
            take("embed.unk")?,
            take("embed.pos")?,
            take("embed.shape")?,
            file.trainable,
        )?;
        let params = ModelParams {
            config: file.config,
            embeddings,
            encoder,
            attention,
            upper,
            output,
        };
        params.check_shapes()?;
        Ok(params)
    }

    fn check_shapes(&self) -> Result<(), ModelError> {
        let c = &self.config;
        let u = c.hidden;
        let bad = |what: &str| Err(ModelError::Checkpoint(format!("{what} has the wrong shape")));
        if self.embeddings.dims != c.dims {
            return bad("embedding table");
        }
        if self.encoder.fwd.input_dim() != c.dims.total() || self.encoder.fwd.hidden() != u {
            return bad("encoder.fwd");
        }
        if self.encoder.bwd.input_dim() != c.dims.total() || self.encoder.bwd.hidden() != u {
            return bad("encoder.bwd");
        }
        if let Some(a) = &self.attention {
            if a.v.shape() != [2 * u, 1] || a.b.len() != 1 {
                return bad("attention");
            }
        }
        if let Some(up) = &self.upper {
            for cell in [&up.fwd, &up.bwd] {
                if cell.input_dim() != 2 * u || cell.hidden() != u {
                    return bad("upper encoder");
                }
            }
        }
        if self.output.w.shape() != [2 * u, c.classes] || self.output.b.shape() != [1, c.classes] {
            return bad("output layer");
        }
        Ok(())
    }
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<(), ModelError> {
    crate::fsio::write_atomic(path, params.to_json().as_bytes()).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams, ModelError> {
    let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ModelParams::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{EmbeddingDims, EmbeddingSetup};

    #[test]
    fn round_trip_every_variant() {
        let dims = EmbeddingDims { word: 4, pos: 3, shape: 2 };
        let table = EmbeddingSetup {
            min_count: 1,
            ..EmbeddingSetup::with_dims(dims)
        }
        .build(&["shall", "not"], 3)
        .unwrap();
        for v in ModelVariant::ALL {
            let cfg = ModelConfig {
                dims,
                ..ModelConfig::new(v, 2)
            };
            let p = ModelParams::init(cfg, table.clone(), 9).unwrap();
            let back = ModelParams::from_json(&p.to_json()).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn rejects_wrong_version_and_classes() {
        let dims = EmbeddingDims { word: 2, pos: 2, shape: 2 };
        let table = EmbeddingSetup::with_dims(dims).build(&[], 0).unwrap();
        let p = ModelParams::init(
            ModelConfig {
                dims,
                ..ModelConfig::new(ModelVariant::Bilstm, 2)
            },
            table,
            0,
        )
        .unwrap();
        let text = p.to_json().replacen("\"version\":\"1\"", "\"version\":\"2\"", 1);
        assert!(ModelParams::from_json(&text).is_err());
        let text = p.to_json().replacen("\"None\"", "\"Other\"", 1);
        assert!(matches!(ModelParams::from_json(&text), Err(ModelError::Checkpoint(_))));
    }
}
