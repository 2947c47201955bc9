use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingSetup, EncodedSentence};
use crate::model::{predict_section, Forward, ModelConfig, ModelParams, ModelVariant, ParamCount, MAX_CONTEXT};
use crate::tensor::{Tensor, Var, PROB_CLAMP};
use crate::text::Section;

use super::{adam_step, AdamState, Dropout, TrainError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without dev-loss improvement before stopping; `None` never
    /// stops early.
    pub patience: Option<usize>,
    pub seed: u64,
    /// Context window of `x-bilstm-att`.
    pub context: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 100,
            batch_size: 16,
            dropout: 0.5,
            learning_rate: 0.001,
            max_epochs: 50,
            patience: Some(3),
            seed: 0,
            context: MAX_CONTEXT,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be positive".into()));
        }
        if self.max_epochs == 0 {
            return Err(TrainError::Config("max epochs must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config(format!("invalid learning rate {}", self.learning_rate)));
        }
        Ok(())
    }

    pub fn model_config(&self, variant: ModelVariant, setup: &EmbeddingSetup) -> ModelConfig {
        ModelConfig {
            context: self.context,
            dropout: self.dropout,
            dims: setup.dims,
            ..ModelConfig::new(variant, self.hidden)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean training loss over the epoch's batches, dropout on.
    pub train_loss: f64,
    pub dev_loss: f64,
    pub dev_accuracy: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub variant: ModelVariant,
    pub config: TrainConfig,
    pub parameters: ParamCount,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_dev_loss: f64,
    pub stopped_early: bool,
    pub total_seconds: f64,
}

/// A trained model (the best-epoch snapshot) and its report.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub params: ModelParams,
    pub report: TrainingReport,
}

/// Mean cross-entropy and accuracy over labeled sentences, dropout off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossAccuracy {
    pub loss: f64,
    pub accuracy: f64,
    pub sentences: usize,
}

pub(crate) fn encode_corpus(params: &ModelParams, sections: &[Section]) -> Vec<Vec<EncodedSentence>> {
    sections
        .iter()
        .map(|s| s.sentences.iter().map(|t| params.embeddings.encode(t)).collect())
        .collect()
}

fn labeled(sections: &[Vec<EncodedSentence>]) -> usize {
    sections.iter().flatten().filter(|s| s.label.is_some()).count()
}

pub fn evaluate_loss(params: &ModelParams, sections: &[Section]) -> Result<LossAccuracy, TrainError> {
    evaluate_encoded(params, &encode_corpus(params, sections))
}

pub(crate) fn evaluate_encoded(params: &ModelParams, sections: &[Vec<EncodedSentence>]) -> Result<LossAccuracy, TrainError> {
    let (mut loss, mut correct, mut n) = (0.0, 0usize, 0usize);
    for section in sections.iter().filter(|s| !s.is_empty()) {
        let preds = predict_section(params, section)?;
        for (p, s) in preds.iter().zip(section) {
            if let Some(gold) = s.label {
                loss -= p.probs[gold].max(PROB_CLAMP).ln();
                correct += usize::from(p.label() == gold);
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(TrainError::EmptyCorpus("evaluation"));
    }
    Ok(LossAccuracy {
        loss: loss / n as f64,
        accuracy: correct as f64 / n as f64,
        sentences: n,
    })
}

/// Builds embeddings from the training corpus, initializes the model and
/// trains it.
pub fn fit(
    variant: ModelVariant,
    train: &[Section],
    dev: &[Section],
    config: &TrainConfig,
    setup: &EmbeddingSetup,
) -> Result<Fitted, TrainError> {
    config.validate()?;
    let words: Vec<&str> = train
        .iter()
        .flat_map(|s| &s.sentences)
        .flat_map(|s| &s.tokens)
        .map(|t| t.surface.as_str())
        .collect();
    let table = setup.build(&words, config.seed)?;
    let params = ModelParams::init(config.model_config(variant, setup), table, config.seed)?;
    fit_from(params, train, dev, config)
}

/// Trains already-initialized parameters. The model's own dropout rate is
/// replaced by `config.dropout`.
pub fn fit_from(
    mut params: ModelParams,
    train: &[Section],
    dev: &[Section],
    config: &TrainConfig,
) -> Result<Fitted, TrainError> {
    config.validate()?;
    params.config.dropout = config.dropout;
    params.config.context = config.context;
    params.config.validate()?;
    let variant = params.config.variant;
    let train_enc = encode_corpus(&params, train);
    let dev_enc = encode_corpus(&params, dev);
    if labeled(&train_enc) == 0 {
        return Err(TrainError::EmptyCorpus("training"));
    }
    if labeled(&dev_enc) == 0 {
        return Err(TrainError::EmptyCorpus("development"));
    }

    // Flat variants train on sentences, the hierarchical one on sections.
    let mut units: Vec<(usize, usize)> = if variant.is_hierarchical() {
        (0..train_enc.len())
            .filter(|&s| train_enc[s].iter().any(|t| t.label.is_some()))
            .map(|s| (s, usize::MAX))
            .collect()
    } else {
        train_enc
            .iter()
            .enumerate()
            .flat_map(|(s, sec)| (0..sec.len()).filter(move |&i| sec[i].label.is_some()).map(move |i| (s, i)))
            .collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dropout = Dropout::new(config.dropout, config.seed.wrapping_add(0x9e37_79b9))?;
    let mut adam = AdamState::new(params.trainable());
    let started = Instant::now();
    let mut epochs = Vec::new();
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut since_best = 0usize;
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        let t0 = Instant::now();
        units.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (bi, batch) in units.chunks(config.batch_size).enumerate() {
            let (loss, grads) = batch_gradients(&params, &train_enc, batch, &mut dropout)?;
            if !loss.is_finite() {
                return Err(TrainError::Divergence { epoch, batch: bi, loss });
            }
            let grads: Vec<&Tensor> = grads.iter().collect();
            adam_step(&mut params.trainable_mut(), &grads, &mut adam, config.learning_rate)?;
            loss_sum += loss;
            batches += 1;
        }
        let dev_eval = evaluate_encoded(&params, &dev_enc)?;
        if !dev_eval.loss.is_finite() {
            return Err(TrainError::Divergence {
                epoch,
                batch: batches,
                loss: dev_eval.loss,
            });
        }
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / batches as f64,
            dev_loss: dev_eval.loss,
            dev_accuracy: dev_eval.accuracy,
            seconds: t0.elapsed().as_secs_f64(),
        };
        log::info!(
            "{variant} epoch {epoch}: train {:.4} dev {:.4} acc {:.3} ({:.1}s)",
            record.train_loss,
            record.dev_loss,
            record.dev_accuracy,
            record.seconds
        );
        epochs.push(record);
        if best.as_ref().is_none_or(|(l, _, _)| dev_eval.loss < *l) {
            best = Some((dev_eval.loss, epoch, params.clone()));
            since_best = 0;
        } else {
            since_best += 1;
        }
        if config.patience.is_some_and(|p| since_best >= p) {
            stopped_early = epoch < config.max_epochs;
            break;
        }
    }

    let (best_dev_loss, best_epoch, best_params) = best.expect("at least one epoch ran");
    Ok(Fitted {
        report: TrainingReport {
            variant,
            config: config.clone(),
            parameters: best_params.parameter_count(),
            epochs,
            best_epoch,
            best_dev_loss,
            stopped_early,
            total_seconds: started.elapsed().as_secs_f64(),
        },
        params: best_params,
    })
}

/// Mean loss over the batch's labeled sentences and its gradient for every
/// trainable tensor.
fn batch_gradients(
    params: &ModelParams,
    corpus: &[Vec<EncodedSentence>],
    batch: &[(usize, usize)],
    dropout: &mut Dropout,
) -> Result<(f64, Vec<Tensor>), TrainError> {
    let variant = params.config.variant;
    let mut fw = Forward::training(params, Some(dropout));
    let mut losses: Vec<Var> = Vec::new();
    for &(s, i) in batch {
        let section = &corpus[s];
        if variant.is_hierarchical() {
            let outs = fw.hierarchical(section, &vec![true; section.len()])?;
            for (out, sent) in outs.iter().zip(section) {
                if let Some(gold) = sent.label {
                    losses.push(fw.g.cross_entropy(out.probs, gold)?);
                }
            }
        } else {
            let out = if variant == ModelVariant::XBilstmAtt {
                fw.with_context(section, i)?
            } else {
                fw.flat(&section[i])?
            };
            let gold = section[i].label.expect("units are labeled");
            losses.push(fw.g.cross_entropy(out.probs, gold)?);
        }
    }
    let total = fw.g.sum_scalars(&losses)?;
    let mean = fw.g.scale(total, 1.0 / losses.len() as f64)?;
    let value = fw.g.value(mean).item();
    let mut grads = fw.g.backward(mean)?;
    let out = fw
        .bound
        .trainable
        .iter()
        .map(|&v| grads.take(v).expect("trainable leaves have gradients"))
        .collect();
    Ok((value, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbeddingDims;
    use crate::text::{ClassLabel, Sentence};

    fn corpus() -> Vec<Section> {
        let mk = |id: &str, sents: &[(&str, ClassLabel)]| Section {
            doc_id: "d".into(),
            section_id: id.into(),
            sentences: sents.iter().map(|(t, l)| Sentence::from_text(t, Some(*l))).collect(),
        };
        vec![
            mk(
                "1",
                &[
                    ("The Supplier shall deliver the goods.", ClassLabel::Obligation),
                    ("This Agreement is governed by law.", ClassLabel::None),
                ],
            ),
            mk("2", &[("The Client shall not disclose data.", ClassLabel::Prohibition)]),
        ]
    }

    fn tiny_setup() -> EmbeddingSetup {
        EmbeddingSetup {
            min_count: 1,
            ..EmbeddingSetup::with_dims(EmbeddingDims { word: 4, pos: 3, shape: 2 })
        }
    }

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            hidden: 3,
            batch_size: 2,
            dropout: 0.0,
            learning_rate: 0.01,
            max_epochs: 4,
            patience: None,
            seed: 5,
            context: 150,
        }
    }

    #[test]
    fn patience_zero_runs_one_epoch() {
        let c = corpus();
        let cfg = TrainConfig {
            patience: Some(0),
            ..tiny_config()
        };
        let fitted = fit(ModelVariant::Bilstm, &c, &c, &cfg, &tiny_setup()).unwrap();
        assert_eq!(fitted.report.epochs.len(), 1);
        assert_eq!(fitted.report.best_epoch, 1);
    }

    #[test]
    fn seeded_runs_repeat_and_best_snapshot_reproduces() {
        let c = corpus();
        for v in ModelVariant::ALL {
            let cfg = TrainConfig {
                dropout: 0.5,
                ..tiny_config()
            };
            let a = fit(v, &c, &c, &cfg, &tiny_setup()).unwrap();
            let b = fit(v, &c, &c, &cfg, &tiny_setup()).unwrap();
            let la: Vec<f64> = a.report.epochs.iter().map(|e| e.train_loss).collect();
            let lb: Vec<f64> = b.report.epochs.iter().map(|e| e.train_loss).collect();
            assert_eq!(la, lb, "{v}");
            let min = a.report.epochs.iter().map(|e| e.dev_loss).fold(f64::INFINITY, f64::min);
            assert_eq!(a.report.best_dev_loss, min);
            let again = evaluate_loss(&a.params, &c).unwrap().loss;
            assert!((again - a.report.best_dev_loss).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let c = corpus();
        let err = fit(ModelVariant::Bilstm, &[], &c, &tiny_config(), &tiny_setup()).unwrap_err();
        assert!(matches!(err, TrainError::EmptyCorpus("training")));
    }

    #[test]
    fn training_loss_decreases() {
        let c = corpus();
        let cfg = TrainConfig {
            max_epochs: 30,
            ..tiny_config()
        };
        let f = fit(ModelVariant::HBilstmAtt, &c, &c, &cfg, &tiny_setup()).unwrap();
        let e = &f.report.epochs;
        assert!(e.last().unwrap().train_loss < e[0].train_loss);
    }
}
