use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingSetup;
use crate::model::{ModelParams, ModelVariant};
use crate::text::Section;

use super::fit::{fit_from, Fitted, TrainConfig};
use super::TrainError;

/// Candidate values per hyper-parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub hidden: Vec<usize>,
    pub batch_size: Vec<usize>,
    pub dropout: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            hidden: vec![100, 200, 300],
            batch_size: vec![8, 16, 32],
            dropout: vec![0.4, 0.5, 0.6],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub hidden: usize,
    pub batch_size: usize,
    pub dropout: f64,
}

impl GridSpec {
    /// Cells in row-major order (hidden, then batch, then dropout).
    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::new();
        for &hidden in &self.hidden {
            for &batch_size in &self.batch_size {
                for &dropout in &self.dropout {
                    out.push(GridCell {
                        hidden,
                        batch_size,
                        dropout,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: GridCell,
    pub seed: u64,
    pub best_dev_loss: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub best: TrainConfig,
    pub best_index: usize,
    pub cells: Vec<CellResult>,
    pub fitted: Fitted,
}

/// Lower dev loss wins; ties go to smaller hidden, larger batch, then lower
/// dropout.
fn rank(a: &CellResult, b: &CellResult) -> Ordering {
    a.best_dev_loss
        .total_cmp(&b.best_dev_loss)
        .then(a.cell.hidden.cmp(&b.cell.hidden))
        .then(b.cell.batch_size.cmp(&a.cell.batch_size))
        .then(a.cell.dropout.total_cmp(&b.cell.dropout))
}

/// Trains one model per grid cell (cell `i` seeded with `base.seed + i`) and
/// keeps the one with the lowest best dev loss. Cells run on the rayon pool.
pub fn grid_search(
    variant: ModelVariant,
    train: &[Section],
    dev: &[Section],
    base: &TrainConfig,
    grid: &GridSpec,
    setup: &EmbeddingSetup,
) -> Result<GridResult, TrainError> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(TrainError::Config("empty grid".into()));
    }
    base.validate()?;
    let words: Vec<&str> = train
        .iter()
        .flat_map(|s| &s.sentences)
        .flat_map(|s| &s.tokens)
        .map(|t| t.surface.as_str())
        .collect();
    let table = setup.build(&words, base.seed)?;

    let runs: Vec<Result<(CellResult, Fitted), TrainError>> = cells
        .par_iter()
        .enumerate()
        .map(|(i, cell)| {
            let cfg = TrainConfig {
                hidden: cell.hidden,
                batch_size: cell.batch_size,
                dropout: cell.dropout,
                seed: base.seed.wrapping_add(i as u64),
                ..base.clone()
            };
            let params = ModelParams::init(cfg.model_config(variant, setup), table.clone(), cfg.seed)?;
            let fitted = fit_from(params, train, dev, &cfg)?;
            let result = CellResult {
                cell: *cell,
                seed: cfg.seed,
                best_dev_loss: fitted.report.best_dev_loss,
                best_epoch: fitted.report.best_epoch,
            };
            Ok((result, fitted))
        })
        .collect();

    let mut results = Vec::with_capacity(runs.len());
    let mut models = Vec::with_capacity(runs.len());
    for run in runs {
        let (r, f) = run?;
        results.push(r);
        models.push(Some(f));
    }
    let best_index = (0..results.len())
        .min_by(|&a, &b| rank(&results[a], &results[b]))
        .expect("grid is not empty");
    let fitted = models[best_index].take().expect("present");
    Ok(GridResult {
        best: fitted.report.config.clone(),
        best_index,
        cells: results,
        fitted,
    })
}
