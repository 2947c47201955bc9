use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::{Graph, Tensor, TensorError, Var};

use super::TrainError;

/// Whether one mask is shared by every row (sequence position) of the input
/// or a fresh mask is drawn per row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    PerCall,
    PerTimestep,
}

/// Seeded source of inverted-dropout masks. Holding one means training mode.
#[derive(Debug, Clone)]
pub struct Dropout {
    rate: f64,
    rng: ChaCha8Rng,
}

impl Dropout {
    pub fn new(rate: f64, seed: u64) -> Result<Self, TrainError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(TrainError::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        Ok(Dropout {
            rate,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Keep-mask scaled by `1/(1−rate)`, shaped for an `[rows × cols]` input.
    pub fn mask(&mut self, rows: usize, cols: usize, mode: DropoutMode) -> Tensor {
        let mask_rows = match mode {
            DropoutMode::PerCall => 1,
            DropoutMode::PerTimestep => rows,
        };
        let keep = 1.0 - self.rate;
        let data = (0..mask_rows * cols)
            .map(|_| if self.rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        Tensor::from_parts(vec![mask_rows, cols], data)
    }

    /// Records `x ⊙ mask` on the graph. Rate 0 is the identity.
    pub fn apply(&mut self, g: &mut Graph<'_>, x: Var, mode: DropoutMode) -> Result<Var, TensorError> {
        if self.rate == 0.0 {
            return Ok(x);
        }
        let v = g.value(x);
        let (rows, cols) = (v.rows(), v.cols());
        let mut mask = self.mask(rows, cols, mode);
        if v.ndim() == 1 {
            mask = mask.reshaped(vec![cols])?;
        }
        let m = g.constant(mask);
        g.mul(x, m)
    }
}

/// Inverted dropout on a plain tensor; `stream == None` is evaluation mode.
pub fn dropout_apply(x: &Tensor, mode: DropoutMode, stream: Option<&mut Dropout>) -> Tensor {
    let Some(d) = stream else { return x.clone() };
    if d.rate == 0.0 {
        return x.clone();
    }
    let mask = d.mask(x.rows(), x.cols(), mode);
    let cols = x.cols();
    let per_row = mask.rows() > 1;
    let data = x
        .data()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mi = if per_row { i } else { i % cols };
            v * mask.data()[mi]
        })
        .collect();
    Tensor::from_parts(x.shape().to_vec(), data)
}
