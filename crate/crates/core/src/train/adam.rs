use crate::tensor::Tensor;

use super::TrainError;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates, one pair per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let m: Vec<Tensor> = params.into_iter().map(|p| Tensor::zeros(p.shape())).collect();
        AdamState {
            v: m.clone(),
            m,
            t: 0,
            beta1: BETA1,
            beta2: BETA2,
            epsilon: EPSILON,
        }
    }
}

/// One bias-corrected Adam update applied in place.
pub fn adam_step(
    params: &mut [&mut Tensor],
    grads: &[&Tensor],
    state: &mut AdamState,
    lr: f64,
) -> Result<(), TrainError> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(TrainError::Shape(format!(
            "adam: {} parameters, {} gradients, {} moment slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() || p.shape() != state.m[i].shape() {
            return Err(TrainError::Shape(format!(
                "adam: parameter {i} has shape {:?} but gradient {:?}",
                p.shape(),
                g.shape()
            )));
        }
    }
    state.t += 1;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for (i, p) in params.iter_mut().enumerate() {
        let g = grads[i].data();
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        for (j, theta) in p.data_mut().iter_mut().enumerate() {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            *theta -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = Tensor::scalar(1.0);
        let g = Tensor::scalar(0.37);
        let mut st = AdamState::new([&p]);
        adam_step(&mut [&mut p], &[&g], &mut st, 0.001).unwrap();
        let expected = 0.001 * 0.37 / (0.37 + EPSILON);
        assert!((1.0 - p.item() - expected).abs() < 1e-15);
        assert!((1.0 - p.item() - 0.001).abs() < 1e-10);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = Tensor::vector(vec![1.0, -2.0]).unwrap();
        let before = p.clone();
        let g = Tensor::zeros(&[2]);
        let mut st = AdamState::new([&p]);
        adam_step(&mut [&mut p], &[&g], &mut st, 0.001).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn zero_learning_rate_still_advances_moments() {
        let mut p = Tensor::vector(vec![0.5, 0.25]).unwrap();
        let before = p.clone();
        let g = Tensor::vector(vec![1.0, -3.0]).unwrap();
        let mut st = AdamState::new([&p]);
        adam_step(&mut [&mut p], &[&g], &mut st, 0.0).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.t, 1);
        assert!(st.m[0].data().iter().all(|v| *v != 0.0));
        assert!(st.v[0].data().iter().all(|v| *v > 0.0));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut p = Tensor::vector(vec![0.5, 0.25]).unwrap();
        let g = Tensor::zeros(&[3]);
        let mut st = AdamState::new([&p]);
        assert!(adam_step(&mut [&mut p], &[&g], &mut st, 0.1).is_err());
    }
}
