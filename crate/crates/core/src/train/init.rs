use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::Tensor;

/// Half-width of the Glorot uniform range: `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// `[fan_in × fan_out]` matrix with entries i.i.d. uniform on `(−L, L)`.
pub fn glorot_init(fan_in: usize, fan_out: usize, seed: u64) -> Tensor {
    glorot_with(&mut ChaCha8Rng::seed_from_u64(seed), fan_in, fan_out)
}

pub fn glorot_with<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Tensor {
    assert!(fan_in > 0 && fan_out > 0, "fans must be positive");
    let limit = glorot_limit(fan_in, fan_out);
    uniform_with(rng, &[fan_in, fan_out], limit)
}

/// Entries uniform on `(−limit, limit)`; the closed endpoint `−limit` is
/// resampled.
pub(crate) fn uniform_with<R: Rng>(rng: &mut R, shape: &[usize], limit: f64) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| loop {
            let v = rng.gen_range(-limit..limit);
            if v != -limit {
                break v;
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).expect("shape validated by caller")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limit_closed_form() {
        assert!((glorot_limit(230, 1200) - (6.0f64 / 1430.0).sqrt()).abs() < 1e-15);
        assert!((glorot_limit(230, 1200) - 0.06478).abs() < 1e-5);
        assert_eq!(glorot_limit(3, 3), 1.0);
    }

    #[test]
    fn entries_within_limit_and_reproducible() {
        let a = glorot_init(230, 1200, 9);
        let l = glorot_limit(230, 1200);
        assert_eq!(a.shape(), &[230, 1200]);
        assert!(a.data().iter().all(|v| v.abs() < l));
        assert_eq!(a, glorot_init(230, 1200, 9));
        assert_ne!(a, glorot_init(230, 1200, 10));
    }

    #[test]
    fn empirical_variance_matches_uniform_law() {
        let t = glorot_init(1000, 1000, 3);
        let l = glorot_limit(1000, 1000);
        let n = t.len() as f64;
        let mean = t.data().iter().sum::<f64>() / n;
        let var = t.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let expected = l * l / 3.0;
        assert!((var - expected).abs() / expected < 0.05, "var {var} vs {expected}");
    }
}
