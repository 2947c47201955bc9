use super::Tensor;

/// Default step for central differences in `f64`.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Central-difference gradient of a scalar function:
/// `(f(x + h·eᵢ) − f(x − h·eᵢ)) / 2h` for every coordinate `i`.
pub fn finite_diff_grad<F>(mut f: F, x: &Tensor, h: f64) -> Tensor
where
    F: FnMut(&Tensor) -> f64,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut probe = x.clone();
    let mut grad = Tensor::zeros(x.shape());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let up = f(&probe);
        probe.data_mut()[i] = orig - h;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        grad.data_mut()[i] = (up - down) / (2.0 * h);
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let g = finite_diff_grad(|t| t.item() * t.item(), &Tensor::scalar(3.0), DEFAULT_STEP);
        assert!((g.item() - 6.0).abs() < 1e-8);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let x = Tensor::vector(vec![1.0, 2.0, 3.0]).unwrap();
        let g = finite_diff_grad(|_| 4.2, &x, DEFAULT_STEP);
        assert!(g.data().iter().all(|&v| v == 0.0));
    }
}
