//! Central finite-difference gradient checking.
//!
//! Independent of every backward pass in the crate: it only evaluates the
//! scalar function at perturbed inputs.

use rand::Rng;

use super::tensor::Tensor;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;
/// Denominator floor so entries with near-zero gradient are compared
/// absolutely rather than relatively.
const REL_FLOOR: f64 = 1e-4;

pub fn random_tensor(shape: &[usize], rng: &mut impl Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("shape matches data")
}

/// Central-difference estimate of `d f / d x`.
pub fn numerical_gradient(x: &Tensor<f64>, f: impl Fn(&Tensor<f64>) -> f64) -> Tensor<f64> {
    let mut grad = Tensor::zeros(x.shape());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + FD_STEP;
        let up = f(&probe);
        probe.data_mut()[i] = orig - FD_STEP;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        grad.data_mut()[i] = (up - down) / (2.0 * FD_STEP);
    }
    grad
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares `analytic` with central differences of `f` at `x`. Returns the
/// largest relative error, or a description of the first entry that exceeds
/// [`FD_TOLERANCE`].
pub fn check_gradient(
    x: &Tensor<f64>,
    analytic: &Tensor<f64>,
    f: impl Fn(&Tensor<f64>) -> f64,
) -> Result<f64, String> {
    if x.shape() != analytic.shape() {
        return Err(format!(
            "gradient shape {:?} vs input {:?}",
            analytic.shape(),
            x.shape()
        ));
    }
    let numeric = numerical_gradient(x, f);
    let mut worst: f64 = 0.0;
    for (i, (&a, &n)) in analytic.data().iter().zip(numeric.data()).enumerate() {
        let err = relative_error(a, n);
        if !(err < FD_TOLERANCE) {
            return Err(format!(
                "entry {i}: analytic {a:.9e} vs numeric {n:.9e} (rel {err:.2e})"
            ));
        }
        worst = worst.max(err);
    }
    Ok(worst)
}
