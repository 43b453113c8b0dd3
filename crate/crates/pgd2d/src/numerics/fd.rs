//! Central finite-difference gradient, the oracle every analytic
//! gradient in this crate is checked against.

use super::params::ModelParams;

/// Entry-by-entry central difference `(f(p + h e_i) - f(p - h e_i)) / 2h`.
///
/// `f` must be a pure function of the parameters.
pub fn numerical_gradient(
    f: &dyn Fn(&ModelParams) -> f64,
    params: &ModelParams,
    h: f64,
) -> ModelParams {
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut grad = ModelParams::zeros(params.arch);
    let mut work = params.clone();
    for i in 0..params.len() {
        let orig = work.entry(i);
        *work.entry_mut(i) = orig + h;
        let fp = f(&work);
        *work.entry_mut(i) = orig - h;
        let fm = f(&work);
        *work.entry_mut(i) = orig;
        *grad.entry_mut(i) = (fp - fm) / (2.0 * h);
    }
    grad
}

/// Largest relative entrywise deviation between two gradients, with an
/// absolute floor so near-zero entries do not blow the ratio up.
pub fn max_relative_deviation(a: &ModelParams, b: &ModelParams, floor: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.len() {
        let x = a.entry(i);
        let y = b.entry(i);
        let scale = x.abs().max(y.abs()).max(floor);
        worst = worst.max((x - y).abs() / scale);
    }
    worst
}
