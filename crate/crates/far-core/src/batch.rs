//! Batch evaluation helpers for grid sweeps.
//!
//! These are the data-parallel inner loops: Mittag-Leffler values over an
//! argument grid and filter values over an `(α, λ)` product grid.  The
//! `*_seq` variants run the identical computation single-threaded and exist
//! so the benchmark suite can compare the two code paths.

use crate::ml::{ml_eval, MLParams, MlError};
use crate::order::FractionalOrder;
use crate::par;
use crate::spectral;

/// Evaluate `E_{θ₁,θ₂}` at every `z` in `zs`.
pub fn ml_grid(params: &MLParams, zs: &[f64]) -> Vec<Result<f64, MlError>> {
    par::map(zs, |&z| ml_eval(params, z))
}

/// Sequential fallback of [`ml_grid`].
pub fn ml_grid_seq(params: &MLParams, zs: &[f64]) -> Vec<Result<f64, MlError>> {
    par::map_seq(zs, |&z| ml_eval(params, z))
}

/// One `(α, λ, g, r)` row of a filter sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSample {
    pub alpha: f64,
    pub lambda: f64,
    pub g: f64,
    pub r: f64,
}

fn filter_sample(theta: FractionalOrder, alpha: f64, lambda: f64) -> Result<FilterSample, MlError> {
    let t = alpha.powf(-1.0 / theta.get());
    Ok(FilterSample {
        alpha,
        lambda,
        g: spectral::filter_g(theta, t, lambda)?,
        r: spectral::bias_r(theta, t, lambda)?,
    })
}

/// Evaluate the filter pair over the product grid `alphas × lambdas`.
pub fn filter_grid(
    theta: FractionalOrder,
    alphas: &[f64],
    lambdas: &[f64],
) -> Vec<Result<FilterSample, MlError>> {
    let cells: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| lambdas.iter().map(move |&l| (a, l)))
        .collect();
    par::map(&cells, |&(a, l)| filter_sample(theta, a, l))
}

/// Sequential fallback of [`filter_grid`].
pub fn filter_grid_seq(
    theta: FractionalOrder,
    alphas: &[f64],
    lambdas: &[f64],
) -> Vec<Result<FilterSample, MlError>> {
    let cells: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| lambdas.iter().map(move |&l| (a, l)))
        .collect();
    par::map_seq(&cells, |&(a, l)| filter_sample(theta, a, l))
}

/// Log-spaced grid from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let (l0, l1) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..points)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (points - 1) as f64).exp())
        .collect();
    // pin the endpoints so callers can rely on the grid staying in [lo, hi]
    g[0] = lo;
    g[points - 1] = hi;
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_and_seq_agree() {
        let params = MLParams::new(1.3, 1.0).unwrap();
        let zs = log_grid(1e-3, 40.0, 64)
            .into_iter()
            .map(|x| -x)
            .collect::<Vec<_>>();
        let a: Vec<f64> = ml_grid(&params, &zs).into_iter().map(|r| r.unwrap()).collect();
        let b: Vec<f64> = ml_grid_seq(&params, &zs)
            .into_iter()
            .map(|r| r.unwrap())
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-2, 1e2, 5);
        assert!((g[0] - 1e-2).abs() < 1e-15);
        assert!((g[4] - 1e2).abs() < 1e-12);
    }
}
