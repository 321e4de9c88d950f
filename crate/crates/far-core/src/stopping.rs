//! Stopping rules: the discrepancy principle, a-priori times for Hölder and
//! logarithmic smoothness, and the `W_a` transcendental inverse used by the
//! logarithmic rate analysis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::order::FractionalOrder;

#[derive(Debug, Error)]
pub enum StoppingError {
    #[error("tau must exceed 1, got {0}")]
    TauTooSmall(f64),
    #[error("smoothness exponent must be positive, got {0}")]
    BadExponent(f64),
    #[error("kappa must lie in (0,2), got {0}")]
    BadKappa(f64),
    #[error("scale constant must be positive, got {0}")]
    BadScale(f64),
    #[error("noise level must be in (0,1) for a-priori times, got {0}")]
    BadDelta(f64),
    #[error("no root with zeta > e: z = {z} is below e")]
    NoRoot { z: f64 },
    #[error("power exponent a must be nonnegative, got {0}")]
    BadPower(f64),
}

/// How a run decides to terminate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoppingRule {
    /// Stop at the first residual `≤ τδ`.  Theory wants `τ > 3`; values in
    /// `(1, 3]` are accepted (construction warns).
    Discrepancy { tau: f64 },
    /// Stop at `T_* = c δ^{−2/(θ(2p+1))}` (Hölder smoothness `p`).
    AprioriHolder { p: f64, c: f64 },
    /// Stop at `T_* = c δ^{−κ/θ}` (logarithmic smoothness).
    AprioriLog { kappa: f64, c: f64 },
    /// Run to a fixed artificial time.
    FixedTime { t: f64 },
}

impl StoppingRule {
    /// Validated discrepancy rule; `Ok(rule, below_theory)` where the flag
    /// marks `τ ≤ 3` (accepted but outside the convergence theory).
    pub fn discrepancy(tau: f64) -> Result<(Self, bool), StoppingError> {
        if !(tau > 1.0) {
            return Err(StoppingError::TauTooSmall(tau));
        }
        Ok((StoppingRule::Discrepancy { tau }, tau <= 3.0))
    }
}

/// Outcome of a discrepancy test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Continue,
    Stop,
    /// δ = 0: only an exactly zero residual stops the iteration.
    StopNoiseFree,
}

/// Stop iff `residual ≤ τδ` (δ = 0 stops only at exact zero residual).
pub fn discrepancy_check(residual_norm: f64, tau: f64, delta: f64) -> Decision {
    assert!(delta >= 0.0, "noise level must be nonnegative");
    if delta == 0.0 {
        return if residual_norm == 0.0 {
            Decision::StopNoiseFree
        } else {
            Decision::Continue
        };
    }
    if residual_norm <= tau * delta {
        Decision::Stop
    } else {
        Decision::Continue
    }
}

/// `T_*(δ) = c δ^{−2/(θ(2p+1))}`.  Returns `(time, rate_guaranteed)`; the
/// flag is false when `p > 1` with `θ ≠ 1` (saturation: the value is still
/// the formula's, but the Hölder rate is not covered by the theory).
pub fn apriori_time_holder(
    theta: FractionalOrder,
    p: f64,
    delta: f64,
    c: f64,
) -> Result<(f64, bool), StoppingError> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(StoppingError::BadExponent(p));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(StoppingError::BadScale(c));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(StoppingError::BadDelta(delta));
    }
    let exponent = -2.0 / (theta.get() * (2.0 * p + 1.0));
    let guaranteed = p <= 1.0 || theta.get() == 1.0;
    Ok((c * delta.powf(exponent), guaranteed))
}

/// `T_*(δ) = c δ^{−κ/θ}` for logarithmic source conditions, `κ ∈ (0,2)`.
pub fn apriori_time_log(
    theta: FractionalOrder,
    kappa: f64,
    delta: f64,
    c: f64,
) -> Result<f64, StoppingError> {
    if !(kappa > 0.0 && kappa < 2.0) {
        return Err(StoppingError::BadKappa(kappa));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(StoppingError::BadScale(c));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(StoppingError::BadDelta(delta));
    }
    Ok(c * delta.powf(-kappa / theta.get()))
}

/// Solve `ζ ln^a(ζ) = z` on the branch `ζ > e` by safeguarded Newton,
/// to `1e−10` relative in the defect.
pub fn w_solve(a: f64, z: f64) -> Result<f64, StoppingError> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(StoppingError::BadPower(a));
    }
    let e = std::f64::consts::E;
    if a == 0.0 {
        // ζ·1 = z
        return if z > e {
            Ok(z)
        } else if z == e {
            Ok(e)
        } else {
            Err(StoppingError::NoRoot { z })
        };
    }
    // for ζ ≥ e, f(ζ) = ζ ln^a ζ is increasing with f(e) = e
    if z < e {
        return Err(StoppingError::NoRoot { z });
    }
    let f = |zeta: f64| zeta * zeta.ln().powf(a);
    // bracket: f(ζ) ≥ ζ on the branch, so root ≤ z; expand down from z
    let mut lo = e;
    let mut hi = z.max(e);
    let mut zeta = (z / (z.ln().max(1.0)).powf(a)).max(e); // crude first guess
    for _ in 0..200 {
        let val = f(zeta);
        let defect = val - z;
        if defect.abs() <= 1e-11 * z {
            return Ok(zeta);
        }
        if defect > 0.0 {
            hi = zeta;
        } else {
            lo = zeta;
        }
        let ln = zeta.ln();
        let deriv = ln.powf(a) + a * ln.powf(a - 1.0);
        let next = zeta - defect / deriv;
        zeta = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(zeta)
}

/// Discrete step count matching the a-priori Hölder time:
/// `⌈T_*(δ)/Δt⌉`.
pub fn predicted_kstar(
    theta: FractionalOrder,
    p: f64,
    delta: f64,
    dt: f64,
    c: f64,
) -> Result<usize, StoppingError> {
    assert!(dt > 0.0, "step size must be positive");
    let (t, _) = apriori_time_holder(theta, p, delta, c)?;
    Ok((t / dt).ceil() as usize)
}
