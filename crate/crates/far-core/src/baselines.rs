//! Reference iterative regularizers: Landweber, Nesterov-accelerated
//! Landweber, the Chebyshev semi-iterative ν-method, and CGNE.  All share
//! the stopping interface and record format of the fractional solver and
//! run in the same balanced coordinates.
//!
//! ν-method coefficients (three-term recursion
//! `x_{k+1} = x_k + μ_k (x_k − x_{k−1}) + ω_k A*(y^δ − A x_k)` on the
//! operator scaled to unit norm):
//! `μ₁ = 0`, `ω₁ = (4ν+2)/(4ν+1)`, and for `k ≥ 2`
//! `μ_k = (k−1)(2k−3)(2k+2ν−1) / [(k+2ν−1)(2k+4ν−1)(2k+2ν−3)]`,
//! `ω_k = 4 (2k+2ν−1)(k+ν−1) / [(k+2ν−1)(2k+4ν−1)]`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::far::{IteratesKept, Method, RunRecord, StopReason};
use crate::problems::{l2_relative_error, ProblemInstance};
use crate::stopping::{discrepancy_check, Decision, StoppingRule};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("step size {dt} outside the stable range (0, {limit}) for ‖A‖² = {norm_sq}")]
    StepSizeOutOfRange { dt: f64, limit: f64, norm_sq: f64 },
    #[error("nu must be positive, got {0}")]
    BadNu(f64),
}

/// Configuration shared by the baseline iterations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub method: Method,
    /// Step size for Landweber/Nesterov; ignored by Chebyshev and CGNE.
    pub dt: Option<f64>,
    /// ν-method parameter.
    #[serde(default = "default_nu")]
    pub nu: f64,
    pub max_iter: usize,
}

fn default_nu() -> f64 {
    1.0
}

impl BaselineConfig {
    pub fn new(method: Method, max_iter: usize) -> Self {
        Self {
            method,
            dt: None,
            nu: 1.0,
            max_iter,
        }
    }
}

/// Default Landweber step: 90% of the stability limit `2/‖A‖²`.
pub fn default_landweber_dt(instance: &ProblemInstance) -> f64 {
    let norm_sq = instance.op.operator_norm * instance.op.operator_norm;
    0.9 * 2.0 / norm_sq
}

/// Default Nesterov step: 90% of `1/‖A‖²`.  Momentum halves the stable
/// step-size range relative to plain gradient descent, so the Landweber
/// default would diverge here.
pub fn default_nesterov_dt(instance: &ProblemInstance) -> f64 {
    let norm_sq = instance.op.operator_norm * instance.op.operator_norm;
    0.9 / norm_sq
}

struct Loop<'a> {
    instance: &'a ProblemInstance,
    stop: &'a StoppingRule,
    residual_norms: Vec<f64>,
    res0: f64,
}

enum Verdict {
    Continue,
    Stop(StopReason),
}

impl<'a> Loop<'a> {
    fn start(instance: &'a ProblemInstance, stop: &'a StoppingRule, res0: f64) -> (Self, bool) {
        let mut lp = Loop {
            instance,
            stop,
            residual_norms: vec![res0],
            res0,
        };
        let immediate = if let StoppingRule::Discrepancy { tau } = stop {
            discrepancy_check(res0, *tau, instance.delta) != Decision::Continue
        } else {
            false
        };
        if immediate {
            lp.residual_norms.truncate(1);
        }
        (lp, immediate)
    }

    fn record(&mut self, res_norm: f64, k_next: usize, budget: Option<usize>) -> Verdict {
        self.residual_norms.push(res_norm);
        if !res_norm.is_finite() || res_norm > 1e8 * self.res0.max(1e-300) {
            return Verdict::Stop(StopReason::Diverged);
        }
        match self.stop {
            StoppingRule::Discrepancy { tau } => {
                if discrepancy_check(res_norm, *tau, self.instance.delta) != Decision::Continue {
                    return Verdict::Stop(StopReason::Discrepancy);
                }
            }
            _ => {
                if Some(k_next) == budget {
                    return Verdict::Stop(StopReason::Apriori);
                }
            }
        }
        Verdict::Continue
    }

    fn finish(
        self,
        method: Method,
        dt: f64,
        x_balanced: &DVector<f64>,
        k_star: usize,
        stop_reason: StopReason,
    ) -> RunRecord {
        let x_nodal = self.instance.op.balanced_to_nodal(x_balanced);
        let l2err = l2_relative_error(&x_nodal, self.instance).unwrap_or(f64::NAN);
        RunRecord {
            method,
            theta: None,
            dt,
            iterates_kept: IteratesKept::FinalOnly,
            residual_norms: self.residual_norms,
            k_star,
            x_final: x_nodal.iter().copied().collect(),
            l2err,
            stop_reason,
            delta: self.instance.delta,
            iterates: None,
        }
    }
}

fn time_budget(stop: &StoppingRule, dt: f64, delta: f64) -> Option<usize> {
    // baselines correspond to the classical flow (θ = 1)
    let theta = crate::order::FractionalOrder::new(1.0).unwrap();
    match stop {
        StoppingRule::Discrepancy { .. } => None,
        StoppingRule::FixedTime { t } => Some(((t / dt).ceil() as usize).max(1)),
        StoppingRule::AprioriHolder { p, c } => crate::stopping::apriori_time_holder(theta, *p, delta, *c)
            .ok()
            .map(|(t, _)| ((t / dt).ceil() as usize).max(1)),
        StoppingRule::AprioriLog { kappa, c } => crate::stopping::apriori_time_log(theta, *kappa, delta, *c)
            .ok()
            .map(|t| ((t / dt).ceil() as usize).max(1)),
    }
}

/// Explicit-Euler flow discretization: `x_{k+1} = x_k + Δt A*(y^δ − A x_k)`.
pub fn landweber_run(
    instance: &ProblemInstance,
    config: &BaselineConfig,
    stop: &StoppingRule,
) -> Result<RunRecord, BaselineError> {
    let dt = config.dt.unwrap_or_else(|| default_landweber_dt(instance));
    validate_dt(instance, dt)?;
    let op = &instance.op;
    let y = &instance.y_noisy;
    let budget = time_budget(stop, dt, instance.delta);

    let mut x = DVector::zeros(op.n());
    let res = y - op.apply(&x);
    let (mut lp, immediate) = Loop::start(instance, stop, res.norm());
    if immediate {
        return Ok(lp.finish(Method::Landweber, dt, &x, 0, StopReason::Discrepancy));
    }
    let mut reason = StopReason::MaxIter;
    let mut k_star = 0;
    for k in 0..config.max_iter {
        let res = y - op.apply(&x);
        x.axpy(dt, &op.apply(&res), 1.0);
        let res_next = (y - op.apply(&x)).norm();
        k_star = k + 1;
        if let Verdict::Stop(r) = lp.record(res_next, k_star, budget) {
            reason = r;
            break;
        }
    }
    Ok(lp.finish(Method::Landweber, dt, &x, k_star, reason))
}

/// Landweber with Nesterov momentum `z_k = x_k + (k−1)/(k+2) (x_k − x_{k−1})`.
pub fn nesterov_run(
    instance: &ProblemInstance,
    config: &BaselineConfig,
    stop: &StoppingRule,
) -> Result<RunRecord, BaselineError> {
    let dt = config.dt.unwrap_or_else(|| default_nesterov_dt(instance));
    validate_dt(instance, dt)?;
    let op = &instance.op;
    let y = &instance.y_noisy;
    let budget = time_budget(stop, dt, instance.delta);

    let mut x = DVector::zeros(op.n());
    let mut x_prev = x.clone();
    let res = y - op.apply(&x);
    let (mut lp, immediate) = Loop::start(instance, stop, res.norm());
    if immediate {
        return Ok(lp.finish(Method::Nesterov, dt, &x, 0, StopReason::Discrepancy));
    }
    let mut reason = StopReason::MaxIter;
    let mut k_star = 0;
    for k in 0..config.max_iter {
        let beta = if k == 0 {
            0.0
        } else {
            (k as f64 - 1.0) / (k as f64 + 2.0)
        };
        let mut z = &x - &x_prev;
        z *= beta;
        z += &x;
        let res = y - op.apply(&z);
        let mut x_next = z;
        x_next.axpy(dt, &op.apply(&res), 1.0);
        x_prev = std::mem::replace(&mut x, x_next);
        let res_next = (y - op.apply(&x)).norm();
        k_star = k + 1;
        if let Verdict::Stop(r) = lp.record(res_next, k_star, budget) {
            reason = r;
            break;
        }
    }
    Ok(lp.finish(Method::Nesterov, dt, &x, k_star, reason))
}

/// Chebyshev semi-iterative ν-method (coefficients in the module docs).
/// The recursion is run on the operator scaled to unit norm; recorded
/// residuals are for the unscaled problem.
pub fn chebyshev_run(
    instance: &ProblemInstance,
    config: &BaselineConfig,
    stop: &StoppingRule,
) -> Result<RunRecord, BaselineError> {
    let nu = config.nu;
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(BaselineError::BadNu(nu));
    }
    let op = &instance.op;
    let scale = op.operator_norm; // Â/scale has unit norm
    let y = &instance.y_noisy;
    // a-priori budgets interpret dt = 1 per semi-iteration
    let budget = time_budget(stop, 1.0, instance.delta);

    let mut x = DVector::zeros(op.n());
    let mut x_prev = x.clone();
    let res = y - op.apply(&x);
    let (mut lp, immediate) = Loop::start(instance, stop, res.norm());
    if immediate {
        return Ok(lp.finish(Method::Chebyshev, 1.0, &x, 0, StopReason::Discrepancy));
    }
    let mut reason = StopReason::MaxIter;
    let mut k_star = 0;
    for step in 0..config.max_iter {
        let k = (step + 1) as f64; // 1-based coefficient index
        let (mu, omega) = if step == 0 {
            (0.0, (4.0 * nu + 2.0) / (4.0 * nu + 1.0))
        } else {
            let mu = ((k - 1.0) * (2.0 * k - 3.0) * (2.0 * k + 2.0 * nu - 1.0))
                / ((k + 2.0 * nu - 1.0) * (2.0 * k + 4.0 * nu - 1.0) * (2.0 * k + 2.0 * nu - 3.0));
            let omega = 4.0 * (2.0 * k + 2.0 * nu - 1.0) * (k + nu - 1.0)
                / ((k + 2.0 * nu - 1.0) * (2.0 * k + 4.0 * nu - 1.0));
            (mu, omega)
        };
        // gradient of the unit-norm-scaled problem: (Â/s)*(y/s − (Â/s)x)
        let res = y - op.apply(&x);
        let grad = op.apply(&res) / (scale * scale);
        let mut x_next = &x - &x_prev;
        x_next *= mu;
        x_next += &x;
        x_next.axpy(omega, &grad, 1.0);
        x_prev = std::mem::replace(&mut x, x_next);
        let res_next = (y - op.apply(&x)).norm();
        k_star = step + 1;
        if let Verdict::Stop(r) = lp.record(res_next, k_star, budget) {
            reason = r;
            break;
        }
    }
    Ok(lp.finish(Method::Chebyshev, 1.0, &x, k_star, reason))
}

/// Conjugate gradients on the normal equations `A*A x = A*y^δ`
/// (no re-orthogonalization).  Breakdown of the search-direction curvature
/// stops the run with a flag.
pub fn cgne_run(
    instance: &ProblemInstance,
    stop: &StoppingRule,
    max_iter: usize,
) -> Result<RunRecord, BaselineError> {
    let op = &instance.op;
    let y = &instance.y_noisy;
    let budget = time_budget(stop, 1.0, instance.delta);

    let mut x = DVector::zeros(op.n());
    let res = y - op.apply(&x);
    let (mut lp, immediate) = Loop::start(instance, stop, res.norm());
    if immediate {
        return Ok(lp.finish(Method::Cgne, 1.0, &x, 0, StopReason::Discrepancy));
    }
    let mut r = op.apply(&res); // normal-equation residual A*(y − A x)
    let mut p = r.clone();
    let mut rho = r.norm_squared();
    let mut reason = StopReason::MaxIter;
    let mut k_star = 0;
    for k in 0..max_iter {
        let ap = op.apply(&op.apply(&p));
        let curvature = p.dot(&ap);
        if curvature <= 0.0 || !curvature.is_finite() || rho == 0.0 {
            reason = StopReason::Breakdown;
            break;
        }
        let alpha = rho / curvature;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rho_next = r.norm_squared();
        let beta = rho_next / rho;
        rho = rho_next;
        let mut p_next = p;
        p_next *= beta;
        p_next += &r;
        p = p_next;

        let res_next = (y - op.apply(&x)).norm();
        k_star = k + 1;
        if let Verdict::Stop(rr) = lp.record(res_next, k_star, budget) {
            reason = rr;
            break;
        }
    }
    Ok(lp.finish(Method::Cgne, 1.0, &x, k_star, reason))
}

/// Dispatch on the configured method, using `stop` for all of them.
pub fn baseline_run(
    instance: &ProblemInstance,
    config: &BaselineConfig,
    stop: &StoppingRule,
) -> Result<RunRecord, BaselineError> {
    match config.method {
        Method::Landweber => landweber_run(instance, config, stop),
        Method::Nesterov => nesterov_run(instance, config, stop),
        Method::Chebyshev => chebyshev_run(instance, config, stop),
        Method::Cgne => cgne_run(instance, stop, config.max_iter),
        Method::Far => panic!("use far_run for the fractional method"),
    }
}

fn validate_dt(instance: &ProblemInstance, dt: f64) -> Result<(), BaselineError> {
    let norm_sq = instance.op.operator_norm * instance.op.operator_norm;
    let limit = 2.0 / norm_sq;
    if !(dt > 0.0 && dt < limit) {
        return Err(BaselineError::StepSizeOutOfRange { dt, limit, norm_sq });
    }
    Ok(())
}
