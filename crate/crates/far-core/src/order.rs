//! Validated fractional order `θ ∈ (0,2)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Diffusion regime associated with a fractional order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `θ < 1`, sub-diffusive flow.
    Sub,
    /// `θ = 1`, the classical Showalter flow.
    Classical,
    /// `θ > 1`, super-diffusive (oscillatory) flow.
    Super,
}

/// Fractional order of the regularization flow, strictly inside `(0,2)`.
///
/// `θ = 2` is rejected: the bias function degenerates to `cos(√λ t)` which
/// does not decay, so the flow is no longer a regularization method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalOrder(f64);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrderError {
    #[error("fractional order must satisfy 0 < theta < 2, got {0}")]
    OutOfRange(f64),
    #[error("fractional order must be finite, got {0}")]
    NonFinite(f64),
}

impl FractionalOrder {
    pub fn new(theta: f64) -> Result<Self, OrderError> {
        if !theta.is_finite() {
            return Err(OrderError::NonFinite(theta));
        }
        if theta <= 0.0 || theta >= 2.0 {
            return Err(OrderError::OutOfRange(theta));
        }
        Ok(Self(theta))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn regime(self) -> Regime {
        if self.0 < 1.0 {
            Regime::Sub
        } else if self.0 == 1.0 {
            Regime::Classical
        } else {
            Regime::Super
        }
    }

    /// Strictly inside `(1,2)`; required by the oscillatory decomposition.
    pub fn is_super(self) -> bool {
        self.0 > 1.0
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = OrderError;
    fn try_from(v: f64) -> Result<Self, OrderError> {
        Self::new(v)
    }
}

impl From<FractionalOrder> for f64 {
    fn from(o: FractionalOrder) -> f64 {
        o.0
    }
}

impl std::fmt::Display for FractionalOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
