//! Fractional asymptotical regularization (FAR) for linear ill-posed
//! operator equations `Ax = y` with noisy data.
//!
//! Replacing the time derivative in Showalter's asymptotical regularization
//! flow by a Caputo derivative of order `θ ∈ (0,2)` gives a family of
//! regularization methods whose spectral filters are Mittag-Leffler
//! functions.  For `θ ∈ (1,2)` the flow reaches the optimal stopping time in
//! roughly the `θ`-th root of the iterations a classical Landweber/Showalter
//! scheme needs, which is the acceleration this crate is built to measure.
//!
//! The crate is organised around that experiment:
//!
//! * [`ml`] — accurate evaluation of one- and two-parameter Mittag-Leffler
//!   functions on the negative real axis, the workhorse of every filter;
//! * [`spectral`] — the filter pair `g^θ` / `r^θ`, generator-function
//!   diagnostics, qualification checks and the closed-form spectral solver;
//! * [`problems`] — the Green's-function integral operator discretised by
//!   linear finite elements, exact solutions, noise injection and error
//!   metrics;
//! * [`far`] — the one-step fractional Adams-Moulton predictor-corrector
//!   iteration with full-memory weights;
//! * [`baselines`] — Landweber, Nesterov-accelerated Landweber, the
//!   Chebyshev ν-method and CGNE for side-by-side comparison;
//! * [`stopping`] — discrepancy-principle and a-priori stopping rules;
//! * [`bench`] — benchmark grids, rate-exponent experiments and plot-data
//!   emission.
//!
//! With the default `parallel` feature enabled the grid sweeps and batch
//! evaluations run on a rayon pool; disabling the feature falls back to the
//! identical sequential code path.

pub mod baselines;
pub mod batch;
pub mod bench;
pub mod far;
pub mod ml;
pub mod order;
pub mod par;
pub mod problems;
pub(crate) mod quad;
pub mod spectral;
pub mod stopping;

pub use order::{FractionalOrder, Regime};
