//! The test problem: Green's-function integral operator on `L²[0,1]`
//! discretised with linear finite elements, plus exact solutions, noise
//! injection and error metrics.
//!
//! The kernel `K(s,t) = s(1-t)` for `s ≤ t`, `t(1-s)` otherwise inverts the
//! negative second derivative with Dirichlet conditions, so the operator's
//! eigenvalues are `(jπ)^{-2}` with sine eigenfunctions — the oracle every
//! spectral test leans on.
//!
//! Internally all solver-facing data lives in "balanced" coordinates
//! `x̂ = Lᵀ x`, `ŷ = L⁻¹ y_dual` with `M = LLᵀ` the mass matrix, so that the
//! Euclidean inner product of coordinate vectors is the discrete `L²` inner
//! product and the operator matrix `Â = L⁻¹ A L⁻ᵀ` is symmetric with the
//! operator's spectrum.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("grid size must be at least 3, got {0}")]
    GridTooSmall(usize),
    #[error("mass matrix is not positive definite")]
    MassNotSpd,
    #[error("eigendecomposition failed")]
    EigenFailure,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("relative error is undefined for a zero exact solution")]
    ZeroExactSolution,
    #[error("noise magnitude must be nonnegative and finite, got {0}")]
    BadNoiseMagnitude(f64),
}

/// Which of the two right-hand sides to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleId {
    /// `y(s) = s(1-s)`, exact solution `x† ≡ 2` (rough: `p < 1/8`).
    Ex1,
    /// `y(s) = s⁴(1-s)³`, exact solution `x† = -6t²(1-t)(2-8t+7t²)`
    /// (smoother: `p < 5/8`).
    Ex2,
}

impl ExampleId {
    pub fn rhs(self, s: f64) -> f64 {
        match self {
            ExampleId::Ex1 => s * (1.0 - s),
            ExampleId::Ex2 => s.powi(4) * (1.0 - s).powi(3),
        }
    }

    pub fn exact_solution(self, t: f64) -> f64 {
        match self {
            ExampleId::Ex1 => 2.0,
            ExampleId::Ex2 => {
                -6.0 * t * t * (1.0 - t) * (2.0 - 8.0 * t + 7.0 * t * t)
            }
        }
    }
}

impl std::str::FromStr for ExampleId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ex1" => Ok(ExampleId::Ex1),
            "ex2" => Ok(ExampleId::Ex2),
            other => Err(format!("unknown example '{other}', expected ex1 or ex2")),
        }
    }
}

impl std::fmt::Display for ExampleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExampleId::Ex1 => write!(f, "ex1"),
            ExampleId::Ex2 => write!(f, "ex2"),
        }
    }
}

/// Discretised self-adjoint compact operator with cached eigendecomposition.
#[derive(Debug, Clone)]
pub struct EigenOperator {
    /// Galerkin matrix `[A_n]_{ij} = ∫∫ K(s,t) φ_i(s) φ_j(t) ds dt`.
    pub matrix: DMatrix<f64>,
    /// FEM mass matrix (`L²` inner products of the hat functions).
    pub mass_matrix: DMatrix<f64>,
    /// Eigenvalues of the balanced operator, sorted nonincreasing; these
    /// approximate the continuous spectrum `(jπ)^{-2}`.
    pub eigenvalues: Vec<f64>,
    /// Eigenvector columns in balanced coordinates (Euclidean-orthonormal,
    /// i.e. orthonormal in the discrete `L²` inner product).
    pub eigenvectors: DMatrix<f64>,
    /// Largest eigenvalue.
    pub operator_norm: f64,
    chol_l: DMatrix<f64>,
    balanced: DMatrix<f64>,
}

impl EigenOperator {
    /// Build from assembled Galerkin and mass matrices.
    pub fn from_matrices(
        matrix: DMatrix<f64>,
        mass_matrix: DMatrix<f64>,
    ) -> Result<Self, ProblemError> {
        let n = matrix.nrows();
        let chol = nalgebra::Cholesky::new(mass_matrix.clone()).ok_or(ProblemError::MassNotSpd)?;
        let l = chol.l();
        // balanced = L⁻¹ A L⁻ᵀ
        let y = l
            .solve_lower_triangular(&matrix)
            .ok_or(ProblemError::EigenFailure)?;
        let yt = y.transpose();
        let b = l
            .solve_lower_triangular(&yt)
            .ok_or(ProblemError::EigenFailure)?;
        let mut balanced = b.transpose();
        // kill roundoff asymmetry before the symmetric eigensolver
        let bt = balanced.transpose();
        balanced = (&balanced + &bt) * 0.5;

        let eig = nalgebra::SymmetricEigen::new(balanced.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            eigenvectors.set_column(col, &eig.eigenvectors.column(i));
        }
        let operator_norm = eigenvalues[0];
        Ok(Self {
            matrix,
            mass_matrix,
            eigenvalues,
            eigenvectors,
            operator_norm,
            chol_l: l,
            balanced,
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Apply the balanced operator to a balanced-coordinate vector.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.balanced * x
    }

    pub fn balanced_matrix(&self) -> &DMatrix<f64> {
        &self.balanced
    }

    /// Map a dual (load) vector `y_dual` into balanced coordinates `L⁻¹ y`.
    pub fn dual_to_balanced(&self, y: &DVector<f64>) -> DVector<f64> {
        self.chol_l
            .solve_lower_triangular(y)
            .expect("Cholesky factor is nonsingular")
    }

    /// Map a nodal coefficient vector into balanced coordinates `Lᵀ x`.
    pub fn nodal_to_balanced(&self, x: &DVector<f64>) -> DVector<f64> {
        self.chol_l.transpose() * x
    }

    /// Map a balanced solution vector back to nodal coefficients `L⁻ᵀ x̂`.
    pub fn balanced_to_nodal(&self, x: &DVector<f64>) -> DVector<f64> {
        self.chol_l
            .transpose()
            .solve_upper_triangular(x)
            .expect("Cholesky factor is nonsingular")
    }

    /// `‖x‖_M`, the discrete `L²` norm of a nodal coefficient vector.
    pub fn mass_norm(&self, x: &DVector<f64>) -> f64 {
        self.nodal_to_balanced(x).norm()
    }

    /// Worst relative deviation of `V diag(λ) Vᵀ` from the balanced matrix.
    pub fn reconstruction_error(&self) -> f64 {
        let lam = DMatrix::from_diagonal(&DVector::from_vec(self.eigenvalues.clone()));
        let rec = &self.eigenvectors * lam * self.eigenvectors.transpose();
        let diff = (&rec - &self.balanced).norm();
        diff / self.balanced.norm()
    }
}

/// One fully assembled inverse-problem instance.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub op: EigenOperator,
    pub example: ExampleId,
    /// Nodal interpolant of the exact solution.
    pub x_dagger: DVector<f64>,
    /// Exact data in balanced coordinates (Euclidean norm = discrete `L²`).
    pub y_exact: DVector<f64>,
    /// Noisy data in balanced coordinates.
    pub y_noisy: DVector<f64>,
    /// Realized noise level `‖y_noisy - y_exact‖₂`.
    pub delta: f64,
    /// Injected multiplicative magnitude `δ'`.
    pub noise_magnitude: f64,
    pub seed: u64,
}

const GAUSS5: [(f64, f64); 5] = [
    (-0.906179845938664, 0.236926885056189),
    (-0.538469310105683, 0.478628670499366),
    (0.0, 0.568888888888889),
    (0.538469310105683, 0.478628670499366),
    (0.906179845938664, 0.236926885056189),
];

fn kernel(s: f64, t: f64) -> f64 {
    if s <= t {
        s * (1.0 - t)
    } else {
        t * (1.0 - s)
    }
}

/// Assemble the Galerkin operator on a uniform grid of `n` nodes
/// (mesh width `1/(n-1)`) and cache its eigendecomposition.
pub fn assemble_operator(n: usize) -> Result<EigenOperator, ProblemError> {
    if n < 3 {
        return Err(ProblemError::GridTooSmall(n));
    }
    let h = 1.0 / (n - 1) as f64;
    let node = |i: usize| i as f64 * h;
    let hat = |i: usize, x: f64| -> f64 {
        let xi = node(i);
        let d = (x - xi).abs();
        if d >= h {
            0.0
        } else {
            1.0 - d / h
        }
    };

    let mut a = DMatrix::zeros(n, n);
    let elems = n - 1;
    // element-pair contributions; off-diagonal pairs keep the kernel smooth,
    // the diagonal pair is split along s = t into two triangles
    for ea in 0..elems {
        let (s0, s1) = (node(ea), node(ea + 1));
        for eb in 0..elems {
            let (t0, t1) = (node(eb), node(eb + 1));
            let mut contrib = [[0.0f64; 2]; 2]; // local (i, j) in {ea, ea+1} x {eb, eb+1}
            if ea != eb {
                for &(gs, ws) in &GAUSS5 {
                    let s = 0.5 * (s0 + s1) + 0.5 * h * gs;
                    for &(gt, wt) in &GAUSS5 {
                        let t = 0.5 * (t0 + t1) + 0.5 * h * gt;
                        let w = ws * wt * 0.25 * h * h * kernel(s, t);
                        for li in 0..2 {
                            for lj in 0..2 {
                                contrib[li][lj] += w * hat(ea + li, s) * hat(eb + lj, t);
                            }
                        }
                    }
                }
            } else {
                // triangles {s ≤ t} and {s > t} via the Duffy map
                for upper in [true, false] {
                    for &(gu, wu) in &GAUSS5 {
                        let u = 0.5 * (1.0 + gu);
                        for &(gv, wv) in &GAUSS5 {
                            let v = 0.5 * (1.0 + gv);
                            // upper: s = t0 + h·u·v, t = t0 + h·v (s ≤ t)
                            // lower: mirrored
                            let (s, t) = if upper {
                                (t0 + h * u * v, t0 + h * v)
                            } else {
                                (t0 + h * v, t0 + h * u * v)
                            };
                            let jac = h * h * v;
                            let w = wu * wv * 0.25 * jac * kernel(s, t);
                            for li in 0..2 {
                                for lj in 0..2 {
                                    contrib[li][lj] += w * hat(ea + li, s) * hat(eb + lj, t);
                                }
                            }
                        }
                    }
                }
            }
            for li in 0..2 {
                for lj in 0..2 {
                    a[(ea + li, eb + lj)] += contrib[li][lj];
                }
            }
        }
    }
    // enforce exact symmetry of the assembly
    let at = a.transpose();
    a = (&a + &at) * 0.5;

    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let boundary = i == 0 || i == n - 1;
        m[(i, i)] = if boundary { h / 3.0 } else { 2.0 * h / 3.0 };
        if i + 1 < n {
            m[(i, i + 1)] = h / 6.0;
            m[(i + 1, i)] = h / 6.0;
        }
    }

    EigenOperator::from_matrices(a, m)
}

/// Assemble a noise-free instance of one of the two reference examples.
pub fn make_example(id: ExampleId, n: usize) -> Result<ProblemInstance, ProblemError> {
    let op = assemble_operator(n)?;
    let h = 1.0 / (n - 1) as f64;
    let node = |i: usize| i as f64 * h;

    // dual load vector [y]_j = ∫ y(t) φ_j(t) dt by 5-point Gauss per element
    let mut y_dual = DVector::zeros(n);
    for e in 0..n - 1 {
        let (t0, t1) = (node(e), node(e + 1));
        for &(g, w) in &GAUSS5 {
            let t = 0.5 * (t0 + t1) + 0.5 * h * g;
            let wt = w * 0.5 * h * id.rhs(t);
            let local = (t - t0) / h;
            y_dual[e] += wt * (1.0 - local);
            y_dual[e + 1] += wt * local;
        }
    }
    let y_exact = op.dual_to_balanced(&y_dual);
    let x_dagger = DVector::from_fn(n, |i, _| id.exact_solution(node(i)));

    Ok(ProblemInstance {
        op,
        example: id,
        y_noisy: y_exact.clone(),
        y_exact,
        x_dagger,
        delta: 0.0,
        noise_magnitude: 0.0,
        seed: 0,
    })
}

/// Multiplicative uniform noise: `y^δ_j = (1 + δ'(2u_j - 1)) y_j` with
/// `u_j ~ U[0,1]` from a seeded ChaCha8 stream.  Deterministic in
/// `(instance, δ', seed)`.
pub fn add_noise(
    instance: &ProblemInstance,
    noise_magnitude: f64,
    seed: u64,
) -> Result<ProblemInstance, ProblemError> {
    if !(noise_magnitude >= 0.0 && noise_magnitude.is_finite()) {
        return Err(ProblemError::BadNoiseMagnitude(noise_magnitude));
    }
    let mut out = instance.clone();
    out.noise_magnitude = noise_magnitude;
    out.seed = seed;
    if noise_magnitude == 0.0 {
        out.y_noisy = out.y_exact.clone();
        out.delta = 0.0;
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = instance.y_exact.len();
    out.y_noisy = DVector::from_fn(n, |j, _| {
        let u: f64 = rng.gen();
        (1.0 + noise_magnitude * (2.0 * u - 1.0)) * instance.y_exact[j]
    });
    out.delta = (&out.y_noisy - &out.y_exact).norm();
    Ok(out)
}

/// The `δ'` that makes the expected realized noise level equal
/// `target_delta` (uniform noise on `[-δ', δ']` has variance `δ'²/3`).
pub fn noise_magnitude_for_delta(instance: &ProblemInstance, target_delta: f64) -> f64 {
    target_delta * 3.0f64.sqrt() / instance.y_exact.norm()
}

/// `‖x - x†‖_M / ‖x†‖_M` for a nodal coefficient vector `x`.
pub fn l2_relative_error(x: &DVector<f64>, instance: &ProblemInstance) -> Result<f64, ProblemError> {
    if x.len() != instance.x_dagger.len() {
        return Err(ProblemError::DimensionMismatch {
            expected: instance.x_dagger.len(),
            got: x.len(),
        });
    }
    let denom = instance.op.mass_norm(&instance.x_dagger);
    if denom == 0.0 {
        return Err(ProblemError::ZeroExactSolution);
    }
    let diff = x - &instance.x_dagger;
    Ok(instance.op.mass_norm(&diff) / denom)
}

// ---------------------------------------------------------------------------
// serde: dense row-major with explicit dimensions

#[derive(Serialize, Deserialize)]
struct DenseMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl From<&DMatrix<f64>> for DenseMat {
    fn from(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        DenseMat {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl DenseMat {
    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

#[derive(Serialize, Deserialize)]
struct ProblemInstanceRepr {
    example: ExampleId,
    matrix: DenseMat,
    mass_matrix: DenseMat,
    x_dagger: Vec<f64>,
    y_exact: Vec<f64>,
    y_noisy: Vec<f64>,
    delta: f64,
    noise_magnitude: f64,
    seed: u64,
}

impl Serialize for ProblemInstance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ProblemInstanceRepr {
            example: self.example,
            matrix: (&self.op.matrix).into(),
            mass_matrix: (&self.op.mass_matrix).into(),
            x_dagger: self.x_dagger.iter().copied().collect(),
            y_exact: self.y_exact.iter().copied().collect(),
            y_noisy: self.y_noisy.iter().copied().collect(),
            delta: self.delta,
            noise_magnitude: self.noise_magnitude,
            seed: self.seed,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProblemInstance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = ProblemInstanceRepr::deserialize(d)?;
        let op = EigenOperator::from_matrices(repr.matrix.to_matrix(), repr.mass_matrix.to_matrix())
            .map_err(serde::de::Error::custom)?;
        Ok(ProblemInstance {
            op,
            example: repr.example,
            x_dagger: DVector::from_vec(repr.x_dagger),
            y_exact: DVector::from_vec(repr.y_exact),
            y_noisy: DVector::from_vec(repr.y_noisy),
            delta: repr.delta,
            noise_magnitude: repr.noise_magnitude,
            seed: repr.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn rejects_small_grid() {
        assert!(assemble_operator(2).is_err());
    }

    #[test]
    fn matrix_symmetric_and_positive() {
        for n in [10, 50] {
            let op = assemble_operator(n).unwrap();
            let diff = (&op.matrix - op.matrix.transpose()).norm() / op.matrix.norm();
            assert!(diff < 1e-12, "asymmetry {diff}");
            assert!(op.eigenvalues.iter().all(|&l| l > 0.0));
        }
    }

    #[test]
    fn eigenvalues_match_continuous_spectrum() {
        let op = assemble_operator(100).unwrap();
        for j in 1..=5 {
            let exact = 1.0 / (j as f64 * PI).powi(2);
            let got = op.eigenvalues[j - 1];
            assert!(
                (got - exact).abs() < 5.0 * exact * 1e-4,
                "j={j}: {got} vs {exact}"
            );
        }
        assert_abs_diff_eq!(op.operator_norm, 1.0 / PI.powi(2), epsilon = 2e-5);
    }

    #[test]
    fn reconstruction_holds() {
        let op = assemble_operator(40).unwrap();
        assert!(op.reconstruction_error() < 1e-10);
    }

    #[test]
    fn ex1_nodal_values_constant() {
        let inst = make_example(ExampleId::Ex1, 50).unwrap();
        assert!(inst.x_dagger.iter().all(|&v| v == 2.0));
    }

    #[test]
    fn ex2_boundary_zero() {
        let inst = make_example(ExampleId::Ex2, 64).unwrap();
        assert_eq!(inst.x_dagger[0], 0.0);
        assert_abs_diff_eq!(inst.x_dagger[63], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn forward_residual_consistent() {
        // the constant x† of example 1 lies in the hat-function space, so its
        // forward image matches the assembled load vector to roundoff
        let inst = make_example(ExampleId::Ex1, 50).unwrap();
        let xb = inst.op.nodal_to_balanced(&inst.x_dagger);
        let res = (inst.op.apply(&xb) - &inst.y_exact).norm() / inst.y_exact.norm();
        assert!(res < 1e-11, "residual {res}");
        // example 2's x† is not piecewise linear: its interpolant leaves an
        // O(n⁻²) residual that the refinement must shrink accordingly
        let mut prev = f64::INFINITY;
        for n in [25, 50, 100] {
            let inst = make_example(ExampleId::Ex2, n).unwrap();
            let xb = inst.op.nodal_to_balanced(&inst.x_dagger);
            let res = (inst.op.apply(&xb) - &inst.y_exact).norm() / inst.y_exact.norm();
            assert!(res < prev * 0.5, "n={n}: residual {res} prev {prev}");
            prev = res;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn noise_deterministic_and_bounded() {
        let inst = make_example(ExampleId::Ex1, 40).unwrap();
        let a = add_noise(&inst, 1e-3, 42).unwrap();
        let b = add_noise(&inst, 1e-3, 42).unwrap();
        assert_eq!(a.y_noisy, b.y_noisy);
        assert!(a.delta > 0.0);
        assert!(a.delta <= 1e-3 * inst.y_exact.norm() + 1e-18);
        // instance untouched
        assert_eq!(inst.delta, 0.0);
        assert_eq!(inst.y_noisy, inst.y_exact);
    }

    #[test]
    fn zero_noise_is_exact() {
        let inst = make_example(ExampleId::Ex2, 30).unwrap();
        let a = add_noise(&inst, 0.0, 7).unwrap();
        assert_eq!(a.y_noisy, a.y_exact);
        assert_eq!(a.delta, 0.0);
    }

    #[test]
    fn mean_delta_tracks_uniform_variance() {
        let inst = make_example(ExampleId::Ex1, 60).unwrap();
        let dp = 1e-3;
        let mean: f64 = (0..100)
            .map(|s| add_noise(&inst, dp, s).unwrap().delta)
            .sum::<f64>()
            / 100.0;
        let expect = dp * inst.y_exact.norm() / 3.0f64.sqrt();
        assert!(
            (mean - expect).abs() < 0.1 * expect,
            "mean {mean} expect {expect}"
        );
    }

    #[test]
    fn relative_error_closed_cases() {
        let inst = make_example(ExampleId::Ex1, 50).unwrap();
        assert_abs_diff_eq!(
            l2_relative_error(&inst.x_dagger, &inst).unwrap(),
            0.0,
            epsilon = 1e-14
        );
        let zero = DVector::zeros(50);
        assert_abs_diff_eq!(l2_relative_error(&zero, &inst).unwrap(), 1.0, epsilon = 1e-13);
        let scaled = DVector::from_element(50, 1.9);
        assert_abs_diff_eq!(
            l2_relative_error(&scaled, &inst).unwrap(),
            0.05,
            epsilon = 1e-12
        );
    }

    #[test]
    fn serde_roundtrip() {
        let inst = add_noise(&make_example(ExampleId::Ex2, 20).unwrap(), 1e-2, 3).unwrap();
        let json = serde_json::to_string(&inst).unwrap();
        let back: ProblemInstance = serde_json::from_str(&json).unwrap();
        assert_eq!(back.y_noisy, inst.y_noisy);
        assert_eq!(back.seed, 3);
        assert!((back.op.operator_norm - inst.op.operator_norm).abs() < 1e-12);
    }
}
