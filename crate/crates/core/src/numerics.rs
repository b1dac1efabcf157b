//! Generalized Rayleigh quotients, a power-method generalized eigensolver,
//! the Adam update, gradient sanitizing, central differences, and random SPD
//! matrices.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{OeoError, Result};

pub const SYMMETRY_TOL: f64 = 1e-10;
pub const SINGULAR_CONDITION: f64 = 1e12;
pub const SANITIZE_LIMIT: f64 = 1e6;
pub const DEFAULT_GEV_ITERATIONS: usize = 7;

/// A symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    /// Checks symmetry (to [`SYMMETRY_TOL`], relative to the largest entry)
    /// and positive definiteness via Cholesky, then stores the exact
    /// symmetric part.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(OeoError::NotSpd(format!("shape {}x{}", m.nrows(), m.ncols())));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(OeoError::NonFinite("matrix"));
        }
        let scale = m.amax().max(1.0);
        let n = m.nrows();
        for i in 0..n {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(OeoError::NotSpd(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        let sym = (&m + m.transpose()) * 0.5;
        if sym.clone().cholesky().is_none() {
            return Err(OeoError::NotSpd("Cholesky factorization failed".into()));
        }
        Ok(Self(sym))
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(OeoError::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, data))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// `w' M w`.
    pub fn quad(&self, w: &[f64]) -> f64 {
        let n = self.dim();
        let mut total = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.0[(i, j)] * w[j];
            }
            total += w[i] * row;
        }
        total
    }
}

/// `w' num w / w' den w`; invariant to rescaling `w`.
pub fn rayleigh(w: &[f64], num: &SpdMatrix, den: &SpdMatrix) -> Result<f64> {
    if w.len() != num.dim() || w.len() != den.dim() {
        return Err(OeoError::DimensionMismatch {
            expected: num.dim(),
            got: w.len(),
        });
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(OeoError::NonFinite("vector"));
    }
    if w.iter().all(|v| *v == 0.0) {
        return Err(OeoError::ZeroVector);
    }
    Ok(num.quad(w) / den.quad(w))
}

/// Leading generalized eigenpairs of `num w = lambda den w`.
#[derive(Debug, Clone)]
pub struct GevSolution {
    /// `N x k`; column `j` satisfies `w' den w = 1`.
    pub vectors: DMatrix<f64>,
    /// Descending.
    pub values: Vec<f64>,
}

impl GevSolution {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j).iter().copied().collect()
    }
}

/// Solves for the `k` largest generalized eigenpairs by the power method.
///
/// The pencil is symmetrized through the Cholesky factor `den = L L'`, giving
/// `S = L^-1 num L^-T`. For each component the power sequence is advanced by
/// repeated squaring, so iteration `t` applies `S^(2^t)` (normalized), and
/// the dominant direction is read off the resulting near-rank-one operator.
/// Found components are deflated from `S`, which in the original coordinates
/// is projection in the `den` inner product.
pub fn gev_power(num: &SpdMatrix, den: &SpdMatrix, k: usize, iters: usize) -> Result<GevSolution> {
    let n = num.dim();
    if den.dim() != n {
        return Err(OeoError::DimensionMismatch {
            expected: n,
            got: den.dim(),
        });
    }
    if k == 0 || k > n {
        return Err(OeoError::InvalidConfig(format!("k = {k} must be in 1..={n}")));
    }
    if iters == 0 {
        return Err(OeoError::InvalidConfig("iters must be at least 1".into()));
    }
    let chol = den
        .matrix()
        .clone()
        .cholesky()
        .ok_or_else(|| OeoError::NotSpd("denominator".into()))?;
    let l = chol.l();
    let diag: Vec<f64> = (0..n).map(|i| l[(i, i)]).collect();
    let dmax = diag.iter().copied().fold(0.0, f64::max);
    let dmin = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = (dmax / dmin).powi(2);
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(OeoError::Singular(condition));
    }
    let l_inv = l.clone().try_inverse().ok_or(OeoError::Singular(f64::INFINITY))?;
    let s = &l_inv * num.matrix() * l_inv.transpose();
    let mut s = (&s + s.transpose()) * 0.5;

    let mut vectors = DMatrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    for j in 0..k {
        let u = dominant_direction(&s, iters);
        let lambda = (u.transpose() * &s * &u)[(0, 0)];
        s -= &u * u.transpose() * lambda;
        s = (&s + s.transpose()) * 0.5;
        let w = l_inv.transpose() * &u;
        vectors.set_column(j, &w);
        values.push(lambda);
    }
    Ok(GevSolution { vectors, values })
}

fn dominant_direction(s: &DMatrix<f64>, iters: usize) -> DVector<f64> {
    let n = s.nrows();
    let mut p = s.clone();
    normalize_frobenius(&mut p);
    for _ in 1..iters {
        let next = &p * &p;
        if next.norm() == 0.0 {
            break;
        }
        p = next;
        normalize_frobenius(&mut p);
    }
    // One power step from the strongest column of the squared operator.
    let col = (0..n)
        .max_by(|&a, &b| p.column(a).norm().total_cmp(&p.column(b).norm()))
        .unwrap_or(0);
    let mut u: DVector<f64> = p.column(col).into_owned();
    if u.norm() == 0.0 {
        u = DVector::from_element(n, 1.0);
    }
    u /= u.norm();
    let refined = s * &u;
    if refined.norm() > 0.0 {
        u = refined.normalize();
    }
    // Fix the sign so results do not depend on the pivot column.
    let pivot = u.iamax();
    if u[pivot] < 0.0 {
        u = -u;
    }
    u
}

fn normalize_frobenius(m: &mut DMatrix<f64>) {
    let norm = m.norm();
    if norm > 0.0 {
        *m /= norm;
    }
}

/// Adam optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: usize,
    pub learning_rate: f64,
    pub momentum1: f64,
    pub momentum2: f64,
    pub epsilon: f64,
}

/// Hyperparameters for [`AdamState`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub momentum1: f64,
    pub momentum2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.2,
            momentum1: 0.9,
            momentum2: 0.9,
            epsilon: 1e-8,
        }
    }
}

impl AdamState {
    pub fn new(dims: usize, params: AdamParams) -> Self {
        Self {
            first_moment: vec![0.0; dims],
            second_moment: vec![0.0; dims],
            step_count: 0,
            learning_rate: params.learning_rate,
            momentum1: params.momentum1,
            momentum2: params.momentum2,
            epsilon: params.epsilon,
        }
    }

    pub fn reset(&mut self) {
        self.first_moment.iter_mut().for_each(|v| *v = 0.0);
        self.second_moment.iter_mut().for_each(|v| *v = 0.0);
        self.step_count = 0;
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut [f64], grad: &[f64], st: &mut AdamState) {
    st.step_count += 1;
    let t = st.step_count as i32;
    let c1 = 1.0 - st.momentum1.powi(t);
    let c2 = 1.0 - st.momentum2.powi(t);
    for i in 0..params.len() {
        let g = grad[i];
        st.first_moment[i] = st.momentum1 * st.first_moment[i] + (1.0 - st.momentum1) * g;
        st.second_moment[i] = st.momentum2 * st.second_moment[i] + (1.0 - st.momentum2) * g * g;
        let m_hat = st.first_moment[i] / c1;
        let v_hat = st.second_moment[i] / c2;
        params[i] -= st.learning_rate * m_hat / (v_hat.sqrt() + st.epsilon);
    }
}

/// Zeroes entries that are non-finite or larger than [`SANITIZE_LIMIT`] in
/// magnitude.
pub fn sanitize_gradient(grad: &mut [f64]) {
    for g in grad.iter_mut() {
        if !g.is_finite() || g.abs() > SANITIZE_LIMIT {
            *g = 0.0;
        }
    }
}

/// Central-difference gradient with per-coordinate step `h * max(1, |x_i|)`.
pub fn finite_diff<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(OeoError::InvalidConfig(format!("step h = {h} must be positive")));
    }
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let step = h * x[i].abs().max(1.0);
        probe[i] = x[i] + step;
        let up = f(&probe)?;
        probe[i] = x[i] - step;
        let down = f(&probe)?;
        probe[i] = x[i];
        out.push((up - down) / (2.0 * step));
    }
    Ok(out)
}

/// `Q diag(lambda) Q'` with Haar-random orthogonal `Q` and eigenvalues
/// log-uniform in `[1, condition_cap]`.
pub fn random_spd<R: Rng + ?Sized>(n: usize, rng: &mut R, condition_cap: f64) -> SpdMatrix {
    assert!(n >= 1, "matrix dimension must be positive");
    assert!(condition_cap >= 1.0, "condition cap must be at least 1");
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let log_cap = condition_cap.ln();
    let spectrum: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * log_cap).exp()).collect();
    let lambda = DMatrix::from_diagonal(&DVector::from_vec(spectrum));
    let m = &q * lambda * q.transpose();
    SpdMatrix::new((&m + m.transpose()) * 0.5).expect("constructed SPD")
}
