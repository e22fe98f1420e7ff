//! Weighted rank-`N` positive-semidefinite approximation.
//!
//! [`psd_approximate`] is the unweighted nearest rank-`N` PSD matrix in
//! Frobenius norm (clip the spectrum). [`bcd_solve`] wraps it in the
//! fill-in/projection iteration for entrywise weights in `[0, 1]`.

use std::fmt;

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

/// A square matrix checked to be symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    values: Mat<f64>,
}

impl SymmetricMatrix {
    /// Relative asymmetry tolerated on construction.
    pub const TOLERANCE: f64 = 1e-10;

    pub fn new(values: Mat<f64>) -> Result<Self> {
        check_symmetric(values.as_ref(), "matrix")?;
        Ok(SymmetricMatrix { values })
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(Mat::from_fn(n, n, f))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("rows must form a square matrix".into()));
        }
        Self::from_fn(n, |i, j| rows[i][j])
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn as_ref(&self) -> MatRef<'_, f64> {
        self.values.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn into_inner(self) -> Mat<f64> {
        self.values
    }
}

fn max_abs(m: MatRef<'_, f64>) -> f64 {
    let mut s = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let x = m[(i, j)].abs();
            if x.is_nan() {
                return f64::NAN;
            }
            s = s.max(x);
        }
    }
    s
}

fn check_symmetric(m: MatRef<'_, f64>, what: &str) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Shape(format!("{what} is {}x{}, not square", n, m.ncols())));
    }
    let scale = max_abs(m);
    if !scale.is_finite() {
        return Err(Error::Numeric(format!("{what} has non-finite entries")));
    }
    let tol = SymmetricMatrix::TOLERANCE * scale;
    for j in 0..n {
        for i in j + 1..n {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Err(Error::InvalidParameter(format!(
                    "{what} is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Low-rank factor `V` (`N x n`, one column per word) with `X = V^T V`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdFactor {
    v: Mat<f64>,
    eigenvalues: Vec<f64>,
}

impl PsdFactor {
    pub fn from_parts(v: Mat<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.len() != v.nrows() {
            return Err(Error::Shape(format!(
                "{} eigenvalues for a rank-{} factor",
                eigenvalues.len(),
                v.nrows()
            )));
        }
        Ok(PsdFactor { v, eigenvalues })
    }

    pub fn rank(&self) -> usize {
        self.v.nrows()
    }

    pub fn dim(&self) -> usize {
        self.v.ncols()
    }

    /// The `N x n` factor.
    pub fn factor(&self) -> MatRef<'_, f64> {
        self.v.as_ref()
    }

    /// Retained eigenvalues, descending, zero-padded to the rank.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Embedding of word `i` (column `i` of `V`).
    pub fn embedding(&self, i: usize) -> Vec<f64> {
        (0..self.rank()).map(|k| self.v[(k, i)]).collect()
    }

    /// `X = V^T V`.
    pub fn gram(&self) -> Mat<f64> {
        self.v.transpose() * &self.v
    }

    pub fn into_inner(self) -> Mat<f64> {
        self.v
    }
}

/// Flips `q` so its largest-magnitude entry (first on ties) is positive.
fn normalize_sign(q: &mut [f64]) {
    let mut best = 0;
    for (k, x) in q.iter().enumerate() {
        if x.abs() > q[best].abs() {
            best = k;
        }
    }
    if q.get(best).is_some_and(|&x| x < 0.0) {
        for x in q.iter_mut() {
            *x = -*x;
        }
    }
}

fn eigen_factor(g: MatRef<'_, f64>, rank: usize) -> Result<PsdFactor> {
    let n = g.nrows();
    if rank == 0 {
        return Err(Error::InvalidParameter("rank must be at least 1".into()));
    }
    if !max_abs(g).is_finite() {
        return Err(Error::Numeric("non-finite entries before eigendecomposition".into()));
    }
    let evd = g
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut v = Mat::zeros(rank, n);
    let mut eigenvalues = vec![0.0; rank];
    // Ascending order from the backend; walk from the top.
    let mut q = vec![0.0; n];
    for (k, idx) in (0..n).rev().take(rank).enumerate() {
        let lambda = s[idx];
        if !(lambda > 0.0) {
            break;
        }
        for (a, x) in q.iter_mut().enumerate() {
            *x = u[(a, idx)];
        }
        normalize_sign(&mut q);
        let scale = lambda.sqrt();
        for (a, x) in q.iter().enumerate() {
            v[(k, a)] = scale * x;
        }
        eigenvalues[k] = lambda;
    }
    PsdFactor::from_parts(v, eigenvalues)
}

/// Nearest rank-`N` PSD matrix to `g` in Frobenius norm, as a factor.
pub fn psd_approximate(g: &SymmetricMatrix, rank: usize) -> Result<PsdFactor> {
    eigen_factor(g.as_ref(), rank)
}

/// `sum_ij W_ij A_ij^2`.
pub fn weighted_frobenius_sq(a: MatRef<'_, f64>, w: MatRef<'_, f64>) -> Result<f64> {
    if a.nrows() != w.nrows() || a.ncols() != w.ncols() {
        return Err(Error::Shape(format!(
            "residual {}x{} vs weights {}x{}",
            a.nrows(),
            a.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let x = a[(i, j)];
            s += w[(i, j)] * x * x;
        }
    }
    Ok(s)
}

fn weighted_error(g: MatRef<'_, f64>, x: MatRef<'_, f64>, w: MatRef<'_, f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let d = g[(i, j)] - x[(i, j)];
            s += w[(i, j)] * d * d;
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcdConfig {
    pub rank: usize,
    pub iterations: usize,
    /// `X^(0) = init_scale * G*`.
    pub init_scale: f64,
    /// Stop once the relative drop of the weighted error falls below this.
    /// Zero disables early stopping.
    pub convergence_tol: f64,
}

impl Default for BcdConfig {
    fn default() -> Self {
        BcdConfig {
            rank: 100,
            iterations: 5,
            init_scale: 0.5,
            convergence_tol: 1e-5,
        }
    }
}

impl BcdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidParameter("rank must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be at least 1".into()));
        }
        if !self.init_scale.is_finite() {
            return Err(Error::InvalidParameter("init_scale must be finite".into()));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(Error::InvalidParameter("convergence_tol must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BcdSolution {
    pub factor: PsdFactor,
    /// `||G* - X^(t)||_W^2` for `t = 1, 2, ...`.
    pub trajectory: Vec<f64>,
}

/// Weighted rank-`N` PSD approximation of `g_star` under weights `w`.
pub fn bcd_solve(g_star: &SymmetricMatrix, w: MatRef<'_, f64>, cfg: &BcdConfig) -> Result<BcdSolution> {
    cfg.validate()?;
    let n = g_star.dim();
    if w.nrows() != n || w.ncols() != n {
        return Err(Error::Shape(format!(
            "weights {}x{} for a {n}x{n} target",
            w.nrows(),
            w.ncols()
        )));
    }
    for j in 0..n {
        for i in 0..n {
            let x = w[(i, j)];
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidParameter(format!(
                    "weight {x} at ({i}, {j}) outside [0, 1]"
                )));
            }
        }
    }
    check_symmetric(w, "weight matrix")?;

    let g = g_star.as_ref();
    let mut x = Mat::from_fn(n, n, |i, j| cfg.init_scale * g[(i, j)]);
    let mut fill = Mat::<f64>::zeros(n, n);
    let mut trajectory = Vec::with_capacity(cfg.iterations);
    let mut factor = None;
    for t in 1..=cfg.iterations {
        for j in 0..n {
            for i in 0..n {
                let wij = w[(i, j)];
                fill[(i, j)] = wij * g[(i, j)] + (1.0 - wij) * x[(i, j)];
            }
        }
        let f = eigen_factor(fill.as_ref(), cfg.rank)?;
        x = f.gram();
        let err = weighted_error(g, x.as_ref(), w);
        log::debug!("bcd iteration {t}: weighted error {err:.6e}");
        factor = Some(f);
        let prev = trajectory.last().copied();
        trajectory.push(err);
        if let (Some(prev), true) = (prev, cfg.convergence_tol > 0.0) {
            let drop = if prev > 0.0 { (prev - err) / prev } else { 0.0 };
            if drop < cfg.convergence_tol {
                break;
            }
        }
    }
    Ok(BcdSolution {
        factor: factor.expect("at least one iteration"),
        trajectory,
    })
}

/// Rank-`N` truncated-SVD factor: rows `sqrt(sigma_k) u_k^T`, with the same
/// sign convention as the eigen route.
pub fn svd_factor(m: MatRef<'_, f64>, rank: usize) -> Result<Mat<f64>> {
    let svd = m
        .svd()
        .map_err(|e| Error::Numeric(format!("svd failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let u = svd.U();
    let n = m.nrows();
    let mut v = Mat::zeros(rank, n);
    let mut q = vec![0.0; n];
    for k in 0..rank.min(s.nrows()) {
        for (a, x) in q.iter_mut().enumerate() {
            *x = u[(a, k)];
        }
        normalize_sign(&mut q);
        let scale = s[k].sqrt();
        for (a, x) in q.iter().enumerate() {
            v[(k, a)] = scale * x;
        }
    }
    Ok(v)
}

fn column_dot(v: MatRef<'_, f64>, a: usize, b: usize) -> f64 {
    (0..v.nrows()).map(|k| v[(k, a)] * v[(k, b)]).sum()
}

/// One matrix of the SVD-vs-eigendecomposition comparison.
#[derive(Debug, Clone)]
pub struct TrapCase {
    pub name: &'static str,
    pub matrix: Mat<f64>,
    pub eigen_factor: Mat<f64>,
    pub svd_factor: Mat<f64>,
    /// `v_1^T v_2` under each route.
    pub eigen_inner: f64,
    pub svd_inner: f64,
}

#[derive(Debug, Clone)]
pub struct SvdTrapReport {
    pub cases: Vec<TrapCase>,
}

pub const TRAP_M1: [[f64; 3]; 3] = [[1.4, 0.8, 0.0], [0.8, 2.6, 0.0], [0.0, 0.0, 2.0]];
pub const TRAP_M2: [[f64; 3]; 3] = [[0.2, -1.6, 0.0], [-1.6, -2.2, 0.0], [0.0, 0.0, 2.0]];

/// Rank-2 factors of two 3x3 PMI-like matrices via truncated SVD and via
/// the PSD projection. The second matrix has a negative dominant
/// eigenvalue, which SVD silently turns positive.
pub fn svd_trap_demo() -> Result<SvdTrapReport> {
    let mut cases = Vec::new();
    for (name, m) in [("M1", TRAP_M1), ("M2", TRAP_M2)] {
        let sym = SymmetricMatrix::from_fn(3, |i, j| m[i][j])?;
        let eigen = psd_approximate(&sym, 2)?.into_inner();
        let svd = svd_factor(sym.as_ref(), 2)?;
        cases.push(TrapCase {
            name,
            eigen_inner: column_dot(eigen.as_ref(), 0, 1),
            svd_inner: column_dot(svd.as_ref(), 0, 1),
            matrix: sym.into_inner(),
            eigen_factor: eigen,
            svd_factor: svd,
        });
    }
    Ok(SvdTrapReport { cases })
}

fn write_matrix(f: &mut fmt::Formatter<'_>, m: MatRef<'_, f64>) -> fmt::Result {
    for i in 0..m.nrows() {
        write!(f, "   ")?;
        for j in 0..m.ncols() {
            write!(f, " {:>7.3}", m[(i, j)])?;
        }
        writeln!(f)?;
    }
    Ok(())
}

impl fmt::Display for SvdTrapReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cases {
            writeln!(f, "{}:", c.name)?;
            write_matrix(f, c.matrix.as_ref())?;
            writeln!(f, "  eigen factor (rows sqrt(lambda) q^T):")?;
            write_matrix(f, c.eigen_factor.as_ref())?;
            writeln!(f, "  svd factor (rows sqrt(sigma) u^T):")?;
            write_matrix(f, c.svd_factor.as_ref())?;
            writeln!(
                f,
                "  v1.v2  eigen {:+.4}  svd {:+.4}",
                c.eigen_inner, c.svd_inner
            )?;
        }
        Ok(())
    }
}
