//! Dense-matrix kernel shared by the power-control solvers.
//!
//! Everything here is sized for systems with at most a few hundred users, so
//! the routines favor robustness over asymptotic cleverness: spectral radii
//! of nonnegative matrices via shifted power iteration with a Schur fallback,
//! linear solves via LU with a residual check and one refinement step, and an
//! exact resolvent for rank-one matrices.
//!
//! The feasibility questions upstream all reduce to comparing a spectral
//! radius against a threshold; [`RADIUS_MARGIN`] pins the tie-break rule in a
//! single place so every caller declares borderline systems infeasible the
//! same way.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Relative margin applied to spectral-radius feasibility tests. A radius
/// within this fraction of the threshold counts as infeasible: the exact
/// boundary is singular and nothing useful lives that close to it.
pub const RADIUS_MARGIN: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("entry ({row},{col}) = {value} must be nonnegative")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("entry ({row},{col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("solve residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    IllConditioned { residual: f64, tol: f64 },
    #[error("spectral radius estimate {best:.12e} did not converge")]
    NoConvergence { best: f64 },
    #[error("resolvent undefined: rank-one trace {trace} is too close to 1")]
    ResolventSingular { trace: f64 },
}

/// Row-major dense matrix of `f64`. Thin wrapper so the rest of the crate
/// does not commit to a particular backend in its public types.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    data: DMatrix<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    /// Builds a `rows x cols` matrix from `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self {
            data: DMatrix::from_fn(rows, cols, f),
        }
    }

    /// Builds from row slices. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        for r in rows {
            if r.len() != ncols {
                return Err(LinalgError::DimensionMismatch {
                    left: ncols,
                    right: r.len(),
                });
            }
        }
        Ok(Self::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[(row, col)] = value;
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Checks every entry is finite and, if `nonnegative`, at least zero.
    pub fn validate(&self, nonnegative: bool) -> Result<(), LinalgError> {
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                let v = self.get(i, j);
                if !v.is_finite() {
                    return Err(LinalgError::NonFiniteEntry { row: i, col: j });
                }
                if nonnegative && v < 0.0 {
                    return Err(LinalgError::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    pub(crate) fn as_inner(&self) -> &DMatrix<f64> {
        &self.data
    }
}

/// Rank-one matrix `u * w^T`, stored by its factors.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOneMatrix {
    u: Vec<f64>,
    w: Vec<f64>,
}

impl RankOneMatrix {
    /// `u` and `w` must have equal length and finite entries.
    pub fn new(u: Vec<f64>, w: Vec<f64>) -> Result<Self, LinalgError> {
        if u.len() != w.len() {
            return Err(LinalgError::DimensionMismatch {
                left: u.len(),
                right: w.len(),
            });
        }
        for (row, v) in u.iter().chain(w.iter()).enumerate() {
            if !v.is_finite() {
                return Err(LinalgError::NonFiniteEntry { row, col: 0 });
            }
        }
        Ok(Self { u, w })
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// Trace, which is also the only nonzero eigenvalue: `sum_i u_i w_i`.
    pub fn trace(&self) -> f64 {
        dot(&self.u, &self.w)
    }

    /// Matrix-vector product `(u w^T) v = u (w . v)`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if v.len() != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                left: self.dim(),
                right: v.len(),
            });
        }
        let s = dot(&self.w, v);
        Ok(self.u.iter().map(|&ui| ui * s).collect())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| self.u[i] * self.w[j])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Spectral radius of an entrywise-nonnegative square matrix.
///
/// Power iteration runs on the shifted matrix `B + I` so that matrices with
/// periodic structure (whose dominant eigenvalues tie in modulus) still
/// converge; the shift is subtracted from the result. The all-ones start
/// vector has full support, which for nonnegative `B` guarantees the iterate
/// reaches the Perron eigenvalue. If the iteration stalls, a Schur
/// decomposition of the original matrix decides.
///
/// `tol` is the relative tolerance on the eigenvalue estimate; `1e-12` is the
/// conventional choice upstream.
pub fn spectral_radius(m: &DenseMatrix, tol: f64) -> Result<f64, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    m.validate(true)?;
    let n = m.rows();
    if n == 0 {
        return Ok(0.0);
    }

    let a = m.as_inner();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut lambda = 1.0f64;
    let max_iter = 100 * n.max(10);
    for _ in 0..max_iter {
        // One step with B + I; entries stay nonnegative, so the 1-norm is the
        // entry sum and the normalization is exact.
        let mut y = a * &x;
        y += &x;
        let norm = y.sum();
        if norm <= 0.0 || !norm.is_finite() {
            // Only possible for the zero matrix (or overflow); the shift makes
            // norm >= |x|_1 otherwise.
            return Ok(0.0);
        }
        let next = norm / x.sum();
        y /= norm;
        let converged = (next - lambda).abs() <= tol * next.max(1.0);
        x = y;
        lambda = next;
        if converged {
            return Ok((lambda - 1.0).max(0.0));
        }
    }

    // Slow eigenvalue separation; hand the original matrix to a Schur solve.
    let eps = f64::EPSILON;
    match nalgebra::linalg::Schur::try_new(a.clone(), eps, 10_000) {
        Some(schur) => {
            let eigs = schur.complex_eigenvalues();
            let r = eigs.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            Ok(r)
       }
        None => Err(LinalgError::NoConvergence {
            best: (lambda - 1.0).max(0.0),
        }),
    }
}

/// Whether `s*I - B` is a nonsingular M-matrix for nonnegative `B`, i.e.
/// whether `s` strictly exceeds the spectral radius of `B`.
///
/// Strictness carries [`RADIUS_MARGIN`]: a radius within the margin of `s`
/// counts as a failure, so downstream feasibility tests never accept a
/// system sitting on the singular boundary.
pub fn is_nonsingular_m_matrix(s: f64, b: &DenseMatrix, tol: f64) -> Result<bool, LinalgError> {
    let r = spectral_radius(b, tol)?;
    Ok(r < s * (1.0 - RADIUS_MARGIN))
}

/// Applies `(I - B)^{-1}` to `v` for rank-one `B = u w^T` without forming a
/// matrix, via `(I - B)^{-1} = I + B / (1 - tr B)`.
///
/// Valid whenever `tr B != 1`; the trace equal to one makes `I - B` singular.
pub fn rank_one_resolvent_apply(b: &RankOneMatrix, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let tr = b.trace();
    if (1.0 - tr).abs() <= 1e-12 * tr.abs().max(1.0) {
        return Err(LinalgError::ResolventSingular { trace: tr });
    }
    let bv = b.apply(v)?;
    Ok(v.iter()
        .zip(&bv)
        .map(|(&vi, &bvi)| vi + bvi / (1.0 - tr))
        .collect())
}

/// Solves `A x = b` by LU with partial pivoting, then verifies the residual
/// and applies one refinement step if needed.
///
/// Errors with [`LinalgError::Singular`] when elimination breaks down and
/// [`LinalgError::IllConditioned`] when the refined relative residual still
/// exceeds `1e-10`.
pub fn solve_linear(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.rows() != b.len() {
        return Err(LinalgError::DimensionMismatch {
            left: a.rows(),
            right: b.len(),
        });
    }
    a.validate(false)?;
    const RESIDUAL_TOL: f64 = 1e-10;

    let am = a.as_inner();
    let bv = DVector::from_column_slice(b);
    let lu = am.clone().lu();
    let mut x = lu.solve(&bv).ok_or(LinalgError::Singular)?;

    // Backward-error style residual: scale by max(|b|, |A||x|) so that
    // nearly singular systems with large solutions are judged by the
    // accuracy actually achievable at working precision, not by |b| alone.
    let a_norm = am.amax();
    let residual = |x: &DVector<f64>| {
        let scale = bv.amax().max(a_norm * x.amax()).max(f64::MIN_POSITIVE);
        (am * x - &bv).amax() / scale
    };

    let mut r = residual(&x);
    if !r.is_finite() {
        return Err(LinalgError::Singular);
    }
    if r > RESIDUAL_TOL {
        let correction = lu.solve(&(&bv - am * &x));
        if let Some(d) = correction {
            x += d;
            r = residual(&x);
        }
        if !r.is_finite() || r > RESIDUAL_TOL {
            return Err(LinalgError::IllConditioned {
                residual: r,
                tol: RESIDUAL_TOL,
            });
        }
    }
    Ok(x.iter().copied().collect())
}
