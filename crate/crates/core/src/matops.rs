//! Dense linear-algebra kernel.
//!
//! Everything here is built on a single thin SVD (`nalgebra`'s Golub–Kahan
//! implementation) with a fixed sign convention, so that every derived
//! quantity (pseudo-inverse, Gram square roots, leading singular blocks,
//! projectors) is reproducible bit-for-bit across runs.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense real matrix; columns are samples, rows are signal coordinates.
pub type Matrix = DMatrix<f64>;

/// Relative cutoff used by [`pinv`] when the caller does not supply one.
pub fn default_rtol(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

/// Rejects matrices with NaN or infinite entries.
pub fn ensure_finite(a: &Matrix) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn ensure_nonempty(a: &Matrix, what: &str) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidArgument(format!(
            "{what} must have at least one row and one column, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Thin SVD `A = U diag(sigma) Vt` with `U` of shape `m x p`, `Vt` of shape
/// `p x n`, `p = min(m, n)`.
///
/// Singular values are sorted non-increasing. Each left singular vector is
/// signed so that its largest-magnitude entry (first one on ties) is
/// positive; the matching row of `Vt` is flipped along with it.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub vt: Matrix,
}

impl SvdFactors {
    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn cols(&self) -> usize {
        self.vt.ncols()
    }

    /// Largest singular value, zero for the zero matrix.
    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// Absolute cutoff `rtol * sigma_1`; singular values at or below it are
    /// treated as zero.
    pub fn cutoff(&self, rtol: Option<f64>) -> f64 {
        let rtol = rtol.unwrap_or_else(|| default_rtol(self.rows(), self.cols()));
        rtol * self.sigma_max()
    }

    /// Number of singular values strictly above the cutoff.
    pub fn rank(&self, rtol: Option<f64>) -> usize {
        let cut = self.cutoff(rtol);
        self.sigma.iter().take_while(|&&s| s > cut).count()
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, &s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * &self.vt
    }

    /// `[A]_k`, the sum of the `k` leading singular triplets.
    pub fn truncated(&self, k: usize) -> Matrix {
        let k = k.min(self.sigma.len());
        let mut uk = self.u.columns(0, k).into_owned();
        for j in 0..k {
            uk.column_mut(j).scale_mut(self.sigma[j]);
        }
        uk * self.vt.rows(0, k)
    }

    /// Moore–Penrose pseudo-inverse `V diag(1/sigma) Uᵀ`.
    pub fn pinv(&self, rtol: Option<f64>) -> Matrix {
        let r = self.rank(rtol);
        let mut v = self.vt.rows(0, r).transpose();
        for j in 0..r {
            v.column_mut(j).scale_mut(1.0 / self.sigma[j]);
        }
        v * self.u.columns(0, r).transpose()
    }

    /// `(A Aᵀ)^{1/2} = U diag(sigma) Uᵀ`.
    pub fn gram_sqrt(&self) -> Matrix {
        self.weighted_left_gram(|s| s, self.sigma.len())
    }

    /// `((A Aᵀ)^{1/2})† = U diag(1/sigma) Uᵀ` over the numerical range.
    pub fn gram_sqrt_pinv(&self, rtol: Option<f64>) -> Matrix {
        self.weighted_left_gram(|s| 1.0 / s, self.rank(rtol))
    }

    fn weighted_left_gram(&self, weight: impl Fn(f64) -> f64, r: usize) -> Matrix {
        let ur = self.u.columns(0, r);
        let mut scaled = ur.into_owned();
        for j in 0..r {
            scaled.column_mut(j).scale_mut(weight(self.sigma[j]));
        }
        let g = scaled * ur.transpose();
        symmetrize(g)
    }

    /// Orthogonal projector `A†A` onto the row space of `A` (an `n x n`
    /// matrix), computed as `V_r V_rᵀ`.
    pub fn row_projector(&self, rtol: Option<f64>) -> Matrix {
        let r = self.rank(rtol);
        let vr = self.vt.rows(0, r);
        vr.transpose() * vr
    }
}

/// Averages `g` with its transpose; removes rounding asymmetry from
/// products that are symmetric in exact arithmetic.
fn symmetrize(mut g: Matrix) -> Matrix {
    let n = g.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = avg;
            g[(j, i)] = avg;
        }
    }
    g
}

/// Thin SVD of `a` under the crate's sign convention.
pub fn svd(a: &Matrix) -> Result<SvdFactors> {
    ensure_nonempty(a, "SVD input")?;
    ensure_finite(a)?;
    let (m, n) = a.shape();
    let fail = || Error::SvdNoConvergence { rows: m, cols: n };
    let fa = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    let dec = fa.thin_svd().map_err(|_| fail())?;
    let (fu, fv, fs) = (dec.U(), dec.V(), dec.S().column_vector());
    let r = m.min(n);
    let mut u = Matrix::from_fn(m, r, |i, j| fu[(i, j)]);
    let mut vt = Matrix::from_fn(r, n, |i, j| fv[(j, i)]);
    let sigma: Vec<f64> = (0..r).map(|i| fs[i]).collect();
    if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) || sigma.windows(2).any(|w| w[1] > w[0]) {
        return Err(fail());
    }
    // Guard against silently inaccurate factors.
    let mut us = u.clone();
    for (j, &s) in sigma.iter().enumerate() {
        us.column_mut(j).scale_mut(s);
    }
    if !((us * &vt - a).norm() <= SVD_RECON_RTOL * a.norm()) {
        return Err(fail());
    }

    for j in 0..u.ncols() {
        let col = u.column(j);
        let mut pivot = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            u.column_mut(j).neg_mut();
            vt.row_mut(j).neg_mut();
        }
    }
    Ok(SvdFactors { u, sigma, vt })
}

/// Reconstruction residual, relative to `‖A‖`, above which a decomposition
/// is rejected.
const SVD_RECON_RTOL: f64 = 1e-9;

fn check_rank_budget(k: usize, max: usize, what: &str) -> Result<()> {
    if k == 0 || k > max {
        return Err(Error::InvalidArgument(format!(
            "{what}: rank budget k={k} must lie in 1..={max}"
        )));
    }
    Ok(())
}

/// Best rank-`k` approximation `[A]_k` in the Frobenius norm.
pub fn truncated_svd(a: &Matrix, k: usize) -> Result<Matrix> {
    check_rank_budget(k, a.nrows().min(a.ncols()), "truncated_svd")?;
    Ok(svd(a)?.truncated(k))
}

/// Moore–Penrose pseudo-inverse. Singular values at or below
/// `rtol * sigma_1` are treated as zero; `None` selects
/// [`default_rtol`].
pub fn pinv(a: &Matrix, rtol: Option<f64>) -> Result<Matrix> {
    if let Some(t) = rtol {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "pseudo-inverse tolerance must be finite and >= 0, got {t}"
            )));
        }
    }
    Ok(svd(a)?.pinv(rtol))
}

/// `((A Aᵀ)^{1/2})†`, formed from the SVD of `A` rather than from `A Aᵀ`.
pub fn gram_sqrt_pinv(a: &Matrix, rtol: Option<f64>) -> Result<Matrix> {
    Ok(svd(a)?.gram_sqrt_pinv(rtol))
}

/// `(A Aᵀ)^{1/2}`.
pub fn gram_sqrt(a: &Matrix) -> Result<Matrix> {
    Ok(svd(a)?.gram_sqrt())
}

/// First `k` left singular vectors of `A` as an `m x k` block.
///
/// `k` may exceed `min(m, n)`; the basis is then completed to span the
/// orthogonal complement of the range of `A`.
pub fn left_singular_block(a: &Matrix, k: usize) -> Result<Matrix> {
    let (m, n) = a.shape();
    check_rank_budget(k, m, "left_singular_block")?;
    if k <= m.min(n) {
        return Ok(svd(a)?.u.columns(0, k).into_owned());
    }
    // Zero columns leave the left singular subspace untouched but make the
    // thin SVD return a full m x m basis.
    let mut padded = Matrix::zeros(m, m);
    padded.columns_mut(0, n).copy_from(a);
    Ok(svd(&padded)?.u.columns(0, k).into_owned())
}

/// Orthogonal projector `G = I - Y†Y` onto the null space of `Y`'s row
/// action. Satisfies `Y G = 0`, so any `Z = V G` has `Z Yᵀ = 0`.
pub fn null_projector(y: &Matrix, rtol: Option<f64>) -> Result<Matrix> {
    Ok(null_projector_from(&svd(y)?, rtol))
}

pub(crate) fn null_projector_from(f: &SvdFactors, rtol: Option<f64>) -> Matrix {
    let s = f.cols();
    Matrix::identity(s, s) - f.row_projector(rtol)
}

/// Minimal-norm minimizer of `‖S − F M‖` over `rank(F) ≤ k` for a symmetric
/// PSD `M` (passed together with its pseudo-inverse).
///
/// Returns `[S P]_k M†` with `P = M M†` the projector onto the range of `M`.
/// When the rows of `S` already lie in that range, `S P = S` and this is
/// `[S]_k M†`.
pub fn rank_constrained_lsq(
    s: &Matrix,
    msqrt: &Matrix,
    msqrt_pinv: &Matrix,
    k: usize,
) -> Result<Matrix> {
    let (m, p) = s.shape();
    if msqrt.shape() != (p, p) || msqrt_pinv.shape() != (p, p) {
        return Err(Error::DimensionMismatch(format!(
            "S is {m}x{p}; weight and its pseudo-inverse must be {p}x{p}, got {:?} and {:?}",
            msqrt.shape(),
            msqrt_pinv.shape()
        )));
    }
    check_rank_budget(k, m.min(p), "rank_constrained_lsq")?;
    let range = msqrt * msqrt_pinv;
    let sp = s * range;
    Ok(svd(&sp)?.truncated(k) * msqrt_pinv)
}

/// Number of singular values above `rtol * sigma_1`.
pub fn numerical_rank(a: &Matrix, rtol: f64) -> Result<usize> {
    Ok(svd(a)?.rank(Some(rtol)))
}
