//! Sample-based baseline transforms.
//!
//! [`gbt1_fit`] is the single-term rank-reduced transform `X ≈ D C Y`.
//! [`step1_fit`] adds a second term driven by an injection projected onto
//! the null space of `Y`, which is the starting point of the alternating
//! solver in [`crate::solver`].

use crate::error::{Error, Result};
use crate::matops::{self, Matrix, SvdFactors};

/// Relative size of `V G` (against `V`) below which an injection is
/// considered to carry no information outside the row space of `Y`.
pub const DEGENERATE_INJECTION_RTOL: f64 = 1e-10;

/// A decompressor/compressor pair `(D, C)` with `D` having orthonormal
/// columns. The rank budget is the number of columns of `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub d: Matrix,
    pub c: Matrix,
}

impl FactorPair {
    pub fn k(&self) -> usize {
        self.d.ncols()
    }

    /// The rank-constrained map `F = D C`.
    pub fn product(&self) -> Matrix {
        &self.d * &self.c
    }

    /// Applies the pair to a sample matrix: `D (C A)`.
    pub fn apply(&self, a: &Matrix) -> Result<Matrix> {
        if a.nrows() != self.c.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "factor pair expects inputs with {} rows, got {}",
                self.c.ncols(),
                a.nrows()
            )));
        }
        Ok(&self.d * (&self.c * a))
    }
}

/// Step-1 solution: `X ≈ D₁C₁Y + D₂C₂(V G)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTermTransform {
    /// Acts on the observation `Y`.
    pub first: FactorPair,
    /// Acts on the projected injection `Z = V G`.
    pub second: FactorPair,
    /// Null projector of the fitting `Y`.
    pub g: Matrix,
}

impl TwoTermTransform {
    pub fn total_rank(&self) -> usize {
        self.first.k() + self.second.k()
    }

    /// `D₁C₁Y + D₂C₂(V G)`.
    pub fn apply(&self, y: &Matrix, v: &Matrix) -> Result<Matrix> {
        apply_two_term(&self.first, &self.second, &self.g, y, v)
    }
}

pub(crate) fn apply_two_term(
    first: &FactorPair,
    second: &FactorPair,
    g: &Matrix,
    y: &Matrix,
    v: &Matrix,
) -> Result<Matrix> {
    if y.ncols() != g.nrows() || v.ncols() != g.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "transform was fitted on {} samples; got Y with {} and V with {} columns",
            g.nrows(),
            y.ncols(),
            v.ncols()
        )));
    }
    if v.nrows() != second.c.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "injection must have {} rows, got {}",
            second.c.ncols(),
            v.nrows()
        )));
    }
    let z = v * g;
    Ok(first.apply(y)? + second.apply(&z)?)
}

/// Raw and per-entry squared reconstruction error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    /// `‖X − X̂‖²` (squared Frobenius norm).
    pub raw: f64,
    /// `‖X − X̂‖² / (rows · cols)`.
    pub per_entry: f64,
}

pub fn reconstruction_error(x: &Matrix, xhat: &Matrix) -> Result<ErrorReport> {
    if x.shape() != xhat.shape() {
        return Err(Error::DimensionMismatch(format!(
            "reference is {:?}, reconstruction is {:?}",
            x.shape(),
            xhat.shape()
        )));
    }
    let raw = (x - xhat).norm_squared();
    Ok(ErrorReport {
        raw,
        per_entry: raw / (x.nrows() * x.ncols()) as f64,
    })
}

fn check_samples(x: &Matrix, other: &Matrix, name: &str) -> Result<()> {
    if x.ncols() != other.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} samples but {name} has {}",
            x.ncols(),
            other.ncols()
        )));
    }
    Ok(())
}

fn check_budget(k: usize, max: usize, what: &str) -> Result<()> {
    if k == 0 || k > max {
        return Err(Error::InvalidArgument(format!(
            "{what} must lie in 1..={max}, got {k}"
        )));
    }
    Ok(())
}

/// Best rank-`k` pair `(D, C)` for `min ‖X − D C A‖` given the SVD of the
/// input `A` (either `Y` or `Z`).
///
/// `D` spans the leading left singular subspace of
/// `S_A = X Aᵀ ((A Aᵀ)^{1/2})†`, equivalently of `T_A = X Aᵀ A† Xᵀ`, and
/// `C = Dᵀ X A†`.
pub(crate) fn fit_pair(
    x: &Matrix,
    input: &SvdFactors,
    k: usize,
    rtol: Option<f64>,
) -> Result<FactorPair> {
    // X Aᵀ ((AAᵀ)^{1/2})† = X V_r U_rᵀ on the numerical range of A.
    let r = input.rank(rtol);
    let vr = input.vt.rows(0, r).transpose();
    let ur = input.u.columns(0, r);
    let s_a = (x * vr) * ur.transpose();
    let d = matops::left_singular_block(&s_a, k)?;
    let c = (d.transpose() * x) * input.pinv(rtol);
    Ok(FactorPair { d, c })
}

/// Single-term rank-reduced transform `X ≈ D C Y` with `rank(DC) ≤ k`.
pub fn gbt1_fit(x: &Matrix, y: &Matrix, k: usize, rtol: Option<f64>) -> Result<FactorPair> {
    check_samples(x, y, "Y")?;
    check_budget(k, x.nrows().min(y.nrows()), "rank budget k")?;
    matops::ensure_finite(x)?;
    fit_pair(x, &matops::svd(y)?, k, rtol)
}

/// Fits the two-term transform for a fixed injection `V₀`.
///
/// The first pair is the single-term fit on `Y` with budget `k1`; the second
/// is the single-term fit on `Z₀ = V₀ G` with budget `k2`. Because
/// `Z₀ Yᵀ = 0` the two fits decouple.
pub fn step1_fit(
    x: &Matrix,
    y: &Matrix,
    v0: &Matrix,
    k1: usize,
    k2: usize,
    rtol: Option<f64>,
) -> Result<TwoTermTransform> {
    check_samples(x, y, "Y")?;
    check_samples(x, v0, "V")?;
    let m = x.nrows();
    check_budget(k1, m.min(y.nrows()), "first-term budget k1")?;
    check_budget(k2, m.min(v0.nrows()), "second-term budget k2")?;
    matops::ensure_finite(x)?;
    matops::ensure_finite(v0)?;

    let y_svd = matops::svd(y)?;
    let g = matops::null_projector_from(&y_svd, rtol);
    let first = fit_pair(x, &y_svd, k1, rtol)?;
    let z0 = v0 * &g;
    let second = update_pair_on(x, &z0, k2, rtol, v0.norm())?;
    Ok(TwoTermTransform { first, second, g })
}

fn update_pair_on(
    x: &Matrix,
    z: &Matrix,
    k2: usize,
    rtol: Option<f64>,
    scale: f64,
) -> Result<FactorPair> {
    let zn = z.norm();
    if zn == 0.0 || zn <= DEGENERATE_INJECTION_RTOL * scale {
        return Err(Error::DegenerateInjection(format!(
            "projected injection has norm {zn:.3e} against input norm {scale:.3e}; \
             the injection lies in the row space of Y"
        )));
    }
    fit_pair(x, &matops::svd(z)?, k2, rtol)
}

/// Best rank-`k2` pair for `min ‖X − D₂C₂Z‖` with `Z` fixed.
pub fn update_second_factor(
    x: &Matrix,
    z: &Matrix,
    k2: usize,
    rtol: Option<f64>,
) -> Result<FactorPair> {
    check_samples(x, z, "Z")?;
    check_budget(k2, x.nrows().min(z.nrows()), "second-term budget k2")?;
    update_pair_on(x, z, k2, rtol, 0.0)
}
