//! Alternating optimization of the multi-term transform.
//!
//! The objective is `f = ‖X − D₁C₁Y − D₂C₂(V G)‖²` with `G = I − Y†Y`.
//! After the closed-form two-term fit at a random injection, each iteration
//! computes two candidate best responses (the injection `V` against the
//! current `(D₂, C₂)`, and `(D₂, C₂)` against the current `Z = V G`), then
//! keeps whichever gives the lower objective. `(D₁, C₁)` stays at its
//! initial value throughout.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matops::{self, Matrix};
use crate::transforms::{self, apply_two_term, FactorPair, TwoTermTransform};

pub use crate::transforms::update_second_factor;

/// Number of fresh injections tried after the first one degenerates.
pub const INJECTION_RETRIES: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct MttConfig {
    /// Rank budget of the term acting on `Y`.
    pub k1: usize,
    /// Rank budget of the term acting on the projected injection.
    pub k2: usize,
    /// Injection dimension (rows of `V`).
    pub q: usize,
    /// Stop once consecutive objectives differ by at most this much.
    pub delta: f64,
    pub max_iter: usize,
    /// Seed for the random initial injection.
    pub seed: u64,
    /// Relative pseudo-inverse cutoff; `None` uses `max(rows, cols)·eps`.
    pub pinv_tol: Option<f64>,
}

impl Default for MttConfig {
    fn default() -> Self {
        Self {
            k1: 25,
            k2: 25,
            q: 100,
            delta: 1e-5,
            max_iter: 500,
            seed: 0,
            pinv_tol: None,
        }
    }
}

impl MttConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.k1 == 0 || self.k2 == 0 {
            return bad(format!("rank budgets must be >= 1 (k1={}, k2={})", self.k1, self.k2));
        }
        if self.q < self.k2 {
            return bad(format!("injection dimension q={} must be >= k2={}", self.q, self.k2));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("tolerance delta must be finite and > 0, got {}", self.delta));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be >= 1".into());
        }
        if let Some(t) = self.pinv_tol {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("pinv_tol must be finite and >= 0, got {t}"));
            }
        }
        Ok(())
    }

    /// Total rank budget `k1 + k2`.
    pub fn k(&self) -> usize {
        self.k1 + self.k2
    }
}

/// Which block an iteration updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Injection best response, `V = (D₂C₂)† X G`.
    Injection,
    /// Second-term best response against the current `Z`.
    SecondFactor,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Injection => "V",
            Branch::SecondFactor => "DC",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Objective values per iteration, starting with the two-term fit at the
/// initial injection.
#[derive(Debug, Clone, PartialEq)]
pub struct MttTrace {
    pub errors: Vec<f64>,
    /// `branches[i]` produced `errors[i + 1]`.
    pub branches: Vec<Branch>,
    pub iterations: usize,
    pub converged: bool,
    /// Seed that produced the initial injection (after any retries).
    pub seed: u64,
}

impl MttTrace {
    pub fn initial(&self) -> f64 {
        self.errors[0]
    }

    pub fn last(&self) -> f64 {
        *self.errors.last().expect("trace always holds the initial error")
    }
}

/// A fitted multi-term transform.
#[derive(Debug, Clone, PartialEq)]
pub struct MttModel {
    pub first: FactorPair,
    pub second: FactorPair,
    /// Injection, `q x s`.
    pub v: Matrix,
    /// Null projector of the fitting `Y`, `s x s`.
    pub g: Matrix,
    /// Cached `V G`.
    pub z: Matrix,
    pub seed: u64,
}

impl MttModel {
    fn from_step1(t: TwoTermTransform, v: Matrix, seed: u64) -> Self {
        let z = &v * &t.g;
        Self {
            first: t.first,
            second: t.second,
            v,
            g: t.g,
            z,
            seed,
        }
    }

    /// Signal dimension `m`.
    pub fn m(&self) -> usize {
        self.first.d.nrows()
    }

    /// Observation dimension `n`.
    pub fn n(&self) -> usize {
        self.first.c.ncols()
    }

    /// Injection dimension `q`.
    pub fn q(&self) -> usize {
        self.second.c.ncols()
    }

    /// Training sample count `s`.
    pub fn s(&self) -> usize {
        self.g.nrows()
    }

    pub fn k1(&self) -> usize {
        self.first.k()
    }

    pub fn k2(&self) -> usize {
        self.second.k()
    }

    /// `(k1 + k2) / min(m, n)`.
    pub fn compression_ratio(&self) -> f64 {
        (self.k1() + self.k2()) as f64 / self.m().min(self.n()) as f64
    }

    pub fn to_transform(&self) -> TwoTermTransform {
        TwoTermTransform {
            first: self.first.clone(),
            second: self.second.clone(),
            g: self.g.clone(),
        }
    }

    /// `D₁C₁Y + D₂C₂(V G)`.
    pub fn apply(&self, y: &Matrix, v: &Matrix) -> Result<Matrix> {
        apply_two_term(&self.first, &self.second, &self.g, y, v)
    }

    /// Compressed codes `(C₁Y, C₂(V G))`.
    pub fn compress(&self, y: &Matrix, v: &Matrix) -> Result<(Matrix, Matrix)> {
        if y.nrows() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "model expects Y with {} rows, got {}",
                self.n(),
                y.nrows()
            )));
        }
        if v.nrows() != self.q() {
            return Err(Error::DimensionMismatch(format!(
                "model expects V with {} rows, got {}",
                self.q(),
                v.nrows()
            )));
        }
        if y.ncols() != self.s() || v.ncols() != self.s() {
            return Err(Error::DimensionMismatch(format!(
                "model projector covers {} samples; got Y with {} and V with {} columns",
                self.s(),
                y.ncols(),
                v.ncols()
            )));
        }
        let u1 = &self.first.c * y;
        let u2 = &self.second.c * (v * &self.g);
        Ok((u1, u2))
    }

    /// `D₁U₁ + D₂U₂`.
    pub fn decompress(&self, u1: &Matrix, u2: &Matrix) -> Result<Matrix> {
        if u1.nrows() != self.k1() || u2.nrows() != self.k2() || u1.ncols() != u2.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "codes must be {}xS and {}xS, got {:?} and {:?}",
                self.k1(),
                self.k2(),
                u1.shape(),
                u2.shape()
            )));
        }
        Ok(&self.first.d * u1 + &self.second.d * u2)
    }
}

/// `compress` as a free function.
pub fn compress(model: &MttModel, y: &Matrix, v: &Matrix) -> Result<(Matrix, Matrix)> {
    model.compress(y, v)
}

/// `decompress` as a free function.
pub fn decompress(model: &MttModel, u1: &Matrix, u2: &Matrix) -> Result<Matrix> {
    model.decompress(u1, u2)
}

/// Minimal-norm best response `V = (D₂C₂)† X G` for `min ‖X − D₂C₂ V G‖`.
///
/// `G` must be an orthogonal projector, so `G† = G`.
pub fn update_injection(
    x: &Matrix,
    second: &FactorPair,
    g: &Matrix,
    rtol: Option<f64>,
) -> Result<Matrix> {
    if x.nrows() != second.d.nrows() || x.ncols() != g.nrows() || !g.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "X is {:?}, D₂ is {:?}, G is {:?}",
            x.shape(),
            second.d.shape(),
            g.shape()
        )));
    }
    let f2_pinv = matops::pinv(&second.product(), rtol)?;
    Ok(f2_pinv * (x * g))
}

/// `(D₂C₂)† X G` with `X G` precomputed. `D₂` from a fit has orthonormal
/// columns, so `(D₂C₂)† = C₂† D₂ᵀ`.
fn injection_from_xg(xg: &Matrix, second: &FactorPair, rtol: Option<f64>) -> Result<Matrix> {
    let c_pinv = matops::svd(&second.c)?.pinv(rtol);
    Ok(c_pinv * (second.d.transpose() * xg))
}

/// Standard-normal `q x s` injection from `seed`.
pub fn random_injection(q: usize, s: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..q * s).map(|_| StandardNormal.sample(&mut rng)).collect();
    Matrix::from_row_slice(q, s, &data)
}

/// Seed of the `attempt`-th retry; attempt 0 is the configured seed.
pub fn retry_seed(seed: u64, attempt: u64) -> u64 {
    if attempt == 0 {
        seed
    } else {
        crate::experiments::derive_seed(seed, 0x5EED_0000 + attempt)
    }
}

fn check_problem(x: &Matrix, y: &Matrix, cfg: &MttConfig) -> Result<()> {
    cfg.validate()?;
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} samples, Y has {}",
            x.ncols(),
            y.ncols()
        )));
    }
    let m = x.nrows();
    if cfg.k1 > m.min(y.nrows()) {
        return Err(Error::InvalidArgument(format!(
            "k1={} exceeds min(m, n)={}",
            cfg.k1,
            m.min(y.nrows())
        )));
    }
    if cfg.k2 > m.min(cfg.q) {
        return Err(Error::InvalidArgument(format!(
            "k2={} exceeds min(m, q)={}",
            cfg.k2,
            m.min(cfg.q)
        )));
    }
    matops::ensure_finite(x)?;
    matops::ensure_finite(y)
}

/// Two-term fit at a seeded standard-normal injection; returns the model and
/// the initial objective. A degenerate draw is retried with derived seeds.
pub fn mtt_init(x: &Matrix, y: &Matrix, cfg: &MttConfig) -> Result<(MttModel, f64)> {
    check_problem(x, y, cfg)?;
    let mut last_err = None;
    for attempt in 0..=INJECTION_RETRIES {
        let seed = retry_seed(cfg.seed, attempt);
        let v0 = random_injection(cfg.q, x.ncols(), seed);
        match init_with_injection(x, y, v0, cfg, seed) {
            Err(e @ Error::DegenerateInjection(_)) => last_err = Some(e),
            other => return other,
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Two-term fit at a caller-supplied injection `v0`.
pub fn mtt_init_with_injection(
    x: &Matrix,
    y: &Matrix,
    v0: Matrix,
    cfg: &MttConfig,
) -> Result<(MttModel, f64)> {
    check_problem(x, y, cfg)?;
    if v0.nrows() != cfg.q {
        return Err(Error::DimensionMismatch(format!(
            "injection has {} rows, configuration says q={}",
            v0.nrows(),
            cfg.q
        )));
    }
    init_with_injection(x, y, v0, cfg, cfg.seed)
}

fn init_with_injection(
    x: &Matrix,
    y: &Matrix,
    v0: Matrix,
    cfg: &MttConfig,
    seed: u64,
) -> Result<(MttModel, f64)> {
    let t = transforms::step1_fit(x, y, &v0, cfg.k1, cfg.k2, cfg.pinv_tol)?;
    let model = MttModel::from_step1(t, v0, seed);
    let err = (x - model.first.apply(y)? - model.second.apply(&model.z)?).norm_squared();
    Ok((model, err))
}

/// Runs the full alternating scheme from a random injection.
pub fn mtt_fit(x: &Matrix, y: &Matrix, cfg: &MttConfig) -> Result<(MttModel, MttTrace)> {
    let (model, eps0) = mtt_init(x, y, cfg)?;
    iterate(x, y, model, eps0, cfg)
}

/// Runs the full alternating scheme from a caller-supplied injection.
pub fn mtt_fit_with_injection(
    x: &Matrix,
    y: &Matrix,
    v0: Matrix,
    cfg: &MttConfig,
) -> Result<(MttModel, MttTrace)> {
    let (model, eps0) = mtt_init_with_injection(x, y, v0, cfg)?;
    iterate(x, y, model, eps0, cfg)
}

/// Objective `‖R₁ − D₂C₂Z‖²` where `R₁ = X − D₁C₁Y` is fixed.
fn objective(r1: &Matrix, second: &FactorPair, z: &Matrix) -> f64 {
    (r1 - &second.d * (&second.c * z)).norm_squared()
}

fn iterate(
    x: &Matrix,
    y: &Matrix,
    mut model: MttModel,
    eps0: f64,
    cfg: &MttConfig,
) -> Result<(MttModel, MttTrace)> {
    let r1 = x - model.first.apply(y)?;
    let mut trace = MttTrace {
        errors: vec![eps0],
        branches: Vec::new(),
        iterations: 0,
        converged: false,
        seed: model.seed,
    };
    let mut current = eps0;
    let xg = x * &model.g;
    let v_rtol = cfg
        .pinv_tol
        .or_else(|| Some(matops::default_rtol(model.m(), model.q())));
    // Each best response depends only on the block it does not update, so a
    // candidate stays valid until the other block changes.
    let mut v_cached: Option<(Matrix, Matrix, f64)> = None;
    let mut dc_cached: Option<(FactorPair, f64)> = None;
    for _ in 0..cfg.max_iter {
        let (v_cand, z_cand, eps_v) = match v_cached.take() {
            Some(c) => c,
            None => {
                let v = injection_from_xg(&xg, &model.second, v_rtol)?;
                let z = &v * &model.g;
                let e = objective(&r1, &model.second, &z);
                (v, z, e)
            }
        };
        let (pair_cand, eps_dc) = match dc_cached.take() {
            Some(c) => c,
            None => {
                let p = update_second_factor(x, &model.z, cfg.k2, cfg.pinv_tol)?;
                let e = objective(&r1, &p, &model.z);
                (p, e)
            }
        };

        // Ties go to the closed-form rank-constrained step.
        let next = if eps_dc <= eps_v {
            model.second = pair_cand.clone();
            dc_cached = Some((pair_cand, eps_dc));
            trace.branches.push(Branch::SecondFactor);
            eps_dc
        } else {
            model.v = v_cand.clone();
            model.z = z_cand.clone();
            v_cached = Some((v_cand, z_cand, eps_v));
            trace.branches.push(Branch::Injection);
            eps_v
        };
        trace.errors.push(next);
        trace.iterations += 1;
        let step = (next - current).abs();
        current = next;
        if step <= cfg.delta {
            trace.converged = true;
            break;
        }
    }
    Ok((model, trace))
}

/// Objective of a model against training data.
pub fn model_objective(model: &MttModel, x: &Matrix, y: &Matrix) -> Result<f64> {
    let xhat = model.first.apply(y)? + model.second.apply(&model.z)?;
    Ok(transforms::reconstruction_error(x, &xhat)?.raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::svd;

    fn randn(rows: usize, cols: usize, seed: u64) -> Matrix {
        random_injection(rows, cols, seed)
    }

    fn small_cfg() -> MttConfig {
        MttConfig {
            k1: 2,
            k2: 2,
            q: 4,
            delta: 1e-10,
            max_iter: 200,
            seed: 3,
            pinv_tol: None,
        }
    }

    #[test]
    fn config_validation() {
        assert!(MttConfig::default().validate().is_ok());
        let bad = [
            MttConfig { k1: 0, ..small_cfg() },
            MttConfig { q: 1, ..small_cfg() },
            MttConfig { delta: 0.0, ..small_cfg() },
            MttConfig { max_iter: 0, ..small_cfg() },
            MttConfig { pinv_tol: Some(-1.0), ..small_cfg() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn init_is_deterministic() {
        let x = randn(6, 12, 1);
        let y = randn(5, 12, 2);
        let (a, ea) = mtt_init(&x, &y, &small_cfg()).unwrap();
        let (b, eb) = mtt_init(&x, &y, &small_cfg()).unwrap();
        assert_eq!(a.v, b.v);
        assert_eq!(ea.to_bits(), eb.to_bits());
    }

    #[test]
    fn init_first_term_exact_when_representable() {
        let y = randn(5, 12, 4);
        let f = randn(6, 2, 5) * randn(2, 5, 6);
        let x = &f * &y;
        let (model, _) = mtt_init(&x, &y, &small_cfg()).unwrap();
        assert!((&x - model.first.apply(&y).unwrap()).norm() < 1e-8 * x.norm());
    }

    #[test]
    fn init_fails_loudly_when_injection_cannot_escape_row_space() {
        // Y square invertible: G = 0, every injection degenerates.
        let y = randn(6, 6, 7);
        let x = randn(6, 6, 8);
        assert!(matches!(
            mtt_init(&x, &y, &small_cfg()),
            Err(Error::DegenerateInjection(_))
        ));
    }

    #[test]
    fn huge_delta_stops_after_one_iteration() {
        let x = randn(6, 12, 9);
        let y = randn(5, 12, 10);
        let cfg = MttConfig { delta: 1e9, ..small_cfg() };
        let (_, trace) = mtt_fit(&x, &y, &cfg).unwrap();
        assert_eq!(trace.errors.len(), 2);
        assert_eq!(trace.iterations, 1);
        assert!(trace.converged);
    }

    #[test]
    fn representable_target_converges_immediately() {
        let y = randn(5, 12, 11);
        let x = randn(6, 2, 12) * randn(2, 5, 13) * &y;
        let (_, trace) = mtt_fit(&x, &y, &MttConfig { delta: 1e-8, ..small_cfg() }).unwrap();
        assert!(trace.initial() < 1e-12 * x.norm_squared().max(1.0) + 1e-16);
        assert!(trace.converged);
        assert_eq!(trace.iterations, 1);
    }

    #[test]
    fn trace_is_monotone_and_consistent() {
        let x = randn(7, 15, 14);
        let y = randn(4, 15, 15);
        let cfg = MttConfig { q: 5, ..small_cfg() };
        let (model, trace) = mtt_fit(&x, &y, &cfg).unwrap();
        for w in trace.errors.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * trace.initial().max(1.0));
        }
        assert_eq!(trace.branches.len(), trace.iterations);
        let final_obj = model_objective(&model, &x, &y).unwrap();
        assert!((final_obj - trace.last()).abs() <= 1e-9 * trace.initial().max(1.0));
        let (u1, u2) = model.compress(&y, &model.v).unwrap();
        assert_eq!(u1.shape(), (2, 15));
        assert_eq!(u2.shape(), (2, 15));
        let xhat = model.decompress(&u1, &u2).unwrap();
        assert!(((&x - &xhat).norm_squared() - trace.last()).abs() <= 1e-9 * trace.initial());
        let applied = model.apply(&y, &model.v).unwrap();
        assert!((applied - xhat).norm() <= 1e-12 * x.norm());
    }

    #[test]
    fn injection_update_solves_consistent_system() {
        let x0 = randn(5, 10, 16);
        let y = randn(3, 10, 17);
        let g = crate::matops::null_projector(&y, None).unwrap();
        let d = svd(&randn(5, 2, 18)).unwrap().u;
        let second = FactorPair { d, c: randn(2, 4, 19) };
        let v0 = randn(4, 10, 20);
        let x = second.product() * &v0 * &g;
        let _ = x0;
        let v = update_injection(&x, &second, &g, None).unwrap();
        assert!((&x - second.product() * &v * &g).norm() < 1e-8 * x.norm());
    }

    #[test]
    fn injection_update_with_invertible_factor_and_identity_projector() {
        let x = randn(3, 6, 21);
        let d = svd(&randn(3, 3, 22)).unwrap().u;
        let second = FactorPair { d, c: randn(3, 3, 23) };
        let g = Matrix::identity(6, 6);
        let v = update_injection(&x, &second, &g, None).unwrap();
        let want = crate::matops::pinv(&second.product(), None).unwrap() * &x;
        assert!((v - want).norm() < 1e-10 * x.norm());
    }

    #[test]
    fn projector_is_its_own_pseudo_inverse() {
        let y = randn(3, 9, 24);
        let g = crate::matops::null_projector(&y, None).unwrap();
        let gp = crate::matops::pinv(&g, None).unwrap();
        assert!((gp - &g).norm() <= 1e-9);
    }

    #[test]
    fn compress_with_zero_injection_gives_zero_code() {
        let x = randn(6, 12, 25);
        let y = randn(5, 12, 26);
        let (model, _) = mtt_fit(&x, &y, &small_cfg()).unwrap();
        let (_, u2) = model.compress(&y, &Matrix::zeros(4, 12)).unwrap();
        assert_eq!(u2, Matrix::zeros(2, 12));
        let zero = model.decompress(&Matrix::zeros(2, 12), &Matrix::zeros(2, 12)).unwrap();
        assert_eq!(zero, Matrix::zeros(6, 12));
        assert!(model.decompress(&Matrix::zeros(3, 12), &Matrix::zeros(2, 12)).is_err());
        assert!(model.compress(&randn(4, 12, 27), &model.v).is_err());
    }
}
