#![allow(dead_code)]

use mtt::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randn(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Random matrix of rank at most `r`.
pub fn low_rank(rng: &mut impl Rng, rows: usize, cols: usize, r: usize) -> Matrix {
    randn(rng, rows, r) * randn(rng, r, cols)
}

/// Pseudo-inverse through nalgebra's own routine, independent of the crate's
/// kernel. Singular values below `1e-12·σ₁` count as zero.
pub fn ref_pinv(a: &Matrix) -> Matrix {
    let smax = a.singular_values().max();
    if smax == 0.0 {
        return Matrix::zeros(a.ncols(), a.nrows());
    }
    a.clone().pseudo_inverse(1e-12 * smax).expect("pseudo-inverse")
}

/// Singular values straight from nalgebra, sorted descending.
pub fn ref_singular_values(a: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// `‖X − D₁C₁Y − D₂C₂Z‖²` written out directly.
pub fn two_term_objective(
    x: &Matrix,
    y: &Matrix,
    z: &Matrix,
    d1: &Matrix,
    c1: &Matrix,
    d2: &Matrix,
    c2: &Matrix,
) -> f64 {
    (x - d1 * (c1 * y) - d2 * (c2 * z)).norm_squared()
}

/// Plain alternating least squares over the four factors, each block solved
/// by a reference pseudo-inverse. Returns the refined factors.
pub fn als_refine(
    x: &Matrix,
    y: &Matrix,
    z: &Matrix,
    start: [Matrix; 4],
    sweeps: usize,
) -> [Matrix; 4] {
    let [mut d1, mut c1, mut d2, mut c2] = start;
    for _ in 0..sweeps {
        let r1 = x - &d2 * (&c2 * z);
        let c1y = &c1 * y;
        d1 = &r1 * ref_pinv(&c1y);
        c1 = ref_pinv(&d1) * &r1 * ref_pinv(y);
        let r2 = x - &d1 * (&c1 * y);
        let c2z = &c2 * z;
        d2 = &r2 * ref_pinv(&c2z);
        c2 = ref_pinv(&d2) * &r2 * ref_pinv(z);
    }
    [d1, c1, d2, c2]
}

pub fn rel(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
