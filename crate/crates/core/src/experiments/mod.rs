//! Synthetic data generators and trial runners for the three desk-scale
//! experiments: the Hadamard-noise reconstruction study, the image-corpus
//! denoising pipeline, and the injection-dimension sweep.

mod images;
mod qsweep;
pub mod stats;
mod trials;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matops::Matrix;

pub use images::{
    image_corpus_experiment, write_synthetic_corpus, CorpusSpec, ImageMethod, ImageReport,
    ImageRow,
};
pub use qsweep::{q_sweep, QSweepRow, QSweepTable};
pub use trials::{run_trials, Aggregate, TrialFailure, TrialReport, TrialsOutcome};

/// Mixes `base` and `stream` into an independent 64-bit seed (SplitMix64
/// finalizer over the combined words).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-major fill, so a taller matrix from the same stream extends a
/// shorter one row by row.
pub(crate) fn fill_rows(rows: usize, cols: usize, mut f: impl FnMut() -> f64) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| f()).collect();
    Matrix::from_row_slice(rows, cols, &data)
}

// Stream tags.
const STREAM_SOURCE: u64 = 1;
const STREAM_MASK: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_INJECTION: u64 = 4;

/// Parameters of the Hadamard-noise study: `Y = S ∘ X + amp·N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1Params {
    /// Signal and observation dimension.
    pub m: usize,
    pub n_samples: usize,
    pub noise_amp: f64,
}

impl Default for Example1Params {
    fn default() -> Self {
        Self {
            m: 100,
            n_samples: 300,
            noise_amp: 10.0,
        }
    }
}

/// `X, S ~ U[0,1]`, `N ~ N(0,1)` entrywise; returns `(X, S ∘ X + amp·N)`.
pub fn gen_example1(seed: u64, p: &Example1Params) -> (Matrix, Matrix) {
    let (x, _, y) = gen_example1_parts(seed, p);
    (x, y)
}

/// Like [`gen_example1`] but also returns the mask `S`.
pub fn gen_example1_parts(seed: u64, p: &Example1Params) -> (Matrix, Matrix, Matrix) {
    let (m, s) = (p.m, p.n_samples);
    let mut src = rng_for(derive_seed(seed, STREAM_SOURCE));
    let x = fill_rows(m, s, || src.random::<f64>());
    let mut mask = rng_for(derive_seed(seed, STREAM_MASK));
    let smat = fill_rows(m, s, || mask.random::<f64>());
    let noise = example1_noise(seed, p);
    let y = x.component_mul(&smat) + noise * p.noise_amp;
    (x, smat, y)
}

/// The standard-normal matrix `N` used by [`gen_example1`].
pub fn example1_noise(seed: u64, p: &Example1Params) -> Matrix {
    let mut rng = rng_for(derive_seed(seed, STREAM_NOISE));
    fill_rows(p.m, p.n_samples, || StandardNormal.sample(&mut rng))
}

/// Parameters of the injection-dimension sweep: `Y = X + Ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example3Params {
    pub m: usize,
    pub n_samples: usize,
    /// Noise standard deviation.
    pub sigma: f64,
}

impl Default for Example3Params {
    fn default() -> Self {
        Self {
            m: 50,
            n_samples: 100,
            sigma: 2.0,
        }
    }
}

/// `X ~ U[0,1]`, `Ξ ~ N(0, σ²)`, `V ~ N(0,1)` of shape `q x s`.
///
/// `(X, Y)` depend only on `seed`. `V` comes from its own stream and is
/// filled row by row, so the injection for a larger `q` extends the one for
/// a smaller `q`.
pub fn gen_example3(seed: u64, q: usize, p: &Example3Params) -> (Matrix, Matrix, Matrix) {
    let (x, y) = gen_example3_xy(seed, p);
    let mut vr = rng_for(derive_seed(seed, STREAM_INJECTION));
    let v = fill_rows(q, p.n_samples, || StandardNormal.sample(&mut vr));
    (x, y, v)
}

fn gen_example3_xy(seed: u64, p: &Example3Params) -> (Matrix, Matrix) {
    let (x, xi) = gen_example3_parts(seed, p);
    let y = &x + xi;
    (x, y)
}

/// Source `X` and noise `Ξ` behind [`gen_example3`].
pub fn gen_example3_parts(seed: u64, p: &Example3Params) -> (Matrix, Matrix) {
    let (m, s) = (p.m, p.n_samples);
    let mut src = rng_for(derive_seed(seed, STREAM_SOURCE));
    let x = fill_rows(m, s, || src.random::<f64>());
    let mut nr = rng_for(derive_seed(seed, STREAM_NOISE));
    let xi = fill_rows(m, s, || p.sigma * Distribution::<f64>::sample(&StandardNormal, &mut nr));
    (x, xi)
}

/// `(1/s) A Aᵀ`.
pub fn sample_covariance(a: &Matrix) -> Matrix {
    let s = a.ncols().max(1) as f64;
    (a * a.transpose()) / s
}
