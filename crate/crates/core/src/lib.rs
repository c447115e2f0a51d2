//! Rank-reduced multi-term transforms.
//!
//! A two-term transform estimates a signal `X` from an observation `Y` and
//! an auxiliary "injection" `V` as `D₁C₁Y + D₂C₂Z`, where `Z = VG` and `G`
//! projects onto the null space of `Y`'s rows. The first term is the
//! closed-form rank-`k1` estimator; the injection and the second term are
//! refined by alternating best responses that never increase the error.
//!
//! ```
//! use mtt::{experiments, solver::{mtt_fit, MttConfig}};
//!
//! let p = experiments::Example1Params { m: 10, n_samples: 30, noise_amp: 1.0 };
//! let (x, y) = experiments::gen_example1(1, &p);
//! let cfg = MttConfig { k1: 3, k2: 3, q: 10, ..Default::default() };
//! let (model, trace) = mtt_fit(&x, &y, &cfg).unwrap();
//! assert!(trace.last() <= trace.initial());
//! let (u1, u2) = model.compress(&y, &model.v).unwrap();
//! let xhat = model.decompress(&u1, &u2).unwrap();
//! assert_eq!(xhat.shape(), x.shape());
//! ```

pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;
pub mod matops;
pub mod solver;
pub mod transforms;

pub use error::{Error, Result};
pub use matops::Matrix;
pub use solver::{mtt_fit, mtt_init, MttConfig, MttModel, MttTrace};
pub use transforms::{gbt1_fit, step1_fit, FactorPair, TwoTermTransform};
