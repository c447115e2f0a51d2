//! Alternating fit of the two-term transform and its error trace.

use mtt::experiments::{gen_example1, Example1Params};
use mtt::{gbt1_fit, mtt_fit, MttConfig};

fn main() -> mtt::Result<()> {
    let p = Example1Params { m: 40, n_samples: 120, noise_amp: 4.0 };
    let (x, y) = gen_example1(3, &p);
    let cfg = MttConfig { k1: 8, k2: 8, q: 40, max_iter: 100, seed: 3, ..Default::default() };

    let single = gbt1_fit(&x, &y, cfg.k(), None)?;
    let single_err = (&x - single.product() * &y).norm_squared();
    let (model, trace) = mtt_fit(&x, &y, &cfg)?;

    println!("single-term error at rank {}: {single_err:.3}", cfg.k());
    for (i, e) in trace.errors.iter().enumerate().step_by(10) {
        println!("iter {i:>3}: {e:.3}");
    }
    println!(
        "final {:.3} after {} iterations (converged = {}), compression ratio {:.2}",
        trace.last(),
        trace.iterations,
        trace.converged,
        model.compression_ratio()
    );
    Ok(())
}
