//! A few seeded trials of the Hadamard-noise study at reduced size.

use mtt::experiments::{gen_example1, run_trials, Example1Params};
use mtt::MttConfig;

fn main() -> mtt::Result<()> {
    let p = Example1Params { m: 40, n_samples: 120, noise_amp: 10.0 };
    let cfg = MttConfig { k1: 10, k2: 10, q: 40, max_iter: 100, ..Default::default() };
    let out = run_trials(|seed| gen_example1(seed, &p), &cfg, 8, 42, None)?;
    for r in &out.reports {
        println!(
            "trial {}: GBT1 {:>9.2}  initial {:>9.2}  final {:>9.2}  ({} iterations)",
            r.trial_id,
            r.gbt1_error.unwrap_or(f64::NAN),
            r.step1_error,
            r.final_error,
            r.trace.iterations
        );
    }
    let ag = &out.aggregate;
    println!(
        "median drop vs initial {:.1}%, vs GBT1 {:.1}%",
        100.0 * ag.median_improvement_vs_step1,
        100.0 * ag.median_improvement_vs_gbt1.unwrap_or(f64::NAN)
    );
    Ok(())
}
