//! Single-term rank-reduced transform `X ≈ D C Y` at several budgets.

use mtt::experiments::{gen_example1, Example1Params};
use mtt::gbt1_fit;

fn main() -> mtt::Result<()> {
    let p = Example1Params { m: 40, n_samples: 120, noise_amp: 2.0 };
    let (x, y) = gen_example1(1, &p);
    for k in [5, 10, 20, 40] {
        let fit = gbt1_fit(&x, &y, k, None)?;
        let err = (&x - fit.product() * &y).norm_squared();
        println!("k = {k:>2}: ‖X − DCY‖² = {err:.3}");
    }
    Ok(())
}
