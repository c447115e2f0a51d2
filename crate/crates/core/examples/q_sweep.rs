//! Two-term error at the initial injection against the injection dimension.

use mtt::experiments::{q_sweep, Example3Params};
use mtt::MttConfig;

fn main() -> mtt::Result<()> {
    let cfg = MttConfig { k1: 12, k2: 12, ..Default::default() };
    let table = q_sweep(&[12, 24, 36, 48, 60], &cfg, 20, 7, &Example3Params::default(), None)?;
    for r in &table.rows {
        println!("q = {:>2}: mean {:.2} ± {:.2}", r.q, r.mean_eps0, r.std_eps0);
    }
    println!("Spearman rho {:.2}, one-sided p {:.4}", table.spearman(), table.spearman_p());
    Ok(())
}
