use rayon::prelude::*;

use super::{derive_seed, gen_example3, stats, Example3Params};
use crate::error::{Error, Result};
use crate::solver::MttConfig;
use crate::transforms;

#[derive(Debug, Clone, PartialEq)]
pub struct QSweepRow {
    pub q: usize,
    pub mean_eps0: f64,
    pub std_eps0: f64,
    pub n_trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QSweepTable {
    /// Sorted by `q`.
    pub rows: Vec<QSweepRow>,
    /// Per-trial two-term errors, `per_trial[row][trial]`.
    pub per_trial: Vec<Vec<f64>>,
}

impl QSweepTable {
    /// Spearman correlation between `q` and the mean error.
    pub fn spearman(&self) -> f64 {
        let (q, e) = self.columns();
        stats::spearman(&q, &e)
    }

    /// One-sided p-value for a negative rank correlation.
    pub fn spearman_p(&self) -> f64 {
        let (q, e) = self.columns();
        stats::spearman_p_negative(&q, &e)
    }

    /// Whether mean errors never increase along the grid.
    pub fn is_non_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].mean_eps0 <= w[0].mean_eps0)
    }

    fn columns(&self) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .map(|r| (r.q as f64, r.mean_eps0))
            .unzip()
    }
}

/// Two-term error at the initial injection as a function of the injection
/// dimension `q`.
///
/// Each trial draws one dataset and one injection stream; every `q` uses the
/// first `q` rows of that stream, so the grid is compared on common random
/// numbers.
pub fn q_sweep(
    q_values: &[usize],
    cfg: &MttConfig,
    n_trials: usize,
    base_seed: u64,
    params: &Example3Params,
    jobs: Option<usize>,
) -> Result<QSweepTable> {
    if q_values.is_empty() {
        return Err(Error::InvalidArgument("q grid is empty".into()));
    }
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be >= 1".into()));
    }
    let mut qs = q_values.to_vec();
    qs.sort_unstable();
    qs.dedup();
    if let Some(&bad) = qs.iter().find(|&&q| q < cfg.k2) {
        return Err(Error::InvalidArgument(format!(
            "every q must be >= k2={}, got {bad}",
            cfg.k2
        )));
    }
    let q_max = *qs.last().expect("non-empty");
    let probe = MttConfig { q: q_max, ..cfg.clone() };
    probe.validate()?;

    let trial = |t: usize| -> Result<Vec<f64>> {
        let seed = derive_seed(base_seed, t as u64);
        let (x, y, v_full) = gen_example3(seed, q_max, params);
        qs.iter()
            .map(|&q| {
                let v = v_full.rows(0, q).into_owned();
                let fit = transforms::step1_fit(&x, &y, &v, cfg.k1, cfg.k2, cfg.pinv_tol)?;
                let xhat = fit.apply(&y, &v)?;
                Ok((&x - xhat).norm_squared())
            })
            .collect()
    };
    let work = || -> Result<Vec<Vec<f64>>> { (0..n_trials).into_par_iter().map(trial).collect() };
    let by_trial = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let per_trial: Vec<Vec<f64>> = (0..qs.len())
        .map(|i| by_trial.iter().map(|row| row[i]).collect())
        .collect();
    let rows = qs
        .iter()
        .zip(&per_trial)
        .map(|(&q, errs)| QSweepRow {
            q,
            mean_eps0: stats::mean(errs),
            std_eps0: stats::std_dev(errs),
            n_trials,
        })
        .collect();
    Ok(QSweepTable { rows, per_trial })
}
