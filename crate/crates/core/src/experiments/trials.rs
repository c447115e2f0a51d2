use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::{derive_seed, stats};
use crate::error::{Error, Result};
use crate::matops::Matrix;
use crate::solver::{self, MttConfig, MttTrace};
use crate::transforms;

/// One seeded run: fresh data, fresh initial injection, baselines, and the
/// full alternating fit.
#[derive(Debug, Clone)]
pub struct TrialReport {
    pub trial_id: usize,
    /// Seed handed to the data generator.
    pub seed: u64,
    /// Configuration actually used (its seed drives the initial injection).
    pub config: MttConfig,
    /// Single-term error at the total budget `k1 + k2`, when that budget is
    /// admissible for the data shape.
    pub gbt1_error: Option<f64>,
    /// Two-term error at the initial injection.
    pub step1_error: f64,
    pub trace: MttTrace,
    pub final_error: f64,
    pub wall_time: Duration,
}

impl TrialReport {
    /// `(ε⁽⁰⁾ − final) / ε⁽⁰⁾`.
    pub fn improvement_vs_step1(&self) -> f64 {
        relative_drop(self.step1_error, self.final_error)
    }

    /// `(GBT1 − final) / GBT1`.
    pub fn improvement_vs_gbt1(&self) -> Option<f64> {
        self.gbt1_error.map(|g| relative_drop(g, self.final_error))
    }
}

fn relative_drop(from: f64, to: f64) -> f64 {
    if from == 0.0 {
        0.0
    } else {
        (from - to) / from
    }
}

#[derive(Debug, Clone)]
pub struct TrialFailure {
    pub trial_id: usize,
    pub seed: u64,
    pub error: String,
}

/// Per-iteration quantiles of the error curves. Runs that stopped earlier
/// carry their last value forward.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub iter: usize,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub n_ok: usize,
    pub n_failed: usize,
    pub n_converged: usize,
    pub median_step1: f64,
    pub median_final: f64,
    pub median_gbt1: Option<f64>,
    pub median_improvement_vs_step1: f64,
    pub median_improvement_vs_gbt1: Option<f64>,
    pub median_iterations: f64,
    pub bands: Vec<Band>,
}

impl Aggregate {
    fn from_reports(reports: &[TrialReport], n_failed: usize) -> Self {
        let col = |f: &dyn Fn(&TrialReport) -> f64| -> Vec<f64> { reports.iter().map(f).collect() };
        let gbt1: Option<Vec<f64>> = reports.iter().map(|r| r.gbt1_error).collect();
        let gbt1_impr: Option<Vec<f64>> =
            reports.iter().map(TrialReport::improvement_vs_gbt1).collect();
        let longest = reports.iter().map(|r| r.trace.errors.len()).max().unwrap_or(0);
        let bands = (0..longest)
            .map(|i| {
                let at: Vec<f64> = reports
                    .iter()
                    .map(|r| r.trace.errors[i.min(r.trace.errors.len() - 1)])
                    .collect();
                Band {
                    iter: i,
                    q10: stats::quantile(&at, 0.1),
                    q50: stats::median(&at),
                    q90: stats::quantile(&at, 0.9),
                }
            })
            .collect();
        Self {
            n_ok: reports.len(),
            n_failed,
            n_converged: reports.iter().filter(|r| r.trace.converged).count(),
            median_step1: stats::median(&col(&|r| r.step1_error)),
            median_final: stats::median(&col(&|r| r.final_error)),
            median_gbt1: gbt1.map(|v| stats::median(&v)),
            median_improvement_vs_step1: stats::median(&col(&TrialReport::improvement_vs_step1)),
            median_improvement_vs_gbt1: gbt1_impr.map(|v| stats::median(&v)),
            median_iterations: stats::median(&col(&|r| r.trace.iterations as f64)),
            bands,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialsOutcome {
    /// Successful trials in trial-id order.
    pub reports: Vec<TrialReport>,
    pub failures: Vec<TrialFailure>,
    pub aggregate: Aggregate,
}

fn run_one<G>(generator: &G, cfg: &MttConfig, base_seed: u64, trial_id: usize) -> Result<TrialReport>
where
    G: Fn(u64) -> (Matrix, Matrix),
{
    let started = Instant::now();
    let seed = derive_seed(base_seed, trial_id as u64);
    let (x, y) = generator(seed);
    let config = MttConfig {
        seed: derive_seed(seed, 0x1A7E_C7ED),
        ..cfg.clone()
    };
    let k = config.k();
    let gbt1_error = if k <= x.nrows().min(y.nrows()) {
        let pair = transforms::gbt1_fit(&x, &y, k, config.pinv_tol)?;
        Some((&x - pair.apply(&y)?).norm_squared())
    } else {
        None
    };
    let (_, trace) = solver::mtt_fit(&x, &y, &config)?;
    Ok(TrialReport {
        trial_id,
        seed,
        gbt1_error,
        step1_error: trace.initial(),
        final_error: trace.last(),
        trace,
        config,
        wall_time: started.elapsed(),
    })
}

/// Runs `n_trials` independent trials. Trial `t` draws its data from
/// `generator(derive_seed(base_seed, t))`.
///
/// `jobs` bounds the worker threads (`None` uses rayon's global pool).
/// Results do not depend on scheduling. Individual failures are collected;
/// the call fails only when every trial fails.
pub fn run_trials<G>(
    generator: G,
    cfg: &MttConfig,
    n_trials: usize,
    base_seed: u64,
    jobs: Option<usize>,
) -> Result<TrialsOutcome>
where
    G: Fn(u64) -> (Matrix, Matrix) + Sync,
{
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be >= 1".into()));
    }
    cfg.validate()?;
    let work = || -> Vec<(usize, Result<TrialReport>)> {
        (0..n_trials)
            .into_par_iter()
            .map(|t| (t, run_one(&generator, cfg, base_seed, t)))
            .collect()
    };
    let results = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut reports = Vec::with_capacity(n_trials);
    let mut failures = Vec::new();
    for (t, r) in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => failures.push(TrialFailure {
                trial_id: t,
                seed: derive_seed(base_seed, t as u64),
                error: e.to_string(),
            }),
        }
    }
    if reports.is_empty() {
        return Err(Error::AllTrialsFailed(n_trials));
    }
    let aggregate = Aggregate::from_reports(&reports, failures.len());
    Ok(TrialsOutcome {
        reports,
        failures,
        aggregate,
    })
}
