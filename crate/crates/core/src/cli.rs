//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or malformed input,
//! 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiments::{self, CorpusSpec, Example1Params, Example3Params, ImageMethod};
use crate::io;
use crate::solver::{self, MttConfig, MttTrace};

#[derive(Debug, Parser)]
#[command(name = "mtt", version, about = "Rank-reduced multi-term transforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Hadamard-noise reconstruction trials; writes trials.csv and summary.csv.
    Ex1(Ex1Args),
    /// Step-1 error versus injection dimension; writes qsweep.csv.
    Ex3(Ex3Args),
    /// Noisy image corpus compression and reconstruction; writes images.csv,
    /// images_trace.csv and reconstructed PGMs.
    Images(ImagesArgs),
    /// Fit a model to CSV matrices X and Y.
    Fit(FitArgs),
    /// Compress Y (and an injection) with a fitted model; writes u1.csv, u2.csv.
    Compress(CompressArgs),
    /// Reconstruct X from u1/u2 with a fitted model; writes xhat.csv.
    Decompress(DecompressArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Seed for all random draws.
    #[arg(long, env = "MTT_SEED", default_value_t = 0)]
    seed: u64,
    /// Relative pseudo-inverse cutoff [default: max(rows, cols)·eps].
    #[arg(long)]
    pinv_tol: Option<f64>,
}

#[derive(Debug, Args)]
struct Ex1Args {
    #[arg(long, default_value_t = 25)]
    k1: usize,
    #[arg(long, default_value_t = 25)]
    k2: usize,
    /// Injection dimension.
    #[arg(long, default_value_t = 100)]
    q: usize,
    /// Stop when consecutive errors differ by at most this.
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Worker threads [default: logical core count].
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Signal dimension m = n.
    #[arg(long, default_value_t = 100)]
    m: usize,
    /// Number of samples s.
    #[arg(long, default_value_t = 300)]
    samples: usize,
    #[arg(long, default_value_t = 10.0)]
    noise_amp: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Ex3Args {
    #[arg(long, default_value_t = 12)]
    k1: usize,
    #[arg(long, default_value_t = 12)]
    k2: usize,
    /// Comma-separated injection dimensions, each >= k2.
    #[arg(long, default_value = "12,24,36,48,60", value_delimiter = ',')]
    q: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Worker threads [default: logical core count].
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 50)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 2.0)]
    noise_amp: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ImagesArgs {
    /// Directory of PGM images, taken in file-name order.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 107)]
    width: usize,
    #[arg(long, default_value_t = 81)]
    height: usize,
    /// Number of corpus images used.
    #[arg(long, default_value_t = 110)]
    count: usize,
    /// Number of images in the training sample.
    #[arg(long, default_value_t = 55)]
    sample_size: usize,
    #[arg(long, default_value_t = 20)]
    k1: usize,
    #[arg(long, default_value_t = 20)]
    k2: usize,
    /// Injection dimension [default: image height].
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    #[arg(long, default_value_t = 10)]
    max_iter: usize,
    /// Noise standard deviation in [0, 1] intensity units.
    #[arg(long, default_value_t = 1.0)]
    noise_amp: f64,
    /// Squared distance above which a query gets no second term [default: always match].
    #[arg(long)]
    match_tol: Option<f64>,
    /// Distinct random injection blocks [default: sample size].
    #[arg(long)]
    injection_blocks: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Target matrix X (m x s), CSV.
    #[arg(long)]
    x: PathBuf,
    /// Observation matrix Y (n x s), CSV.
    #[arg(long)]
    y: PathBuf,
    /// Output model file.
    #[arg(long)]
    model: PathBuf,
    /// Optional error trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 25)]
    k1: usize,
    #[arg(long, default_value_t = 25)]
    k2: usize,
    /// Injection dimension [default: rows of Y].
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct CompressArgs {
    #[arg(long)]
    model: PathBuf,
    /// Observation matrix Y, CSV.
    #[arg(long)]
    y: PathBuf,
    /// Injection V, CSV [default: the model's fitted injection].
    #[arg(long)]
    v: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct DecompressArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    u1: PathBuf,
    #[arg(long)]
    u2: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::DimensionMismatch(_) => 1,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ex1(a) => cmd_ex1(a),
        Command::Ex3(a) => cmd_ex3(a),
        Command::Images(a) => cmd_images(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Compress(a) => cmd_compress(a),
        Command::Decompress(a) => cmd_decompress(a),
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

fn out_path(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

fn write_trace(w: &mut csv::Writer<fs::File>, id: Option<(usize, u64)>, t: &MttTrace) -> Result<()> {
    for (i, e) in t.errors.iter().enumerate() {
        let branch = if i == 0 { "init" } else { t.branches[i - 1].as_str() };
        let mut rec = Vec::with_capacity(5);
        if let Some((tid, seed)) = id {
            rec.push(tid.to_string());
            rec.push(seed.to_string());
        }
        rec.extend([i.to_string(), fmt_f(*e), branch.to_string()]);
        w.write_record(&rec)?;
    }
    Ok(())
}

fn trace_writer(path: &Path, with_ids: bool) -> Result<csv::Writer<fs::File>> {
    let mut w = csv::Writer::from_path(path)?;
    if with_ids {
        w.write_record(["trial_id", "seed", "iter", "epsilon", "branch"])?;
    } else {
        w.write_record(["iter", "epsilon", "branch"])?;
    }
    Ok(w)
}

fn cmd_ex1(a: Ex1Args) -> Result<()> {
    let cfg = MttConfig {
        k1: a.k1,
        k2: a.k2,
        q: a.q,
        delta: a.delta,
        max_iter: a.max_iter,
        seed: a.common.seed,
        pinv_tol: a.common.pinv_tol,
    };
    cfg.validate()?;
    let p = Example1Params {
        m: a.m,
        n_samples: a.samples,
        noise_amp: a.noise_amp,
    };
    if p.m == 0 || p.n_samples == 0 || !(p.noise_amp >= 0.0) {
        return Err(Error::InvalidArgument(
            "m and samples must be >= 1 and noise-amp >= 0".into(),
        ));
    }
    if a.trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let trials_path = out_path(&a.out_dir, "trials.csv")?;
    let summary_path = a.out_dir.join("summary.csv");

    let out = experiments::run_trials(
        |s| experiments::gen_example1(s, &p),
        &cfg,
        a.trials,
        cfg.seed,
        a.jobs,
    )?;

    let mut w = trace_writer(&trials_path, true)?;
    for r in &out.reports {
        write_trace(&mut w, Some((r.trial_id, r.seed)), &r.trace)?;
    }
    w.flush()?;

    let ag = &out.aggregate;
    let c = cfg.k() as f64 / p.m as f64;
    let mut s = csv::Writer::from_path(&summary_path)?;
    s.write_record([
        "k1",
        "k2",
        "q",
        "c",
        "delta",
        "max_iter",
        "seed",
        "trials",
        "m",
        "n",
        "s",
        "noise_amp",
        "median_gbt1",
        "median_eps0",
        "median_final",
        "median_improvement_vs_gbt1",
        "median_improvement_vs_eps0",
        "median_iterations",
        "n_converged",
        "n_failed",
    ])?;
    s.write_record([
        cfg.k1.to_string(),
        cfg.k2.to_string(),
        cfg.q.to_string(),
        fmt_f(c),
        fmt_f(cfg.delta),
        cfg.max_iter.to_string(),
        cfg.seed.to_string(),
        a.trials.to_string(),
        p.m.to_string(),
        p.m.to_string(),
        p.n_samples.to_string(),
        fmt_f(p.noise_amp),
        fmt_opt(ag.median_gbt1),
        fmt_f(ag.median_step1),
        fmt_f(ag.median_final),
        fmt_opt(ag.median_improvement_vs_gbt1),
        fmt_f(ag.median_improvement_vs_step1),
        fmt_f(ag.median_iterations),
        ag.n_converged.to_string(),
        ag.n_failed.to_string(),
    ])?;
    s.flush()?;

    for f in &out.failures {
        eprintln!("trial {} (seed {}) failed: {}", f.trial_id, f.seed, f.error);
    }
    println!("trials ok/failed     {}/{}", ag.n_ok, ag.n_failed);
    println!("median GBT1 error    {}", fmt_opt(ag.median_gbt1));
    println!("median initial error {:.6e}", ag.median_step1);
    println!("median final error   {:.6e}", ag.median_final);
    if let Some(g) = ag.median_improvement_vs_gbt1 {
        println!("median drop vs GBT1  {:.1}%", 100.0 * g);
    }
    println!("median drop vs init  {:.1}%", 100.0 * ag.median_improvement_vs_step1);
    Ok(())
}

fn cmd_ex3(a: Ex3Args) -> Result<()> {
    if let Some(bad) = a.q.iter().find(|&&q| q < a.k2) {
        return Err(Error::InvalidArgument(format!(
            "--q value {bad} is below k2={}",
            a.k2
        )));
    }
    let cfg = MttConfig {
        k1: a.k1,
        k2: a.k2,
        q: a.q.iter().copied().max().unwrap_or(a.k2),
        seed: a.common.seed,
        pinv_tol: a.common.pinv_tol,
        ..Default::default()
    };
    cfg.validate()?;
    let p = Example3Params {
        m: a.m,
        n_samples: a.samples,
        sigma: a.noise_amp,
    };
    let path = out_path(&a.out_dir, "qsweep.csv")?;
    let table = experiments::q_sweep(&a.q, &cfg, a.trials, cfg.seed, &p, a.jobs)?;

    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["q", "mean_eps0", "std_eps0", "n_trials"])?;
    for r in &table.rows {
        w.write_record([
            r.q.to_string(),
            fmt_f(r.mean_eps0),
            fmt_f(r.std_eps0),
            r.n_trials.to_string(),
        ])?;
    }
    w.flush()?;

    println!("{:>6}  {:>14}  {:>12}", "q", "mean eps0", "std");
    for r in &table.rows {
        println!("{:>6}  {:>14.6e}  {:>12.4e}", r.q, r.mean_eps0, r.std_eps0);
    }
    if table.rows.len() > 1 {
        println!(
            "spearman rho = {:.3}, one-sided p = {:.4}, non-increasing = {}",
            table.spearman(),
            table.spearman_p(),
            table.is_non_increasing()
        );
    }
    Ok(())
}

fn cmd_images(a: ImagesArgs) -> Result<()> {
    let spec = CorpusSpec {
        dir: a.corpus,
        width: a.width,
        height: a.height,
        count: a.count,
        sample_size: a.sample_size,
        noise_amp: a.noise_amp,
        match_tol: a.match_tol,
        injection_blocks: a.injection_blocks,
    };
    spec.validate()?;
    let cfg = MttConfig {
        k1: a.k1,
        k2: a.k2,
        q: a.q.unwrap_or(a.height),
        delta: a.delta,
        max_iter: a.max_iter,
        seed: a.common.seed,
        pinv_tol: a.common.pinv_tol,
    };
    cfg.validate()?;
    let table_path = out_path(&a.out_dir, "images.csv")?;
    let rep = experiments::image_corpus_experiment(&spec, &cfg, Some(&a.out_dir.join("recon")))?;

    let mut w = csv::Writer::from_path(&table_path)?;
    w.write_record([
        "index",
        "file",
        "matched_sample",
        "match_distance",
        "matched",
        "in_sample",
        "mse_gbt1",
        "mse_gbt2",
        "mse_mtt",
    ])?;
    for r in &rep.rows {
        let name = r
            .file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        w.write_record([
            r.index.to_string(),
            name,
            r.matched_sample.to_string(),
            fmt_f(r.match_distance),
            r.matched.to_string(),
            r.in_sample.to_string(),
            fmt_f(r.mse[0]),
            fmt_f(r.mse[1]),
            fmt_f(r.mse[2]),
        ])?;
    }
    w.flush()?;
    let mut t = trace_writer(&a.out_dir.join("images_trace.csv"), false)?;
    write_trace(&mut t, None, &rep.trace)?;
    t.flush()?;

    println!("{:<6}  {:>12}  {:>12}", "method", "mean MSE", "median MSE");
    for m in ImageMethod::ALL {
        println!("{:<6}  {:>12.4e}  {:>12.4e}", m.as_str(), rep.mean(m), rep.median(m));
    }
    println!(
        "ordering MSE_MTT < MSE_GBT2 < MSE_GBT1: {}",
        if rep.ordering_holds() { "holds" } else { "violated" }
    );
    Ok(())
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let x = io::read_matrix(&a.x)?;
    let y = io::read_matrix(&a.y)?;
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} columns but Y has {}",
            x.ncols(),
            y.ncols()
        )));
    }
    let cfg = MttConfig {
        k1: a.k1,
        k2: a.k2,
        q: a.q.unwrap_or(y.nrows()),
        delta: a.delta,
        max_iter: a.max_iter,
        seed: a.common.seed,
        pinv_tol: a.common.pinv_tol,
    };
    let (model, trace) = solver::mtt_fit(&x, &y, &cfg)?;
    io::write_model(&a.model, &model)?;
    if let Some(p) = &a.trace {
        let mut w = trace_writer(p, false)?;
        write_trace(&mut w, None, &trace)?;
        w.flush()?;
    }
    println!(
        "initial error {:.6e}, final error {:.6e}, {} iterations, converged = {}",
        trace.initial(),
        trace.last(),
        trace.iterations,
        trace.converged
    );
    Ok(())
}

fn cmd_compress(a: CompressArgs) -> Result<()> {
    let model = io::read_model(&a.model)?;
    let y = io::read_matrix(&a.y)?;
    let v = match &a.v {
        Some(p) => io::read_matrix(p)?,
        None => model.v.clone(),
    };
    let (u1, u2) = model.compress(&y, &v)?;
    io::write_matrix(&out_path(&a.out_dir, "u1.csv")?, &u1)?;
    io::write_matrix(&a.out_dir.join("u2.csv"), &u2)?;
    Ok(())
}

fn cmd_decompress(a: DecompressArgs) -> Result<()> {
    let model = io::read_model(&a.model)?;
    let u1 = io::read_matrix(&a.u1)?;
    let u2 = io::read_matrix(&a.u2)?;
    let xhat = model.decompress(&u1, &u2)?;
    io::write_matrix(&out_path(&a.out_dir, "xhat.csv")?, &xhat)?;
    Ok(())
}
