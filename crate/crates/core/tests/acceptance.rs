//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use mtt::experiments::{self, CorpusSpec, Example1Params, Example3Params, TrialsOutcome};
use mtt::matops;
use mtt::solver::{self, MttConfig, MttModel};
use mtt::transforms;
use mtt::Matrix;
use rand::Rng;

const BASE_SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn example1_run() -> (TrialsOutcome, Duration) {
    let cfg = MttConfig::default();
    let p = Example1Params::default();
    let started = Instant::now();
    let out = experiments::run_trials(|s| experiments::gen_example1(s, &p), &cfg, 100, BASE_SEED, None)
        .expect("example-1 trials");
    (out, started.elapsed())
}

fn c1_monotone(out: &TrialsOutcome, elapsed: Duration) -> Verdict {
    let mut worst = f64::NEG_INFINITY;
    let mut bad = 0;
    for r in &out.reports {
        let e = &r.trace.errors;
        let slack = 1e-9 * e[0];
        for w in e.windows(2) {
            let rise = w[1] - w[0];
            worst = worst.max(rise / e[0]);
            if rise > slack {
                bad += 1;
            }
        }
    }
    let secs = elapsed.as_secs_f64();
    verdict(
        out.reports.len() == 100 && bad == 0 && secs < 300.0,
        format!(
            "{} trials ok, {} violating steps, max relative rise {:.2e}, {:.0} s (< 300 s)",
            out.reports.len(),
            bad,
            worst,
            secs
        ),
    )
}

fn c2_ratios(out: &TrialsOutcome) -> Verdict {
    let a = &out.aggregate;
    let vs_gbt1 = a.median_improvement_vs_gbt1.unwrap_or(f64::NAN);
    let vs_init = a.median_improvement_vs_step1;
    let gbt1 = a.median_gbt1.unwrap_or(f64::NAN);
    verdict(
        vs_gbt1 >= 0.25 && vs_init >= 0.10 && gbt1 > a.median_step1,
        format!(
            "median drop vs GBT1 {:.3} (>= 0.25), vs initial {:.3} (>= 0.10); \
             median GBT1 {:.1} > median initial {:.1}; median final {:.1}",
            vs_gbt1, vs_init, gbt1, a.median_step1, a.median_final
        ),
    )
}

struct Instance {
    x: Matrix,
    y: Matrix,
    v0: Matrix,
    k1: usize,
    k2: usize,
}

fn small_instance(rng: &mut impl Rng) -> Instance {
    let m = rng.random_range(3..=8);
    let n = rng.random_range(2..=6);
    let q = rng.random_range(2..=5);
    let s = rng.random_range(n + 2..=16);
    let k1 = rng.random_range(1..=3.min(m).min(n));
    let k2 = rng.random_range(1..=3.min(m).min(q));
    Instance {
        x: randn(rng, m, s),
        y: randn(rng, n, s),
        v0: randn(rng, q, s),
        k1,
        k2,
    }
}

fn jitter(rng: &mut impl Rng, a: &Matrix, eps: f64) -> Matrix {
    let scale = eps * a.norm().max(1.0) / ((a.len() as f64).sqrt());
    a + randn(rng, a.nrows(), a.ncols()) * scale
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn c3_step1_optimal() -> Verdict {
    let mut rng = rng(BASE_SEED ^ 3);
    let mut beaten = 0;
    let mut worst_als = 0.0f64;
    for _ in 0..50 {
        let inst = small_instance(&mut rng);
        let t = transforms::step1_fit(&inst.x, &inst.y, &inst.v0, inst.k1, inst.k2, None)
            .expect("step-1 fit");
        let z = &inst.v0 * &t.g;
        let (d1, c1, d2, c2) = (&t.first.d, &t.first.c, &t.second.d, &t.second.c);
        let best = two_term_objective(&inst.x, &inst.y, &z, d1, c1, d2, c2);
        for i in 0..1000 {
            let cand = if i % 2 == 0 {
                let eps = log_uniform(&mut rng, 1e-4, 1.0);
                [
                    jitter(&mut rng, d1, eps),
                    jitter(&mut rng, c1, eps),
                    jitter(&mut rng, d2, eps),
                    jitter(&mut rng, c2, eps),
                ]
            } else {
                [
                    randn(&mut rng, d1.nrows(), d1.ncols()),
                    randn(&mut rng, c1.nrows(), c1.ncols()) * 0.3,
                    randn(&mut rng, d2.nrows(), d2.ncols()),
                    randn(&mut rng, c2.nrows(), c2.ncols()) * 0.3,
                ]
            };
            let f = two_term_objective(&inst.x, &inst.y, &z, &cand[0], &cand[1], &cand[2], &cand[3]);
            if f < best * (1.0 - 1e-12) {
                beaten += 1;
            }
        }
        let refined = als_refine(
            &inst.x,
            &inst.y,
            &z,
            [d1.clone(), c1.clone(), d2.clone(), c2.clone()],
            200,
        );
        let f_als = two_term_objective(
            &inst.x, &inst.y, &z, &refined[0], &refined[1], &refined[2], &refined[3],
        );
        worst_als = worst_als.max((best - f_als) / best);
    }
    verdict(
        beaten == 0 && worst_als <= 1e-6,
        format!(
            "50 instances x 1000 candidates: {beaten} beat the closed form; \
             max relative ALS improvement {worst_als:.2e} (<= 1e-6)"
        ),
    )
}

fn check_identities(model: &MttModel, x: &Matrix, y: &Matrix) -> (f64, f64, f64) {
    let z = &model.z;
    let zy = (z * y.transpose()).norm() / (z.norm() * y.norm());
    let a = model.first.apply(y).unwrap();
    let b = model.second.apply(z).unwrap();
    let lhs = (x - &a - &b).norm_squared();
    let rhs = (x - &a).norm_squared() + (x - &b).norm_squared() - x.norm_squared();
    let decomp = (lhs - rhs).abs() / x.norm_squared();
    let (n, q) = (y.nrows(), z.nrows());
    let mut w = Matrix::zeros(n + q, y.ncols());
    w.rows_mut(0, n).copy_from(y);
    w.rows_mut(n, q).copy_from(z);
    let wwt = &w * w.transpose();
    let off = wwt.view((0, n), (n, q)).norm().max(wwt.view((n, 0), (q, n)).norm());
    (zy, decomp, off / (y.norm() * z.norm()))
}

fn c4_identities() -> Verdict {
    let mut rng = rng(BASE_SEED ^ 4);
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut count = 0;
    let mut record = |m: &MttModel, x: &Matrix, y: &Matrix| {
        let (a, b, c) = check_identities(m, x, y);
        worst = (worst.0.max(a), worst.1.max(b), worst.2.max(c));
    };
    for i in 0..30 {
        let inst = small_instance(&mut rng);
        let cfg = MttConfig {
            k1: inst.k1,
            k2: inst.k2,
            q: inst.v0.nrows(),
            delta: 1e-10,
            max_iter: 200,
            seed: i,
            pinv_tol: None,
        };
        let (init, _) = solver::mtt_init(&inst.x, &inst.y, &cfg).unwrap();
        record(&init, &inst.x, &inst.y);
        let (m, _) = solver::mtt_fit(&inst.x, &inst.y, &cfg).unwrap();
        record(&m, &inst.x, &inst.y);
        count += 2;
    }
    let p1 = Example1Params::default();
    for t in 0..3 {
        let (x, y) = experiments::gen_example1(BASE_SEED + t, &p1);
        let cfg = MttConfig { max_iter: 40, seed: t, ..Default::default() };
        let (m, _) = solver::mtt_fit(&x, &y, &cfg).unwrap();
        record(&m, &x, &y);
        count += 1;
    }
    let p3 = Example3Params::default();
    for t in 0..3 {
        let (x, y, _) = experiments::gen_example3(BASE_SEED + t, 12, &p3);
        let cfg = MttConfig { k1: 12, k2: 12, q: 36, seed: t, ..Default::default() };
        let (m, _) = solver::mtt_fit(&x, &y, &cfg).unwrap();
        record(&m, &x, &y);
        count += 1;
    }
    verdict(
        worst.0 <= 1e-8 && worst.1 <= 1e-7 && worst.2 <= 1e-8,
        format!(
            "{count} models: max ‖ZYᵀ‖/(‖Z‖‖Y‖) {:.1e} (<= 1e-8), decomposition gap/‖X‖² {:.1e} \
             (<= 1e-7), off-diagonal Gram block {:.1e} (<= 1e-8)",
            worst.0, worst.1, worst.2
        ),
    )
}

fn injection_objective(r1: &Matrix, m: &MttModel, v: &Matrix) -> f64 {
    (r1 - &m.second.d * (&m.second.c * (v * &m.g))).norm_squared()
}

fn c5_injection_best_response() -> Verdict {
    let mut rng = rng(BASE_SEED ^ 5);
    let mut beaten = 0;
    let mut min_control_hits = usize::MAX;
    let mut checks = 0;
    for i in 0..20 {
        let inst = small_instance(&mut rng);
        let cfg = MttConfig {
            k1: inst.k1,
            k2: inst.k2,
            q: inst.v0.nrows(),
            seed: i,
            ..Default::default()
        };
        let (mut model, _) = solver::mtt_init(&inst.x, &inst.y, &cfg).unwrap();
        let r1 = &inst.x - model.first.apply(&inst.y).unwrap();
        for _ in 0..3 {
            let v = solver::update_injection(&inst.x, &model.second, &model.g, None).unwrap();
            let best = injection_objective(&r1, &model, &v);
            // A deliberately displaced point must be beaten by the same family
            // of perturbations, otherwise the check has no power.
            let control = &v + (randn(&mut rng, v.nrows(), v.ncols()) * &model.g) * 0.1;
            let f_control = injection_objective(&r1, &model, &control);
            let mut control_hits = 0;
            for _ in 0..1000 {
                let eps = log_uniform(&mut rng, 1e-4, 1.0);
                let delta = randn(&mut rng, v.nrows(), v.ncols()) * (eps * v.norm().max(1.0) / (v.len() as f64).sqrt());
                if injection_objective(&r1, &model, &(&v + &delta)) < best * (1.0 - 1e-12) {
                    beaten += 1;
                }
                if injection_objective(&r1, &model, &(&control + &delta)) < f_control {
                    control_hits += 1;
                }
            }
            min_control_hits = min_control_hits.min(control_hits);
            checks += 1;
            model.z = &v * &model.g;
            model.v = v;
            model.second =
                solver::update_second_factor(&inst.x, &model.z, cfg.k2, None).unwrap();
        }
    }
    verdict(
        beaten == 0 && min_control_hits > 0,
        format!(
            "{checks} updates on 20 instances x 1000 perturbations: {beaten} improvements; \
             displaced control point improved by >= {min_control_hits}/1000 perturbations"
        ),
    )
}

fn c6_stationarity() -> Verdict {
    let mut rng = rng(BASE_SEED ^ 6);
    let mut worst = 0.0f64;
    let mut converged = 0;
    for i in 0..20 {
        let inst = small_instance(&mut rng);
        let cfg = MttConfig {
            k1: inst.k1,
            k2: inst.k2,
            q: inst.v0.nrows(),
            delta: 1e-8,
            max_iter: 200_000,
            seed: i,
            pinv_tol: None,
        };
        let (model, trace) = solver::mtt_fit(&inst.x, &inst.y, &cfg).unwrap();
        if trace.converged {
            converged += 1;
        }
        let f = solver::model_objective(&model, &inst.x, &inst.y).unwrap();
        let v = solver::update_injection(&inst.x, &model.second, &model.g, None).unwrap();
        let mut m_v = model.clone();
        m_v.z = &v * &model.g;
        m_v.v = v;
        let f_v = solver::model_objective(&m_v, &inst.x, &inst.y).unwrap();
        let mut m_dc = model.clone();
        m_dc.second = solver::update_second_factor(&inst.x, &model.z, cfg.k2, None).unwrap();
        let f_dc = solver::model_objective(&m_dc, &inst.x, &inst.y).unwrap();
        let e0 = trace.initial();
        worst = worst.max((f_v - f).abs() / e0).max((f_dc - f).abs() / e0);
    }
    verdict(
        converged == 20 && worst <= 1e-7,
        format!(
            "{converged}/20 converged at delta 1e-8; max extra-update change / initial error \
             {worst:.2e} (<= 1e-7)"
        ),
    )
}

fn c7_q_trend() -> Verdict {
    let cfg = MttConfig { k1: 12, k2: 12, q: 60, ..Default::default() };
    let started = Instant::now();
    let t = experiments::q_sweep(&[12, 24, 36, 48, 60], &cfg, 100, BASE_SEED, &Example3Params::default(), None)
        .expect("q sweep");
    let means: Vec<String> = t.rows.iter().map(|r| format!("{:.1}", r.mean_eps0)).collect();
    let (rho, p) = (t.spearman(), t.spearman_p());
    let secs = started.elapsed().as_secs_f64();
    verdict(
        t.is_non_increasing() && rho < 0.0 && p < 0.01 && secs < 600.0,
        format!(
            "mean initial error over q=12..60: [{}]; rho {rho:.2}, p {p:.4} (< 0.01), {secs:.0} s",
            means.join(", ")
        ),
    )
}

fn c8_images() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let mut lines = Vec::new();
    let mut all = true;
    for seed in 0..5u64 {
        let dir = tmp.path().join(format!("corpus{seed}"));
        experiments::write_synthetic_corpus(&dir, 20, 32, 32, seed).unwrap();
        let spec = CorpusSpec {
            dir,
            width: 32,
            height: 32,
            count: 20,
            sample_size: 14,
            noise_amp: 1.0,
            match_tol: None,
            injection_blocks: None,
        };
        let cfg = MttConfig { k1: 8, k2: 8, q: 32, seed, ..Default::default() };
        let rep = experiments::image_corpus_experiment(&spec, &cfg, None).unwrap();
        all &= rep.ordering_holds();
        let [g1, g2, m] = rep.mean_mse;
        lines.push(format!("{m:.4} < {g2:.4} < {g1:.4}"));
    }
    verdict(
        all,
        format!("mean per-pixel MSE MTT < GBT2 < GBT1 on 5 corpora: {}", lines.join("; ")),
    )
}

fn c9_kernel() -> Verdict {
    let mut rng = rng(BASE_SEED ^ 9);
    let (mut mp, mut ey, mut proj) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..100 {
        let rows = rng.random_range(1..=10);
        let cols = rng.random_range(1..=10);
        let a = if i % 3 == 0 {
            let r = rng.random_range(1..=rows.min(cols));
            low_rank(&mut rng, rows, cols, r)
        } else {
            randn(&mut rng, rows, cols) * log_uniform(&mut rng, 1e-3, 1e3)
        };
        let ap = matops::pinv(&a, None).unwrap();
        let aap = &a * &ap;
        let apa = &ap * &a;
        mp = mp
            .max((&aap * &a - &a).norm() / a.norm())
            .max((&apa * &ap - &ap).norm() / ap.norm())
            .max((&aap - aap.transpose()).norm() / aap.norm().max(1.0))
            .max((&apa - apa.transpose()).norm() / apa.norm().max(1.0));

        let sv = ref_singular_values(&a);
        let total = a.norm_squared();
        for k in 1..=rows.min(cols) {
            let resid = (&a - matops::truncated_svd(&a, k).unwrap()).norm_squared();
            let tail: f64 = sv[k..].iter().map(|s| s * s).sum();
            ey = ey.max((resid - tail).abs() / (tail + 1e-6 * total));
        }

        let y = if i % 4 == 0 {
            low_rank(&mut rng, rows, cols, 1)
        } else {
            randn(&mut rng, rows, cols)
        };
        let g = matops::null_projector(&y, None).unwrap();
        let gn = g.norm().max(1.0);
        proj = proj
            .max((&g * &g - &g).norm() / gn)
            .max((&g - g.transpose()).norm() / gn)
            .max((&y * &g).norm() / y.norm());
    }
    verdict(
        mp <= 1e-9 && ey <= 1e-9 && proj <= 1e-9,
        format!(
            "100 matrices each: Moore-Penrose {mp:.1e}, Eckart-Young {ey:.1e}, \
             projector {proj:.1e} (all <= 1e-9 relative; Eckart-Young against tail + 1e-6·‖A‖²)"
        ),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_mtt"))
        .args(args)
        .env_remove("MTT_SEED")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn c10_determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let corpus = root.join("corpus");
    experiments::write_synthetic_corpus(&corpus, 12, 16, 12, 5).unwrap();
    let (x, y) = experiments::gen_example1(
        3,
        &Example1Params { m: 10, n_samples: 40, noise_amp: 2.0 },
    );
    mtt::io::write_matrix(&root.join("x.csv"), &x).unwrap();
    mtt::io::write_matrix(&root.join("y.csv"), &y).unwrap();

    let mut outputs = Vec::new();
    let mut ok = true;
    for run in ["a", "b"] {
        let out = root.join(run);
        let o = |sub: &str| out.join(sub).to_string_lossy().into_owned();
        let p = |f: &str| root.join(f).to_string_lossy().into_owned();
        let model = o("fit/model.bin");
        fs::create_dir_all(out.join("fit")).unwrap();
        let cmds: Vec<Vec<String>> = vec![
            vec!["ex1", "--trials", "3", "--m", "12", "--samples", "40", "--k1", "3", "--k2", "3", "--q", "12", "--seed", "7", "--out-dir", &o("ex1")]
                .into_iter().map(String::from).collect(),
            vec!["ex3", "--trials", "5", "--q", "12,24", "--seed", "7", "--out-dir", &o("ex3")]
                .into_iter().map(String::from).collect(),
            vec!["images", "--corpus", &p("corpus"), "--width", "16", "--height", "12", "--count", "12", "--sample-size", "6", "--k1", "3", "--k2", "3", "--seed", "7", "--out-dir", &o("images")]
                .into_iter().map(String::from).collect(),
            vec!["fit", "--x", &p("x.csv"), "--y", &p("y.csv"), "--model", &model, "--trace", &o("fit/trace.csv"), "--k1", "3", "--k2", "2", "--seed", "7"]
                .into_iter().map(String::from).collect(),
            vec!["compress", "--model", &model, "--y", &p("y.csv"), "--out-dir", &o("codes")]
                .into_iter().map(String::from).collect(),
            vec!["decompress", "--model", &model, "--u1", &o("codes/u1.csv"), "--u2", &o("codes/u2.csv"), "--out-dir", &o("recon")]
                .into_iter().map(String::from).collect(),
        ];
        for c in &cmds {
            let args: Vec<&str> = c.iter().map(String::as_str).collect();
            ok &= run_cli(&args);
        }
        outputs.push(dir_bytes(&out));
    }
    let files = outputs[0].len();
    verdict(
        ok && files > 0 && outputs[0] == outputs[1],
        format!("6 commands run twice: {files} output files, byte-identical = {}", outputs[0] == outputs[1]),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, v: Verdict| {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {id:>2} {name}: {}", v.detail);
        if !v.pass {
            failed += 1;
        }
    };
    let (ex1, elapsed) = example1_run();
    report(1, "monotone error traces", c1_monotone(&ex1, elapsed));
    report(2, "improvement ratios", c2_ratios(&ex1));
    report(3, "closed-form two-term optimality", c3_step1_optimal());
    report(4, "orthogonality and decomposition", c4_identities());
    report(5, "injection best response", c5_injection_best_response());
    report(6, "stationarity at convergence", c6_stationarity());
    report(7, "error falls with injection dimension", c7_q_trend());
    report(8, "image reconstruction ordering", c8_images());
    report(9, "kernel identities", c9_kernel());
    report(10, "CLI determinism", c10_determinism());
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
