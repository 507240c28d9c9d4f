//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line whether or not it passes. Exits non-zero if any
//! criterion fails.
//!
//! Criterion 6 needs the Yeast-cold dataset in this crate's CSV layout
//! (`x_*` feature and `y_*` label columns); point `LCDR_YEAST_COLD` at it.
//! Without it the criterion is reported as waived.

use std::path::{Path, PathBuf};
use std::time::Instant;

use lcdr::confidence::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use lcdr::hsic::generalized_eigen;
use lcdr::metrics::{canberra, chebyshev, clark, cosine, intersection, kl};
use lcdr::{build_smoother, load_dataset, solve_confidence, LabelKind, LeModel, NeighborGraph};
use lcdr_cli::{run_enhance, run_synth, ExperimentConfig, FeaturesVariant, SynthConfig, TargetsVariant};
use lcdr_oracles::{
    fd_gradient_oracle, grid_qp_oracle, random_distribution, random_weights, rayleigh_oracle, trace_form,
};
use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

enum Verdict {
    Pass,
    Fail,
    Waived,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn check(ok: bool, detail: String) -> Outcome {
    Outcome {
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail,
    }
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_fn((r, c), |_| rng.sample(StandardNormal))
}

fn frob(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

// Criterion 1 -------------------------------------------------------------

fn random_tiny_instance(rng: &mut ChaCha8Rng) -> (Array2<f64>, Array2<f64>) {
    // The grid oracle at resolution 1e-3 is exhaustive, so instances keep
    // at most two free dimensions (about 10^6 grid points).
    loop {
        let n = rng.random_range(2..=3);
        let q = rng.random_range(2..=3);
        let l = Array2::from_shape_fn((n, q), |_| if rng.random_bool(0.4) { 1.0 } else { 0.0 });
        let sizes: Vec<usize> = l.outer_iter().map(|r| r.iter().filter(|&&v| v > 0.0).count()).collect();
        let free: usize = sizes.iter().map(|s| s.saturating_sub(1)).sum();
        if sizes.iter().all(|&s| s > 0) && (1..=2).contains(&free) {
            return (random_weights(rng, n), l);
        }
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_feas = 0.0f64;
    let mut support_ok = true;
    for _ in 0..50 {
        let (w, l) = random_tiny_instance(&mut rng);
        let degrees = w.sum_axis(Axis(1));
        let graph = NeighborGraph {
            weights: w,
            degrees,
            k: 1,
            sigma: 1.0,
        };
        let op = build_smoother(&graph).unwrap();
        let sol = solve_confidence(&op, l.view(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let (_, grid_obj) = grid_qp_oracle(op.t.view(), l.view(), 1e-3).unwrap();
        worst_gap = worst_gap.max(sol.objective - grid_obj);

        let f = &sol.confidence.values;
        for (fr, lr) in f.outer_iter().zip(l.outer_iter()) {
            worst_feas = worst_feas.max((fr.sum() - 1.0).abs());
            for (&v, &s) in fr.iter().zip(lr) {
                worst_feas = worst_feas.max((-v).max(v - 1.0).max(0.0));
                if s == 0.0 && v != 0.0 {
                    support_ok = false;
                }
            }
        }
    }
    check(
        worst_gap <= 1e-6 && worst_feas <= 1e-8 && support_ok,
        format!(
            "50 instances, max(solver - grid) = {worst_gap:.3e} (<= 1e-6), feasibility violation {worst_feas:.1e} (<= 1e-8), zero off support: {support_ok}"
        ),
    )
}

// Criterion 2 -------------------------------------------------------------

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut worst_res, mut worst_orth, mut worst_trace) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for trial in 0..100 {
        let d = rng.random_range(2..=20);
        let d_prime = rng.random_range(1..=d);
        let m = gaussian(&mut rng, d, d);
        let a = (&m + &m.t()) * 0.5;
        let nm = gaussian(&mut rng, d, d);
        let b = nm.t().dot(&nm) / d as f64 + Array2::<f64>::eye(d) * 0.5;

        let (vals, p) = generalized_eigen(a.view(), b.view(), d_prime).unwrap();
        let scale_a = frob(&a);
        let scale_b = frob(&b);
        for (i, col) in p.axis_iter(Axis(1)).enumerate() {
            let r = a.dot(&col) - b.dot(&col) * vals[i];
            let res = r.dot(&r).sqrt() / (scale_a + vals[i].abs() * scale_b);
            worst_res = worst_res.max(res);
        }
        let gram = p.t().dot(&b).dot(&p) - Array2::<f64>::eye(d_prime);
        worst_orth = worst_orth.max(gram.iter().fold(0.0f64, |m, v| m.max(v.abs())));

        let ours = trace_form(a.view(), p.view());
        let oracle = rayleigh_oracle(a.view(), b.view(), 1000, d_prime, 5000 + trial).unwrap();
        worst_trace = worst_trace.max(oracle - ours);
    }
    check(
        worst_res <= 1e-8 && worst_orth <= 1e-8 && worst_trace <= 1e-8,
        format!(
            "100 pairs (d <= 20), relative residual {worst_res:.1e}, B-orthonormality {worst_orth:.1e}, max(oracle - trace) = {worst_trace:.3e}"
        ),
    )
}

// Criterion 3 -------------------------------------------------------------

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    let mut masked = 0;
    let mut draws = 0;
    while draws < 100 {
        let q = rng.random_range(2..=6);
        let d = rng.random_range(1..=6);
        let n = rng.random_range(1..=8);
        let m = LeModel {
            weights: gaussian(&mut rng, q, d),
            beta: 0.1,
        };
        let x = gaussian(&mut rng, n, d);
        let mut f = Array2::zeros((n, q));
        for mut row in f.outer_iter_mut() {
            row.assign(&random_distribution(&mut rng, q));
        }
        // Central differences of width 1e-5 are only meaningful away from
        // the ReLU kink; redraw when a pre-activation sits on it.
        let z = x.dot(&m.weights.t());
        if z.iter().any(|v| v.abs() < 1e-3) {
            continue;
        }
        draws += 1;
        if z.iter().any(|&v| v < 0.0) && z.iter().any(|&v| v > 0.0) {
            masked += 1;
        }
        let g = m.gradient(x.view(), f.view()).unwrap();
        let fd = fd_gradient_oracle(&m, x.view(), f.view(), 1e-5).unwrap();
        for (a, b) in g.iter().zip(&fd) {
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1e-7));
        }
    }
    check(
        worst <= 1e-4 && masked > 0,
        format!("100 draws ({masked} with mixed ReLU masks), max elementwise relative error {worst:.2e} (<= 1e-4)"),
    )
}

// Criterion 4 -------------------------------------------------------------

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut ok = true;
    let mut worst_sym = 0.0f64;
    let mut worst_l1 = 0.0f64;
    let mut kl_gap = 0.0f64;
    for _ in 0..1000 {
        let q = rng.random_range(2..=10);
        let d = random_distribution(&mut rng, q);
        let e = random_distribution(&mut rng, q);
        let (dv, ev) = (d.view(), e.view());
        for f in [chebyshev, clark, canberra, kl] {
            ok &= f(dv, ev).unwrap() >= 0.0 && f(dv, dv).unwrap() == 0.0;
        }
        for f in [chebyshev, clark, canberra, cosine, intersection] {
            worst_sym = worst_sym.max((f(dv, ev).unwrap() - f(ev, dv).unwrap()).abs());
        }
        let l1: f64 = d.iter().zip(&e).map(|(a, b)| (a - b).abs()).sum();
        worst_l1 = worst_l1.max((intersection(dv, ev).unwrap() - (1.0 - 0.5 * l1)).abs());
        kl_gap = kl_gap.max((kl(dv, ev).unwrap() - kl(ev, dv).unwrap()).abs());
    }
    check(
        ok && worst_sym <= 1e-12 && worst_l1 <= 1e-12 && kl_gap > 0.0,
        format!(
            "1000 pairs, nonnegativity and identity: {ok}, symmetry {worst_sym:.1e}, L1 identity {worst_l1:.1e}, KL asymmetry witness {kl_gap:.3}"
        ),
    )
}

// Criteria 5 and 7 --------------------------------------------------------

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// Output files of one synthetic run: data, then recovered + metrics for
/// LF+LC and X+L.
struct SynthRun {
    files: Vec<PathBuf>,
    lc: Vec<f64>,
    xl: Vec<f64>,
}

fn synthetic_runs(dir: &Path) -> SynthRun {
    let mut run = SynthRun {
        files: Vec::new(),
        lc: Vec::new(),
        xl: Vec::new(),
    };
    for seed in SEEDS {
        let data = dir.join(format!("synth_{seed}.csv"));
        run_synth(
            &SynthConfig {
                n: 300,
                d: 20,
                q: 5,
                noise: 0.5,
                seed,
            },
            &data,
        )
        .unwrap();
        run.files.push(data.clone());
        for (name, features, targets) in [
            ("lflc", FeaturesVariant::Reduced, TargetsVariant::Confidence),
            ("xl", FeaturesVariant::Raw, TargetsVariant::Logical),
        ] {
            let mut cfg = ExperimentConfig::new(&data, dir.join(format!("{name}_{seed}.csv")));
            cfg.out_metrics = Some(dir.join(format!("{name}_{seed}.json")));
            cfg.features = features;
            cfg.targets = targets;
            cfg.train.seed = seed;
            let out = run_enhance(&cfg).unwrap();
            let cheb = out.report.unwrap().chebyshev;
            if name == "lflc" {
                run.lc.push(cheb);
            } else {
                run.xl.push(cheb);
            }
            run.files.push(cfg.out_dist);
            run.files.push(cfg.out_metrics.unwrap());
        }
    }
    run
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn criterion_5(run: &SynthRun, secs: f64) -> Outcome {
    let (lc, xl) = (mean(&run.lc), mean(&run.xl));
    let ratio = lc / xl;
    let per_seed: Vec<String> = run
        .lc
        .iter()
        .zip(&run.xl)
        .map(|(a, b)| format!("{a:.4}/{b:.4}"))
        .collect();
    check(
        ratio <= 0.85 && secs < 60.0,
        format!(
            "mean Chebyshev LF+LC {lc:.4} vs X+L {xl:.4}, ratio {ratio:.3} (<= 0.85); per seed LF+LC/X+L [{}]",
            per_seed.join(" ")
        ),
    )
}

fn criterion_7(first: &SynthRun, second: &SynthRun) -> Outcome {
    let mut differing = Vec::new();
    for (a, b) in first.files.iter().zip(&second.files) {
        if std::fs::read(a).unwrap() != std::fs::read(b).unwrap() {
            differing.push(a.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    check(
        differing.is_empty() && first.files.len() == second.files.len(),
        format!(
            "{} files compared byte for byte, {} differ {:?}",
            first.files.len(),
            differing.len(),
            differing
        ),
    )
}

// Criterion 6 -------------------------------------------------------------

fn criterion_6(dir: &Path) -> Outcome {
    let Some(path) = std::env::var_os("LCDR_YEAST_COLD") else {
        return Outcome {
            verdict: Verdict::Waived,
            detail: "LCDR_YEAST_COLD not set; Yeast-cold dataset unavailable".into(),
        };
    };
    let data = match load_dataset(&path, Some(LabelKind::Distribution)) {
        Ok(d) => d,
        Err(e) => return check(false, format!("cannot load {}: {e}", PathBuf::from(&path).display())),
    };
    let shape = (data.n_instances(), data.n_features(), data.n_labels());
    let mut cfg = ExperimentConfig::new(&path, dir.join("yeast_cold.csv"));
    cfg.out_metrics = Some(dir.join("yeast_cold.json"));
    let r = run_enhance(&cfg).unwrap().report.unwrap();
    check(
        shape == (2465, 24, 4) && r.chebyshev <= 0.065 && r.kl <= 0.020,
        format!(
            "shape {shape:?}, Chebyshev {:.4} (<= 0.065), KL {:.4} (<= 0.020)",
            r.chebyshev, r.kl
        ),
    )
}

// -------------------------------------------------------------------------

fn report(no: usize, name: &str, limit: Option<f64>, start: Instant, mut outcome: Outcome) -> bool {
    let secs = start.elapsed().as_secs_f64();
    if let Some(limit) = limit {
        if secs >= limit {
            outcome.verdict = Verdict::Fail;
            outcome.detail.push_str(&format!("; over time budget of {limit} s"));
        }
    }
    let tag = match outcome.verdict {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Waived => "WAIVED",
    };
    println!("criterion {no} [{tag}] {name}: {} ({secs:.2} s)", outcome.detail);
    !matches!(outcome.verdict, Verdict::Fail)
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful here.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let mut all = true;

    let t = Instant::now();
    all &= report(1, "confidence QP vs grid oracle", Some(5.0), t, criterion_1());
    let t = Instant::now();
    all &= report(2, "generalized eigensolver", Some(10.0), t, criterion_2());
    let t = Instant::now();
    all &= report(3, "gradient vs central differences", Some(5.0), t, criterion_3());
    let t = Instant::now();
    all &= report(4, "metric axioms", None, t, criterion_4());

    let first_dir = dir.path().join("run1");
    let second_dir = dir.path().join("run2");
    std::fs::create_dir_all(&first_dir).unwrap();
    std::fs::create_dir_all(&second_dir).unwrap();
    let t = Instant::now();
    let first = synthetic_runs(&first_dir);
    let secs = t.elapsed().as_secs_f64();
    all &= report(5, "synthetic recovery, LF+LC vs X+L", Some(60.0), t, criterion_5(&first, secs));

    let t = Instant::now();
    all &= report(6, "Yeast-cold reproduction", Some(300.0), t, criterion_6(dir.path()));

    let t = Instant::now();
    let second = synthetic_runs(&second_dir);
    all &= report(7, "determinism of criterion 5 outputs", None, t, criterion_7(&first, &second));

    if all {
        println!("acceptance: all criteria pass or are waived");
    } else {
        println!("acceptance: at least one criterion FAILED");
        std::process::exit(1);
    }
}
