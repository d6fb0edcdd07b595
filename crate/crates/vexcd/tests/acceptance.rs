//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Run with `cargo test -p vexcd --test acceptance`.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vexcd::bench::{csv_without_wall_time, run_benchmark, BenchConfig};
use vexcd_core::active_loop::oracle_answers;
use vexcd_core::classifier::train;
use vexcd_core::dataset::{gen_synthetic, SynthConfig};
use vexcd_core::eval::fully_supervised_baseline;
use vexcd_core::exemplar::{check_memberships, learn_exemplars, solve_mu, update_mu};
use vexcd_core::numerics::neg_entropy;
use vexcd_core::{
    compute_eer, gradcheck, Matrix, OptimizerConfig, PreparedData, Session, SessionConfig, Stochasticity, Strategy,
    TrainConfig,
};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-scale..scale))
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

fn default_data(seed: u64) -> Arc<PreparedData> {
    let ds = gen_synthetic(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })
    .expect("default synthetic set");
    Arc::new(PreparedData::from_dataset(&ds).expect("prepared data"))
}

fn mu_optimality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst, mut count) = (0.0f64, 0);
    for &gamma in &[0.3, 1.0, 3.0] {
        for &alpha in &[0.0, 0.3] {
            for _ in 0..4 {
                let n = rng.random_range(2..=6);
                let k = rng.random_range(1..=2);
                let dim = rng.random_range(1..=3);
                let x = random(&mut rng, n, dim, 1.0);
                let d = random(&mut rng, dim, k, 1.0);
                let cfg = OptimizerConfig {
                    alpha,
                    beta: 0.0,
                    gamma,
                    k,
                    mu_iterations: 2000,
                    ..OptimizerConfig::default()
                };
                let mu = solve_mu(&d, &Matrix::filled(n, k, 1.0 / n as f64), &x, &cfg).expect("solve_mu");
                let dist = oracles::sq_dists(&rows(&x), &rows(&d));
                let ours = oracles::mu_objective(&dist, &rows(&mu), alpha, gamma);
                let (_, best) = oracles::brute_force_mu(&dist, alpha, gamma);
                worst = worst.max((ours - best).abs());
                count += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        count >= 20 && worst < 1e-3 && secs < 30.0,
        format!("{count} instances, max |Δobjective| {worst:.2e} (tol 1e-3), {secs:.1}s (limit 30s)"),
    )
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let results = match gradcheck::run_all(0, 10) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("gradcheck failed to run: {e}")),
    };
    let secs = start.elapsed().as_secs_f64();
    let exemplar: Vec<_> = results.iter().filter(|r| r.name.starts_with("exemplar")).collect();
    let worst = results.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    let failed = results.iter().filter(|r| !r.passed()).count();
    outcome(
        exemplar.len() == 10 && failed == 0 && secs < 10.0,
        format!(
            "{} checks ({} through a 2-layer classifier), max rel err {worst:.2e} (tol 1e-4), {secs:.2}s (limit 10s)",
            results.len(),
            exemplar.len()
        ),
    )
}

fn invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_sum = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..40);
        let k = rng.random_range(1..6);
        let dim = rng.random_range(1..5);
        let x = random(&mut rng, n, dim, 4.0);
        let d = random(&mut rng, dim, k, 4.0);
        let cfg = OptimizerConfig {
            alpha: rng.random_range(0.0..2.0),
            gamma: rng.random_range(0.01..10.0),
            beta: 0.0,
            k,
            ..OptimizerConfig::default()
        };
        let mu = update_mu(&d, &Matrix::filled(n, k, 1.0 / n as f64), &x, &cfg).expect("update_mu");
        if check_memberships(&mu, Stochasticity::Column, 1e-12).is_err() {
            return outcome(false, format!("update_mu output not column-stochastic (n={n}, K={k})"));
        }
        for s in mu.col_sums() {
            worst_sum = worst_sum.max((s - 1.0).abs());
        }
    }

    let ds = gen_synthetic(&SynthConfig {
        n: 300,
        d: 8,
        positive_fraction: 0.15,
        seed: 1,
        ..SynthConfig::default()
    })
    .expect("synthetic");
    let data = PreparedData::from_dataset(&ds).expect("prepared");
    let x = data.features.select_rows(&data.train_ids);
    let y = data.labels_of(&data.train_ids).expect("labels");
    let model = train(&x, &y, &TrainConfig::default()).expect("train");
    let mut worst_rise = f64::NEG_INFINITY;
    for seed in 0..10 {
        let cfg = OptimizerConfig {
            k: 12,
            seed,
            ..OptimizerConfig::default()
        };
        let state = learn_exemplars(&x, Some(&model), &cfg).expect("learn_exemplars");
        for w in state.trace.windows(2) {
            worst_rise = worst_rise.max(w[1].total - w[0].total);
        }
    }
    outcome(
        worst_rise <= 1e-6,
        format!(
            "200 update_mu outputs, max |colsum − 1| {worst_sum:.1e} (tol 1e-12); 10 seeds, max trace rise {worst_rise:.2e} (slack 1e-6)"
        ),
    )
}

fn limits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 15;
    let x = random(&mut rng, n, 3, 2.0);

    let hot = OptimizerConfig {
        gamma: 1e6,
        beta: 0.0,
        k: 4,
        ..OptimizerConfig::default()
    };
    let state = learn_exemplars(&x, None, &hot).expect("γ=1e6");
    let uniform_dev = state
        .memberships
        .as_slice()
        .iter()
        .map(|v| (v - 1.0 / n as f64).abs())
        .fold(0.0, f64::max);

    let diverse = OptimizerConfig {
        alpha: 1e3,
        beta: 0.0,
        k: 3,
        mu_iterations: 200,
        ..OptimizerConfig::default()
    };
    let state = learn_exemplars(&x, None, &diverse).expect("α=1e3");
    let k = state.memberships.cols() as f64;
    let q: Vec<f64> = state.memberships.row_sums().iter().map(|s| s / k).collect();
    let entropy_gap = (neg_entropy(&q).expect("entropy") + (n as f64).ln()).abs();

    let x_small = random(&mut rng, 8, 2, 2.0);
    let cold = OptimizerConfig {
        alpha: 0.0,
        beta: 0.0,
        gamma: 1e-3,
        k: 8,
        ..OptimizerConfig::default()
    };
    let state = learn_exemplars(&x_small, None, &cold).expect("γ=1e-3");
    let min_max = state.concentration().into_iter().fold(1.0, f64::min);

    outcome(
        uniform_dev < 1e-3 && entropy_gap < 1e-2 && min_max > 0.99,
        format!(
            "γ=1e6 max |μ − 1/n| {uniform_dev:.1e} (tol 1e-3); α=1e3 |negH(q) + log n| {entropy_gap:.1e} (tol 1e-2); K=n γ=1e-3 min column max {min_max:.4} (> 0.99)"
        ),
    )
}

fn eer_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..80);
        let levels = rng.random_range(2..15);
        let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let scores: Vec<f64> = labels
            .iter()
            .map(|&y| (rng.random_range(0..levels) + y as u32 * rng.random_range(0..3)) as f64 / levels as f64)
            .collect();
        if compute_eer(&scores, &labels).ok() != Some(oracles::eer_sweep(&scores, &labels)) {
            mismatches += 1;
        }
    }
    let scores: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
    let mut labels: Vec<u8> = (0..2000).map(|i| u8::from(i % 4 == 0)).collect();
    labels.shuffle(&mut rng);
    let chance = compute_eer(&scores, &labels).unwrap_or(f64::NAN);
    outcome(
        mismatches == 0 && (chance - 0.5).abs() <= 0.05,
        format!("{mismatches}/100 fixtures differ from the sweep oracle; permuted n=2000 EER {chance:.4} (0.5 ± 0.05)"),
    )
}

fn protocol() -> Outcome {
    let data = default_data(0);
    let train: BTreeSet<usize> = data.train_ids.iter().copied().collect();
    for strategy in Strategy::ALL {
        let cfg = SessionConfig {
            strategy,
            iterations: 10,
            batch: 16,
            ..SessionConfig::default()
        };
        let mut s = Session::init(data.clone(), cfg).expect("init");
        let mut seen = BTreeSet::new();
        let mut queried = 0usize;
        let conserved = |s: &Session| {
            let labeled: BTreeSet<usize> = s.labeled().keys().copied().collect();
            let pending: BTreeSet<usize> = s.pending().iter().copied().collect();
            let total = labeled.len() + pending.len() + s.pool().len();
            let union: BTreeSet<usize> = labeled.union(&pending).chain(s.pool()).copied().collect();
            pending.len() == s.pending().len() && total == train.len() && union == train
        };
        for round in 0..10 {
            if round > 0 {
                s.next_display().expect("display");
            }
            if !conserved(&s) {
                return outcome(false, format!("{strategy}: conservation broken after display {round}"));
            }
            if let Some(i) = s.pending().iter().find(|&&i| !seen.insert(i)) {
                return outcome(false, format!("{strategy}: index {i} queried twice"));
            }
            queried += s.pending().len();
            let answers = oracle_answers(&s).expect("answers");
            let rate = s.submit_labels(&answers).expect("labels").sampling_rate_pct;
            if !conserved(&s) {
                return outcome(false, format!("{strategy}: conservation broken after labels {round}"));
            }
            let expected = (queried as f64 / (data.total() as f64 / 2.0)) * 100.0;
            if rate != expected {
                return outcome(false, format!("{strategy}: sampling rate {rate} != {expected}"));
            }
        }
    }
    outcome(
        true,
        "5 strategies × T=10, B=16: conservation, no repeats, exact sampling rates",
    )
}

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// Mean EER per iteration (index 0 = iteration 1) for one strategy.
fn mean_curve(strategy: Strategy, gamma: f64, datasets: &[Arc<PreparedData>]) -> Vec<f64> {
    let mut sums = [0.0; 10];
    for (data, &seed) in datasets.iter().zip(&SEEDS) {
        let mut session = SessionConfig::default();
        session.optimizer.gamma = gamma;
        let cfg = BenchConfig {
            strategies: vec![strategy],
            seeds: vec![seed],
            session,
            baseline: false,
        };
        let result = run_benchmark(data.clone(), &cfg).expect("bench");
        for r in &result.records {
            sums[r.iteration - 1] += r.eer.expect("ground truth");
        }
    }
    sums.iter().map(|s| s / SEEDS.len() as f64).collect()
}

fn fmt_curve(c: &[f64]) -> String {
    c.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" ")
}

fn benchmark() -> Outcome {
    let start = Instant::now();
    let datasets: Vec<Arc<PreparedData>> = SEEDS.iter().map(|&s| default_data(s)).collect();

    let random = mean_curve(Strategy::Random, 1.0, &datasets);
    let uncertainty = mean_curve(Strategy::Uncertainty, 1.0, &datasets);
    println!("      random           {}", fmt_curve(&random));
    println!("      uncertainty      {}", fmt_curve(&uncertainty));
    let mut ordering_at = Vec::new();
    let mut ve3 = Vec::new();
    for gamma in [0.3, 1.0, 3.0] {
        let ve = mean_curve(Strategy::VirtualExemplar, gamma, &datasets);
        let holds = (4..10).all(|i| ve[i] <= random[i] && ve[i] <= uncertainty[i]);
        println!(
            "      virtual_exemplar γ={gamma:<3} {}  ordering at t=5..10: {}",
            fmt_curve(&ve),
            if holds { "holds" } else { "fails" }
        );
        ordering_at.push((gamma, holds));
        if gamma == 3.0 {
            ve3 = ve;
        }
    }
    let ordering = ordering_at.iter().any(|&(g, h)| g == 3.0 && h);

    // full budget: batches of 110 label the whole 1100-pair training half in 10 rounds
    let mut worst_gap = 0.0f64;
    let mut baselines = Vec::new();
    for (data, &seed) in datasets.iter().zip(&SEEDS) {
        let train = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let fs = fully_supervised_baseline(data, &train).expect("baseline");
        baselines.push(fs);
        let mut session = SessionConfig {
            batch: data.train_ids.len() / 10,
            ..SessionConfig::default()
        };
        session.optimizer.gamma = 3.0;
        let cfg = BenchConfig {
            strategies: Strategy::ALL.to_vec(),
            seeds: vec![seed],
            session,
            baseline: false,
        };
        let result = run_benchmark(data.clone(), &cfg).expect("full-budget bench");
        for r in result.records.iter().filter(|r| r.iteration == 10) {
            assert_eq!(r.sampling_rate_pct, 100.0);
            worst_gap = worst_gap.max((r.eer.expect("ground truth") - fs).abs());
        }
    }
    let fs_mean = baselines.iter().sum::<f64>() / baselines.len() as f64;
    println!(
        "      at T=10, B=16 (14.5%): EER − fully supervised: random {:+.4}, uncertainty {:+.4}, virtual_exemplar γ=3 {:+.4}",
        random[9] - fs_mean,
        uncertainty[9] - fs_mean,
        ve3[9] - fs_mean
    );
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ordering && worst_gap <= 0.02 && secs < 900.0,
        format!(
            "5 seeds: VE ≤ random, uncertainty at t=5..10 with γ=3: {ordering}; full budget (100%) max |EER − fully supervised {fs_mean:.4}| = {worst_gap:.4} (tol 0.02); {secs:.0}s (limit 900s)"
        ),
    )
}

fn column_vs_row() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut col, mut row) = (0.0, 0.0);
    let count = 20;
    for seed in 0..count {
        let x = random(&mut rng, 30, 3, 2.0);
        let mut cfg = OptimizerConfig {
            beta: 0.0,
            k: 4,
            seed,
            ..OptimizerConfig::default()
        };
        let first_term = |cfg: &OptimizerConfig| {
            learn_exemplars(&x, None, cfg)
                .expect("learn_exemplars")
                .trace
                .last()
                .expect("trace")
                .representativity
        };
        col += first_term(&cfg);
        cfg.stochasticity = Stochasticity::Row;
        row += first_term(&cfg);
    }
    let (col, row) = (col / count as f64, row / count as f64);
    outcome(
        col <= row,
        format!("{count} instances, mean first term column {col:.4} vs row {row:.4}"),
    )
}

fn determinism() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, format!("tempdir: {e}")),
    };
    let run = |name: &str| -> Result<String, String> {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_vexcd"))
            .args(["bench", "--seeds", "0,1", "--iterations", "4", "--out"])
            .arg(&path)
            .env_remove("VEXCD_DATASET")
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("bench exited with {status}"));
        }
        std::fs::read_to_string(&path).map_err(|e| e.to_string())
    };
    match (run("a.csv"), run("b.csv")) {
        (Ok(a), Ok(b)) => {
            let same = csv_without_wall_time(&a) == csv_without_wall_time(&b);
            outcome(
                same && a.lines().count() == 1 + 5 * 2 * 4,
                format!(
                    "two `vexcd bench` runs, {} data rows each, identical without wall time: {same}",
                    a.lines().count() - 1
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, e),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("membership update optimality", mu_optimality),
        ("gradient correctness", gradients),
        ("constraint and descent invariants", invariants),
        ("limit behaviors", limits),
        ("EER oracle", eer_oracle),
        ("protocol conservation", protocol),
        ("synthetic benchmark ordering", benchmark),
        ("column vs row stochastic", column_vs_row),
        ("benchmark determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "{} {}. {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
