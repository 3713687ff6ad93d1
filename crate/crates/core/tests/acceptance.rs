//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its criterion.
//! Run with `cargo test -p copula-impute --test acceptance -- --nocapture`.

mod common;

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::*;
use copula_impute::copula::{export::draw_map, summarize, CopulaModel, CorrelationPrior, DiscretePoint};
use copula_impute::data::Column;
use copula_impute::evaluation::*;
use copula_impute::kernels::*;
use copula_impute::regression::{gibbs_regress, summarize_posterior, RegressionSpec};
use copula_impute::simulation::*;
use copula_impute::{add_lags, run_chain, ChainConfig, ColumnKind, DataTable};
use nalgebra::DMatrix;
use rand::Rng;

fn report(id: u32, name: &str, pass: bool, elapsed: Duration, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} [{tag}] {name} ({:.1}s): {detail}", elapsed.as_secs_f64());
    assert!(pass, "criterion {id} failed: {detail}");
}

fn quiet() -> impl FnMut(copula_impute::copula::ChainProgress) {
    |_| {}
}

/// Chain settings used for simulated panels: 3000 iterations, thin 3, burn-in 500.
fn panel_chain(seed: u64) -> ChainConfig {
    let mut c = ChainConfig::new(3000, 3, 500, seed);
    c.keep_columns = Some(VARIABLES.iter().map(|s| s.to_string()).collect());
    c
}

const LAGS: usize = 4;

#[test]
fn c01_frame_counts() {
    let start = Instant::now();
    let full = [(3000, 3, 500, 500), (2000, 2, 250, 750)];
    let mut ok = full
        .iter()
        .all(|&(it, th, b, want)| ChainConfig::new(it, th, b, 0).saved_frames() == want);
    let table = random_table(50, 3, 0.1, &mut substream(101, 0));
    let mut got = Vec::new();
    for &(it, th, b, want) in &[(300, 3, 50, 50), (200, 2, 25, 75)] {
        let chain = run_chain(&table, &ChainConfig::new(it, th, b, 1), &mut quiet()).unwrap();
        got.push(chain.frame_count());
        ok &= chain.frame_count() == want && chain.correlations().len() == want;
    }
    let elapsed = start.elapsed();
    report(1, "frame counts", ok && elapsed < Duration::from_secs(1), elapsed, format!("scaled fixture frames {got:?}"));
}

#[test]
fn c02_monotone_equivariance() {
    let start = Instant::now();
    let table = random_table(200, 5, 0.15, &mut substream(102, 0));
    let j = table.index_of("x0").unwrap();
    let transformed = table.map_column(j, f64::exp).unwrap();
    let cfg = ChainConfig::new(1000, 2, 100, 7);
    let a = run_chain(&table, &cfg, &mut quiet()).unwrap();
    let b = run_chain(&transformed, &cfg, &mut quiet()).unwrap();
    let (da, db) = (draw_map(&a), draw_map(&b));
    let mut mismatches = 0usize;
    for (key, va) in &da {
        let vb = &db[key];
        for (x, y) in va.iter().zip(vb) {
            let expected = if key.1 == "x0" { x.exp() } else { *x };
            if expected.to_bits() != y.to_bits() {
                mismatches += 1;
            }
        }
    }
    let same_c = a.correlations() == b.correlations();
    let elapsed = start.elapsed();
    report(
        2,
        "monotone-transform equivariance",
        mismatches == 0 && same_c && da.len() == db.len() && elapsed < Duration::from_secs(30),
        elapsed,
        format!("{} cells, {mismatches} mismatched draws, correlations identical: {same_c}", da.len()),
    );
}

#[test]
fn c03_correlation_recovery() {
    let start = Instant::now();
    let mut rng = substream(103, 0);
    let pairs: Vec<(f64, f64)> = (0..500)
        .map(|_| {
            let a = standard_normal(&mut rng);
            (a, 0.8 * a + 0.6 * standard_normal(&mut rng))
        })
        .collect();
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mx, my) = (sample_mean(&xs), sample_mean(&ys));
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sample_r = sxy / ((xs.len() - 1) as f64 * sample_sd(&xs) * sample_sd(&ys));
    let table = DataTable::new(vec![
        Column::numeric("a", ColumnKind::Continuous, xs.into_iter().map(Some).collect()),
        Column::numeric("b", ColumnKind::Continuous, ys.into_iter().map(Some).collect()),
    ])
    .unwrap();
    let chain = run_chain(&table, &ChainConfig::new(2000, 1, 200, 3), &mut quiet()).unwrap();
    let r: Vec<f64> = chain.correlations().iter().map(|c| c[(0, 1)]).collect();
    let post = sample_mean(&r);
    let elapsed = start.elapsed();
    report(
        3,
        "correlation recovery",
        (post - 0.8).abs() <= 0.1 && (post - sample_r).abs() <= 0.1 && elapsed < Duration::from_secs(30),
        elapsed,
        format!("posterior mean {post:.4}, sample correlation {sample_r:.4}, target 0.8 +/- 0.1"),
    );
}

struct PanelRun {
    periods: usize,
    rmse_copula: BTreeMap<String, f64>,
    rmse_mean: BTreeMap<String, f64>,
    coverage: f64,
    percent_correct: f64,
    mode_baseline: f64,
    seconds: f64,
}

fn panel_run(periods: usize, seed: u64) -> PanelRun {
    let start = Instant::now();
    let cfg = SimulationConfig {
        periods,
        rho: 0.85,
        ..SimulationConfig::default()
    };
    let complete = generate_panel(&cfg, &mut substream(seed, 0)).unwrap();
    let (masked, truth) = inject_mar(&complete, &MissingnessConfig::default_mar(), &mut substream(seed, 1)).unwrap();
    let lagged = add_lags(&masked, LAGS, &[]).unwrap();
    let chain = run_chain(&lagged, &panel_chain(seed), &mut quiet()).unwrap();
    assert_eq!(chain.frame_count(), 500);
    let summary = summarize(&chain, 0.95, DiscretePoint::Mode).unwrap();
    let kinds: BTreeMap<String, ColumnKind> = masked.columns().iter().map(|c| (c.name.clone(), c.kind)).collect();
    let draws = draw_map(&chain);
    let points = summary.points();
    let input = EvaluationInput {
        truth: &truth,
        draws: &draws,
        points: &points,
        kinds: &kinds,
        masked: Some(&masked),
        level: 0.95,
        error_mode: ErrorMode::EachDraw,
    };
    let metrics = MetricsReport::compute("panel", &input, 0.0).unwrap();
    let continuous = TruthRecord {
        entries: truth.entries.iter().filter(|e| e.column != "V5").cloned().collect(),
    };
    let baseline = rmse(
        &continuous,
        &points_as_draws(&mean_baseline(&continuous, &masked).unwrap()),
        ErrorMode::EachDraw,
    )
    .unwrap();
    PanelRun {
        periods,
        rmse_copula: metrics.rmse_mean.per_variable,
        rmse_mean: baseline.per_variable,
        coverage: metrics.coverage.overall,
        percent_correct: metrics.percent_correct.unwrap(),
        mode_baseline: metrics.mode_baseline.unwrap(),
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Five T=20 replicates and one T=60 panel, shared by criteria 4 to 6.
fn panel_runs() -> &'static [PanelRun] {
    static RUNS: OnceLock<Vec<PanelRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let plan: Vec<(usize, u64)> = (1..=5).map(|s| (20, 200 + s)).chain([(60, 260)]).collect();
        std::thread::scope(|s| {
            let handles: Vec<_> = plan.iter().map(|&(t, seed)| s.spawn(move || panel_run(t, seed))).collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        })
    })
}

#[test]
fn c04_beats_column_mean() {
    let start = Instant::now();
    let runs = panel_runs();
    let mut wins_per_rep = Vec::new();
    for run in runs.iter().filter(|r| r.periods == 20) {
        let wins = VARIABLES[..4]
            .iter()
            .filter(|v| run.rmse_copula[**v] < run.rmse_mean[**v])
            .count();
        wins_per_rep.push(wins);
    }
    let good = wins_per_rep.iter().filter(|&&w| w >= 3).count();
    let worst: f64 = runs
        .iter()
        .filter(|r| r.periods == 20)
        .flat_map(|r| VARIABLES[..4].iter().map(|v| r.rmse_copula[*v] / r.rmse_mean[*v]))
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    report(
        4,
        "imputation beats column mean",
        wins_per_rep.len() == 5 && good >= 4 && elapsed < Duration::from_secs(600),
        elapsed,
        format!("variables won per replicate {wins_per_rep:?}, worst RMSE ratio {worst:.3}"),
    );
}

#[test]
fn c05_interval_coverage() {
    let start = Instant::now();
    let run = panel_runs().iter().find(|r| r.periods == 60).unwrap();
    let elapsed = start.elapsed();
    report(
        5,
        "95% interval coverage at T=60",
        (0.90..=0.99).contains(&run.coverage) && elapsed < Duration::from_secs(900),
        elapsed,
        format!("coverage {:.4} over continuous cells ({:.1}s chain)", run.coverage, run.seconds),
    );
}

#[test]
fn c06_binary_imputation() {
    let start = Instant::now();
    let runs = panel_runs();
    let ok = runs
        .iter()
        .all(|r| r.percent_correct > r.mode_baseline - 0.02 && r.percent_correct > 0.5);
    let detail = runs
        .iter()
        .map(|r| format!("T={} {:.3} vs mode {:.3}", r.periods, r.percent_correct, r.mode_baseline))
        .collect::<Vec<_>>()
        .join("; ");
    report(6, "binary percent correct", ok, start.elapsed(), detail);
}

#[test]
fn c07_desk_scale_timing() {
    let cfg = SimulationConfig {
        rho: 0.85,
        ..SimulationConfig::default()
    };
    let complete = generate_panel(&cfg, &mut substream(107, 0)).unwrap();
    let (masked, _) = inject_mar(&complete, &MissingnessConfig::default_mar(), &mut substream(107, 1)).unwrap();
    let lagged = add_lags(&masked, LAGS, &[]).unwrap();
    let columns = lagged.data_columns().len();
    let (chain, secs) = time_chain(|| run_chain(&lagged, &ChainConfig::new(3000, 3, 500, 107), &mut quiet()).unwrap());
    let frames = chain.frame_count();
    report(
        7,
        "3000-iteration chain under 5 minutes",
        lagged.nrows() == 2400 && columns == 25 && frames == 500 && secs < 300.0,
        Duration::from_secs_f64(secs),
        format!("{} rows x {columns} columns, {frames} frames in {secs:.1}s", lagged.nrows()),
    );
}

#[test]
fn c08_correlation_draw_validity() {
    let start = Instant::now();
    let mut rng = substream(108, 0);
    let mut checked = 0usize;
    let mut invalid = 0usize;
    for t in 0..5 {
        let table = random_table(30 + 10 * t, 2 + t, 0.2, &mut rng);
        let model = CopulaModel::new(&table).unwrap();
        let prior = CorrelationPrior::default_for(model.dim());
        let mut state = model.init_state().unwrap();
        for _ in 0..1000 {
            model.sweep_latent(&mut state, &mut rng).unwrap();
            model.update_correlation(&mut state, &prior, &mut rng).unwrap();
            checked += 1;
            invalid += usize::from(!is_valid_correlation(&state.c));
        }
    }
    let elapsed = start.elapsed();
    report(
        8,
        "correlation draw validity",
        invalid == 0 && elapsed < Duration::from_secs(60),
        elapsed,
        format!("{checked} draws over 5 tables, {invalid} invalid"),
    );
}

#[test]
fn c09_rubin_pooling() {
    let start = Instant::now();
    let mut rng = substream(109, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = rng.random_range(2..30);
        let q: Vec<f64> = (0..m).map(|_| 5.0 * standard_normal(&mut rng)).collect();
        let u: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..4.0)).collect();
        let p = rubin_pool(&q, &u).unwrap();
        let mf = m as f64;
        let qbar = q.iter().sum::<f64>() / mf;
        let w = u.iter().sum::<f64>() / mf;
        let b = q.iter().map(|x| (x - qbar) * (x - qbar)).sum::<f64>() / (mf - 1.0);
        let t = w + (1.0 + 1.0 / mf) * b;
        for (got, want) in [(p.estimate, qbar), (p.within, w), (p.between, b), (p.total, t)] {
            let scale = want.abs().max(f64::MIN_POSITIVE);
            worst = worst.max((got - want).abs() / scale);
        }
    }
    let same = rubin_pool(&[2.5; 5], &[0.3, 0.1, 0.4, 0.2, 0.5]).unwrap();
    let identical_ok = same.between == 0.0 && same.total == same.within;
    report(
        9,
        "Rubin pooling oracle",
        worst <= 1e-12 && identical_ok,
        start.elapsed(),
        format!("worst relative error {worst:.2e}, identical-estimates case B=0 T=W: {identical_ok}"),
    );
}

#[test]
fn c10_embedded_regression() {
    let start = Instant::now();
    let (y, x1, x2) = dataset(500, 110);
    let spec = RegressionSpec::new("y", &["x1", "x2"]);
    let cfg = ChainConfig::new(10_000, 1, 1_000, 11);

    let complete = table(&y, &x1.iter().map(|&v| Some(v)).collect::<Vec<_>>(), &x2);
    let full = gibbs_regress(&complete, &spec, &cfg).unwrap();
    let oracle = closed_form_mean(&y, &x1, &x2, [0.0; 3], [1e-4; 3]);
    let z: Vec<f64> = (0..3)
        .map(|k| {
            let c = full.coefficient(k);
            (sample_mean(&c) - oracle[k]).abs() / batch_se(&c)
        })
        .collect();
    let conjugate_ok = z.iter().all(|&v| v < 3.0);

    // About 20% of x1 goes missing, more often where x2 is high.
    let (m2, s2) = (sample_mean(&x2), sample_sd(&x2));
    let mut rng = substream(110, 1);
    let x1_masked: Vec<Option<f64>> = x1
        .iter()
        .zip(&x2)
        .map(|(&a, &b)| (rng.random::<f64>() >= 0.4 * norm_cdf((b - m2) / s2)).then_some(a))
        .collect();
    let rate = x1_masked.iter().filter(|v| v.is_none()).count() as f64 / 500.0;
    let partial = gibbs_regress(&table(&y, &x1_masked, &x2), &spec, &cfg).unwrap();
    let full_sum = summarize_posterior(&full, 0.95).unwrap();
    let part_sum = summarize_posterior(&partial, 0.95).unwrap();
    let slope = &part_sum[1];
    let slope_ok = (slope.mean - TRUE_BETA[1]).abs() <= 2.0 * slope.sd;
    let widths: Vec<(f64, f64)> = (0..3)
        .map(|k| (part_sum[k].upper - part_sum[k].lower, full_sum[k].upper - full_sum[k].lower))
        .collect();
    let widths_ok = widths.iter().all(|(p, f)| p >= f);
    let elapsed = start.elapsed();
    report(
        10,
        "embedded regression",
        conjugate_ok && slope_ok && widths_ok && (0.15..0.25).contains(&rate) && elapsed < Duration::from_secs(300),
        elapsed,
        format!(
            "complete-data |mean - oracle|/SE {z:.2?}; missing rate {rate:.3}, slope {:.3} (sd {:.3}); widths missing/complete {widths:.3?}",
            slope.mean, slope.sd
        ),
    );
}

#[test]
fn c11_kernel_suite() {
    let start = Instant::now();
    let configs: [(f64, f64, f64, f64); 5] = [
        (0.0, 1.0, 0.0, f64::INFINITY),
        (1.0, 2.0, -1.0, 0.5),
        (0.0, 1.0, 6.0, f64::INFINITY),
        (-3.0, 0.5, f64::NEG_INFINITY, -4.0),
        (0.0, 1.0, -0.001, 0.0015),
    ];
    let n = 100_000;
    let mut ks = Vec::new();
    for (i, &(mean, sd, lo, hi)) in configs.iter().enumerate() {
        let mut rng = substream(111, i as u64);
        let xs: Vec<f64> = (0..n).map(|_| sample_truncnorm(mean, sd, lo, hi, &mut rng).unwrap()).collect();
        ks.push(ks_statistic(xs, |x| truncnorm_cdf(x, mean, sd, lo, hi)));
    }
    let ks_ok = ks.iter().all(|&d| d < ks_critical_001(n));

    let mut rng = substream(111, 10);
    let scale = random_covariance(3, (0.5, 4.0), &mut rng).unwrap();
    let mut acc = DMatrix::<f64>::zeros(3, 3);
    for _ in 0..10_000 {
        acc += sample_inverse_wishart(10.0, &scale, &mut rng).unwrap().as_matrix();
    }
    acc /= 10_000.0;
    let expected = scale.as_matrix() / 6.0;
    let iw_err = (&acc - &expected).norm() / expected.norm();

    let mut g = |r, c| DMatrix::from_fn(r, c, |_, _| standard_normal(&mut rng));
    let (a, b, c, d) = (g(3, 2), g(2, 4), g(2, 3), g(4, 2));
    let lhs = kronecker(&a, &b) * kronecker(&c, &d);
    let rhs = kronecker(&(&a * &c), &(&b * &d));
    let kron_err = (&lhs - &rhs).norm() / rhs.norm();

    let toeplitz = ar1_toeplitz(70, 0.95).unwrap();
    let min_eig = toeplitz.as_matrix().clone().symmetric_eigen().eigenvalues.min();

    let elapsed = start.elapsed();
    report(
        11,
        "statistical kernel suite",
        ks_ok && iw_err < 0.05 && kron_err < 1e-12 && min_eig > 0.0 && elapsed < Duration::from_secs(120),
        elapsed,
        format!(
            "KS D {ks:.4?} (critical {:.4}); IW mean rel. error {iw_err:.4}; Kronecker rel. error {kron_err:.1e}; Toeplitz min eigenvalue {min_eig:.2e}",
            ks_critical_001(n)
        ),
    );
}
