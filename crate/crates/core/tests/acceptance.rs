//! Acceptance suite. One test per criterion; each prints a single
//! `[PASS]` / `[FAIL]` line before asserting.
//!
//! Run with `cargo test -p swipt-relay --test acceptance -- --nocapture`.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use clap::Parser;

use swipt_relay::channel::{make_rng, sample_exponential, RngStream};
use swipt_relay::cli::{self, Cli, DEFAULT_SEED};
use swipt_relay::link;
use swipt_relay::policy::{self, Policy};
use swipt_relay::sim::{self, Engine, GainRow, SweepResult, SweepSpec, SweepVariable};
use swipt_relay::{FadingParams, SystemParams};

fn report(id: u32, name: &str, passed: bool, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id} ({name}): {detail}");
}

fn uniform(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (1.0 - rng.uniform_open0())
}

/// P_s uniform in [20, 50] dBm, variances uniform in [-30, -10] dBm,
/// gains log-uniform on [0.01, 10].
fn instance(rng: &mut RngStream) -> (SystemParams, f64, f64) {
    let mut dbm = |lo, hi| 10f64.powf(uniform(rng, lo, hi) / 10.0);
    let p_s = dbm(20.0, 50.0);
    let (r, p, d) = (dbm(-30.0, -10.0), dbm(-30.0, -10.0), dbm(-30.0, -10.0));
    let params = SystemParams::new(p_s, r, p, d, 1.0, 3.0).unwrap();
    let h = uniform(rng, 0.01f64.ln(), 10f64.ln()).exp();
    let g = uniform(rng, 0.01f64.ln(), 10f64.ln()).exp();
    (params, h, g)
}

const INSTANCES: usize = 10_000;
const GRID_STEP: f64 = 1e-4;
const RHO_TOL: f64 = 2e-4;
const VALUE_REL_TOL: f64 = 1e-9;

#[test]
fn criterion_01_full_csi_optimality() {
    let start = Instant::now();
    let mut rng = make_rng(DEFAULT_SEED);
    let (mut bad_rho, mut bad_value) = (0, 0);
    let mut worst = 0.0f64;
    for _ in 0..INSTANCES {
        let (p, h, g) = instance(&mut rng);
        let closed = policy::full_csi_rho(&p, h, g);
        let grid = policy::oracle_grid_full(&p, h, g, GRID_STEP).unwrap();
        let grid_max = link::snr(&p, h, g, grid);
        worst = worst.max((closed - grid).abs());
        if (closed - grid).abs() > RHO_TOL {
            bad_rho += 1;
        }
        if link::snr(&p, h, g, closed) < grid_max * (1.0 - VALUE_REL_TOL) {
            bad_value += 1;
        }
    }
    let elapsed = start.elapsed();
    let passed = bad_rho == 0 && bad_value == 0 && elapsed <= Duration::from_secs(120);
    report(
        1,
        "full-CSI closed form optimal",
        passed,
        &format!("{INSTANCES} instances, rho misses {bad_rho}, value misses {bad_value}, max |drho| {worst:.2e}, {elapsed:.1?}"),
    );
    assert!(passed);
}

#[test]
fn criterion_02_partial_csi_optimality() {
    let start = Instant::now();
    let mut rng = make_rng(DEFAULT_SEED + 1);
    let (mut bad_rho, mut bad_value, mut bad_infeasible, mut infeasible) = (0, 0, 0, 0);
    let mut worst = 0.0f64;
    for _ in 0..INSTANCES {
        let (p, h, _) = instance(&mut rng);
        let closed = policy::partial_csi_rho(&p, h);
        if h <= link::h_threshold(&p) {
            infeasible += 1;
            if closed.rho != 1.0 {
                bad_infeasible += 1;
            }
            continue;
        }
        let grid = policy::oracle_grid_partial(&p, h, GRID_STEP).unwrap();
        let grid_max = link::w_ratio(&p, h, grid.rho);
        worst = worst.max((closed.rho - grid.rho).abs());
        if (closed.rho - grid.rho).abs() > RHO_TOL {
            bad_rho += 1;
        }
        if link::w_ratio(&p, h, closed.rho) < grid_max - VALUE_REL_TOL * grid_max.abs() {
            bad_value += 1;
        }
    }
    let elapsed = start.elapsed();
    let passed = bad_rho == 0 && bad_value == 0 && bad_infeasible == 0 && elapsed <= Duration::from_secs(120);
    report(
        2,
        "partial-CSI closed form optimal",
        passed,
        &format!(
            "{INSTANCES} instances ({infeasible} infeasible, {bad_infeasible} not rho=1), rho misses {bad_rho}, \
             value misses {bad_value}, max |drho| {worst:.2e}, {elapsed:.1?}"
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_03_snr_identity() {
    let mut rng = make_rng(DEFAULT_SEED + 2);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let (p, h, g) = instance(&mut rng);
        let rho = uniform(&mut rng, 1e-6, 1.0 - 1e-6);
        let a = link::snr(&p, h, g, rho);
        let b = link::snr_via_beta(&p, h, g, rho).unwrap();
        worst = worst.max(((a - b) / b).abs());
    }
    let passed = worst <= 1e-10;
    report(3, "snr forms agree", passed, &format!("100000 inputs, max relative error {worst:.2e}"));
    assert!(passed);
}

fn reference_fading() -> FadingParams {
    FadingParams::new(1.5, 1.5).unwrap()
}

#[test]
fn criterion_04_estimator_cross_check() {
    let params = SystemParams::reference();
    let fading = reference_fading();
    let policies = [Policy::PartialCsi, Policy::Fixed(0.4), Policy::Fixed(0.6), Policy::Fixed(0.8)];
    let n = 1_000_000;
    let mc = sim::outage_mc_many(&params, &fading, &policies, n, DEFAULT_SEED, Engine::default()).unwrap();
    let semi =
        sim::outage_semi_analytic_many(&params, &fading, &policies, n, DEFAULT_SEED + 1, Engine::default()).unwrap();
    let mut passed = true;
    let mut detail = Vec::new();
    for ((pol, a), b) in policies.iter().zip(&mc).zip(&semi) {
        let se = (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
        let z = (a.p_out - b.p_out).abs() / se;
        passed &= z <= 3.0;
        detail.push(format!("{pol}: mc {:.3e} semi {:.3e} z {z:.2}", a.p_out, b.p_out));
    }
    report(4, "monte carlo vs semi-analytic", passed, &detail.join("; "));
    assert!(passed);
}

fn sweep(variable: SweepVariable, values: Vec<f64>, fading: FadingParams, n: u64) -> SweepResult {
    let spec = SweepSpec {
        variable,
        values,
        params: SystemParams::reference(),
        fading,
        policies: Policy::standard_set(),
        n,
        seed: DEFAULT_SEED,
    };
    sim::run_sweep(&spec, Engine::default()).unwrap()
}

struct PowerSweep {
    result: SweepResult,
    elapsed: Duration,
}

fn power_sweep() -> &'static PowerSweep {
    static CELL: OnceLock<PowerSweep> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let values = (0..9).map(|k| 40.0 + 2.0 * k as f64).collect();
        let result = sweep(SweepVariable::PSDbm, values, reference_fading(), 10_000_000);
        PowerSweep {
            result,
            elapsed: start.elapsed(),
        }
    })
}

fn lambda_g_sweep() -> &'static SweepResult {
    static CELL: OnceLock<SweepResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let values = (1..=10).map(f64::from).collect();
        sweep(SweepVariable::LambdaG, values, reference_fading(), 1_000_000)
    })
}

fn lambda_h_sweep() -> &'static SweepResult {
    static CELL: OnceLock<SweepResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let values = (1..=10).map(f64::from).collect();
        sweep(SweepVariable::LambdaH, values, reference_fading(), 1_000_000)
    })
}

#[test]
fn criterion_05_outage_vs_power() {
    let sweep = power_sweep();
    let r = &sweep.result;
    let full = r.curve(Policy::FullCsi);
    let par = r.curve(Policy::PartialCsi);
    let at = 50.0;
    let checks = [
        ("fixed:0.8", Policy::Fixed(0.8), 1.25, 0.5),
        ("fixed:0.6", Policy::Fixed(0.6), 1.7, 0.5),
        ("fixed:0.4", Policy::Fixed(0.4), 2.5, 0.6),
    ];
    let mut passed = true;
    let mut detail = Vec::new();
    for (name, pol, target, tol) in checks {
        let gain = sim::horizontal_gain_db(&full, &r.curve(pol), at);
        let ok = matches!(gain, Ok(g) if (g - target).abs() <= tol);
        passed &= ok;
        detail.push(format!(
            "vs {name} {} (want {target}+/-{tol}){}",
            gain.map(|g| format!("{g:.3} dB")).unwrap_or_else(|e| e.to_string()),
            if ok { "" } else { " MISS" }
        ));
    }
    let gap = sim::horizontal_gain_db(&full, &par, at);
    let gap_ok = matches!(gap, Ok(g) if g.abs() <= 1.0);
    passed &= gap_ok;
    detail.push(format!("full vs partial gap {gap:?}"));
    let p_full = r.estimate(at, Policy::FullCsi).unwrap().p_out;
    let p_par = r.estimate(at, Policy::PartialCsi).unwrap().p_out;
    let low = p_full < 1e-4 && p_par < 1e-4;
    passed &= low;
    detail.push(format!("p_out at 50 dBm: full {p_full:.3e}, partial {p_par:.3e}"));
    let fast = sweep.elapsed <= Duration::from_secs(600);
    passed &= fast;
    detail.push(format!("sweep time {:.1?}", sweep.elapsed));
    report(5, "outage vs source power", passed, &detail.join("; "));
    assert!(passed);
}

fn two_sigma_ok(a: &Option<sim::Gain>, b: &Option<sim::Gain>, increasing: bool) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => {
            let sigma = (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
            if increasing {
                b.eta >= a.eta - 2.0 * sigma
            } else {
                b.eta <= a.eta + 2.0 * sigma
            }
        }
        _ => false,
    }
}

fn fmt_row(r: &GainRow) -> String {
    let f = |g: &Option<sim::Gain>| g.map(|g| format!("{:.3}", g.eta)).unwrap_or_else(|| "-".into());
    format!(
        "{}: full {} par {} 0.6 {} 0.8 {}",
        r.sweep_value,
        f(&r.eta_full),
        f(&r.eta_par),
        f(&r.eta_06),
        f(&r.eta_08)
    )
}

#[test]
fn criterion_06_gains_vs_lambda_g() {
    let gains = lambda_g_sweep().gains().unwrap();
    let mut failures = Vec::new();
    for w in gains.windows(2) {
        if !two_sigma_ok(&w[0].eta_full, &w[1].eta_full, false) {
            failures.push(format!("eta_full rises {} -> {}", w[0].sweep_value, w[1].sweep_value));
        }
        if !two_sigma_ok(&w[0].eta_par, &w[1].eta_par, false) {
            failures.push(format!("eta_par rises {} -> {}", w[0].sweep_value, w[1].sweep_value));
        }
    }
    for row in &gains {
        let (e06, e08) = (row.eta_06.map(|g| g.eta), row.eta_08.map(|g| g.eta));
        if row.sweep_value >= 4.0 && !matches!((e06, e08), (Some(a), Some(b)) if a > b) {
            failures.push(format!("eta_0.6 <= eta_0.8 at lambda_g {}", row.sweep_value));
        }
        if row.sweep_value >= 9.0 && !matches!(e08, Some(b) if b < 0.0) {
            failures.push(format!("eta_0.8 >= 0 at lambda_g {}", row.sweep_value));
        }
    }
    let passed = failures.is_empty();
    let table: Vec<String> = gains.iter().map(fmt_row).collect();
    report(
        6,
        "gains vs lambda_g",
        passed,
        &format!("[{}]{}", table.join(" | "), if passed { String::new() } else { format!(" failures: {}", failures.join(", ")) }),
    );
    assert!(passed);
}

#[test]
fn criterion_07_gains_vs_lambda_h() {
    let gains = lambda_h_sweep().gains().unwrap();
    let mut failures = Vec::new();
    for w in gains.windows(2) {
        if !two_sigma_ok(&w[0].eta_full, &w[1].eta_full, true) {
            failures.push(format!("eta_full falls {} -> {}", w[0].sweep_value, w[1].sweep_value));
        }
        if !two_sigma_ok(&w[0].eta_par, &w[1].eta_par, true) {
            failures.push(format!("eta_par falls {} -> {}", w[0].sweep_value, w[1].sweep_value));
        }
    }
    for row in &gains {
        match (row.eta_full, row.eta_par) {
            (Some(a), Some(b)) if (a.eta - b.eta).abs() <= 0.3 => {}
            _ => failures.push(format!("|eta_full - eta_par| > 0.3 at lambda_h {}", row.sweep_value)),
        }
    }
    let passed = failures.is_empty();
    let table: Vec<String> = gains.iter().map(fmt_row).collect();
    report(
        7,
        "gains vs lambda_h",
        passed,
        &format!("[{}]{}", table.join(" | "), if passed { String::new() } else { format!(" failures: {}", failures.join(", ")) }),
    );
    assert!(passed);
}

fn dominance_violations(result: &SweepResult) -> Vec<String> {
    let fixed = [Policy::Fixed(0.4), Policy::Fixed(0.6), Policy::Fixed(0.8)];
    let mut out = Vec::new();
    for value in result.values() {
        let full = result.estimate(value, Policy::FullCsi).unwrap();
        let par = result.estimate(value, Policy::PartialCsi).unwrap();
        let best = fixed
            .iter()
            .map(|&p| result.estimate(value, p).unwrap())
            .min_by(|a, b| a.p_out.total_cmp(&b.p_out))
            .unwrap();
        let sigma = [full, par, best].iter().map(|e| e.std_err).fold(0.0, f64::max);
        if full.p_out > par.p_out + 3.0 * sigma || par.p_out + 3.0 * sigma > best.p_out + 6.0 * sigma {
            out.push(format!("{} = {value}", result.variable));
        }
    }
    out
}

#[test]
fn criterion_08_policy_dominance() {
    let mut violations = Vec::new();
    let mut points = 0;
    for r in [&power_sweep().result, lambda_g_sweep(), lambda_h_sweep()] {
        points += r.values().len();
        violations.extend(dominance_violations(r));
    }
    let passed = violations.is_empty();
    report(
        8,
        "policy dominance",
        passed,
        &format!("{points} points checked, violations: {violations:?}"),
    );
    assert!(passed);
}

#[test]
fn criterion_09_sweep_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    std::fs::write(
        &config,
        r#"{"p_s_dbm": 40, "sigma_r_sq_dbm": -20, "sigma_p_sq_dbm": -20, "sigma_d_sq_dbm": -17,
            "rate_bps_hz": 3, "lambda_h": 1.5,
            "sweep": {"variable": "lambda_g", "values": [1, 2, 3, 4]},
            "policies": ["full_csi", "partial_csi", "fixed:0.4", "fixed:0.6", "fixed:0.8"],
            "n": 300000}"#,
    )
    .unwrap();
    let run = |tag: &str, threads: &str| -> Vec<u8> {
        let out = dir.path().join(format!("{tag}.csv"));
        let args = [
            "swipt-relay",
            "sweep",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ];
        cli::run(Cli::parse_from(args)).unwrap();
        std::fs::read(out).unwrap()
    };
    let first = run("a", "2");
    let second = run("b", "2");
    let other_workers = run("c", "5");
    let single = run("d", "1");
    let passed = first == second && first == other_workers && first == single;
    report(
        9,
        "sweep CSV byte-identical",
        passed,
        &format!("{} bytes; repeat equal {}, 5 workers equal {}, 1 worker equal {}", first.len(), first == second, first == other_workers, first == single),
    );
    assert!(passed);
}

/// Kolmogorov-Smirnov statistic of a sample against Exponential(mean).
fn ks_exponential(mut xs: Vec<f64>, mean: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-x / mean).exp();
            (cdf - i as f64 / n).max((i + 1) as f64 / n - cdf)
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_10_sampler_distribution() {
    let n = 100_000;
    // asymptotic 1% critical value of the one-sample KS statistic
    let critical = 1.6276 / (n as f64).sqrt();
    let mut passed = true;
    let mut detail = Vec::new();
    for (k, mean) in [0.5, 1.5, 5.0].into_iter().enumerate() {
        let mut rng = make_rng(DEFAULT_SEED + k as u64);
        let xs: Vec<f64> = (0..n).map(|_| sample_exponential(&mut rng, mean)).collect();
        let d = ks_exponential(xs, mean);
        passed &= d < critical;
        detail.push(format!("lambda {mean}: D = {d:.5}"));
    }
    report(
        10,
        "exponential sampler KS",
        passed,
        &format!("{} (critical {critical:.5})", detail.join(", ")),
    );
    assert!(passed);
}
