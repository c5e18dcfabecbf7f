//! Oracle batteries run by the `verify` command.

use std::fmt;

use crate::channel::{make_rng, FadingParams, RngStream};
use crate::link::{self, LinkCoefficientsFull};
use crate::params::SystemParams;
use crate::policy::{self, Policy};
use crate::sim::{self, Engine};

/// Deliberate defects for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Scales `c1` by 1.05 before evaluating the full-CSI closed form.
    CorruptFullCsiCoefficient,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    pub quick: bool,
    pub seed: u64,
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for BatteryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn uniform(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (1.0 - rng.uniform_open0())
}

fn log_uniform(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    uniform(rng, lo.ln(), hi.ln()).exp()
}

/// Random operating point: `P_s` in [20, 50] dBm, noise variances in
/// [-30, -10] dBm, `R = 3`, gains log-uniform on [0.01, 10].
pub fn random_instance(rng: &mut RngStream) -> (SystemParams, f64, f64) {
    let mut dbm = |lo: f64, hi: f64| 10f64.powf(uniform(rng, lo, hi) / 10.0);
    let p_s = dbm(20.0, 50.0);
    let (r, p, d) = (dbm(-30.0, -10.0), dbm(-30.0, -10.0), dbm(-30.0, -10.0));
    let params = SystemParams::new(p_s, r, p, d, 1.0, 3.0).expect("sampled parameters are valid");
    let h = log_uniform(rng, 0.01, 10.0);
    let g = log_uniform(rng, 0.01, 10.0);
    (params, h, g)
}

fn corrupted_full_csi(params: &SystemParams, h: f64, g: f64) -> f64 {
    let LinkCoefficientsFull { a1, c1, .. } = LinkCoefficientsFull::new(params, h, g);
    let c1 = 1.05 * c1;
    c1 / (c1 + (c1 * (c1 - a1)).sqrt())
}

const GRID_STEP: f64 = 1e-4;
const RHO_TOL: f64 = 2e-4;
const VALUE_TOL: f64 = 1e-9;

pub fn full_csi_battery(opts: &VerifyOptions) -> BatteryReport {
    let count = if opts.quick { 300 } else { 10_000 };
    let mut rng = make_rng(opts.seed);
    let mut worst_gap = 0.0f64;
    let mut failures = 0;
    for _ in 0..count {
        let (p, h, g) = random_instance(&mut rng);
        let closed = match opts.fault {
            Some(Fault::CorruptFullCsiCoefficient) => corrupted_full_csi(&p, h, g),
            None => policy::full_csi_rho(&p, h, g),
        };
        let grid = policy::oracle_grid_full(&p, h, g, GRID_STEP).expect("valid step");
        let gap = (closed - grid).abs();
        worst_gap = worst_gap.max(gap);
        let best = link::snr(&p, h, g, grid);
        if gap > RHO_TOL || link::snr(&p, h, g, closed) < best * (1.0 - VALUE_TOL) {
            failures += 1;
        }
    }
    BatteryReport {
        name: "full-csi closed form vs grid",
        passed: failures == 0,
        detail: format!("{count} instances, {failures} failures, max |rho gap| {worst_gap:.2e}"),
    }
}

pub fn partial_csi_battery(opts: &VerifyOptions) -> BatteryReport {
    let count = if opts.quick { 300 } else { 10_000 };
    let mut rng = make_rng(opts.seed ^ 0x9E37_79B9_7F4A_7C15);
    let (mut failures, mut infeasible) = (0, 0);
    let mut worst_gap = 0.0f64;
    for _ in 0..count {
        let (p, h, _) = random_instance(&mut rng);
        let closed = policy::partial_csi_rho(&p, h);
        let grid = policy::oracle_grid_partial(&p, h, GRID_STEP).expect("valid step");
        if h <= link::h_threshold(&p) {
            infeasible += 1;
            if closed.rho != 1.0 || closed.transmitting {
                failures += 1;
            }
            continue;
        }
        let gap = (closed.rho - grid.rho).abs();
        worst_gap = worst_gap.max(gap);
        let best = link::w_ratio(&p, h, grid.rho);
        if gap > RHO_TOL || link::w_ratio(&p, h, closed.rho) < best - VALUE_TOL * best.abs() {
            failures += 1;
        }
    }
    BatteryReport {
        name: "partial-csi closed form vs grid",
        passed: failures == 0,
        detail: format!(
            "{count} instances ({infeasible} below threshold), {failures} failures, max |rho gap| {worst_gap:.2e}"
        ),
    }
}

pub fn snr_identity_battery(opts: &VerifyOptions) -> BatteryReport {
    let count = if opts.quick { 10_000 } else { 100_000 };
    let mut rng = make_rng(opts.seed.wrapping_add(3));
    let mut worst = 0.0f64;
    for _ in 0..count {
        let (p, h, g) = random_instance(&mut rng);
        let rho = uniform(&mut rng, 1e-6, 1.0 - 1e-6);
        let a = link::snr(&p, h, g, rho);
        let b = link::snr_via_beta(&p, h, g, rho).expect("rho inside (0, 1)");
        worst = worst.max(((a - b) / b).abs());
    }
    BatteryReport {
        name: "snr quadratic form vs AF form",
        passed: worst <= 1e-10,
        detail: format!("{count} instances, max relative error {worst:.2e}"),
    }
}

pub fn estimator_battery(opts: &VerifyOptions) -> BatteryReport {
    let n = if opts.quick { 100_000 } else { 1_000_000 };
    let params = SystemParams::reference();
    let fading = FadingParams::new(1.5, 1.5).expect("valid");
    let policies = [Policy::PartialCsi, Policy::Fixed(0.4), Policy::Fixed(0.6), Policy::Fixed(0.8)];
    let mc = sim::outage_mc_many(&params, &fading, &policies, n, opts.seed, Engine::default());
    let semi = sim::outage_semi_analytic_many(&params, &fading, &policies, n, opts.seed.wrapping_add(1), Engine::default());
    let (mc, semi) = match (mc, semi) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            return BatteryReport {
                name: "monte carlo vs semi-analytic",
                passed: false,
                detail: e.to_string(),
            }
        }
    };
    let mut worst_z = 0.0f64;
    for (a, b) in mc.iter().zip(&semi) {
        let se = (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
        let z = if se > 0.0 { (a.p_out - b.p_out).abs() / se } else { 0.0 };
        worst_z = worst_z.max(z);
    }
    BatteryReport {
        name: "monte carlo vs semi-analytic",
        passed: worst_z <= 3.0,
        detail: format!("{} policies, n = {n}, max |z| {worst_z:.2}", policies.len()),
    }
}

pub fn run_all(opts: &VerifyOptions) -> Vec<BatteryReport> {
    vec![
        full_csi_battery(opts),
        partial_csi_battery(opts),
        snr_identity_battery(opts),
        estimator_battery(opts),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_batteries_pass() {
        let opts = VerifyOptions {
            quick: true,
            seed: 5,
            fault: None,
        };
        for r in run_all(&opts) {
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn corrupted_coefficient_detected() {
        let opts = VerifyOptions {
            quick: true,
            seed: 5,
            fault: Some(Fault::CorruptFullCsiCoefficient),
        };
        assert!(!full_csi_battery(&opts).passed);
    }

    #[test]
    fn instances_within_ranges() {
        let mut rng = make_rng(1);
        for _ in 0..1000 {
            let (p, h, g) = random_instance(&mut rng);
            assert!(p.p_s() >= 100.0 - 1e-9 && p.p_s() <= 1e5 + 1e-6);
            assert!(p.sigma_d_sq() >= 1e-3 - 1e-15 && p.sigma_d_sq() <= 0.1 + 1e-12);
            assert!((0.01 - 1e-12..=10.0 + 1e-9).contains(&h));
            assert!((0.01 - 1e-12..=10.0 + 1e-9).contains(&g));
        }
    }
}
