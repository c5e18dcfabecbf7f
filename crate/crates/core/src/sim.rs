//! Outage estimation, performance-gain metrics and parameter sweeps.
//!
//! # Determinism
//!
//! Realizations are split into fixed-size batches of [`BATCH_LEN`]. Batch `b`
//! draws its channels from [`substream`]`(seed, b)`, each batch is reduced
//! sequentially, and batch results are merged in batch order. The output is
//! therefore a function of `(seed, n)` only, never of the worker count or of
//! the [`Engine`] in use.
//!
//! # Common random numbers
//!
//! Every policy at a sweep point is evaluated on the same channel draws, and
//! every sweep point reuses the same underlying uniforms (the exponential
//! draws are scaled by the current means). Curves are then smooth in the
//! swept variable and policy comparisons share their sampling noise.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::channel::{sample_channel, substream, FadingParams};
use crate::link;
use crate::params::{dbm_to_linear, SystemParams};
use crate::policy::Policy;

/// Realizations per batch (one substream each).
pub const BATCH_LEN: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("policy {0} depends on |g|^2; the semi-analytic estimator needs a g-independent ratio")]
    GDependentPolicy(Policy),
    #[error("insufficient resolution: outage estimates {p_x} and {p_ref} must both lie in (0, 1); raise n")]
    InsufficientResolution { p_x: f64, p_ref: f64 },
    #[error("extrapolation refused: target outage {0:e} is outside the baseline curve's range")]
    Extrapolation(f64),
    #[error("invalid curve: {0}")]
    InvalidCurve(&'static str),
    #[error("sweep values must be nonempty and strictly increasing")]
    BadSweepValues,
    #[error("sweep needs at least one policy")]
    NoPolicies,
    #[error("{variable} = {value}: {message}")]
    Point {
        variable: SweepVariable,
        value: f64,
        message: String,
    },
    #[error("gain table needs the fixed:0.4 reference policy")]
    MissingReference,
}

/// Execution backend for batch evaluation. Both give identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

fn batch_bounds(n: u64, batch: u64) -> u64 {
    (n - batch * BATCH_LEN).min(BATCH_LEN)
}

fn map_batches<T, F>(engine: Engine, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    let batches = n.div_ceil(BATCH_LEN);
    match engine {
        Engine::Sequential => (0..batches).map(|b| f(b, batch_bounds(n, b))).collect(),
        #[cfg(feature = "parallel")]
        Engine::Parallel => {
            use rayon::prelude::*;
            (0..batches)
                .into_par_iter()
                .map(|b| f(b, batch_bounds(n, b)))
                .collect()
        }
    }
}

/// Estimated outage probability under one policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageEstimate {
    pub p_out: f64,
    pub std_err: f64,
    pub n: u64,
    /// Mean ratio over transmitting blocks; `None` if the relay never transmitted.
    pub mean_rho: Option<f64>,
    pub harvest_only_fraction: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct DecisionTally {
    harvest_only: u64,
    transmitting: u64,
    rho_sum: f64,
}

impl DecisionTally {
    fn record(&mut self, rho: f64, transmitting: bool) {
        if transmitting {
            self.transmitting += 1;
            self.rho_sum += rho;
        } else {
            self.harvest_only += 1;
        }
    }

    fn merge(&mut self, other: &Self) {
        self.harvest_only += other.harvest_only;
        self.transmitting += other.transmitting;
        self.rho_sum += other.rho_sum;
    }

    fn mean_rho(&self) -> Option<f64> {
        (self.transmitting > 0).then(|| self.rho_sum / self.transmitting as f64)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct OutageTally {
    outages: u64,
    decisions: DecisionTally,
}

impl OutageTally {
    fn finish(&self, n: u64) -> OutageEstimate {
        let p = self.outages as f64 / n as f64;
        OutageEstimate {
            p_out: p,
            std_err: (p * (1.0 - p) / n as f64).sqrt(),
            n,
            mean_rho: self.decisions.mean_rho(),
            harvest_only_fraction: self.decisions.harvest_only as f64 / n as f64,
        }
    }
}

/// Monte Carlo outage estimate for one policy.
pub fn outage_mc(
    params: &SystemParams,
    fading: &FadingParams,
    policy: Policy,
    n: u64,
    seed: u64,
) -> Result<OutageEstimate, SimError> {
    outage_mc_many(params, fading, &[policy], n, seed, Engine::default()).map(|mut v| v.remove(0))
}

/// Monte Carlo outage estimates for several policies on shared channel draws.
///
/// A block is in outage when the relay does not transmit or when the
/// end-to-end SNR falls below the threshold.
pub fn outage_mc_many(
    params: &SystemParams,
    fading: &FadingParams,
    policies: &[Policy],
    n: u64,
    seed: u64,
    engine: Engine,
) -> Result<Vec<OutageEstimate>, SimError> {
    if n == 0 {
        return Err(SimError::ZeroSamples);
    }
    let gamma_0 = params.gamma_0();
    let batches = map_batches(engine, n, |batch, len| {
        let mut rng = substream(seed, batch);
        let mut tallies = vec![OutageTally::default(); policies.len()];
        for _ in 0..len {
            let channel = sample_channel(&mut rng, fading);
            for (policy, tally) in policies.iter().zip(tallies.iter_mut()) {
                let d = policy.decide(params, &channel);
                tally.decisions.record(d.rho, d.transmitting);
                if !d.transmitting || link::snr(params, channel.h_sq, channel.g_sq, d.rho) < gamma_0 {
                    tally.outages += 1;
                }
            }
        }
        tallies
    });
    let mut total = vec![OutageTally::default(); policies.len()];
    for batch in &batches {
        for (acc, t) in total.iter_mut().zip(batch) {
            acc.outages += t.outages;
            acc.decisions.merge(&t.decisions);
        }
    }
    Ok(total.iter().map(|t| t.finish(n)).collect())
}

/// Running mean and sum of squared deviations, merged with Chan's formula.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.count as f64 * w;
        self.count = count;
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct SemiTally {
    moments: Moments,
    decisions: DecisionTally,
}

/// Semi-analytic outage estimate: samples `|h|^2` only and averages the
/// exact outage probability over `|g|^2`.
///
/// The channel stream is consumed exactly as in [`outage_mc`], so with the
/// same seed both estimators see the same `|h|^2` sequence.
pub fn outage_semi_analytic(
    params: &SystemParams,
    fading: &FadingParams,
    policy: Policy,
    n_h: u64,
    seed: u64,
) -> Result<OutageEstimate, SimError> {
    outage_semi_analytic_many(params, fading, &[policy], n_h, seed, Engine::default()).map(|mut v| v.remove(0))
}

pub fn outage_semi_analytic_many(
    params: &SystemParams,
    fading: &FadingParams,
    policies: &[Policy],
    n_h: u64,
    seed: u64,
    engine: Engine,
) -> Result<Vec<OutageEstimate>, SimError> {
    if n_h == 0 {
        return Err(SimError::ZeroSamples);
    }
    if let Some(p) = policies.iter().find(|p| p.uses_g()) {
        return Err(SimError::GDependentPolicy(*p));
    }
    let lambda_g = fading.lambda_g();
    let batches = map_batches(engine, n_h, |batch, len| {
        let mut rng = substream(seed, batch);
        let mut tallies = vec![SemiTally::default(); policies.len()];
        for _ in 0..len {
            let channel = sample_channel(&mut rng, fading);
            for (policy, tally) in policies.iter().zip(tallies.iter_mut()) {
                let d = policy.decide(params, &channel);
                tally.decisions.record(d.rho, d.transmitting);
                let p = if d.transmitting {
                    link::conditional_outage(params, channel.h_sq, d.rho, lambda_g)
                } else {
                    1.0
                };
                tally.moments.push(p);
            }
        }
        tallies
    });
    let mut total = vec![SemiTally::default(); policies.len()];
    for batch in &batches {
        for (acc, t) in total.iter_mut().zip(batch) {
            acc.moments.merge(&t.moments);
            acc.decisions.merge(&t.decisions);
        }
    }
    Ok(total
        .iter()
        .map(|t| {
            let m = &t.moments;
            let var = if m.count > 1 { m.m2 / (m.count - 1) as f64 } else { 0.0 };
            OutageEstimate {
                p_out: m.mean,
                std_err: (var / n_h as f64).sqrt(),
                n: n_h,
                mean_rho: t.decisions.mean_rho(),
                harvest_only_fraction: t.decisions.harvest_only as f64 / n_h as f64,
            }
        })
        .collect())
}

/// Log-ratio gain `-ln(p_x / p_ref)` over a reference policy.
pub fn gain_eta(p_x: f64, p_ref: f64) -> Result<f64, SimError> {
    let inside = |p: f64| p > 0.0 && p < 1.0;
    if !(inside(p_x) && inside(p_ref)) {
        return Err(SimError::InsufficientResolution { p_x, p_ref });
    }
    Ok(-(p_x / p_ref).ln())
}

/// A gain with its delta-method standard error. The error treats the two
/// estimates as independent, which overstates it under common random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gain {
    pub eta: f64,
    pub std_err: f64,
}

impl Gain {
    pub fn between(x: &OutageEstimate, reference: &OutageEstimate) -> Result<Self, SimError> {
        let eta = gain_eta(x.p_out, reference.p_out)?;
        let std_err = ((x.std_err / x.p_out).powi(2) + (reference.std_err / reference.p_out).powi(2)).sqrt();
        Ok(Self { eta, std_err })
    }
}

/// Gains of the four compared policies over `fixed:0.4` at one sweep value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainRow {
    pub sweep_value: f64,
    pub eta_full: Option<Gain>,
    pub eta_par: Option<Gain>,
    pub eta_06: Option<Gain>,
    pub eta_08: Option<Gain>,
}

/// Horizontal (power-axis) distance between two outage-vs-`P_s` curves.
///
/// Reads the dynamic curve at `at_p_s_dbm` and returns how many dB further
/// the baseline curve needs to reach the same outage. Both curves are
/// interpolated linearly in `ln p_out` against dBm. Positive values mean the
/// dynamic policy saves power.
pub fn horizontal_gain_db(curve_dyn: &[(f64, f64)], curve_base: &[(f64, f64)], at_p_s_dbm: f64) -> Result<f64, SimError> {
    let target = interpolate_log(curve_dyn, at_p_s_dbm)?;
    check_curve(curve_base)?;
    for w in curve_base.windows(2) {
        let ((x0, p0), (x1, p1)) = (w[0], w[1]);
        if (p0 - target) * (p1 - target) <= 0.0 {
            if p0 == p1 {
                return Ok(x0 - at_p_s_dbm);
            }
            let t = (target.ln() - p0.ln()) / (p1.ln() - p0.ln());
            return Ok(x0 + t * (x1 - x0) - at_p_s_dbm);
        }
    }
    Err(SimError::Extrapolation(target))
}

fn check_curve(curve: &[(f64, f64)]) -> Result<(), SimError> {
    if curve.len() < 2 {
        return Err(SimError::InvalidCurve("need at least two points"));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(SimError::InvalidCurve("power axis must be strictly increasing"));
    }
    if curve.iter().any(|&(_, p)| !(p > 0.0 && p <= 1.0)) {
        return Err(SimError::InvalidCurve("outage values must lie in (0, 1]"));
    }
    Ok(())
}

fn interpolate_log(curve: &[(f64, f64)], x: f64) -> Result<f64, SimError> {
    check_curve(curve)?;
    let w = curve
        .windows(2)
        .find(|w| w[0].0 <= x && x <= w[1].0)
        .ok_or(SimError::InvalidCurve("evaluation point outside the curve's domain"))?;
    let ((x0, p0), (x1, p1)) = (w[0], w[1]);
    let t = (x - x0) / (x1 - x0);
    Ok((p0.ln() + t * (p1.ln() - p0.ln())).exp())
}

/// Quantity varied across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    PSDbm,
    LambdaG,
    LambdaH,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::PSDbm => "p_s_dbm",
            SweepVariable::LambdaG => "lambda_g",
            SweepVariable::LambdaH => "lambda_h",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepVariable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "p_s_dbm" => Ok(SweepVariable::PSDbm),
            "lambda_g" => Ok(SweepVariable::LambdaG),
            "lambda_h" => Ok(SweepVariable::LambdaH),
            other => Err(format!(
                "unknown sweep variable `{other}`; valid: p_s_dbm, lambda_g, lambda_h"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub params: SystemParams,
    pub fading: FadingParams,
    pub policies: Vec<Policy>,
    pub n: u64,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.values.is_empty()
            || self.values.iter().any(|v| !v.is_finite())
            || self.values.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(SimError::BadSweepValues);
        }
        if self.policies.is_empty() {
            return Err(SimError::NoPolicies);
        }
        if self.n == 0 {
            return Err(SimError::ZeroSamples);
        }
        Ok(())
    }

    /// Operating point at one sweep value.
    pub fn point(&self, value: f64) -> Result<(SystemParams, FadingParams), SimError> {
        let ctx = |message: String| SimError::Point {
            variable: self.variable,
            value,
            message,
        };
        match self.variable {
            SweepVariable::PSDbm => {
                let p_s = dbm_to_linear(value).map_err(|e| ctx(e.to_string()))?;
                let params = self.params.with_p_s(p_s).map_err(|e| ctx(e.to_string()))?;
                Ok((params, self.fading))
            }
            SweepVariable::LambdaG => {
                let fading = FadingParams::new(self.fading.lambda_h(), value).map_err(|e| ctx(e.to_string()))?;
                Ok((self.params, fading))
            }
            SweepVariable::LambdaH => {
                let fading = FadingParams::new(value, self.fading.lambda_g()).map_err(|e| ctx(e.to_string()))?;
                Ok((self.params, fading))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub policy: Policy,
    pub estimate: OutageEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
    pub seed: u64,
    pub n: u64,
}

impl SweepResult {
    pub fn estimate(&self, value: f64, policy: Policy) -> Option<&OutageEstimate> {
        self.rows
            .iter()
            .find(|r| r.value == value && r.policy == policy)
            .map(|r| &r.estimate)
    }

    /// `(value, p_out)` pairs for one policy, in sweep order.
    pub fn curve(&self, policy: Policy) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.policy == policy)
            .map(|r| (r.value, r.estimate.p_out))
            .collect()
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = Vec::new();
        for r in &self.rows {
            if v.last() != Some(&r.value) {
                v.push(r.value);
            }
        }
        v
    }

    /// Gains over `fixed:0.4` at every sweep value. Policies missing from the
    /// sweep, or points where an estimate is 0 or 1, give `None`.
    pub fn gains(&self) -> Result<Vec<GainRow>, SimError> {
        let reference = Policy::Fixed(0.4);
        if !self.rows.iter().any(|r| r.policy == reference) {
            return Err(SimError::MissingReference);
        }
        Ok(self
            .values()
            .into_iter()
            .map(|value| {
                let base = self.estimate(value, reference);
                let gain = |p: Policy| {
                    let (x, b) = (self.estimate(value, p)?, base?);
                    Gain::between(x, b).ok()
                };
                GainRow {
                    sweep_value: value,
                    eta_full: gain(Policy::FullCsi),
                    eta_par: gain(Policy::PartialCsi),
                    eta_06: gain(Policy::Fixed(0.6)),
                    eta_08: gain(Policy::Fixed(0.8)),
                }
            })
            .collect())
    }
}

/// Runs every `(value, policy)` pair of the sweep with [`outage_mc_many`].
pub fn run_sweep(spec: &SweepSpec, engine: Engine) -> Result<SweepResult, SimError> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.values.len() * spec.policies.len());
    for &value in &spec.values {
        let (params, fading) = spec.point(value)?;
        let estimates = outage_mc_many(&params, &fading, &spec.policies, spec.n, spec.seed, engine)?;
        rows.extend(spec.policies.iter().zip(estimates).map(|(&policy, estimate)| SweepRow {
            value,
            policy,
            estimate,
        }));
    }
    Ok(SweepResult {
        variable: spec.variable,
        rows,
        seed: spec.seed,
        n: spec.n,
    })
}
