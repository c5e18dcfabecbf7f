//! Closed-form link quantities for the power-splitting AF relay.
//!
//! Notation used throughout: `S = P_s |h|^2 + sigma_r^2` is the RF power at
//! the relay antenna and `D = sigma_d^2 / epsilon` the effective destination
//! noise (see [`SystemParams::effective_sigma_d_sq`]).
//!
//! The outage event has an exact reformulation that the partial-CSI policy
//! relies on: `snr(rho) >= gamma_0` holds iff
//! `|g|^2 * F(rho) >= gamma_0 * sigma0_sq(rho)`.

use thiserror::Error;

use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LinkError {
    #[error("splitting ratio {0} outside the open interval (0, 1)")]
    RatioOutOfRange(f64),
    #[error("degenerate channel: P_s |h|^2 equals gamma_0 sigma_r^2")]
    DegenerateChannel,
}

#[inline]
fn antenna_power(params: &SystemParams, h_sq: f64) -> f64 {
    params.p_s() * h_sq + params.sigma_r_sq()
}

/// Relay transmit power `epsilon * rho * (P_s |h|^2 + sigma_r^2)`, mW.
pub fn harvested_power(params: &SystemParams, h_sq: f64, rho: f64) -> f64 {
    params.epsilon() * rho * antenna_power(params, h_sq)
}

/// Energy harvested over the first half block, `P_r * T / 2`.
pub fn harvested_energy(params: &SystemParams, h_sq: f64, rho: f64) -> f64 {
    harvested_power(params, h_sq, rho) * params.block_duration() / 2.0
}

/// End-to-end SNR at the destination, defined on the closed interval [0, 1].
///
/// The denominator is evaluated as a sum of non-negative terms,
/// `g sigma_r^2 rho (1 - rho) + g sigma_p^2 rho + D (1 - rho) + sigma_p^2 D / S`,
/// which is the expanded quadratic regrouped and is strictly positive on [0, 1].
pub fn snr(params: &SystemParams, h_sq: f64, g_sq: f64, rho: f64) -> f64 {
    let s = antenna_power(params, h_sq);
    let d = params.effective_sigma_d_sq();
    let split = rho * (1.0 - rho);
    let num = params.p_s() * h_sq * g_sq * split;
    let den = g_sq * params.sigma_r_sq() * split
        + g_sq * params.sigma_p_sq() * rho
        + d * (1.0 - rho)
        + params.sigma_p_sq() * d / s;
    num / den
}

/// The same SNR written through the AF normalization factor `beta(rho)` and
/// the relay power `P_r`. Only defined on the open interval.
pub fn snr_via_beta(params: &SystemParams, h_sq: f64, g_sq: f64, rho: f64) -> Result<f64, LinkError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(LinkError::RatioOutOfRange(rho));
    }
    let s = antenna_power(params, h_sq);
    let beta_sq = 1.0 / ((1.0 - rho) * s + params.sigma_p_sq());
    let p_r = harvested_power(params, h_sq, rho);
    let den = g_sq * params.sigma_r_sq()
        + g_sq * params.sigma_p_sq() / (1.0 - rho)
        + params.sigma_d_sq() / (p_r * beta_sq * (1.0 - rho));
    Ok(params.p_s() * h_sq * g_sq / den)
}

/// Coefficients of the quadratic `f(rho) = a1 rho^2 + b1 rho + c1` whose sign
/// matches the SNR derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCoefficientsFull {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
}

impl LinkCoefficientsFull {
    pub fn new(params: &SystemParams, h_sq: f64, g_sq: f64) -> Self {
        let d = params.effective_sigma_d_sq();
        let c1 = d + params.sigma_p_sq() * d / antenna_power(params, h_sq);
        Self {
            a1: d - g_sq * params.sigma_p_sq(),
            b1: -2.0 * c1,
            c1,
        }
    }

    /// `b1^2 - 4 a1 c1`, evaluated in the cancellation-free form `4 c1 (c1 - a1)`.
    pub fn discriminant(&self) -> f64 {
        4.0 * self.c1 * (self.c1 - self.a1)
    }

    pub fn eval(&self, rho: f64) -> f64 {
        (self.a1 * rho + self.b1) * rho + self.c1
    }
}

/// Coefficients of `dW/drho = a2 - c2 / (rho - b2)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCoefficientsPartial {
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
}

impl LinkCoefficientsPartial {
    pub fn new(params: &SystemParams, h_sq: f64) -> Self {
        let gamma_0 = params.gamma_0();
        let d = params.effective_sigma_d_sq();
        let s = antenna_power(params, h_sq);
        let a2 = (params.p_s() * h_sq - gamma_0 * params.sigma_r_sq()) / d;
        let b2 = 1.0 + params.sigma_p_sq() / s;
        let c2 = b2 * (a2 * params.sigma_p_sq() / s + gamma_0 * params.sigma_p_sq() / d);
        Self { a2, b2, c2 }
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        self.a2 - self.c2 / (rho - self.b2).powi(2)
    }
}

/// `F(rho) = P_s |h|^2 rho (1 - rho) - gamma_0 (sigma_r^2 rho (1 - rho) + sigma_p^2 rho)`.
pub fn f_of_rho(params: &SystemParams, h_sq: f64, rho: f64) -> f64 {
    let gamma_0 = params.gamma_0();
    let split = rho * (1.0 - rho);
    params.p_s() * h_sq * split - gamma_0 * (params.sigma_r_sq() * split + params.sigma_p_sq() * rho)
}

/// `sigma0^2(rho) = D (1 - rho) + sigma_p^2 D / S`. Positive on (0, 1].
pub fn sigma0_sq(params: &SystemParams, h_sq: f64, rho: f64) -> f64 {
    let d = params.effective_sigma_d_sq();
    d * (1.0 - rho) + params.sigma_p_sq() * d / antenna_power(params, h_sq)
}

/// Root of `F(rho) = 0` other than zero.
pub fn rho_max(params: &SystemParams, h_sq: f64) -> Result<f64, LinkError> {
    let gamma_0 = params.gamma_0();
    let den = params.p_s() * h_sq - gamma_0 * params.sigma_r_sq();
    if den == 0.0 {
        return Err(LinkError::DegenerateChannel);
    }
    Ok((den - gamma_0 * params.sigma_p_sq()) / den)
}

/// Gain threshold `H0 = gamma_0 (sigma_r^2 + sigma_p^2) / P_s`.
pub fn h_threshold(params: &SystemParams) -> f64 {
    params.gamma_0() * (params.sigma_r_sq() + params.sigma_p_sq()) / params.p_s()
}

/// Upper end of the feasible set `{rho in (0,1) : F(rho) > 0} = (0, rho_max)`,
/// or `None` when the set is empty (`|h|^2 <= H0`).
pub fn feasible_upper(params: &SystemParams, h_sq: f64) -> Option<f64> {
    if h_sq <= h_threshold(params) {
        return None;
    }
    match rho_max(params, h_sq) {
        Ok(r) if r > 0.0 => Some(r),
        _ => None,
    }
}

/// `W(rho) = F(rho) / sigma0^2(rho)`.
pub fn w_ratio(params: &SystemParams, h_sq: f64, rho: f64) -> f64 {
    f_of_rho(params, h_sq, rho) / sigma0_sq(params, h_sq, rho)
}

/// Outage probability averaged over `|g|^2 ~ Exp(lambda_g)` for a known
/// `|h|^2` and a ratio chosen without knowledge of `g`.
///
/// Infeasible ratios (`F(rho) <= 0`, which includes `rho >= 1`) give exactly 1.
pub fn conditional_outage(params: &SystemParams, h_sq: f64, rho: f64, lambda_g: f64) -> f64 {
    if !(rho > 0.0 && rho < 1.0) {
        return 1.0;
    }
    let f = f_of_rho(params, h_sq, rho);
    if f <= 0.0 {
        return 1.0;
    }
    let threshold = params.gamma_0() * sigma0_sq(params, h_sq, rho) / f;
    -(-threshold / lambda_g).exp_m1()
}
