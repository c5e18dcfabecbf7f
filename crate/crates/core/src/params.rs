//! Static system parameters and unit conversions.
//!
//! All powers and noise variances are held internally in linear milliwatts.
//! dBm only appears at the configuration boundary ([`RawConfig`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("missing {0}")]
    Missing(&'static str),
    #[error("{field} must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("epsilon out of range (0, 1]: {0}")]
    EpsilonOutOfRange(f64),
}

/// Converts decibel-milliwatts to linear milliwatts.
pub fn dbm_to_linear(x_dbm: f64) -> Result<f64, ParamsError> {
    if !x_dbm.is_finite() {
        return Err(ParamsError::NonFinite {
            field: "dbm",
            value: x_dbm,
        });
    }
    Ok(10f64.powf(x_dbm / 10.0))
}

/// Converts linear milliwatts to decibel-milliwatts.
pub fn linear_to_dbm(x_mw: f64) -> Result<f64, ParamsError> {
    if !x_mw.is_finite() {
        return Err(ParamsError::NonFinite {
            field: "milliwatts",
            value: x_mw,
        });
    }
    if x_mw <= 0.0 {
        return Err(ParamsError::NonPositive {
            field: "milliwatts",
            value: x_mw,
        });
    }
    Ok(10.0 * x_mw.log10())
}

/// SNR threshold `2^rate - 1` for a fixed transmission rate in bits/s/Hz.
pub fn snr_threshold(rate: f64) -> Result<f64, ParamsError> {
    if !rate.is_finite() {
        return Err(ParamsError::NonFinite {
            field: "rate_bps_hz",
            value: rate,
        });
    }
    if rate <= 0.0 {
        return Err(ParamsError::NonPositive {
            field: "rate_bps_hz",
            value: rate,
        });
    }
    Ok(rate.exp2() - 1.0)
}

/// Validated link parameters, linear units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    p_s: f64,
    sigma_r_sq: f64,
    sigma_p_sq: f64,
    sigma_d_sq: f64,
    epsilon: f64,
    rate: f64,
    block_duration: f64,
}

impl SystemParams {
    /// Builds parameters from linear-unit values, checking every invariant.
    pub fn new(
        p_s: f64,
        sigma_r_sq: f64,
        sigma_p_sq: f64,
        sigma_d_sq: f64,
        epsilon: f64,
        rate: f64,
    ) -> Result<Self, ParamsError> {
        Self {
            p_s,
            sigma_r_sq,
            sigma_p_sq,
            sigma_d_sq,
            epsilon,
            rate,
            block_duration: 1.0,
        }
        .validate()
    }

    /// Re-checks all invariants. Idempotent on valid input.
    pub fn validate(self) -> Result<Self, ParamsError> {
        positive("p_s", self.p_s)?;
        positive("sigma_r_sq", self.sigma_r_sq)?;
        positive("sigma_p_sq", self.sigma_p_sq)?;
        positive("sigma_d_sq", self.sigma_d_sq)?;
        positive("rate_bps_hz", self.rate)?;
        positive("block_duration_s", self.block_duration)?;
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(ParamsError::EpsilonOutOfRange(self.epsilon));
        }
        Ok(self)
    }

    /// Source transmit power, mW.
    pub fn p_s(&self) -> f64 {
        self.p_s
    }
    /// Relay antenna noise variance, mW.
    pub fn sigma_r_sq(&self) -> f64 {
        self.sigma_r_sq
    }
    /// Relay baseband processing noise variance, mW.
    pub fn sigma_p_sq(&self) -> f64 {
        self.sigma_p_sq
    }
    /// Destination noise variance, mW.
    pub fn sigma_d_sq(&self) -> f64 {
        self.sigma_d_sq
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn rate(&self) -> f64 {
        self.rate
    }
    pub fn block_duration(&self) -> f64 {
        self.block_duration
    }

    /// Target SNR `2^R - 1`, always derived from the stored rate.
    pub fn gamma_0(&self) -> f64 {
        self.rate.exp2() - 1.0
    }

    /// Destination noise as seen by the closed-form link expressions.
    ///
    /// The harvesting efficiency only enters the SNR through the ratio
    /// `sigma_d_sq / epsilon`, so every closed form written for `epsilon = 1`
    /// holds for general `epsilon` with this substitution.
    pub fn effective_sigma_d_sq(&self) -> f64 {
        self.sigma_d_sq / self.epsilon
    }

    pub fn with_p_s(self, p_s: f64) -> Result<Self, ParamsError> {
        Self { p_s, ..self }.validate()
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self, ParamsError> {
        Self { epsilon, ..self }.validate()
    }

    pub fn with_sigma_d_sq(self, sigma_d_sq: f64) -> Result<Self, ParamsError> {
        Self { sigma_d_sq, ..self }.validate()
    }

    pub fn with_block_duration(self, block_duration: f64) -> Result<Self, ParamsError> {
        Self {
            block_duration,
            ..self
        }
        .validate()
    }

    /// Reference operating point: 40 dBm source, -20/-20/-17 dBm noise, R = 3.
    pub fn reference() -> Self {
        RawConfig::reference()
            .validate()
            .expect("reference parameters are valid")
    }

    /// Back to the dBm-keyed configuration form.
    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            p_s_dbm: Some(10.0 * self.p_s.log10()),
            sigma_r_sq_dbm: Some(10.0 * self.sigma_r_sq.log10()),
            sigma_p_sq_dbm: Some(10.0 * self.sigma_p_sq.log10()),
            sigma_d_sq_dbm: Some(10.0 * self.sigma_d_sq.log10()),
            rate_bps_hz: Some(self.rate),
            epsilon: Some(self.epsilon),
            block_duration_s: Some(self.block_duration),
        }
    }
}

fn positive(field: &'static str, value: f64) -> Result<(), ParamsError> {
    if !value.is_finite() {
        Err(ParamsError::NonFinite { field, value })
    } else if value <= 0.0 {
        Err(ParamsError::NonPositive { field, value })
    } else {
        Ok(())
    }
}

/// Parameter block as it appears in a JSON config file (powers in dBm).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawConfig {
    pub p_s_dbm: Option<f64>,
    pub sigma_r_sq_dbm: Option<f64>,
    pub sigma_p_sq_dbm: Option<f64>,
    pub sigma_d_sq_dbm: Option<f64>,
    pub rate_bps_hz: Option<f64>,
    pub epsilon: Option<f64>,
    pub block_duration_s: Option<f64>,
}

impl RawConfig {
    pub fn reference() -> Self {
        Self {
            p_s_dbm: Some(40.0),
            sigma_r_sq_dbm: Some(-20.0),
            sigma_p_sq_dbm: Some(-20.0),
            sigma_d_sq_dbm: Some(-17.0),
            rate_bps_hz: Some(3.0),
            epsilon: None,
            block_duration_s: None,
        }
    }

    /// Converts to linear units and checks every invariant. `epsilon` and
    /// `block_duration_s` default to 1.
    pub fn validate(&self) -> Result<SystemParams, ParamsError> {
        let dbm = |field: &'static str, v: Option<f64>| -> Result<f64, ParamsError> {
            let v = v.ok_or(ParamsError::Missing(field))?;
            if !v.is_finite() {
                return Err(ParamsError::NonFinite { field, value: v });
            }
            dbm_to_linear(v)
        };
        SystemParams {
            p_s: dbm("p_s", self.p_s_dbm)?,
            sigma_r_sq: dbm("sigma_r_sq", self.sigma_r_sq_dbm)?,
            sigma_p_sq: dbm("sigma_p_sq", self.sigma_p_sq_dbm)?,
            sigma_d_sq: dbm("sigma_d_sq", self.sigma_d_sq_dbm)?,
            rate: self.rate_bps_hz.ok_or(ParamsError::Missing("rate_bps_hz"))?,
            epsilon: self.epsilon.unwrap_or(1.0),
            block_duration: self.block_duration_s.unwrap_or(1.0),
        }
        .validate()
    }
}
