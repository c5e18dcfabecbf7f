//! Power-splitting policies and the grid-search oracles that check them.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::channel::ChannelRealization;
use crate::link::{self, LinkCoefficientsFull, LinkCoefficientsPartial};
use crate::params::SystemParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("fixed splitting ratio must lie in (0, 1), got {0}")]
    FixedRatioOutOfRange(f64),
    #[error("unknown policy `{0}`; valid names: fixed:<rho>, full_csi, partial_csi")]
    UnknownPolicy(String),
    #[error("grid step must lie in (0, 1e-3], got {0}")]
    InvalidStep(f64),
}

/// How the relay picks its splitting ratio for a block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    /// Channel-independent ratio.
    Fixed(f64),
    /// Knows `|h|^2` and `|g|^2`; maximizes the instantaneous SNR.
    FullCsi,
    /// Knows `|h|^2` and only the mean of `|g|^2`; minimizes the outage
    /// probability averaged over `g`.
    PartialCsi,
}

impl Policy {
    pub fn fixed(rho0: f64) -> Result<Self, PolicyError> {
        if rho0 > 0.0 && rho0 < 1.0 {
            Ok(Policy::Fixed(rho0))
        } else {
            Err(PolicyError::FixedRatioOutOfRange(rho0))
        }
    }

    /// The five policies compared in the reference experiments, in the
    /// order full CSI, partial CSI, fixed 0.4, 0.6, 0.8.
    pub fn standard_set() -> Vec<Policy> {
        vec![
            Policy::FullCsi,
            Policy::PartialCsi,
            Policy::Fixed(0.4),
            Policy::Fixed(0.6),
            Policy::Fixed(0.8),
        ]
    }

    /// Whether the chosen ratio depends on `|g|^2`.
    pub fn uses_g(&self) -> bool {
        matches!(self, Policy::FullCsi)
    }

    pub fn decide(&self, params: &SystemParams, channel: &ChannelRealization) -> PolicyDecision {
        match *self {
            Policy::Fixed(rho0) => fixed_rho(rho0),
            Policy::FullCsi => PolicyDecision::transmit(full_csi_rho(params, channel.h_sq, channel.g_sq)),
            Policy::PartialCsi => partial_csi_rho(params, channel.h_sq),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Fixed(rho) => write!(f, "fixed:{rho}"),
            Policy::FullCsi => f.write_str("full_csi"),
            Policy::PartialCsi => f.write_str("partial_csi"),
        }
    }
}

impl FromStr for Policy {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "full_csi" => Ok(Policy::FullCsi),
            "partial_csi" => Ok(Policy::PartialCsi),
            other => match other.strip_prefix("fixed:") {
                Some(v) => {
                    let rho: f64 = v
                        .parse()
                        .map_err(|_| PolicyError::UnknownPolicy(other.to_string()))?;
                    Policy::fixed(rho)
                }
                None => Err(PolicyError::UnknownPolicy(other.to_string())),
            },
        }
    }
}

/// Ratio chosen for one block. `transmitting` is false exactly when the relay
/// harvests everything (`rho == 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyDecision {
    pub rho: f64,
    pub transmitting: bool,
}

impl PolicyDecision {
    pub fn transmit(rho: f64) -> Self {
        Self {
            rho,
            transmitting: rho < 1.0,
        }
    }

    pub fn harvest_only() -> Self {
        Self {
            rho: 1.0,
            transmitting: false,
        }
    }
}

/// SNR-maximizing ratio with full channel knowledge.
///
/// Evaluated as `c1 / (c1 + sqrt(c1 (c1 - a1)))`, the smaller quadratic root
/// rationalized. It needs no special case at `a1 = 0` (where it gives 1/2)
/// and does not cancel when `a1` is tiny.
pub fn full_csi_rho(params: &SystemParams, h_sq: f64, g_sq: f64) -> f64 {
    let LinkCoefficientsFull { a1, c1, .. } = LinkCoefficientsFull::new(params, h_sq, g_sq);
    c1 / (c1 + (c1 * (c1 - a1)).sqrt())
}

/// Outage-minimizing ratio knowing `|h|^2` and the statistics of `g`.
///
/// Below the gain threshold no ratio avoids outage and the relay harvests
/// everything. Otherwise the stationary point `b2 - sqrt(c2 / a2)` of `W`
/// is returned; it does not depend on the mean of `|g|^2`.
pub fn partial_csi_rho(params: &SystemParams, h_sq: f64) -> PolicyDecision {
    if h_sq <= link::h_threshold(params) {
        return PolicyDecision::harvest_only();
    }
    let LinkCoefficientsPartial { a2, b2, c2 } = LinkCoefficientsPartial::new(params, h_sq);
    PolicyDecision::transmit(b2 - (c2 / a2).sqrt())
}

pub fn fixed_rho(rho0: f64) -> PolicyDecision {
    PolicyDecision::transmit(rho0)
}

fn check_step(step: f64) -> Result<usize, PolicyError> {
    if !(step > 0.0 && step <= 1e-3) {
        return Err(PolicyError::InvalidStep(step));
    }
    Ok((1.0 / step).round() as usize)
}

/// Brute-force argmax of [`link::snr`] over `{step, 2 step, .., 1 - step}`.
/// Ties go to the smaller ratio.
pub fn oracle_grid_full(params: &SystemParams, h_sq: f64, g_sq: f64, step: f64) -> Result<f64, PolicyError> {
    let cells = check_step(step)?;
    let mut best = (step, f64::NEG_INFINITY);
    for k in 1..cells {
        let rho = k as f64 * step;
        let v = link::snr(params, h_sq, g_sq, rho);
        if v > best.1 {
            best = (rho, v);
        }
    }
    Ok(best.0)
}

/// Brute-force argmax of [`link::w_ratio`] over the grid points inside the
/// feasible set. Returns the harvest-only decision when the set is empty, and
/// its midpoint when it is narrower than one grid cell.
pub fn oracle_grid_partial(params: &SystemParams, h_sq: f64, step: f64) -> Result<PolicyDecision, PolicyError> {
    let cells = check_step(step)?;
    let Some(upper) = link::feasible_upper(params, h_sq) else {
        return Ok(PolicyDecision::harvest_only());
    };
    let mut best: Option<(f64, f64)> = None;
    for k in 1..cells {
        let rho = k as f64 * step;
        if rho >= upper {
            break;
        }
        let v = link::w_ratio(params, h_sq, rho);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((rho, v));
        }
    }
    Ok(PolicyDecision::transmit(best.map_or(upper / 2.0, |(rho, _)| rho)))
}
