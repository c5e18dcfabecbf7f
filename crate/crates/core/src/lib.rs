//! Dynamic power-splitting policies for an amplify-and-forward relay that
//! harvests its transmit energy from the source signal, with Monte Carlo and
//! semi-analytic outage estimation.
//!
//! Module map:
//! - [`params`]: validated system parameters and dBm conversion
//! - [`channel`]: seeded Rayleigh power-gain sampling with substreams
//! - [`link`]: closed-form SNR, feasibility and conditional-outage math
//! - [`policy`]: fixed, full-CSI and partial-CSI policies plus grid oracles
//! - [`sim`]: outage estimators, gain metrics and sweeps
//! - [`cli`]: the command-line front end
//! - [`verify`]: oracle batteries behind `swipt-relay verify`

pub mod channel;
pub mod cli;
pub mod link;
pub mod params;
pub mod policy;
pub mod sim;
pub mod verify;

pub use channel::{ChannelRealization, FadingParams};
pub use params::SystemParams;
pub use policy::{Policy, PolicyDecision};
pub use sim::{Engine, OutageEstimate, SweepResult, SweepSpec};
