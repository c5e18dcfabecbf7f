//! Command-line front end.
//!
//! Configuration comes from an optional JSON file; flags override it. CSV
//! goes to `--out` (or stdout) and a human-readable summary to stderr.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::FadingParams;
use crate::params::{RawConfig, SystemParams};
use crate::policy::Policy;
use crate::sim::{self, Engine, Gain, OutageEstimate, SweepResult, SweepSpec, SweepVariable};
use crate::verify::{self, Fault, VerifyOptions};

/// Seed used when neither the config file nor `--seed` gives one.
pub const DEFAULT_SEED: u64 = 0x5EED_2016;
/// Realizations per operating point when not configured.
pub const DEFAULT_N: u64 = 1_000_000;
pub const DEFAULT_LAMBDA: f64 = 1.5;

pub const SWEEP_HEADER: &str = "sweep_var,sweep_value,policy,p_out,std_err,mean_rho,harvest_only_fraction,n,seed";
pub const POINT_HEADER: &str = "policy,p_out,std_err,mean_rho,harvest_only_fraction,n,seed";
pub const GAINS_HEADER: &str = "sweep_value,eta_full,eta_par,eta_rho06,eta_rho08";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn config_err(e: impl ToString) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "swipt-relay", version, about = "Power-splitting policies and outage simulation for energy-harvesting AF relays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output CSV path (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Channel realizations per operating point.
    #[arg(long, global = true)]
    pub n: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Outage estimates for each policy at one operating point.
    Point,
    /// Outage estimates over a swept parameter.
    Sweep,
    /// Gain table over fixed:0.4 for a swept parameter.
    Gains,
    /// Closed-form vs oracle checks.
    Verify {
        /// Reduced instance counts.
        #[arg(long)]
        quick: bool,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: String,
    pub values: Vec<f64>,
}

/// Contents of the JSON configuration file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub p_s_dbm: Option<f64>,
    pub sigma_r_sq_dbm: Option<f64>,
    pub sigma_p_sq_dbm: Option<f64>,
    pub sigma_d_sq_dbm: Option<f64>,
    pub rate_bps_hz: Option<f64>,
    pub epsilon: Option<f64>,
    pub block_duration_s: Option<f64>,
    pub lambda_h: Option<f64>,
    pub lambda_g: Option<f64>,
    pub sweep: Option<SweepSection>,
    pub policies: Option<Vec<String>>,
    pub n: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    fn raw_params(&self) -> RawConfig {
        let reference = RawConfig::reference();
        RawConfig {
            p_s_dbm: self.p_s_dbm.or(reference.p_s_dbm),
            sigma_r_sq_dbm: self.sigma_r_sq_dbm.or(reference.sigma_r_sq_dbm),
            sigma_p_sq_dbm: self.sigma_p_sq_dbm.or(reference.sigma_p_sq_dbm),
            sigma_d_sq_dbm: self.sigma_d_sq_dbm.or(reference.sigma_d_sq_dbm),
            rate_bps_hz: self.rate_bps_hz.or(reference.rate_bps_hz),
            epsilon: self.epsilon,
            block_duration_s: self.block_duration_s,
        }
    }
}

/// Fully resolved settings for one invocation. Serialized verbatim into the
/// CSV provenance header.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub params: RawConfig,
    pub lambda_h: f64,
    pub lambda_g: f64,
    pub policies: Vec<String>,
    pub sweep: Option<SweepSection>,
    pub n: u64,
    pub seed: u64,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    system: SystemParams,
    #[serde(skip)]
    fading: FadingParams,
    #[serde(skip)]
    policy_list: Vec<Policy>,
}

impl RunConfig {
    pub fn resolve(command: &'static str, file: FileConfig, common: &CommonArgs) -> Result<Self, CliError> {
        let raw = file.raw_params();
        let system = raw.validate().map_err(config_err)?;
        let lambda_h = file.lambda_h.unwrap_or(DEFAULT_LAMBDA);
        let lambda_g = file.lambda_g.unwrap_or(DEFAULT_LAMBDA);
        let fading = FadingParams::new(lambda_h, lambda_g).map_err(config_err)?;
        let policy_list: Vec<Policy> = match &file.policies {
            Some(names) if names.is_empty() => return Err(config_err("policies list is empty")),
            Some(names) => names
                .iter()
                .map(|s| s.parse::<Policy>())
                .collect::<Result<_, _>>()
                .map_err(config_err)?,
            None => Policy::standard_set(),
        };
        let n = common.n.or(file.n).unwrap_or(DEFAULT_N);
        if n == 0 {
            return Err(config_err("n must be at least 1"));
        }
        Ok(Self {
            command,
            params: raw,
            lambda_h,
            lambda_g,
            policies: policy_list.iter().map(Policy::to_string).collect(),
            sweep: file.sweep,
            n,
            seed: common.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            out: common.out.clone().or(file.out),
            system,
            fading,
            policy_list,
        })
    }

    pub fn system(&self) -> &SystemParams {
        &self.system
    }

    pub fn fading(&self) -> &FadingParams {
        &self.fading
    }

    pub fn policy_list(&self) -> &[Policy] {
        &self.policy_list
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, CliError> {
        let section = self
            .sweep
            .as_ref()
            .ok_or_else(|| config_err("missing \"sweep\" section"))?;
        let variable: SweepVariable = section.variable.parse().map_err(config_err)?;
        let spec = SweepSpec {
            variable,
            values: section.values.clone(),
            params: self.system,
            fading: self.fading,
            policies: self.policy_list.clone(),
            n: self.n,
            seed: self.seed,
        };
        spec.validate().map_err(config_err)?;
        Ok(spec)
    }

    fn provenance(&self) -> String {
        let echo = serde_json::to_string(self).expect("config serializes");
        format!(
            "# swipt-relay {}\n# seed={}\n# n={}\n# config={echo}\n",
            self.command, self.seed, self.n
        )
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_gain(g: Option<Gain>) -> String {
    fmt_opt(g.map(|g| g.eta))
}

pub fn point_csv(cfg: &RunConfig, estimates: &[OutageEstimate]) -> String {
    let mut s = cfg.provenance();
    s.push_str(POINT_HEADER);
    s.push('\n');
    for (policy, e) in cfg.policy_list.iter().zip(estimates) {
        let _ = writeln!(
            s,
            "{policy},{},{},{},{},{},{}",
            e.p_out,
            e.std_err,
            fmt_opt(e.mean_rho),
            e.harvest_only_fraction,
            e.n,
            cfg.seed
        );
    }
    s
}

pub fn sweep_csv(cfg: &RunConfig, result: &SweepResult) -> String {
    let mut s = cfg.provenance();
    s.push_str(SWEEP_HEADER);
    s.push('\n');
    for row in &result.rows {
        let e = &row.estimate;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            result.variable,
            row.value,
            row.policy,
            e.p_out,
            e.std_err,
            fmt_opt(e.mean_rho),
            e.harvest_only_fraction,
            e.n,
            result.seed
        );
    }
    s
}

pub fn gains_csv(cfg: &RunConfig, result: &SweepResult) -> Result<String, CliError> {
    let rows = result.gains().map_err(config_err)?;
    let mut s = cfg.provenance();
    let _ = writeln!(s, "# sweep_var={}", result.variable);
    s.push_str(GAINS_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.sweep_value,
            fmt_gain(r.eta_full),
            fmt_gain(r.eta_par),
            fmt_gain(r.eta_06),
            fmt_gain(r.eta_08)
        );
    }
    Ok(s)
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}

fn sibling_gains_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.gains.csv"))
}

fn summarize(label: &str, policies: &[Policy], estimates: &[OutageEstimate]) {
    eprintln!("{label}");
    for (p, e) in policies.iter().zip(estimates) {
        eprintln!("  {:<12} p_out = {:.4e} +/- {:.1e}", p.to_string(), e.p_out, e.std_err);
    }
}

pub fn cmd_point(cfg: &RunConfig) -> Result<(), CliError> {
    let estimates = sim::outage_mc_many(cfg.system(), cfg.fading(), cfg.policy_list(), cfg.n, cfg.seed, Engine::default())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let csv = point_csv(cfg, &estimates);
    emit(cfg.out.as_deref(), &csv)?;
    summarize(&format!("point: n = {}, seed = {}", cfg.n, cfg.seed), cfg.policy_list(), &estimates);
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.sweep_spec()?;
    let result = sim::run_sweep(&spec, Engine::default()).map_err(|e| CliError::Runtime(e.to_string()))?;
    let csv = sweep_csv(cfg, &result);
    let gains = if spec.policies.contains(&Policy::Fixed(0.4)) {
        Some(gains_csv(cfg, &result)?)
    } else {
        None
    };
    emit(cfg.out.as_deref(), &csv)?;
    if let (Some(gains), Some(out)) = (gains, cfg.out.as_deref()) {
        emit(Some(&sibling_gains_path(out)), &gains)?;
    }
    eprintln!(
        "sweep over {}: {} points x {} policies, n = {}",
        spec.variable,
        spec.values.len(),
        spec.policies.len(),
        spec.n
    );
    Ok(())
}

pub fn cmd_gains(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.sweep_spec()?;
    if !spec.policies.contains(&Policy::Fixed(0.4)) {
        return Err(config_err("gains need the fixed:0.4 reference policy"));
    }
    let result = sim::run_sweep(&spec, Engine::default()).map_err(|e| CliError::Runtime(e.to_string()))?;
    let csv = gains_csv(cfg, &result)?;
    emit(cfg.out.as_deref(), &csv)?;
    for row in result.gains().map_err(config_err)? {
        eprintln!(
            "  {} = {:<6} eta_full {:>8} eta_par {:>8} eta_0.6 {:>8} eta_0.8 {:>8}",
            spec.variable,
            row.sweep_value,
            fmt_short(row.eta_full),
            fmt_short(row.eta_par),
            fmt_short(row.eta_06),
            fmt_short(row.eta_08)
        );
    }
    Ok(())
}

fn fmt_short(g: Option<Gain>) -> String {
    g.map(|g| format!("{:.3}", g.eta)).unwrap_or_else(|| "-".into())
}

pub fn cmd_verify(cfg: &RunConfig, quick: bool, fault: Option<Fault>) -> Result<(), CliError> {
    let opts = VerifyOptions {
        quick,
        seed: cfg.seed,
        fault,
    };
    let reports = verify::run_all(&opts);
    let mut text = String::new();
    for r in &reports {
        let _ = writeln!(text, "{r}");
    }
    match cfg.out.as_deref() {
        Some(path) => emit(Some(path), &text)?,
        None => print!("{text}"),
    }
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

/// Parses nothing; dispatches an already-parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let name = match cli.command {
        Command::Point => "point",
        Command::Sweep => "sweep",
        Command::Gains => "gains",
        Command::Verify { .. } => "verify",
    };
    let cfg = RunConfig::resolve(name, file, &cli.common)?;
    let go = || match cli.command {
        Command::Point => cmd_point(&cfg),
        Command::Sweep => cmd_sweep(&cfg),
        Command::Gains => cmd_gains(&cfg),
        Command::Verify { quick, inject_fault } => {
            cmd_verify(&cfg, quick, inject_fault.then_some(Fault::CorruptFullCsiCoefficient))
        }
    };
    with_threads(cli.common.threads, go)
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError> {
    match threads {
        Some(0) => Err(config_err("threads must be at least 1")),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T>(threads: Option<usize>, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
    if threads == Some(0) {
        return Err(config_err("threads must be at least 1"));
    }
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn common() -> CommonArgs {
        CommonArgs::default()
    }

    #[test]
    fn defaults_resolve_to_reference_point() {
        let cfg = RunConfig::resolve("point", FileConfig::default(), &common()).unwrap();
        assert_eq!(cfg.system().gamma_0(), 7.0);
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.n, DEFAULT_N);
        assert_eq!(cfg.policy_list().len(), 5);
    }

    #[test]
    fn flags_override_file() {
        let file = FileConfig {
            n: Some(10),
            seed: Some(3),
            ..Default::default()
        };
        let args = CommonArgs {
            n: Some(20),
            seed: Some(4),
            ..Default::default()
        };
        let cfg = RunConfig::resolve("point", file, &args).unwrap();
        assert_eq!((cfg.n, cfg.seed), (20, 4));
    }

    #[test]
    fn zero_n_is_config_error() {
        let args = CommonArgs {
            n: Some(0),
            ..Default::default()
        };
        let err = RunConfig::resolve("point", FileConfig::default(), &args).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_policy_lists_valid_names() {
        let file = FileConfig {
            policies: Some(vec!["fixed:0.4".into(), "oracle".into()]),
            ..Default::default()
        };
        let err = RunConfig::resolve("point", file, &common()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("full_csi") && msg.contains("partial_csi"), "{msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn empty_sweep_values_rejected() {
        let file = FileConfig {
            sweep: Some(SweepSection {
                variable: "lambda_g".into(),
                values: vec![],
            }),
            ..Default::default()
        };
        let cfg = RunConfig::resolve("sweep", file, &common()).unwrap();
        assert!(matches!(cfg.sweep_spec(), Err(CliError::Config(_))));
    }

    #[test]
    fn bad_params_rejected() {
        let file = FileConfig {
            epsilon: Some(0.0),
            ..Default::default()
        };
        let err = RunConfig::resolve("point", file, &common()).unwrap_err();
        assert!(err.to_string().contains("epsilon out of range"));
    }

    #[test]
    fn unknown_key_rejected() {
        let err = serde_json::from_str::<FileConfig>(r#"{"p_s": 40}"#);
        assert!(err.is_err());
    }

    #[test]
    fn point_csv_layout() {
        let args = CommonArgs {
            n: Some(1000),
            ..Default::default()
        };
        let cfg = RunConfig::resolve("point", FileConfig::default(), &args).unwrap();
        let est = sim::outage_mc_many(cfg.system(), cfg.fading(), cfg.policy_list(), 1000, cfg.seed, Engine::Sequential).unwrap();
        let csv = point_csv(&cfg, &est);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with('#'));
        let header = lines.iter().position(|l| *l == POINT_HEADER).unwrap();
        assert!(lines[..header].iter().all(|l| l.starts_with('#')));
        assert_eq!(lines.len() - header - 1, 5);
        assert!(lines[header + 1].starts_with("full_csi,"));
    }

    #[test]
    fn gains_path_next_to_output() {
        assert_eq!(sibling_gains_path(Path::new("/tmp/x/run.csv")), PathBuf::from("/tmp/x/run.gains.csv"));
    }
}
