use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "helpercap", version)]
#[command(about = "Capacity of channels with state when a rate-limited helper also knows the message")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Serialize)]
pub struct Common {
    /// Seed for every random choice; runs are reproducible from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = positive_usize)]
    pub jobs: Option<usize>,
    /// Write results here instead of stdout; a manifest is written alongside.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file overriding the check tolerances.
    #[arg(long, global = true)]
    pub tolerance_overrides: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a channel file and summarize it.
    Validate(ValidateArgs),
    /// Compute C(Rh) at one help rate.
    Capacity(CapacityArgs),
    /// Compute C(Rh) over a uniform grid of help rates (CSV).
    Sweep(SweepArgs),
    /// Print the closed-form values that apply to a channel.
    Oracle(OracleArgs),
    /// Simulate the coding scheme and append a CSV row.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct ValidateArgs {
    pub channel: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Envelope,
    #[value(name = "rate_split", alias = "rate-split")]
    RateSplit,
    #[value(name = "brute_force", alias = "brute-force")]
    BruteForce,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMethod {
    Envelope,
    #[value(name = "rate_split", alias = "rate-split")]
    RateSplit,
}

#[derive(Args, Debug, Serialize)]
pub struct OptimizerArgs {
    /// Random starts per inner solve.
    #[arg(long, value_parser = positive_usize)]
    pub restarts: Option<usize>,
    /// Auxiliary alphabet size (default |X||S|+1).
    #[arg(long, value_parser = positive_usize)]
    pub u_size: Option<usize>,
    /// Budgets on the inner grid over [0, H(S)].
    #[arg(long, value_parser = positive_usize)]
    pub grid_size: Option<usize>,
    #[arg(long, value_parser = positive_usize)]
    pub max_iters: Option<usize>,
    /// Lattice levels per coordinate for brute force.
    #[arg(long, default_value_t = 7, value_parser = at_least_two)]
    pub grid_levels: usize,
    /// Auxiliary alphabet size for brute force.
    #[arg(long, default_value_t = 3, value_parser = positive_usize)]
    pub brute_u_size: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct CapacityArgs {
    pub channel: PathBuf,
    #[arg(long, value_parser = nonneg_f64, allow_hyphen_values = true)]
    pub rh: f64,
    #[arg(long, value_enum, default_value = "envelope")]
    pub method: MethodArg,
    /// Compare with any closed form that applies; exit 1 on a breach.
    #[arg(long)]
    pub check_oracle: bool,
    #[command(flatten)]
    pub opt: OptimizerArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    pub channel: PathBuf,
    #[arg(long, value_parser = nonneg_f64, allow_hyphen_values = true)]
    pub rh_min: f64,
    #[arg(long, value_parser = nonneg_f64, allow_hyphen_values = true)]
    pub rh_max: f64,
    #[arg(long, value_parser = at_least_two)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "envelope")]
    pub method: SweepMethod,
    /// Envelope support points (default: next to --out).
    #[arg(long)]
    pub support_out: Option<PathBuf>,
    #[command(flatten)]
    pub opt: OptimizerArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct OracleArgs {
    pub channel: PathBuf,
    #[arg(long, value_parser = nonneg_f64, allow_hyphen_values = true)]
    pub rh: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Explicit,
    Ensemble,
}

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("policy_source").required(true).args(["policy_from_capacity", "policy"])))]
pub struct SimulateArgs {
    pub channel: PathBuf,
    /// Simulate the heaviest branch of the optimizer's policy at this help rate.
    #[arg(long, value_parser = nonneg_f64, allow_hyphen_values = true)]
    pub policy_from_capacity: Option<f64>,
    /// TOML policy file with `q_u_given_s` and `phi`.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long, value_parser = positive_usize)]
    pub n: usize,
    #[arg(long, value_parser = nonneg_f64, allow_hyphen_values = true)]
    pub rate_r: f64,
    #[arg(long, value_parser = nonneg_f64, allow_hyphen_values = true)]
    pub rate_rh: f64,
    #[arg(long, default_value_t = 0.0, value_parser = nonneg_f64, allow_hyphen_values = true)]
    pub r0: f64,
    /// Helper typicality slack.
    #[arg(long, default_value_t = 0.05, value_parser = slack)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1, value_parser = slack)]
    pub epsilon_decoder: f64,
    #[arg(long, value_parser = positive_usize)]
    pub trials: usize,
    #[arg(long, value_enum, default_value = "explicit")]
    pub mode: ModeArg,
    /// One codebook for all trials instead of a fresh one per trial.
    #[arg(long)]
    pub share_codebook: bool,
    /// Per-trial outcomes as CSV.
    #[arg(long)]
    pub trial_log: Option<PathBuf>,
    #[command(flatten)]
    pub opt: OptimizerArgs,
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn at_least_two(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 2 => Ok(v),
        Ok(_) => Err("must be at least 2".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn nonneg_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{s} is not a finite nonnegative number"))
    }
}

fn slack(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if v > 0.0 && v < 0.5 {
        Ok(v)
    } else {
        Err(format!("{s} is outside (0, 0.5)"))
    }
}
