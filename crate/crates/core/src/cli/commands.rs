use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use helpercap::blahut::oblivious_baseline;
use helpercap::format::{self, num};
use helpercap::oracles::{
    detect_mod_additive, detect_useless, large_help_lower_bound, mod_additive_capacity,
    useless_capacity, OracleCase, OracleValue,
};
use helpercap::sim::{run_trials, SimConfig, SimMode};
use helpercap::{
    brute_force_capacity, capacity, capacity_rate_split, sweep, CapacityResult, Channel,
    OptimOptions,
};

use super::args::*;
use super::CliError;

type CliResult<T> = std::result::Result<T, CliError>;

/// Tolerances for the checks the CLI performs; each can be overridden.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Tolerances {
    useless: f64,
    mod_additive: f64,
    cross_path: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            useless: 1e-3,
            mod_additive: 1e-2,
            cross_path: 2e-2,
        }
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    channel_path: &'a Path,
    parameters: BTreeMap<String, serde_json::Value>,
    seed: u64,
    tool_version: &'static str,
    wall_time: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    q_u_given_s: Vec<Vec<f64>>,
    phi: Vec<usize>,
}

pub fn run(cli: super::Cli) -> CliResult<()> {
    let start = Instant::now();
    if let Some(jobs) = cli.common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Domain(format!("thread pool: {e}")))?;
    }
    let tol = match &cli.common.tolerance_overrides {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| {
                CliError::Usage(format!("{}: {}", path.display(), e.message()))
            })?
        }
        None => Tolerances::default(),
    };
    let common = &cli.common;
    let (name, channel, params, output) = match &cli.command {
        Command::Validate(a) => ("validate", &a.channel, to_params(a), validate(a)?),
        Command::Capacity(a) => ("capacity", &a.channel, to_params(a), cmd_capacity(a, common, &tol)?),
        Command::Sweep(a) => ("sweep", &a.channel, to_params(a), cmd_sweep(a, common)?),
        Command::Oracle(a) => ("oracle", &a.channel, to_params(a), cmd_oracle(a)?),
        Command::Simulate(a) => ("simulate", &a.channel, to_params(a), cmd_simulate(a, common)?),
    };
    match (&common.out, output) {
        (Some(path), Output::Replace(text)) => fs::write(path, text)?,
        (Some(path), Output::Append { header, row }) => append_csv(path, &header, &row)?,
        (None, Output::Replace(text)) => print!("{text}"),
        (None, Output::Append { header, row }) => print!("{header}\n{row}\n"),
    }
    if let Some(path) = &common.out {
        let manifest = RunManifest {
            command: name,
            channel_path: channel,
            parameters: params,
            seed: common.seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            wall_time: start.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(sidecar(path, "manifest.json"), text + "\n")?;
    }
    Ok(())
}

enum Output {
    Replace(String),
    Append { header: String, row: String },
}

fn to_params<T: Serialize>(args: &T) -> BTreeMap<String, serde_json::Value> {
    match serde_json::to_value(args).expect("arguments serialize") {
        serde_json::Value::Object(map) => map.into_iter().collect(),
        _ => BTreeMap::new(),
    }
}

/// `out.csv` → `out.csv.<suffix>`.
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

fn append_csv(path: &Path, header: &str, row: &str) -> CliResult<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "{header}")?;
    }
    writeln!(f, "{row}")?;
    Ok(())
}

fn load(path: &Path) -> CliResult<Channel> {
    Channel::from_path(path).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn options(opt: &OptimizerArgs, seed: u64) -> OptimOptions {
    let mut o = OptimOptions {
        seed,
        u_size: opt.u_size,
        ..OptimOptions::default()
    };
    if let Some(r) = opt.restarts {
        o.restarts = r;
    }
    if let Some(g) = opt.grid_size {
        o.r_grid_size = g;
    }
    if let Some(m) = opt.max_iters {
        o.max_iters = m;
    }
    o
}

fn validate(a: &ValidateArgs) -> CliResult<Output> {
    let ch = load(&a.channel)?;
    let h_s = ch.state_entropy();
    let mut cases = Vec::new();
    if detect_useless(&ch) {
        cases.push("useless");
    }
    if detect_mod_additive(&ch).is_some() {
        cases.push("mod_additive");
    }
    let mut out = format!(
        "x_size = {}\ns_size = {}\ny_size = {}\nh_s = {}\n",
        ch.x_size(),
        ch.s_size(),
        ch.y_size(),
        num(h_s)
    );
    if cases.is_empty() {
        out.push_str("no special case detected\n");
    }
    for c in cases {
        out.push_str(&format!("{c} detected, H(S)={}\n", num(h_s)));
    }
    Ok(Output::Replace(out))
}

fn oracle_for(ch: &Channel, rh: f64) -> CliResult<Option<OracleValue>> {
    if detect_useless(ch) {
        return Ok(Some(useless_capacity(rh)?));
    }
    if detect_mod_additive(ch).is_some() {
        return Ok(Some(mod_additive_capacity(ch, rh)?));
    }
    Ok(None)
}

fn cmd_capacity(a: &CapacityArgs, common: &Common, tol: &Tolerances) -> CliResult<Output> {
    let ch = load(&a.channel)?;
    let opts = options(&a.opt, common.seed);
    let brute = || brute_force_capacity(&ch, a.rh, a.opt.grid_levels, a.opt.brute_u_size);
    let results: Vec<CapacityResult> = match a.method {
        MethodArg::Envelope => vec![capacity(&ch, a.rh, &opts)?],
        MethodArg::RateSplit => vec![capacity_rate_split(&ch, a.rh, &opts)?],
        MethodArg::BruteForce => vec![brute()?],
        MethodArg::All => {
            let mut v = vec![capacity(&ch, a.rh, &opts)?, capacity_rate_split(&ch, a.rh, &opts)?];
            match brute() {
                Ok(r) => v.push(r),
                Err(helpercap::Error::TooLarge(m)) => eprintln!("brute force skipped: {m}"),
                Err(e) => return Err(e.into()),
            }
            v
        }
    };
    let mut out = String::new();
    for (i, r) in results.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format::capacity_record(r));
    }
    let mut breach = None;
    if results.len() > 1 {
        let gap = (results[0].c - results[1].c).abs();
        out.push_str(&format!("\ncross_path_gap = {}\n", num(gap)));
        if gap > tol.cross_path {
            breach = Some(format!("envelope and rate-split differ by {}", num(gap)));
        }
    }
    if a.check_oracle {
        match oracle_for(&ch, a.rh)? {
            Some(oracle) => {
                let limit = match oracle.case_name {
                    OracleCase::Useless => tol.useless,
                    _ => tol.mod_additive,
                };
                let worst = results
                    .iter()
                    .map(|r| (r.c - oracle.value).abs())
                    .fold(0.0, f64::max);
                let pass = worst <= limit;
                out.push_str(&format!(
                    "\noracle_case = {}\noracle_value = {}\noracle_gap = {}\noracle_check = {}\n",
                    oracle.case_name,
                    num(oracle.value),
                    num(worst),
                    if pass { "pass" } else { "fail" }
                ));
                if !pass {
                    breach = Some(format!("capacity is {} away from the oracle", num(worst)));
                }
            }
            None => out.push_str("\noracle_case = none\n"),
        }
    }
    if let Some(msg) = breach {
        print!("{out}");
        return Err(CliError::Domain(msg));
    }
    Ok(Output::Replace(out))
}

fn cmd_sweep(a: &SweepArgs, common: &Common) -> CliResult<Output> {
    if a.rh_min > a.rh_max {
        return Err(CliError::Usage(format!(
            "rh-min {} exceeds rh-max {}",
            a.rh_min, a.rh_max
        )));
    }
    let ch = load(&a.channel)?;
    let opts = options(&a.opt, common.seed);
    let step = (a.rh_max - a.rh_min) / (a.steps - 1) as f64;
    let grid: Vec<f64> = (0..a.steps)
        .map(|i| if i + 1 == a.steps { a.rh_max } else { a.rh_min + step * i as f64 })
        .collect();
    let results = match a.method {
        SweepMethod::Envelope => sweep(&ch, &grid, &opts)?,
        SweepMethod::RateSplit => grid
            .iter()
            .map(|&rh| capacity_rate_split(&ch, rh, &opts))
            .collect::<helpercap::Result<_>>()?,
    };
    let mut csv = format!("{}\n", format::SWEEP_HEADER);
    let mut support = format!("{}\n", format::SUPPORT_HEADER);
    for r in &results {
        csv.push_str(&format::sweep_row(r));
        csv.push('\n');
        for row in format::support_rows(r) {
            support.push_str(&row);
            support.push('\n');
        }
    }
    let support_path = a
        .support_out
        .clone()
        .or_else(|| common.out.as_deref().map(|p| sidecar(p, "support.csv")));
    if let Some(path) = support_path {
        fs::write(path, support)?;
    }
    Ok(Output::Replace(csv))
}

fn cmd_oracle(a: &OracleArgs) -> CliResult<Output> {
    let ch = load(&a.channel)?;
    let h_s = ch.state_entropy();
    let mut out = format!("rh = {}\nh_s = {}\n", num(a.rh), num(h_s));
    let baseline = oblivious_baseline(&ch)?;
    out.push_str(&format!("oblivious_baseline = {}\n", num(baseline)));
    if let Some(o) = oracle_for(&ch, a.rh)? {
        out.push_str(&format!("{} = {}\n", o.case_name, num(o.value)));
    }
    if a.rh >= h_s {
        let lb = large_help_lower_bound(&ch, a.rh)?;
        out.push_str(&format!(
            "{} = {}\nlarge_help_weaker = {}\n",
            lb.bound.case_name,
            num(lb.bound.value),
            num(lb.weaker.value)
        ));
    }
    Ok(Output::Replace(out))
}

fn cmd_simulate(a: &SimulateArgs, common: &Common) -> CliResult<Output> {
    let ch = load(&a.channel)?;
    let (q_u_given_s, phi) = match (a.policy_from_capacity, &a.policy) {
        (Some(rh), _) => {
            let res = capacity(&ch, rh, &options(&a.opt, common.seed))?;
            let pol = &res.policy;
            // The heaviest time-sharing branch; ties go to the first.
            let v = (0..pol.v_size())
                .fold(0, |best, v| if pol.q_v()[v] > pol.q_v()[best] { v } else { best });
            let rows = (0..pol.s_size()).map(|s| pol.q_u_given_sv(v, s).to_vec()).collect();
            (rows, pol.branch_phi(v).to_vec())
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)?;
            let p: PolicyFile = toml::from_str(&text).map_err(|e| {
                CliError::Domain(format!("{}: {}", path.display(), e.message()))
            })?;
            (p.q_u_given_s, p.phi)
        }
        (None, None) => unreachable!("clap requires a policy source"),
    };
    let cfg = SimConfig {
        n: a.n,
        rate_r: a.rate_r,
        rate_rh: a.rate_rh,
        r0: a.r0,
        epsilon: a.epsilon,
        epsilon_decoder: a.epsilon_decoder,
        trials: a.trials,
        seed: common.seed,
        share_codebook: a.share_codebook,
        mode: match a.mode {
            ModeArg::Explicit => SimMode::Explicit,
            ModeArg::Ensemble => SimMode::Ensemble,
        },
        record_trials: a.trial_log.is_some(),
        ..SimConfig::new(q_u_given_s, phi)
    };
    let rep = run_trials(&ch, &cfg)?;
    if let (Some(path), Some(records)) = (&a.trial_log, &rep.records) {
        let mut text = format!("{}\n", format::TRIAL_HEADER);
        for r in records {
            text.push_str(&format::trial_row(r));
            text.push('\n');
        }
        fs::write(path, text)?;
    }
    Ok(Output::Append {
        header: format::SIM_HEADER.to_string(),
        row: format::sim_row(&rep),
    })
}
