//! Text output: numbers at 9 significant digits, CSV rows and key/value
//! records.

use std::fmt::Write as _;

use crate::optimizer::CapacityResult;
use crate::sim::{SimReport, TrialRecord};

pub const SIG_DIGITS: usize = 9;

/// `x` with [`SIG_DIGITS`] significant digits, shortest form, like `%.9g`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    // Scientific first so rounding carries settle the exponent.
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

fn join(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(num).collect::<Vec<_>>().join(";")
}

pub const SWEEP_HEADER: &str = "rh,c,r0,method,slack,support_rs,support_ws";

pub fn sweep_row(res: &CapacityResult) -> String {
    let sup = &res.diagnostics.support;
    format!(
        "{},{},{},{},{},{},{}",
        num(res.rh),
        num(res.c),
        num(res.r0),
        res.method,
        num(res.diagnostics.slack),
        join(sup.iter().map(|p| p.r)),
        join(sup.iter().map(|p| p.weight)),
    )
}

pub const SUPPORT_HEADER: &str = "rh,r,g,weight";

/// One row per envelope support point.
pub fn support_rows(res: &CapacityResult) -> Vec<String> {
    res.diagnostics
        .support
        .iter()
        .map(|p| format!("{},{},{},{}", num(res.rh), num(p.r), num(p.g), num(p.weight)))
        .collect()
}

/// `key = value` lines describing a capacity result and its policy.
pub fn capacity_record(res: &CapacityResult) -> String {
    let mut out = String::new();
    let d = &res.diagnostics;
    let pol = &res.policy;
    let _ = writeln!(out, "method = {}", res.method);
    let _ = writeln!(out, "rh = {}", num(res.rh));
    let _ = writeln!(out, "c = {}", num(res.c));
    let _ = writeln!(out, "r0 = {}", num(res.r0));
    let _ = writeln!(out, "slack = {}", num(d.slack));
    let _ = writeln!(out, "restarts = {}", d.restarts);
    let _ = writeln!(out, "grid_points = {}", d.grid_points);
    let _ = writeln!(out, "support_rs = {}", join(d.support.iter().map(|p| p.r)));
    let _ = writeln!(out, "support_gs = {}", join(d.support.iter().map(|p| p.g)));
    let _ = writeln!(out, "support_ws = {}", join(d.support.iter().map(|p| p.weight)));
    let _ = writeln!(out, "q_v = {}", join(pol.q_v().iter().copied()));
    for v in 0..pol.v_size() {
        let rows: Vec<String> = (0..pol.s_size())
            .map(|s| join(pol.q_u_given_sv(v, s).iter().copied()))
            .collect();
        let _ = writeln!(out, "q_u_given_s[{v}] = {}", rows.join(" | "));
        let phi: Vec<String> = pol.branch_phi(v).iter().map(usize::to_string).collect();
        let _ = writeln!(out, "phi[{v}] = {}", phi.join(";"));
    }
    out
}

pub const SIM_HEADER: &str =
    "n,rate_r,rate_rh,r0,epsilon,trials,helper_failures,decode_errors,error_rate,ci_lo,ci_hi,seed";

pub fn sim_row(rep: &SimReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        rep.n,
        num(rep.rate_r),
        num(rep.rate_rh),
        num(rep.r0),
        num(rep.epsilon),
        rep.trials,
        rep.helper_failures,
        rep.decode_errors,
        num(rep.error_rate),
        num(rep.ci_lo),
        num(rep.ci_hi),
        rep.seed,
    )
}

pub const TRIAL_HEADER: &str = "trial,outcome,t1";

pub fn trial_row(rec: &TrialRecord) -> String {
    let outcome = serde_json::to_value(rec.outcome).expect("outcome serializes");
    format!(
        "{},{},{}",
        rec.trial,
        outcome.as_str().unwrap_or_default(),
        rec.t1.map_or(String::new(), |t| t.to_string())
    )
}
