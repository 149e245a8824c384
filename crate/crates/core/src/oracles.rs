//! Closed-form values for special channels, used as references for the
//! optimizer: the useless channel, modulo-additive channels, and the chain of
//! lower bounds that holds once the help rate covers the state entropy.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::blahut::{oblivious_baseline, per_state_capacities, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::seed::task_rng;

/// Exact-structure tolerance for detection.
pub const DETECT_TOL: f64 = 1e-12;

const STREAM_LARGE_HELP: u64 = 0x4c48_4c42;
const LARGE_HELP_RANDOM_STARTS: usize = 4;
const LARGE_HELP_MAX_ITERS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleCase {
    Useless,
    ModAdditive,
    LargeHelpLb,
    Oblivious,
}

impl fmt::Display for OracleCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleCase::Useless => "useless",
            OracleCase::ModAdditive => "mod_additive",
            OracleCase::LargeHelpLb => "large_help_lb",
            OracleCase::Oblivious => "oblivious",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleValue {
    pub value: f64,
    pub case_name: OracleCase,
    /// Structural premises that were checked, with their outcome.
    pub assumptions_checked: Vec<(&'static str, bool)>,
}

fn check_rate(rh: f64) -> Result<()> {
    if !rh.is_finite() || rh < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "help rate must be finite and nonnegative, got {rh}"
        )));
    }
    Ok(())
}

/// True when `W(·|x, s)` does not depend on `x` for any state.
pub fn detect_useless(ch: &Channel) -> bool {
    (0..ch.s_size()).all(|s| {
        let first = ch.row(0, s);
        (1..ch.x_size()).all(|x| {
            ch.row(x, s)
                .iter()
                .zip(first)
                .all(|(a, b)| (a - b).abs() <= DETECT_TOL)
        })
    })
}

/// The helper can only forward message bits, so `C = Rh`.
pub fn useless_capacity(rh: f64) -> Result<OracleValue> {
    check_rate(rh)?;
    Ok(OracleValue {
        value: rh,
        case_name: OracleCase::Useless,
        assumptions_checked: vec![("rh_nonnegative", true)],
    })
}

/// Output law of `Y = X + S mod A`, written per state as the map `x -> y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModAdditiveEvidence {
    pub modulus: usize,
    /// `permutations[s][x]` is the output letter reached from `(x, s)`.
    pub permutations: Vec<Vec<usize>>,
}

/// Returns the per-state output permutations when every row of `W` is the
/// point mass at `(x + s) mod A` with `A = |X| = |S| = |Y|`.
pub fn detect_mod_additive(ch: &Channel) -> Option<ModAdditiveEvidence> {
    let a = ch.x_size();
    if ch.s_size() != a || ch.y_size() != a {
        return None;
    }
    let mut permutations = vec![vec![0; a]; a];
    for s in 0..a {
        for x in 0..a {
            let target = (x + s) % a;
            let row = ch.row(x, s);
            let exact = row.iter().enumerate().all(|(y, &w)| {
                let want = if y == target { 1.0 } else { 0.0 };
                (w - want).abs() <= DETECT_TOL
            });
            if !exact {
                return None;
            }
            permutations[s][x] = target;
        }
    }
    Some(ModAdditiveEvidence {
        modulus: a,
        permutations,
    })
}

/// `log2 A - H(S) + Rh`.
pub fn mod_additive_capacity(ch: &Channel, rh: f64) -> Result<OracleValue> {
    check_rate(rh)?;
    let evidence = detect_mod_additive(ch).ok_or(Error::NotModAdditive)?;
    Ok(OracleValue {
        value: (evidence.modulus as f64).log2() - ch.state_entropy() + rh,
        case_name: OracleCase::ModAdditive,
        assumptions_checked: vec![("mod_additive", true), ("rh_nonnegative", true)],
    })
}

/// Mutual informations of the joint `Q_S(s) Q(x|s) W(y|x,s)`, each computed
/// from its own entropy expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateInputInformation {
    pub i_xs_y: f64,
    pub i_x_y_given_s: f64,
    pub i_s_y: f64,
}

fn h(p: impl IntoIterator<Item = f64>) -> f64 {
    p.into_iter()
        .filter(|&v| v > 0.0)
        .map(|v| -v * v.log2())
        .sum()
}

/// `q_x_given_s` is flat `(s, x)`.
pub fn state_input_information(ch: &Channel, q_x_given_s: &[f64]) -> Result<StateInputInformation> {
    let (nx, ns, ny) = (ch.x_size(), ch.s_size(), ch.y_size());
    if q_x_given_s.len() != nx * ns {
        return Err(Error::DimensionMismatch(format!(
            "Q(x|s) has {} entries, expected {}",
            q_x_given_s.len(),
            nx * ns
        )));
    }
    // p[(s, x, y)]
    let mut p = vec![0.0; ns * nx * ny];
    for s in 0..ns {
        for x in 0..nx {
            let m = ch.q_s()[s] * q_x_given_s[s * nx + x];
            for (y, &w) in ch.row(x, s).iter().enumerate() {
                p[(s * nx + x) * ny + y] = m * w;
            }
        }
    }
    let mut p_y = vec![0.0; ny];
    let mut p_sy = vec![0.0; ns * ny];
    let mut p_sx = vec![0.0; ns * nx];
    for s in 0..ns {
        for x in 0..nx {
            for y in 0..ny {
                let v = p[(s * nx + x) * ny + y];
                p_y[y] += v;
                p_sy[s * ny + y] += v;
                p_sx[s * nx + x] += v;
            }
        }
    }
    let h_sxy = h(p.iter().copied());
    let h_sx = h(p_sx.iter().copied());
    let h_sy = h(p_sy.iter().copied());
    let h_y = h(p_y.iter().copied());
    let h_s = h(ch.q_s().iter().copied());
    Ok(StateInputInformation {
        // H(Y) - H(Y|X,S)
        i_xs_y: h_y - (h_sxy - h_sx),
        // H(Y|S) - H(Y|X,S)
        i_x_y_given_s: (h_sy - h_s) - (h_sxy - h_sx),
        // H(Y) - H(Y|S)
        i_s_y: h_y - (h_sy - h_s),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargeHelpBound {
    /// `max_{Q_{X|S}} I(X,S;Y) - H(S) + Rh`.
    pub bound: OracleValue,
    /// `max_{Q_{X|S}} I(X;Y|S) + Rh - H(S)`, never above `bound`.
    pub weaker: OracleValue,
    /// Maximizing conditional, flat `(s, x)`.
    pub q_x_given_s: Vec<f64>,
    pub max_i_xs_y: f64,
}

/// Value of `I(X,S;Y)` and its gradient in the entries of `Q(x|s)`.
fn xs_y_value_grad(ch: &Channel, q: &[f64], p_y: &mut [f64], grad: &mut [f64]) -> f64 {
    let (nx, ns) = (ch.x_size(), ch.s_size());
    p_y.iter_mut().for_each(|v| *v = 0.0);
    for s in 0..ns {
        for x in 0..nx {
            let m = ch.q_s()[s] * q[s * nx + x];
            for (py, &w) in p_y.iter_mut().zip(ch.row(x, s)) {
                *py += m * w;
            }
        }
    }
    let mut value = 0.0;
    for s in 0..ns {
        let qs = ch.q_s()[s];
        for x in 0..nx {
            // D(W(·|x,s) || p_Y), the marginal contribution of (x, s).
            let d: f64 = ch
                .row(x, s)
                .iter()
                .zip(p_y.iter())
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, &py)| w * (w / py).log2())
                .sum();
            value += qs * q[s * nx + x] * d;
            grad[s * nx + x] = qs * d;
        }
    }
    value
}

/// Exponentiated-gradient ascent of `I(X,S;Y)` from `q`, with Armijo
/// backtracking. No concavity is relied on.
fn ascend_xs_y(ch: &Channel, q: &mut Vec<f64>) -> f64 {
    let (nx, ns, ny) = (ch.x_size(), ch.s_size(), ch.y_size());
    let mut p_y = vec![0.0; ny];
    let mut grad = vec![0.0; nx * ns];
    let mut scratch_grad = vec![0.0; nx * ns];
    let mut cand = vec![0.0; nx * ns];
    let mut f = xs_y_value_grad(ch, q, &mut p_y, &mut grad);
    let mut step = 1.0;
    for _ in 0..LARGE_HELP_MAX_ITERS {
        let mut accepted = false;
        while step > 1e-16 {
            for s in 0..ns {
                let row = s * nx..(s + 1) * nx;
                let g_max = grad[row.clone()].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for k in row.clone() {
                    cand[k] = q[k] * (step * (grad[k] - g_max)).exp();
                    total += cand[k];
                }
                cand[row].iter_mut().for_each(|v| *v /= total);
            }
            let dir: f64 = grad.iter().zip(&cand).zip(q.iter()).map(|((g, c), v)| g * (c - v)).sum();
            let fc = xs_y_value_grad(ch, &cand, &mut p_y, &mut scratch_grad);
            if fc >= f + 1e-4 * dir {
                let gain = fc - f;
                std::mem::swap(q, &mut cand);
                std::mem::swap(&mut grad, &mut scratch_grad);
                f = fc;
                accepted = true;
                step = (step * 2.0).min(1e6);
                if gain <= 1e-15 * (1.0 + f.abs()) {
                    return f;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    f
}

/// The large-help lower bound, valid once `Rh >= H(S)`: the helper can
/// describe the state losslessly and forward the remaining rate as message
/// bits.
pub fn large_help_lower_bound(ch: &Channel, rh: f64) -> Result<LargeHelpBound> {
    check_rate(rh)?;
    let h_s = ch.state_entropy();
    if rh < h_s - DETECT_TOL {
        return Err(Error::RhTooSmall { rh, entropy: h_s });
    }
    let (nx, ns) = (ch.x_size(), ch.s_size());

    let mut starts: Vec<Vec<f64>> = Vec::new();
    let per_state = per_state_capacities(ch, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
    starts.push(per_state.iter().flat_map(|c| c.input.iter().copied()).collect());
    starts.push(vec![1.0 / nx as f64; nx * ns]);
    let mut rng = task_rng(0, STREAM_LARGE_HELP, 0);
    for _ in 0..LARGE_HELP_RANDOM_STARTS {
        let mut q: Vec<f64> = (0..nx * ns).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        for row in q.chunks_mut(nx) {
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
        }
        starts.push(q);
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mut q in starts {
        // Keep every entry positive so multiplicative steps can move it.
        q.iter_mut().for_each(|v| *v = v.max(1e-12));
        for row in q.chunks_mut(nx) {
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
        }
        let f = ascend_xs_y(ch, &mut q);
        if best.as_ref().map_or(true, |(b, _)| f > *b + 1e-15) {
            best = Some((f, q));
        }
    }
    let (_, q) = best.expect("at least one start");
    let info = state_input_information(ch, &q)?;
    let baseline = oblivious_baseline(ch)?;
    let premise = ("rh_at_least_entropy", true);
    Ok(LargeHelpBound {
        bound: OracleValue {
            value: info.i_xs_y - h_s + rh,
            case_name: OracleCase::LargeHelpLb,
            assumptions_checked: vec![premise],
        },
        weaker: OracleValue {
            value: baseline + rh - h_s,
            case_name: OracleCase::Oblivious,
            assumptions_checked: vec![premise],
        },
        q_x_given_s: q,
        max_i_xs_y: info.i_xs_y,
    })
}
