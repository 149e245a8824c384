//! Numerical evaluation of the helper-assisted capacity
//!
//! ```text
//! C(Rh) = max I(U;Y|V) - I(U;S|V) + Rh   s.t.  I(U;S|V) <= Rh
//! ```
//!
//! The main path solves the single-branch problem `g(r)` on a grid of
//! budgets and concavifies it over the time-sharing variable V:
//! `C(Rh) = Rh + env(g)(Rh)`. The rate-split path instead maximizes
//! `I(U;Y|V) + R0` with `I(U;S|V) <= Rh - R0`, and the brute-force path
//! searches a lattice of conditionals exhaustively.

mod brute;
pub mod envelope;
mod inner;
pub mod objective;
pub mod simplex;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::info::AuxiliaryPolicy;
use crate::seed::derive_seed;

pub use brute::brute_force_capacity;
pub use envelope::{concave_envelope, Envelope, SupportPoint};
pub use inner::{canonical_phi_count, canonical_phis, GPoint, EPS_FEAS};

use envelope::running_max_sources;
use inner::{InnerContext, Objective};

const STREAM_GRID: u64 = 0x4752_4944;
const STREAM_RATE_SPLIT: u64 = 0x5253_504c;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimOptions {
    /// Budgets on the uniform g-grid over [0, H(S)].
    pub r_grid_size: usize,
    /// Points of the R0 grid over [0, Rh] on the rate-split path.
    pub r0_grid_size: usize,
    /// Random starts per inner solve, shared across φ maps.
    pub restarts: usize,
    /// Iteration cap for each ascent run.
    pub max_iters: usize,
    pub step_init: f64,
    /// Multipliers applied to `penalty_base` for the successive quadratic
    /// penalty stages (augmented Lagrangian form).
    pub penalty_schedule: Vec<f64>,
    pub penalty_base: f64,
    /// Enumerate φ exhaustively when the number of maps (up to relabeling
    /// of U) is at most this; sample otherwise.
    pub phi_enum_cap: usize,
    pub phi_samples: usize,
    /// Rounds of tangent refinement on the envelope edges.
    pub refine_rounds: usize,
    /// Auxiliary alphabet size; `|X||S|+1` when unset.
    pub u_size: Option<usize>,
    pub seed: u64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            r_grid_size: 33,
            r0_grid_size: 33,
            restarts: 64,
            max_iters: 5000,
            step_init: 0.1,
            penalty_schedule: vec![1.0, 10.0, 100.0, 1000.0],
            penalty_base: 100.0,
            phi_enum_cap: 4096,
            phi_samples: 16,
            refine_rounds: 2,
            u_size: None,
            seed: 0,
        }
    }
}

impl OptimOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r_grid_size", self.r_grid_size),
            ("r0_grid_size", self.r0_grid_size),
            ("restarts", self.restarts),
            ("max_iters", self.max_iters),
            ("phi_enum_cap", self.phi_enum_cap),
            ("phi_samples", self.phi_samples),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive")));
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return Err(Error::InvalidArgument("step_init must be positive".into()));
        }
        if !(self.penalty_base > 0.0)
            || self.penalty_schedule.is_empty()
            || self.penalty_schedule.iter().any(|&m| !(m > 0.0))
        {
            return Err(Error::InvalidArgument(
                "penalty schedule must be nonempty and positive".into(),
            ));
        }
        if self.u_size == Some(0) {
            return Err(Error::InvalidArgument("u_size must be positive".into()));
        }
        Ok(())
    }

    fn u_size_for(&self, ch: &Channel) -> usize {
        self.u_size.unwrap_or(ch.max_u_size())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Envelope,
    RateSplit,
    BruteForce,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Envelope => "envelope",
            Method::RateSplit => "rate_split",
            Method::BruteForce => "brute_force",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInfo {
    pub r: f64,
    pub g: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Total optimizer starts (or lattice points for brute force).
    pub restarts: usize,
    /// `Rh - I(U;S|V)` of the returned policy.
    pub slack: f64,
    pub support: Vec<SupportInfo>,
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub rh: f64,
    /// Computed capacity in bits per channel use.
    pub c: f64,
    pub policy: AuxiliaryPolicy,
    /// Helper rate left over for direct message bits, `Rh - I(U;S|V)`.
    pub r0: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

fn check_rh(rh: f64) -> Result<()> {
    if rh.is_finite() && rh >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "help rate must be finite and nonnegative, got {rh}"
        )))
    }
}

/// Uniform budgets on [0, H(S)] plus every extra budget inside that range.
/// Collapses to the single budget 0 when no extra budget is positive.
fn budget_grid(h_s: f64, size: usize, extras: &[f64]) -> Vec<f64> {
    if h_s <= 0.0 || extras.iter().all(|&e| e <= 0.0) {
        return vec![0.0];
    }
    let mut grid: Vec<f64> = if size == 1 {
        vec![h_s]
    } else {
        (0..size)
            .map(|i| h_s * i as f64 / (size - 1) as f64)
            .collect()
    };
    grid[0] = 0.0;
    grid.extend(extras.iter().copied().filter(|&e| e >= 0.0 && e <= h_s));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    grid
}

/// Rebuilds a point table in which every budget carries the best solution
/// found at that budget or any smaller one.
fn monotone_table(points: &[GPoint], objective: Objective) -> Vec<GPoint> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.r, p.value(objective)))
        .collect();
    running_max_sources(&xy)
        .into_iter()
        .map(|(r, src)| {
            let mut p = points[src].clone();
            p.slack = r - p.i_us;
            p.r = r;
            p
        })
        .collect()
}

fn table_xy(table: &[GPoint], objective: Objective) -> Vec<(f64, f64)> {
    table.iter().map(|p| (p.r, p.value(objective))).collect()
}

fn max_budget(table: &[GPoint]) -> f64 {
    table.iter().map(|p| p.r).fold(0.0, f64::max)
}

fn assemble(
    ch: &Channel,
    rh: f64,
    env: &Envelope,
    table: &[GPoint],
    method: Method,
    restarts: usize,
    grid_points: usize,
) -> Result<CapacityResult> {
    let branches: Vec<&GPoint> = env.support.iter().map(|s| &table[s.index]).collect();
    let weights: Vec<f64> = env.support.iter().map(|s| s.weight).collect();
    let u_size = branches[0].u_size();
    let policy = AuxiliaryPolicy::new(
        ch,
        weights.clone(),
        branches
            .iter()
            .map(|b| b.q_u_given_s.chunks(u_size).map(<[f64]>::to_vec).collect())
            .collect(),
        branches.iter().map(|b| b.phi.clone()).collect(),
    )?;
    let i_us: f64 = branches.iter().zip(&weights).map(|(b, w)| w * b.i_us).sum();
    let i_uy: f64 = branches.iter().zip(&weights).map(|(b, w)| w * b.i_uy).sum();
    let support = env
        .support
        .iter()
        .map(|s| SupportInfo {
            r: s.r,
            g: table[s.index].g,
            weight: s.weight,
        })
        .collect();
    Ok(CapacityResult {
        rh,
        c: i_uy - i_us + rh,
        policy,
        r0: rh - i_us,
        method,
        diagnostics: Diagnostics {
            restarts,
            slack: rh - i_us,
            support,
            grid_points,
        },
    })
}

/// C(Rh) via the g-grid and its concave envelope.
pub fn capacity(ch: &Channel, rh: f64, opts: &OptimOptions) -> Result<CapacityResult> {
    Ok(sweep(ch, &[rh], opts)?.remove(0))
}

/// The single-branch inner maximum g(r) = max I(U;Y) - I(U;S) subject to
/// I(U;S) <= r, over Q(u|s) and deterministic φ.
pub fn inner_g(ch: &Channel, u_size: usize, r: f64, opts: &OptimOptions) -> Result<GPoint> {
    opts.validate()?;
    check_rh(r)?;
    let ctx = InnerContext::new(ch, u_size, opts)?;
    Ok(ctx
        .solve(r, Objective::Gap, derive_seed(opts.seed, STREAM_GRID, 0))?
        .0)
}

/// C(Rh) for every entry of `rh_values` (ascending), sharing one g-grid.
pub fn sweep(ch: &Channel, rh_values: &[f64], opts: &OptimOptions) -> Result<Vec<CapacityResult>> {
    opts.validate()?;
    rh_values.iter().try_for_each(|&rh| check_rh(rh))?;
    if rh_values.is_empty() {
        return Ok(Vec::new());
    }
    if rh_values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(
            "help rates must be sorted ascending".into(),
        ));
    }
    let ctx = InnerContext::new(ch, opts.u_size_for(ch), opts)?;
    let grid = budget_grid(ctx.state_entropy(), opts.r_grid_size, rh_values);

    let solved = grid
        .par_iter()
        .enumerate()
        .map(|(i, &r)| ctx.solve(r, Objective::Gap, derive_seed(opts.seed, STREAM_GRID, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut restarts: usize = solved.iter().map(|(_, n)| n).sum();
    let mut points: Vec<GPoint> = solved.into_iter().map(|(p, _)| p).collect();

    // Tangent refinement: for each envelope edge of slope λ, the maximizer of
    // I(U;Y) - (1+λ) I(U;S) touches the true envelope on that edge.
    for _ in 0..opts.refine_rounds {
        let table = monotone_table(&points, Objective::Gap);
        let xy = table_xy(&table, Objective::Gap);
        let top = max_budget(&table);
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &rh in rh_values {
            let env = concave_envelope(&xy, rh.min(top))?;
            if let [a, b] = env.support[..] {
                if !edges.contains(&(a.index, b.index)) {
                    edges.push((a.index, b.index));
                }
            }
        }
        if edges.is_empty() {
            break;
        }
        let added = edges
            .par_iter()
            .map(|&(a, b)| {
                let (pa, pb) = (&table[a], &table[b]);
                let slope = ((pb.g - pa.g) / (pb.r - pa.r)).max(0.0);
                ctx.lagrangian(1.0 + slope, &[pa, pb])
            })
            .collect::<Result<Vec<_>>>()?;
        restarts += 2 * added.len();
        points.extend(added.into_iter().flatten());
    }

    let table = monotone_table(&points, Objective::Gap);
    let xy = table_xy(&table, Objective::Gap);
    let top = max_budget(&table);
    rh_values
        .iter()
        .map(|&rh| {
            let env = concave_envelope(&xy, rh.min(top))?;
            assemble(ch, rh, &env, &table, Method::Envelope, restarts, grid.len())
        })
        .collect()
}

/// C(Rh) as max over R0 in [0, Rh] of max I(U;Y|V) + R0 subject to
/// I(U;S|V) <= Rh - R0. The reported R0 is the exact leftover
/// `Rh - I(U;S|V)` of the selected policy, which is never below the grid
/// value it was selected at.
pub fn capacity_rate_split(ch: &Channel, rh: f64, opts: &OptimOptions) -> Result<CapacityResult> {
    opts.validate()?;
    check_rh(rh)?;
    let ctx = InnerContext::new(ch, opts.u_size_for(ch), opts)?;
    let h_s = ctx.state_entropy();
    let r0_grid: Vec<f64> = if rh == 0.0 || opts.r0_grid_size == 1 {
        vec![0.0]
    } else {
        (0..opts.r0_grid_size)
            .map(|k| rh * k as f64 / (opts.r0_grid_size - 1) as f64)
            .collect()
    };
    let budgets: Vec<f64> = r0_grid.iter().map(|&r0| (rh - r0).clamp(0.0, h_s)).collect();
    let grid = budget_grid(h_s, opts.r_grid_size, &budgets);

    let solved = grid
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            ctx.solve(
                r,
                Objective::Output,
                derive_seed(opts.seed, STREAM_RATE_SPLIT, i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let restarts = solved.iter().map(|(_, n)| n).sum();
    let points: Vec<GPoint> = solved.into_iter().map(|(p, _)| p).collect();
    let table = monotone_table(&points, Objective::Output);
    let xy = table_xy(&table, Objective::Output);
    let top = max_budget(&table);

    let mut best: Option<(f64, Envelope)> = None;
    for (&r0, &budget) in r0_grid.iter().zip(&budgets) {
        let env = concave_envelope(&xy, budget.min(top))?;
        let value = env.value_at + r0;
        if best.as_ref().map_or(true, |(v, _)| value > *v + 1e-13) {
            best = Some((value, env));
        }
    }
    let (_, env) = best.expect("nonempty R0 grid");
    assemble(ch, rh, &env, &table, Method::RateSplit, restarts, grid.len())
}
