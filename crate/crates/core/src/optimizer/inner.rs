//! The inner problem at a fixed help-rate budget `r`:
//!
//! maximize I(U;Y) - κ·I(U;S) over Q(u|s) and deterministic φ: U → X,
//! subject to I(U;S) <= r,
//!
//! with κ = 1 for the envelope path and κ = 0 for the rate-split path.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::objective::{BranchModel, BranchValue, Workspace};
use super::simplex::project_rows;
use super::OptimOptions;
use crate::blahut::{averaged_channel, dmc_capacity, state_slice};
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::seed::task_rng;

/// Lower bound kept on every entry of Q(u|s) during the ascent so that all
/// logarithms and gradients stay finite.
pub(crate) const FLOOR: f64 = 1e-12;

/// Constraint tolerance on reported slack.
pub const EPS_FEAS: f64 = 1e-9;

const STREAM_STARTS: u64 = 0x5354_4152;
const STREAM_PHI_SAMPLES: u64 = 0x5048_4953;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Objective {
    /// I(U;Y) - I(U;S)
    Gap,
    /// I(U;Y)
    Output,
}

impl Objective {
    fn kappa(self) -> f64 {
        match self {
            Objective::Gap => 1.0,
            Objective::Output => 0.0,
        }
    }
}

/// Solution of the inner problem at budget `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct GPoint {
    /// Help-rate budget (bits).
    pub r: f64,
    /// I(U;Y) - I(U;S) at the solution (bits).
    pub g: f64,
    pub i_uy: f64,
    pub i_us: f64,
    /// Flat `(s, u)`.
    pub q_u_given_s: Vec<f64>,
    pub phi: Vec<usize>,
    /// `r - I(U;S)`.
    pub slack: f64,
}

impl GPoint {
    pub fn u_size(&self) -> usize {
        self.phi.len()
    }

    pub(crate) fn value(&self, objective: Objective) -> f64 {
        match objective {
            Objective::Gap => self.g,
            Objective::Output => self.i_uy,
        }
    }

    fn from_value(r: f64, val: BranchValue, q: Vec<f64>, phi: Vec<usize>) -> Self {
        Self {
            r,
            g: val.i_uy - val.i_us,
            i_uy: val.i_uy,
            i_us: val.i_us,
            q_u_given_s: q,
            phi,
            slack: r - val.i_us,
        }
    }
}

/// Number of nondecreasing maps `{0..u_size} -> {0..x_size}`, saturating.
pub fn canonical_phi_count(x_size: usize, u_size: usize) -> usize {
    // C(u_size + x_size - 1, x_size - 1)
    let k = x_size - 1;
    let n = u_size + k;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Every nondecreasing map from `u_size` auxiliary letters to `x_size`
/// inputs, in lexicographic order. Relabeling U permutes the columns of
/// Q(u|s) without changing any information measure, so these maps cover
/// every φ up to that symmetry.
pub fn canonical_phis(x_size: usize, u_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; u_size];
    loop {
        out.push(cur.clone());
        let mut i = u_size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] + 1 < x_size {
                let v = cur[i] + 1;
                cur[i..].iter_mut().for_each(|c| *c = v);
                break;
            }
        }
    }
}

pub(crate) struct InnerContext<'a> {
    ch: &'a Channel,
    opts: &'a OptimOptions,
    u_size: usize,
    h_s: f64,
    phis: Vec<Vec<usize>>,
    models: Vec<BranchModel>,
    exhaustive: bool,
    avg_input: Vec<f64>,
    state_inputs: Vec<Vec<f64>>,
}

impl<'a> InnerContext<'a> {
    pub(crate) fn new(ch: &'a Channel, u_size: usize, opts: &'a OptimOptions) -> Result<Self> {
        if u_size == 0 || u_size > ch.max_u_size() {
            return Err(Error::SizeOutOfRange {
                what: "u_size".into(),
                value: u_size as i64,
                max: ch.max_u_size(),
            });
        }
        let nx = ch.x_size();
        let exhaustive = canonical_phi_count(nx, u_size) <= opts.phi_enum_cap;
        let phis = if exhaustive {
            canonical_phis(nx, u_size)
        } else {
            sample_phis(nx, u_size, opts.phi_samples.max(1), opts.seed)
        };
        let models = phis.iter().map(|phi| BranchModel::new(ch, phi)).collect();
        let uniform_x = vec![1.0 / nx as f64; nx];
        // Warm starts only; a loose tolerance is enough.
        let avg_input = dmc_capacity(&averaged_channel(ch), 1e-7, 20_000)
            .map(|c| c.input)
            .unwrap_or_else(|_| uniform_x.clone());
        let state_inputs = (0..ch.s_size())
            .map(|s| {
                dmc_capacity(&state_slice(ch, s), 1e-7, 20_000)
                    .map(|c| c.input)
                    .unwrap_or_else(|_| uniform_x.clone())
            })
            .collect();
        Ok(Self {
            ch,
            opts,
            u_size,
            h_s: ch.state_entropy(),
            phis,
            models,
            exhaustive,
            avg_input,
            state_inputs,
        })
    }

    fn random_starts_per_phi(&self) -> usize {
        let n = self.phis.len().max(1);
        self.opts.restarts.div_ceil(n).max(1)
    }

    /// Solves at budget `r`; returns the best point and the number of starts.
    pub(crate) fn solve(
        &self,
        r: f64,
        objective: Objective,
        seed: u64,
    ) -> Result<(GPoint, usize)> {
        let mut ws = Workspace::default();
        let mut best: Option<GPoint> = None;
        let mut starts = 0;
        for (pi, model) in self.models.iter().enumerate() {
            let mut rng = task_rng(seed, STREAM_STARTS, pi as u64);
            for q0 in self.starts_for(model, &mut rng) {
                starts += 1;
                let cand = self.run_start(model, q0, r, objective, &mut ws)?;
                if better(&cand, best.as_ref(), objective) {
                    best = Some(cand);
                }
            }
        }
        let mut best = best.expect("at least one start");
        if !self.exhaustive {
            let (improved, extra) = self.greedy_phi(best.clone(), r, objective, &mut ws)?;
            best = improved;
            starts += extra;
        }
        Ok((best, starts))
    }

    /// Unconstrained ascent of I(U;Y) - kappa·I(U;S) from the given points.
    /// Each result is recorded with budget equal to its own I(U;S).
    pub(crate) fn lagrangian(&self, kappa: f64, from: &[&GPoint]) -> Result<Vec<GPoint>> {
        let mut ws = Workspace::default();
        from.iter()
            .map(|p| {
                let model = BranchModel::new(self.ch, &p.phi);
                let mut q = p.q_u_given_s.clone();
                project_rows(&mut q, self.u_size, FLOOR);
                self.ascend(&model, &mut q, kappa, None, false, &mut ws)?;
                let val = model.eval(&q, &mut ws);
                let mut point = GPoint::from_value(val.i_us, val, q, p.phi.clone());
                point.slack = 0.0;
                Ok(point)
            })
            .collect()
    }

    fn starts_for(&self, model: &BranchModel, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let (ns, nu) = (model.ns, model.nu);
        let mut starts = Vec::new();

        // U independent of S, input law optimal for the state-averaged channel.
        let mut counts = vec![0usize; self.ch.x_size()];
        model.phi.iter().for_each(|&x| counts[x] += 1);
        let mut pi: Vec<f64> = model
            .phi
            .iter()
            .map(|&x| self.avg_input[x] / counts[x] as f64)
            .collect();
        let total: f64 = pi.iter().sum();
        if total > 0.0 {
            pi.iter_mut().for_each(|p| *p /= total);
        } else {
            pi = vec![1.0 / nu as f64; nu];
        }
        starts.push(pi.repeat(ns));

        // U carries (X, S): a distinct letter per state where φ allows it.
        let mut q = vec![0.0; ns * nu];
        for s in 0..ns {
            for (x, &px) in self.state_inputs[s].iter().enumerate() {
                let members: Vec<usize> = (0..nu).filter(|&u| model.phi[u] == x).collect();
                if !members.is_empty() {
                    q[s * nu + members[s % members.len()]] += px;
                }
            }
            let row = &mut q[s * nu..(s + 1) * nu];
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|v| *v /= sum);
            } else {
                row.iter_mut().for_each(|v| *v = 1.0 / nu as f64);
            }
        }
        starts.push(q);

        for k in 0..self.random_starts_per_phi() {
            let alpha = if k % 2 == 0 { 1.0 } else { 0.3 };
            let gamma = Gamma::new(alpha, 1.0).expect("valid shape");
            let mut q: Vec<f64> = (0..ns * nu).map(|_| gamma.sample(rng) + 1e-300).collect();
            for row in q.chunks_mut(nu) {
                let sum: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= sum);
            }
            starts.push(q);
        }
        starts
    }

    fn run_start(
        &self,
        model: &BranchModel,
        mut q: Vec<f64>,
        r: f64,
        objective: Objective,
        ws: &mut Workspace,
    ) -> Result<GPoint> {
        let kappa = objective.kappa();
        project_rows(&mut q, model.nu, FLOOR);
        if r <= 0.0 {
            // Only state-independent kernels are feasible.
            polish(model, &mut q, 0.0, ws);
            self.ascend(model, &mut q, kappa, None, true, ws)?;
        } else {
            // With lambda = 0 and slack, the penalty vanishes and this is the
            // unconstrained ascent.
            let mut lambda = 0.0;
            'stages: for &mult in &self.opts.penalty_schedule {
                let mu = self.opts.penalty_base * mult;
                for _ in 0..AL_UPDATES {
                    let pen = Penalty { r, mu, lambda };
                    self.ascend(model, &mut q, kappa, Some(pen), false, ws)?;
                    let excess = model.eval(&q, ws).i_us - r;
                    let slack_unpenalized = excess < 0.0 && lambda == 0.0;
                    lambda = (lambda + mu * excess).max(0.0);
                    if excess.abs() <= EPS_FEAS || slack_unpenalized {
                        break 'stages;
                    }
                }
            }
            polish(model, &mut q, r, ws);
        }
        let val = model.eval(&q, ws);
        if !(val.i_uy.is_finite() && val.i_us.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "objective became non-finite at budget {r}"
            )));
        }
        Ok(GPoint::from_value(r, val, q, model.phi.clone()))
    }

    /// Gradient ascent on the simplex product with entropic (exponentiated
    /// gradient) steps, Barzilai-Borwein step lengths and a nonmonotone Armijo
    /// test. The objective is `I(U;Y) - kappa·I(U;S)`, minus an augmented
    /// Lagrangian term for `I(U;S) <= r` when `penalty` is set.
    ///
    /// With `tied`, every row of Q(u|s) is kept equal to a common law over U
    /// (so I(U;S) = 0 throughout) and the gradient is summed over states.
    fn ascend(
        &self,
        model: &BranchModel,
        q: &mut Vec<f64>,
        kappa: f64,
        penalty: Option<Penalty>,
        tied: bool,
        ws: &mut Workspace,
    ) -> Result<()> {
        let n = model.len();
        let (ns, nu) = (model.ns, model.nu);
        let mut g_uy = vec![0.0; n];
        let mut g_us = vec![0.0; n];
        let mut grad = vec![0.0; n];
        let mut cand = vec![0.0; n];
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;

        let score = |v: BranchValue| -> f64 {
            let mut f = v.i_uy - kappa * v.i_us;
            if let Some(p) = penalty {
                f -= p.value(v.i_us);
            }
            f
        };

        let mut step = self.opts.step_init;
        let mut val = model.eval(q, ws);
        let mut f = score(val);
        let mut stalls = 0;
        let mut recent = VecDeque::from([f]);
        let mut best = (f, q.clone());
        let mut window_start = f;
        for it in 0..self.opts.max_iters {
            if it > 0 && it % PROGRESS_WINDOW == 0 {
                if best.0 - window_start <= 1e-8 * (1.0 + best.0.abs()) {
                    break;
                }
                window_start = best.0;
            }
            model.grad(ws, &mut g_uy, &mut g_us);
            let pen_slope = penalty.map_or(0.0, |p| p.slope(val.i_us));
            for k in 0..n {
                grad[k] = g_uy[k] - (kappa + pen_slope) * g_us[k];
            }
            if tied {
                for u in 0..nu {
                    let total: f64 = (0..ns).map(|s| grad[s * nu + u]).sum();
                    (0..ns).for_each(|s| grad[s * nu + u] = total);
                }
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NumericalFailure("non-finite gradient".into()));
            }
            // Step length from the last accepted move, in log coordinates.
            if let Some((q_old, g_old)) = &prev {
                let (mut ss, mut sy) = (0.0, 0.0);
                for k in 0..n {
                    let d = (q[k] / q_old[k]).ln();
                    ss += d * d;
                    sy -= d * (grad[k] - g_old[k]);
                }
                step = if sy > 0.0 {
                    (ss / sy).clamp(1e-10, 1e6)
                } else {
                    (step * 2.0).min(1e6)
                };
            }
            let reference = recent.iter().copied().fold(f64::INFINITY, f64::min);
            let rows = if tied { 1 } else { ns };
            let mut accepted = false;
            while step > 1e-14 {
                for row in 0..rows {
                    let span = row * nu..(row + 1) * nu;
                    exp_step(&q[span.clone()], &grad[span.clone()], step, &mut cand[span]);
                }
                for s in rows..ns {
                    cand.copy_within(0..nu, s * nu);
                }
                let dir: f64 = (0..rows * nu).map(|k| grad[k] * (cand[k] - q[k])).sum();
                let cval = model.eval(&cand, ws);
                let fc = score(cval);
                if fc.is_finite() && fc >= reference + 1e-4 * dir {
                    match &mut prev {
                        Some((q_old, g_old)) => {
                            q_old.copy_from_slice(q);
                            g_old.copy_from_slice(&grad);
                        }
                        None => prev = Some((q.clone(), grad.clone())),
                    }
                    std::mem::swap(q, &mut cand);
                    if (fc - f).abs() <= 1e-12 * (1.0 + fc.abs()) {
                        stalls += 1;
                    } else {
                        stalls = 0;
                    }
                    val = cval;
                    f = fc;
                    accepted = true;
                    recent.push_back(f);
                    if recent.len() > NONMONOTONE_MEMORY {
                        recent.pop_front();
                    }
                    if f > best.0 {
                        best.0 = f;
                        best.1.copy_from_slice(q);
                    }
                    break;
                }
                step *= 0.5;
            }
            if !accepted || stalls >= 3 {
                break;
            }
        }
        q.copy_from_slice(&best.1);
        Ok(())
    }

    /// Local search over φ from the best sampled map: reassign one auxiliary
    /// letter at a time, re-optimizing Q from the incumbent.
    fn greedy_phi(
        &self,
        mut best: GPoint,
        r: f64,
        objective: Objective,
        ws: &mut Workspace,
    ) -> Result<(GPoint, usize)> {
        let mut extra = 0;
        for _pass in 0..3 {
            let mut improved = false;
            for u in 0..self.u_size {
                for x in 0..self.ch.x_size() {
                    if x == best.phi[u] {
                        continue;
                    }
                    let mut phi = best.phi.clone();
                    phi[u] = x;
                    let model = BranchModel::new(self.ch, &phi);
                    extra += 1;
                    let cand =
                        self.run_start(&model, best.q_u_given_s.clone(), r, objective, ws)?;
                    if better(&cand, Some(&best), objective) {
                        best = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        Ok((best, extra))
    }

    pub(crate) fn state_entropy(&self) -> f64 {
        self.h_s
    }
}

/// Strict improvement beyond round-off; ties keep the earlier candidate.
fn better(cand: &GPoint, best: Option<&GPoint>, objective: Objective) -> bool {
    if cand.slack < -EPS_FEAS {
        return false;
    }
    match best {
        None => true,
        Some(b) => cand.value(objective) > b.value(objective) + 1e-13,
    }
}

/// Mixes Q(u|s) toward the state-independent kernel with the same U-marginal
/// until I(U;S) <= r. I(U;S) is convex along that segment and vanishes at
/// its far end, so bisection finds the closest feasible point.
const AL_UPDATES: usize = 4;

const NONMONOTONE_MEMORY: usize = 10;
/// Iterations over which an ascent must gain at least 1e-8 (relative) to continue.
const PROGRESS_WINDOW: usize = 50;

/// Augmented Lagrangian term for the constraint `I(U;S) <= r`.
#[derive(Debug, Clone, Copy)]
struct Penalty {
    r: f64,
    mu: f64,
    lambda: f64,
}

impl Penalty {
    fn value(&self, i_us: f64) -> f64 {
        let t = (self.lambda + self.mu * (i_us - self.r)).max(0.0);
        (t * t - self.lambda * self.lambda) / (2.0 * self.mu)
    }

    fn slope(&self, i_us: f64) -> f64 {
        (self.lambda + self.mu * (i_us - self.r)).max(0.0)
    }
}

/// `out ∝ q · exp(step · g)`, floored at [`FLOOR`].
fn exp_step(q: &[f64], g: &[f64], step: f64, out: &mut [f64]) {
    let g_max = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for ((o, &qk), &gk) in out.iter_mut().zip(q).zip(g) {
        *o = qk * (step * (gk - g_max)).exp();
        total += *o;
    }
    let mut floored = 0.0;
    for o in out.iter_mut() {
        *o = (*o / total).max(FLOOR);
        floored += *o;
    }
    out.iter_mut().for_each(|o| *o /= floored);
}

fn polish(model: &BranchModel, q: &mut [f64], r: f64, ws: &mut Workspace) {
    if model.eval(q, ws).i_us <= r {
        return;
    }
    let (ns, nu) = (model.ns, model.nu);
    let mut pu = vec![0.0; nu];
    for s in 0..ns {
        for u in 0..nu {
            pu[u] += model.q_s[s] * q[s * nu + u];
        }
    }
    let total: f64 = pu.iter().sum();
    pu.iter_mut().for_each(|p| *p /= total);
    let indep = pu.repeat(ns);
    let orig = q.to_vec();
    let mix = |t: f64, out: &mut [f64]| {
        for k in 0..out.len() {
            out[k] = (1.0 - t) * orig[k] + t * indep[k];
        }
    };
    let mut buf = vec![0.0; q.len()];
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        mix(mid, &mut buf);
        if model.eval(&buf, ws).i_us <= r {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    mix(hi, q);
}

fn sample_phis(x_size: usize, u_size: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = task_rng(seed, STREAM_PHI_SAMPLES, 0);
    let mut out: Vec<Vec<usize>> = Vec::new();
    // Balanced map first: every input letter gets a share of U.
    out.push((0..u_size).map(|u| u * x_size / u_size).collect());
    let mut attempts = 0;
    while out.len() < count && attempts < 50 * count {
        attempts += 1;
        let mut phi: Vec<usize> = (0..u_size).map(|_| rng.random_range(0..x_size)).collect();
        phi.sort_unstable();
        if !out.contains(&phi) {
            out.push(phi);
        }
    }
    out.sort();
    out
}
