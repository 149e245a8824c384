//! Blahut–Arimoto capacity of an ordinary DMC and the state-known baseline
//! built from it.

use crate::channel::Channel;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 1_000_000;

/// Capacity of a DMC together with a capacity-achieving input law.
#[derive(Debug, Clone, PartialEq)]
pub struct DmcCapacity {
    pub capacity: f64,
    pub input: Vec<f64>,
    pub iterations: usize,
}

/// Alternating maximization on `w` (rows indexed by input, each a law over
/// `y_size` outputs). Stops once the upper and lower capacity bounds are
/// within `tol` bits.
pub fn dmc_capacity(w: &[Vec<f64>], tol: f64, max_iters: usize) -> Result<DmcCapacity> {
    let nx = w.len();
    let ny = w.first().map_or(0, Vec::len);
    let mut p = vec![1.0 / nx as f64; nx];
    let mut q = vec![0.0; ny];
    let mut d = vec![0.0; nx];
    let mut gap = f64::INFINITY;
    for iter in 1..=max_iters {
        q.iter_mut().for_each(|v| *v = 0.0);
        for (row, &px) in w.iter().zip(&p) {
            for (qy, &wy) in q.iter_mut().zip(row) {
                *qy += px * wy;
            }
        }
        for (dx, row) in d.iter_mut().zip(w) {
            *dx = row
                .iter()
                .zip(&q)
                .filter(|(&wy, _)| wy > 0.0)
                .map(|(&wy, &qy)| wy * (wy / qy).log2())
                .sum();
        }
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = p.iter().zip(&d).map(|(&px, &dx)| px * dx.exp2()).sum();
        let lower = z.log2();
        gap = upper - lower;
        if !gap.is_finite() {
            return Err(Error::NumericalFailure("non-finite Blahut–Arimoto bound".into()));
        }
        if gap <= tol {
            return Ok(DmcCapacity {
                capacity: lower.max(0.0),
                input: p,
                iterations: iter,
            });
        }
        for (px, &dx) in p.iter_mut().zip(&d) {
            *px *= dx.exp2() / z;
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: max_iters,
        gap,
    })
}

/// Rows `W(·|x, s)` for a fixed state.
pub fn state_slice(ch: &Channel, s: usize) -> Vec<Vec<f64>> {
    (0..ch.x_size()).map(|x| ch.row(x, s).to_vec()).collect()
}

/// The state-averaged channel `Σ_s Q_S(s) W(·|x, s)`.
pub fn averaged_channel(ch: &Channel) -> Vec<Vec<f64>> {
    (0..ch.x_size())
        .map(|x| {
            let mut row = vec![0.0; ch.y_size()];
            for (s, &qs) in ch.q_s().iter().enumerate() {
                for (r, &w) in row.iter_mut().zip(ch.row(x, s)) {
                    *r += qs * w;
                }
            }
            row
        })
        .collect()
}

/// Per-state capacities with their optimal input laws.
pub fn per_state_capacities(ch: &Channel, tol: f64, max_iters: usize) -> Result<Vec<DmcCapacity>> {
    (0..ch.s_size())
        .map(|s| dmc_capacity(&state_slice(ch, s), tol, max_iters))
        .collect()
}

/// max over Q_{X|S} of I(X;Y|S): capacity with the state known at both ends
/// but no message-dependent help. Decomposes exactly over states.
pub fn oblivious_baseline(ch: &Channel) -> Result<f64> {
    oblivious_baseline_with(ch, DEFAULT_TOL, DEFAULT_MAX_ITERS)
}

pub fn oblivious_baseline_with(ch: &Channel, tol: f64, max_iters: usize) -> Result<f64> {
    Ok(per_state_capacities(ch, tol, max_iters)?
        .iter()
        .zip(ch.q_s())
        .map(|(c, &qs)| qs * c.capacity)
        .sum())
}
