//! Exhaustive lattice search, used as an oracle on binary channels.
//!
//! Every map φ and every conditional on the simplex lattice with
//! `grid_levels` levels per coordinate is evaluated through the full joint
//! law; time sharing is handled by the same exact envelope step as the main
//! path. The result is a certified lower bound on C(Rh).

use super::envelope::concave_envelope;
use super::{assemble, check_rh, max_budget, monotone_table, table_xy, CapacityResult, Method};
use super::inner::{GPoint, Objective};
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::info::{evaluate_policy, AuxiliaryPolicy};

pub const MAX_BRUTE_ALPHABET: usize = 2;
pub const MAX_BRUTE_U: usize = 3;
pub const MAX_GRID_LEVELS: usize = 9;

/// All points `k / (levels - 1)` of the probability simplex in `dim` coordinates.
fn lattice(dim: usize, levels: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dim == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            rec(dim - 1, left - k, prefix, out);
            prefix.pop();
        }
    }
    let steps = levels - 1;
    let mut raw = Vec::new();
    rec(dim, steps, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / steps as f64).collect())
        .collect()
}

fn all_maps(x_size: usize, u_size: usize) -> Vec<Vec<usize>> {
    let total = x_size.pow(u_size as u32);
    (0..total)
        .map(|mut code| {
            let mut phi = vec![0; u_size];
            for slot in phi.iter_mut().rev() {
                *slot = code % x_size;
                code /= x_size;
            }
            phi
        })
        .collect()
}

pub fn brute_force_capacity(
    ch: &Channel,
    rh: f64,
    grid_levels: usize,
    u_size: usize,
) -> Result<CapacityResult> {
    check_rh(rh)?;
    if ch.x_size() > MAX_BRUTE_ALPHABET
        || ch.s_size() > MAX_BRUTE_ALPHABET
        || ch.y_size() > MAX_BRUTE_ALPHABET
    {
        return Err(Error::TooLarge(format!(
            "alphabets ({}, {}, {}) exceed {MAX_BRUTE_ALPHABET}",
            ch.x_size(),
            ch.s_size(),
            ch.y_size()
        )));
    }
    if u_size == 0 || u_size > MAX_BRUTE_U {
        return Err(Error::TooLarge(format!("u_size {u_size} not in 1..={MAX_BRUTE_U}")));
    }
    if !(2..=MAX_GRID_LEVELS).contains(&grid_levels) {
        return Err(Error::TooLarge(format!(
            "grid_levels {grid_levels} not in 2..={MAX_GRID_LEVELS}"
        )));
    }

    let rows = lattice(u_size, grid_levels);
    let ns = ch.s_size();
    let mut cloud: Vec<GPoint> = Vec::new();
    for phi in all_maps(ch.x_size(), u_size) {
        let mut pick = vec![0usize; ns];
        loop {
            let cond: Vec<Vec<f64>> = pick.iter().map(|&i| rows[i].clone()).collect();
            let pol = AuxiliaryPolicy::new(ch, vec![1.0], vec![cond], vec![phi.clone()])?;
            let mi = evaluate_policy(ch, &pol)?;
            cloud.push(GPoint {
                r: mi.i_us_given_v,
                g: mi.i_uy_given_v - mi.i_us_given_v,
                i_uy: mi.i_uy_given_v,
                i_us: mi.i_us_given_v,
                q_u_given_s: pol.branch_conditional(0).to_vec(),
                phi: phi.clone(),
                slack: 0.0,
            });
            // Odometer over the per-state lattice rows.
            let mut k = 0;
            while k < ns {
                pick[k] += 1;
                if pick[k] < rows.len() {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
            if k == ns {
                break;
            }
        }
    }
    let evaluated = cloud.len();
    let table = monotone_table(&cloud, Objective::Gap);
    let xy = table_xy(&table, Objective::Gap);
    let env = concave_envelope(&xy, rh.min(max_budget(&table)))?;
    assemble(ch, rh, &env, &table, Method::BruteForce, evaluated, evaluated)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_counts() {
        assert_eq!(lattice(3, 7).len(), 28);
        assert_eq!(lattice(2, 3), vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]]);
        assert_eq!(lattice(1, 5), vec![vec![1.0]]);
    }

    #[test]
    fn maps_in_lexicographic_order() {
        assert_eq!(
            all_maps(2, 2),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
    }

    #[test]
    fn size_guards() {
        let big = Channel::new(vec![1.0], vec![vec![vec![1.0, 0.0, 0.0]]]).unwrap();
        assert!(matches!(
            brute_force_capacity(&big, 0.1, 5, 2),
            Err(Error::TooLarge(_))
        ));
        let ok = Channel::new(vec![1.0], vec![vec![vec![1.0, 0.0]]]).unwrap();
        assert!(matches!(brute_force_capacity(&ok, 0.1, 10, 2), Err(Error::TooLarge(_))));
        assert!(matches!(brute_force_capacity(&ok, 0.1, 5, 4), Err(Error::TooLarge(_))));
    }
}
