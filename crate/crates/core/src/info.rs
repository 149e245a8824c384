//! Exact information measures over the five-variable law on
//! `V × U × S × X × Y`.

use crate::channel::{check_probability_vector, Channel, INPUT_TOL};
use crate::error::{Error, Result};

/// Tolerance for quantities produced by floating-point arithmetic.
pub const ARITH_TOL: f64 = 1e-10;

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::NotADistribution("empty vector".into()));
    }
    check_probability_vector("p", p, ARITH_TOL)
        .map_err(|e| Error::NotADistribution(e.to_string()))?;
    Ok(entropy_unchecked(p))
}

pub(crate) fn entropy_unchecked(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.log2())
        .sum::<f64>()
}

/// One candidate solution of the capacity problem: a time-sharing law, and for
/// every time-sharing branch a conditional `Q(u|s)` plus a deterministic map
/// from `U` to `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryPolicy {
    v_size: usize,
    u_size: usize,
    s_size: usize,
    q_v: Vec<f64>,
    /// Flat `(v, s, u)`.
    q_u_given_sv: Vec<f64>,
    /// Flat `(v, u)`.
    phi: Vec<usize>,
}

/// Largest time-sharing alphabet ever needed.
pub const MAX_V_SIZE: usize = 3;

impl AuxiliaryPolicy {
    /// `q_u_given_sv[v][s]` is a distribution over `U`, `phi[v][u]` an input letter.
    pub fn new(
        ch: &Channel,
        q_v: Vec<f64>,
        q_u_given_sv: Vec<Vec<Vec<f64>>>,
        phi: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let v_size = q_v.len();
        if v_size == 0 || v_size > MAX_V_SIZE {
            return Err(Error::SizeOutOfRange {
                what: "v_size".into(),
                value: v_size as i64,
                max: MAX_V_SIZE,
            });
        }
        let u_size = phi.first().map_or(0, Vec::len);
        if u_size == 0 || u_size > ch.max_u_size() {
            return Err(Error::SizeOutOfRange {
                what: "u_size".into(),
                value: u_size as i64,
                max: ch.max_u_size(),
            });
        }
        if q_u_given_sv.len() != v_size || phi.len() != v_size {
            return Err(Error::DimensionMismatch(format!(
                "policy has {v_size} branches but {} conditionals and {} maps",
                q_u_given_sv.len(),
                phi.len()
            )));
        }
        check_probability_vector("q_v", &q_v, INPUT_TOL)?;
        let s_size = ch.s_size();
        let mut flat_q = Vec::with_capacity(v_size * s_size * u_size);
        for (v, rows) in q_u_given_sv.iter().enumerate() {
            if rows.len() != s_size {
                return Err(Error::DimensionMismatch(format!(
                    "q_u_given_sv[{v}] has {} rows, |S| = {s_size}",
                    rows.len()
                )));
            }
            for (s, row) in rows.iter().enumerate() {
                if row.len() != u_size {
                    return Err(Error::DimensionMismatch(format!(
                        "q_u_given_sv[{v}][{s}] has {} entries, u_size = {u_size}",
                        row.len()
                    )));
                }
                check_probability_vector(&format!("q_u_given_sv[{v}][{s}]"), row, INPUT_TOL)?;
                flat_q.extend_from_slice(row);
            }
        }
        let mut flat_phi = Vec::with_capacity(v_size * u_size);
        for (v, map) in phi.iter().enumerate() {
            if map.len() != u_size {
                return Err(Error::DimensionMismatch(format!(
                    "phi[{v}] has {} entries, u_size = {u_size}",
                    map.len()
                )));
            }
            if let Some(&x) = map.iter().find(|&&x| x >= ch.x_size()) {
                return Err(Error::DimensionMismatch(format!(
                    "phi[{v}] maps to input {x}, |X| = {}",
                    ch.x_size()
                )));
            }
            flat_phi.extend_from_slice(map);
        }
        Ok(Self {
            v_size,
            u_size,
            s_size,
            q_v,
            q_u_given_sv: flat_q,
            phi: flat_phi,
        })
    }

    pub fn v_size(&self) -> usize {
        self.v_size
    }

    pub fn u_size(&self) -> usize {
        self.u_size
    }

    pub fn s_size(&self) -> usize {
        self.s_size
    }

    pub fn q_v(&self) -> &[f64] {
        &self.q_v
    }

    /// `Q(u|s, v)` for one branch as a flat `(s, u)` slice.
    pub fn branch_conditional(&self, v: usize) -> &[f64] {
        let len = self.s_size * self.u_size;
        &self.q_u_given_sv[v * len..(v + 1) * len]
    }

    pub fn q_u_given_sv(&self, v: usize, s: usize) -> &[f64] {
        let base = (v * self.s_size + s) * self.u_size;
        &self.q_u_given_sv[base..base + self.u_size]
    }

    pub fn branch_phi(&self, v: usize) -> &[usize] {
        &self.phi[v * self.u_size..(v + 1) * self.u_size]
    }

    pub fn phi(&self, v: usize, u: usize) -> usize {
        self.phi[v * self.u_size + u]
    }

    pub fn nested_conditionals(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.v_size)
            .map(|v| {
                (0..self.s_size)
                    .map(|s| self.q_u_given_sv(v, s).to_vec())
                    .collect()
            })
            .collect()
    }

    pub fn nested_phi(&self) -> Vec<Vec<usize>> {
        (0..self.v_size)
            .map(|v| self.branch_phi(v).to_vec())
            .collect()
    }
}

/// Dense law `p(v, u, s, x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    dims: [usize; 5],
    p: Vec<f64>,
}

impl JointDistribution {
    /// `[|V|, |U|, |S|, |X|, |Y|]`.
    pub fn dims(&self) -> [usize; 5] {
        self.dims
    }

    fn index(&self, v: usize, u: usize, s: usize, x: usize, y: usize) -> usize {
        let [_, nu, ns, nx, ny] = self.dims;
        (((v * nu + u) * ns + s) * nx + x) * ny + y
    }

    pub fn get(&self, v: usize, u: usize, s: usize, x: usize, y: usize) -> f64 {
        self.p[self.index(v, u, s, x, y)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    /// Sums out every axis not listed in `keep` (axes in increasing order).
    pub fn marginal(&self, keep: &[usize]) -> Vec<f64> {
        let dims = self.dims;
        let out_len: usize = keep.iter().map(|&a| dims[a]).product();
        let mut out = vec![0.0; out_len];
        let mut idx = [0usize; 5];
        for &mass in &self.p {
            if mass != 0.0 {
                let mut k = 0;
                for &a in keep {
                    k = k * dims[a] + idx[a];
                }
                out[k] += mass;
            }
            for axis in (0..5).rev() {
                idx[axis] += 1;
                if idx[axis] < dims[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
        out
    }
}

/// Expands `Q_V(v) Q_S(s) Q(u|s,v) 1{x = φ(v,u)} W(y|x,s)`.
pub fn build_joint(ch: &Channel, pol: &AuxiliaryPolicy) -> Result<JointDistribution> {
    if pol.s_size() != ch.s_size() {
        return Err(Error::DimensionMismatch(format!(
            "policy built for |S| = {}, channel has {}",
            pol.s_size(),
            ch.s_size()
        )));
    }
    if pol.u_size() > ch.max_u_size() {
        return Err(Error::DimensionMismatch(format!(
            "u_size {} exceeds |X||S|+1 = {}",
            pol.u_size(),
            ch.max_u_size()
        )));
    }
    if (0..pol.v_size()).any(|v| pol.branch_phi(v).iter().any(|&x| x >= ch.x_size())) {
        return Err(Error::DimensionMismatch("phi maps outside X".into()));
    }
    let dims = [
        pol.v_size(),
        pol.u_size(),
        ch.s_size(),
        ch.x_size(),
        ch.y_size(),
    ];
    let mut joint = JointDistribution {
        dims,
        p: vec![0.0; dims.iter().product()],
    };
    for v in 0..dims[0] {
        for s in 0..dims[2] {
            let vs = pol.q_v()[v] * ch.q_s()[s];
            let cond = pol.q_u_given_sv(v, s);
            for u in 0..dims[1] {
                let x = pol.phi(v, u);
                let mass = vs * cond[u];
                for (y, &w) in ch.row(x, s).iter().enumerate() {
                    let i = joint.index(v, u, s, x, y);
                    joint.p[i] = mass * w;
                }
            }
        }
    }
    Ok(joint)
}

/// The two conditional mutual informations in the capacity objective, in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiPair {
    pub i_uy_given_v: f64,
    pub i_us_given_v: f64,
}

impl MiPair {
    /// `I(U;Y|V) - I(U;S|V) + rh`.
    pub fn objective(&self, rh: f64) -> f64 {
        self.i_uy_given_v - self.i_us_given_v + rh
    }
}

const V: usize = 0;
const U: usize = 1;
const S: usize = 2;
const Y: usize = 4;

/// I(U;Y|V) = H(Y|V) - H(Y|U,V) and I(U;S|V) = H(S|V) - H(S|U,V), each
/// conditional entropy taken as a difference of marginal entropies.
pub fn mi_pair(j: &JointDistribution) -> MiPair {
    let h = |axes: &[usize]| entropy_unchecked(&j.marginal(axes));
    let h_v = h(&[V]);
    let h_uv = h(&[V, U]);
    let h_y_given_v = h(&[V, Y]) - h_v;
    let h_y_given_uv = h(&[V, U, Y]) - h_uv;
    let h_s_given_v = h(&[V, S]) - h_v;
    let h_s_given_uv = h(&[V, U, S]) - h_uv;
    MiPair {
        i_uy_given_v: h_y_given_v - h_y_given_uv,
        i_us_given_v: h_s_given_v - h_s_given_uv,
    }
}

/// Evaluates the capacity objective and constraint of a policy exactly.
pub fn evaluate_policy(ch: &Channel, pol: &AuxiliaryPolicy) -> Result<MiPair> {
    Ok(mi_pair(&build_joint(ch, pol)?))
}
