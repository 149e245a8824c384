//! Compact evaluation of I(U;Y) and I(U;S) for one time-sharing branch with
//! a fixed deterministic map φ, together with their analytic gradients in
//! the entries of Q(u|s).
//!
//! With `A(u,s,y) = Q_S(s) W(y|φ(u),s)`:
//!
//! ```text
//! p(u)   = Σ_s Q_S(s) Q(u|s)
//! p(u,y) = Σ_s Q(u|s) A(u,s,y)
//! ∂I(U;S)/∂Q(u|s) = Q_S(s) log2(Q(u|s) / p(u))
//! ∂I(U;Y)/∂Q(u|s) = Σ_y A(u,s,y) log2(p(u,y) / (p(u) p(y))) - Q_S(s) / ln 2
//! ```
//!
//! Both formulas are the exact partial derivatives of the sums below when the
//! entries of Q are treated as free nonnegative variables.

use std::f64::consts::LN_2;

use crate::channel::Channel;

#[derive(Debug, Clone)]
pub struct BranchModel {
    pub(crate) ns: usize,
    pub(crate) nu: usize,
    pub(crate) ny: usize,
    pub(crate) q_s: Vec<f64>,
    /// Flat `(u, s, y)`.
    a: Vec<f64>,
    pub(crate) phi: Vec<usize>,
}

/// Scratch buffers reused across evaluations.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    pu: Vec<f64>,
    puy: Vec<f64>,
    py: Vec<f64>,
    /// log2(Q(u|s) / p(u)), flat `(s, u)`.
    l_us: Vec<f64>,
    /// log2(p(u,y) / (p(u) p(y))), flat `(u, y)`.
    l_uy: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchValue {
    pub i_uy: f64,
    pub i_us: f64,
}

impl BranchModel {
    pub fn new(ch: &Channel, phi: &[usize]) -> Self {
        let (ns, ny, nu) = (ch.s_size(), ch.y_size(), phi.len());
        let mut a = vec![0.0; nu * ns * ny];
        for (u, &x) in phi.iter().enumerate() {
            for s in 0..ns {
                let qs = ch.q_s()[s];
                let base = (u * ns + s) * ny;
                for (dst, &w) in a[base..base + ny].iter_mut().zip(ch.row(x, s)) {
                    *dst = qs * w;
                }
            }
        }
        Self {
            ns,
            nu,
            ny,
            q_s: ch.q_s().to_vec(),
            a,
            phi: phi.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.ns * self.nu
    }

    /// `q` is flat `(s, u)`.
    pub fn eval(&self, q: &[f64], ws: &mut Workspace) -> BranchValue {
        let (ns, nu, ny) = (self.ns, self.nu, self.ny);
        ws.pu.clear();
        ws.pu.resize(nu, 0.0);
        ws.puy.clear();
        ws.puy.resize(nu * ny, 0.0);
        ws.py.clear();
        ws.py.resize(ny, 0.0);
        ws.l_us.clear();
        ws.l_us.resize(ns * nu, 0.0);
        ws.l_uy.clear();
        ws.l_uy.resize(nu * ny, 0.0);

        let mut i_us = 0.0;
        for s in 0..ns {
            let qs = self.q_s[s];
            for u in 0..nu {
                ws.pu[u] += qs * q[s * nu + u];
            }
        }
        for s in 0..ns {
            let qs = self.q_s[s];
            if qs == 0.0 {
                continue;
            }
            for u in 0..nu {
                let c = q[s * nu + u];
                if c > 0.0 {
                    let l = (c / ws.pu[u]).log2();
                    ws.l_us[s * nu + u] = l;
                    i_us += qs * c * l;
                }
            }
        }
        for u in 0..nu {
            let row = &mut ws.puy[u * ny..(u + 1) * ny];
            for s in 0..ns {
                let c = q[s * nu + u];
                if c == 0.0 {
                    continue;
                }
                let base = (u * ns + s) * ny;
                for (dst, &a) in row.iter_mut().zip(&self.a[base..base + ny]) {
                    *dst += c * a;
                }
            }
            for (py, &v) in ws.py.iter_mut().zip(row.iter()) {
                *py += v;
            }
        }
        let mut i_uy = 0.0;
        for u in 0..nu {
            let pu = ws.pu[u];
            if pu <= 0.0 {
                continue;
            }
            for y in 0..ny {
                let puy = ws.puy[u * ny + y];
                if puy > 0.0 {
                    let l = (puy / (pu * ws.py[y])).log2();
                    ws.l_uy[u * ny + y] = l;
                    i_uy += puy * l;
                }
            }
        }
        BranchValue { i_uy, i_us }
    }

    /// Gradients at the point last passed to [`eval`](Self::eval), reusing its
    /// cached logarithms. Requires
    /// every `Q(u|s)` with `Q_S(s) > 0` to be strictly positive.
    pub fn grad(&self, ws: &Workspace, g_uy: &mut [f64], g_us: &mut [f64]) {
        let (ns, nu, ny) = (self.ns, self.nu, self.ny);
        for s in 0..ns {
            let qs = self.q_s[s];
            for u in 0..nu {
                let k = s * nu + u;
                if qs == 0.0 {
                    g_uy[k] = 0.0;
                    g_us[k] = 0.0;
                    continue;
                }
                g_us[k] = qs * ws.l_us[k];
                let base = (u * ns + s) * ny;
                let mut acc = 0.0;
                for y in 0..ny {
                    let a = self.a[base + y];
                    if a > 0.0 {
                        acc += a * ws.l_uy[u * ny + y];
                    }
                }
                g_uy[k] = acc - qs / LN_2;
            }
        }
    }
}
