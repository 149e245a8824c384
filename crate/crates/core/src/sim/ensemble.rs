//! Exact sampling from the random-coding ensemble without materializing it.
//!
//! A codeword drawn IID from `Q_U` and a fixed sequence `b` are jointly
//! typical iff, for every letter `b0`, the U-letters at the positions where
//! `b = b0` have counts inside a box. Those counts are multinomial and
//! independent across `b0`, so the typicality probability is a product of
//! box probabilities, and a codeword conditioned on typicality is obtained by
//! drawing the counts from the truncated multinomial and shuffling.

use rand::seq::SliceRandom;
use rand::Rng;

use super::typicality::cell_range;

fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Multinomial with `total` draws over letters with probabilities `p`,
/// restricted to per-letter count boxes.
struct BoxedMultinomial<'a> {
    total: usize,
    p: &'a [f64],
    boxes: Vec<(usize, usize)>,
    /// `table[k][j]`: log of the unnormalized mass of the first `k` letters
    /// using `j` draws, each within its box.
    table: Vec<Vec<f64>>,
}

impl<'a> BoxedMultinomial<'a> {
    fn new(total: usize, p: &'a [f64], boxes: Vec<(usize, usize)>, lf: &[f64]) -> Self {
        let k_letters = p.len();
        let mut table = vec![vec![f64::NEG_INFINITY; total + 1]; k_letters + 1];
        table[0][0] = 0.0;
        for k in 0..k_letters {
            let (lo, hi) = boxes[k];
            let lp = p[k].ln();
            for j in 0..=total {
                let prev = table[k][j];
                if prev == f64::NEG_INFINITY {
                    continue;
                }
                for c in lo..=hi.min(total - j) {
                    let term = if c == 0 {
                        0.0
                    } else if p[k] > 0.0 {
                        c as f64 * lp - lf[c]
                    } else {
                        continue;
                    };
                    let cell = &mut table[k + 1][j + c];
                    *cell = log_sum_exp(*cell, prev + term);
                }
            }
        }
        Self {
            total,
            p,
            boxes,
            table,
        }
    }

    /// Log probability that the counts land in every box.
    fn log_prob(&self, lf: &[f64]) -> f64 {
        let last = self.table[self.p.len()][self.total];
        if last == f64::NEG_INFINITY {
            last
        } else {
            lf[self.total] + last
        }
    }

    /// Counts drawn from the multinomial conditioned on the boxes.
    fn sample<R: Rng>(&self, lf: &[f64], rng: &mut R) -> Vec<usize> {
        let k_letters = self.p.len();
        let mut counts = vec![0; k_letters];
        let mut left = self.total;
        for k in (0..k_letters).rev() {
            let (lo, hi) = self.boxes[k];
            let lp = self.p[k].ln();
            let weights: Vec<(usize, f64)> = (lo..=hi.min(left))
                .filter_map(|c| {
                    let term = if c == 0 {
                        0.0
                    } else if self.p[k] > 0.0 {
                        c as f64 * lp - lf[c]
                    } else {
                        return None;
                    };
                    let w = self.table[k][left - c] + term;
                    (w > f64::NEG_INFINITY).then_some((c, w))
                })
                .collect();
            let top = weights.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = weights.iter().map(|w| (w.1 - top).exp()).sum();
            let mut pick = rng.random::<f64>() * total;
            let mut chosen = weights.last().expect("feasible box").0;
            for &(c, w) in &weights {
                pick -= (w - top).exp();
                if pick < 0.0 {
                    chosen = c;
                    break;
                }
            }
            counts[k] = chosen;
            left -= chosen;
        }
        debug_assert_eq!(left, 0);
        counts
    }
}

/// Typicality of an IID-`Q_U` codeword against a fixed sequence `b` with
/// respect to `reference[u][b]`.
pub struct EnsembleTest<'a> {
    q_u: &'a [f64],
    lf: Vec<f64>,
    /// Positions of each letter of `b`.
    positions: Vec<Vec<usize>>,
    parts: Vec<Option<BoxedMultinomial<'a>>>,
    log_prob: f64,
}

impl<'a> EnsembleTest<'a> {
    pub fn new(q_u: &'a [f64], b: &[usize], nb: usize, reference: &[Vec<f64>], epsilon: f64) -> Self {
        let n = b.len();
        let lf = log_factorials(n);
        let mut positions = vec![Vec::new(); nb];
        for (i, &letter) in b.iter().enumerate() {
            positions[letter].push(i);
        }
        let mut parts = Vec::with_capacity(nb);
        let mut log_prob = 0.0;
        for (letter, pos) in positions.iter().enumerate() {
            let boxes: Option<Vec<(usize, usize)>> = (0..q_u.len())
                .map(|u| cell_range(n, reference[u][letter], epsilon))
                .collect();
            let Some(boxes) = boxes else {
                log_prob = f64::NEG_INFINITY;
                parts.push(None);
                continue;
            };
            let part = BoxedMultinomial::new(pos.len(), q_u, boxes, &lf);
            log_prob += part.log_prob(&lf);
            parts.push(Some(part));
        }
        Self {
            q_u,
            lf,
            positions,
            parts,
            log_prob,
        }
    }

    /// Log probability that one IID codeword is typical with `b`.
    pub fn log_prob(&self) -> f64 {
        self.log_prob
    }

    /// A codeword drawn from `Q_U^n` conditioned on typicality. Requires
    /// `log_prob() > -inf`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        let n = self.lf.len() - 1;
        let mut word = vec![0usize; n];
        for (pos, part) in self.positions.iter().zip(&self.parts) {
            let part = part.as_ref().expect("typical set is nonempty");
            let counts = part.sample(&self.lf, rng);
            let mut letters: Vec<usize> = counts
                .iter()
                .enumerate()
                .flat_map(|(u, &c)| std::iter::repeat_n(u, c))
                .collect();
            letters.shuffle(rng);
            for (&i, u) in pos.iter().zip(letters) {
                word[i] = u;
            }
        }
        debug_assert_eq!(self.q_u.len(), self.q_u.len());
        word
    }
}

/// `ln(1 - p)` from `ln p`, accurate for tiny `p`.
pub fn ln_one_minus(ln_p: f64) -> f64 {
    let p = ln_p.exp();
    if p < 1e-12 {
        -p
    } else {
        (-p).ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::task_rng;
    use crate::sim::typicality::typical;

    /// Brute-force probability over all words for tiny n.
    fn enumerate_prob(q_u: &[f64], b: &[usize], reference: &[Vec<f64>], eps: f64) -> f64 {
        let n = b.len();
        let k = q_u.len();
        let mut total = 0.0;
        for code in 0..k.pow(n as u32) {
            let mut c = code;
            let word: Vec<usize> = (0..n)
                .map(|_| {
                    let u = c % k;
                    c /= k;
                    u
                })
                .collect();
            if typical(&word, b, reference, eps).unwrap() {
                total += word.iter().map(|&u| q_u[u]).product::<f64>();
            }
        }
        total
    }

    #[test]
    fn matches_enumeration() {
        let q_u = [0.3, 0.5, 0.2];
        let b = [0, 1, 1, 0, 1, 0, 0, 1];
        let reference = vec![vec![0.15, 0.15], vec![0.25, 0.25], vec![0.1, 0.1]];
        for eps in [0.3, 0.6, 0.9] {
            let t = EnsembleTest::new(&q_u, &b, 2, &reference, eps);
            let want = enumerate_prob(&q_u, &b, &reference, eps);
            let got = t.log_prob().exp();
            assert!((got - want).abs() < 1e-12, "eps {eps}: {got} vs {want}");
        }
    }

    #[test]
    fn samples_are_typical() {
        let q_u = [0.5, 0.5];
        let b: Vec<usize> = (0..60).map(|i| usize::from(i % 5 == 0)).collect();
        let reference = vec![vec![0.4, 0.1], vec![0.4, 0.1]];
        let t = EnsembleTest::new(&q_u, &b, 2, &reference, 0.3);
        assert!(t.log_prob() > f64::NEG_INFINITY);
        let mut rng = task_rng(3, 0, 0);
        for _ in 0..50 {
            let w = t.sample(&mut rng);
            assert!(typical(&w, &b, &reference, 0.3).unwrap());
        }
    }

    #[test]
    fn empty_typical_set() {
        let q_u = [0.5, 0.5];
        let b = [0, 0, 0];
        let reference = vec![vec![0.5, 0.0], vec![0.5, 0.0]];
        let t = EnsembleTest::new(&q_u, &b, 2, &reference, 0.1);
        assert_eq!(t.log_prob(), f64::NEG_INFINITY);
    }
}
