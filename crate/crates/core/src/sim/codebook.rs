//! Explicit random codebook, helper search, channel use and decoding.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::typicality::typical;
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::seed::task_rng;

/// Largest `message_bits + help_bits` for which a table is addressable.
pub const MAX_TABLE_BITS: u32 = 24;

/// `2^message_bits × 2^help_bits` words over `U`, IID from `Q_U`.
///
/// Words are regenerated on demand from `(seed, m, t)`, so the table is never
/// stored.
#[derive(Debug, Clone)]
pub struct Codebook {
    seed: u64,
    n: usize,
    message_bits: u32,
    help_bits: u32,
    sampler: WeightedIndex<f64>,
}

impl Codebook {
    pub fn new(seed: u64, n: usize, message_bits: u32, help_bits: u32, q_u: &[f64]) -> Result<Self> {
        if message_bits + help_bits > MAX_TABLE_BITS {
            return Err(Error::ConfigTooLarge(format!(
                "codebook needs {} + {} index bits, limit is {MAX_TABLE_BITS}",
                message_bits, help_bits
            )));
        }
        let sampler = WeightedIndex::new(q_u)
            .map_err(|e| Error::NotADistribution(format!("codeword law: {e}")))?;
        Ok(Self {
            seed,
            n,
            message_bits,
            help_bits,
            sampler,
        })
    }

    pub fn messages(&self) -> u64 {
        1 << self.message_bits
    }

    pub fn helps(&self) -> u64 {
        1 << self.help_bits
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Writes `u^n(m, t)` into `out`.
    pub fn word_into(&self, m: u64, t: u64, out: &mut Vec<usize>) {
        let mut rng = task_rng(self.seed, m, t);
        out.clear();
        out.extend((0..self.n).map(|_| self.sampler.sample(&mut rng)));
    }

    pub fn word(&self, m: u64, t: u64) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n);
        self.word_into(m, t, &mut out);
        out
    }
}

/// Smallest `t` whose word under message `m` is typical with `s_n`, or `None`
/// when the helper fails.
pub fn helper_encode(
    cb: &Codebook,
    m: u64,
    s_n: &[usize],
    ref_us: &[Vec<f64>],
    epsilon: f64,
) -> Result<Option<u64>> {
    if m >= cb.messages() {
        return Err(Error::InvalidArgument(format!(
            "message {m} outside 0..{}",
            cb.messages()
        )));
    }
    let mut word = Vec::with_capacity(cb.len());
    for t in 0..cb.helps() {
        cb.word_into(m, t, &mut word);
        if typical(&word, s_n, ref_us, epsilon)? {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Sends `φ(u_k)` through the channel in state `s_k`, letter by letter.
pub fn transmit<R: Rng>(
    ch: &Channel,
    phi: &[usize],
    u_n: &[usize],
    s_n: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    if u_n.len() != s_n.len() {
        return Err(Error::LengthMismatch(u_n.len(), s_n.len()));
    }
    u_n.iter()
        .zip(s_n)
        .map(|(&u, &s)| {
            let x = *phi.get(u).ok_or_else(|| {
                Error::DimensionMismatch(format!("letter {u} has no φ image"))
            })?;
            Ok(sample_row(ch.row(x, s), rng))
        })
        .collect()
}

pub(crate) fn sample_row<R: Rng>(row: &[f64], rng: &mut R) -> usize {
    let mut pick = rng.random::<f64>();
    for (y, &p) in row.iter().enumerate() {
        pick -= p;
        if pick < 0.0 {
            return y;
        }
    }
    // Rounding left a sliver past the last positive entry.
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decoded {
    Unique(u64),
    NoCandidate,
    Ambiguous,
}

/// The unique message whose word at help index `t` is typical with `y_n`.
pub fn decode(
    cb: &Codebook,
    t: u64,
    y_n: &[usize],
    ref_uy: &[Vec<f64>],
    epsilon: f64,
) -> Result<Decoded> {
    if t >= cb.helps() {
        return Err(Error::InvalidArgument(format!(
            "help index {t} outside 0..{}",
            cb.helps()
        )));
    }
    let mut found = None;
    let mut word = Vec::with_capacity(cb.len());
    for m in 0..cb.messages() {
        cb.word_into(m, t, &mut word);
        if typical(&word, y_n, ref_uy, epsilon)? {
            if found.is_some() {
                return Ok(Decoded::Ambiguous);
            }
            found = Some(m);
        }
    }
    Ok(found.map_or(Decoded::NoCandidate, Decoded::Unique))
}

/// IID sequence of length `n` from `p`.
pub(crate) fn iid_sequence(p: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| sample_row(p, rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mod2(q: f64) -> Channel {
        let w = vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        ];
        Channel::new(vec![1.0 - q, q], w).unwrap()
    }

    #[test]
    fn words_are_reproducible() {
        let cb = Codebook::new(9, 20, 3, 2, &[0.5, 0.5]).unwrap();
        assert_eq!(cb.word(5, 1), cb.word(5, 1));
        assert_ne!(cb.word(5, 1), cb.word(5, 2));
    }

    #[test]
    fn table_guard() {
        assert!(matches!(
            Codebook::new(0, 10, 20, 5, &[0.5, 0.5]),
            Err(Error::ConfigTooLarge(_))
        ));
    }

    #[test]
    fn copy_kernel_finds_the_state_word() {
        // U copies S; plant the state sequence at t = 3 by searching a book
        // until one of its words has the exact type.
        let n = 8;
        let q_u = [0.5, 0.5];
        let ref_us = vec![vec![0.5, 0.0], vec![0.0, 0.5]];
        let cb = Codebook::new(4, n, 1, 4, &q_u).unwrap();
        let target = (0..cb.helps())
            .map(|t| (t, cb.word(0, t)))
            .find(|(_, w)| w.iter().filter(|&&u| u == 1).count() == n / 2)
            .expect("some word of exact type");
        let got = helper_encode(&cb, 0, &target.1, &ref_us, 0.01).unwrap();
        assert_eq!(got, Some(target.0));
    }

    #[test]
    fn mod2_output_is_xor() {
        let ch = mod2(0.3);
        let mut rng = task_rng(1, 0, 0);
        let u = [0, 1, 1, 0, 1];
        let s = [1, 1, 0, 0, 0];
        let y = transmit(&ch, &[0, 1], &u, &s, &mut rng).unwrap();
        assert_eq!(y, vec![1, 0, 1, 0, 1]);
    }

    #[test]
    fn ambiguity_and_absence() {
        // Every word is typical against a single-letter reference.
        let cb = Codebook::new(0, 5, 2, 0, &[1.0]).unwrap();
        let y = [0; 5];
        assert_eq!(decode(&cb, 0, &y, &[vec![1.0]], 0.1).unwrap(), Decoded::Ambiguous);
        let cb = Codebook::new(0, 4, 0, 0, &[0.5, 0.5]).unwrap();
        let r = vec![vec![0.5, 0.0], vec![0.5, 0.0]];
        assert_eq!(decode(&cb, 0, &[1, 1, 1, 1], &r, 0.1).unwrap(), Decoded::NoCandidate);
    }

    #[test]
    fn unique_candidate() {
        // With the identity reference only words equal to y are typical.
        let r = vec![vec![0.5, 0.0], vec![0.0, 0.5]];
        let (cb, m) = (0..)
            .find_map(|seed| {
                let cb = Codebook::new(seed, 12, 3, 0, &[0.5, 0.5]).unwrap();
                let words: Vec<_> = (0..8).map(|m| cb.word(m, 0)).collect();
                let m = (0..8).find(|&m| {
                    let w = &words[m];
                    w.iter().filter(|&&u| u == 1).count() == 6
                        && words.iter().filter(|o| *o == w).count() == 1
                })?;
                Some((cb, m as u64))
            })
            .unwrap();
        let y = cb.word(m, 0);
        assert_eq!(decode(&cb, 0, &y, &r, 0.01).unwrap(), Decoded::Unique(m));
    }
}
