//! Monte-Carlo simulation of the random-coding scheme for one time-sharing
//! branch, with the helper rate optionally split into direct message bits.

pub mod codebook;
pub mod ensemble;
pub mod typicality;

use rayon::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{check_probability_vector, Channel, INPUT_TOL};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, task_rng};
pub use codebook::{decode, helper_encode, transmit, Codebook, Decoded, MAX_TABLE_BITS};
use codebook::iid_sequence;
use ensemble::{ln_one_minus, EnsembleTest};
pub use typicality::typical;

const STREAM_TRIAL: u64 = 0x5452_4941;
const STREAM_CODEBOOK: u64 = 0x434f_4442;

/// Index bits above which the ensemble sampler refuses to run.
pub const MAX_ENSEMBLE_BITS: u32 = 1000;

const WILSON_Z: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Codewords are generated and searched one by one.
    Explicit,
    /// Search outcomes are drawn from their exact distribution under a
    /// fresh random codebook, which scales to large tables.
    Ensemble,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub rate_r: f64,
    pub rate_rh: f64,
    pub r0: f64,
    /// `q_u_given_s[s][u]`.
    pub q_u_given_s: Vec<Vec<f64>>,
    pub phi: Vec<usize>,
    /// Helper typicality slack.
    pub epsilon: f64,
    pub epsilon_decoder: f64,
    pub trials: usize,
    pub seed: u64,
    pub share_codebook: bool,
    pub mode: SimMode,
    pub record_trials: bool,
}

impl SimConfig {
    pub fn new(q_u_given_s: Vec<Vec<f64>>, phi: Vec<usize>) -> Self {
        Self {
            n: 100,
            rate_r: 0.0,
            rate_rh: 0.0,
            r0: 0.0,
            q_u_given_s,
            phi,
            epsilon: 0.05,
            epsilon_decoder: 0.1,
            trials: 100,
            seed: 0,
            share_codebook: false,
            mode: SimMode::Explicit,
            record_trials: false,
        }
    }

    pub fn message_bits(&self) -> u32 {
        ceil_bits(self.n as f64 * self.rate_r)
    }

    pub fn help_bits(&self) -> u32 {
        ceil_bits(self.n as f64 * (self.rate_rh - self.r0))
    }

    /// Helper bits spent on the message itself; the fractional part is dropped.
    pub fn direct_bits(&self) -> u64 {
        (self.n as f64 * self.r0 + 1e-9).floor() as u64
    }

    pub fn validate(&self, ch: &Channel) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n == 0 {
            return bad("blocklength must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        for (name, v) in [("rate_r", self.rate_r), ("rate_rh", self.rate_rh), ("r0", self.r0)] {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        if self.r0 > self.rate_rh {
            return bad(format!("r0 = {} exceeds rate_rh = {}", self.r0, self.rate_rh));
        }
        for (name, e) in [("epsilon", self.epsilon), ("epsilon_decoder", self.epsilon_decoder)] {
            if !(e > 0.0 && e < 0.5) {
                return bad(format!("{name} must lie in (0, 0.5), got {e}"));
            }
        }
        if self.share_codebook && self.mode == SimMode::Ensemble {
            return bad("a shared codebook needs explicit mode".into());
        }
        if self.q_u_given_s.len() != ch.s_size() {
            return Err(Error::DimensionMismatch(format!(
                "policy has {} state rows, |S| = {}",
                self.q_u_given_s.len(),
                ch.s_size()
            )));
        }
        let u_size = self.phi.len();
        if u_size == 0 {
            return Err(Error::DimensionMismatch("empty φ".into()));
        }
        for (s, row) in self.q_u_given_s.iter().enumerate() {
            if row.len() != u_size {
                return Err(Error::DimensionMismatch(format!(
                    "q_u_given_s[{s}] has {} entries, φ has {u_size}",
                    row.len()
                )));
            }
            check_probability_vector(&format!("q_u_given_s[{s}]"), row, INPUT_TOL)?;
        }
        if let Some(&x) = self.phi.iter().find(|&&x| x >= ch.x_size()) {
            return Err(Error::DimensionMismatch(format!(
                "φ maps to input {x}, |X| = {}",
                ch.x_size()
            )));
        }
        let (mb, hb) = (self.message_bits(), self.help_bits());
        match self.mode {
            SimMode::Explicit if mb + hb > MAX_TABLE_BITS => Err(Error::ConfigTooLarge(format!(
                "{mb} message bits + {hb} help bits exceed {MAX_TABLE_BITS}"
            ))),
            SimMode::Ensemble if mb.max(hb) > MAX_ENSEMBLE_BITS => {
                Err(Error::ConfigTooLarge(format!(
                    "{mb} message bits / {hb} help bits exceed {MAX_ENSEMBLE_BITS}"
                )))
            }
            _ => Ok(()),
        }
    }
}

fn ceil_bits(x: f64) -> u32 {
    (x - 1e-9).ceil().max(0.0) as u32
}

/// Single-letter laws the scheme is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct References {
    pub q_u: Vec<f64>,
    /// `[u][s]`.
    pub us: Vec<Vec<f64>>,
    /// `[u][y]`.
    pub uy: Vec<Vec<f64>>,
}

pub fn references(ch: &Channel, q_u_given_s: &[Vec<f64>], phi: &[usize]) -> References {
    let u_size = phi.len();
    let mut us = vec![vec![0.0; ch.s_size()]; u_size];
    let mut uy = vec![vec![0.0; ch.y_size()]; u_size];
    for (s, row) in q_u_given_s.iter().enumerate() {
        for (u, &q) in row.iter().enumerate() {
            let p = ch.q_s()[s] * q;
            us[u][s] = p;
            for (y, &w) in ch.row(phi[u], s).iter().enumerate() {
                uy[u][y] += p * w;
            }
        }
    }
    let q_u = us.iter().map(|r| r.iter().sum()).collect();
    References { q_u, us, uy }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    HelperFailure,
    NoCandidate,
    Ambiguous,
    /// A single wrong message was typical.
    Wrong,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub outcome: Outcome,
    /// Help index chosen by the helper (explicit mode only).
    pub t1: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub n: usize,
    pub rate_r: f64,
    pub rate_rh: f64,
    pub r0: f64,
    pub epsilon: f64,
    pub epsilon_decoder: f64,
    pub mode: SimMode,
    pub trials: usize,
    pub helper_failures: usize,
    pub decode_errors: usize,
    pub ambiguous: usize,
    pub no_candidate: usize,
    pub direct_bit_errors: usize,
    pub error_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
    pub message_bits: u32,
    pub help_bits: u32,
    pub direct_bits: u64,
    /// Delivered bits per channel use, from the actual table sizes.
    pub effective_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<TrialRecord>>,
}

/// 95% Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    // The bounds touch 0 and 1 exactly at the extremes.
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

struct Trial {
    outcome: Outcome,
    t1: Option<u64>,
    direct_errors: usize,
}

pub fn run_trials(ch: &Channel, cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate(ch)?;
    let refs = references(ch, &cfg.q_u_given_s, &cfg.phi);
    let (mb, hb) = (cfg.message_bits(), cfg.help_bits());
    let shared = if cfg.share_codebook {
        Some(Codebook::new(
            derive_seed(cfg.seed, STREAM_CODEBOOK, 0),
            cfg.n,
            mb,
            hb,
            &refs.q_u,
        )?)
    } else {
        None
    };

    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(cfg.seed, STREAM_TRIAL, i as u64);
            let direct_errors = deliver_direct(cfg.direct_bits(), &mut rng);
            let (outcome, t1) = match cfg.mode {
                SimMode::Explicit => {
                    let fresh;
                    let cb = match &shared {
                        Some(cb) => cb,
                        None => {
                            fresh = Codebook::new(
                                derive_seed(cfg.seed, STREAM_CODEBOOK, i as u64 + 1),
                                cfg.n,
                                mb,
                                hb,
                                &refs.q_u,
                            )?;
                            &fresh
                        }
                    };
                    explicit_trial(ch, cfg, &refs, cb, &mut rng)?
                }
                SimMode::Ensemble => (ensemble_trial(ch, cfg, &refs, mb, hb, &mut rng)?, None),
            };
            Ok(Trial {
                outcome,
                t1,
                direct_errors,
            })
        })
        .collect::<Result<_>>()?;

    let count = |o: Outcome| trials.iter().filter(|t| t.outcome == o).count();
    let helper_failures = count(Outcome::HelperFailure);
    let ambiguous = count(Outcome::Ambiguous);
    let no_candidate = count(Outcome::NoCandidate);
    let decode_errors = ambiguous + no_candidate + count(Outcome::Wrong);
    let direct_bit_errors: usize = trials.iter().map(|t| t.direct_errors).sum();
    assert_eq!(direct_bit_errors, 0, "direct bits travel error-free");
    let errors = helper_failures + decode_errors;
    let (ci_lo, ci_hi) = wilson_interval(errors, cfg.trials);
    let records = cfg.record_trials.then(|| {
        trials
            .iter()
            .enumerate()
            .map(|(trial, t)| TrialRecord {
                trial,
                outcome: t.outcome,
                t1: t.t1,
            })
            .collect()
    });
    Ok(SimReport {
        n: cfg.n,
        rate_r: cfg.rate_r,
        rate_rh: cfg.rate_rh,
        r0: cfg.r0,
        epsilon: cfg.epsilon,
        epsilon_decoder: cfg.epsilon_decoder,
        mode: cfg.mode,
        trials: cfg.trials,
        helper_failures,
        decode_errors,
        ambiguous,
        no_candidate,
        direct_bit_errors,
        error_rate: errors as f64 / cfg.trials as f64,
        ci_lo,
        ci_hi,
        seed: cfg.seed,
        message_bits: mb,
        help_bits: hb,
        direct_bits: cfg.direct_bits(),
        effective_rate: (mb as f64 + cfg.direct_bits() as f64) / cfg.n as f64,
        records,
    })
}

/// The helper hands the direct bits to the decoder verbatim.
fn deliver_direct<R: Rng>(bits: u64, rng: &mut R) -> usize {
    let sent: Vec<bool> = (0..bits).map(|_| rng.random()).collect();
    let received = sent.clone();
    sent.iter().zip(&received).filter(|(a, b)| a != b).count()
}

fn explicit_trial(
    ch: &Channel,
    cfg: &SimConfig,
    refs: &References,
    cb: &Codebook,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<(Outcome, Option<u64>)> {
    let m = rng.random_range(0..cb.messages());
    let s_n = iid_sequence(ch.q_s(), cfg.n, rng);
    let Some(t1) = helper_encode(cb, m, &s_n, &refs.us, cfg.epsilon)? else {
        return Ok((Outcome::HelperFailure, None));
    };
    let u_n = cb.word(m, t1);
    let y_n = transmit(ch, &cfg.phi, &u_n, &s_n, rng)?;
    let outcome = match decode(cb, t1, &y_n, &refs.uy, cfg.epsilon_decoder)? {
        Decoded::Unique(got) if got == m => Outcome::Correct,
        Decoded::Unique(_) => Outcome::Wrong,
        Decoded::NoCandidate => Outcome::NoCandidate,
        Decoded::Ambiguous => Outcome::Ambiguous,
    };
    Ok((outcome, Some(t1)))
}

/// `ln P(no success)` over `2^bits - skip` tries that each succeed with
/// probability `exp(ln_p)`.
fn ln_all_fail(bits: u32, skip: u32, ln_p: f64) -> f64 {
    let tries = (bits as f64).exp2() - f64::from(skip);
    if tries <= 0.0 || ln_p == f64::NEG_INFINITY {
        0.0
    } else {
        tries * ln_one_minus(ln_p)
    }
}

fn ensemble_trial(
    ch: &Channel,
    cfg: &SimConfig,
    refs: &References,
    mb: u32,
    hb: u32,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Outcome> {
    let s_n = iid_sequence(ch.q_s(), cfg.n, rng);
    let helper = EnsembleTest::new(&refs.q_u, &s_n, ch.s_size(), &refs.us, cfg.epsilon);
    let p_fail = ln_all_fail(hb, 0, helper.log_prob()).exp();
    if helper.log_prob() == f64::NEG_INFINITY || rng.random::<f64>() < p_fail {
        return Ok(Outcome::HelperFailure);
    }
    // The first typical word in the row is a typical-conditioned IID word.
    let u_n = helper.sample(rng);
    let y_n = transmit(ch, &cfg.phi, &u_n, &s_n, rng)?;
    let correct_typical = typical(&u_n, &y_n, &refs.uy, cfg.epsilon_decoder)?;

    // Words of the other messages in the same column are IID and independent
    // of y, so the number of typical impostors is binomial.
    let decoder = EnsembleTest::new(&refs.q_u, &y_n, ch.y_size(), &refs.uy, cfg.epsilon_decoder);
    let ln_p = decoder.log_prob();
    let others = (mb as f64).exp2() - 1.0;
    let p0 = ln_all_fail(mb, 1, ln_p).exp();
    let p1 = if others >= 1.0 && ln_p > f64::NEG_INFINITY {
        (others.ln() + ln_p + ln_all_fail(mb, 2, ln_p)).exp()
    } else {
        0.0
    };
    let pick = rng.random::<f64>();
    let impostors = if pick < p0 {
        0
    } else if pick < p0 + p1 {
        1
    } else {
        2
    };
    Ok(match (correct_typical, impostors) {
        (true, 0) => Outcome::Correct,
        (false, 0) => Outcome::NoCandidate,
        (false, 1) => Outcome::Wrong,
        _ => Outcome::Ambiguous,
    })
}
