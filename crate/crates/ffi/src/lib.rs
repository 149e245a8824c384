//! C ABI over the helpercap library.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free`. Every fallible call returns an [`HcStatus`]; on
//! failure `hc_last_error_message` describes the error for the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use helpercap::oracles::{detect_useless, mod_additive_capacity};
use helpercap::sim::{run_trials, SimConfig, SimMode};
use helpercap::{CapacityResult, Channel, Error, OptimOptions};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    Io = 5,
    InvalidChannel = 6,
    DimensionMismatch = 7,
    NumericalFailure = 8,
    TooLarge = 9,
    NotModAdditive = 10,
    RhTooSmall = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcMethod {
    Envelope = 0,
    RateSplit = 1,
    BruteForce = 2,
}

/// A validated channel.
pub struct HcChannel(Channel);

/// A capacity result with its optimizing policy.
pub struct HcCapacity(CapacityResult);

/// Simulation parameters. `q_u_given_s` is flat `(s, u)` with `u_size`
/// columns, `phi` has `u_size` entries.
#[repr(C)]
pub struct HcSimConfig {
    pub n: usize,
    pub rate_r: f64,
    pub rate_rh: f64,
    pub r0: f64,
    pub q_u_given_s: *const f64,
    pub phi: *const usize,
    pub u_size: usize,
    pub epsilon: f64,
    pub epsilon_decoder: f64,
    pub trials: usize,
    pub seed: u64,
    pub share_codebook: bool,
    pub ensemble: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HcSimReport {
    pub trials: usize,
    pub helper_failures: usize,
    pub decode_errors: usize,
    pub error_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub effective_rate: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("NULs removed"));
}

fn status_of(e: &Error) -> HcStatus {
    match e {
        Error::InvalidArgument(_) | Error::QueryOutOfRange { .. } | Error::LengthMismatch(..) => {
            HcStatus::InvalidArgument
        }
        Error::Parse(_) => HcStatus::Parse,
        Error::Io(_) => HcStatus::Io,
        Error::NonStochastic { .. }
        | Error::NegativeEntry { .. }
        | Error::NonFinite { .. }
        | Error::SizeOutOfRange { .. }
        | Error::NotADistribution(_) => HcStatus::InvalidChannel,
        Error::DimensionMismatch(_) => HcStatus::DimensionMismatch,
        Error::ConvergenceFailure { .. } | Error::NumericalFailure(_) => HcStatus::NumericalFailure,
        Error::TooLarge(_) | Error::ConfigTooLarge(_) => HcStatus::TooLarge,
        Error::NotModAdditive => HcStatus::NotModAdditive,
        Error::RhTooSmall { .. } => HcStatus::RhTooSmall,
    }
}

/// Runs `f`, recording any error or panic for `hc_last_error_message`.
fn guard(f: impl FnOnce() -> Result<(), (HcStatus, String)>) -> HcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HcStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HcStatus::Panic
        }
    }
}

fn lib<T>(r: helpercap::Result<T>) -> Result<T, (HcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (HcStatus, String) {
    (HcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn channel_ref<'a>(ch: *const HcChannel) -> Result<&'a Channel, (HcStatus, String)> {
    ch.as_ref().map(|c| &c.0).ok_or_else(|| null("channel"))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn hc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a channel file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_channel_load(path: *const c_char, out: *mut *mut HcChannel) -> HcStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|e| (HcStatus::InvalidUtf8, e.to_string()))?;
        let ch = lib(Channel::from_path(path))?;
        *out = Box::into_raw(Box::new(HcChannel(ch)));
        Ok(())
    })
}

/// Builds a channel from `q_s[s_size]` and `w` flat in `(x, s, y)` order.
///
/// # Safety
/// The arrays must hold the stated number of elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hc_channel_new(
    x_size: usize,
    s_size: usize,
    y_size: usize,
    q_s: *const f64,
    w: *const f64,
    out: *mut *mut HcChannel,
) -> HcStatus {
    guard(|| {
        if q_s.is_null() || w.is_null() {
            return Err(null("q_s or w"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let q_s = std::slice::from_raw_parts(q_s, s_size);
        let w = std::slice::from_raw_parts(w, x_size * s_size * y_size);
        let ch = lib(Channel::from_flat(x_size, s_size, y_size, q_s, w))?;
        *out = Box::into_raw(Box::new(HcChannel(ch)));
        Ok(())
    })
}

/// # Safety
/// `ch` must come from `hc_channel_load`/`hc_channel_new` and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hc_channel_free(ch: *mut HcChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// H(S) in bits.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hc_channel_state_entropy(ch: *const HcChannel, out: *mut f64) -> HcStatus {
    guard(|| {
        let ch = channel_ref(ch)?;
        *out.as_mut().ok_or_else(|| null("out"))? = ch.state_entropy();
        Ok(())
    })
}

/// C(rh) by the chosen method with default options and the given seed.
/// Brute force uses 7 lattice levels and |U| = 3.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hc_capacity(
    ch: *const HcChannel,
    rh: f64,
    method: HcMethod,
    seed: u64,
    out: *mut *mut HcCapacity,
) -> HcStatus {
    guard(|| {
        let ch = channel_ref(ch)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let opts = OptimOptions {
            seed,
            ..OptimOptions::default()
        };
        let res = lib(match method {
            HcMethod::Envelope => helpercap::capacity(ch, rh, &opts),
            HcMethod::RateSplit => helpercap::capacity_rate_split(ch, rh, &opts),
            HcMethod::BruteForce => helpercap::brute_force_capacity(ch, rh, 7, 3),
        })?;
        *out = Box::into_raw(Box::new(HcCapacity(res)));
        Ok(())
    })
}

/// Capacity in bits per channel use; NaN for a null handle.
///
/// # Safety
/// `cap` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hc_capacity_value(cap: *const HcCapacity) -> f64 {
    cap.as_ref().map_or(f64::NAN, |c| c.0.c)
}

/// Helper rate left for direct message bits; NaN for a null handle.
///
/// # Safety
/// `cap` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hc_capacity_r0(cap: *const HcCapacity) -> f64 {
    cap.as_ref().map_or(f64::NAN, |c| c.0.r0)
}

/// # Safety
/// `cap` must come from `hc_capacity` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hc_capacity_free(cap: *mut HcCapacity) {
    if !cap.is_null() {
        drop(Box::from_raw(cap));
    }
}

/// max over Q(x|s) of I(X;Y|S).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hc_oblivious_baseline(ch: *const HcChannel, out: *mut f64) -> HcStatus {
    guard(|| {
        let ch = channel_ref(ch)?;
        *out.as_mut().ok_or_else(|| null("out"))? = lib(helpercap::blahut::oblivious_baseline(ch))?;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hc_is_useless(ch: *const HcChannel, out: *mut bool) -> HcStatus {
    guard(|| {
        let ch = channel_ref(ch)?;
        *out.as_mut().ok_or_else(|| null("out"))? = detect_useless(ch);
        Ok(())
    })
}

/// Closed-form capacity of a modulo-additive channel; `NotModAdditive`
/// otherwise.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hc_mod_additive_capacity(
    ch: *const HcChannel,
    rh: f64,
    out: *mut f64,
) -> HcStatus {
    guard(|| {
        let ch = channel_ref(ch)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = lib(mod_additive_capacity(ch, rh))?.value;
        Ok(())
    })
}

/// Runs the coding-scheme simulation.
///
/// # Safety
/// `cfg` arrays must hold `s_size * u_size` and `u_size` elements.
#[no_mangle]
pub unsafe extern "C" fn hc_simulate(
    ch: *const HcChannel,
    cfg: *const HcSimConfig,
    out: *mut HcSimReport,
) -> HcStatus {
    guard(|| {
        let ch = channel_ref(ch)?;
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if cfg.q_u_given_s.is_null() || cfg.phi.is_null() {
            return Err(null("policy array"));
        }
        if cfg.u_size == 0 {
            return Err((HcStatus::InvalidArgument, "u_size must be positive".into()));
        }
        let q = std::slice::from_raw_parts(cfg.q_u_given_s, ch.s_size() * cfg.u_size);
        let phi = std::slice::from_raw_parts(cfg.phi, cfg.u_size).to_vec();
        let sim = SimConfig {
            n: cfg.n,
            rate_r: cfg.rate_r,
            rate_rh: cfg.rate_rh,
            r0: cfg.r0,
            epsilon: cfg.epsilon,
            epsilon_decoder: cfg.epsilon_decoder,
            trials: cfg.trials,
            seed: cfg.seed,
            share_codebook: cfg.share_codebook,
            mode: if cfg.ensemble { SimMode::Ensemble } else { SimMode::Explicit },
            ..SimConfig::new(q.chunks(cfg.u_size).map(<[f64]>::to_vec).collect(), phi)
        };
        let rep = lib(run_trials(ch, &sim))?;
        *out = HcSimReport {
            trials: rep.trials,
            helper_failures: rep.helper_failures,
            decode_errors: rep.decode_errors,
            error_rate: rep.error_rate,
            ci_lo: rep.ci_lo,
            ci_hi: rep.ci_hi,
            effective_rate: rep.effective_rate,
        };
        Ok(())
    })
}
