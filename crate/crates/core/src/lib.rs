//! Capacity of a state-dependent discrete memoryless channel whose encoder and
//! decoder are both assisted by a rate-limited helper that sees the state
//! sequence noncausally and knows the message.
//!
//! The crate computes
//!
//! ```text
//! C(Rh) = max  I(U;Y|V) - I(U;S|V) + Rh   subject to  I(U;S|V) <= Rh
//! ```
//!
//! over `Q_V`, `Q(u|s,v)` and deterministic maps `φ(v,u)`, checks it against
//! closed-form special cases, and simulates the random-coding scheme that
//! achieves it.

pub mod blahut;
pub mod channel;
pub mod error;
pub mod format;
pub mod info;
pub mod optimizer;
pub mod oracles;
pub mod seed;
pub mod sim;

pub use channel::{validate_channel, Channel, RawChannel};
pub use error::{Error, Result};
pub use info::{build_joint, entropy, mi_pair, AuxiliaryPolicy, JointDistribution, MiPair};
pub use optimizer::{
    brute_force_capacity, capacity, capacity_rate_split, concave_envelope, inner_g, sweep,
    CapacityResult, Method, OptimOptions,
};
