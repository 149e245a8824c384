//! State-dependent discrete memoryless channel: data model, validation and
//! the on-disk TOML format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on every alphabet size.
pub const DEFAULT_MAX_ALPHABET: usize = 16;

/// Tolerance used when checking that input rows are normalized.
pub const INPUT_TOL: f64 = 1e-12;

/// Unvalidated channel description, exactly as it appears in a channel file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChannel {
    pub x_size: i64,
    pub s_size: i64,
    pub y_size: i64,
    pub q_s: Vec<f64>,
    /// `w[x][s]` is the output distribution given input `x` and state `s`.
    pub w: Vec<Vec<Vec<f64>>>,
}

impl RawChannel {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("channel serializes")
    }
}

/// A validated SD-DMC with `W(y|x,s)` stored flat in `(x, s, y)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    x_size: usize,
    s_size: usize,
    y_size: usize,
    q_s: Vec<f64>,
    w: Vec<f64>,
}

impl Channel {
    /// Builds and validates a channel from nested rows `w[x][s][y]`.
    pub fn new(q_s: Vec<f64>, w: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let x_size = w.len() as i64;
        let s_size = q_s.len() as i64;
        let y_size = w
            .first()
            .and_then(|rows| rows.first())
            .map_or(0, |row| row.len() as i64);
        validate_channel(RawChannel {
            x_size,
            s_size,
            y_size,
            q_s,
            w,
        })
    }

    /// Builds a channel from a flat `(x, s, y)` transition table.
    pub fn from_flat(
        x_size: usize,
        s_size: usize,
        y_size: usize,
        q_s: &[f64],
        w: &[f64],
    ) -> Result<Self> {
        if w.len() != x_size * s_size * y_size {
            return Err(Error::DimensionMismatch(format!(
                "flat w has {} entries, expected {}",
                w.len(),
                x_size * s_size * y_size
            )));
        }
        let nested = (0..x_size)
            .map(|x| {
                (0..s_size)
                    .map(|s| {
                        let base = (x * s_size + s) * y_size;
                        w[base..base + y_size].to_vec()
                    })
                    .collect()
            })
            .collect();
        validate_channel(RawChannel {
            x_size: x_size as i64,
            s_size: s_size as i64,
            y_size: y_size as i64,
            q_s: q_s.to_vec(),
            w: nested,
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        validate_channel(RawChannel::from_toml_str(&text)?)
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn s_size(&self) -> usize {
        self.s_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn q_s(&self) -> &[f64] {
        &self.q_s
    }

    /// Output distribution given input `x` and state `s`.
    pub fn row(&self, x: usize, s: usize) -> &[f64] {
        let base = (x * self.s_size + s) * self.y_size;
        &self.w[base..base + self.y_size]
    }

    /// `W(y|x,s)`.
    pub fn w(&self, x: usize, s: usize, y: usize) -> f64 {
        self.w[(x * self.s_size + s) * self.y_size + y]
    }

    pub fn w_flat(&self) -> &[f64] {
        &self.w
    }

    /// `|X|·|S| + 1`, the largest auxiliary alphabet ever needed.
    pub fn max_u_size(&self) -> usize {
        self.x_size * self.s_size + 1
    }

    /// H(S) in bits.
    pub fn state_entropy(&self) -> f64 {
        crate::info::entropy_unchecked(&self.q_s)
    }

    pub fn to_raw(&self) -> RawChannel {
        RawChannel {
            x_size: self.x_size as i64,
            s_size: self.s_size as i64,
            y_size: self.y_size as i64,
            q_s: self.q_s.clone(),
            w: (0..self.x_size)
                .map(|x| (0..self.s_size).map(|s| self.row(x, s).to_vec()).collect())
                .collect(),
        }
    }
}

/// Validates a raw description against the default alphabet limit.
pub fn validate_channel(raw: RawChannel) -> Result<Channel> {
    validate_channel_with_limit(raw, DEFAULT_MAX_ALPHABET)
}

pub fn validate_channel_with_limit(raw: RawChannel, max_alphabet: usize) -> Result<Channel> {
    let size = |what: &str, value: i64| -> Result<usize> {
        if value < 1 || value as u64 > max_alphabet as u64 {
            Err(Error::SizeOutOfRange {
                what: what.to_string(),
                value,
                max: max_alphabet,
            })
        } else {
            Ok(value as usize)
        }
    };
    let x_size = size("x_size", raw.x_size)?;
    let s_size = size("s_size", raw.s_size)?;
    let y_size = size("y_size", raw.y_size)?;

    if raw.q_s.len() != s_size {
        return Err(Error::DimensionMismatch(format!(
            "q_s has {} entries, s_size is {s_size}",
            raw.q_s.len()
        )));
    }
    if raw.w.len() != x_size {
        return Err(Error::DimensionMismatch(format!(
            "w has {} input rows, x_size is {x_size}",
            raw.w.len()
        )));
    }
    for (x, rows) in raw.w.iter().enumerate() {
        if rows.len() != s_size {
            return Err(Error::DimensionMismatch(format!(
                "w[{x}] has {} state rows, s_size is {s_size}",
                rows.len()
            )));
        }
        for (s, row) in rows.iter().enumerate() {
            if row.len() != y_size {
                return Err(Error::DimensionMismatch(format!(
                    "w[{x}][{s}] has {} entries, y_size is {y_size}",
                    row.len()
                )));
            }
        }
    }

    check_probability_vector("q_s", &raw.q_s, INPUT_TOL)?;
    for (x, rows) in raw.w.iter().enumerate() {
        for (s, row) in rows.iter().enumerate() {
            check_probability_vector(&format!("w[{x}][{s}]"), row, INPUT_TOL)?;
        }
    }

    let w = raw.w.into_iter().flatten().flatten().collect();
    Ok(Channel {
        x_size,
        s_size,
        y_size,
        q_s: raw.q_s,
        w,
    })
}

/// Checks finiteness, sign and normalization, in that order.
pub fn check_probability_vector(what: &str, p: &[f64], tol: f64) -> Result<()> {
    if let Some(_) = p.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: what.to_string(),
        });
    }
    if let Some(&value) = p.iter().find(|&&v| v < 0.0) {
        return Err(Error::NegativeEntry {
            what: what.to_string(),
            value,
        });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::NonStochastic {
            what: what.to_string(),
            sum,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(q_s: Vec<f64>, w: Vec<Vec<Vec<f64>>>) -> RawChannel {
        RawChannel {
            x_size: w.len() as i64,
            s_size: q_s.len() as i64,
            y_size: w[0][0].len() as i64,
            q_s,
            w,
        }
    }

    fn bsc_rows() -> Vec<Vec<Vec<f64>>> {
        vec![
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![0.1, 0.9], vec![0.8, 0.2]],
        ]
    }

    #[test]
    fn accepts_well_formed() {
        let ch = validate_channel(raw(vec![0.5, 0.5], bsc_rows())).unwrap();
        assert_eq!((ch.x_size(), ch.s_size(), ch.y_size()), (2, 2, 2));
        assert_eq!(ch.w(1, 0, 1), 0.9);
        assert_eq!(ch.row(0, 1), &[0.2, 0.8]);
    }

    #[test]
    fn rejects_overfull_state_law() {
        let err = validate_channel(raw(vec![0.6, 0.6], bsc_rows())).unwrap_err();
        assert!(matches!(err, Error::NonStochastic { sum, .. } if (sum - 1.2).abs() < 1e-12));
    }

    #[test]
    fn sign_checked_before_normalization() {
        let w = vec![vec![vec![1.0, -0.0001, 0.0001]], vec![vec![0.0, 0.0, 1.0]]];
        let err = validate_channel(raw(vec![1.0], w)).unwrap_err();
        assert!(matches!(err, Error::NegativeEntry { .. }), "{err:?}");
    }

    #[test]
    fn size_limits() {
        let mut r = raw(vec![0.5, 0.5], bsc_rows());
        r.x_size = 0;
        assert!(matches!(
            validate_channel(r).unwrap_err(),
            Error::SizeOutOfRange { .. }
        ));

        let q = vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        let w = vec![vec![vec![1.0, 0.0]; 3]; 2];
        let r = raw(q, w);
        assert!(matches!(
            validate_channel_with_limit(r, 2).unwrap_err(),
            Error::SizeOutOfRange { .. }
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let mut r = raw(vec![0.5, 0.5], bsc_rows());
        r.y_size = 3;
        assert!(matches!(
            validate_channel(r).unwrap_err(),
            Error::DimensionMismatch(_)
        ));
    }

    #[test]
    fn toml_round_trip_and_integer_entries() {
        let text = r#"
x_size = 2
s_size = 1
y_size = 2
q_s = [1]
w = [[[1, 0]], [[0.25, 0.75]]]
"#;
        let ch = validate_channel(RawChannel::from_toml_str(text).unwrap()).unwrap();
        assert_eq!(ch.w(1, 0, 1), 0.75);
        let again =
            validate_channel(RawChannel::from_toml_str(&ch.to_raw().to_toml_string()).unwrap())
                .unwrap();
        assert_eq!(again, ch);
    }

    #[test]
    fn missing_field_is_named() {
        let text = "x_size = 1\ns_size = 1\ny_size = 1\nq_s = [1.0]\n";
        let err = RawChannel::from_toml_str(text).unwrap_err();
        assert!(err.to_string().contains("`w`"), "{err}");
    }
}
