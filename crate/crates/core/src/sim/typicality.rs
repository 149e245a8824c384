//! Robust strong joint typicality with relative slack.

use crate::error::{Error, Result};

/// Whether `count` occurrences out of `n` are within `epsilon` (relative) of
/// the reference mass. Zero mass admits only zero occurrences.
pub fn cell_ok(count: usize, n: usize, reference: f64, epsilon: f64) -> bool {
    if reference <= 0.0 {
        return count == 0;
    }
    let freq = count as f64 / n as f64;
    (freq - reference).abs() <= epsilon * reference
}

/// Range of counts accepted by [`cell_ok`], or `None` if no count is.
pub fn cell_range(n: usize, reference: f64, epsilon: f64) -> Option<(usize, usize)> {
    if reference <= 0.0 {
        return Some((0, 0));
    }
    // Estimate from the closed form, then settle the edges with the exact test.
    let centre = n as f64 * reference;
    let half = epsilon * centre;
    let mut lo = ((centre - half).floor().max(0.0) as usize).min(n);
    let mut hi = ((centre + half).ceil() as usize).min(n);
    while lo <= hi && !cell_ok(lo, n, reference, epsilon) {
        lo += 1;
    }
    while hi > lo && !cell_ok(hi, n, reference, epsilon) {
        hi -= 1;
    }
    if lo > hi || !cell_ok(lo, n, reference, epsilon) {
        return None;
    }
    Some((lo, hi))
}

/// Joint type of `(a, b)` as counts, flat `(a, b)`.
pub fn joint_counts(a: &[usize], b: &[usize], na: usize, nb: usize) -> Result<Vec<usize>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let mut counts = vec![0usize; na * nb];
    for (&x, &y) in a.iter().zip(b) {
        if x >= na || y >= nb {
            return Err(Error::DimensionMismatch(format!(
                "symbol pair ({x}, {y}) outside {na}×{nb}"
            )));
        }
        counts[x * nb + y] += 1;
    }
    Ok(counts)
}

/// True iff every cell of the joint type of `(a, b)` is within `epsilon`
/// (relative) of `reference[a][b]`, and no pair occurs where the reference
/// has no mass.
pub fn typical(a: &[usize], b: &[usize], reference: &[Vec<f64>], epsilon: f64) -> Result<bool> {
    let na = reference.len();
    let nb = reference.first().map_or(0, Vec::len);
    if reference.iter().any(|row| row.len() != nb) {
        return Err(Error::DimensionMismatch("ragged reference joint".into()));
    }
    let counts = joint_counts(a, b, na, nb)?;
    let n = a.len();
    Ok(reference.iter().enumerate().all(|(i, row)| {
        row.iter()
            .enumerate()
            .all(|(j, &p)| cell_ok(counts[i * nb + j], n, p, epsilon))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_type_is_typical() {
        let a = [0, 0, 1, 1];
        let b = [0, 1, 0, 1];
        let r = vec![vec![0.25, 0.25], vec![0.25, 0.25]];
        assert!(typical(&a, &b, &r, 0.05).unwrap());
    }

    #[test]
    fn constant_sequence_is_not() {
        let a = vec![0; 100];
        let b = vec![0; 100];
        let r = vec![vec![0.5], vec![0.5]];
        assert!(!typical(&a, &b, &r, 0.05).unwrap());
    }

    #[test]
    fn null_support_violation() {
        let a = [0, 0, 1, 1, 1];
        let b = [0, 0, 1, 1, 0];
        let r = vec![vec![0.4, 0.0], vec![0.0, 0.6]];
        assert!(!typical(&a, &b, &r, 0.4).unwrap());
    }

    #[test]
    fn length_mismatch() {
        let r = vec![vec![1.0]];
        assert!(matches!(
            typical(&[0, 0], &[0], &r, 0.1),
            Err(Error::LengthMismatch(2, 1))
        ));
    }

    #[test]
    fn range_matches_predicate() {
        for &(n, p, eps) in &[(200, 0.055, 0.46), (100, 0.3, 0.1), (7, 0.5, 0.01), (1000, 0.25, 0.1)] {
            let accepted: Vec<usize> = (0..=n).filter(|&c| cell_ok(c, n, p, eps)).collect();
            match cell_range(n, p, eps) {
                Some((lo, hi)) => assert_eq!(accepted, (lo..=hi).collect::<Vec<_>>()),
                None => assert!(accepted.is_empty()),
            }
        }
    }
}
