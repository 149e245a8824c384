//! Upper concave envelope of a finite set of `(r, g)` samples.

use crate::error::{Error, Result};

/// Largest number of support points a time-sharing law ever needs.
pub const MAX_SUPPORT: usize = 3;

const QUERY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportPoint {
    /// Index into the point slice passed to [`concave_envelope`].
    pub index: usize,
    pub r: f64,
    pub g: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub query: f64,
    pub support: Vec<SupportPoint>,
    pub value_at: f64,
}

impl Envelope {
    /// Weighted mean of the support abscissae.
    pub fn mean_r(&self) -> f64 {
        self.support.iter().map(|p| p.weight * p.r).sum()
    }
}

/// Indices of the upper-hull vertices, ordered by increasing `r`. Collinear
/// interior points are dropped; for equal `r` the largest `g` wins (lowest
/// index on exact ties).
pub fn upper_hull(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .0
            .total_cmp(&points[b].0)
            .then(points[b].1.total_cmp(&points[a].1))
            .then(a.cmp(&b))
    });
    order.dedup_by(|later, earlier| points[*later].0 == points[*earlier].0);

    let mut hull: Vec<usize> = Vec::with_capacity(order.len());
    for &i in &order {
        while hull.len() >= 2 {
            let (o, a, b) = (
                points[hull[hull.len() - 2]],
                points[hull[hull.len() - 1]],
                points[i],
            );
            let cross = (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Evaluates the upper concave envelope of `points` at `query`.
pub fn concave_envelope(points: &[(f64, f64)], query: f64) -> Result<Envelope> {
    if points.is_empty() || !query.is_finite() {
        return Err(Error::QueryOutOfRange {
            query,
            lo: f64::NAN,
            hi: f64::NAN,
        });
    }
    let hull = upper_hull(points);
    let lo = points[hull[0]].0;
    let hi = points[*hull.last().unwrap()].0;
    if query < lo - QUERY_TOL || query > hi + QUERY_TOL {
        return Err(Error::QueryOutOfRange { query, lo, hi });
    }
    let q = query.clamp(lo, hi);
    let single = |i: usize| Envelope {
        query,
        support: vec![SupportPoint {
            index: i,
            r: points[i].0,
            g: points[i].1,
            weight: 1.0,
        }],
        value_at: points[i].1,
    };
    if let Some(&i) = hull.iter().find(|&&i| points[i].0 == q) {
        return Ok(single(i));
    }
    let k = hull
        .windows(2)
        .position(|w| points[w[0]].0 < q && q < points[w[1]].0)
        .expect("query strictly inside hull range");
    let (a, b) = (hull[k], hull[k + 1]);
    let (ra, ga) = points[a];
    let (rb, gb) = points[b];
    let wb = (q - ra) / (rb - ra);
    let wa = 1.0 - wb;
    let support = vec![
        SupportPoint {
            index: a,
            r: ra,
            g: ga,
            weight: wa,
        },
        SupportPoint {
            index: b,
            r: rb,
            g: gb,
            weight: wb,
        },
    ];
    debug_assert!(support.len() <= MAX_SUPPORT);
    Ok(Envelope {
        query,
        value_at: wa * ga + wb * gb,
        support,
    })
}

/// Sorts by `r` and replaces each value with the running maximum so far,
/// returning for every position the index of the point that attains it.
/// A solution feasible at a smaller budget stays feasible at a larger one.
pub fn running_max_sources(points: &[(f64, f64)]) -> Vec<(f64, usize)> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0).then(a.cmp(&b)));
    let mut best: Option<usize> = None;
    order
        .into_iter()
        .map(|i| {
            match best {
                Some(b) if points[b].1 >= points[i].1 => {}
                _ => best = Some(i),
            }
            (points[i].0, best.unwrap())
        })
        .collect()
}
