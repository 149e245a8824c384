//! Euclidean projection onto (floored) probability simplices.

/// Projects `v` in place onto `{x : x_i >= 0, Σ x_i = z}`.
pub fn project_simplex(v: &mut [f64], z: f64) {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - z) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Projects onto `{x : x_i >= floor, Σ x_i = 1}`.
pub fn project_floored(v: &mut [f64], floor: f64) {
    let n = v.len() as f64;
    let floor = floor.min(1.0 / n);
    v.iter_mut().for_each(|x| *x -= floor);
    project_simplex(v, 1.0 - n * floor);
    v.iter_mut().for_each(|x| *x += floor);
    // Large steps leave cancellation error in the sum.
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
}

/// Applies [`project_floored`] to every length-`row` chunk of `v`.
pub fn project_rows(v: &mut [f64], row: usize, floor: f64) {
    for chunk in v.chunks_mut(row) {
        project_floored(chunk, floor);
    }
}
