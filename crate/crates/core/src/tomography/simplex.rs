/// Euclidean projection onto the probability simplex `{x >= 0, sum x = 1}`.
///
/// Sort-and-threshold: find the largest `rho` with
/// `u_rho - (sum_{j <= rho} u_j - 1) / rho > 0` over the descending sort `u`,
/// then shift every coordinate by that threshold and clamp at zero.
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    simplex_project_in_place(&mut out);
    out
}

/// In-place variant of [`simplex_project`].
pub fn simplex_project_in_place(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}
