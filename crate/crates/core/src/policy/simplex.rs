/// Euclidean projection of `v` onto the probability simplex.
///
/// Sort-based method: find the largest `k` such that the `k` largest entries
/// shifted by a common threshold stay positive.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            threshold = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - threshold).max(0.0)).collect();
    // clean up rounding so the row sums to one
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        for p in &mut out {
            *p /= total;
        }
    }
    out
}
