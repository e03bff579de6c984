//! Central finite-difference gradient checking.

/// Largest violation of `|a - n| <= max(abs_tol, rel_tol * max(|a|, |n|))`
/// over all coordinates, as `(index, analytic, numeric)`; `None` when all pass.
pub fn check_gradient(
    f: impl Fn(&[f64]) -> f64,
    x: &[f64],
    analytic: &[f64],
    step: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Option<(usize, f64, f64)> {
    let mut probe = x.to_vec();
    let mut worst: Option<(usize, f64, f64, f64)> = None;
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let up = f(&probe);
        probe[i] = x[i] - step;
        let down = f(&probe);
        probe[i] = x[i];
        let numeric = (up - down) / (2.0 * step);
        let a = analytic[i];
        let diff = (a - numeric).abs();
        let allowed = abs_tol.max(rel_tol * a.abs().max(numeric.abs()));
        if diff > allowed {
            let excess = diff / allowed;
            if worst.map_or(true, |w| excess > w.3) {
                worst = Some((i, a, numeric, excess));
            }
        }
    }
    worst.map(|(i, a, n, _)| (i, a, n))
}
