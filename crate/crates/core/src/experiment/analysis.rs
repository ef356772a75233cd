//! Rate fits on `|A_m(t)|` series.

/// Least-squares slope of `ln y` against `t`, skipping non-positive `y`.
/// `None` with fewer than two usable points.
pub fn log_linear_slope(points: &[(f64, f64)]) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(t, y)| (t, y.ln()))
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let n = usable.len() as f64;
    let mt = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(usable.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum::<f64>() / sxx)
}

/// Exponential growth rate fitted over `t0 ≤ t ≤ t1`.
pub fn growth_rate(series: &[(f64, f64)], t0: f64, t1: f64) -> Option<f64> {
    let window: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|p| p.0 >= t0 && p.0 <= t1)
        .collect();
    log_linear_slope(&window)
}

/// `e(t_i) = max_{j ≥ i} y_j`: the smallest non-increasing curve above the
/// samples.
pub fn upper_envelope(series: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = series.to_vec();
    let mut running = f64::NEG_INFINITY;
    for p in out.iter_mut().rev() {
        running = running.max(p.1);
        p.1 = running;
    }
    out
}

/// Decay rate of the upper envelope over `0 ≤ t ≤ t_end`, positive for decay.
pub fn envelope_decay_rate(series: &[(f64, f64)], t_end: f64) -> Option<f64> {
    let window: Vec<(f64, f64)> = series.iter().copied().filter(|p| p.0 <= t_end).collect();
    log_linear_slope(&upper_envelope(&window)).map(|s| -s)
}
