//! Composite Simpson quadrature for diagnostics.
//!
//! The solvers themselves never integrate numerically; this helper backs the
//! normalization and fixed-point checks, which must stay independent of the
//! series algebra they validate.

/// Composite Simpson rule on `[lo, hi]` with at least `min_points` nodes.
///
/// The node count is rounded up to an even number of panels. Error is
/// O(h^4 f'''') , so smooth exponential-polynomial integrands are captured
/// well below 1e-10 at step sizes around 0.01.
pub fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, min_points: usize) -> f64 {
    assert!(hi >= lo, "integration bounds out of order");
    if hi == lo {
        return 0.0;
    }
    let panels = (min_points.max(3) - 1).div_ceil(2) * 2;
    let h = (hi - lo) / panels as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..panels {
        let x = lo + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    acc * h / 3.0
}

/// Simpson rule with a fixed step size (rounded to a whole panel count).
pub fn simpson_steps<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> f64 {
    let n = (((hi - lo) / step).ceil() as usize).max(2) + 1;
    simpson(f, lo, hi, n)
}
