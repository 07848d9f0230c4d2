//! One-dimensional maximization and root bracketing used by the rate
//! optimizers and the frontier searches.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Best point found by a 1-D search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max<F>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> Maximum
where
    F: Fn(f64) -> f64,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while (hi - lo) > tol && iterations < 200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
        iterations += 1;
    }
    if f1 >= f2 {
        Maximum { x: x1, value: f1 }
    } else {
        Maximum { x: x2, value: f2 }
    }
}

/// Maximize `f` over the sample points `grid` (sorted ascending), then refine
/// with golden section between the neighbours of the best sample.
///
/// NaN samples are skipped. Returns `None` if every sample is NaN.
pub fn grid_then_golden_max<F>(f: &F, grid: &[f64], tol: f64) -> Option<Maximum>
where
    F: Fn(f64) -> f64,
{
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in grid.iter().enumerate() {
        let v = f(x);
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let (i, v) = best?;
    let mut result = Maximum { x: grid[i], value: v };
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    if hi > lo {
        let refined = golden_section_max(f, lo, hi, tol);
        if refined.value > result.value {
            result = refined;
        }
    }
    Some(result)
}

/// `count` evenly spaced points covering `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|i| if i == count - 1 { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 })
            .collect(),
    }
}

/// `count` log-spaced points covering `[lo, hi]`, `lo > 0`.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), count)
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                lo
            } else if i + 1 == count {
                hi
            } else {
                l.exp()
            }
        })
        .collect()
}

/// Bisection for the point where a decreasing `f` crosses zero, given
/// `f(lo) >= 0 > f(hi)`. Stops when the bracket is narrower than
/// `x_tol * max(|mid|, 1e-300)` and the residual at the returned point is
/// below `f_tol`, or after 300 halvings.
pub fn bisect_decreasing<F>(f: &F, mut lo: f64, mut hi: f64, x_tol: f64, f_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let mut best = (lo, f(lo).abs());
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v.abs() < best.1 {
            best = (mid, v.abs());
        }
        if v >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        let width_ok = (hi - lo) <= x_tol * mid.abs().max(1e-300);
        if width_ok && best.1 <= f_tol {
            break;
        }
        if hi - lo <= f64::EPSILON * mid.abs() {
            break;
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_peak() {
        let f = |x: f64| -(x - 0.3).powi(2);
        let m = golden_section_max(&f, 0.0, 1.0, 1e-9);
        assert!((m.x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn grid_then_golden_handles_boundary_maximum() {
        let f = |x: f64| -x;
        let m = grid_then_golden_max(&f, &linspace(0.0, 0.5, 64), 1e-9).unwrap();
        assert!(m.x.abs() < 1e-8);
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn grid_then_golden_skips_nan() {
        let f = |x: f64| if x < 0.5 { f64::NAN } else { -(x - 0.8).powi(2) };
        let m = grid_then_golden_max(&f, &linspace(0.0, 1.0, 11), 1e-9).unwrap();
        assert!((m.x - 0.8).abs() < 1e-6);
        assert!(grid_then_golden_max(&|_x: f64| f64::NAN, &[0.0, 1.0], 1e-9).is_none());
    }

    #[test]
    fn spacing_helpers_hit_endpoints() {
        let l = linspace(1.0, 2.0, 5);
        assert_eq!(l, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        let g = logspace(1e-3, 10.0, 5);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[4], 10.0);
        assert!((g[2] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn bisection_converges_on_root() {
        let f = |x: f64| 2.0 - x * x;
        let r = bisect_decreasing(&f, 0.0, 2.0, 1e-12, 1e-12);
        assert!((r - 2f64.sqrt()).abs() < 1e-10);
    }
}
