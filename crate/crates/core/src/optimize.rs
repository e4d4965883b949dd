//! Scalar root bracketing and one-dimensional maximization.

/// Bisection for a root of `f` on `[lo, hi]`, assuming `f(lo) < 0 < f(hi)` or
/// the reverse. Stops once the bracket is narrower than `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let lo_negative = f(lo) < 0.0;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for a local maximum of `f` on `[lo, hi]`.
///
/// Returns `(argmax, max)`. Terminates when the bracket width falls below
/// `rel_tol·|x|` (or `rel_tol` near zero).
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64) {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        let scale = 0.5 * (lo.abs() + hi.abs());
        if hi - lo <= rel_tol * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `count` points log-spaced on `[lo, hi]`, `0 < lo < hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// Grid search over `grid` followed by golden-section refinement between the
/// neighbors of the best grid point. Returns `(argmax, max)`.
pub fn grid_then_golden<F: Fn(f64) -> f64>(f: F, grid: &[f64], rel_tol: f64) -> (f64, f64) {
    let (best_idx, best) =
        grid.iter()
            .map(|&y| f(y))
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
    let lo = grid[best_idx.saturating_sub(1)];
    let hi = grid[(best_idx + 1).min(grid.len() - 1)];
    let (x, v) = golden_max(&f, lo, hi, rel_tol);
    if v >= best {
        (x, v)
    } else {
        (grid[best_idx], best)
    }
}
