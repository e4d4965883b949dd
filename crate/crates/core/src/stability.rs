//! Stability criteria for mixed fleets.
//!
//! Everything here is built on the per-class log-gain
//!
//! ```text
//! H(y) = ln( (α² + γ²y) / (α² + (β² − 2α)y + y²) ),   y = x² ≥ 0
//! ```
//!
//! which is `ln |F(ix)|²` for the class transfer function `F`. A fleet with
//! class counts `n_k` is exponentially stable around its equilibrium, for
//! every ordering, when `Σ n_k H_k(y) < 0` for all `y > 0`; if the sum is
//! positive somewhere, large enough replications of the fleet are unstable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::interleave_counts;
use crate::error::{Error, Result};
use crate::linearize::{LinearTrio, StabilityClass};
use crate::optimize;
use crate::spectrum::{eigenvalues_on_h, RingSystem};

/// Grid size for the one-dimensional maximizations.
pub const GRID_POINTS: usize = 4096;
/// Relative tolerance of the golden-section refinement.
pub const REFINE_TOL: f64 = 1e-10;
/// Abscissa above which a ring counts as unstable in the size sweep.
pub const UNSTABLE_ABSCISSA: f64 = 1e-9;

/// `H(y)`.
pub fn log_gain(trio: &LinearTrio, y: f64) -> Result<f64> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!(
            "log-gain needs finite y >= 0, got {y}"
        )));
    }
    let (a, b) = (trio.alpha, trio.beta);
    let den = a * a + (b * b - 2.0 * a) * y + y * y;
    if den <= 0.0 {
        return Err(Error::Domain(format!(
            "log-gain denominator {den} <= 0 at y = {y}"
        )));
    }
    // numerator − denominator = −y(Δ + y); ln_1p keeps accuracy as y → 0
    Ok((-y * (trio.discriminant() + y) / den).ln_1p())
}

fn h(trio: &LinearTrio, y: f64) -> f64 {
    let (a, b) = (trio.alpha, trio.beta);
    let den = a * a + (b * b - 2.0 * a) * y + y * y;
    (-y * (trio.discriminant() + y) / den).ln_1p()
}

/// `H′(0) = −Δ/α²`.
pub fn log_gain_slope_at_zero(trio: &LinearTrio) -> f64 {
    -trio.discriminant() / (trio.alpha * trio.alpha)
}

/// `Γ²`: the positive root of the numerator of `H′` for an unstable trio,
/// where `H` peaks.
///
/// Evaluated as `−α²Δ / (α² + √(α⁴ − α²γ²Δ))`, the rationalized form of
/// `(−α² + √(α⁴ − α²γ²Δ))/γ²`; it tends to `−Δ/2` as `γ → 0`.
pub fn gamma_squared(trio: &LinearTrio) -> Result<f64> {
    let d = trio.discriminant();
    if !(d < 0.0) {
        return Err(Error::Precondition(format!(
            "Γ² needs an unstable trio, Δ = {d}"
        )));
    }
    let a2 = trio.alpha * trio.alpha;
    let g2 = trio.gamma * trio.gamma;
    Ok(-a2 * d / (a2 + (a2 * a2 - a2 * g2 * d).sqrt()))
}

/// The image of `y` under the involution of `[0, −Δ]` that preserves `H`
/// of an unstable trio.
pub fn mirror_point(trio: &LinearTrio, y: f64) -> f64 {
    let a2 = trio.alpha * trio.alpha;
    let g2 = trio.gamma * trio.gamma;
    a2 * (-trio.discriminant() - y) / (a2 + g2 * y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhaseReport {
    pub delta1: f64,
    pub delta2: f64,
    pub gamma_sq: f64,
    pub n0: f64,
    pub tau0: f64,
    pub bound_lower: f64,
    pub bound_upper: f64,
    /// Where `−H₂/H₁` attains `n0`; 0 when the supremum is the `y → 0⁺` limit.
    pub argmax_y: f64,
}

fn check_pair(t1: &LinearTrio, t2: &LinearTrio) -> Result<(f64, f64)> {
    let (d1, d2) = (t1.discriminant(), t2.discriminant());
    if t1.classify() != StabilityClass::Stable || t2.classify() != StabilityClass::Unstable {
        return Err(Error::Precondition(format!(
            "need a stable and an unstable class, got Δ₁ = {d1}, Δ₂ = {d2}"
        )));
    }
    Ok((d1, d2))
}

/// `lim_{y→0⁺} −H₂(y)/H₁(y) = −Δ₂(α₁)² / (Δ₁(α₂)²)`.
pub fn ratio_limit_at_zero(t1: &LinearTrio, t2: &LinearTrio) -> f64 {
    -t2.discriminant() * t1.alpha * t1.alpha / (t1.discriminant() * t2.alpha * t2.alpha)
}

/// `−H₂(y)/H₁(y)` for `y > 0`, the `y → 0⁺` limit at `y = 0`.
pub fn rate_ratio(t1: &LinearTrio, t2: &LinearTrio, y: f64) -> f64 {
    if y == 0.0 {
        return ratio_limit_at_zero(t1, t2);
    }
    -h(t2, y) / h(t1, y)
}

/// Maximizes `−H₂/H₁` over `(0, upper]` on a log grid (starting at
/// `1e-9·upper`), optionally refined by golden section, and compares with
/// the analytic `y → 0⁺` limit. Returns `(argmax, max)`.
pub fn maximize_rate_ratio(
    t1: &LinearTrio,
    t2: &LinearTrio,
    upper: f64,
    grid_points: usize,
    refine: bool,
) -> (f64, f64) {
    let grid = optimize::log_grid(upper * 1e-9, upper, grid_points.max(3));
    let f = |y: f64| rate_ratio(t1, t2, y);
    let (y, v) = if refine {
        optimize::grid_then_golden(f, &grid, REFINE_TOL)
    } else {
        grid.iter()
            .map(|&y| (y, f(y)))
            .fold(
                (0.0, f64::NEG_INFINITY),
                |a, b| if b.1 > a.1 { b } else { a },
            )
    };
    let limit = ratio_limit_at_zero(t1, t2);
    if limit >= v {
        (0.0, limit)
    } else {
        (y, v)
    }
}

/// `(B_l, B_u)`: closed-form lower and upper estimates of `τ₀`.
pub fn tau0_bounds(t1: &LinearTrio, t2: &LinearTrio) -> Result<(f64, f64)> {
    let (d1, d2) = check_pair(t1, t2)?;
    let (a1, b1, g1) = (t1.alpha, t1.beta, t1.gamma);
    let (a2, b2) = (t2.alpha, t2.beta);
    let lower = -d2 * a1 * a1 / (d1 * a2 * a2 - d2 * a1 * a1);

    let gs = gamma_squared(t2)?;
    let stable_den_at_gs =
        (a1 * a1 + g1 * g1 * gs) * (a1 * a1 + (b1 * b1 - 2.0 * a1) * gs + gs * gs);
    let top = -d2 * stable_den_at_gs;
    let upper = top / (b2 * b2 * a1 * a1 * d1 + top);
    Ok((lower, upper))
}

/// Critical penetration rate `τ₀ = N₀/(N₀ + 1)` of the stable class, with
/// `N₀ = max −H₂/H₁` over `(0, Γ²]`.
pub fn critical_penetration(t1: &LinearTrio, t2: &LinearTrio) -> Result<TwoPhaseReport> {
    critical_penetration_with(t1, t2, GRID_POINTS, true)
}

/// [`critical_penetration`] with an explicit grid size and optional
/// golden-section refinement.
pub fn critical_penetration_with(
    t1: &LinearTrio,
    t2: &LinearTrio,
    grid_points: usize,
    refine: bool,
) -> Result<TwoPhaseReport> {
    let (d1, d2) = check_pair(t1, t2)?;
    let gs = gamma_squared(t2)?;
    let (argmax_y, n0) = maximize_rate_ratio(t1, t2, gs, grid_points, refine);
    let (bound_lower, bound_upper) = tau0_bounds(t1, t2)?;
    Ok(TwoPhaseReport {
        delta1: d1,
        delta2: d2,
        gamma_sq: gs,
        n0,
        tau0: n0 / (n0 + 1.0),
        bound_lower,
        bound_upper,
        argmax_y,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MarginVerdict {
    /// `Σ n_k H_k < 0` on `y > 0`: stable for these counts, any ordering.
    StableAllN,
    /// The sum is positive somewhere: large replications are unstable.
    UnstableForLargeN,
    /// Neither strictly: the counts sit on the stability boundary.
    CriticalBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    /// Largest value of `Σ n_k H_k(y)` found on the search grid (which
    /// excludes `y = 0`, where the sum vanishes).
    pub sup_margin: f64,
    pub argmax_y: f64,
    /// `Σ n_k H_k′(0)`; its sign decides the verdict near `y = 0`.
    pub slope_at_zero: f64,
    pub verdict: MarginVerdict,
}

/// Upper end of the margin search interval.
pub(crate) fn margin_search_upper(trios: &[LinearTrio]) -> f64 {
    let mut top = 1.0_f64;
    for t in trios {
        let d = t.discriminant();
        if d < 0.0 {
            top = top.max(-d);
            if let Ok(gs) = gamma_squared(t) {
                top = top.max(gs);
            }
        }
    }
    10.0 * top
}

/// `sup_{y>0} Σ n_k H_k(y)` with its verdict. Counts may be fractional rates.
pub fn multi_phase_margin(trios: &[LinearTrio], counts: &[f64]) -> Result<MarginReport> {
    if trios.is_empty() || trios.len() != counts.len() {
        return Err(Error::Precondition(format!(
            "{} trios vs {} counts",
            trios.len(),
            counts.len()
        )));
    }
    if counts.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) || counts.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Precondition(
            "counts must be non-negative with a positive total".into(),
        ));
    }
    let sum = |y: f64| -> f64 {
        trios
            .iter()
            .zip(counts)
            .filter(|(_, &c)| c > 0.0)
            .map(|(t, &c)| c * h(t, y))
            .sum()
    };
    let upper = margin_search_upper(trios);
    let grid = optimize::log_grid(upper * 1e-9, upper, GRID_POINTS);
    let (argmax_y, sup_margin) = optimize::grid_then_golden(sum, &grid, REFINE_TOL);

    let slope_at_zero: f64 = trios
        .iter()
        .zip(counts)
        .map(|(t, &c)| c * log_gain_slope_at_zero(t))
        .sum();
    let slope_scale: f64 = trios
        .iter()
        .zip(counts)
        .map(|(t, &c)| (c * log_gain_slope_at_zero(t)).abs())
        .sum();

    let verdict = if sup_margin > 0.0 || slope_at_zero > 1e-12 * slope_scale {
        MarginVerdict::UnstableForLargeN
    } else if slope_at_zero.abs() <= 1e-12 * slope_scale {
        MarginVerdict::CriticalBoundary
    } else {
        MarginVerdict::StableAllN
    };
    Ok(MarginReport {
        sup_margin,
        argmax_y,
        slope_at_zero,
        verdict,
    })
}

/// Two-class margin for counts (or rates) `n1`, `n2`.
pub fn two_phase_margin(
    t1: &LinearTrio,
    t2: &LinearTrio,
    n1: f64,
    n2: f64,
) -> Result<MarginReport> {
    multi_phase_margin(&[*t1, *t2], &[n1, n2])
}

/// Smallest share of class 0 (stable) that makes the fleet stable for all
/// sizes, when the remaining share is split among the other classes in the
/// proportions `rates`. Found by bisection to `1e-6`.
pub fn multi_phase_tau1(trios: &[LinearTrio], rates: &[f64]) -> Result<f64> {
    if trios.len() < 2 || rates.len() + 1 != trios.len() {
        return Err(Error::Precondition(format!(
            "need m >= 2 trios and m - 1 rates, got {} and {}",
            trios.len(),
            rates.len()
        )));
    }
    if trios[0].classify() != StabilityClass::Stable {
        return Err(Error::Precondition(format!(
            "class 0 must be stable, Δ = {}",
            trios[0].discriminant()
        )));
    }
    let total: f64 = rates.iter().sum();
    if !(total > 0.0) || rates.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::Precondition(
            "rates must be non-negative with a positive sum".into(),
        ));
    }
    let counts_at = |x: f64| -> Vec<f64> {
        std::iter::once(x)
            .chain(rates.iter().map(|r| (1.0 - x) * r / total))
            .collect()
    };
    let stable_at = |x: f64| -> Result<bool> {
        Ok(multi_phase_margin(trios, &counts_at(x))?.verdict == MarginVerdict::StableAllN)
    };
    if stable_at(0.0)? {
        return Ok(0.0);
    }
    // at x → 1 the stable class dominates every H_k
    let (mut lo, mut hi) = (0.0, 1.0 - 1e-12);
    if !stable_at(hi)? {
        return Err(Error::NoThreshold(
            "margin stays non-negative as the stable share → 1".into(),
        ));
    }
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if stable_at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Splits `total` vehicles by `rates` (summing to 1) with largest-remainder
/// rounding, so the counts add up to `total` exactly.
pub fn round_counts(rates: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = rates.iter().sum();
    let exact: Vec<f64> = rates.iter().map(|r| r / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut missing = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..rates.len()).collect();
    order.sort_by(|&i, &j| {
        let (fi, fj) = (exact[i] - exact[i].floor(), exact[j] - exact[j].floor());
        fj.total_cmp(&fi).then(i.cmp(&j))
    });
    for &k in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        counts[k] += 1;
        missing -= 1;
    }
    counts
}

/// Ring of `total` vehicles split by `rates`, classes interleaved evenly.
pub fn interleaved_ring(trios: &[LinearTrio], rates: &[f64], total: usize) -> Result<RingSystem> {
    let counts = round_counts(rates, total);
    RingSystem::new(
        interleave_counts(&counts)
            .into_iter()
            .map(|k| trios[k])
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MinUnstable {
    Found {
        size: usize,
        abscissa: f64,
    },
    /// No unstable size up to the cap; this is not a proof of stability.
    NotFoundBelowCap {
        cap: usize,
    },
}

fn abscissa_at(trios: &[LinearTrio], rates: &[f64], n: usize) -> Result<f64> {
    Ok(eigenvalues_on_h(&interleaved_ring(trios, rates, n)?)?.abscissa)
}

/// Smallest fleet size whose evenly interleaved ring (classes split by
/// `rates`) has spectral abscissa above [`UNSTABLE_ABSCISSA`].
///
/// Sizes are probed geometrically (2, 4, 8, …, `n_max`); once an unstable
/// size is hit, every size between it and the last stable probe is checked
/// in parallel and the smallest unstable one wins.
pub fn min_unstable_size(trios: &[LinearTrio], rates: &[f64], n_max: usize) -> Result<MinUnstable> {
    if trios.is_empty() || trios.len() != rates.len() {
        return Err(Error::Precondition("one rate per trio required".into()));
    }
    let sum: f64 = rates.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || rates.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::Precondition(format!(
            "rates must be non-negative and sum to 1, got {sum}"
        )));
    }
    if n_max < 2 {
        return Err(Error::Size(format!(
            "cap {n_max} below the minimum ring size 2"
        )));
    }
    let mut probes = Vec::new();
    let mut n = 2;
    while n < n_max {
        probes.push(n);
        n *= 2;
    }
    probes.push(n_max);

    let mut last_stable = 1;
    for &n in &probes {
        let ab = abscissa_at(trios, rates, n)?;
        if ab > UNSTABLE_ABSCISSA {
            let between: Vec<usize> = (last_stable + 1..n).filter(|&m| m >= 2).collect();
            let hits: Vec<Option<(usize, f64)>> = between
                .par_iter()
                .map(|&m| {
                    abscissa_at(trios, rates, m).map(|a| (a > UNSTABLE_ABSCISSA).then_some((m, a)))
                })
                .collect::<Result<_>>()?;
            let (size, abscissa) = hits.into_iter().flatten().next().unwrap_or((n, ab));
            return Ok(MinUnstable::Found { size, abscissa });
        }
        last_stable = n;
    }
    Ok(MinUnstable::NotFoundBelowCap { cap: n_max })
}
