//! Car-following laws `f(h, ḣ, v)`.
//!
//! A driver with headway `h` to its leader, relative speed `ḣ = v_leader - v`
//! and own speed `v` accelerates at `f(h, ḣ, v)`. The concrete law shipped here
//! is the Bando / follow-the-leader combination
//!
//! ```text
//! f(h, ḣ, v) = a·(V(h) − v) + b·ḣ/h²
//! ```
//!
//! with the hyperbolic-tangent velocity preference [`VelocityPreference`].
//! Arbitrary laws can be plugged in through [`CustomModel`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize;

/// Optimal-velocity function
/// `V(h) = v_max·(tanh((h − l_v)/d0 − 2) + tanh 2)/(1 + tanh 2)`, clamped to 0
/// below the vehicle length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityPreference {
    pub v_max: f64,
    pub l_v: f64,
    pub d0: f64,
}

fn tanh2() -> f64 {
    2.0_f64.tanh()
}

fn check_finite(x: f64, what: &'static str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(what))
    }
}

impl VelocityPreference {
    pub fn new(v_max: f64, l_v: f64, d0: f64) -> Result<Self> {
        let pref = Self { v_max, l_v, d0 };
        pref.validate()?;
        Ok(pref)
    }

    pub fn validate(&self) -> Result<()> {
        check_finite(self.v_max, "v_max")?;
        check_finite(self.l_v, "l_v")?;
        check_finite(self.d0, "d0")?;
        if self.v_max <= 0.0 || self.d0 <= 0.0 || self.l_v < 0.0 {
            return Err(Error::Precondition(format!(
                "velocity preference needs v_max > 0, d0 > 0, l_v >= 0 (got {self:?})"
            )));
        }
        Ok(())
    }

    /// Picks `v_max` so that `V′(headway) = slope` for the given `l_v` and `d0`.
    ///
    /// The slope of `V` is linear in `v_max`, so this is a closed-form solve.
    pub fn with_slope_at(l_v: f64, d0: f64, headway: f64, slope: f64) -> Result<Self> {
        let unit = Self::new(1.0, l_v, d0)?;
        let unit_slope = unit.slope(headway)?;
        if unit_slope <= 0.0 || !(slope > 0.0) {
            return Err(Error::Precondition(format!(
                "cannot calibrate slope {slope} at headway {headway} (l_v = {l_v})"
            )));
        }
        Self::new(slope / unit_slope, l_v, d0)
    }

    /// `V(h)`.
    pub fn eval(&self, h: f64) -> Result<f64> {
        check_finite(h, "headway")?;
        Ok(self.eval_unchecked(h))
    }

    pub(crate) fn eval_unchecked(&self, h: f64) -> f64 {
        if h < self.l_v {
            return 0.0;
        }
        let t2 = tanh2();
        let v = self.v_max * (((h - self.l_v) / self.d0 - 2.0).tanh() + t2) / (1.0 + t2);
        v.max(0.0)
    }

    /// `V′(h)`, zero in the clamped region `h < l_v`.
    pub fn slope(&self, h: f64) -> Result<f64> {
        check_finite(h, "headway")?;
        Ok(self.slope_unchecked(h))
    }

    pub(crate) fn slope_unchecked(&self, h: f64) -> f64 {
        if h < self.l_v {
            return 0.0;
        }
        let c = ((h - self.l_v) / self.d0 - 2.0).cosh();
        self.v_max / (self.d0 * (1.0 + tanh2()) * c * c)
    }

    /// Upper end of the headway bracket used when inverting `V`.
    pub fn bracket_high(&self) -> f64 {
        self.l_v + 50.0 * self.d0
    }

    /// `V⁻¹(v)` by bisection on `[l_v, l_v + 50·d0]`, run to full double precision.
    pub fn inverse(&self, v: f64) -> Result<f64> {
        check_finite(v, "speed")?;
        if v < 0.0 || v >= self.v_max {
            return Err(Error::NoEquilibrium(format!(
                "speed {v} m/s outside [0, v_max = {}) of the velocity preference",
                self.v_max
            )));
        }
        if v == 0.0 {
            return Ok(self.l_v);
        }
        let hi = self.bracket_high();
        if self.eval_unchecked(hi) <= v {
            return Err(Error::NoEquilibrium(format!(
                "speed {v} m/s too close to v_max = {}",
                self.v_max
            )));
        }
        Ok(optimize::bisect(
            |h| self.eval_unchecked(h) - v,
            self.l_v,
            hi,
            0.0,
        ))
    }
}

/// Partial derivatives of a driver law at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partials {
    pub dh: f64,
    pub dhdot: f64,
    pub dv: f64,
}

pub type LawFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;
pub type PartialsFn = dyn Fn(f64, f64, f64) -> Partials + Send + Sync;

/// A user-supplied driver law.
///
/// Equilibrium headways are found by bisection of `f(·, 0, v)` on
/// `headway_bracket`; admissible equilibrium speeds are `speed_range`.
/// Without analytic partials, central differences with step
/// `max(1e-6, 1e-6·|x|)` are used.
#[derive(Clone)]
pub struct CustomModel {
    pub law: Arc<LawFn>,
    pub partials: Option<Arc<PartialsFn>>,
    pub headway_bracket: (f64, f64),
    pub speed_range: (f64, f64),
}

impl CustomModel {
    pub fn new<F>(law: F, headway_bracket: (f64, f64), speed_range: (f64, f64)) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            law: Arc::new(law),
            partials: None,
            headway_bracket,
            speed_range,
        }
    }

    pub fn with_partials<P>(mut self, partials: P) -> Self
    where
        P: Fn(f64, f64, f64) -> Partials + Send + Sync + 'static,
    {
        self.partials = Some(Arc::new(partials));
        self
    }
}

impl fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomModel")
            .field("analytic_partials", &self.partials.is_some())
            .field("headway_bracket", &self.headway_bracket)
            .field("speed_range", &self.speed_range)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandoFtl {
    /// Sensitivity to the velocity preference (1/s).
    pub a: f64,
    /// Follow-the-leader gain (m²/s).
    pub b: f64,
    pub pref: VelocityPreference,
}

#[derive(Debug, Clone)]
pub enum CarFollowingModel {
    BandoFtl(BandoFtl),
    Custom(CustomModel),
}

/// Central-difference step for a coordinate of magnitude `x`.
pub(crate) fn fd_step(x: f64) -> f64 {
    (1e-6 * x.abs()).max(1e-6)
}

impl CarFollowingModel {
    /// Bando-FTL law; `a > 0` and `b >= 0` are required here, `b > 0` is
    /// enforced at linearization.
    pub fn bando_ftl(a: f64, b: f64, pref: VelocityPreference) -> Result<Self> {
        check_finite(a, "a")?;
        check_finite(b, "b")?;
        pref.validate()?;
        if a <= 0.0 || b < 0.0 {
            return Err(Error::Precondition(format!(
                "Bando-FTL needs a > 0 and b >= 0 (got a = {a}, b = {b})"
            )));
        }
        Ok(Self::BandoFtl(BandoFtl { a, b, pref }))
    }

    pub fn custom(model: CustomModel) -> Self {
        Self::Custom(model)
    }

    /// `f(h, ḣ, v)`.
    pub fn accel(&self, h: f64, hdot: f64, v: f64) -> Result<f64> {
        check_finite(h, "headway")?;
        check_finite(hdot, "relative speed")?;
        check_finite(v, "speed")?;
        if h <= 0.0 {
            return Err(Error::Collision { headway: h });
        }
        Ok(self.accel_unchecked(h, hdot, v))
    }

    #[inline]
    pub(crate) fn accel_unchecked(&self, h: f64, hdot: f64, v: f64) -> f64 {
        match self {
            Self::BandoFtl(m) => m.a * (m.pref.eval_unchecked(h) - v) + m.b * hdot / (h * h),
            Self::Custom(m) => (m.law)(h, hdot, v),
        }
    }

    /// Partial derivatives of `f` at `(h, ḣ, v)`.
    pub fn partials(&self, h: f64, hdot: f64, v: f64) -> Result<Partials> {
        check_finite(h, "headway")?;
        if h <= 0.0 {
            return Err(Error::Collision { headway: h });
        }
        Ok(match self {
            Self::BandoFtl(m) => Partials {
                dh: m.a * m.pref.slope_unchecked(h) - 2.0 * m.b * hdot / (h * h * h),
                dhdot: m.b / (h * h),
                dv: -m.a,
            },
            Self::Custom(m) => match &m.partials {
                Some(p) => p(h, hdot, v),
                None => self.partials_fd(h, hdot, v, None),
            },
        })
    }

    /// Central-difference partials; `eps = None` uses a per-coordinate step.
    pub(crate) fn partials_fd(&self, h: f64, hdot: f64, v: f64, eps: Option<f64>) -> Partials {
        let f = |h, hd, v| self.accel_unchecked(h, hd, v);
        let (sh, sd, sv) = match eps {
            Some(e) => (e, e, e),
            None => (fd_step(h), fd_step(hdot), fd_step(v)),
        };
        Partials {
            dh: (f(h + sh, hdot, v) - f(h - sh, hdot, v)) / (2.0 * sh),
            dhdot: (f(h, hdot + sd, v) - f(h, hdot - sd, v)) / (2.0 * sd),
            dv: (f(h, hdot, v + sv) - f(h, hdot, v - sv)) / (2.0 * sv),
        }
    }

    /// Range `[lo, hi)` of speeds admitting an equilibrium headway.
    pub fn speed_range(&self) -> (f64, f64) {
        match self {
            Self::BandoFtl(m) => (0.0, m.pref.v_max),
            Self::Custom(m) => m.speed_range,
        }
    }

    /// Infimum of the equilibrium headways.
    pub fn min_headway(&self) -> f64 {
        match self {
            Self::BandoFtl(m) => m.pref.l_v,
            Self::Custom(m) => m.headway_bracket.0,
        }
    }

    /// The velocity-preferred headway `g(v)`: the unique `h` with `f(h, 0, v) = 0`.
    pub fn preferred_headway(&self, v: f64) -> Result<f64> {
        check_finite(v, "speed")?;
        match self {
            Self::BandoFtl(m) => m.pref.inverse(v),
            Self::Custom(m) => {
                let (vlo, vhi) = m.speed_range;
                if v < vlo || v >= vhi {
                    return Err(Error::NoEquilibrium(format!(
                        "speed {v} m/s outside [{vlo}, {vhi})"
                    )));
                }
                custom_headway(m, v)
            }
        }
    }
}

fn custom_headway(m: &CustomModel, v: f64) -> Result<f64> {
    let (lo, hi) = m.headway_bracket;
    let f = |h: f64| (m.law)(h, 0.0, v);
    const SAMPLES: usize = 256;
    let mut crossings = 0;
    let mut prev = f(lo);
    for i in 1..=SAMPLES {
        let h = lo + (hi - lo) * i as f64 / SAMPLES as f64;
        let cur = f(h);
        if (prev < 0.0) != (cur < 0.0) {
            crossings += 1;
        }
        prev = cur;
    }
    let (flo, fhi) = (f(lo), f(hi));
    if crossings > 1 || (flo > 0.0 && fhi < 0.0) {
        return Err(Error::Ambiguous(format!(
            "f(·, 0, {v}) is not increasing in h on [{lo}, {hi}]"
        )));
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::NoEquilibrium(format!(
            "f(·, 0, {v}) has no root in [{lo}, {hi}]"
        )));
    }
    Ok(optimize::bisect(f, lo, hi, 0.0))
}
