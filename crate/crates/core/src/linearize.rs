//! Linearization of a driver law around an equilibrium.
//!
//! Near `(h̄, 0, v̄)` the perturbations `y = h − h̄`, `u = v − v̄` of a driver
//! whose leader has velocity perturbation `u⁺` obey
//!
//! ```text
//! ẏ = u⁺ − u,    u̇ = α·y − β·u + γ·u⁺
//! ```
//!
//! with `α = ∂f/∂h`, `β = ∂f/∂ḣ − ∂f/∂v`, `γ = ∂f/∂ḣ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CarFollowingModel, Partials};

/// Band around zero in which a discriminant counts as critical.
pub const CRITICAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearTrio {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilityClass {
    Stable,
    Critical,
    Unstable,
}

impl LinearTrio {
    /// Builds a trio, enforcing `α > 0` and `β > γ > 0`.
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let trio = Self { alpha, beta, gamma };
        let finite = alpha.is_finite() && beta.is_finite() && gamma.is_finite();
        if !(finite && alpha > 0.0 && beta > gamma && gamma > 0.0) {
            return Err(Error::CommonSense { alpha, beta, gamma });
        }
        Ok(trio)
    }

    fn from_partials(p: Partials) -> Result<Self> {
        Self::new(p.dh, p.dhdot - p.dv, p.dhdot)
    }

    /// `Δ = β² − γ² − 2α`.
    pub fn discriminant(&self) -> f64 {
        self.beta * self.beta - self.gamma * self.gamma - 2.0 * self.alpha
    }

    pub fn classify(&self) -> StabilityClass {
        let d = self.discriminant();
        if d > CRITICAL_TOL {
            StabilityClass::Stable
        } else if d < -CRITICAL_TOL {
            StabilityClass::Unstable
        } else {
            StabilityClass::Critical
        }
    }
}

pub fn discriminant(trio: &LinearTrio) -> f64 {
    trio.discriminant()
}

pub fn classify(trio: &LinearTrio) -> StabilityClass {
    trio.classify()
}

fn check_equilibrium(model: &CarFollowingModel, h_bar: f64, v_bar: f64) -> Result<()> {
    let f = model.accel(h_bar, 0.0, v_bar)?;
    if f.abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "(h = {h_bar}, v = {v_bar}) is not an equilibrium: f = {f:e}"
        )));
    }
    Ok(())
}

/// The trio at `(h_bar, 0, v_bar)`; closed form for Bando-FTL.
pub fn linearize(model: &CarFollowingModel, h_bar: f64, v_bar: f64) -> Result<LinearTrio> {
    check_equilibrium(model, h_bar, v_bar)?;
    match model {
        CarFollowingModel::BandoFtl(m) => {
            let ftl = m.b / (h_bar * h_bar);
            LinearTrio::new(m.a * m.pref.slope(h_bar)?, m.a + ftl, ftl)
        }
        CarFollowingModel::Custom(_) => {
            LinearTrio::from_partials(model.partials(h_bar, 0.0, v_bar)?)
        }
    }
}

/// The trio from central differences of `f` with a common step `eps`.
pub fn linearize_fd(
    model: &CarFollowingModel,
    h_bar: f64,
    v_bar: f64,
    eps: f64,
) -> Result<LinearTrio> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!(
            "finite-difference step {eps} must be positive"
        )));
    }
    check_equilibrium(model, h_bar, v_bar)?;
    LinearTrio::from_partials(model.partials_fd(h_bar, 0.0, v_bar, Some(eps)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CustomModel, VelocityPreference};
    use rand::{Rng, SeedableRng};

    fn calibrated() -> VelocityPreference {
        VelocityPreference::with_slope_at(4.5, 2.23, 10.4, 1.27491).unwrap()
    }

    fn at_reference(a: f64, b: f64) -> Result<LinearTrio> {
        let p = calibrated();
        let m = CarFollowingModel::bando_ftl(a, b, p)?;
        linearize(&m, 10.4, p.eval(10.4)?)
    }

    #[test]
    fn closed_form_trio() {
        let t = at_reference(4.0, 20.0).unwrap();
        // α = 4·1.27491, γ = 20/10.4², β = 4 + γ
        assert!((t.alpha - 5.09964).abs() < 1e-4);
        assert!((t.beta - 4.18491).abs() < 1e-4);
        assert!((t.gamma - 0.184911).abs() < 1e-4);
    }

    #[test]
    fn zero_follow_gain_violates_common_sense() {
        assert!(matches!(
            at_reference(4.0, 0.0),
            Err(Error::CommonSense { .. })
        ));
    }

    #[test]
    fn reference_discriminants() {
        let d1 = at_reference(4.0, 20.0).unwrap().discriminant();
        let d2 = at_reference(0.5, 20.0).unwrap().discriminant();
        assert!((d1 - 7.28).abs() < 0.01, "{d1}");
        assert!((d2 + 0.84).abs() < 0.01, "{d2}");
        assert_eq!(
            at_reference(4.0, 20.0).unwrap().classify(),
            StabilityClass::Stable
        );
        assert_eq!(
            at_reference(0.5, 20.0).unwrap().classify(),
            StabilityClass::Unstable
        );
    }

    #[test]
    fn critical_band() {
        // β² = γ² + 2α with β = 3, γ = 1 → α = 4
        let t = LinearTrio {
            alpha: 4.0,
            beta: 3.0,
            gamma: 1.0,
        };
        assert_eq!(t.discriminant(), 0.0);
        assert_eq!(t.classify(), StabilityClass::Critical);
        let near = LinearTrio {
            alpha: 1e-14,
            beta: 0.5,
            gamma: 0.5,
        };
        assert!(near.discriminant().abs() < 1e-12);
    }

    #[test]
    fn not_an_equilibrium() {
        let p = calibrated();
        let m = CarFollowingModel::bando_ftl(4.0, 20.0, p).unwrap();
        assert!(matches!(
            linearize(&m, 10.4, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn analytic_matches_finite_differences() {
        let p = calibrated();
        let v = p.eval(10.4).unwrap();
        for (a, b) in [(4.0, 20.0), (0.5, 20.0), (1.3, 7.0)] {
            let m = CarFollowingModel::bando_ftl(a, b, p).unwrap();
            let an = linearize(&m, 10.4, v).unwrap();
            let fd = linearize_fd(&m, 10.4, v, 1e-4).unwrap();
            for (x, y) in [
                (an.alpha, fd.alpha),
                (an.beta, fd.beta),
                (an.gamma, fd.gamma),
            ] {
                assert!((x - y).abs() <= 1e-5 * x.abs(), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn finite_difference_error_is_second_order() {
        let p = calibrated();
        let v = p.eval(10.4).unwrap();
        let m = CarFollowingModel::bando_ftl(4.0, 20.0, p).unwrap();
        let exact = linearize(&m, 10.4, v).unwrap().alpha;
        let e1 = (linearize_fd(&m, 10.4, v, 0.02).unwrap().alpha - exact).abs();
        let e2 = (linearize_fd(&m, 10.4, v, 0.01).unwrap().alpha - exact).abs();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn fd_step_must_be_positive() {
        let p = calibrated();
        let m = CarFollowingModel::bando_ftl(4.0, 20.0, p).unwrap();
        let v = p.eval(10.4).unwrap();
        assert!(matches!(
            linearize_fd(&m, 10.4, v, 0.0),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            linearize_fd(&m, 10.4, v, -1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn constant_law_rejected() {
        let m = CarFollowingModel::custom(CustomModel::new(|_, _, _| 0.0, (1.0, 2.0), (0.0, 1.0)));
        assert!(matches!(
            linearize_fd(&m, 1.5, 0.5, 1e-4),
            Err(Error::CommonSense { .. })
        ));
        assert!(matches!(
            linearize(&m, 1.5, 0.5),
            Err(Error::CommonSense { .. })
        ));
    }

    #[test]
    fn bando_discriminant_identity() {
        let p = VelocityPreference::new(12.0, 5.0, 3.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = rng.gen_range(0.1..5.0);
            let b = rng.gen_range(0.5..40.0);
            let h = rng.gen_range(6.0..20.0);
            let m = CarFollowingModel::bando_ftl(a, b, p).unwrap();
            let t = linearize(&m, h, p.eval(h).unwrap()).unwrap();
            let expected = a * (a + 2.0 * b / (h * h) - 2.0 * p.slope(h).unwrap());
            assert!((t.discriminant() - expected).abs() <= 1e-10 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn equal_trios_classify_alike() {
        let t = LinearTrio::new(0.7, 1.1, 0.3).unwrap();
        let custom = CarFollowingModel::custom(
            CustomModel::new(
                |h, hd, v| 0.7 * (h - 2.0) + 0.3 * hd - 0.8 * v,
                (0.0, 50.0),
                (0.0, 10.0),
            )
            .with_partials(|_, _, _| Partials {
                dh: 0.7,
                dhdot: 0.3,
                dv: -0.8,
            }),
        );
        let lin = linearize(&custom, 2.0 + 0.8 / 0.7, 1.0).unwrap();
        assert!((lin.alpha - t.alpha).abs() < 1e-15 && (lin.beta - t.beta).abs() < 1e-15);
        assert_eq!(lin.classify(), t.classify());
    }
}
