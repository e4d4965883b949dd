//! Nonlinear ring-road simulation.
//!
//! The state is kept in headway/velocity coordinates: vehicle `j` has
//! headway `h_j` to its leader `j + 1` (mod n) and speed `v_j`, with
//!
//! ```text
//! ḣ_j = v_{j+1} − v_j,    v̇_j = f_j(h_j, v_{j+1} − v_j, v_j)
//! ```
//!
//! so `Σ h_j` (the ring length) is a linear invariant that RK4 preserves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{Composition, EquilibriumFlow};
use crate::error::{Error, Result};
use crate::model::CarFollowingModel;

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub headways: Vec<f64>,
    pub velocities: Vec<f64>,
}

impl SimState {
    pub fn len(&self) -> usize {
        self.headways.len()
    }

    pub fn is_empty(&self) -> bool {
        self.headways.is_empty()
    }

    /// Population variance of the velocities.
    pub fn speed_variance(&self) -> f64 {
        population_variance(&self.velocities)
    }

    /// Vehicle positions along the ring, vehicle 0 at 0.
    pub fn positions(&self, length: f64) -> Vec<f64> {
        let mut x = 0.0_f64;
        let mut out = Vec::with_capacity(self.len());
        for h in &self.headways {
            out.push(x.rem_euclid(length));
            x += h;
        }
        out
    }
}

pub fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationKind {
    /// Adds the amplitude to the speed of vehicle 0.
    SingleVehicleKick,
    /// Speeds get `amplitude·sin(2πkj/n)`.
    SinusoidalMode { k: usize },
    /// Zero-mean uniform noise in `[−amplitude, amplitude]` on every speed,
    /// reproducible from the seed. Headways start at equilibrium.
    SeededRandomZeroSum { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub amplitude: f64,
    pub kind: PerturbationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub perturbation: Perturbation,
    #[serde(default)]
    pub keep_snapshots: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let p = &self.perturbation;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Precondition(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(Error::Precondition(format!(
                "t_end {} must be >= dt",
                self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Precondition(
                "record_every must be at least 1".into(),
            ));
        }
        if !(p.amplitude >= 0.0 && p.amplitude.is_finite()) {
            return Err(Error::Precondition(format!(
                "amplitude {} must be >= 0",
                p.amplitude
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub times: Vec<f64>,
    pub speed_variance: Vec<f64>,
    pub min_headway: Vec<f64>,
    pub max_headway: Vec<f64>,
    /// `Σ h_j` per sample, for conservation checks.
    pub headway_sum: Vec<f64>,
    pub snapshots: Option<Vec<SimState>>,
}

impl SimTrace {
    fn record(&mut self, s: &SimState, keep: bool) {
        self.times.push(s.t);
        self.speed_variance.push(s.speed_variance());
        self.min_headway
            .push(s.headways.iter().copied().fold(f64::INFINITY, f64::min));
        self.max_headway
            .push(s.headways.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        self.headway_sum.push(s.headways.iter().sum());
        if keep {
            self.snapshots.get_or_insert_with(Vec::new).push(s.clone());
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Equilibrium state plus a speed perturbation. Headways are left at
/// equilibrium, so `Σ h_j = L` holds from the start.
pub fn initial_state(
    eq: &EquilibriumFlow,
    comp: &Composition,
    pert: &Perturbation,
) -> Result<SimState> {
    let n = comp.len();
    let headways = eq.headways(comp);
    let mut velocities = vec![eq.v_bar; n];
    let amp = pert.amplitude;
    match pert.kind {
        PerturbationKind::SingleVehicleKick => velocities[0] += amp,
        PerturbationKind::SinusoidalMode { k } => {
            for (j, v) in velocities.iter_mut().enumerate() {
                *v += amp * (std::f64::consts::TAU * (k * j) as f64 / n as f64).sin();
            }
        }
        PerturbationKind::SeededRandomZeroSum { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dv: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mean = dv.iter().sum::<f64>() / n as f64;
            for (v, d) in velocities.iter_mut().zip(&dv) {
                *v += amp * (d - mean);
            }
        }
    }
    if let Some((j, h)) = headways.iter().enumerate().find(|(_, h)| **h <= 0.0) {
        return Err(Error::Amplitude(format!(
            "amplitude {amp} leaves vehicle {j} with headway {h} m"
        )));
    }
    if let Some((j, v)) = velocities.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::Amplitude(format!(
            "amplitude {amp} leaves vehicle {j} with negative speed {v} m/s"
        )));
    }
    Ok(SimState {
        t: 0.0,
        headways,
        velocities,
    })
}

/// RK4 integrator over a fixed ordering of driver laws.
pub struct Integrator<'a> {
    models: Vec<&'a CarFollowingModel>,
    k: [(Vec<f64>, Vec<f64>); 4],
    scratch: (Vec<f64>, Vec<f64>),
}

impl<'a> Integrator<'a> {
    pub fn new(comp: &'a Composition) -> Self {
        let n = comp.len();
        let z = || (vec![0.0; n], vec![0.0; n]);
        Self {
            models: comp.vehicle_models(),
            k: [z(), z(), z(), z()],
            scratch: z(),
        }
    }

    fn rhs(
        models: &[&CarFollowingModel],
        t: f64,
        h: &[f64],
        v: &[f64],
        dh: &mut [f64],
        dv: &mut [f64],
    ) -> Result<()> {
        let n = h.len();
        for j in 0..n {
            if h[j] <= 0.0 {
                return Err(Error::CollisionAt {
                    time: t,
                    index: j,
                    headway: h[j],
                });
            }
            let rel = v[(j + 1) % n] - v[j];
            dh[j] = rel;
            dv[j] = models[j].accel_unchecked(h[j], rel, v[j]);
        }
        Ok(())
    }

    /// Advances `state` by one classical RK4 step.
    pub fn step(&mut self, state: &mut SimState, dt: f64) -> Result<()> {
        let n = state.len();
        let (h0, v0) = (&state.headways, &state.velocities);
        let t = state.t;
        let weights = [0.0, 0.5, 0.5, 1.0];
        for (stage, &weight) in weights.iter().enumerate() {
            let (sh, sv) = &mut self.scratch;
            if stage == 0 {
                sh.copy_from_slice(h0);
                sv.copy_from_slice(v0);
            } else {
                let (ph, pv) = &self.k[stage - 1];
                let w = weight * dt;
                for j in 0..n {
                    sh[j] = h0[j] + w * ph[j];
                    sv[j] = v0[j] + w * pv[j];
                }
            }
            let (kh, kv) = &mut self.k[stage];
            Self::rhs(&self.models, t + weight * dt, sh, sv, kh, kv)?;
        }
        let c = dt / 6.0;
        for j in 0..n {
            state.headways[j] +=
                c * (self.k[0].0[j] + 2.0 * self.k[1].0[j] + 2.0 * self.k[2].0[j] + self.k[3].0[j]);
            state.velocities[j] +=
                c * (self.k[0].1[j] + 2.0 * self.k[1].1[j] + 2.0 * self.k[2].1[j] + self.k[3].1[j]);
        }
        state.t += dt;
        if let Some((j, h)) = state.headways.iter().enumerate().find(|(_, h)| **h <= 0.0) {
            return Err(Error::CollisionAt {
                time: state.t,
                index: j,
                headway: *h,
            });
        }
        Ok(())
    }
}

/// One RK4 step of the ring described by `comp`.
pub fn step(state: &SimState, comp: &Composition, dt: f64) -> Result<SimState> {
    if state.len() != comp.len() {
        return Err(Error::Size(format!(
            "state has {} vehicles, composition {}",
            state.len(),
            comp.len()
        )));
    }
    let mut next = state.clone();
    Integrator::new(comp).step(&mut next, dt)?;
    Ok(next)
}

/// Integrates from the perturbed equilibrium to `cfg.t_end`, sampling every
/// `cfg.record_every` steps (plus the final state).
pub fn simulate(comp: &Composition, eq: &EquilibriumFlow, cfg: &SimConfig) -> Result<SimTrace> {
    cfg.validate()?;
    let mut state = initial_state(eq, comp, &cfg.perturbation)?;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut integrator = Integrator::new(comp);
    let mut trace = SimTrace::default();
    trace.record(&state, cfg.keep_snapshots);
    for i in 1..=steps {
        // time from the step count avoids drift from repeated addition
        integrator.step(&mut state, cfg.dt)?;
        state.t = i as f64 * cfg.dt;
        if i % cfg.record_every == 0 || i == steps {
            trace.record(&state, cfg.keep_snapshots);
        }
    }
    Ok(trace)
}

/// Least-squares slope of `ln(speed_variance)` against time over samples with
/// `t_a ≤ t ≤ t_b`. Half of it estimates the dominant modal growth rate.
pub fn growth_rate(trace: &SimTrace, window: (f64, f64)) -> Result<f64> {
    let (ta, tb) = window;
    let pts: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&trace.speed_variance)
        .filter(|(t, _)| **t >= ta && **t <= tb)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} samples in [{ta}, {tb}], need at least 4",
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Domain(format!(
            "speed variance {v} at t = {t} is not positive"
        )));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in &pts {
        sxy += (t - mt) * (v.ln() - my);
        sxx += (t - mt) * (t - mt);
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{equilibrium_from_velocity, PopulationSpec};
    use crate::model::VelocityPreference;

    fn pref() -> VelocityPreference {
        VelocityPreference::with_slope_at(4.5, 2.23, 10.4, 1.27491).unwrap()
    }

    fn setup(n1: usize, n2: usize) -> (Composition, EquilibriumFlow) {
        let p = pref();
        let comp = Composition::interleaved(vec![
            PopulationSpec::new(1, CarFollowingModel::bando_ftl(4.0, 20.0, p).unwrap(), n1),
            PopulationSpec::new(2, CarFollowingModel::bando_ftl(0.5, 20.0, p).unwrap(), n2),
        ])
        .unwrap();
        let eq = equilibrium_from_velocity(&comp, p.eval(10.4).unwrap()).unwrap();
        (comp, eq)
    }

    fn cfg(amplitude: f64, kind: PerturbationKind, t_end: f64) -> SimConfig {
        SimConfig {
            dt: 0.05,
            t_end,
            record_every: 10,
            perturbation: Perturbation { amplitude, kind },
            keep_snapshots: false,
        }
    }

    #[test]
    fn unperturbed_stays_at_equilibrium() {
        let (comp, eq) = setup(8, 2);
        let trace = simulate(
            &comp,
            &eq,
            &cfg(0.0, PerturbationKind::SingleVehicleKick, 20.0),
        )
        .unwrap();
        assert!(trace.speed_variance.iter().all(|v| *v <= 1e-20));
    }

    #[test]
    fn equilibrium_step_drift() {
        let (comp, eq) = setup(8, 2);
        let s0 = initial_state(
            &eq,
            &comp,
            &Perturbation {
                amplitude: 0.0,
                kind: PerturbationKind::SingleVehicleKick,
            },
        )
        .unwrap();
        let s1 = step(&s0, &comp, 0.05).unwrap();
        for (a, b) in s0.velocities.iter().zip(&s1.velocities) {
            assert!((a - b).abs() <= 1e-14 * eq.v_bar);
        }
    }

    #[test]
    fn kick_touches_one_vehicle() {
        let (comp, eq) = setup(5, 5);
        let s = initial_state(
            &eq,
            &comp,
            &Perturbation {
                amplitude: 0.1,
                kind: PerturbationKind::SingleVehicleKick,
            },
        )
        .unwrap();
        assert_eq!(s.velocities[0], eq.v_bar + 0.1);
        assert!(s.velocities[1..].iter().all(|v| *v == eq.v_bar));
    }

    #[test]
    fn random_perturbation_is_zero_sum_and_seeded() {
        let (comp, eq) = setup(40, 10);
        let kind = PerturbationKind::SeededRandomZeroSum { seed: 42 };
        let p = Perturbation {
            amplitude: 0.5,
            kind,
        };
        let a = initial_state(&eq, &comp, &p).unwrap();
        let b = initial_state(&eq, &comp, &p).unwrap();
        assert_eq!(a, b);
        let dev: f64 = a
            .headways
            .iter()
            .zip(eq.headways(&comp))
            .map(|(h, hb)| h - hb)
            .sum();
        assert!(dev.abs() <= 1e-14 * eq.length);
        let dv: f64 = a.velocities.iter().map(|v| v - eq.v_bar).sum();
        assert!(dv.abs() <= 1e-12);
        assert!(a.velocities.iter().any(|v| (v - eq.v_bar).abs() > 0.1));
    }

    #[test]
    fn oversized_perturbation_rejected() {
        let (comp, eq) = setup(5, 5);
        let p = Perturbation {
            amplitude: 30.0,
            kind: PerturbationKind::SinusoidalMode { k: 1 },
        };
        assert!(matches!(
            initial_state(&eq, &comp, &p),
            Err(Error::Amplitude(_))
        ));
    }

    #[test]
    fn step_conserves_length() {
        let (comp, eq) = setup(30, 10);
        let p = Perturbation {
            amplitude: 0.5,
            kind: PerturbationKind::SeededRandomZeroSum { seed: 3 },
        };
        let mut s = initial_state(&eq, &comp, &p).unwrap();
        let l0: f64 = s.headways.iter().sum();
        for _ in 0..100 {
            s = step(&s, &comp, 0.05).unwrap();
            let l: f64 = s.headways.iter().sum();
            assert!((l - l0).abs() <= 1e-12 * eq.length);
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        // one step with dt against two steps with dt/2 against a fine reference
        let (comp, eq) = setup(6, 4);
        let p = Perturbation {
            amplitude: 1.0,
            kind: PerturbationKind::SinusoidalMode { k: 1 },
        };
        let s0 = initial_state(&eq, &comp, &p).unwrap();
        let mut reference = s0.clone();
        let mut integ = Integrator::new(&comp);
        for _ in 0..1024 {
            integ.step(&mut reference, 0.4 / 1024.0).unwrap();
        }
        let mut err = |dt: f64| {
            let mut s = s0.clone();
            let steps = (0.4 / dt).round() as usize;
            for _ in 0..steps {
                integ.step(&mut s, dt).unwrap();
            }
            s.velocities
                .iter()
                .zip(&reference.velocities)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.1), err(0.05));
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn collision_is_reported() {
        let p = pref();
        let comp = Composition::grouped(vec![PopulationSpec::new(
            1,
            CarFollowingModel::bando_ftl(0.5, 0.5, p).unwrap(),
            4,
        )])
        .unwrap();
        let eq = equilibrium_from_velocity(&comp, p.eval(6.0).unwrap()).unwrap();
        let mut c = cfg(6.0, PerturbationKind::SingleVehicleKick, 30.0);
        c.perturbation.amplitude = -0.0;
        let mut state = initial_state(&eq, &comp, &c.perturbation).unwrap();
        state.velocities[0] += 8.0;
        let mut integ = Integrator::new(&comp);
        let mut hit = None;
        for _ in 0..2000 {
            if let Err(e) = integ.step(&mut state, 0.05) {
                hit = Some(e);
                break;
            }
        }
        assert!(
            matches!(hit, Some(Error::CollisionAt { index: 0, .. })),
            "{hit:?}"
        );
    }

    #[test]
    fn growth_rate_of_exponential() {
        let sigma = 0.013;
        let times: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let trace = SimTrace {
            speed_variance: times.iter().map(|t| (2.0 * sigma * t).exp()).collect(),
            times,
            ..Default::default()
        };
        assert!((growth_rate(&trace, (0.0, 49.0)).unwrap() - 2.0 * sigma).abs() < 1e-10);
        let flat = SimTrace {
            times: trace.times.clone(),
            speed_variance: vec![0.3; 50],
            ..Default::default()
        };
        assert_eq!(growth_rate(&flat, (0.0, 49.0)).unwrap(), 0.0);
        assert!(matches!(
            growth_rate(&trace, (0.0, 2.0)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn invalid_config() {
        let (comp, eq) = setup(5, 5);
        let mut c = cfg(0.1, PerturbationKind::SingleVehicleKick, 1.0);
        c.dt = 0.0;
        assert!(simulate(&comp, &eq, &c).is_err());
        let mut c = cfg(0.1, PerturbationKind::SingleVehicleKick, 0.01);
        c.record_every = 1;
        assert!(simulate(&comp, &eq, &c).is_err());
    }
}
