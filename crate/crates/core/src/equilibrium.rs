//! Fleet compositions and equilibrium flows on a ring road.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::CarFollowingModel;

pub type ClassId = u32;

/// Evenly interleaved sequence of class indices with the given counts.
///
/// Slot `j` goes to the class whose running share lags its target share the
/// most (largest remainder); ties go to the lower index.
pub fn interleave_counts(counts: &[usize]) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    let mut placed = vec![0usize; counts.len()];
    let mut out = Vec::with_capacity(total);
    for j in 0..total {
        let lag = |k: usize| counts[k] as f64 * (j + 1) as f64 / total as f64 - placed[k] as f64;
        let k = (0..counts.len())
            .filter(|&k| placed[k] < counts[k])
            .max_by(|&a, &b| lag(a).total_cmp(&lag(b)).then(b.cmp(&a)))
            .expect("a class with remaining vehicles");
        placed[k] += 1;
        out.push(k);
    }
    out
}

#[derive(Debug, Clone)]
pub struct PopulationSpec {
    pub class_id: ClassId,
    pub model: CarFollowingModel,
    pub count: usize,
}

impl PopulationSpec {
    pub fn new(class_id: ClassId, model: CarFollowingModel, count: usize) -> Self {
        Self {
            class_id,
            model,
            count,
        }
    }
}

/// Vehicle classes and their fixed order on the ring.
///
/// `ordering[j]` is the class of vehicle `j`; vehicle `j + 1` (mod n) is its
/// leader.
#[derive(Debug, Clone)]
pub struct Composition {
    populations: Vec<PopulationSpec>,
    ordering: Vec<ClassId>,
}

impl Composition {
    pub fn new(populations: Vec<PopulationSpec>, ordering: Vec<ClassId>) -> Result<Self> {
        let mut declared = BTreeMap::new();
        for p in &populations {
            if declared.insert(p.class_id, p.count).is_some() {
                return Err(Error::Precondition(format!(
                    "duplicate class id {}",
                    p.class_id
                )));
            }
        }
        let total: usize = declared.values().sum();
        if total == 0 {
            return Err(Error::Precondition("composition has no vehicles".into()));
        }
        let mut seen: BTreeMap<ClassId, usize> = BTreeMap::new();
        for id in &ordering {
            if !declared.contains_key(id) {
                return Err(Error::Precondition(format!(
                    "ordering uses undeclared class {id}"
                )));
            }
            *seen.entry(*id).or_default() += 1;
        }
        for (id, count) in &declared {
            if seen.get(id).copied().unwrap_or(0) != *count {
                return Err(Error::Precondition(format!(
                    "ordering holds {} vehicles of class {id}, declared {count}",
                    seen.get(id).copied().unwrap_or(0)
                )));
            }
        }
        Ok(Self {
            populations,
            ordering,
        })
    }

    /// Classes laid out in contiguous blocks, in declaration order.
    pub fn grouped(populations: Vec<PopulationSpec>) -> Result<Self> {
        let ordering = populations
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.class_id, p.count))
            .collect();
        Self::new(populations, ordering)
    }

    /// Classes spread as evenly as possible around the ring
    /// (see [`interleave_counts`]).
    pub fn interleaved(populations: Vec<PopulationSpec>) -> Result<Self> {
        let counts: Vec<usize> = populations.iter().map(|p| p.count).collect();
        let ordering = interleave_counts(&counts)
            .into_iter()
            .map(|k| populations[k].class_id)
            .collect();
        Self::new(populations, ordering)
    }

    /// A uniformly random ordering, reproducible from `seed`.
    pub fn shuffled(populations: Vec<PopulationSpec>, seed: u64) -> Result<Self> {
        let grouped = Self::grouped(populations)?;
        let mut ordering = grouped.ordering;
        ordering.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self::new(grouped.populations, ordering)
    }

    pub fn populations(&self) -> &[PopulationSpec] {
        &self.populations
    }

    pub fn ordering(&self) -> &[ClassId] {
        &self.ordering
    }

    pub fn len(&self) -> usize {
        self.ordering.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordering.is_empty()
    }

    pub fn population(&self, id: ClassId) -> Option<&PopulationSpec> {
        self.populations.iter().find(|p| p.class_id == id)
    }

    /// The same populations with a different ordering.
    pub fn reordered(&self, ordering: Vec<ClassId>) -> Result<Self> {
        Self::new(self.populations.clone(), ordering)
    }

    /// Driver law of every vehicle, in ring order.
    pub fn vehicle_models(&self) -> Vec<&CarFollowingModel> {
        self.ordering
            .iter()
            .map(|id| &self.population(*id).expect("validated ordering").model)
            .collect()
    }

    fn active(&self) -> impl Iterator<Item = &PopulationSpec> {
        self.populations.iter().filter(|p| p.count > 0)
    }

    /// Speeds for which every present class has an equilibrium headway.
    pub fn speed_range(&self) -> (f64, f64) {
        self.active()
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), p| {
                let (a, b) = p.model.speed_range();
                (lo.max(a), hi.min(b))
            })
    }
}

/// Common speed `v_bar`, per-class headways and the ring length they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumFlow {
    pub v_bar: f64,
    pub h_bar: BTreeMap<ClassId, f64>,
    pub length: f64,
}

impl EquilibriumFlow {
    /// Equilibrium headway of every vehicle, in ring order.
    pub fn headways(&self, comp: &Composition) -> Vec<f64> {
        comp.ordering().iter().map(|id| self.h_bar[id]).collect()
    }
}

pub fn equilibrium_from_velocity(comp: &Composition, v_bar: f64) -> Result<EquilibriumFlow> {
    if !v_bar.is_finite() {
        return Err(Error::NonFinite("v_bar"));
    }
    let mut h_bar = BTreeMap::new();
    for p in comp.active() {
        let h = p.model.preferred_headway(v_bar).map_err(|e| match e {
            Error::NoEquilibrium(msg) => {
                Error::NoEquilibrium(format!("class {}: {msg}", p.class_id))
            }
            other => other,
        })?;
        if h <= 0.0 {
            return Err(Error::NoEquilibrium(format!(
                "class {} has non-positive headway {h} at {v_bar} m/s",
                p.class_id
            )));
        }
        h_bar.insert(p.class_id, h);
    }
    let length = comp.ordering().iter().map(|id| h_bar[id]).sum();
    Ok(EquilibriumFlow {
        v_bar,
        h_bar,
        length,
    })
}

fn ring_length(comp: &Composition, v: f64) -> Result<f64> {
    let mut total = 0.0;
    for p in comp.active() {
        total += p.count as f64 * p.model.preferred_headway(v)?;
    }
    Ok(total)
}

/// Interval `(inf, sup)` of ring lengths that admit an equilibrium flow.
pub fn feasible_lengths(comp: &Composition) -> Result<(f64, f64)> {
    let (vlo, vhi) = comp.speed_range();
    if !(vlo < vhi) {
        return Err(Error::NoEquilibrium(format!(
            "classes share no equilibrium speed (range [{vlo}, {vhi}))"
        )));
    }
    let top = vhi * (1.0 - 1e-12);
    Ok((ring_length(comp, vlo)?, ring_length(comp, top)?))
}

/// Solves `Σ_j g_{a_j}(v_bar) = length` for `v_bar` by bisection.
pub fn equilibrium_from_length(comp: &Composition, length: f64) -> Result<EquilibriumFlow> {
    if !length.is_finite() {
        return Err(Error::NonFinite("length"));
    }
    let (lmin, lmax) = feasible_lengths(comp)?;
    if !(length > lmin && length < lmax) {
        return Err(Error::NoEquilibrium(format!(
            "ring length {length} m outside the feasible interval ({lmin}, {lmax})"
        )));
    }
    let (vlo, vhi) = comp.speed_range();
    let (mut lo, mut hi) = (vlo, vhi * (1.0 - 1e-12));
    let mut v = 0.5 * (lo + hi);
    for _ in 0..200 {
        v = 0.5 * (lo + hi);
        let gap = ring_length(comp, v)? - length;
        if gap.abs() <= 1e-8 || v <= lo || v >= hi {
            break;
        }
        if gap < 0.0 {
            lo = v;
        } else {
            hi = v;
        }
    }
    equilibrium_from_velocity(comp, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VelocityPreference;

    fn pref() -> VelocityPreference {
        VelocityPreference::new(9.72, 4.5, 2.23).unwrap()
    }

    fn two_class(n1: usize, n2: usize) -> Composition {
        Composition::interleaved(vec![
            PopulationSpec::new(
                1,
                CarFollowingModel::bando_ftl(4.0, 20.0, pref()).unwrap(),
                n1,
            ),
            PopulationSpec::new(
                2,
                CarFollowingModel::bando_ftl(0.5, 20.0, pref()).unwrap(),
                n2,
            ),
        ])
        .unwrap()
    }

    #[test]
    fn ordering_must_match_counts() {
        let m = CarFollowingModel::bando_ftl(1.0, 1.0, pref()).unwrap();
        let pops = vec![
            PopulationSpec::new(1, m.clone(), 2),
            PopulationSpec::new(2, m, 1),
        ];
        assert!(Composition::new(pops.clone(), vec![1, 2, 1]).is_ok());
        assert!(Composition::new(pops.clone(), vec![1, 2, 2]).is_err());
        assert!(Composition::new(pops.clone(), vec![1, 2]).is_err());
        assert!(Composition::new(pops, vec![1, 3, 1]).is_err());
    }

    #[test]
    fn interleaving_spreads_classes() {
        let c = two_class(3, 1);
        assert_eq!(c.ordering(), &[1, 1, 2, 1]);
        let c = two_class(5, 5);
        assert_eq!(c.ordering(), &[1, 2, 1, 2, 1, 2, 1, 2, 1, 2]);
    }

    #[test]
    fn unified_length_is_n_times_headway() {
        let c = two_class(7, 0);
        let eq = equilibrium_from_velocity(&c, 5.0).unwrap();
        let g = pref().inverse(5.0).unwrap();
        assert!((eq.length - 7.0 * g).abs() < 1e-12);
    }

    #[test]
    fn common_preference_gives_common_headway() {
        let eq = equilibrium_from_velocity(&two_class(3, 4), 6.0).unwrap();
        assert_eq!(eq.h_bar[&1], eq.h_bar[&2]);
    }

    #[test]
    fn length_round_trip() {
        let c = two_class(9, 4);
        for v in [0.5, 3.0, 6.44, 9.0] {
            let eq = equilibrium_from_velocity(&c, v).unwrap();
            let back = equilibrium_from_length(&c, eq.length).unwrap();
            assert!((back.v_bar - v).abs() < 1e-8, "v={v} got {}", back.v_bar);
        }
    }

    #[test]
    fn infeasible_length_rejected() {
        let c = two_class(5, 5);
        assert!(matches!(
            equilibrium_from_length(&c, 10.0 * 4.5 - 1.0),
            Err(Error::NoEquilibrium(_))
        ));
        assert!(matches!(
            equilibrium_from_length(&c, 1e6),
            Err(Error::NoEquilibrium(_))
        ));
        assert!(matches!(
            equilibrium_from_velocity(&c, 10.0),
            Err(Error::NoEquilibrium(_))
        ));
    }

    #[test]
    fn length_is_increasing_in_speed() {
        let c = two_class(6, 3);
        let mut prev = 0.0;
        for i in 0..50 {
            let v = 9.72 * 0.98 * i as f64 / 49.0;
            let l = equilibrium_from_velocity(&c, v).unwrap().length;
            if i > 0 {
                assert!(l > prev);
            }
            prev = l;
        }
    }

    #[test]
    fn permutation_keeps_length() {
        let c = two_class(6, 3);
        let perm = c.reordered(vec![2, 2, 2, 1, 1, 1, 1, 1, 1]).unwrap();
        let a = equilibrium_from_velocity(&c, 4.0).unwrap().length;
        let b = equilibrium_from_velocity(&perm, 4.0).unwrap().length;
        assert!((a - b).abs() <= 1e-12 * a);
    }
}
