//! JSON experiment configuration.

use std::collections::BTreeSet;

use serde::Deserialize;

use crate::equilibrium::{ClassId, Composition, PopulationSpec};
use crate::error::{Error, Result};
use crate::model::{CarFollowingModel, VelocityPreference};
use crate::sim::SimConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub classes: Vec<ClassConfig>,
    #[serde(default)]
    pub ordering: OrderingConfig,
    pub equilibrium: EquilibriumSpec,
    #[serde(default)]
    pub simulation: Option<SimConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    /// Emit SVG plots next to the CSV files.
    #[serde(default = "default_true")]
    pub svg: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    pub class_id: ClassId,
    pub model: ModelConfig,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    BandoFtl {
        a: f64,
        b: f64,
        velocity_preference: PreferenceConfig,
    },
}

/// `v_max` given directly, or solved from a target slope `V′(headway)`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreferenceConfig {
    pub l_v: f64,
    pub d0: f64,
    #[serde(default)]
    pub v_max: Option<f64>,
    #[serde(default)]
    pub calibrate: Option<Calibration>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub headway: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrderingConfig {
    Grouped,
    #[default]
    Interleaved,
    Shuffled {
        seed: u64,
    },
    Explicit {
        classes: Vec<ClassId>,
    },
}

/// How the equilibrium is pinned down.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EquilibriumSpec {
    Speed(f64),
    Length(f64),
    LengthPerVehicle(f64),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_total: Vec<usize>,
    /// Share of the first listed class; the rest is split among the other
    /// classes in proportion to their configured counts.
    pub rate_class1: Vec<f64>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl PreferenceConfig {
    pub fn build(&self) -> Result<VelocityPreference> {
        let pref = match (self.v_max, self.calibrate) {
            (Some(v_max), None) => VelocityPreference::new(v_max, self.l_v, self.d0),
            (None, Some(c)) => {
                VelocityPreference::with_slope_at(self.l_v, self.d0, c.headway, c.slope)
            }
            _ => {
                return Err(config_err(
                    "velocity_preference needs exactly one of `v_max` or `calibrate`",
                ))
            }
        };
        pref.map_err(|e| config_err(format!("velocity_preference: {e}")))
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<CarFollowingModel> {
        match self {
            ModelConfig::BandoFtl {
                a,
                b,
                velocity_preference,
            } => CarFollowingModel::bando_ftl(*a, *b, velocity_preference.build()?)
                .map_err(|e| config_err(format!("bando_ftl: {e}"))),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.classes.is_empty() {
            return Err(config_err("`classes` is empty"));
        }
        let ids: BTreeSet<_> = self.classes.iter().map(|c| c.class_id).collect();
        if ids.len() != self.classes.len() {
            return Err(config_err("duplicate class_id"));
        }
        for c in &self.classes {
            c.model.build()?;
        }
        let bad = |x: f64| !(x > 0.0 && x.is_finite());
        match self.equilibrium {
            EquilibriumSpec::Speed(v) if !(v >= 0.0 && v.is_finite()) => {
                return Err(config_err(format!("equilibrium speed {v} must be >= 0")))
            }
            EquilibriumSpec::Length(x) | EquilibriumSpec::LengthPerVehicle(x) if bad(x) => {
                return Err(config_err(format!(
                    "equilibrium length {x} must be positive"
                )))
            }
            _ => {}
        }
        if let Some(sim) = &self.simulation {
            sim.validate()
                .map_err(|e| config_err(format!("simulation: {e}")))?;
        }
        if let Some(sw) = &self.sweep {
            if sw.n_total.is_empty() || sw.rate_class1.is_empty() {
                return Err(config_err("sweep grid is empty"));
            }
            if let Some(n) = sw.n_total.iter().find(|n| **n < 2) {
                return Err(config_err(format!("sweep n_total {n} is below 2")));
            }
            if let Some(r) = sw.rate_class1.iter().find(|r| !(**r >= 0.0 && **r <= 1.0)) {
                return Err(config_err(format!("sweep rate {r} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn class_ids(&self) -> Vec<ClassId> {
        self.classes.iter().map(|c| c.class_id).collect()
    }

    /// The composition with per-class counts overridden by `counts`.
    pub fn composition_with(&self, counts: &[usize]) -> Result<Composition> {
        let pops = self
            .classes
            .iter()
            .zip(counts)
            .map(|(c, &n)| Ok(PopulationSpec::new(c.class_id, c.model.build()?, n)))
            .collect::<Result<Vec<_>>>()?;
        let comp = match &self.ordering {
            OrderingConfig::Grouped => Composition::grouped(pops),
            OrderingConfig::Interleaved => Composition::interleaved(pops),
            OrderingConfig::Shuffled { seed } => Composition::shuffled(pops, *seed),
            OrderingConfig::Explicit { classes } => Composition::new(pops, classes.clone()),
        };
        comp.map_err(|e| match e {
            Error::Precondition(m) | Error::Size(m) => config_err(m),
            other => other,
        })
    }

    pub fn composition(&self) -> Result<Composition> {
        let counts: Vec<usize> = self.classes.iter().map(|c| c.count).collect();
        self.composition_with(&counts)
    }

    pub fn simulation(&self) -> Result<SimConfig> {
        self.simulation
            .ok_or_else(|| config_err("missing `simulation` section"))
    }

    pub fn sweep(&self) -> Result<&SweepConfig> {
        self.sweep
            .as_ref()
            .ok_or_else(|| config_err("missing `sweep` section"))
    }
}
