//! Mixed car-following traffic on a ring road.
//!
//! The crate follows one pipeline:
//!
//! 1. [`model`]: driver laws `f(h, ḣ, v)` (Bando-FTL or custom).
//! 2. [`equilibrium`]: the uniform flow for a fleet [`Composition`] at a given
//!    speed or ring length.
//! 3. [`linearize`]: the per-class trio `(α, β, γ)` and its discriminant.
//! 4. [`spectrum`]: eigenvalues of the linearized ring on the zero-sum
//!    headway subspace.
//! 5. [`stability`]: analytic criteria for mixed fleets, including the
//!    critical penetration rate of stable drivers.
//! 6. [`sim`]: nonlinear RK4 simulation and speed-variance traces.
//!
//! [`cli`] wires these to JSON configs and CSV/SVG outputs for the `ringwave`
//! binary.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod linearize;
pub mod model;
pub mod optimize;
pub mod sim;
pub mod spectrum;
pub mod stability;

pub use equilibrium::{
    equilibrium_from_length, equilibrium_from_velocity, ClassId, Composition, EquilibriumFlow,
    PopulationSpec,
};
pub use error::{Error, Result};
pub use linearize::{classify, discriminant, linearize, linearize_fd, LinearTrio, StabilityClass};
pub use model::{BandoFtl, CarFollowingModel, CustomModel, Partials, VelocityPreference};
pub use sim::{
    growth_rate, simulate, Perturbation, PerturbationKind, SimConfig, SimState, SimTrace,
};
pub use spectrum::{eigenvalues_on_h, RingSystem, SpectrumReport};
