//! Link-level models for base stations built from dynamic metasurface antennas
//! (DMAs): waveguide-fed arrays of tunable resonant elements acting as a
//! hybrid analog/digital receive front-end.
//!
//! The crate covers the element response and its feasible weight sets, the
//! assembly of the block-sparse analog combiner, Rayleigh/pathloss channel
//! generation, uplink sum-rate evaluation, front-end optimization, beam
//! synthesis, and a seeded Monte Carlo experiment runner.

pub mod array;
pub mod beampattern;
pub mod channel;
pub mod element;
pub mod error;
pub mod experiment;
pub mod optimizer;
pub mod rate;
pub mod rng;
pub mod validate;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix used for channels and front-ends.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub use array::{assemble_combiner, propagation_gain, AnalogCombiner, ArrayGeometry};
pub use beampattern::{array_factor, holographic_tuning, PatternResult};
pub use channel::{drop_users, generate_channel, pathloss_gain, ChannelRealization, ScenarioConfig};
pub use element::{
    frequency_response, lorentzian_phase_weight, normalized_response_curve, project_weight,
    ElementWeight, FeasibleSet, LorentzianTuning,
};
pub use error::{Error, Result};
pub use experiment::{run_experiment, Architecture, ExperimentSpec, Preset};
pub use optimizer::{
    optimize_dma, optimize_phase_shifter_hybrid, unconstrained_combiner, DmaSolution,
    OptimizerOptions,
};
pub use rate::{digital_subarray_capacity, fully_digital_sum_capacity, uplink_sum_rate, RateResult};
