//! Fixtures shared by the benchmarks.

use dma_core::channel::generate_trial_channel;
use dma_core::experiment::{ExperimentSpec, Preset};
use dma_core::rng::SeedSequence;
use dma_core::{ArrayGeometry, CMatrix};

/// Geometry and one channel realization of a preset, trial 0.
pub fn preset_instance(preset: Preset) -> (ArrayGeometry, CMatrix) {
    let spec = ExperimentSpec::preset(preset);
    let seeds = SeedSequence::new(spec.scenario.rng_seed);
    let channel = generate_trial_channel(&spec.scenario, &spec.geometry, &seeds, 0).expect("preset channel");
    (spec.geometry, channel.matrix)
}
