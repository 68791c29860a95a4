use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dma_bench::preset_instance;
use dma_core::beampattern::default_angle_grid;
use dma_core::experiment::Preset;
use dma_core::{
    array_factor, holographic_tuning, optimize_dma, optimize_phase_shifter_hybrid, uplink_sum_rate, ArrayGeometry,
    FeasibleSet, OptimizerOptions,
};

fn rate_evaluation(c: &mut Criterion) {
    for (name, preset) in [("desk", Preset::Desk), ("paper", Preset::Paper)] {
        let (geo, h) = preset_instance(preset);
        let a = optimize_dma(&h, &geo, FeasibleSet::LorentzianPhase, &OptimizerOptions::default())
            .unwrap()
            .combiner
            .into_matrix();
        c.bench_function(&format!("uplink_sum_rate/{name}"), |b| {
            b.iter(|| uplink_sum_rate(black_box(&a), black_box(&h), 10.0).unwrap())
        });
    }
}

fn optimizers(c: &mut Criterion) {
    let (geo, h) = preset_instance(Preset::Desk);
    let opts = OptimizerOptions::default();
    c.bench_function("optimize_dma/desk/lorentzian", |b| {
        b.iter(|| optimize_dma(black_box(&h), &geo, FeasibleSet::LorentzianPhase, &opts).unwrap())
    });
    c.bench_function("optimize_phase_shifter_hybrid/desk", |b| {
        b.iter(|| optimize_phase_shifter_hybrid(black_box(&h), geo.num_microstrips, &opts).unwrap())
    });
}

fn pattern(c: &mut Criterion) {
    let geo = ArrayGeometry::with_defaults(1, 32, 3.5e9).unwrap();
    let angles = default_angle_grid();
    let w = holographic_tuning(&geo, 30.0, FeasibleSet::LorentzianPhase).unwrap();
    c.bench_function("array_factor/L32", |b| b.iter(|| array_factor(&geo, black_box(&w), &angles).unwrap()));
}

criterion_group!(benches, rate_evaluation, optimizers, pattern);
criterion_main!(benches);
