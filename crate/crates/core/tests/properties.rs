use approx::assert_relative_eq;
use dma_core::experiment::{compute_rates, ExperimentSpec, Preset};
use dma_core::rate::mean_and_ci95;
use dma_core::{
    fully_digital_sum_capacity, optimize_dma, uplink_sum_rate, Architecture, ArrayGeometry, CMatrix, FeasibleSet,
    OptimizerOptions, C64,
};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), rows * cols)
        .prop_map(move |v| CMatrix::from_iterator(rows, cols, v.into_iter().map(|(re, im)| C64::new(re, im))))
}

fn front_end_and_channel() -> impl Strategy<Value = (CMatrix, CMatrix)> {
    (1usize..=4, 0usize..=4, 1usize..=5)
        .prop_flat_map(|(m, extra, k)| (matrix(m, m + extra), matrix(m + extra, k)))
        .prop_filter("well conditioned front-end", |(a, _)| {
            let s = a.singular_values();
            s.min() > 1e-3 * s.max()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rate_grows_with_snr((a, h) in front_end_and_channel(), snr in 0.01f64..100.0, factor in 1.0f64..10.0) {
        let low = uplink_sum_rate(&a, &h, snr).unwrap();
        let high = uplink_sum_rate(&a, &h, snr * factor).unwrap();
        prop_assert!(low >= 0.0);
        prop_assert!(high >= low - 1e-12);
    }

    #[test]
    fn rate_never_exceeds_digital_capacity((a, h) in front_end_and_channel(), snr in 0.01f64..100.0) {
        let rate = uplink_sum_rate(&a, &h, snr).unwrap();
        let cap = fully_digital_sum_capacity(&h, snr).unwrap();
        prop_assert!(rate <= cap + 1e-9, "rate {rate} capacity {cap}");
    }

    #[test]
    fn rate_ignores_scaling_of_front_end((a, h) in front_end_and_channel(), snr in 0.1f64..10.0, re in 0.1f64..5.0, im in -5.0f64..5.0) {
        let base = uplink_sum_rate(&a, &h, snr).unwrap();
        let scaled = uplink_sum_rate(&(&a * C64::new(re, im)), &h, snr).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn optimizer_output_is_feasible_and_structured(h in matrix(8, 3), set_idx in 0usize..4) {
        let set = [
            FeasibleSet::LorentzianPhase,
            FeasibleSet::BinaryAmplitude,
            FeasibleSet::UnitModulus,
            FeasibleSet::Unconstrained,
        ][set_idx];
        let geo = ArrayGeometry::with_defaults(2, 4, 3.5e9).unwrap();
        let sol = optimize_dma(&h, &geo, set, &OptimizerOptions::default()).unwrap();
        let a = sol.combiner.matrix();
        prop_assert_eq!(a.shape(), (2, 8));
        for w in sol.combiner.weights() {
            prop_assert!(set.contains(w.value()));
        }
        for m in 0..2 {
            prop_assert!((0..4).any(|l| a[(m, m * 4 + l)].norm() > 0.0), "microstrip {m} fully off");
            for n in 0..8 {
                if n / 4 != m {
                    prop_assert_eq!(a[(m, n)], C64::new(0.0, 0.0));
                }
            }
        }
        let history = &sol.diagnostics.objective_history;
        prop_assert!(history.windows(2).all(|w| w[1] <= w[0] + 1e-10));
    }
}

#[test]
fn ci_halfwidth_shrinks_with_square_root_of_trials() {
    let mut spec = ExperimentSpec::preset(Preset::Desk);
    spec.architectures = vec![Architecture::DigitalN];
    spec.scenario.snr_grid_db = vec![0.0];
    spec.scenario.num_trials = 100;
    let few = compute_rates(&spec, 2).unwrap().results[0].ci95_halfwidth;
    spec.scenario.num_trials = 400;
    let many = compute_rates(&spec, 2).unwrap().results[0].ci95_halfwidth;
    let ratio = few / many;
    assert!((ratio - 2.0).abs() <= 0.4, "ci ratio {ratio}");
}

#[test]
fn ci_of_constant_samples_is_zero() {
    let (mean, ci) = mean_and_ci95(&[3.25; 10]);
    assert_relative_eq!(mean, 3.25);
    assert_relative_eq!(ci, 0.0);
}

#[test]
fn single_antenna_digital_rate_matches_exponential_average() {
    // With every user at the cell edge, the per-trial rate is log2(1 + snr |h|^2), |h|^2 ~ Exp(1).
    let mut spec = ExperimentSpec::preset(Preset::Desk);
    spec.geometry = ArrayGeometry::with_defaults(1, 1, 3.5e9).unwrap();
    spec.scenario.num_users = 1;
    spec.scenario.min_distance = spec.scenario.cell_radius * (1.0 - 1e-12);
    spec.scenario.snr_grid_db = vec![0.0];
    spec.scenario.num_trials = 100_000;
    spec.architectures = vec![Architecture::DigitalN];
    let mean = compute_rates(&spec, 0).unwrap().results[0].mean_rate;
    assert_relative_eq!(mean, 0.860_347_382_270_886, max_relative = 0.02);
}
