//! Randomized invariant checks exposed through the `validate` subcommand.

use std::f64::consts::TAU;

use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::array::{assemble_combiner, ArrayGeometry};
use crate::beampattern::{array_factor, default_angle_grid, holographic_tuning};
use crate::element::{lorentzian_phase_weight, project_weight, FeasibleSet};
use crate::error::Result;
use crate::optimizer::{optimize_dma, OptimizerOptions};
use crate::rate::{fully_digital_sum_capacity, uplink_sum_rate};
use crate::rng::{SeedSequence, StreamPurpose};
use crate::{CMatrix, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn report(name: &'static str, failures: usize, cases: usize, worst: f64) -> CheckReport {
    CheckReport {
        name,
        passed: failures == 0,
        detail: format!("{failures} failures in {cases} cases, worst deviation {worst:.3e}"),
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * std::f64::consts::FRAC_1_SQRT_2
    })
}

fn eigen_log_det(m: CMatrix) -> f64 {
    SymmetricEigen::new(m).eigenvalues.iter().map(|l| l.log2()).sum()
}

/// Runs every check with `cases` random instances each.
pub fn run_invariant_suite(seed: u64, cases: usize) -> Result<Vec<CheckReport>> {
    let seeds = SeedSequence::new(seed);
    let mut rng = seeds.stream(StreamPurpose::Validation, 0);
    let mut out = Vec::new();

    // Lorentzian weights lie on their circle.
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let q = lorentzian_phase_weight(rng.random_range(-10.0..10.0))?;
        worst = worst.max(((q.value() - C64::new(0.0, 0.5)).norm() - 0.5).abs());
    }
    out.push(report("lorentzian-circle", usize::from(worst > 1e-12), cases, worst));

    // Closed-form projection is no farther than a dense phase grid.
    let grid = 10_000;
    let bound = 1e-8;
    let mut fails = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cases.min(200) {
        let z = C64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let d = (z - project_weight(z, FeasibleSet::LorentzianPhase)?.value()).norm();
        let brute = (0..grid)
            .map(|i| (z - (C64::new(0.0, 1.0) + C64::from_polar(1.0, TAU * i as f64 / grid as f64)) * 0.5).norm())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(d - brute);
        fails += usize::from(d > brute + bound);
    }
    out.push(report("projection-optimality", fails, cases.min(200), worst));

    // Data-processing inequality, left-invariance and the eigen cross-check.
    let (mut dpi_fails, mut inv_fails, mut eig_fails) = (0, 0, 0);
    let (mut dpi_worst, mut inv_worst, mut eig_worst) = (f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for _ in 0..cases {
        let m = rng.random_range(1..=4);
        let n = rng.random_range(m..=8);
        let k = rng.random_range(1..=5);
        let snr = 10f64.powf(rng.random_range(-2.0..2.0));
        let a = gaussian(&mut rng, m, n);
        let h = gaussian(&mut rng, n, k);
        let r = uplink_sum_rate(&a, &h, snr)?;
        let full = fully_digital_sum_capacity(&h, snr)?;
        dpi_worst = dpi_worst.max(r - full);
        dpi_fails += usize::from(r > full + 1e-9);

        let t = gaussian(&mut rng, m, m);
        let rt = uplink_sum_rate(&(&t * &a), &h, snr)?;
        let rel = (rt - r).abs() / r.max(1e-300);
        inv_worst = inv_worst.max(rel);
        inv_fails += usize::from(rel >= 1e-9);

        let gram = &a * a.adjoint();
        let ah = &a * &h;
        let oracle = eigen_log_det(&gram + (&ah * ah.adjoint()) * C64::new(snr, 0.0)) - eigen_log_det(gram);
        let rel = (oracle - r).abs() / r.max(1e-300);
        eig_worst = eig_worst.max(rel);
        eig_fails += usize::from(rel >= 1e-9);
    }
    out.push(report("data-processing", dpi_fails, cases, dpi_worst));
    out.push(report("left-invariance", inv_fails, cases, inv_worst));
    out.push(report("whitened-vs-eigen", eig_fails, cases, eig_worst));

    // Block-diagonal Gram matrix of assembled combiners.
    let geo = ArrayGeometry::with_defaults(4, 4, 3.5e9)?;
    let mut fails = 0;
    for _ in 0..cases.min(100) {
        let w = (0..16)
            .map(|_| lorentzian_phase_weight(rng.random_range(-3.2..3.2)))
            .collect::<Result<Vec<_>>>()?;
        let a = assemble_combiner(&geo, &w)?;
        let gram = a.matrix() * a.matrix().adjoint();
        fails += usize::from((0..4).any(|i| (0..4).any(|j| i != j && gram[(i, j)] != C64::new(0.0, 0.0))));
    }
    out.push(report("combiner-gram-diagonal", fails, cases.min(100), 0.0));

    // Alternating optimizer objective never increases.
    let mut fails = 0;
    let mut worst = f64::NEG_INFINITY;
    let runs = cases.min(20);
    for _ in 0..runs {
        let h = gaussian(&mut rng, 16, 4);
        let sol = optimize_dma(&h, &geo, FeasibleSet::LorentzianPhase, &OptimizerOptions::default())?;
        for w in sol.diagnostics.objective_history.windows(2) {
            worst = worst.max(w[1] - w[0]);
            fails += usize::from(w[1] > w[0] + 1e-10);
        }
    }
    out.push(report("optimizer-monotone", fails, runs, worst));

    // Unconstrained holographic steering lands on target.
    let strip = ArrayGeometry::with_defaults(1, 32, 3.5e9)?;
    let angles = default_angle_grid();
    let mut fails = 0;
    let mut worst = 0.0f64;
    for target in [-45.0, 0.0, 30.0] {
        let w = holographic_tuning(&strip, target, FeasibleSet::Unconstrained)?;
        let err = (array_factor(&strip, &w, &angles)?.peak_angle - target).abs();
        worst = worst.max(err);
        fails += usize::from(err > 0.2);
    }
    out.push(report("holographic-steering", fails, 3, worst));

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_small_budget() {
        let reports = run_invariant_suite(7, 25).unwrap();
        assert_eq!(reports.len(), 8);
        for r in &reports {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
