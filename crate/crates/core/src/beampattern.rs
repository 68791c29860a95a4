//! Far-field patterns of a single microstrip and holographic beam steering.

use serde::Serialize;

use crate::array::{propagation_gains, ArrayGeometry};
use crate::element::{argmax, project_weight, ElementWeight, FeasibleSet};
use crate::error::{Error, Result};
use crate::C64;

/// Floor applied to pattern nulls so that every magnitude is finite.
pub const PATTERN_FLOOR_DB: f64 = -300.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternResult {
    pub angles: Vec<f64>,
    pub magnitudes_db: Vec<f64>,
    pub peak_angle: f64,
    pub half_power_beamwidth: f64,
}

/// Angles from -90 to 90 degrees inclusive in `step` increments.
pub fn angle_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 180.0) {
        return Err(Error::invalid(format!("angle step must lie in (0, 180], got {step}")));
    }
    let count = (180.0 / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| -90.0 + i as f64 * step).collect())
}

/// Default 0.1 degree grid.
pub fn default_angle_grid() -> Vec<f64> {
    (0..=1800).map(|i| (i as f64 - 900.0) / 10.0).collect()
}

/// Array factor `|sum_l q_l g_l exp(j k0 rho_l sin(theta))|` of one
/// microstrip with isotropic elements, normalized to 0 dB at the peak.
pub fn array_factor(geo: &ArrayGeometry, weights: &[ElementWeight], angles_deg: &[f64]) -> Result<PatternResult> {
    if weights.len() != geo.elements_per_microstrip {
        return Err(Error::invalid(format!(
            "expected {} weights, got {}",
            geo.elements_per_microstrip,
            weights.len()
        )));
    }
    if angles_deg.is_empty() {
        return Err(Error::invalid("angle grid is empty"));
    }
    if angles_deg.iter().any(|a| !(-90.0..=90.0).contains(a)) {
        return Err(Error::invalid("angles must lie within [-90, 90] degrees"));
    }
    if angles_deg.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("angles must be strictly increasing"));
    }
    if weights.iter().all(|w| w.value().norm() == 0.0) {
        return Err(Error::DegeneratePattern);
    }
    let k0 = geo.wavenumber();
    let excitation: Vec<C64> = weights
        .iter()
        .zip(propagation_gains(geo))
        .map(|(w, g)| w.value() * g)
        .collect();
    let magnitudes: Vec<f64> = angles_deg
        .iter()
        .map(|deg| {
            let s = deg.to_radians().sin();
            excitation
                .iter()
                .enumerate()
                .map(|(l, e)| e * C64::from_polar(1.0, k0 * geo.element_position(l) * s))
                .sum::<C64>()
                .norm()
        })
        .collect();
    let peak_idx = argmax(&magnitudes);
    let peak = magnitudes[peak_idx];
    if peak == 0.0 {
        return Err(Error::DegeneratePattern);
    }
    let magnitudes_db: Vec<f64> = magnitudes
        .iter()
        .map(|m| (20.0 * (m / peak).log10()).max(PATTERN_FLOOR_DB))
        .collect();
    let half_power_beamwidth = beamwidth_3db(angles_deg, &magnitudes_db, peak_idx);
    Ok(PatternResult {
        angles: angles_deg.to_vec(),
        magnitudes_db,
        peak_angle: angles_deg[peak_idx],
        half_power_beamwidth,
    })
}

fn beamwidth_3db(angles: &[f64], db: &[f64], peak: usize) -> f64 {
    const LEVEL: f64 = -3.0;
    let crossing = |i: usize, j: usize| {
        let t = (db[i] - LEVEL) / (db[i] - db[j]);
        angles[i] + t * (angles[j] - angles[i])
    };
    let lower = (1..=peak)
        .rev()
        .find(|&i| db[i - 1] < LEVEL)
        .map_or(angles[0], |i| crossing(i, i - 1));
    let upper = (peak..db.len() - 1)
        .find(|&i| db[i + 1] < LEVEL)
        .map_or(angles[angles.len() - 1], |i| crossing(i, i + 1));
    upper - lower
}

/// Element states steering a microstrip's beam towards `theta_target_deg`.
///
/// Each element ideally cancels both the guided-wave phase and the free-space
/// path difference, `q_l = exp(-j k0 rho_l sin(theta)) / g_l`; the ideal state
/// is then projected onto `set`.
pub fn holographic_tuning(geo: &ArrayGeometry, theta_target_deg: f64, set: FeasibleSet) -> Result<Vec<ElementWeight>> {
    if !(-90.0..=90.0).contains(&theta_target_deg) {
        return Err(Error::invalid(format!(
            "target angle {theta_target_deg} lies outside [-90, 90] degrees"
        )));
    }
    geo.validate()?;
    let k0 = geo.wavenumber();
    let s = theta_target_deg.to_radians().sin();
    propagation_gains(geo)
        .into_iter()
        .enumerate()
        .map(|(l, g)| {
            let ideal = C64::from_polar(1.0, -k0 * geo.element_position(l) * s) / g;
            project_weight(ideal, set)
        })
        .collect()
}

/// Largest level outside the main lobe, in dB relative to the peak. The main
/// lobe extends from the peak down to the first local minimum on each side.
pub fn peak_sidelobe_db(pattern: &PatternResult) -> Option<f64> {
    let db = &pattern.magnitudes_db;
    let peak = argmax(db);
    let mut lo = peak;
    while lo > 0 && db[lo - 1] < db[lo] {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < db.len() && db[hi + 1] < db[hi] {
        hi += 1;
    }
    db[..lo]
        .iter()
        .chain(&db[hi + 1..])
        .cloned()
        .reduce(f64::max)
}
