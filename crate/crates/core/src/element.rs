//! Metamaterial element model: the tunable Lorentzian frequency response and
//! the feasible sets of narrowband complex weights an element can realize.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Absolute tolerance for feasible-set membership.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Externally controllable parameters of one element's resonant circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianTuning {
    oscillator_strength: f64,
    damping_factor: f64,
    resonance_frequency: f64,
}

impl LorentzianTuning {
    pub fn new(oscillator_strength: f64, damping_factor: f64, resonance_frequency: f64) -> Result<Self> {
        if !(oscillator_strength.is_finite() && oscillator_strength > 0.0) {
            return Err(Error::invalid(format!(
                "oscillator strength must be positive, got {oscillator_strength}"
            )));
        }
        if !(damping_factor.is_finite() && damping_factor >= 0.0) {
            return Err(Error::invalid(format!(
                "damping factor must be non-negative, got {damping_factor}"
            )));
        }
        if !(resonance_frequency.is_finite() && resonance_frequency > 0.0) {
            return Err(Error::invalid(format!(
                "resonance frequency must be positive, got {resonance_frequency}"
            )));
        }
        Ok(Self {
            oscillator_strength,
            damping_factor,
            resonance_frequency,
        })
    }

    pub fn oscillator_strength(&self) -> f64 {
        self.oscillator_strength
    }

    pub fn damping_factor(&self) -> f64 {
        self.damping_factor
    }

    pub fn resonance_frequency(&self) -> f64 {
        self.resonance_frequency
    }
}

/// Set of complex weights an element (or baseline analog network) can take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibleSet {
    /// Circle of radius 1/2 centred at j/2: amplitude and phase are coupled.
    LorentzianPhase,
    /// Radiating (1) or non-radiating (0).
    BinaryAmplitude,
    /// Ideal phase shifter, |q| = 1.
    UnitModulus,
    Unconstrained,
}

impl FeasibleSet {
    pub fn contains(self, q: C64) -> bool {
        match self {
            FeasibleSet::LorentzianPhase => ((q - C64::new(0.0, 0.5)).norm() - 0.5).abs() <= MEMBERSHIP_TOL,
            FeasibleSet::BinaryAmplitude => q.norm() <= MEMBERSHIP_TOL || (q - C64::new(1.0, 0.0)).norm() <= MEMBERSHIP_TOL,
            FeasibleSet::UnitModulus => (q.norm() - 1.0).abs() <= MEMBERSHIP_TOL,
            FeasibleSet::Unconstrained => q.re.is_finite() && q.im.is_finite(),
        }
    }

    /// The maximally radiating member, used for initialization and for
    /// reviving switched-off microstrips.
    pub fn radiating_state(self) -> C64 {
        match self {
            FeasibleSet::BinaryAmplitude => C64::new(1.0, 0.0),
            _ => C64::new(0.0, 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeasibleSet::LorentzianPhase => "lorentzian-phase",
            FeasibleSet::BinaryAmplitude => "binary-amplitude",
            FeasibleSet::UnitModulus => "unit-modulus",
            FeasibleSet::Unconstrained => "unconstrained",
        }
    }
}

impl std::str::FromStr for FeasibleSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lorentzian-phase" | "lorentzian" => Ok(FeasibleSet::LorentzianPhase),
            "binary-amplitude" | "binary" => Ok(FeasibleSet::BinaryAmplitude),
            "unit-modulus" => Ok(FeasibleSet::UnitModulus),
            "unconstrained" => Ok(FeasibleSet::Unconstrained),
            other => Err(Error::invalid(format!("unknown feasible set '{other}'"))),
        }
    }
}

/// A complex element weight together with the set it belongs to.
///
/// Weights on the Lorentzian circle keep the phase that generated them, so
/// `lorentzian_phase_weight(w.phase().unwrap())` reproduces `w` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementWeight {
    value: C64,
    set: FeasibleSet,
    phase: Option<f64>,
}

impl ElementWeight {
    /// Wraps `value`, checking membership in `set`.
    pub fn new(value: C64, set: FeasibleSet) -> Result<Self> {
        if !set.contains(value) {
            return Err(Error::invalid(format!(
                "weight {value} is not a member of {}",
                set.name()
            )));
        }
        let phase = match set {
            FeasibleSet::LorentzianPhase => Some((value - C64::new(0.0, 0.5)).arg()),
            _ => None,
        };
        Ok(Self { value, set, phase })
    }

    pub fn value(&self) -> C64 {
        self.value
    }

    pub fn set(&self) -> FeasibleSet {
        self.set
    }

    /// Generating phase of a Lorentzian weight.
    pub fn phase(&self) -> Option<f64> {
        self.phase
    }
}

/// Lorentzian response `F f^2 / (f0^2 - f^2 + j chi f)` of a tuned element.
pub fn frequency_response(tuning: &LorentzianTuning, frequency: f64) -> Result<C64> {
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(Error::invalid(format!("frequency must be positive, got {frequency}")));
    }
    let f0 = tuning.resonance_frequency;
    let chi = tuning.damping_factor;
    if chi == 0.0 && frequency == f0 {
        return Err(Error::PoleEvaluation { frequency });
    }
    let numerator = tuning.oscillator_strength * frequency * frequency;
    let denominator = C64::new((f0 - frequency) * (f0 + frequency), chi * frequency);
    Ok(C64::new(numerator, 0.0) / denominator)
}

/// Response magnitudes on `grid`, normalized so the largest is exactly 1.
pub fn normalized_response_curve(tuning: &LorentzianTuning, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::invalid("frequency grid is empty"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("frequency grid must be strictly increasing"));
    }
    let magnitudes = grid
        .iter()
        .map(|&f| frequency_response(tuning, f).map(|a| a.norm()))
        .collect::<Result<Vec<_>>>()?;
    let peak = magnitudes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(magnitudes.into_iter().map(|m| m / peak).collect())
}

/// Width of the half-power (-3 dB) band around the peak of a normalized
/// curve, with linear interpolation between samples. A side that never drops
/// below half power extends to the grid edge.
pub fn half_power_bandwidth(grid: &[f64], curve: &[f64]) -> Result<f64> {
    if grid.len() != curve.len() || grid.is_empty() {
        return Err(Error::invalid("grid and curve must be non-empty and of equal length"));
    }
    let level = FRAC_1_SQRT_2 * curve.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let peak = argmax(curve);
    let crossing = |i: usize, j: usize| {
        let t = (curve[i] - level) / (curve[i] - curve[j]);
        grid[i] + t * (grid[j] - grid[i])
    };
    let lower = (1..=peak)
        .rev()
        .find(|&i| curve[i - 1] < level)
        .map_or(grid[0], |i| crossing(i, i - 1));
    let upper = (peak..curve.len() - 1)
        .find(|&i| curve[i + 1] < level)
        .map_or(grid[grid.len() - 1], |i| crossing(i, i + 1));
    Ok(upper - lower)
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Lorentzian-constrained weight `q(phi) = (j + e^{j phi}) / 2`.
pub fn lorentzian_phase_weight(phi: f64) -> Result<ElementWeight> {
    if !phi.is_finite() {
        return Err(Error::invalid(format!("phase must be finite, got {phi}")));
    }
    let phi = phi.rem_euclid(TAU);
    let phi = if phi > std::f64::consts::PI { phi - TAU } else { phi };
    let value = (C64::new(0.0, 1.0) + C64::from_polar(1.0, phi)) * 0.5;
    Ok(ElementWeight {
        value,
        set: FeasibleSet::LorentzianPhase,
        phase: Some(phi),
    })
}

/// Euclidean projection of `z` onto `set`.
///
/// Ties resolve towards the radiating state: the circle centre maps to `j`,
/// zero maps to `1` on the unit circle, and the binary midpoint maps to `1`.
pub fn project_weight(z: C64, set: FeasibleSet) -> Result<ElementWeight> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::invalid(format!("cannot project non-finite value {z}")));
    }
    let w = match set {
        FeasibleSet::LorentzianPhase => {
            let offset = z - C64::new(0.0, 0.5);
            let phi = if offset.norm() == 0.0 { FRAC_PI_2 } else { offset.arg() };
            return lorentzian_phase_weight(phi);
        }
        FeasibleSet::UnitModulus => {
            let r = z.norm();
            if r == 0.0 {
                C64::new(1.0, 0.0)
            } else {
                z / r
            }
        }
        FeasibleSet::BinaryAmplitude => {
            if (z - C64::new(1.0, 0.0)).norm() <= z.norm() {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }
        FeasibleSet::Unconstrained => z,
    };
    Ok(ElementWeight {
        value: w,
        set,
        phase: None,
    })
}
