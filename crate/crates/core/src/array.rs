//! Waveguide-fed DMA geometry and the equivalent M x N analog combiner.
//!
//! Element `l` of microstrip `m` has global index `n = m * L + l` and sits a
//! distance `l * d` from the feed port.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::element::{ElementWeight, FeasibleSet};
use crate::error::{Error, Result};
use crate::{CMatrix, C64, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    /// Number of microstrips, i.e. RF chains (M).
    pub num_microstrips: usize,
    /// Elements per microstrip (L).
    pub elements_per_microstrip: usize,
    /// Element spacing in metres.
    pub element_spacing: f64,
    /// Guided-wave phase constant in rad/m.
    pub guide_wavenumber: f64,
    /// Waveguide loss in Np/m.
    #[serde(default)]
    pub waveguide_attenuation: f64,
    /// Carrier frequency in Hz.
    pub carrier_frequency: f64,
}

impl ArrayGeometry {
    /// Default lossless geometry: spacing of a fifth of a wavelength and a
    /// guided wavenumber 1.4 times the free-space one.
    pub fn with_defaults(num_microstrips: usize, elements_per_microstrip: usize, carrier_frequency: f64) -> Result<Self> {
        let wavelength = SPEED_OF_LIGHT / carrier_frequency;
        let geo = Self {
            num_microstrips,
            elements_per_microstrip,
            element_spacing: wavelength / 5.0,
            guide_wavenumber: 1.4 * TAU / wavelength,
            waveguide_attenuation: 0.0,
            carrier_frequency,
        };
        geo.validate()?;
        Ok(geo)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_microstrips == 0 || self.elements_per_microstrip == 0 {
            return Err(Error::invalid("array needs at least one microstrip and one element"));
        }
        let positive = [
            ("element_spacing", self.element_spacing),
            ("guide_wavenumber", self.guide_wavenumber),
            ("carrier_frequency", self.carrier_frequency),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.waveguide_attenuation.is_finite() && self.waveguide_attenuation >= 0.0) {
            return Err(Error::invalid(format!(
                "waveguide_attenuation must be non-negative, got {}",
                self.waveguide_attenuation
            )));
        }
        Ok(())
    }

    /// Total number of elements, N = M L.
    pub fn num_elements(&self) -> usize {
        self.num_microstrips * self.elements_per_microstrip
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Free-space wavenumber at the carrier.
    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength()
    }

    /// Distance from the feed of element `l`.
    pub fn element_position(&self, l: usize) -> f64 {
        l as f64 * self.element_spacing
    }

    /// A warning when the spacing is not sub-wavelength. Such geometries are
    /// allowed but grating lobes are expected.
    pub fn spacing_warning(&self) -> Option<String> {
        let lambda = self.wavelength();
        (self.element_spacing >= lambda).then(|| {
            format!(
                "element spacing {:.4} m is not sub-wavelength (lambda = {:.4} m)",
                self.element_spacing, lambda
            )
        })
    }
}

/// Guided-wave gain `exp(-(alpha + j beta_g) rho_l)` between the feed and element `l`.
pub fn propagation_gain(geo: &ArrayGeometry, l: usize) -> Result<C64> {
    if l >= geo.elements_per_microstrip {
        return Err(Error::invalid(format!(
            "element index {l} out of range for {} elements per microstrip",
            geo.elements_per_microstrip
        )));
    }
    Ok(propagation_gain_unchecked(geo, l))
}

pub(crate) fn propagation_gain_unchecked(geo: &ArrayGeometry, l: usize) -> C64 {
    let rho = geo.element_position(l);
    (-C64::new(geo.waveguide_attenuation, geo.guide_wavenumber) * rho).exp()
}

/// Gains of all elements along one microstrip.
pub fn propagation_gains(geo: &ArrayGeometry) -> Vec<C64> {
    (0..geo.elements_per_microstrip)
        .map(|l| propagation_gain_unchecked(geo, l))
        .collect()
}

/// Block-sparse M x N matrix realized by a configured DMA.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogCombiner {
    matrix: CMatrix,
    geometry: ArrayGeometry,
    set: FeasibleSet,
    weights: Vec<ElementWeight>,
}

impl AnalogCombiner {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn set(&self) -> FeasibleSet {
        self.set
    }

    /// Element weights in global order `n = m L + l`.
    pub fn weights(&self) -> &[ElementWeight] {
        &self.weights
    }

    /// Weights of microstrip `m`.
    pub fn microstrip_weights(&self, m: usize) -> &[ElementWeight] {
        let l = self.geometry.elements_per_microstrip;
        &self.weights[m * l..(m + 1) * l]
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

/// Builds the combiner with entry `(m, m L + l) = q_{m,l} g_l`; every other
/// entry is exactly zero. `weights` is indexed `n = m L + l`.
pub fn assemble_combiner(geo: &ArrayGeometry, weights: &[ElementWeight]) -> Result<AnalogCombiner> {
    geo.validate()?;
    let n = geo.num_elements();
    if weights.len() != n {
        return Err(Error::invalid(format!(
            "expected {n} weights ({} x {}), got {}",
            geo.num_microstrips,
            geo.elements_per_microstrip,
            weights.len()
        )));
    }
    let set = weights[0].set();
    if weights.iter().any(|w| w.set() != set) {
        return Err(Error::invalid("all element weights must share one feasible set"));
    }
    let gains = propagation_gains(geo);
    let per_strip = geo.elements_per_microstrip;
    let mut matrix = CMatrix::zeros(geo.num_microstrips, n);
    for (idx, w) in weights.iter().enumerate() {
        let m = idx / per_strip;
        matrix[(m, idx)] = w.value() * gains[idx % per_strip];
    }
    Ok(AnalogCombiner {
        matrix,
        geometry: *geo,
        set,
        weights: weights.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::{lorentzian_phase_weight, project_weight};
    use std::f64::consts::PI;

    fn geo(m: usize, l: usize) -> ArrayGeometry {
        ArrayGeometry::with_defaults(m, l, 3.5e9).unwrap()
    }

    #[test]
    fn gain_examples() {
        let g = geo(1, 4);
        assert_eq!(propagation_gain(&g, 0).unwrap(), C64::new(1.0, 0.0));

        let flip = ArrayGeometry {
            guide_wavenumber: PI / 0.01,
            element_spacing: 0.01,
            ..g
        };
        assert!((propagation_gain(&flip, 1).unwrap() - C64::new(-1.0, 0.0)).norm() < 1e-15);

        let lossy = ArrayGeometry {
            waveguide_attenuation: 0.5,
            element_spacing: 0.01,
            elements_per_microstrip: 11,
            ..g
        };
        let mag = propagation_gain(&lossy, 10).unwrap().norm();
        assert!((mag - 0.951_229_424_500_714).abs() < 1e-15);

        assert!(propagation_gain(&g, 4).is_err());
    }

    #[test]
    fn lossless_gains_have_unit_magnitude() {
        let g = geo(1, 64);
        for gain in propagation_gains(&g) {
            assert!((gain.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_element_combiner() {
        let g = geo(1, 1);
        let w = lorentzian_phase_weight(PI / 2.0).unwrap();
        let a = assemble_combiner(&g, &[w]).unwrap();
        assert!((a.matrix()[(0, 0)] - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn block_sparsity_pattern() {
        let g = geo(2, 2);
        let w: Vec<_> = (0..4).map(|i| lorentzian_phase_weight(0.3 * i as f64).unwrap()).collect();
        let a = assemble_combiner(&g, &w).unwrap();
        for m in 0..2 {
            for n in 0..4 {
                let on_support = n / 2 == m;
                assert_eq!(a.matrix()[(m, n)] != C64::new(0.0, 0.0), on_support, "({m},{n})");
            }
        }
        assert_eq!(a.microstrip_weights(1), &w[2..]);
    }

    #[test]
    fn gram_matrix_is_exactly_diagonal() {
        let g = ArrayGeometry {
            guide_wavenumber: PI / 3.0 / 0.02,
            element_spacing: 0.02,
            ..geo(3, 5)
        };
        let w: Vec<_> = (0..15).map(|i| lorentzian_phase_weight(1.7 * i as f64 - 4.0).unwrap()).collect();
        let a = assemble_combiner(&g, &w).unwrap();
        let gram = a.matrix() * a.matrix().adjoint();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(gram[(i, j)], C64::new(0.0, 0.0));
                }
            }
            let expected: f64 = w[i * 5..(i + 1) * 5].iter().map(|q| q.value().norm_sqr()).sum();
            assert!((gram[(i, i)].re - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn assembly_errors() {
        let g = geo(2, 2);
        let w = lorentzian_phase_weight(0.0).unwrap();
        assert!(assemble_combiner(&g, &[w; 3]).is_err());
        let mut mixed = vec![w; 4];
        mixed[3] = project_weight(C64::new(1.0, 0.0), FeasibleSet::UnitModulus).unwrap();
        assert!(assemble_combiner(&g, &mixed).is_err());
    }

    #[test]
    fn spacing_warning_only_for_wide_spacing() {
        let g = geo(1, 4);
        assert!(g.spacing_warning().is_none());
        let wide = ArrayGeometry {
            element_spacing: g.wavelength() * 1.5,
            ..g
        };
        assert!(wide.spacing_warning().is_some());
        assert!(wide.validate().is_ok());
    }
}
