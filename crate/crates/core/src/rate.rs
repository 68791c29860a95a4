//! Achievable uplink sum-rates of the multiple-access channel seen through an
//! analog front-end, and the fully digital reference capacities.
//!
//! White unit-variance noise is added at the receiving elements and filtered
//! by the front-end `A`, so the rate is
//! `log2 det(I + snr (A A^H)^-1 A H H^H A^H)`. It is evaluated by whitening
//! with the Cholesky factor `A A^H = C C^H` and summing
//! `log2(1 + snr s_i^2)` over the singular values of `C^-1 A H`.

use std::f64::consts::LN_2;

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::CMatrix;

/// Largest tolerated condition number of `A A^H`.
pub const MAX_CONDITION: f64 = 1e12;

fn check_snr(snr: f64) -> Result<()> {
    if !(snr >= 0.0 && snr.is_finite()) {
        return Err(Error::invalid(format!("snr must be finite and non-negative, got {snr}")));
    }
    Ok(())
}

fn log_det_from_singular_values(singular_values: impl Iterator<Item = f64>, snr: f64) -> f64 {
    singular_values.map(|s| (snr * s * s).ln_1p()).sum::<f64>() / LN_2
}

/// Checks that `A A^H` is well conditioned, naming the rows that span its
/// near-null space otherwise.
fn check_front_end(gram: &CMatrix) -> Result<()> {
    let eig = SymmetricEigen::new(gram.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if condition <= MAX_CONDITION {
        return Ok(());
    }
    let threshold = if max > 0.0 { max / MAX_CONDITION } else { f64::INFINITY };
    let mut rows = Vec::new();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > threshold {
            continue;
        }
        let v = eig.eigenvectors.column(j);
        let peak = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        rows.extend((0..v.len()).filter(|&i| v[i].norm() >= 0.1 * peak));
    }
    rows.sort_unstable();
    rows.dedup();
    Err(Error::SingularFrontEnd { condition, rows })
}

/// Sum-rate in bps/Hz of the uplink observed through front-end `a` (M x N).
pub fn uplink_sum_rate(a: &CMatrix, h: &CMatrix, snr: f64) -> Result<f64> {
    check_snr(snr)?;
    if a.ncols() != h.nrows() {
        return Err(Error::invalid(format!(
            "front-end has {} columns but channel has {} rows",
            a.ncols(),
            h.nrows()
        )));
    }
    if a.nrows() == 0 || h.ncols() == 0 {
        return Err(Error::invalid("empty front-end or channel"));
    }
    let gram = a * a.adjoint();
    check_front_end(&gram)?;
    let chol = gram.cholesky().ok_or(Error::SingularFrontEnd {
        condition: f64::INFINITY,
        rows: (0..a.nrows()).collect(),
    })?;
    let mut whitened = a * h;
    chol.l_dirty().solve_lower_triangular_mut(&mut whitened);
    Ok(log_det_from_singular_values(whitened.singular_values().iter().copied(), snr))
}

/// `log2 det(I_N + snr H H^H)`: the sum-capacity with one RF chain per element.
pub fn fully_digital_sum_capacity(h: &CMatrix, snr: f64) -> Result<f64> {
    check_snr(snr)?;
    if h.is_empty() {
        return Ok(0.0);
    }
    Ok(log_det_from_singular_values(h.singular_values().iter().copied(), snr))
}

/// Sum-capacity of an `m`-antenna base station, using the first `m` rows of `h`.
pub fn digital_subarray_capacity(h: &CMatrix, m: usize, snr: f64) -> Result<f64> {
    if m == 0 || m > h.nrows() {
        return Err(Error::invalid(format!(
            "subarray size {m} must lie in 1..={}",
            h.nrows()
        )));
    }
    fully_digital_sum_capacity(&h.rows(0, m).into_owned(), snr)
}

/// Monte Carlo statistics of one architecture at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateResult {
    pub architecture: String,
    pub snr_db: f64,
    pub per_trial_rates: Vec<f64>,
    pub mean_rate: f64,
    pub ci95_halfwidth: f64,
}

impl RateResult {
    pub fn from_samples(architecture: impl Into<String>, snr_db: f64, per_trial_rates: Vec<f64>) -> Result<Self> {
        if per_trial_rates.is_empty() {
            return Err(Error::invalid("no rate samples"));
        }
        if per_trial_rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::invalid("rates must be finite and non-negative"));
        }
        let (mean_rate, ci95_halfwidth) = mean_and_ci95(&per_trial_rates);
        Ok(Self {
            architecture: architecture.into(),
            snr_db,
            per_trial_rates,
            mean_rate,
            ci95_halfwidth,
        })
    }
}

/// Sample mean and normal-approximation 95% confidence half-width.
pub fn mean_and_ci95(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    /// Independent route: log2 det(A A^H + snr A H H^H A^H) - log2 det(A A^H)
    /// through Hermitian eigenvalues.
    fn eigen_rate(a: &CMatrix, h: &CMatrix, snr: f64) -> f64 {
        let gram = a * a.adjoint();
        let ah = a * h;
        let total = &gram + (&ah * ah.adjoint()) * C64::new(snr, 0.0);
        let log_det = |m: CMatrix| SymmetricEigen::new(m).eigenvalues.iter().map(|l| l.log2()).sum::<f64>();
        log_det(total) - log_det(gram)
    }

    #[test]
    fn zero_snr_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 2, 4);
        let h = random_matrix(&mut rng, 4, 3);
        assert_eq!(uplink_sum_rate(&a, &h, 0.0).unwrap(), 0.0);
        assert_eq!(fully_digital_sum_capacity(&h, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn scalar_channel() {
        let a = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let h = CMatrix::from_element(1, 1, C64::new(0.6, -0.8));
        let r = uplink_sum_rate(&a, &h, 7.0).unwrap();
        assert!((r - 8.0f64.log2()).abs() < 1e-14);
        let r = digital_subarray_capacity(&h, 1, 7.0).unwrap();
        assert!((r - 3.0).abs() < 1e-14);
    }

    #[test]
    fn whitened_rate_matches_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 4, 8);
        let h = random_matrix(&mut rng, 8, 3);
        let r = uplink_sum_rate(&a, &h, 10.0).unwrap();
        let oracle = eigen_rate(&a, &h, 10.0);
        assert!((r - oracle).abs() / oracle < 1e-9);
    }

    #[test]
    fn digital_capacity_examples() {
        let h = CMatrix::zeros(3, 2);
        assert_eq!(fully_digital_sum_capacity(&h, 5.0).unwrap(), 0.0);
        let eye = CMatrix::identity(2, 2);
        assert!((fully_digital_sum_capacity(&eye, 3.0).unwrap() - 4.0).abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_matrix(&mut rng, 6, 4);
        let full = fully_digital_sum_capacity(&h, 2.5).unwrap();
        let via_identity = uplink_sum_rate(&CMatrix::identity(6, 6), &h, 2.5).unwrap();
        assert!((full - via_identity).abs() < 1e-10);
        assert_eq!(digital_subarray_capacity(&h, 6, 2.5).unwrap(), full);
        assert!(digital_subarray_capacity(&h, 3, 2.5).unwrap() <= full);
        assert!(digital_subarray_capacity(&h, 0, 2.5).is_err());
        assert!(digital_subarray_capacity(&h, 7, 2.5).is_err());
    }

    #[test]
    fn singular_front_end_names_rows() {
        let mut a = CMatrix::zeros(3, 4);
        a[(0, 0)] = C64::new(1.0, 0.0);
        a[(2, 3)] = C64::new(0.0, 1.0);
        let h = CMatrix::identity(4, 2);
        match uplink_sum_rate(&a, &h, 1.0) {
            Err(Error::SingularFrontEnd { rows, .. }) => assert_eq!(rows, vec![1]),
            other => panic!("expected singular front-end, got {other:?}"),
        }
        // two identical rows
        let mut dup = CMatrix::zeros(2, 3);
        dup[(0, 1)] = C64::new(1.0, 0.0);
        dup[(1, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            uplink_sum_rate(&dup, &CMatrix::identity(3, 1), 1.0),
            Err(Error::SingularFrontEnd { .. })
        ));
    }

    #[test]
    fn argument_errors() {
        let a = CMatrix::identity(2, 2);
        assert!(uplink_sum_rate(&a, &CMatrix::identity(3, 1), 1.0).is_err());
        assert!(uplink_sum_rate(&a, &CMatrix::identity(2, 1), -1.0).is_err());
        assert!(uplink_sum_rate(&a, &CMatrix::identity(2, 1), f64::NAN).is_err());
    }

    #[test]
    fn statistics() {
        let r = RateResult::from_samples("x", 0.0, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.mean_rate, 2.0);
        assert!((r.ci95_halfwidth - 1.96 / 3f64.sqrt()).abs() < 1e-15);
        assert!(RateResult::from_samples("x", 0.0, vec![]).is_err());
        assert!(RateResult::from_samples("x", 0.0, vec![-1.0]).is_err());
        assert_eq!(RateResult::from_samples("x", 0.0, vec![4.0]).unwrap().ci95_halfwidth, 0.0);
    }
}
