//! Multi-user narrowband uplink channels: users dropped uniformly over a
//! circular cell, log-distance pathloss normalized to the cell edge, and
//! i.i.d. Rayleigh fading across the receiving elements.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::ArrayGeometry;
use crate::error::{Error, Result};
use crate::rng::{SeedSequence, StreamPurpose};
use crate::{CMatrix, C64};

fn default_min_distance() -> f64 {
    10.0
}

fn default_pathloss_exponent() -> f64 {
    3.0
}

fn default_reference_distance() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Number of single-antenna users (K).
    pub num_users: usize,
    /// Cell radius in metres.
    pub cell_radius: f64,
    /// Users are never dropped closer than this to the base station.
    #[serde(default = "default_min_distance")]
    pub min_distance: f64,
    #[serde(default = "default_pathloss_exponent")]
    pub pathloss_exponent: f64,
    /// Anchor of the log-distance law in metres. Gains are normalized to the
    /// cell edge, so the anchor cancels out of every rate.
    #[serde(default = "default_reference_distance")]
    pub reference_distance: f64,
    /// Cell-edge SNR points in dB.
    pub snr_grid_db: Vec<f64>,
    pub num_trials: usize,
    pub rng_seed: u64,
    pub carrier_frequency: f64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 {
            return Err(Error::invalid("num_users must be positive"));
        }
        if self.num_trials == 0 {
            return Err(Error::invalid("num_trials must be positive"));
        }
        if !(self.min_distance > 0.0 && self.min_distance < self.cell_radius && self.cell_radius.is_finite()) {
            return Err(Error::invalid(format!(
                "need 0 < min_distance < cell_radius, got {} and {}",
                self.min_distance, self.cell_radius
            )));
        }
        if !(self.pathloss_exponent >= 2.0 && self.pathloss_exponent.is_finite()) {
            return Err(Error::invalid(format!(
                "pathloss exponent must be at least 2, got {}",
                self.pathloss_exponent
            )));
        }
        if !(self.reference_distance > 0.0 && self.reference_distance.is_finite()) {
            return Err(Error::invalid("reference_distance must be positive"));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::invalid("snr grid is empty"));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("snr grid contains non-finite values"));
        }
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return Err(Error::invalid("carrier_frequency must be positive"));
        }
        Ok(())
    }
}

/// Polar position of a user relative to the base station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPosition {
    pub distance: f64,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// N x K channel, column k belongs to user k.
    pub matrix: CMatrix,
    pub user_distances: Vec<f64>,
    pub pathloss_gains: Vec<f64>,
}

/// Drops `K` users uniformly by area over the annulus between
/// `min_distance` and `cell_radius`.
pub fn drop_users<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Vec<UserPosition> {
    let inner = cfg.min_distance * cfg.min_distance;
    let outer = cfg.cell_radius * cfg.cell_radius;
    (0..cfg.num_users)
        .map(|_| {
            let u: f64 = rng.random();
            let distance = (inner + u * (outer - inner)).sqrt().clamp(cfg.min_distance, cfg.cell_radius);
            let angle = TAU * rng.random::<f64>();
            UserPosition { distance, angle }
        })
        .collect()
}

/// Power gain `(R / distance)^gamma`; a cell-edge user has unit gain.
pub fn pathloss_gain(cfg: &ScenarioConfig, distance: f64) -> Result<f64> {
    if distance.is_nan() || distance < cfg.min_distance {
        return Err(Error::invalid(format!(
            "distance {distance} m is below the minimum distance {} m",
            cfg.min_distance
        )));
    }
    Ok((cfg.cell_radius / distance).powf(cfg.pathloss_exponent))
}

/// Draws one channel; users and fading come from the same stream.
pub fn generate_channel<R: Rng + ?Sized>(cfg: &ScenarioConfig, geo: &ArrayGeometry, rng: &mut R) -> Result<ChannelRealization> {
    let users = drop_users(cfg, rng);
    fade(cfg, geo, &users, rng)
}

/// Draws the channel of one Monte Carlo trial from its dedicated drop and
/// fading sub-streams.
pub fn generate_trial_channel(cfg: &ScenarioConfig, geo: &ArrayGeometry, seeds: &SeedSequence, trial: u64) -> Result<ChannelRealization> {
    let users = drop_users(cfg, &mut seeds.stream(StreamPurpose::UserDrop, trial));
    fade(cfg, geo, &users, &mut seeds.stream(StreamPurpose::Fading, trial))
}

fn fade<R: Rng + ?Sized>(cfg: &ScenarioConfig, geo: &ArrayGeometry, users: &[UserPosition], rng: &mut R) -> Result<ChannelRealization> {
    let n = geo.num_elements();
    let gains = users
        .iter()
        .map(|u| pathloss_gain(cfg, u.distance))
        .collect::<Result<Vec<_>>>()?;
    let mut matrix = CMatrix::zeros(n, users.len());
    for (k, gain) in gains.iter().enumerate() {
        let scale = gain.sqrt() * FRAC_1_SQRT_2;
        for row in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            matrix[(row, k)] = C64::new(re, im) * scale;
        }
    }
    Ok(ChannelRealization {
        matrix,
        user_distances: users.iter().map(|u| u.distance).collect(),
        pathloss_gains: gains,
    })
}
