//! Radio propagation: log-distance path loss, log-normal shadowing, Doppler
//! attenuation, thermal noise and SINR.

use std::collections::BTreeMap;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Role};
use crate::trajectory::{distance, relative_speed, Snapshot, VehicleId};

pub const SPEED_OF_LIGHT: f64 = 2.998e8;
pub const BOLTZMANN: f64 = 1.380649e-23;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub carrier_hz: f64,
    pub reference_distance_m: f64,
    pub path_loss_exponent: f64,
    /// Linear antenna gain.
    pub antenna_gain: f64,
    /// Linear system loss.
    pub system_loss: f64,
    pub shadow_sigma_db: f64,
    pub doppler_threshold_hz: f64,
    pub temperature_k: f64,
    pub bandwidth_hz: f64,
    pub boltzmann: f64,
    /// Link distances below this are clamped before computing path loss.
    pub min_distance_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            carrier_hz: 5.9e9,
            reference_distance_m: 1.0,
            path_loss_exponent: 2.5,
            antenna_gain: 2.0,
            system_loss: 1.0,
            shadow_sigma_db: 4.0,
            doppler_threshold_hz: 1000.0,
            temperature_k: 290.0,
            bandwidth_hz: 1e7,
            boltzmann: BOLTZMANN,
            min_distance_m: 2.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("channel.carrier_hz", self.carrier_hz),
            ("channel.reference_distance_m", self.reference_distance_m),
            ("channel.path_loss_exponent", self.path_loss_exponent),
            ("channel.antenna_gain", self.antenna_gain),
            ("channel.system_loss", self.system_loss),
            ("channel.doppler_threshold_hz", self.doppler_threshold_hz),
            ("channel.temperature_k", self.temperature_k),
            ("channel.bandwidth_hz", self.bandwidth_hz),
            ("channel.boltzmann", self.boltzmann),
            ("channel.min_distance_m", self.min_distance_m),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
        }
        if !(self.shadow_sigma_db.is_finite() && self.shadow_sigma_db >= 0.0) {
            return Err(Error::config("channel.shadow_sigma_db", "must be non-negative"));
        }
        Ok(())
    }

    /// Distance used for path loss: clamped below at `min_distance_m`.
    pub fn link_distance(&self, d: f64) -> f64 {
        d.max(self.min_distance_m)
    }
}

/// Path loss in dB at distance `d` (meters).
pub fn path_loss_db(d: f64, p: &ChannelParams) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("path loss needs a positive distance, got {d}")));
    }
    let decades = (d / p.reference_distance_m).log10();
    Ok(20.0 * decades + 10.0 * p.path_loss_exponent * decades + 20.0 * (p.carrier_hz / 1e9).log10())
}

pub fn doppler_shift_hz(v_rel: f64, p: &ChannelParams) -> f64 {
    v_rel.abs() * p.carrier_hz / SPEED_OF_LIGHT
}

/// Exponential Doppler attenuation in (0, 1], capped at exp(-10).
pub fn doppler_factor(v_rel: f64, p: &ChannelParams) -> f64 {
    (-(doppler_shift_hz(v_rel, p) / p.doppler_threshold_hz).min(10.0)).exp()
}

/// Linear channel gain from transmitter to receiver, excluding transmit power.
pub fn link_gain(d: f64, v_rel: f64, shadow_db: f64, p: &ChannelParams) -> Result<f64> {
    let pl = path_loss_db(d, p)?;
    Ok(10f64.powf(-pl / 10.0) * 10f64.powf(shadow_db / 10.0) * p.antenna_gain * doppler_factor(v_rel, p)
        / p.system_loss)
}

/// Received power in watts. The dB path loss is applied as the linear
/// attenuation 10^(-PL/10).
pub fn received_power(p_t_watts: f64, d: f64, v_rel: f64, shadow_db: f64, p: &ChannelParams) -> Result<f64> {
    if !(p_t_watts > 0.0) {
        return Err(Error::Domain(format!("transmit power must be positive, got {p_t_watts}")));
    }
    Ok(p_t_watts * link_gain(d, v_rel, shadow_db, p)?)
}

/// Thermal noise power k_B T B in watts.
pub fn thermal_noise(p: &ChannelParams) -> f64 {
    p.boltzmann * p.temperature_k * p.bandwidth_hz
}

/// Per-link shadow fading, Gaussian in dB.
///
/// Each directed link gets its own stream keyed on (seed, second, tx, rx), so
/// a sample does not depend on which other links were drawn first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowField {
    pub seed: u64,
    pub second: u32,
    pub sigma_db: f64,
}

impl ShadowField {
    pub fn new(seed: u64, second: u32, sigma_db: f64) -> Self {
        ShadowField {
            seed,
            second,
            sigma_db,
        }
    }

    pub fn disabled() -> Self {
        ShadowField::new(0, 0, 0.0)
    }

    pub fn sample_db(&self, tx: VehicleId, rx: VehicleId) -> f64 {
        if self.sigma_db == 0.0 {
            return 0.0;
        }
        let mut rng = rng::stream(
            self.seed,
            Role::Shadow,
            &[u64::from(self.second), u64::from(tx.0), u64::from(rx.0)],
        );
        Normal::new(0.0, self.sigma_db)
            .expect("sigma validated non-negative")
            .sample(&mut rng)
    }
}

/// Received power over the directed link `tx -> rx` of `snapshot`, with the
/// transmitter's power taken from `powers`.
pub fn link_received_power(
    tx: VehicleId,
    rx: VehicleId,
    snapshot: &Snapshot,
    powers: &BTreeMap<VehicleId, f64>,
    p: &ChannelParams,
    shadow: &ShadowField,
) -> Result<f64> {
    let a = snapshot.get(tx).ok_or(Error::UnknownVehicle(tx))?;
    let b = snapshot.get(rx).ok_or(Error::UnknownVehicle(rx))?;
    let p_t = *powers.get(&tx).ok_or(Error::UnknownVehicle(tx))?;
    received_power(
        p_t,
        p.link_distance(distance(a, b)),
        relative_speed(a, b),
        shadow.sample_db(tx, rx),
        p,
    )
}

/// SINR of the link `tx -> rx` with every other vehicle in the snapshot
/// transmitting concurrently at its own power.
pub fn sinr(
    tx: VehicleId,
    rx: VehicleId,
    snapshot: &Snapshot,
    powers: &BTreeMap<VehicleId, f64>,
    p: &ChannelParams,
    shadow: &ShadowField,
) -> Result<f64> {
    if tx == rx {
        return Err(Error::Domain(format!("SINR of a link from vehicle {tx} to itself")));
    }
    let signal = link_received_power(tx, rx, snapshot, powers, p, shadow)?;
    let mut interference = 0.0;
    for k in snapshot.ids().filter(|&k| k != tx && k != rx) {
        interference += link_received_power(k, rx, snapshot, powers, p, shadow)?;
    }
    Ok(signal / (interference + thermal_noise(p)))
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
