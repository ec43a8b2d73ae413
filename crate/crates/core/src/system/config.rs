use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Large-scale attenuation as a function of link distance.
pub trait Pathloss: Send + Sync {
    /// Linear power gain at `distance_m` (already clamped by the caller).
    fn power_gain(&self, distance_m: f64) -> f64;
}

/// Far-field power law `β(d) = β₀ · (d / d₀)^(−α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLaw {
    /// `β₀` in dB at the reference distance.
    pub gain_at_ref_db: f64,
    /// `d₀` in meters.
    pub ref_distance_m: f64,
    /// `α`.
    pub exponent: f64,
}

impl PowerLaw {
    pub const fn new(gain_at_ref_db: f64, ref_distance_m: f64, exponent: f64) -> Self {
        Self {
            gain_at_ref_db,
            ref_distance_m,
            exponent,
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.ref_distance_m > 0.0) || !self.gain_at_ref_db.is_finite() || !(self.exponent >= 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "{what}: reference distance must be > 0 and exponent >= 0"
            )));
        }
        Ok(())
    }
}

impl Pathloss for PowerLaw {
    fn power_gain(&self, distance_m: f64) -> f64 {
        db_to_linear(self.gain_at_ref_db) * (distance_m / self.ref_distance_m).powf(-self.exponent)
    }
}

/// Converts decibels to a linear power ratio. Integral exponents of ten are
/// computed exactly so that e.g. −130 dB maps to the literal `1e-13`.
pub fn db_to_linear(db: f64) -> f64 {
    let e = db / 10.0;
    if e.fract() == 0.0 && e.abs() < 300.0 {
        let p = 10f64.powi(e.abs() as i32);
        if e >= 0.0 {
            p
        } else {
            1.0 / p
        }
    } else {
        10f64.powf(e)
    }
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// All scenario constants of one system instance.
///
/// Defaults reproduce the full-scale setup: 3 APs with 14 antennas, 14
/// users, a 14×14 RIS with quarter-wavelength spacing at 3 GHz, 10 MHz
/// bandwidth, −100 dBm noise, 40 dBm per AP and 12 Mbit/s per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_aps: usize,
    pub antennas_per_ap: usize,
    pub n_users: usize,
    /// Must be a perfect square (grid layout). Zero means "no RIS".
    pub n_ris_elements: usize,
    pub bandwidth_hz: f64,
    pub noise_power_w: f64,
    pub max_power_w_per_ap: Vec<f64>,
    pub qos_rate_bps: Vec<f64>,
    pub wavelength_m: f64,
    pub ris_element_spacing_m: f64,
    pub area_half_m: f64,
    pub shadowing_std_db: f64,
    pub blockage_prob: f64,
    pub rng_seed: u64,
    pub direct_pathloss: PowerLaw,
    pub ap_ris_pathloss: PowerLaw,
    pub ris_user_pathloss: PowerLaw,
    pub min_distance_m: f64,
}

pub const DEFAULT_DIRECT_PATHLOSS: PowerLaw = PowerLaw::new(-60.0, 1.0, 3.5);
pub const DEFAULT_AP_RIS_PATHLOSS: PowerLaw = PowerLaw::new(-30.0, 1.0, 2.2);
pub const DEFAULT_RIS_USER_PATHLOSS: PowerLaw = PowerLaw::new(-30.0, 1.0, 2.2);

impl Default for SystemConfig {
    fn default() -> Self {
        let n_aps = 3;
        let n_users = 14;
        Self {
            n_aps,
            antennas_per_ap: 14,
            n_users,
            n_ris_elements: 196,
            bandwidth_hz: 10e6,
            noise_power_w: dbm_to_watts(-100.0),
            max_power_w_per_ap: vec![dbm_to_watts(40.0); n_aps],
            qos_rate_bps: vec![12e6; n_users],
            wavelength_m: 0.1,
            ris_element_spacing_m: 0.025,
            area_half_m: 250.0,
            shadowing_std_db: 8.0,
            blockage_prob: 0.12,
            rng_seed: 0,
            direct_pathloss: DEFAULT_DIRECT_PATHLOSS,
            ap_ris_pathloss: DEFAULT_AP_RIS_PATHLOSS,
            ris_user_pathloss: DEFAULT_RIS_USER_PATHLOSS,
            min_distance_m: 1.0,
        }
    }
}

impl SystemConfig {
    /// Shrinks or grows the network while keeping every other constant;
    /// per-AP powers and per-user QoS targets are resized with their first value.
    pub fn with_dimensions(mut self, n_aps: usize, antennas: usize, n_users: usize, m: usize) -> Self {
        let p = self.max_power_w_per_ap.first().copied().unwrap_or(10.0);
        let r = self.qos_rate_bps.first().copied().unwrap_or(12e6);
        self.n_aps = n_aps;
        self.antennas_per_ap = antennas;
        self.n_users = n_users;
        self.n_ris_elements = m;
        self.max_power_w_per_ap = vec![p; n_aps];
        self.qos_rate_bps = vec![r; n_users];
        self
    }

    /// Side length of the square RIS grid.
    pub fn ris_grid_side(&self) -> usize {
        integer_sqrt(self.n_ris_elements)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_aps == 0 || self.antennas_per_ap == 0 || self.n_users == 0 {
            return bad("n_aps, antennas_per_ap and n_users must all be >= 1".into());
        }
        let side = self.ris_grid_side();
        if side * side != self.n_ris_elements {
            return bad(format!(
                "n_ris_elements = {} is not a perfect square",
                self.n_ris_elements
            ));
        }
        for (name, v) in [
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_power_w", self.noise_power_w),
            ("wavelength_m", self.wavelength_m),
            ("ris_element_spacing_m", self.ris_element_spacing_m),
            ("area_half_m", self.area_half_m),
            ("min_distance_m", self.min_distance_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if self.max_power_w_per_ap.len() != self.n_aps {
            return bad(format!(
                "max_power_w_per_ap has length {}, expected {}",
                self.max_power_w_per_ap.len(),
                self.n_aps
            ));
        }
        if self.qos_rate_bps.len() != self.n_users {
            return bad(format!(
                "qos_rate_bps has length {}, expected {}",
                self.qos_rate_bps.len(),
                self.n_users
            ));
        }
        if self.max_power_w_per_ap.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return bad("every max_power_w_per_ap entry must be > 0".into());
        }
        if self.qos_rate_bps.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return bad("every qos_rate_bps entry must be > 0".into());
        }
        if !(self.shadowing_std_db >= 0.0) {
            return bad("shadowing_std_db must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.blockage_prob) {
            return bad(format!("blockage_prob = {} outside [0, 1]", self.blockage_prob));
        }
        self.direct_pathloss.validate("direct_pathloss")?;
        self.ap_ris_pathloss.validate("ap_ris_pathloss")?;
        self.ris_user_pathloss.validate("ris_user_pathloss")?;
        Ok(())
    }
}

fn integer_sqrt(n: usize) -> usize {
    let mut s = (n as f64).sqrt() as usize;
    while s * s > n {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= n {
        s += 1;
    }
    s
}
