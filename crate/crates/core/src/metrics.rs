//! Pure evaluation of SINR, rates, the adaption gap `Ψ` and the resilience
//! metric. Rates are in bit/s and times in seconds throughout.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{CVector, ChannelState};

/// Unit-modulus tolerance `ε_v` for points labeled as enforcing it.
pub const UNIT_MODULUS_TOL: f64 = 1e-2;

/// Beamformers, RIS phases, allocated rates and SINR slacks.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    /// Aggregate `w_k` (`NL × 1`) per user; AP `n` owns rows `nL..(n+1)L`.
    pub beamformers: Vec<CVector>,
    /// `v` (`M × 1`).
    pub phases: CVector,
    /// `r_k` in bit/s.
    pub rates: Vec<f64>,
    /// `q_k`.
    pub slacks: Vec<f64>,
    pub unit_modulus_enforced: bool,
}

impl DesignPoint {
    /// All-zero point matching the dimensions of `channels`, with unit phases.
    pub fn zeros(channels: &ChannelState) -> Self {
        let k = channels.n_users();
        Self {
            beamformers: vec![CVector::zeros(channels.total_antennas()); k],
            phases: CVector::from_element(channels.n_elements(), Complex64::new(1.0, 0.0)),
            rates: vec![0.0; k],
            slacks: vec![0.0; k],
            unit_modulus_enforced: false,
        }
    }

    pub fn n_users(&self) -> usize {
        self.rates.len()
    }

    /// `w_{n,k}`.
    pub fn beamformer(&self, n: usize, k: usize, antennas: usize) -> CVector {
        self.beamformers[k].rows(n * antennas, antennas).into_owned()
    }

    /// Transmit power of AP `n`, `Σ_k ‖w_{n,k}‖²`.
    pub fn ap_power(&self, n: usize, antennas: usize) -> f64 {
        self.beamformers
            .iter()
            .map(|w| w.rows(n * antennas, antennas).norm_squared())
            .sum()
    }

    /// `max_m ||v_m| − 1|`, zero without RIS.
    pub fn max_modulus_deviation(&self) -> f64 {
        self.phases
            .iter()
            .map(|v| (v.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Labels the point as unit-modulus if every `|v_m|` is within `ε_v` of one.
    pub fn enforce_unit_modulus_label(&mut self) -> bool {
        self.unit_modulus_enforced = self.max_modulus_deviation() <= UNIT_MODULUS_TOL;
        self.unit_modulus_enforced
    }

    pub fn check_dimensions(&self, channels: &ChannelState) -> Result<()> {
        let k = channels.n_users();
        if self.beamformers.len() != k
            || self.rates.len() != k
            || self.slacks.len() != k
            || self
                .beamformers
                .iter()
                .any(|w| w.len() != channels.total_antennas())
            || self.phases.len() != channels.n_elements()
        {
            return Err(Error::Dimension(format!(
                "design point does not match N={} L={} K={} M={}",
                channels.n_aps(),
                channels.antennas_per_ap(),
                k,
                channels.n_elements()
            )));
        }
        if self.slacks.iter().any(|q| *q < 0.0) {
            return Err(Error::Contract("slacks must be nonnegative".into()));
        }
        Ok(())
    }
}

/// `|a^H w|` style inner product `Σ conj(a_i) w_i`.
pub fn inner(a: &CVector, w: &CVector) -> Complex64 {
    a.iter().zip(w.iter()).map(|(a, w)| a.conj() * w).sum()
}

fn sinr_with_channel(a: &CVector, beamformers: &[CVector], k: usize, noise: f64) -> f64 {
    let signal = inner(a, &beamformers[k]).norm_sqr();
    let interference: f64 = beamformers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k)
        .map(|(_, w)| inner(a, w).norm_sqr())
        .sum();
    signal / (interference + noise)
}

/// `Γ_k = |a_k^H w_k|² / (Σ_{i≠k} |a_k^H w_i|² + σ²)` with
/// `a_k = h_k + G_k v`.
pub fn sinr(channels: &ChannelState, point: &DesignPoint, user: usize, noise_power_w: f64) -> f64 {
    let a = channels.effective_channel(user, &point.phases);
    sinr_with_channel(&a, &point.beamformers, user, noise_power_w)
}

/// SINR of every user, evaluating the effective channels once.
pub fn sinr_all(channels: &ChannelState, point: &DesignPoint, noise_power_w: f64) -> Vec<f64> {
    channels
        .effective_channels(&point.phases)
        .iter()
        .enumerate()
        .map(|(k, a)| sinr_with_channel(a, &point.beamformers, k, noise_power_w))
        .collect()
}

/// `B · log2(1 + Γ)`.
pub fn capacity(sinr: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * sinr.ln_1p() / std::f64::consts::LN_2
}

/// `B · log2(1 + Γ_k)` for user `k`.
pub fn achievable_rate(
    channels: &ChannelState,
    point: &DesignPoint,
    user: usize,
    bandwidth_hz: f64,
    noise_power_w: f64,
) -> f64 {
    capacity(sinr(channels, point, user, noise_power_w), bandwidth_hz)
}

/// `Ψ = Σ_k |r_k / r_k^des − 1|`.
pub fn adaption_gap(rates: &[f64], qos: &[f64]) -> f64 {
    rates
        .iter()
        .zip(qos)
        .map(|(r, d)| (r / d - 1.0).abs())
        .sum()
}

/// `(1/K) Σ_k r_k / r_k^des`, used for both absorption and adaption.
pub fn normalized_throughput(rates: &[f64], qos: &[f64]) -> f64 {
    if rates.is_empty() {
        return 0.0;
    }
    rates.iter().zip(qos).map(|(r, d)| r / d).sum::<f64>() / rates.len() as f64
}

/// Weights `(λ1, λ2, λ3)` of the combined metric and the tolerable recovery
/// time `T_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResilienceWeights {
    pub lambda_abs: f64,
    pub lambda_ada: f64,
    pub lambda_rec: f64,
    pub t0_tolerable_s: f64,
}

impl ResilienceWeights {
    pub fn new(lambda_abs: f64, lambda_ada: f64, lambda_rec: f64, t0_tolerable_s: f64) -> Result<Self> {
        let w = Self {
            lambda_abs,
            lambda_ada,
            lambda_rec,
            t0_tolerable_s,
        };
        w.validate()?;
        Ok(w)
    }

    /// Reactionary weighting with `λ1 = 0` and `λ3 = 1 − λ2`.
    pub fn reactionary(lambda_ada: f64, t0_tolerable_s: f64) -> Result<Self> {
        Self::new(0.0, lambda_ada, 1.0 - lambda_ada, t0_tolerable_s)
    }

    pub fn validate(&self) -> Result<()> {
        let l = [self.lambda_abs, self.lambda_ada, self.lambda_rec];
        if l.iter().any(|x| !(*x >= 0.0)) || !(self.t0_tolerable_s >= 0.0) {
            return Err(Error::InvalidConfig(
                "resilience weights and T0 must be nonnegative".into(),
            ));
        }
        if (l.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "resilience weights sum to {}, expected 1",
                l.iter().sum::<f64>()
            )));
        }
        Ok(())
    }
}

impl Default for ResilienceWeights {
    fn default() -> Self {
        Self {
            lambda_abs: 0.0,
            lambda_ada: 0.5,
            lambda_rec: 0.5,
            t0_tolerable_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub time_s: f64,
    pub rates: Vec<f64>,
    pub psi: f64,
    pub label: String,
}

/// Post-outage timeline anchored at the outage time `t_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResilienceTrace {
    pub outage_time_s: f64,
    pub samples: Vec<TraceSample>,
    pub pre_outage_rates: Vec<f64>,
}

impl ResilienceTrace {
    pub fn new(outage_time_s: f64, pre_outage_rates: Vec<f64>) -> Self {
        Self {
            outage_time_s,
            samples: Vec::new(),
            pre_outage_rates,
        }
    }

    /// Appends a sample, recomputing `Ψ` from the rates.
    pub fn push(&mut self, time_s: f64, rates: Vec<f64>, qos: &[f64], label: impl Into<String>) -> Result<()> {
        let lower = self.samples.last().map(|s| s.time_s);
        match lower {
            Some(t) if time_s <= t => {
                return Err(Error::Contract(format!(
                    "sample time {time_s} not after previous {t}"
                )))
            }
            None if time_s < self.outage_time_s => {
                return Err(Error::Contract(format!(
                    "first sample at {time_s} precedes outage at {}",
                    self.outage_time_s
                )))
            }
            _ => {}
        }
        let psi = adaption_gap(&rates, qos);
        self.samples.push(TraceSample {
            time_s,
            rates,
            psi,
            label: label.into(),
        });
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let mut prev = None;
        for s in &self.samples {
            match prev {
                None if s.time_s < self.outage_time_s => {
                    return Err(Error::Contract("first sample precedes outage".into()))
                }
                Some(p) if s.time_s <= p => {
                    return Err(Error::Contract("sample times not strictly increasing".into()))
                }
                _ => {}
            }
            prev = Some(s.time_s);
        }
        Ok(())
    }

    pub fn r_ada(&self, index: usize, qos: &[f64]) -> f64 {
        normalized_throughput(&self.samples[index].rates, qos)
    }

    /// CSV with header `time_s,psi,r_ada,label,r_1..r_K`; numbers carry 17
    /// significant digits.
    pub fn to_csv(&self, qos: &[f64]) -> String {
        let k = qos.len();
        let mut out = String::from("time_s,psi,r_ada,label");
        for i in 1..=k {
            write!(out, ",r_{i}").unwrap();
        }
        out.push('\n');
        for (i, s) in self.samples.iter().enumerate() {
            write!(
                out,
                "{},{},{},{}",
                fmt17(s.time_s),
                fmt17(s.psi),
                fmt17(self.r_ada(i, qos)),
                s.label.replace([',', '\n'], ";")
            )
            .unwrap();
            for r in &s.rates {
                write!(out, ",{}", fmt17(*r)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// 17 significant digits in scientific notation.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// One parsed row of a trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time_s: f64,
    pub psi: f64,
    pub r_ada: f64,
    pub label: String,
    pub rates: Vec<f64>,
}

pub fn parse_trace_csv(text: &str) -> std::result::Result<Vec<TraceRow>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty trace")?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[..4] != ["time_s", "psi", "r_ada", "label"] {
        return Err(format!("unexpected header `{header}`"));
    }
    let k = cols.len() - 4;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != k + 4 {
            return Err(format!("row {} has {} fields, expected {}", i + 1, f.len(), k + 4));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1));
        rows.push(TraceRow {
            time_s: num(f[0])?,
            psi: num(f[1])?,
            r_ada: num(f[2])?,
            label: f[3].to_string(),
            rates: f[4..].iter().map(|s| num(s)).collect::<std::result::Result<_, _>>()?,
        });
    }
    Ok(rows)
}

/// Absorption, adaption, time-to-recovery and their weighted combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResilienceComponents {
    pub r_abs: f64,
    pub r_ada: f64,
    pub r_rec: f64,
    pub r: f64,
}

/// `r_rec = 1` if `t_n − t_0 ≤ T_0`, else `T_0 / (t_n − t_0)`.
pub fn recovery_score(elapsed_s: f64, t0_tolerable_s: f64) -> f64 {
    if elapsed_s <= t0_tolerable_s {
        1.0
    } else {
        t0_tolerable_s / elapsed_s
    }
}

pub fn resilience_components(
    trace: &ResilienceTrace,
    recovery_index: usize,
    qos: &[f64],
    weights: &ResilienceWeights,
) -> Result<ResilienceComponents> {
    let sample = trace.samples.get(recovery_index).ok_or_else(|| {
        Error::Contract(format!(
            "recovery index {recovery_index} out of range ({} samples)",
            trace.samples.len()
        ))
    })?;
    let elapsed = sample.time_s - trace.outage_time_s;
    if elapsed < 0.0 {
        return Err(Error::Contract(format!(
            "recovery time {} precedes outage {}",
            sample.time_s, trace.outage_time_s
        )));
    }
    let r_abs = normalized_throughput(&trace.pre_outage_rates, qos);
    let r_ada = normalized_throughput(&sample.rates, qos);
    let r_rec = recovery_score(elapsed, weights.t0_tolerable_s);
    Ok(ResilienceComponents {
        r_abs,
        r_ada,
        r_rec,
        r: weights.lambda_abs * r_abs + weights.lambda_ada * r_ada + weights.lambda_rec * r_rec,
    })
}

/// Best combined resilience over all samples and its index; ties go to the
/// earliest sample.
pub fn best_resilience(
    trace: &ResilienceTrace,
    qos: &[f64],
    weights: &ResilienceWeights,
) -> Result<(f64, usize)> {
    if trace.samples.is_empty() {
        return Err(Error::Contract("empty trace".into()));
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for i in 0..trace.samples.len() {
        let r = resilience_components(trace, i, qos, weights)?.r;
        if r > best.0 {
            best = (r, i);
        }
    }
    Ok(best)
}
