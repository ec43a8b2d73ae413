//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ris_resilience::metrics::DesignPoint;
use ris_resilience::system::{CMatrix, CVector, ChannelState, SystemConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `CN(0, var)` sample.
pub fn cn<R: Rng>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Desk-scale system with `M` left unchecked (any `M` is allowed here).
pub fn small_config(n: usize, l: usize, k: usize, m: usize) -> SystemConfig {
    let mut c = SystemConfig::default().with_dimensions(n, l, k, 0);
    c.n_ris_elements = m;
    c
}

/// i.i.d. Rayleigh channels: direct links with variance `direct_var`, both
/// RIS hops with variance `ris_var`.
pub fn iid_channels<R: Rng>(
    rng: &mut R,
    config: &SystemConfig,
    direct_var: f64,
    ris_var: f64,
) -> ChannelState {
    let (n, l, k, m) = (
        config.n_aps,
        config.antennas_per_ap,
        config.n_users,
        config.n_ris_elements,
    );
    let direct = (0..n * k).map(|_| CVector::from_fn(l, |_, _| cn(rng, direct_var))).collect();
    let ap_ris = (0..n).map(|_| CMatrix::from_fn(l, m, |_, _| cn(rng, ris_var))).collect();
    let ris_user = (0..k).map(|_| CVector::from_fn(m, |_, _| cn(rng, ris_var))).collect();
    ChannelState::from_parts(n, l, k, m, direct, ap_ris, ris_user).unwrap()
}

/// `a_k = h_k + H diag(g_k) v`, assembled entry by entry.
pub fn oracle_channel(ch: &ChannelState, k: usize, v: &CVector) -> Vec<Complex64> {
    let l = ch.antennas_per_ap();
    let mut a = Vec::with_capacity(ch.total_antennas());
    for n in 0..ch.n_aps() {
        let h = ch.direct(n, k);
        let hn = ch.ap_to_ris(n);
        let g = ch.ris_to_user(k);
        for j in 0..l {
            let mut s = h[j];
            for m in 0..ch.n_elements() {
                s += hn[(j, m)] * g[m] * v[m];
            }
            a.push(s);
        }
    }
    a
}

/// `a^H w`.
pub fn oracle_inner(a: &[Complex64], w: &CVector) -> Complex64 {
    a.iter().zip(w.iter()).map(|(a, w)| a.conj() * w).sum()
}

/// `(|a_k^H w_k|², Σ_{i≠k} |a_k^H w_i|²)`.
pub fn oracle_signal_interference(ch: &ChannelState, p: &DesignPoint, k: usize) -> (f64, f64) {
    let a = oracle_channel(ch, k, &p.phases);
    let mut sig = 0.0;
    let mut intf = 0.0;
    for (i, w) in p.beamformers.iter().enumerate() {
        let x = oracle_inner(&a, w).norm_sqr();
        if i == k {
            sig = x;
        } else {
            intf += x;
        }
    }
    (sig, intf)
}

pub fn oracle_sinr(ch: &ChannelState, p: &DesignPoint, k: usize, noise: f64) -> f64 {
    let (s, i) = oracle_signal_interference(ch, p, k);
    s / (i + noise)
}

/// Random point: beamformers filling a random fraction of each AP budget,
/// phases on the unit circle, slacks `Γ_k · U(0.5, 2)` and rates at half the
/// matching capacity.
pub fn random_point<R: Rng>(rng: &mut R, ch: &ChannelState, config: &SystemConfig) -> DesignPoint {
    let mut p = DesignPoint::zeros(ch);
    let l = ch.antennas_per_ap();
    for w in p.beamformers.iter_mut() {
        *w = CVector::from_fn(ch.total_antennas(), |_, _| cn(rng, 1.0));
    }
    for n in 0..ch.n_aps() {
        let power: f64 = p.beamformers.iter().map(|w| w.rows(n * l, l).norm_squared()).sum();
        let s = (config.max_power_w_per_ap[n] * rng.gen_range(0.2..1.0) / power).sqrt();
        for w in p.beamformers.iter_mut() {
            w.rows_mut(n * l, l).scale_mut(s);
        }
    }
    p.phases = CVector::from_fn(ch.n_elements(), |_, _| {
        Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
    });
    for k in 0..ch.n_users() {
        let g = oracle_sinr(ch, &p, k, config.noise_power_w);
        p.slacks[k] = g * rng.gen_range(0.5..2.0);
        p.rates[k] = 0.5 * config.bandwidth_hz * (1.0 + p.slacks[k]).log2();
    }
    p
}

/// Per-AP transmit power.
pub fn ap_powers(ch: &ChannelState, p: &DesignPoint) -> Vec<f64> {
    let l = ch.antennas_per_ap();
    (0..ch.n_aps())
        .map(|n| p.beamformers.iter().map(|w| w.rows(n * l, l).norm_squared()).sum())
        .collect()
}

/// Checks power budgets, `r_k ≤ B log2(1 + Γ_k)` and `r_k ≥ 0` with the
/// oracle SINR; returns a description of the first violation.
pub fn certification_error(ch: &ChannelState, p: &DesignPoint, config: &SystemConfig) -> Option<String> {
    for (n, pw) in ap_powers(ch, p).into_iter().enumerate() {
        if pw > config.max_power_w_per_ap[n] + 1e-7 {
            return Some(format!("AP {n} power {pw} above {}", config.max_power_w_per_ap[n]));
        }
    }
    for k in 0..ch.n_users() {
        let g = oracle_sinr(ch, p, k, config.noise_power_w);
        let cap = config.bandwidth_hz * (1.0 + g).log2();
        let r = p.rates[k];
        if r < 0.0 || r > cap + 1e-6 * cap.max(1.0) {
            return Some(format!("user {k}: rate {r} vs capacity {cap}"));
        }
    }
    None
}
