use num_complex::Complex64;

use crate::metrics::{adaption_gap, capacity, sinr_all, DesignPoint};
use crate::system::{CVector, ChannelState, SystemConfig};

/// Rate adaption: with `(w, v)` fixed, `q_k = Γ_k` and
/// `r_k = min(r_k^des, B log2(1 + Γ_k))`.
pub fn rate_adaption(channels: &ChannelState, point: &DesignPoint, config: &SystemConfig) -> DesignPoint {
    let gamma = sinr_all(channels, point, config.noise_power_w);
    let mut out = point.clone();
    for (k, g) in gamma.into_iter().enumerate() {
        out.slacks[k] = g;
        out.rates[k] = capacity(g, config.bandwidth_hz).min(config.qos_rate_bps[k]);
    }
    out
}

/// Makes a solver output exactly feasible: phases are clipped to the unit
/// disk, AP beamformers are scaled down to their power budget, slacks are set
/// to the recomputed SINR and rates are clipped to `[0, capacity]`.
pub fn certify(channels: &ChannelState, point: &DesignPoint, config: &SystemConfig) -> DesignPoint {
    let mut out = point.clone();
    for v in out.phases.iter_mut() {
        let m = v.norm();
        if m > 1.0 {
            *v /= m;
        }
    }
    let l = channels.antennas_per_ap();
    for n in 0..channels.n_aps() {
        let p = out.ap_power(n, l);
        let budget = config.max_power_w_per_ap[n];
        if p > budget {
            let s = (budget / p).sqrt() * (1.0 - 1e-12);
            for w in out.beamformers.iter_mut() {
                w.rows_mut(n * l, l).scale_mut(s);
            }
        }
    }
    let gamma = sinr_all(channels, &out, config.noise_power_w);
    for (k, g) in gamma.into_iter().enumerate() {
        out.slacks[k] = g;
        let cap = capacity(g, config.bandwidth_hz);
        out.rates[k] = out.rates[k].clamp(0.0, cap);
    }
    out.enforce_unit_modulus_label();
    out
}

/// Maximum-ratio beamformers `w_{n,k} ∝ a_{n,k}`, each AP splitting its budget
/// equally over its users, followed by rate adaption.
pub fn cold_start(channels: &ChannelState, phases: CVector, config: &SystemConfig) -> DesignPoint {
    let mut point = DesignPoint::zeros(channels);
    point.phases = phases;
    let l = channels.antennas_per_ap();
    let k = channels.n_users();
    let eff = channels.effective_channels(&point.phases);
    for n in 0..channels.n_aps() {
        let per_user = config.max_power_w_per_ap[n] / k as f64;
        for (user, a) in eff.iter().enumerate() {
            let block = a.rows(n * l, l);
            let norm = block.norm();
            if norm > 0.0 {
                let s = Complex64::new(per_user.sqrt() / norm, 0.0);
                point.beamformers[user].rows_mut(n * l, l).copy_from(&(block * s));
            }
        }
    }
    let mut point = rate_adaption(channels, &point, config);
    point.enforce_unit_modulus_label();
    point
}

/// `Ψ + C Σ (1 − |v_m|²)`; the penalty is omitted when `penalty` is zero.
pub fn merit(point: &DesignPoint, qos: &[f64], penalty: f64) -> f64 {
    let psi = adaption_gap(&point.rates, qos);
    if penalty == 0.0 {
        psi
    } else {
        psi + crate::sca::programs::penalty_value(&point.phases, penalty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::CMatrix;

    fn single(h: f64, p: f64) -> (ChannelState, SystemConfig) {
        let ch = ChannelState::from_parts(
            1,
            1,
            1,
            0,
            vec![CVector::from_element(1, Complex64::new(h, 0.0))],
            vec![CMatrix::zeros(1, 0)],
            vec![CVector::zeros(0)],
        )
        .unwrap();
        let mut cfg = SystemConfig::default().with_dimensions(1, 1, 1, 0);
        cfg.noise_power_w = 1.0;
        cfg.bandwidth_hz = 1.0;
        cfg.max_power_w_per_ap = vec![p];
        cfg.qos_rate_bps = vec![1.0];
        (ch, cfg)
    }

    #[test]
    fn mrt_uses_full_budget_and_meets_qos() {
        let (ch, cfg) = single(1.0, 3.0);
        let p = cold_start(&ch, CVector::zeros(0), &cfg);
        assert!((p.ap_power(0, 1) - 3.0).abs() < 1e-12);
        assert!((p.slacks[0] - 3.0).abs() < 1e-12);
        assert_eq!(p.rates[0], 1.0);
    }

    #[test]
    fn blocked_user_gets_zero_rate() {
        let (ch, cfg) = single(0.0, 3.0);
        let p = cold_start(&ch, CVector::zeros(0), &cfg);
        assert_eq!(p.rates[0], 0.0);
        assert_eq!(merit(&p, &cfg.qos_rate_bps, 0.0), 1.0);
    }

    #[test]
    fn certify_scales_power_and_clips_rates() {
        let (ch, cfg) = single(1.0, 3.0);
        let mut p = cold_start(&ch, CVector::zeros(0), &cfg);
        p.beamformers[0][0] *= 2.0;
        p.rates[0] = 5.0;
        let c = certify(&ch, &p, &cfg);
        assert!(c.ap_power(0, 1) <= 3.0);
        assert!(c.rates[0] <= capacity(c.slacks[0], 1.0));
    }
}
