mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use ris_resilience::conic::{solve, Constraint, LinExpr};
use ris_resilience::metrics::{adaption_gap, DesignPoint};
use ris_resilience::sca::{
    alternating_optimize, beamformer_var, build_beamforming_program, build_phase_program,
    cold_start, rate_adaption, ScaSettings, StopReason, Subproblem, SyntheticClock,
    SyntheticCosts,
};
use ris_resilience::system::{CVector, ChannelState, SystemConfig};

/// `Σ_{i≠k} |a_k^H w_i|² + σ² − |a_k^H w_k|² / q_k` and the magnitude of
/// its terms.
fn exact_row(ch: &ChannelState, p: &DesignPoint, k: usize, noise: f64) -> (f64, f64) {
    let (s, i) = oracle_signal_interference(ch, p, k);
    let q = p.slacks[k];
    (i + noise - s / q, i + noise + s / q)
}

fn instance(seed: u64) -> (ChannelState, SystemConfig, DesignPoint) {
    let mut r = rng(seed);
    let cfg = small_config(2, 2, 3, 8);
    let ch = iid_channels(&mut r, &cfg, 1e-11, 1e-6);
    let p = random_point(&mut r, &ch, &cfg);
    (ch, cfg, p)
}

fn assert_tight(seed: u64) {
    let (ch, cfg, p) = instance(seed);
    let bf = build_beamforming_program(&ch, &p, &cfg).unwrap();
    let ph = build_phase_program(&ch, &p, &cfg, 3.0).unwrap();
    for k in 0..3 {
        let (exact, mag) = exact_row(&ch, &p, k, cfg.noise_power_w);
        for prog in [&bf, &ph] {
            let lin = prog.sinr_constraint_value(k, &p).expect("user not pinned");
            assert!(
                (lin - exact).abs() <= 1e-9 * mag,
                "seed {seed} user {k} {:?}: {lin} vs {exact}",
                prog.kind
            );
        }
    }
}

#[test]
fn linearized_rows_touch_the_exact_rows() {
    for seed in 0..30 {
        assert_tight(seed);
    }
}

#[test]
fn linearized_rows_bound_the_exact_rows_from_above() {
    // The first-order surrogate of |x|²/q is a global under-estimator, so the
    // linearized row dominates the exact one everywhere.
    let (ch, cfg, p) = instance(3);
    let bf = build_beamforming_program(&ch, &p, &cfg).unwrap();
    let mut r = rng(99);
    for _ in 0..20 {
        let q = random_point(&mut r, &ch, &cfg);
        let mut moved = q.clone();
        moved.phases = p.phases.clone();
        for k in 0..3 {
            let (exact, mag) = exact_row(&ch, &moved, k, cfg.noise_power_w);
            let lin = bf.sinr_constraint_value(k, &moved).unwrap();
            assert!(lin >= exact - 1e-9 * mag);
        }
    }
}

#[test]
fn encode_decode_round_trip() {
    let (ch, cfg, p) = instance(5);
    for prog in [
        build_beamforming_program(&ch, &p, &cfg).unwrap(),
        build_phase_program(&ch, &p, &cfg, 1.0).unwrap(),
    ] {
        let back = prog.decode(&prog.encode(&p));
        for k in 0..3 {
            assert!((back.rates[k] - p.rates[k]).abs() <= 1e-9 * p.rates[k]);
            assert!((back.slacks[k] - p.slacks[k]).abs() <= 1e-12 * p.slacks[k]);
            assert!((&back.beamformers[k] - &p.beamformers[k]).norm() <= 1e-12 * p.beamformers[k].norm());
        }
        assert!((&back.phases - &p.phases).norm() < 1e-12);
    }
}

#[test]
fn zero_slack_is_rejected_for_served_users() {
    let (ch, cfg, mut p) = instance(8);
    p.slacks[1] = 0.0;
    assert!(build_beamforming_program(&ch, &p, &cfg).is_err());
    assert!(build_phase_program(&ch, &p, &cfg, 1.0).is_err());
}

#[test]
fn single_user_reaches_maximum_ratio_rate() {
    // One user, one AP, no RIS: the best rate is B log2(1 + P‖h‖²/σ²).
    for seed in 0..5 {
        let mut r = rng(seed);
        let mut cfg = small_config(1, 4, 1, 0);
        let ch = iid_channels(&mut r, &cfg, 1e-11, 0.0);
        let h = ch.direct(0, 0);
        let p = cfg.max_power_w_per_ap[0];
        let cap = cfg.bandwidth_hz * (1.0 + p * h.norm_squared() / cfg.noise_power_w).log2();
        cfg.qos_rate_bps = vec![2.0 * cap];
        let mut start = DesignPoint::zeros(&ch);
        start.beamformers[0] = CVector::from_fn(4, |_, _| cn(&mut r, 0.01));
        let start = rate_adaption(&ch, &start, &cfg);
        let settings = ScaSettings::for_users(1).converged(1e-10);
        let out = alternating_optimize(&ch, &cfg, &start, &settings, &mut SyntheticClock::new(SyntheticCosts::default()))
            .unwrap();
        assert_ne!(out.stop, StopReason::Aborted);
        let psi = adaption_gap(&out.final_point.rates, &cfg.qos_rate_bps);
        assert!((psi - 0.5).abs() < 1e-6, "seed {seed}: Ψ = {psi}");
    }
}

#[test]
fn all_zero_channels_pin_every_user() {
    let cfg = small_config(2, 2, 3, 4);
    let ch = iid_channels(&mut rng(1), &cfg, 0.0, 0.0);
    let start = cold_start(&ch, CVector::from_element(4, Complex64::new(1.0, 0.0)), &cfg);
    let prog = build_beamforming_program(&ch, &start, &cfg).unwrap();
    assert!(prog.pinned.iter().all(|p| *p));
    let out = alternating_optimize(&ch, &cfg, &start, &ScaSettings::for_users(3), &mut SyntheticClock::new(SyntheticCosts::default()))
        .unwrap();
    assert_ne!(out.stop, StopReason::Aborted);
    assert!(out.events.iter().all(|e| e.accepted));
    assert_eq!(out.final_point.rates, vec![0.0; 3]);
    assert_eq!(adaption_gap(&out.final_point.rates, &cfg.qos_rate_bps), 3.0);
}

#[test]
fn phase_step_without_penalty_or_ris_keeps_the_rates() {
    let mut r = rng(4);
    let cfg = small_config(2, 2, 3, 4);
    let ch = iid_channels(&mut r, &cfg, 1e-11, 0.0);
    let start = rate_adaption(&ch, &random_point(&mut r, &ch, &cfg), &cfg);
    let prog = build_phase_program(&ch, &start, &cfg, 0.0).unwrap();
    let rep = solve(&prog.program, &ScaSettings::default().solve);
    assert!(rep.is_optimal(), "{:?}", rep.status);
    let out = prog.decode(rep.primal.as_ref().unwrap());
    let before = adaption_gap(&start.rates, &cfg.qos_rate_bps);
    let after = adaption_gap(&out.rates, &cfg.qos_rate_bps);
    assert!((before - after).abs() < 1e-6, "{before} vs {after}");
}

#[test]
fn pinned_beamformers_reproduce_rate_adaption() {
    let (ch, cfg, p) = instance(11);
    let ra = rate_adaption(&ch, &p, &cfg);
    let mut prog = build_beamforming_program(&ch, &ra, &cfg).unwrap();
    let s = cfg.max_power_w_per_ap.iter().cloned().fold(0.0, f64::max).sqrt();
    for k in 0..3 {
        for j in 0..ch.total_antennas() {
            let v = beamformer_var(&prog, k, j).unwrap();
            let w = ra.beamformers[k][j] / s;
            prog.program
                .add_constraint("pin", Constraint::Eq(LinExpr::var(v.re).with_constant(-w.re)));
            prog.program
                .add_constraint("pin", Constraint::Eq(LinExpr::var(v.im).with_constant(-w.im)));
        }
    }
    let rep = solve(&prog.program, &ScaSettings::default().solve);
    assert!(rep.is_optimal());
    let out = prog.decode(rep.primal.as_ref().unwrap());
    let a = adaption_gap(&out.rates, &cfg.qos_rate_bps);
    let b = adaption_gap(&ra.rates, &cfg.qos_rate_bps);
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn beamforming_solutions_are_certified() {
    for seed in 0..5 {
        let (ch, cfg, p) = instance(100 + seed);
        let start = rate_adaption(&ch, &p, &cfg);
        let mut settings = ScaSettings::for_users(3);
        settings.first_subproblem = Subproblem::Beamforming;
        let out = alternating_optimize(&ch, &cfg, &start, &settings, &mut SyntheticClock::new(SyntheticCosts::default()))
            .unwrap();
        for e in &out.events {
            assert_eq!(certification_error(&ch, &e.point, &cfg), None);
        }
        assert!(out.final_point.max_modulus_deviation() <= 1e-2);
    }
}

#[test]
fn descent_within_each_pass() {
    let mut r = rng(21);
    let cfg = small_config(2, 2, 3, 4);
    let ch = iid_channels(&mut r, &cfg, 1e-12, 1e-6);
    let start = rate_adaption(&ch, &random_point(&mut r, &ch, &cfg), &cfg);
    let mut settings = ScaSettings::for_users(3);
    settings.inner_budget_w = 3;
    settings.inner_budget_v = 3;
    let out = alternating_optimize(&ch, &cfg, &start, &settings, &mut SyntheticClock::new(SyntheticCosts::default()))
        .unwrap();
    for pass in &out.passes {
        let mut prev = pass.start_merit;
        for e in &out.events[pass.events.clone()] {
            assert!(e.merit <= prev + 1e-6, "{} after {prev}", e.merit);
            prev = e.merit;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tightness_holds_for_any_seed(seed in any::<u64>()) {
        assert_tight(seed);
    }

    #[test]
    fn rate_adaption_is_idempotent(seed in 0u64..1000) {
        let (ch, cfg, p) = instance(seed);
        let once = rate_adaption(&ch, &p, &cfg);
        let twice = rate_adaption(&ch, &once, &cfg);
        prop_assert_eq!(&once, &twice);
        for k in 0..3 {
            let g = oracle_sinr(&ch, &p, k, cfg.noise_power_w);
            let cap = cfg.bandwidth_hz * (1.0 + g).log2();
            prop_assert!((once.rates[k] - cap.min(cfg.qos_rate_bps[k])).abs() <= 1e-9 * cap.max(1.0));
        }
    }

    #[test]
    fn random_points_respect_budgets(seed in 0u64..1000) {
        let (ch, cfg, p) = instance(seed);
        let mut r = rng(seed);
        let scale: f64 = r.gen_range(1.0..4.0);
        let mut loud = p.clone();
        for w in loud.beamformers.iter_mut() {
            *w *= Complex64::new(scale, 0.0);
        }
        let c = ris_resilience::sca::certify(&ch, &loud, &cfg);
        prop_assert_eq!(certification_error(&ch, &c, &cfg), None);
    }
}
