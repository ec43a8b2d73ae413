mod common;

use common::oracle_sinr;
use ris_resilience::metrics::ResilienceWeights;
use ris_resilience::sca::{CostKind, SyntheticCosts};
use ris_resilience::sim::{
    run_replication, run_scenario, sweep_elements, sweep_weights, weight_grid, Mode, Scenario,
    TimeModel,
};
use ris_resilience::system::SystemConfig;

fn scenario(mode: Mode) -> Scenario {
    let mut c = SystemConfig::default().with_dimensions(2, 3, 3, 4);
    c.rng_seed = 42;
    Scenario::new(c).with_mode(mode)
}

/// `Σ_k |r_k / r_k^des − 1|`.
fn oracle_gap(rates: &[f64], qos: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..rates.len() {
        s += (qos[k] - rates[k]).abs() / qos[k];
    }
    s
}

#[test]
fn first_sample_is_rate_adaption_at_the_outage() {
    for mode in Mode::ALL {
        let run = run_replication(&scenario(mode), 0).unwrap();
        let first = &run.summary.trace.samples[0];
        assert_eq!(first.label, "rate-adaption");
        assert_eq!(first.time_s, 1.0);
        assert_eq!(first.rates, run.rate_adaption_point.rates);
    }
}

#[test]
fn rate_adaption_rates_match_the_sinr_oracle() {
    let s = scenario(Mode::OptimizedRis);
    let cfg = &s.config;
    for index in 0..3 {
        let run = run_replication(&s, index).unwrap();
        let p = &run.rate_adaption_point;
        for k in 0..cfg.n_users {
            let g = oracle_sinr(&run.post_channels, p, k, cfg.noise_power_w);
            let want = (cfg.bandwidth_hz * (1.0 + g).log2()).min(cfg.qos_rate_bps[k]);
            assert!((p.rates[k] - want).abs() <= 1e-9 * cfg.qos_rate_bps[k], "{} vs {want}", p.rates[k]);
        }
    }
}

#[test]
fn recorded_gap_matches_the_rates() {
    let s = scenario(Mode::OptimizedRis).with_replications(3);
    let result = run_scenario(&s).unwrap();
    let qos = &s.config.qos_rate_bps;
    for rep in &result.replications {
        for sample in &rep.trace.samples {
            assert!((sample.psi - oracle_gap(&sample.rates, qos)).abs() <= 1e-9);
        }
    }
}

#[test]
fn no_blockage_starts_from_the_pre_outage_point() {
    let mut s = scenario(Mode::OptimizedRis);
    s.config.blockage_prob = 0.0;
    let run = run_replication(&s, 0).unwrap();
    assert_eq!(run.summary.blocked_links, 0);
    let first = &run.summary.trace.samples[0];
    assert!((first.psi - run.summary.pre_outage_psi).abs() <= 1e-12);
    assert_eq!(first.rates, run.pre_point.rates);
}

#[test]
fn fully_blocked_network_without_ris_delivers_nothing() {
    let mut s = scenario(Mode::NoRis);
    s.config.blockage_prob = 1.0;
    let result = run_scenario(&s.with_replications(2)).unwrap();
    let qos = &result.scenario.config.qos_rate_bps;
    for rep in &result.replications {
        assert_eq!(rep.blocked_links, 6);
        for i in 0..rep.trace.samples.len() {
            assert_eq!(rep.trace.r_ada(i, qos), 0.0);
            assert_eq!(rep.trace.samples[i].psi, 3.0);
        }
    }
}

#[test]
fn synthetic_timestamps_are_exact_sums_of_costs() {
    let costs = SyntheticCosts {
        rate_adaption_s: 0.002,
        beamforming_s: 0.05,
        phase_s: 0.03,
    };
    let mut s = scenario(Mode::OptimizedRis);
    s.time_model = TimeModel::Synthetic(costs);
    s.settings.emit_intermediate = false;
    for index in 0..3 {
        let run = run_replication(&s, index).unwrap();
        let out = run.post_outcome.as_ref().unwrap();
        let mut now = costs.cost(CostKind::RateAdaption);
        let mut want = vec![s.outage_time_s + now];
        for e in &out.events {
            now += costs.cost(CostKind::Subproblem(e.subproblem));
            if e.pass_end {
                want.push(s.outage_time_s + now);
            }
        }
        let got: Vec<f64> = run.summary.trace.samples.iter().map(|x| x.time_s).collect();
        assert_eq!(got, want);
    }
}

#[test]
fn runs_are_deterministic() {
    let s = scenario(Mode::RandomRis).with_replications(3);
    assert_eq!(run_scenario(&s).unwrap(), run_scenario(&s).unwrap());
}

#[test]
fn aggregates_are_means_of_included_scores() {
    let s = scenario(Mode::OptimizedRis).with_replications(4);
    let result = run_scenario(&s).unwrap();
    let vals: Vec<f64> = result.scores.iter().flatten().map(|x| x.r_best).collect();
    assert_eq!(vals.len(), result.aggregate.included);
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    assert!((result.aggregate.r_best.mean - mean).abs() <= 1e-12);
}

#[test]
fn weight_sweep_scores_every_grid_point() {
    let s = scenario(Mode::OptimizedRis).with_replications(2);
    let grid = weight_grid(4, 0.0).unwrap();
    let sweep = sweep_weights(&s, &grid).unwrap();
    assert_eq!(sweep.rows.len(), 5);
    for (row, w) in sweep.rows.iter().zip(&grid) {
        assert_eq!(row.weights, *w);
        assert_eq!(row.per_replication.len(), 2);
    }
    // λ2 = 1 scores pure adaption: the best r is the largest r_ada.
    let last = &sweep.rows[4];
    for (rep, best) in sweep.result.replications.iter().zip(&last.per_replication) {
        let qos = &s.config.qos_rate_bps;
        let top = (0..rep.trace.samples.len()).map(|i| rep.trace.r_ada(i, qos)).fold(f64::MIN, f64::max);
        assert!((best.unwrap().0 - top).abs() <= 1e-12);
    }
    assert!(sweep_weights(&s, &[]).is_err());
}

#[test]
fn element_sweep_shares_seeds_across_sizes() {
    let s = scenario(Mode::OptimizedRis).with_replications(2);
    let grid = [ResilienceWeights::reactionary(0.5, 0.0).unwrap()];
    let sweep = sweep_elements(&s, &[0, 4, 9], &grid).unwrap();
    assert_eq!(sweep.points.len(), 3);
    assert_eq!(sweep.points[0].result.scenario.mode, Mode::NoRis);
    for p in &sweep.points {
        assert_eq!(p.result.scenario.config.n_ris_elements, p.n_elements);
        let blocked: Vec<usize> = p.result.replications.iter().map(|r| r.blocked_links).collect();
        let first: Vec<usize> = sweep.points[0].result.replications.iter().map(|r| r.blocked_links).collect();
        assert_eq!(blocked, first);
    }
    assert!(sweep_elements(&s, &[5], &grid).is_err());
}
