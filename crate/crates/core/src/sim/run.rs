use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::{adaption_gap, best_resilience, DesignPoint, ResilienceTrace, ResilienceWeights};
use crate::sca::{
    alternating_optimize, cold_start, rate_adaption, AlternatingOutcome, Clock, CostKind,
    StopReason, SyntheticClock, SyntheticCosts, WallClock,
};
use crate::sim::scenario::{Mode, Scenario, TimeModel};
use crate::system::{
    draw_blockage_mask, generate_channels, generate_topology, replication_seed, CVector,
    ChannelState, SeedStreams, Stream,
};

/// Everything produced by one replication, including the channels and every
/// emitted design point.
#[derive(Debug, Clone)]
pub struct ReplicationRun {
    pub summary: ReplicationSummary,
    /// Channels before the outage (RIS removed in no-RIS mode).
    pub pre_channels: ChannelState,
    /// Channels after the outage.
    pub post_channels: ChannelState,
    pub pre_outcome: AlternatingOutcome,
    /// Pre-outage allocation (after rate adaption on the unblocked channels).
    pub pre_point: DesignPoint,
    /// First post-outage point.
    pub rate_adaption_point: DesignPoint,
    pub post_outcome: Option<AlternatingOutcome>,
}

/// What is kept of a replication in an [`ExperimentResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub index: usize,
    pub seed: u64,
    /// Reason for exclusion from the aggregates (solver failure only).
    pub excluded: Option<String>,
    pub trace: ResilienceTrace,
    pub pre_outage_psi: f64,
    pub blocked_links: usize,
    pub clamped_links: usize,
    pub pre_outage_solves: usize,
    pub pre_outage_stop: StopReason,
    pub post_outage_stop: Option<StopReason>,
}

impl ReplicationSummary {
    /// Smallest `Ψ` over the post-outage samples.
    pub fn best_psi(&self) -> f64 {
        self.trace.samples.iter().map(|s| s.psi).fold(f64::INFINITY, f64::min)
    }
}

fn ris_phases(mode: Mode, m: usize, streams: &SeedStreams) -> CVector {
    match mode {
        Mode::NoRis => CVector::zeros(0),
        Mode::RandomRis => {
            let mut rng = streams.rng(Stream::Phases);
            CVector::from_fn(m, |_, _| {
                Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
            })
        }
        Mode::OptimizedRis => CVector::from_element(m, Complex64::new(1.0, 0.0)),
    }
}

fn post_outage<C: Clock>(
    scenario: &Scenario,
    channels: &ChannelState,
    pre_point: &DesignPoint,
    trace: &mut ResilienceTrace,
    clock: &mut C,
) -> Result<(DesignPoint, AlternatingOutcome)> {
    let cfg = &scenario.config;
    let t0 = scenario.outage_time_s;
    let ra = rate_adaption(channels, pre_point, cfg);
    let t = clock.charge(CostKind::RateAdaption);
    trace.push(t0 + t, ra.rates.clone(), &cfg.qos_rate_bps, "rate-adaption")?;
    let mut settings = scenario.settings.clone();
    settings.optimize_phases = scenario.mode == Mode::OptimizedRis;
    let out = alternating_optimize(channels, cfg, &ra, &settings, clock)?;
    for e in &out.events {
        if settings.emit_intermediate || e.pass_end {
            let mut label = format!("{}{}.{}", e.subproblem.tag(), e.outer_round, e.inner_step);
            if !e.accepted {
                label.push_str("-failed");
            }
            trace.push(t0 + e.time_s, e.point.rates.clone(), &cfg.qos_rate_bps, label)?;
        }
    }
    Ok((ra, out))
}

/// Runs replication `index` of `scenario`: pre-outage optimization, blockage
/// at `t_0`, rate adaption and the mode's mechanism.
pub fn run_replication(scenario: &Scenario, index: usize) -> Result<ReplicationRun> {
    let cfg = &scenario.config;
    let seed = replication_seed(cfg.rng_seed, index);
    let streams = SeedStreams::new(seed);
    let topology = generate_topology(cfg, &mut streams.rng(Stream::Topology));
    let full = generate_channels(cfg, &topology, &mut streams.rng(Stream::Channels))?.with_seed(seed);
    let channels = match scenario.mode {
        Mode::NoRis => full.without_ris(),
        _ => full,
    };
    let phases = ris_phases(scenario.mode, channels.n_elements(), &streams);
    let init = cold_start(&channels, phases, cfg);
    let mut pre_settings = scenario.pre_outage.clone();
    pre_settings.optimize_phases = scenario.mode == Mode::OptimizedRis;
    let pre_outcome = alternating_optimize(
        &channels,
        cfg,
        &init,
        &pre_settings,
        &mut SyntheticClock::new(SyntheticCosts::default()),
    )?;
    let mut pre_point = rate_adaption(&channels, &pre_outcome.final_point, cfg);
    pre_point.unit_modulus_enforced = pre_outcome.final_point.unit_modulus_enforced;
    let pre_outage_psi = adaption_gap(&pre_point.rates, &cfg.qos_rate_bps);

    let mask = draw_blockage_mask(cfg, &mut streams.rng(Stream::Blockage));
    let post_channels = channels.apply_blockage(&mask)?;
    let mut trace = ResilienceTrace::new(scenario.outage_time_s, pre_point.rates.clone());
    let mut excluded = None;
    let (ra, post_outcome) = if pre_outcome.stop == StopReason::Aborted {
        excluded = Some("pre-outage solver failure".to_string());
        (rate_adaption(&post_channels, &pre_point, cfg), None)
    } else {
        let (ra, out) = match scenario.time_model {
            TimeModel::Wall => post_outage(scenario, &post_channels, &pre_point, &mut trace, &mut WallClock::start())?,
            TimeModel::Synthetic(c) => {
                post_outage(scenario, &post_channels, &pre_point, &mut trace, &mut SyntheticClock::new(c))?
            }
        };
        if out.stop == StopReason::Aborted {
            excluded = Some("post-outage solver failure".to_string());
        }
        (ra, Some(out))
    };
    if trace.samples.is_empty() {
        trace.push(scenario.outage_time_s, ra.rates.clone(), &cfg.qos_rate_bps, "rate-adaption")?;
    }
    let summary = ReplicationSummary {
        index,
        seed,
        excluded,
        trace,
        pre_outage_psi,
        blocked_links: mask.count(),
        clamped_links: channels.clamped_links(),
        pre_outage_solves: pre_outcome.events.len(),
        pre_outage_stop: pre_outcome.stop,
        post_outage_stop: post_outcome.as_ref().map(|o| o.stop),
    };
    Ok(ReplicationRun {
        summary,
        pre_channels: channels,
        post_channels,
        pre_outcome,
        pre_point,
        rate_adaption_point: ra,
        post_outcome,
    })
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Per-replication figures derived from a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationScores {
    pub psi_pre: f64,
    pub psi_rate_adaption: f64,
    pub psi_best: f64,
    pub psi_final: f64,
    pub r_ada_rate_adaption: f64,
    pub r_ada_max: f64,
    pub r_best: f64,
    pub best_index: usize,
    pub best_time_s: f64,
}

impl ReplicationScores {
    pub fn of(s: &ReplicationSummary, qos: &[f64], weights: &ResilienceWeights) -> Result<Self> {
        let t = &s.trace;
        let (r_best, best_index) = best_resilience(t, qos, weights)?;
        let r_ada: Vec<f64> = (0..t.samples.len()).map(|i| t.r_ada(i, qos)).collect();
        Ok(Self {
            psi_pre: s.pre_outage_psi,
            psi_rate_adaption: t.samples[0].psi,
            psi_best: s.best_psi(),
            psi_final: t.samples.last().expect("non-empty trace").psi,
            r_ada_rate_adaption: r_ada[0],
            r_ada_max: r_ada.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            r_best,
            best_index,
            best_time_s: t.samples[best_index].time_s,
        })
    }
}

/// Aggregates over the included replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub included: usize,
    pub excluded: usize,
    pub psi_pre: Stat,
    pub psi_rate_adaption: Stat,
    pub psi_best: Stat,
    pub psi_final: Stat,
    pub r_ada_rate_adaption: Stat,
    pub r_ada_max: Stat,
    pub r_best: Stat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub replications: Vec<ReplicationSummary>,
    /// Scores per replication under `scenario.weights` (`None` if excluded).
    pub scores: Vec<Option<ReplicationScores>>,
    pub aggregate: Aggregate,
}

impl ExperimentResult {
    /// Recomputes scores and aggregates from the stored traces.
    pub fn from_replications(scenario: Scenario, replications: Vec<ReplicationSummary>) -> Result<Self> {
        let qos = scenario.config.qos_rate_bps.clone();
        let scores = replications
            .iter()
            .map(|r| match r.excluded {
                Some(_) => Ok(None),
                None => ReplicationScores::of(r, &qos, &scenario.weights).map(Some),
            })
            .collect::<Result<Vec<_>>>()?;
        let inc: Vec<&ReplicationScores> = scores.iter().flatten().collect();
        let stat = |f: fn(&ReplicationScores) -> f64| Stat::of(&inc.iter().map(|s| f(s)).collect::<Vec<_>>());
        let aggregate = Aggregate {
            included: inc.len(),
            excluded: replications.len() - inc.len(),
            psi_pre: stat(|s| s.psi_pre),
            psi_rate_adaption: stat(|s| s.psi_rate_adaption),
            psi_best: stat(|s| s.psi_best),
            psi_final: stat(|s| s.psi_final),
            r_ada_rate_adaption: stat(|s| s.r_ada_rate_adaption),
            r_ada_max: stat(|s| s.r_ada_max),
            r_best: stat(|s| s.r_best),
        };
        Ok(Self {
            scenario,
            replications,
            scores,
            aggregate,
        })
    }

    pub fn all_failed(&self) -> bool {
        self.aggregate.included == 0
    }
}

/// Runs every replication (in parallel) and aggregates in index order.
pub fn run_scenario(scenario: &Scenario) -> Result<ExperimentResult> {
    scenario.validate()?;
    let reps = (0..scenario.replications)
        .into_par_iter()
        .map(|i| run_replication(scenario, i).map(|r| r.summary))
        .collect::<Result<Vec<_>>>()?;
    ExperimentResult::from_replications(scenario.clone(), reps)
}
