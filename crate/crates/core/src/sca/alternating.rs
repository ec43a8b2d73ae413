use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::conic::{solve, SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::metrics::{adaption_gap, DesignPoint};
use crate::sca::adaption::{certify, merit};
use crate::sca::programs::{build_beamforming_program, build_phase_program};
use crate::sca::settings::{ScaSettings, Subproblem};
use crate::system::{ChannelState, SystemConfig};

/// What a clock is charged for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    RateAdaption,
    Subproblem(Subproblem),
}

/// Source of timestamps, in seconds since the clock started.
pub trait Clock {
    /// Accounts for one operation of `kind` and returns the time after it.
    fn charge(&mut self, kind: CostKind) -> f64;
}

/// Wall-clock time since construction; never returns the same value twice.
#[derive(Debug)]
pub struct WallClock {
    start: Instant,
    last: f64,
}

impl WallClock {
    pub fn start() -> Self {
        Self {
            start: Instant::now(),
            last: f64::NEG_INFINITY,
        }
    }
}

impl Clock for WallClock {
    fn charge(&mut self, _kind: CostKind) -> f64 {
        let t = self.start.elapsed().as_secs_f64().max(self.last + 1e-9);
        self.last = t;
        t
    }
}

/// Fixed cost per operation, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticCosts {
    pub rate_adaption_s: f64,
    pub beamforming_s: f64,
    pub phase_s: f64,
}

impl Default for SyntheticCosts {
    fn default() -> Self {
        Self {
            rate_adaption_s: 0.0,
            beamforming_s: 0.05,
            phase_s: 0.03,
        }
    }
}

impl SyntheticCosts {
    pub fn cost(&self, kind: CostKind) -> f64 {
        match kind {
            CostKind::RateAdaption => self.rate_adaption_s,
            CostKind::Subproblem(Subproblem::Beamforming) => self.beamforming_s,
            CostKind::Subproblem(Subproblem::Phase) => self.phase_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_adaption_s >= 0.0 && self.rate_adaption_s.is_finite())
            || !(self.beamforming_s > 0.0 && self.beamforming_s.is_finite())
            || !(self.phase_s > 0.0 && self.phase_s.is_finite())
        {
            return Err(Error::InvalidConfig(
                "synthetic costs: solver costs must be > 0 and rate adaption >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Deterministic clock accumulating [`SyntheticCosts`].
#[derive(Debug, Clone)]
pub struct SyntheticClock {
    costs: SyntheticCosts,
    now: f64,
}

impl SyntheticClock {
    pub fn new(costs: SyntheticCosts) -> Self {
        Self { costs, now: 0.0 }
    }
}

impl Clock for SyntheticClock {
    fn charge(&mut self, kind: CostKind) -> f64 {
        self.now += self.costs.cost(kind);
        self.now
    }
}

/// Solver outcome attached to an event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub status: SolveStatus,
    pub iterations: u32,
    pub solve_time_s: f64,
    pub objective: f64,
}

impl From<&SolveReport> for SolveSummary {
    fn from(r: &SolveReport) -> Self {
        Self {
            status: r.status,
            iterations: r.iterations,
            solve_time_s: r.solve_time_s,
            objective: r.objective,
        }
    }
}

/// One sub-problem solve of the alternating loop.
#[derive(Debug, Clone)]
pub struct IterateEvent {
    /// Pass index (one sub-problem budget per pass).
    pub outer_round: u32,
    pub inner_step: u32,
    pub subproblem: Subproblem,
    /// Current iterate after the solve (unchanged when the solve failed).
    pub point: DesignPoint,
    pub psi: f64,
    /// `Ψ`, plus the penalty `C Σ (1 − |v_m|²)` for phase solves.
    pub merit: f64,
    /// `C` in effect (zero for beamforming).
    pub penalty: f64,
    /// Clock time of the event.
    pub time_s: f64,
    pub solve: SolveSummary,
    /// `false` when the solve failed and the iterate was kept.
    pub accepted: bool,
    /// Last event of its pass.
    pub pass_end: bool,
}

/// Bookkeeping of one pass, for descent checks.
#[derive(Debug, Clone, PartialEq)]
pub struct PassRecord {
    pub subproblem: Subproblem,
    pub penalty: f64,
    /// Merit of the iterate the pass started from, under this pass's `C`.
    pub start_merit: f64,
    /// Indices into the event list.
    pub events: std::ops::Range<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// `Ψ < τ` after a pass.
    Threshold,
    /// `max_outer_rounds` passes done.
    MaxRounds,
    /// `Ψ` stopped improving (`outer_tol`).
    Stalled,
    /// Too many consecutive solver failures.
    Aborted,
}

#[derive(Debug, Clone)]
pub struct AlternatingOutcome {
    pub events: Vec<IterateEvent>,
    pub passes: Vec<PassRecord>,
    pub final_point: DesignPoint,
    pub stop: StopReason,
}

struct Loop<'a, C: Clock> {
    channels: &'a ChannelState,
    config: &'a SystemConfig,
    settings: &'a ScaSettings,
    clock: &'a mut C,
    point: DesignPoint,
    events: Vec<IterateEvent>,
    passes: Vec<PassRecord>,
    failures: u32,
    pass_index: u32,
}

impl<C: Clock> Loop<'_, C> {
    fn solve_once(&mut self, o: Subproblem, penalty: f64) -> Result<(bool, SolveSummary)> {
        let built = match o {
            Subproblem::Beamforming => build_beamforming_program(self.channels, &self.point, self.config)?,
            Subproblem::Phase => build_phase_program(self.channels, &self.point, self.config, penalty)?,
        };
        let report = solve(&built.program, &self.settings.solve);
        let summary = SolveSummary::from(&report);
        match report.primal.as_deref() {
            Some(x) if report.is_optimal() => {
                self.point = certify(self.channels, &built.decode(x), self.config);
                Ok((true, summary))
            }
            _ => Ok((false, summary)),
        }
    }

    /// Runs one pass; returns `false` if the loop must abort.
    fn pass(&mut self, o: Subproblem, penalty: f64, budget: u32) -> Result<bool> {
        let qos = &self.config.qos_rate_bps;
        let pen = if o == Subproblem::Phase { penalty } else { 0.0 };
        let start = self.events.len();
        let mut prev = merit(&self.point, qos, pen);
        self.passes.push(PassRecord {
            subproblem: o,
            penalty: pen,
            start_merit: prev,
            events: start..start,
        });
        let mut ok = true;
        for step in 0..budget {
            let (accepted, solve) = self.solve_once(o, pen)?;
            let time_s = self.clock.charge(CostKind::Subproblem(o));
            let psi = adaption_gap(&self.point.rates, qos);
            let m = merit(&self.point, qos, pen);
            self.events.push(IterateEvent {
                outer_round: self.pass_index,
                inner_step: step,
                subproblem: o,
                point: self.point.clone(),
                psi,
                merit: m,
                penalty: pen,
                time_s,
                solve,
                accepted,
                pass_end: false,
            });
            if accepted {
                self.failures = 0;
            } else {
                // Re-solving the unchanged program would fail the same way.
                self.failures += 1;
                ok = self.failures < self.settings.max_consecutive_failures;
                break;
            }
            if let Some(tol) = self.settings.inner_tol {
                if accepted && prev - m <= tol * prev.abs().max(1e-9) {
                    break;
                }
            }
            prev = m;
        }
        if let Some(last) = self.events[start..].last_mut() {
            last.pass_end = true;
        }
        self.passes.last_mut().expect("pass pushed").events = start..self.events.len();
        self.pass_index += 1;
        Ok(ok)
    }
}

/// Resilience-aware alternating optimization.
///
/// Starting from `initial` (whose `κ` block must be feasible; it is
/// re-certified first), runs passes of `T_o` solves of sub-problem `o`,
/// switching sub-problems after each pass, until `Ψ < τ`, the pass limit, a
/// stall (`outer_tol`) or repeated solver failure. Phases are optimized only
/// when `settings.optimize_phases` holds and the RIS has elements.
///
/// The phase penalty starts at `penalty_initial` and grows by
/// `penalty_growth` after every phase pass up to `penalty_weight`. If the
/// final phases are further than the unit-modulus tolerance from the unit
/// circle, up to `penalty_restarts` extra phase passes with doubled `C` are
/// run; should that not suffice, the phases are projected onto the circle and
/// one beamforming pass re-optimizes for them.
pub fn alternating_optimize<C: Clock>(
    channels: &ChannelState,
    config: &SystemConfig,
    initial: &DesignPoint,
    settings: &ScaSettings,
    clock: &mut C,
) -> Result<AlternatingOutcome> {
    settings.validate()?;
    initial.check_dimensions(channels)?;
    let phases_on = settings.optimize_phases && channels.n_elements() > 0;
    let mut lp = Loop {
        channels,
        config,
        settings,
        clock,
        point: certify(channels, initial, config),
        events: Vec::new(),
        passes: Vec::new(),
        failures: 0,
        pass_index: 0,
    };
    let mut o = if phases_on {
        settings.first_subproblem
    } else {
        Subproblem::Beamforming
    };
    let mut penalty = settings.penalty_initial;
    let mut pass_psi = vec![adaption_gap(&lp.point.rates, &config.qos_rate_bps)];
    let mut stop = StopReason::MaxRounds;
    for _ in 0..settings.max_outer_rounds {
        if !lp.pass(o, penalty, settings.budget(o))? {
            stop = StopReason::Aborted;
            break;
        }
        let psi = adaption_gap(&lp.point.rates, &config.qos_rate_bps);
        pass_psi.push(psi);
        if psi < settings.gap_threshold {
            stop = StopReason::Threshold;
            break;
        }
        if let Some(tol) = settings.outer_tol {
            let n = pass_psi.len();
            if n >= 3 && pass_psi[n - 3] - psi <= tol * pass_psi[n - 3].max(1e-3) {
                stop = StopReason::Stalled;
                break;
            }
        }
        if o == Subproblem::Phase {
            penalty = (penalty * settings.penalty_growth).min(settings.penalty_weight);
        }
        if phases_on {
            o = o.other();
        }
    }

    let ran_phase = lp.passes.iter().any(|p| p.subproblem == Subproblem::Phase);
    if phases_on && ran_phase && stop != StopReason::Aborted {
        let mut c = settings.penalty_weight.max(penalty);
        let mut restarts = 0;
        while lp.point.max_modulus_deviation() > crate::metrics::UNIT_MODULUS_TOL
            && restarts < settings.penalty_restarts
        {
            c *= 2.0;
            restarts += 1;
            if !lp.pass(Subproblem::Phase, c, settings.inner_budget_v)? {
                stop = StopReason::Aborted;
                break;
            }
        }
        if stop != StopReason::Aborted
            && lp.point.max_modulus_deviation() > crate::metrics::UNIT_MODULUS_TOL
        {
            for v in lp.point.phases.iter_mut() {
                let m = v.norm();
                *v = if m > 0.0 { *v / m } else { num_complex::Complex64::new(1.0, 0.0) };
            }
            lp.point = crate::sca::adaption::rate_adaption(channels, &lp.point, config);
            if !lp.pass(Subproblem::Beamforming, 0.0, settings.inner_budget_w)? {
                stop = StopReason::Aborted;
            }
        }
    }
    let mut final_point = lp.point;
    final_point.enforce_unit_modulus_label();
    Ok(AlternatingOutcome {
        events: lp.events,
        passes: lp.passes,
        final_point,
        stop,
    })
}
