use serde::{Deserialize, Serialize};

use crate::conic::SolveOptions;
use crate::error::{Error, Result};

/// The two SCA sub-problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subproblem {
    Beamforming,
    Phase,
}

impl Subproblem {
    pub fn tag(self) -> &'static str {
        match self {
            Subproblem::Beamforming => "w",
            Subproblem::Phase => "v",
        }
    }

    pub fn other(self) -> Self {
        match self {
            Subproblem::Beamforming => Subproblem::Phase,
            Subproblem::Phase => Subproblem::Beamforming,
        }
    }
}

/// Budgets, thresholds and penalty schedule of the alternating loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScaSettings {
    /// `T_w`: beamforming solves per pass.
    pub inner_budget_w: u32,
    /// `T_v`: phase solves per pass.
    pub inner_budget_v: u32,
    /// `τ`: stop once `Ψ < τ` after a pass.
    pub gap_threshold: f64,
    /// `C`: largest phase penalty weight.
    pub penalty_weight: f64,
    /// Penalty weight of the first phase pass.
    pub penalty_initial: f64,
    /// Factor applied to the penalty weight after each phase pass.
    pub penalty_growth: f64,
    /// Extra doublings of `C` tried when the final phases miss the unit circle.
    pub penalty_restarts: u32,
    pub first_subproblem: Subproblem,
    /// Passes (one sub-problem budget each) before a hard stop.
    pub max_outer_rounds: u32,
    /// Whether intermediate solves become trace samples or only pass ends.
    pub emit_intermediate: bool,
    /// Ends a pass early when the relative merit decrease of a solve drops
    /// below this value.
    pub inner_tol: Option<f64>,
    /// Stops the loop when `Ψ` improved by less than this (relative) over the
    /// last two passes.
    pub outer_tol: Option<f64>,
    /// `false` restricts the loop to beamforming (fixed phases).
    pub optimize_phases: bool,
    /// Failed solves in a row (each ends its pass) before the loop aborts.
    pub max_consecutive_failures: u32,
    pub solve: SolveOptions,
}

impl Default for ScaSettings {
    /// The alternating schedule `T_w = T_v = 1`, beamforming first.
    fn default() -> Self {
        Self {
            inner_budget_w: 1,
            inner_budget_v: 1,
            gap_threshold: 1e-3,
            penalty_weight: 400.0,
            penalty_initial: 0.04,
            penalty_growth: 2.0,
            penalty_restarts: 4,
            first_subproblem: Subproblem::Beamforming,
            max_outer_rounds: 20,
            emit_intermediate: true,
            inner_tol: None,
            outer_tol: None,
            optimize_phases: true,
            max_consecutive_failures: 3,
            solve: SolveOptions::default(),
        }
    }
}

impl ScaSettings {
    /// Defaults with the penalty scaled to `K` users.
    pub fn for_users(n_users: usize) -> Self {
        let k = n_users.max(1) as f64;
        Self {
            penalty_weight: 100.0 * k,
            penalty_initial: 0.01 * k,
            ..Self::default()
        }
    }

    /// Each sub-problem solved until the relative merit decrease falls below
    /// `tol`, alternating until `Ψ` stalls.
    pub fn converged(mut self, tol: f64) -> Self {
        self.inner_budget_w = 50;
        self.inner_budget_v = 50;
        self.inner_tol = Some(tol);
        self.outer_tol = Some(tol);
        self.max_outer_rounds = 40;
        self
    }

    pub fn budget(&self, o: Subproblem) -> u32 {
        match o {
            Subproblem::Beamforming => self.inner_budget_w,
            Subproblem::Phase => self.inner_budget_v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("sca: {m}")));
        if self.inner_budget_w == 0 || self.inner_budget_v == 0 {
            return bad("inner budgets must be >= 1");
        }
        if !(self.penalty_weight > 0.0 && self.penalty_weight.is_finite()) {
            return bad("penalty_weight must be > 0");
        }
        if !(self.penalty_initial > 0.0 && self.penalty_initial <= self.penalty_weight) {
            return bad("penalty_initial must be in (0, penalty_weight]");
        }
        if !(self.penalty_growth >= 1.0) {
            return bad("penalty_growth must be >= 1");
        }
        if !(self.gap_threshold >= 0.0) {
            return bad("gap_threshold must be >= 0");
        }
        if self.max_outer_rounds == 0 || self.max_consecutive_failures == 0 {
            return bad("max_outer_rounds and max_consecutive_failures must be >= 1");
        }
        for (name, t) in [("inner_tol", self.inner_tol), ("outer_tol", self.outer_tol)] {
            if let Some(t) = t {
                if !(t >= 0.0) {
                    return bad(&format!("{name} must be >= 0"));
                }
            }
        }
        if !(self.solve.eps_feas > 0.0 && self.solve.eps_obj > 0.0) {
            return bad("solver tolerances must be > 0");
        }
        Ok(())
    }
}
