use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{best_resilience, ResilienceWeights};
use crate::sim::run::{run_scenario, ExperimentResult, Stat};
use crate::sim::scenario::{Mode, Scenario};

/// The three reactionary setups `λ2 ∈ {0.15, 0.5, 0.85}`, `λ3 = 1 − λ2`.
pub fn named_setups(t0_tolerable_s: f64) -> Vec<ResilienceWeights> {
    [0.15, 0.5, 0.85]
        .into_iter()
        .map(|l2| ResilienceWeights::reactionary(l2, t0_tolerable_s).expect("valid weights"))
        .collect()
}

/// Reactionary grid `λ2 = i / steps`, `i = 0..=steps`.
pub fn weight_grid(steps: usize, t0_tolerable_s: f64) -> Result<Vec<ResilienceWeights>> {
    if steps == 0 {
        return Err(Error::InvalidConfig("weight grid needs at least one step".into()));
    }
    (0..=steps)
        .map(|i| ResilienceWeights::reactionary(i as f64 / steps as f64, t0_tolerable_s))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub weights: ResilienceWeights,
    /// Best `r` and its sample index per replication (`None` if excluded).
    pub per_replication: Vec<Option<(f64, usize)>>,
    pub r_best: Stat,
    pub included: usize,
}

/// Re-scores the stored traces of `result` for every weight point.
pub fn score_weights(result: &ExperimentResult, grid: &[ResilienceWeights]) -> Result<Vec<WeightRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("weight grid is empty".into()));
    }
    let qos = &result.scenario.config.qos_rate_bps;
    grid.iter()
        .map(|w| {
            w.validate()?;
            let per = result
                .replications
                .iter()
                .map(|r| match r.excluded {
                    Some(_) => Ok(None),
                    None => best_resilience(&r.trace, qos, w).map(Some),
                })
                .collect::<Result<Vec<_>>>()?;
            let vals: Vec<f64> = per.iter().flatten().map(|(r, _)| *r).collect();
            Ok(WeightRow {
                weights: *w,
                r_best: Stat::of(&vals),
                included: vals.len(),
                per_replication: per,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSweep {
    pub result: ExperimentResult,
    pub rows: Vec<WeightRow>,
}

/// Runs `scenario` once and scores its traces for every point of `grid`.
pub fn sweep_weights(scenario: &Scenario, grid: &[ResilienceWeights]) -> Result<WeightSweep> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("weight grid is empty".into()));
    }
    let result = run_scenario(scenario)?;
    let rows = score_weights(&result, grid)?;
    Ok(WeightSweep { result, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementPoint {
    pub n_elements: usize,
    pub result: ExperimentResult,
    pub rows: Vec<WeightRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementSweep {
    pub points: Vec<ElementPoint>,
}

/// Runs `base` for every RIS size in `sizes` with the same seeds, so
/// topology, direct channels and blockage are shared across sizes. `M = 0`
/// runs in no-RIS mode.
pub fn sweep_elements(base: &Scenario, sizes: &[usize], grid: &[ResilienceWeights]) -> Result<ElementSweep> {
    if sizes.is_empty() {
        return Err(Error::InvalidConfig("element list is empty".into()));
    }
    let mut points = Vec::with_capacity(sizes.len());
    for &m in sizes {
        let side = (m as f64).sqrt().round() as usize;
        if side * side != m {
            return Err(Error::InvalidConfig(format!("M = {m} is not a perfect square")));
        }
        let mut s = base.clone();
        s.config.n_ris_elements = m;
        if m == 0 {
            s.mode = Mode::NoRis;
        }
        let result = run_scenario(&s)?;
        let rows = score_weights(&result, grid)?;
        points.push(ElementPoint {
            n_elements: m,
            result,
            rows,
        });
    }
    Ok(ElementSweep { points })
}
