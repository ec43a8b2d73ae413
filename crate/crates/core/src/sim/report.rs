use std::fmt::Write as _;

use crate::error::Result;
use crate::metrics::ResilienceWeights;
use crate::sim::run::{ExperimentResult, Stat};
use crate::sim::sweeps::{score_weights, ElementSweep, WeightRow};

fn stat(s: &Stat) -> String {
    format!("{:>10.4} ± {:<8.4}", s.mean, s.std)
}

fn weight_lines(rows: &[WeightRow], out: &mut String) {
    for row in rows {
        let w = &row.weights;
        writeln!(
            out,
            "  λ_ada = {:.2}  λ_rec = {:.2}  T0 = {} s   best r {}  (n = {})",
            w.lambda_ada,
            w.lambda_rec,
            w.t0_tolerable_s,
            stat(&row.r_best),
            row.included
        )
        .unwrap();
    }
}

/// Plain-text summary: `Ψ` before and after the outage, then the best `r`
/// for each weight point in `setups`.
pub fn summary_table(result: &ExperimentResult, setups: &[ResilienceWeights]) -> Result<String> {
    let a = &result.aggregate;
    let s = &result.scenario;
    let mut out = String::new();
    writeln!(
        out,
        "mode {}  time model {}  replications {} included, {} excluded",
        s.mode.name(),
        s.time_model.name(),
        a.included,
        a.excluded
    )
    .unwrap();
    for (name, v) in [
        ("Ψ before outage", &a.psi_pre),
        ("Ψ after rate adaption", &a.psi_rate_adaption),
        ("Ψ best after outage", &a.psi_best),
        ("Ψ final", &a.psi_final),
        ("r_ada after rate adaption", &a.r_ada_rate_adaption),
        ("r_ada best", &a.r_ada_max),
    ] {
        writeln!(out, "  {name:<26}{}", stat(v)).unwrap();
    }
    for r in &result.replications {
        if let Some(reason) = &r.excluded {
            writeln!(out, "  replication {} excluded: {reason}", r.index).unwrap();
        }
    }
    if !setups.is_empty() && a.included > 0 {
        weight_lines(&score_weights(result, setups)?, &mut out);
    }
    Ok(out)
}

/// Best `r` per RIS size and weight point.
pub fn element_table(sweep: &ElementSweep) -> String {
    let mut out = String::new();
    for p in &sweep.points {
        let a = &p.result.aggregate;
        writeln!(
            out,
            "M = {}  ({} included, {} excluded)  Ψ best {}",
            p.n_elements,
            a.included,
            a.excluded,
            stat(&a.psi_best)
        )
        .unwrap();
        weight_lines(&p.rows, &mut out);
    }
    out
}

/// Best `r` per weight point.
pub fn weight_table(rows: &[WeightRow]) -> String {
    let mut out = String::new();
    weight_lines(rows, &mut out);
    out
}
