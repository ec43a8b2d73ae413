//! Result directories.
//!
//! ```text
//! <dir>/meta.json            scenario, seeds, exclusions, aggregates
//! <dir>/aggregate.csv        one row per replication, then mean and std rows
//! <dir>/traces/rep_0000.csv  post-outage trace of each replication
//! <dir>/weights.csv          (weight sweeps) best r per weight point
//! <dir>/elements.csv         (element sweeps) best r per (M, weight point)
//! <dir>/m_0016/...           (element sweeps) one result directory per M
//! ```
//!
//! Nothing time- or machine-dependent is written unless the wall-clock time
//! model is used, so equal inputs give byte-identical directories.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::fmt17;
use crate::sca::StopReason;
use crate::sim::run::{Aggregate, ExperimentResult, Stat};
use crate::sim::scenario::Scenario;
use crate::sim::sweeps::{ElementSweep, WeightRow, WeightSweep};

pub const FORMAT: &str = "ris-resilience-result/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationMeta {
    pub index: usize,
    pub seed: u64,
    pub excluded: Option<String>,
    pub blocked_links: usize,
    pub clamped_links: usize,
    pub pre_outage_psi: f64,
    pub pre_outage_solves: usize,
    pub pre_outage_stop: StopReason,
    pub post_outage_stop: Option<StopReason>,
    pub samples: usize,
    pub trace: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMeta {
    pub format: String,
    pub code_version: String,
    pub kind: String,
    pub time_model: String,
    pub scenario: Scenario,
    pub replications: Vec<ReplicationMeta>,
    pub aggregate: Aggregate,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn trace_file_name(index: usize) -> String {
    format!("rep_{index:04}.csv")
}

fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

fn aggregate_csv(result: &ExperimentResult) -> String {
    let mut out = String::from(
        "replication,seed,status,psi_pre,psi_rate_adaption,psi_best,psi_final,\
         r_ada_rate_adaption,r_ada_max,r_best,best_index,best_time_s\n",
    );
    for (r, s) in result.replications.iter().zip(&result.scores) {
        let status = if r.excluded.is_some() { "excluded" } else { "included" };
        write!(out, "{},{},{status}", r.index, r.seed).unwrap();
        for v in [
            s.map(|s| s.psi_pre),
            s.map(|s| s.psi_rate_adaption),
            s.map(|s| s.psi_best),
            s.map(|s| s.psi_final),
            s.map(|s| s.r_ada_rate_adaption),
            s.map(|s| s.r_ada_max),
            s.map(|s| s.r_best),
        ] {
            write!(out, ",{}", opt17(v)).unwrap();
        }
        match s {
            Some(s) => writeln!(out, ",{},{}", s.best_index, fmt17(s.best_time_s)).unwrap(),
            None => out.push_str(",,\n"),
        }
    }
    let a = &result.aggregate;
    let stats = [
        a.psi_pre,
        a.psi_rate_adaption,
        a.psi_best,
        a.psi_final,
        a.r_ada_rate_adaption,
        a.r_ada_max,
        a.r_best,
    ];
    for (name, f) in [("mean", (|s: &Stat| s.mean) as fn(&Stat) -> f64), ("std", |s: &Stat| s.std)] {
        write!(out, "{name},,{}", a.included).unwrap();
        for s in &stats {
            write!(out, ",{}", fmt17(f(s))).unwrap();
        }
        out.push_str(",,\n");
    }
    out
}

fn write_result_kind(result: &ExperimentResult, dir: &Path, kind: &str) -> Result<()> {
    let traces = dir.join("traces");
    create_dir(&traces)?;
    let qos = &result.scenario.config.qos_rate_bps;
    let mut reps = Vec::with_capacity(result.replications.len());
    for r in &result.replications {
        let name = trace_file_name(r.index);
        write(&traces.join(&name), &r.trace.to_csv(qos))?;
        reps.push(ReplicationMeta {
            index: r.index,
            seed: r.seed,
            excluded: r.excluded.clone(),
            blocked_links: r.blocked_links,
            clamped_links: r.clamped_links,
            pre_outage_psi: r.pre_outage_psi,
            pre_outage_solves: r.pre_outage_solves,
            pre_outage_stop: r.pre_outage_stop,
            post_outage_stop: r.post_outage_stop,
            samples: r.trace.samples.len(),
            trace: format!("traces/{name}"),
        });
    }
    let meta = ResultMeta {
        format: FORMAT.into(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        kind: kind.into(),
        time_model: result.scenario.time_model.name().into(),
        scenario: result.scenario.clone(),
        replications: reps,
        aggregate: result.aggregate,
    };
    let mut json = serde_json::to_string_pretty(&meta)?;
    json.push('\n');
    write(&dir.join("meta.json"), &json)?;
    write(&dir.join("aggregate.csv"), &aggregate_csv(result))
}

/// Writes `result` as a result directory at `dir` (created if needed).
pub fn write_result(result: &ExperimentResult, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    write_result_kind(result, dir, "run")
}

pub const WEIGHTS_HEADER: &str = "lambda_abs,lambda_ada,lambda_rec,t0_tolerable_s,included,mean_r,std_r";

fn weight_rows_csv(prefix: &str, rows: &[WeightRow], out: &mut String) {
    for row in rows {
        let w = &row.weights;
        writeln!(
            out,
            "{prefix}{},{},{},{},{},{},{}",
            fmt17(w.lambda_abs),
            fmt17(w.lambda_ada),
            fmt17(w.lambda_rec),
            fmt17(w.t0_tolerable_s),
            row.included,
            fmt17(row.r_best.mean),
            fmt17(row.r_best.std)
        )
        .unwrap();
    }
}

/// Result directory plus `weights.csv`.
pub fn write_weight_sweep(sweep: &WeightSweep, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    write_result_kind(&sweep.result, dir, "sweep-weights")?;
    let mut csv = format!("{WEIGHTS_HEADER}\n");
    weight_rows_csv("", &sweep.rows, &mut csv);
    write(&dir.join("weights.csv"), &csv)
}

pub fn element_dir_name(m: usize) -> String {
    format!("m_{m:04}")
}

/// `elements.csv` plus one result directory (with `weights.csv`) per size.
pub fn write_element_sweep(sweep: &ElementSweep, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let mut csv = format!("n_elements,{WEIGHTS_HEADER}\n");
    for p in &sweep.points {
        let sub = dir.join(element_dir_name(p.n_elements));
        create_dir(&sub)?;
        write_result_kind(&p.result, &sub, "sweep-elements")?;
        let mut w = format!("{WEIGHTS_HEADER}\n");
        weight_rows_csv("", &p.rows, &mut w);
        write(&sub.join("weights.csv"), &w)?;
        weight_rows_csv(&format!("{},", p.n_elements), &p.rows, &mut csv);
    }
    write(&dir.join("elements.csv"), &csv)
}

/// Reads `meta.json` of a result directory.
pub fn read_meta(dir: &Path) -> Result<ResultMeta> {
    let path = dir.join("meta.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Corrupt {
        path,
        message: e.to_string(),
    })
}

/// Paths of the trace files listed in a result directory.
pub fn trace_paths(dir: &Path, meta: &ResultMeta) -> Vec<(usize, PathBuf)> {
    meta.replications
        .iter()
        .map(|r| (r.index, dir.join(&r.trace)))
        .collect()
}
