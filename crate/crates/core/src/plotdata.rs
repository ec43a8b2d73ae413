//! Tidy CSV tables built from result directories, one row per sample or
//! per configuration, for any plotting tool.
//!
//! - `adaption_vs_time.csv`: every trace sample of every replication.
//! - `r_vs_lambda.csv`: best `r` per weight point of a weight sweep.
//! - `r_vs_m.csv`: best `r` per (RIS size, weight point) of an element sweep.
//!
//! Every table carries a `time_model` column naming the clock that stamped
//! the samples.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::{fmt17, parse_trace_csv};
use crate::sim::{element_dir_name, read_meta, trace_paths, WEIGHTS_HEADER};

pub const ADAPTION_HEADER: &str =
    "replication,sample,label,time_s,time_ms,elapsed_ms,psi,r_ada,time_model";
pub const R_VS_LAMBDA_HEADER: &str =
    "lambda_ada,lambda_rec,t0_tolerable_s,included,mean_r,std_r,time_model";
pub const R_VS_M_HEADER: &str =
    "n_elements,lambda_ada,lambda_rec,t0_tolerable_s,included,mean_r,std_r,time_model";

/// One generated table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub csv: String,
    pub rows: usize,
}

/// Tables derived from a result directory plus the problems that were
/// skipped on the way.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotData {
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn corrupt(path: &Path, message: impl Into<String>) -> Error {
    Error::Corrupt {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// All trace samples of a run directory. Unreadable traces are skipped with
/// a warning; it is an error if every trace is unreadable.
pub fn adaption_vs_time(dir: &Path, warnings: &mut Vec<String>) -> Result<Table> {
    let meta = read_meta(dir)?;
    let t0 = meta.scenario.outage_time_s;
    let mut csv = format!("{ADAPTION_HEADER}\n");
    let mut rows = 0;
    let paths = trace_paths(dir, &meta);
    let mut failed = 0;
    for (index, path) in &paths {
        let parsed = fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|t| parse_trace_csv(&t));
        let samples = match parsed {
            Ok(s) => s,
            Err(e) => {
                failed += 1;
                warnings.push(format!("skipping {}: {e}", path.display()));
                continue;
            }
        };
        for (i, s) in samples.iter().enumerate() {
            writeln!(
                csv,
                "{index},{i},{},{},{},{},{},{},{}",
                s.label,
                fmt17(s.time_s),
                fmt17(s.time_s * 1e3),
                fmt17((s.time_s - t0) * 1e3),
                fmt17(s.psi),
                fmt17(s.r_ada),
                meta.time_model
            )
            .unwrap();
            rows += 1;
        }
    }
    if !paths.is_empty() && failed == paths.len() {
        return Err(corrupt(dir, "every trace is unreadable"));
    }
    Ok(Table {
        name: "adaption_vs_time.csv",
        csv,
        rows,
    })
}

/// Data rows of a `weights.csv`-shaped file, checked against the header.
fn weight_rows(path: &Path, prefix_cols: usize) -> Result<Vec<Vec<String>>> {
    let text = read(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| corrupt(path, "empty file"))?;
    let cols = header.split(',').count();
    if !header.ends_with(WEIGHTS_HEADER) || cols != WEIGHTS_HEADER.split(',').count() + prefix_cols {
        return Err(corrupt(path, format!("unexpected header `{header}`")));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<String> = l.split(',').map(str::to_string).collect();
            if f.len() != cols {
                return Err(corrupt(path, format!("row `{l}` has {} fields, expected {cols}", f.len())));
            }
            Ok(f)
        })
        .collect()
}

/// Drops `lambda_abs` (always 0 for reactionary weights) and appends the
/// time model.
fn reshape(f: &[String], prefix_cols: usize, time_model: &str) -> String {
    let mut out: Vec<&str> = f[..prefix_cols].iter().map(String::as_str).collect();
    out.extend(f[prefix_cols + 1..].iter().map(String::as_str));
    out.push(time_model);
    out.join(",")
}

/// One row per weight point of a weight-sweep directory.
pub fn r_vs_lambda(dir: &Path) -> Result<Table> {
    let meta = read_meta(dir)?;
    let rows = weight_rows(&dir.join("weights.csv"), 0)?;
    let mut csv = format!("{R_VS_LAMBDA_HEADER}\n");
    for f in &rows {
        writeln!(csv, "{}", reshape(f, 0, &meta.time_model)).unwrap();
    }
    Ok(Table {
        name: "r_vs_lambda.csv",
        csv,
        rows: rows.len(),
    })
}

/// One row per (RIS size, weight point) of an element-sweep directory.
pub fn r_vs_m(dir: &Path) -> Result<Table> {
    let rows = weight_rows(&dir.join("elements.csv"), 1)?;
    let mut csv = format!("{R_VS_M_HEADER}\n");
    let mut time_model = String::new();
    for f in &rows {
        if time_model.is_empty() {
            let m: usize = f[0].parse().map_err(|_| corrupt(&dir.join("elements.csv"), "bad n_elements"))?;
            time_model = read_meta(&dir.join(element_dir_name(m)))?.time_model;
        }
        writeln!(csv, "{}", reshape(f, 1, &time_model)).unwrap();
    }
    Ok(Table {
        name: "r_vs_m.csv",
        csv,
        rows: rows.len(),
    })
}

/// Every table that applies to `dir`: element sweeps give `r_vs_m.csv`,
/// weight sweeps add `r_vs_lambda.csv` to the adaption timeline.
pub fn plotdata(dir: &Path) -> Result<PlotData> {
    let mut data = PlotData::default();
    if dir.join("elements.csv").exists() {
        data.tables.push(r_vs_m(dir)?);
        return Ok(data);
    }
    if !dir.join("meta.json").exists() {
        return Err(corrupt(dir, "not a result directory (no meta.json or elements.csv)"));
    }
    let mut warnings = Vec::new();
    data.tables.push(adaption_vs_time(dir, &mut warnings)?);
    data.warnings = warnings;
    if dir.join("weights.csv").exists() {
        data.tables.push(r_vs_lambda(dir)?);
    }
    Ok(data)
}

/// Writes the tables into `out` and returns their paths.
pub fn write_plotdata(data: &PlotData, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    data.tables
        .iter()
        .map(|t| {
            let p = out.join(t.name);
            fs::write(&p, &t.csv).map_err(|e| Error::io(&p, e))?;
            Ok(p)
        })
        .collect()
}
