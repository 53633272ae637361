//! File formats: profile CSV, sweep summary CSV, and the JSON run report.
//!
//! Floats are serialized with 17 significant digits so that re-reading a
//! file reproduces the exact binary64 values. All writes go through a
//! temporary file plus rename, so interrupted runs never leave truncated
//! output behind.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::RadialGrid;
use crate::solver::{CheckKind, IterationReport, SolverConfig};

/// 17 significant digits; lossless for binary64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `bytes` atomically (temp file in the target directory, then rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// A radial profile: nodes with density and potential samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub r: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
}

impl Profile {
    /// Cells of the grid this profile was sampled on.
    pub fn n(&self) -> usize {
        self.r.len() - 1
    }
}

/// Serialize a profile as `r,rho,U` CSV (LF endings, UTF-8).
pub fn profile_csv(profile: &Profile) -> String {
    let mut out = String::from("r,rho,U\n");
    for i in 0..profile.r.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            format_float(profile.r[i]),
            format_float(profile.rho[i]),
            format_float(profile.u[i])
        ));
    }
    out
}

pub fn write_profile_csv(path: &Path, profile: &Profile) -> Result<()> {
    write_atomic(path, profile_csv(profile).as_bytes())
}

pub fn read_profile_csv(path: &Path) -> Result<Profile> {
    let text = std::fs::read_to_string(path)?;
    parse_profile_csv(&text)
}

pub fn parse_profile_csv(text: &str) -> Result<Profile> {
    let mut lines = text.lines();
    match lines.next() {
        Some("r,rho,U") => {}
        other => {
            return Err(Error::Format(format!(
                "expected header 'r,rho,U', got {other:?}"
            )))
        }
    }
    let mut profile = Profile {
        r: Vec::new(),
        rho: Vec::new(),
        u: Vec::new(),
    };
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| -> Result<f64> {
            fields
                .next()
                .ok_or_else(|| Error::Format(format!("row {}: missing {name}", i + 1)))?
                .parse()
                .map_err(|e| Error::Format(format!("row {}: {name}: {e}", i + 1)))
        };
        profile.r.push(next("r")?);
        profile.rho.push(next("rho")?);
        profile.u.push(next("U")?);
    }
    if profile.r.len() < 3 {
        return Err(Error::Format("profile needs at least 3 rows".into()));
    }
    Ok(profile)
}

/// Reconstruct the uniform grid a profile was written on; the nodes must
/// match the canonical construction bit for bit.
pub fn grid_of_profile(profile: &Profile) -> Result<RadialGrid> {
    let grid = RadialGrid::uniform(profile.n())?;
    if grid.nodes() != profile.r.as_slice() {
        return Err(Error::GridMismatch(
            "profile nodes are not a uniform grid on [0,1]".into(),
        ));
    }
    Ok(grid)
}

/// Pass/fail summary of the per-iterate certificates.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportChecks {
    pub lemma41: bool,
    pub lower_bound: bool,
    pub range_bound: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportBounds {
    pub c1: f64,
    pub c2: f64,
}

/// The JSON report written by a solve run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolveReport {
    pub k: f64,
    pub n: usize,
    pub tol: f64,
    pub damping: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual_history: Vec<f64>,
    pub amplitude_history: Vec<f64>,
    pub bounds: ReportBounds,
    pub checks: ReportChecks,
    pub mass: f64,
    pub central_density: f64,
    pub wall_time_ms: u64,
    pub version: String,
}

impl SolveReport {
    pub fn new(config: &SolverConfig, report: &IterationReport, wall_time_ms: u64) -> Self {
        SolveReport {
            k: config.k,
            n: config.grid_n,
            tol: config.tol,
            damping: config.damping,
            iterations: report.iterations,
            converged: report.converged,
            residual_history: report.residual_history.clone(),
            amplitude_history: report.amplitude_history.clone(),
            bounds: ReportBounds {
                c1: report.amplitude_window.0,
                c2: report.amplitude_window.1,
            },
            checks: ReportChecks {
                lemma41: report.check_passed(CheckKind::Lemma41),
                lower_bound: report.check_passed(CheckKind::LowerBound),
                range_bound: report.check_passed(CheckKind::RangeBound),
            },
            mass: *report.mass_history.last().unwrap(),
            central_density: report.final_density.central(),
            wall_time_ms,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

pub fn write_json_report(path: &Path, report: &SolveReport) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// One row of a sweep summary.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub k: f64,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub amplitude: f64,
    pub central_density: f64,
    pub oracle_sup_rel_error: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "k,converged,iterations,final_residual,amplitude,central_density,oracle_sup_rel_error\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            format_float(row.k),
            row.converged,
            row.iterations,
            format_float(row.final_residual),
            format_float(row.amplitude),
            format_float(row.central_density),
            format_float(row.oracle_sup_rel_error)
        ));
    }
    out
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_atomic(path, sweep_csv(rows).as_bytes())
}

/// Machine-readable record of a CLI run, printed to standard output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub artifact_paths: Vec<String>,
    pub tool_version: String,
    pub wall_time_ms: u64,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            artifact_paths: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_ms: 0,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}
