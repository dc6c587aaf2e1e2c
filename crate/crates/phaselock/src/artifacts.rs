//! Scan execution with worker threads and the files it leaves behind.

use std::fs;
use std::path::{Path, PathBuf};

use phaselock_core::scan::{BoundaryPoint, CellClass, ScanConfig, ScanContext, ScanResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{config_hash, SCHEMA};
use crate::error::{CliError, ConfigError};

/// Classify every cell on `jobs` worker threads. Cells come back in grid
/// order whatever the thread count, so the result is identical to a
/// sequential run.
pub fn run_parallel(config: ScanConfig, jobs: usize) -> Result<ScanResult, CliError> {
    let ctx = ScanContext::new(config)?;
    let points = ctx.config.grid.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ConfigError::Invalid(format!("cannot start {jobs} workers: {e}")))?;
    let cells = pool.install(|| points.par_iter().map(|&(a, e)| ctx.classify(a, e)).collect());
    Ok(ctx.assemble(cells))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tongue {
    pub alpha0: f64,
    /// `[alpha, eps]` points on the left and right edges of the locked
    /// region, one per row that has locked cells.
    pub left: Vec<[f64; 2]>,
    pub right: Vec<[f64; 2]>,
    pub transitions: Vec<BoundaryPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCount {
    pub class: CellClass,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub schema: u64,
    pub config_hash: String,
    pub seed: u64,
    pub cells: usize,
    pub counts: Vec<ClassCount>,
    pub ambiguous_cells: usize,
    pub files: Vec<String>,
}

pub const GRID_CSV: &str = "grid.csv";
pub const TONGUE_JSON: &str = "tongue.json";
pub const RESULT_JSON: &str = "scan.json";
pub const CONFIG_JSON: &str = "config.json";
pub const MANIFEST_JSON: &str = "manifest.json";

const CLASSES: [CellClass; 5] = [
    CellClass::Conjugate,
    CellClass::LockedAttracting,
    CellClass::LockedRepelling,
    CellClass::LockedPair,
    CellClass::Undetermined,
];

pub fn manifest(config: &ScanConfig, result: &ScanResult) -> Manifest {
    Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        schema: SCHEMA,
        config_hash: config_hash(config),
        seed: config.seed,
        cells: result.cells.len(),
        counts: CLASSES.iter().map(|&class| ClassCount { class, cells: result.count(class) }).collect(),
        ambiguous_cells: result.ambiguous_cells(config.kam.tol, config.circle_tol),
        files: [GRID_CSV, TONGUE_JSON, RESULT_JSON, CONFIG_JSON].iter().map(|s| s.to_string()).collect(),
    }
}

pub fn tongue(result: &ScanResult) -> Tongue {
    Tongue {
        alpha0: result.alpha0,
        left: result.tongue_left.clone(),
        right: result.tongue_right.clone(),
        transitions: result.transitions.clone(),
    }
}

#[derive(Serialize)]
struct Row<'a> {
    alpha: f64,
    eps: f64,
    class: &'a str,
    kam_residual: Option<f64>,
    rotation: Option<f64>,
    circle_defect: Option<f64>,
    normal_multiplier: Option<f64>,
    drift: Option<f64>,
    reasons: String,
}

/// One row per cell: parameters, class and the main diagnostics.
pub fn grid_csv(result: &ScanResult) -> Result<String, ConfigError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in &result.cells {
        w.serialize(Row {
            alpha: c.alpha,
            eps: c.eps,
            class: c.class.label(),
            kam_residual: c.kam.as_ref().map(|k| k.residual),
            rotation: c.rotation(),
            circle_defect: c.circle_defect(),
            normal_multiplier: c.normal_multiplier(),
            drift: c.circles.first().map(|d| d.drift),
            reasons: c.reasons.join(";"),
        })
        .map_err(|e| ConfigError::Invalid(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| ConfigError::Invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, ConfigError> {
    fs::create_dir_all(dir).map_err(|source| ConfigError::Write { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| ConfigError::Write { path: path.clone(), source })?;
    Ok(path)
}

/// Write the CSV grid, tongue polylines, full result, config and manifest.
pub fn write_scan(dir: &Path, config: &ScanConfig, result: &ScanResult) -> Result<Manifest, ConfigError> {
    let m = manifest(config, result);
    write_file(dir, GRID_CSV, &grid_csv(result)?)?;
    write_file(dir, TONGUE_JSON, &to_json(&tongue(result)))?;
    write_file(dir, RESULT_JSON, &to_json(result))?;
    write_file(dir, CONFIG_JSON, &to_json(config))?;
    write_file(dir, MANIFEST_JSON, &to_json(&m))?;
    Ok(m)
}
