//! Configuration-driven experiments: entropy scans, saturation-vs-growth
//! reports, path-integral vs exact comparisons, transfer-matrix bound checks
//! and certificate searches. Outputs are byte-deterministic for a fixed
//! configuration and seed.

mod bounds;
mod compare;
pub mod config;
mod scan;

use std::path::Path;

use serde::Serialize;

pub use bounds::{run_transfer_bounds, FeynmanKacCheck, TransferBoundsReport};
pub use compare::{run_mc_compare, BetaComparison, ConfigurationRow, McCompareReport};
pub use config::{ExperimentConfig, Scenario};
pub use scan::{
    fit_slope, read_scan_csv, run_entropy_scan, run_uniformity_report, summary_path, ScanRow, ScanSummary, ScanTable,
    UniformityReport, Verdict, CSV_HEADER,
};

use crate::error::{Error, Result};
use crate::kp::{cluster_inventory, search_parameters, SearchOutcome};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Twelve significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get().min(4))
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn run_kp_search(config: &ExperimentConfig) -> Result<SearchOutcome> {
    let kp = config.kp()?;
    search_parameters(kp.j, kp.c1, kp.k, &cluster_inventory(kp.j, kp.c1, kp.k)?)
}
