use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ProfileSpec};
use super::{fmt_float, thread_pool, write_json, TOOL_VERSION};
use crate::entanglement::{entropy_of_block_with, EntropyOptions, EntropyReport};
use crate::error::{Error, Result};
use crate::ground_state::GroundStateOptions;
use crate::lattice::Lattice;

pub const CSV_HEADER: [&str; 7] = ["profile_id", "m", "L", "J", "entropy_bits", "schmidt_1", "residual"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub profile_id: String,
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "J")]
    pub j: f64,
    /// NaN for failed points.
    pub entropy_bits: f64,
    pub schmidt_1: f64,
    pub residual: f64,
}

impl ScanRow {
    fn record(&self) -> [String; 7] {
        [
            self.profile_id.clone(),
            self.m.to_string(),
            self.l.to_string(),
            fmt_float(self.j),
            fmt_float(self.entropy_bits),
            fmt_float(self.schmidt_1),
            fmt_float(self.residual),
        ]
    }

    pub fn failed(&self) -> bool {
        !self.entropy_bits.is_finite()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedPoint {
    pub profile_id: String,
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub profile_id: String,
    #[serde(rename = "J")]
    pub j: f64,
    pub points: usize,
    pub max_entropy_bits: Option<f64>,
    /// Least-squares slope of S against log2(L + 1).
    pub slope: Option<f64>,
    pub slope_error: Option<String>,
    pub saturating: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub tool_version: String,
    pub scenario: String,
    pub slope_threshold: f64,
    pub profiles: Vec<ProfileSummary>,
    pub failures: Vec<FailedPoint>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    pub summary: ScanSummary,
}

const SLOPE_NOTE: &str = "a fitted slope separates saturation from logarithmic growth over the scanned L range; \
it does not certify a uniform bound";

/// `scan.csv` -> `scan.summary.json`.
pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.json")
}

struct Point<'a> {
    spec: &'a ProfileSpec,
    m: usize,
    l: usize,
}

fn compute(point: &Point, tol: f64, max_n: usize) -> std::result::Result<EntropyReport, Error> {
    let profile = point.spec.build(Lattice::new(point.m, point.l))?;
    let opts = EntropyOptions {
        ground_state: GroundStateOptions { max_sites: max_n, ..GroundStateOptions::with_tol(tol) },
        ..Default::default()
    };
    entropy_of_block_with(&profile, opts)
}

/// Runs every (profile, L, m) point on a bounded pool; rows are written and
/// flushed in sorted order as soon as all earlier rows are done.
pub fn run_entropy_scan(config: &ExperimentConfig, out: Option<&Path>, workers: usize) -> Result<ScanTable> {
    let scan = config.scan()?;
    let mut specs: Vec<&ProfileSpec> = config.profiles.iter().collect();
    specs.sort_by(|a, b| a.id.cmp(&b.id));
    let mut ls = scan.l.values();
    ls.sort_unstable();
    ls.dedup();
    let mut ms = scan.m.values();
    ms.sort_unstable();
    ms.dedup();
    let mut points = Vec::new();
    for &spec in &specs {
        for &l in &ls {
            points.extend(ms.iter().map(|&m| Point { spec, m, l }));
        }
    }

    let mut writer = match out {
        Some(path) => {
            let mut w = csv::Writer::from_writer(File::create(path)?);
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            w.flush()?;
            Some(w)
        }
        None => None,
    };

    let pool = thread_pool(workers)?;
    let (tx, rx) = mpsc::channel();
    let mut rows = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    std::thread::scope(|s| -> Result<()> {
        let points = &points;
        s.spawn(move || {
            pool.install(|| {
                points.par_iter().enumerate().for_each_with(tx, |tx, (i, p)| {
                    let _ = tx.send((i, compute(p, scan.tol, scan.max_n)));
                });
            })
        });
        let mut pending = BTreeMap::new();
        for (i, result) in rx {
            pending.insert(i, result);
            while let Some(result) = pending.remove(&rows.len()) {
                let p = &points[rows.len()];
                let row = match result {
                    Ok(rep) => ScanRow {
                        profile_id: p.spec.id.clone(),
                        m: p.m,
                        l: p.l,
                        j: p.spec.j,
                        entropy_bits: rep.entropy_bits,
                        schmidt_1: rep.spectrum.largest(),
                        residual: rep.residual,
                    },
                    Err(e) => {
                        failures.push(FailedPoint { profile_id: p.spec.id.clone(), m: p.m, l: p.l, error: e.to_string() });
                        ScanRow {
                            profile_id: p.spec.id.clone(),
                            m: p.m,
                            l: p.l,
                            j: p.spec.j,
                            entropy_bits: f64::NAN,
                            schmidt_1: f64::NAN,
                            residual: f64::NAN,
                        }
                    }
                };
                if let Some(w) = writer.as_mut() {
                    w.write_record(row.record()).map_err(csv_err)?;
                    w.flush()?;
                }
                rows.push(row);
            }
        }
        Ok(())
    })?;

    let profiles = specs
        .iter()
        .map(|spec| summarize(spec, &rows, scan.slope_threshold))
        .collect();
    let summary = ScanSummary {
        tool_version: TOOL_VERSION.into(),
        scenario: config.scenario.name().into(),
        slope_threshold: scan.slope_threshold,
        profiles,
        failures,
        note: SLOPE_NOTE.into(),
    };
    if let Some(path) = out {
        write_json(&summary_path(path), &summary)?;
    }
    Ok(ScanTable { rows, summary })
}

fn summarize(spec: &ProfileSpec, rows: &[ScanRow], threshold: f64) -> ProfileSummary {
    let mine: Vec<&ScanRow> = rows.iter().filter(|r| r.profile_id == spec.id && !r.failed()).collect();
    let max_entropy_bits = mine.iter().map(|r| r.entropy_bits).reduce(f64::max);
    let (slope, slope_error) = match fit_slope(mine.iter().copied()) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    ProfileSummary {
        profile_id: spec.id.clone(),
        j: spec.j,
        points: mine.len(),
        max_entropy_bits,
        slope,
        slope_error,
        saturating: slope.map(|s| s <= threshold),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// Least-squares slope of `entropy_bits` against `log2(L + 1)` over all
/// successful rows; needs at least four distinct `L`.
pub fn fit_slope<'a>(rows: impl IntoIterator<Item = &'a ScanRow>) -> Result<f64> {
    let pts: Vec<(f64, f64)> = rows
        .into_iter()
        .filter(|r| !r.failed())
        .map(|r| (((r.l + 1) as f64).log2(), r.entropy_bits))
        .collect();
    let distinct: BTreeSet<u64> = pts.iter().map(|p| p.0.to_bits()).collect();
    if distinct.len() < 4 {
        return Err(Error::InvalidArgument(format!("slope fit needs 4 distinct L values, have {}", distinct.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

pub fn read_scan_csv(path: &Path) -> Result<Vec<ScanRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(Error::InvalidArgument(format!("{}: unexpected header {header:?}", path.display())));
    }
    reader.deserialize().map(|r| r.map_err(csv_err)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// `s_A < threshold < s_B`.
    Discriminated,
    Indistinguishable,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub slope_a: f64,
    pub slope_b: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    #[serde(rename = "L_values")]
    pub l_values: Vec<usize>,
    pub note: String,
}

/// Compares a scan expected to saturate (A) with one expected to grow (B).
pub fn run_uniformity_report(table_a: &[ScanRow], table_b: &[ScanRow], threshold: f64) -> Result<UniformityReport> {
    let ls = |t: &[ScanRow]| t.iter().map(|r| r.l).collect::<BTreeSet<_>>();
    let (la, lb) = (ls(table_a), ls(table_b));
    if la != lb {
        return Err(Error::InvalidArgument(format!("tables cover different L ranges: {la:?} vs {lb:?}")));
    }
    let slope_a = fit_slope(table_a)?;
    let slope_b = fit_slope(table_b)?;
    let verdict = if (slope_a - slope_b).abs() <= 1e-12 * (1.0 + slope_a.abs()) {
        Verdict::Indistinguishable
    } else if slope_a < threshold && threshold < slope_b {
        Verdict::Discriminated
    } else {
        Verdict::Inconclusive
    };
    Ok(UniformityReport { slope_a, slope_b, threshold, verdict, l_values: la.into_iter().collect(), note: SLOPE_NOTE.into() })
}
