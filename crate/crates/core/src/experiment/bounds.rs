use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::TOOL_VERSION;
use crate::error::Result;
use crate::spinflip::feynman_kac_entry;
use crate::transfer::{check_bounds, transfer, BoundReport, ClusterBlock};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeynmanKacCheck {
    pub cluster: usize,
    pub from: usize,
    pub to: usize,
    pub exact: f64,
    pub mc: f64,
    pub std_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferBoundsReport {
    pub tool_version: String,
    pub seed: u64,
    pub clusters: usize,
    pub eigenvalue_violations: usize,
    pub max_semigroup_error: f64,
    pub max_symmetry_error: f64,
    pub paper_formula_exceeds_one: usize,
    pub equilibration_inconsistent: usize,
    pub feynman_kac: Vec<FeynmanKacCheck>,
    pub feynman_kac_failures: usize,
    pub reports: Vec<BoundReport>,
}

fn max_rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (a - b).iter().fold(0.0f64, |m, x| m.max(x.abs())) / scale
}

/// Random clusters with fields in `[C1, ratio * C1]` and `s` in
/// `[s_min, s_max]`; the first `fk_checks` clusters get a Feynman–Kac spot
/// check of one random entry at 3 standard errors.
pub fn run_transfer_bounds(config: &ExperimentConfig) -> Result<TransferBoundsReport> {
    let t = config.transfer()?;
    let seed = config.require_seed()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(t.clusters);
    let mut max_semigroup_error = 0.0f64;
    let mut max_symmetry_error = 0.0f64;
    let mut feynman_kac = Vec::new();
    for i in 0..t.clusters {
        let len = rng.random_range(1..=t.max_len);
        let fields = (0..len).map(|_| rng.random_range(t.c1..=t.field_ratio * t.c1)).collect();
        let s = rng.random_range(t.s_min..=t.s_max);
        let block = ClusterBlock::new(fields, t.j)?;
        reports.push(check_bounds(&block, s)?);

        let u = rng.random_range(0.0..=1.0) * s;
        let (gu, gv, gs) = (transfer(&block, u)?, transfer(&block, s - u)?, transfer(&block, s)?);
        max_semigroup_error = max_semigroup_error.max(max_rel_diff(&gs.matrix, &(&gu.matrix * &gv.matrix)));
        max_symmetry_error = max_symmetry_error.max(max_rel_diff(&gs.matrix, &gs.matrix.transpose()));

        if i < t.fk_checks {
            let (from, to) = (rng.random_range(0..block.dim()), rng.random_range(0..block.dim()));
            let fk_seed = rng.random::<u64>();
            let (mc, std_error) = feynman_kac_entry(&block, s, from, to, t.fk_samples, fk_seed);
            let exact = gs.matrix[(to, from)];
            let pass = (mc - exact).abs() <= 3.0 * std_error;
            feynman_kac.push(FeynmanKacCheck { cluster: i, from, to, exact, mc, std_error, pass });
        }
    }
    Ok(TransferBoundsReport {
        tool_version: TOOL_VERSION.into(),
        seed,
        clusters: reports.len(),
        eigenvalue_violations: reports.iter().filter(|r| !r.lambda_in_bounds).count(),
        max_semigroup_error,
        max_symmetry_error,
        paper_formula_exceeds_one: reports.iter().filter(|r| r.paper_formula_exceeds_one).count(),
        equilibration_inconsistent: reports.iter().filter(|r| !r.equilibration_consistent).count(),
        feynman_kac_failures: feynman_kac.iter().filter(|c| !c.pass).count(),
        feynman_kac,
        reports,
    })
}
