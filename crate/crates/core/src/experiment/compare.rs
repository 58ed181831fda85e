use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EndpointSpec, ExperimentConfig};
use super::{thread_pool, TOOL_VERSION};
use crate::error::Result;
use crate::ground_state::{ground_state, ground_state_marginal, SpinConfig};
use crate::lattice::{decompose_clusters, Lattice};
use crate::spinflip::{estimate_marginal_with, finite_beta_marginal, EndpointLaw, MarginalEstimate, MarginalOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationRow {
    pub configuration: SpinConfig,
    pub mc: f64,
    pub ed: f64,
    /// Batch-means standard error, floored at the binomial error of the
    /// exact probability so that unvisited rare configurations stay finite.
    pub std_error: f64,
    pub z: f64,
    /// Exact free-endpoint law at this beta.
    pub finite_beta: Option<f64>,
    pub z_finite_beta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaComparison {
    pub beta: f64,
    /// Distance of the estimate from the ground-state marginal.
    pub tv_distance: f64,
    /// `Σ std_error / 2`, the typical distance caused by sampling noise alone.
    pub tv_noise: f64,
    /// Distance of the exact finite-beta law from the ground-state marginal.
    pub tv_finite_beta: Option<f64>,
    pub max_abs_z: f64,
    pub max_abs_z_finite_beta: Option<f64>,
    /// Every configuration within `z_max` of the ground-state marginal.
    pub pass: bool,
    /// Every configuration within `z_max` of the exact finite-beta law.
    pub pass_finite_beta: Option<bool>,
    pub rows: Vec<ConfigurationRow>,
    pub estimate: MarginalEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McCompareReport {
    pub tool_version: String,
    pub profile_id: String,
    pub fields: Vec<f64>,
    #[serde(rename = "J")]
    pub j: f64,
    pub seed: u64,
    pub endpoint: String,
    pub ground_energy: f64,
    pub z_max: f64,
    pub comparisons: Vec<BetaComparison>,
    /// The estimate's distance to the ground-state marginal never rises by
    /// more than twice the noise level along the increasing beta list.
    pub tv_decreasing: bool,
    /// The exact finite-beta distance decreases strictly (free endpoints only).
    pub tv_finite_beta_decreasing: Option<bool>,
    /// Ground-state agreement at the largest beta, finite-beta agreement at
    /// every beta, and both distance checks.
    pub pass: bool,
}

pub fn run_mc_compare(config: &ExperimentConfig, workers: usize) -> Result<McCompareReport> {
    let mc = config.mc()?;
    let seed = config.require_seed()?;
    let spec = &config.profiles[0];
    let profile = spec.build(Lattice::new(mc.m, mc.l))?;
    let gs = ground_state(&profile, 1e-12)?;
    let sites: Vec<i64> = profile.lattice().sites().collect();
    let exact = ground_state_marginal(&gs, &sites)?;
    let law = match &mc.endpoint {
        EndpointSpec::Free => EndpointLaw::Free,
        EndpointSpec::Perron { threshold } => EndpointLaw::perron(&profile, &decompose_clusters(&profile, *threshold)?)?,
    };
    let mut betas = mc.beta.clone();
    betas.sort_by(f64::total_cmp);

    let pool = thread_pool(workers)?;
    let comparisons: Vec<BetaComparison> = pool.install(|| {
        betas
            .par_iter()
            .map(|&beta| {
                let opts = MarginalOptions { law: law.clone(), batches: mc.batches };
                let est = estimate_marginal_with(&profile, beta, mc.sweeps, mc.burn_in, seed, opts)?;
                let finite = match mc.endpoint {
                    EndpointSpec::Free => Some(finite_beta_marginal(&profile, beta)?),
                    EndpointSpec::Perron { .. } => None,
                };
                Ok(compare(beta, est, &exact, finite.as_ref(), mc.z_max))
            })
            .collect::<Result<_>>()
    })?;

    let tv_decreasing = comparisons.windows(2).all(|w| w[1].tv_distance <= w[0].tv_distance + 2.0 * w[1].tv_noise);
    let tv_finite_beta_decreasing = comparisons
        .iter()
        .map(|c| c.tv_finite_beta)
        .collect::<Option<Vec<f64>>>()
        .map(|tv| tv.windows(2).all(|w| w[1] < w[0]));
    let pass = tv_decreasing
        && tv_finite_beta_decreasing != Some(false)
        && comparisons.iter().all(|c| c.pass_finite_beta != Some(false))
        && comparisons.last().is_some_and(|c| c.pass);
    Ok(McCompareReport {
        tool_version: TOOL_VERSION.into(),
        profile_id: spec.id.clone(),
        fields: profile.fields().to_vec(),
        j: profile.j(),
        seed,
        endpoint: match mc.endpoint {
            EndpointSpec::Free => "free".into(),
            EndpointSpec::Perron { .. } => "perron".into(),
        },
        ground_energy: gs.energy,
        z_max: mc.z_max,
        comparisons,
        tv_decreasing,
        tv_finite_beta_decreasing,
        pass,
    })
}

fn z_score(mc: f64, reference: f64, batch_error: f64, n: f64) -> (f64, f64) {
    let std_error = batch_error.max((reference * (1.0 - reference) / n).sqrt());
    let diff = mc - reference;
    (std_error, if diff == 0.0 { 0.0 } else { diff / std_error })
}

fn compare(
    beta: f64,
    estimate: MarginalEstimate,
    exact: &BTreeMap<SpinConfig, f64>,
    finite: Option<&BTreeMap<SpinConfig, f64>>,
    z_max: f64,
) -> BetaComparison {
    let n = estimate.samples as f64;
    let rows: Vec<ConfigurationRow> = exact
        .iter()
        .map(|(c, &ed)| {
            let mc = estimate.estimate[c];
            let (std_error, z) = z_score(mc, ed, estimate.std_error[c], n);
            let finite_beta = finite.map(|f| f[c]);
            let z_finite_beta = finite_beta.map(|r| z_score(mc, r, estimate.std_error[c], n).1);
            ConfigurationRow { configuration: c.clone(), mc, ed, std_error, z, finite_beta, z_finite_beta }
        })
        .collect();
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    let max_abs_z_finite_beta = finite.map(|_| rows.iter().filter_map(|r| r.z_finite_beta).map(f64::abs).fold(0.0, f64::max));
    let tv_finite_beta = finite.map(|f| 0.5 * f.iter().map(|(c, r)| (r - exact[c]).abs()).sum::<f64>());
    BetaComparison {
        beta,
        tv_distance: estimate.tv_distance(exact),
        tv_noise: 0.5 * estimate.std_error.values().sum::<f64>(),
        tv_finite_beta,
        max_abs_z,
        max_abs_z_finite_beta,
        pass: max_abs_z <= z_max,
        pass_finite_beta: max_abs_z_finite_beta.map(|z| z <= z_max),
        rows,
        estimate,
    }
}
