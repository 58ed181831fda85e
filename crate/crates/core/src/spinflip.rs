//! Poisson spin-flip path integral on `Λ × [-β/2, β/2]`.
//!
//! Each site carries a piecewise-constant ±1 trajectory whose flips form a
//! Poisson process of intensity `h_x`, with a uniformly random initial spin.
//! The Gibbs weight is `exp((J/2) Σ_<x,y> ∫ σ_x σ_y dt)`, the normalization of
//! the Hamiltonian `-(J/2) Σ σ3σ3 - Σ h σ1`, so the time-zero slice converges
//! to `|<η, ψ>|²` as `β → ∞`.
//!
//! The sampler is a per-site independence Metropolis chain: each proposal is a
//! fresh trajectory drawn from the base Poisson measure, so the acceptance
//! ratio is the Gibbs weight ratio alone.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground_state::{HamiltonianOperator, SpinConfig};
use crate::lattice::{ClusterDecomposition, FieldProfile};
use crate::transfer::{measure_equilibration, ClusterBlock};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub site: i64,
    pub beta: f64,
    /// Spin at `-β/2`.
    pub initial_spin: i8,
    /// Strictly increasing, inside `(-β/2, β/2)`.
    pub flips: Vec<f64>,
}

impl Trajectory {
    pub fn constant(site: i64, beta: f64, spin: i8) -> Self {
        Self { site, beta, initial_spin: spin, flips: Vec::new() }
    }

    /// Right-continuous spin value at time `t`.
    pub fn spin_at(&self, t: f64) -> i8 {
        let n = self.flips.partition_point(|&f| f <= t);
        if n % 2 == 0 {
            self.initial_spin
        } else {
            -self.initial_spin
        }
    }

    pub fn final_spin(&self) -> i8 {
        if self.flips.len().is_multiple_of(2) {
            self.initial_spin
        } else {
            -self.initial_spin
        }
    }
}

fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if !(mean > 0.0) {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as usize).unwrap_or(0)
}

fn flip_times<R: Rng>(h: f64, beta: f64, rng: &mut R) -> Vec<f64> {
    let half = 0.5 * beta;
    let n = poisson_count(h * beta, rng);
    let mut flips: Vec<f64> = (0..n).map(|_| rng.random_range(-half..half)).collect();
    flips.sort_by(f64::total_cmp);
    flips.retain(|&t| t > -half);
    flips.dedup();
    flips
}

/// Draw from the base measure `μ_{h, [-β/2, β/2]}`.
pub fn sample_trajectory<R: Rng>(site: i64, h: f64, beta: f64, rng: &mut R) -> Trajectory {
    let initial_spin = if rng.random_bool(0.5) { 1 } else { -1 };
    Trajectory { site, beta, initial_spin, flips: flip_times(h, beta, rng) }
}

/// Same flip law, initial spin prescribed.
pub fn sample_pinned<R: Rng>(site: i64, h: f64, beta: f64, initial_spin: i8, rng: &mut R) -> Trajectory {
    Trajectory { site, beta, initial_spin, flips: flip_times(h, beta, rng) }
}

/// `∫ σ_1(t) σ_2(t) dt` over `[-β/2, β/2]`, exact.
pub fn overlap_integral(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.beta != b.beta {
        return Err(Error::InvalidArgument(format!("mismatched beta {} vs {}", a.beta, b.beta)));
    }
    Ok(overlap_unchecked(a, b))
}

fn overlap_unchecked(a: &Trajectory, b: &Trajectory) -> f64 {
    let half = 0.5 * a.beta;
    let mut product = (a.initial_spin * b.initial_spin) as f64;
    let (mut i, mut j) = (0, 0);
    let mut t = -half;
    let mut total = 0.0;
    loop {
        let next = match (a.flips.get(i), b.flips.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        total += product * (next - t);
        t = next;
        if a.flips.get(i) == Some(&next) {
            product = -product;
            i += 1;
        }
        if b.flips.get(j) == Some(&next) {
            product = -product;
            j += 1;
        }
    }
    total + product * (half - t)
}

/// Law of the cluster spins at the two time boundaries.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum EndpointLaw {
    /// Unconditioned: every spin ±1 with probability 1/2 at both ends.
    #[default]
    Free,
    /// Each cluster's boundary configuration weighted by the Perron vector of
    /// its transfer matrix; other sites stay free.
    Perron { clusters: Vec<PerronEndpoint> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerronEndpoint {
    /// Lattice indices of the cluster sites, ascending.
    pub indices: Vec<usize>,
    /// `ln p(σ)` over the cluster basis (bit i = i-th cluster site, 0 = +1).
    pub log_p: Vec<f64>,
}

impl EndpointLaw {
    pub fn perron(profile: &FieldProfile, decomposition: &ClusterDecomposition) -> Result<Self> {
        let lattice = profile.lattice();
        let mut clusters = Vec::new();
        for c in &decomposition.clusters {
            let indices: Vec<usize> = (c.start..=c.end).map(|x| lattice.index_of(x)).collect::<Result<_>>()?;
            let fields = indices.iter().map(|&i| profile.fields()[i]).collect();
            let block = ClusterBlock::new(fields, profile.j())?;
            let summary = measure_equilibration(&block, &[1.0])?;
            let log_p = summary.p.iter().map(|x| x.ln()).collect();
            clusters.push(PerronEndpoint { indices, log_p });
        }
        Ok(EndpointLaw::Perron { clusters })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathConfiguration {
    pub beta: f64,
    pub trajectories: Vec<Trajectory>,
    pub log_weight: f64,
}

impl PathConfiguration {
    pub fn time_zero(&self) -> SpinConfig {
        SpinConfig(self.trajectories.iter().map(|t| t.spin_at(0.0)).collect())
    }
}

fn endpoint_term(law: &EndpointLaw, trajs: &[Trajectory]) -> f64 {
    match law {
        EndpointLaw::Free => 0.0,
        EndpointLaw::Perron { clusters } => clusters
            .iter()
            .map(|c| {
                let (mut bottom, mut top) = (0usize, 0usize);
                for (bit, &i) in c.indices.iter().enumerate() {
                    if trajs[i].initial_spin < 0 {
                        bottom |= 1 << bit;
                    }
                    if trajs[i].final_spin() < 0 {
                        top |= 1 << bit;
                    }
                }
                c.log_p[bottom] + c.log_p[top]
            })
            .sum(),
    }
}

fn cluster_term_for_site(law: &EndpointLaw, trajs: &[Trajectory], site: usize) -> f64 {
    match law {
        EndpointLaw::Free => 0.0,
        EndpointLaw::Perron { clusters } => clusters
            .iter()
            .filter(|c| c.indices.contains(&site))
            .map(|c| endpoint_term(&EndpointLaw::Perron { clusters: vec![c.clone()] }, trajs))
            .sum(),
    }
}

/// Sequential per-site independence Metropolis sampler with one random
/// stream per site.
pub struct PathSampler {
    fields: Vec<f64>,
    half_j: f64,
    law: EndpointLaw,
    config: PathConfiguration,
    rngs: Vec<ChaCha8Rng>,
    pub accepted: u64,
    pub proposed: u64,
}

fn site_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

impl PathSampler {
    pub fn new(profile: &FieldProfile, beta: f64, law: EndpointLaw, seed: u64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        let lattice = profile.lattice();
        let mut rngs: Vec<ChaCha8Rng> = (0..lattice.len()).map(|i| site_rng(seed, i)).collect();
        let trajectories = lattice
            .sites()
            .zip(profile.fields())
            .zip(rngs.iter_mut())
            .map(|((x, &h), rng)| sample_trajectory(x, h, beta, rng))
            .collect();
        let mut sampler = Self {
            fields: profile.fields().to_vec(),
            half_j: 0.5 * profile.j(),
            law,
            config: PathConfiguration { beta, trajectories, log_weight: 0.0 },
            rngs,
            accepted: 0,
            proposed: 0,
        };
        sampler.config.log_weight = sampler.full_log_weight();
        Ok(sampler)
    }

    pub fn config(&self) -> &PathConfiguration {
        &self.config
    }

    /// `(J/2) Σ_bonds ∫σσ` plus the endpoint-law term.
    pub fn full_log_weight(&self) -> f64 {
        let t = &self.config.trajectories;
        let bulk: f64 = t.windows(2).map(|w| overlap_unchecked(&w[0], &w[1])).sum();
        self.half_j * bulk + endpoint_term(&self.law, t)
    }

    fn local_weight(&self, k: usize, trajs: &[Trajectory], candidate: &Trajectory) -> f64 {
        let mut w = 0.0;
        if k > 0 {
            w += overlap_unchecked(&trajs[k - 1], candidate);
        }
        if k + 1 < trajs.len() {
            w += overlap_unchecked(candidate, &trajs[k + 1]);
        }
        self.half_j * w
    }

    /// One pass over all sites in ascending order.
    pub fn sweep(&mut self) {
        for k in 0..self.fields.len() {
            let beta = self.config.beta;
            let site = self.config.trajectories[k].site;
            let proposal = sample_trajectory(site, self.fields[k], beta, &mut self.rngs[k]);
            let trajs = &self.config.trajectories;
            let mut delta = self.local_weight(k, trajs, &proposal) - self.local_weight(k, trajs, &trajs[k]);
            if !matches!(self.law, EndpointLaw::Free) {
                let before = cluster_term_for_site(&self.law, trajs, k);
                let mut swapped = trajs.clone();
                swapped[k] = proposal.clone();
                delta += cluster_term_for_site(&self.law, &swapped, k) - before;
            }
            self.proposed += 1;
            let accept = delta >= 0.0 || self.rngs[k].random::<f64>() < delta.exp();
            if accept {
                self.config.trajectories[k] = proposal;
                self.config.log_weight += delta;
                self.accepted += 1;
            }
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// One sweep; the returned configuration replaces `config`.
pub fn mcmc_sweep(sampler: &mut PathSampler) -> &PathConfiguration {
    sampler.sweep();
    sampler.config()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalEstimate {
    pub beta: f64,
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub samples: u64,
    pub acceptance_rate: f64,
    pub batch_len: u64,
    pub counts: BTreeMap<SpinConfig, u64>,
    pub estimate: BTreeMap<SpinConfig, f64>,
    pub std_error: BTreeMap<SpinConfig, f64>,
    #[serde(skip)]
    batches: Vec<BTreeMap<SpinConfig, u64>>,
}

impl MarginalEstimate {
    fn from_batches(
        meta: (f64, usize, usize, u64, f64),
        n_sites: usize,
        batch_len: u64,
        batches: Vec<BTreeMap<SpinConfig, u64>>,
    ) -> Self {
        let (beta, sweeps, burn_in, seed, acceptance_rate) = meta;
        let mut counts: BTreeMap<SpinConfig, u64> = SpinConfig::all(n_sites).map(|c| (c, 0)).collect();
        for b in &batches {
            for (c, n) in b {
                *counts.get_mut(c).expect("complete key set") += n;
            }
        }
        let samples: u64 = counts.values().sum();
        let estimate = counts
            .iter()
            .map(|(c, &n)| (c.clone(), if samples > 0 { n as f64 / samples as f64 } else { 0.0 }))
            .collect();
        let nb = batches.len() as f64;
        let std_error = counts
            .keys()
            .map(|c| {
                if batches.len() < 2 {
                    return (c.clone(), f64::NAN);
                }
                let freqs: Vec<f64> = batches
                    .iter()
                    .map(|b| *b.get(c).unwrap_or(&0) as f64 / batch_len as f64)
                    .collect();
                let mean = freqs.iter().sum::<f64>() / nb;
                let var = freqs.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (nb - 1.0);
                (c.clone(), (var / nb).sqrt())
            })
            .collect();
        Self {
            beta,
            sweeps,
            burn_in,
            seed,
            samples,
            acceptance_rate,
            batch_len,
            counts,
            estimate,
            std_error,
            batches,
        }
    }

    /// Pool two independent chains with equal batch length by adding counts.
    pub fn merge(&self, other: &MarginalEstimate) -> Result<MarginalEstimate> {
        if self.batch_len != other.batch_len || self.beta != other.beta || self.counts.len() != other.counts.len() {
            return Err(Error::InvalidArgument("estimates are not poolable".into()));
        }
        let n_sites = self.counts.keys().next().map(|c| c.0.len()).unwrap_or(0);
        let batches = self.batches.iter().chain(&other.batches).cloned().collect();
        let total = (self.samples + other.samples) as f64;
        let acc = if total > 0.0 {
            (self.acceptance_rate * self.samples as f64 + other.acceptance_rate * other.samples as f64) / total
        } else {
            0.0
        };
        Ok(Self::from_batches(
            (self.beta, self.sweeps + other.sweeps, self.burn_in + other.burn_in, self.seed, acc),
            n_sites,
            self.batch_len,
            batches,
        ))
    }

    /// Total-variation distance to a reference distribution.
    pub fn tv_distance(&self, reference: &BTreeMap<SpinConfig, f64>) -> f64 {
        0.5 * self
            .estimate
            .iter()
            .map(|(c, p)| (p - reference.get(c).copied().unwrap_or(0.0)).abs())
            .sum::<f64>()
    }
}

#[derive(Clone, Debug)]
pub struct MarginalOptions {
    pub law: EndpointLaw,
    pub batches: usize,
}

impl Default for MarginalOptions {
    fn default() -> Self {
        Self { law: EndpointLaw::Free, batches: 50 }
    }
}

pub fn estimate_marginal(
    profile: &FieldProfile,
    beta: f64,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
) -> Result<MarginalEstimate> {
    estimate_marginal_with(profile, beta, sweeps, burn_in, seed, MarginalOptions::default())
}

/// Histogram of the time-zero slice over `sweeps - burn_in` recorded sweeps,
/// split into equal batches for batch-means standard errors.
pub fn estimate_marginal_with(
    profile: &FieldProfile,
    beta: f64,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
    opts: MarginalOptions,
) -> Result<MarginalEstimate> {
    if sweeps <= burn_in {
        return Err(Error::InvalidArgument(format!("sweeps ({sweeps}) must exceed burn-in ({burn_in})")));
    }
    let recorded = sweeps - burn_in;
    let n_batches = opts.batches.clamp(1, recorded);
    let batch_len = (recorded / n_batches) as u64;
    let mut sampler = PathSampler::new(profile, beta, opts.law, seed)?;
    for _ in 0..burn_in {
        sampler.sweep();
    }
    let mut batches = vec![BTreeMap::new(); n_batches];
    for i in 0..(batch_len as usize * n_batches) {
        sampler.sweep();
        *batches[i / batch_len as usize].entry(sampler.config().time_zero()).or_insert(0) += 1;
    }
    Ok(MarginalEstimate::from_batches(
        (beta, sweeps, burn_in, seed, sampler.acceptance_rate()),
        profile.n_sites(),
        batch_len,
        batches,
    ))
}

/// Largest lattice for [`finite_beta_marginal`] (dense diagonalization).
pub const MAX_EXACT_SITES: usize = 12;

/// Exact time-zero law of the free-endpoint path measure at finite `β`:
/// `r_β(ε) ∝ ((e^{-βH/2} 1)(ε))²`, with `1` the all-ones vector.
pub fn finite_beta_marginal(profile: &FieldProfile, beta: f64) -> Result<BTreeMap<SpinConfig, f64>> {
    let op = HamiltonianOperator::with_max_sites(profile, MAX_EXACT_SITES)?;
    let dim = op.dim();
    let mut h = DMatrix::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    let mut col = vec![0.0; dim];
    for b in 0..dim {
        e[b] = 1.0;
        op.apply_into(&e, &mut col);
        h.column_mut(b).copy_from_slice(&col);
        e[b] = 0.0;
    }
    let eig = SymmetricEigen::new(h);
    let e0 = eig.eigenvalues.min();
    let mut v = DVector::zeros(dim);
    for (k, &ek) in eig.eigenvalues.iter().enumerate() {
        let u = eig.eigenvectors.column(k);
        v += u * (u.sum() * (-0.5 * beta * (ek - e0)).exp());
    }
    let z: f64 = v.iter().map(|x| x * x).sum();
    let sites: Vec<usize> = (0..profile.n_sites()).collect();
    Ok(v.iter().enumerate().map(|(b, x)| (SpinConfig::from_basis(b, &sites), x * x / z)).collect())
}

/// Monte Carlo estimate of `g_s(from, to)` from pinned Poisson trajectories:
/// `E_from[exp(±(J/2) Σ ∫σσ) 1{σ(s) = to}]`. Returns `(mean, std_error)`.
pub fn feynman_kac_entry(block: &ClusterBlock, s: f64, from: usize, to: usize, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sign = match block.sign {
        crate::transfer::CouplingSign::Ferromagnetic => 1.0,
        crate::transfer::CouplingSign::Antiferromagnetic => -1.0,
    };
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let trajs: Vec<Trajectory> = block
            .fields
            .iter()
            .enumerate()
            .map(|(i, &h)| {
                let spin = if (from >> i) & 1 == 0 { 1 } else { -1 };
                sample_pinned(i as i64, h, s, spin, &mut rng)
            })
            .collect();
        let end = trajs
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, t)| if t.final_spin() < 0 { acc | 1 << i } else { acc });
        let x = if end == to {
            let bulk: f64 = trajs.windows(2).map(|w| overlap_unchecked(&w[0], &w[1])).sum();
            (sign * 0.5 * block.j * bulk).exp()
        } else {
            0.0
        };
        sum += x;
        sum_sq += x * x;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;

    fn traj(initial: i8, flips: &[f64], beta: f64) -> Trajectory {
        Trajectory { site: 0, beta, initial_spin: initial, flips: flips.to_vec() }
    }

    #[test]
    fn overlap_examples() {
        let b = 2.0;
        assert_eq!(overlap_integral(&traj(1, &[], b), &traj(1, &[], b)).unwrap(), 2.0);
        assert_eq!(overlap_integral(&traj(1, &[], b), &traj(-1, &[], b)).unwrap(), -2.0);
        assert_eq!(overlap_integral(&traj(1, &[], b), &traj(1, &[0.0], b)).unwrap(), 0.0);
        let v = overlap_integral(&traj(1, &[-0.5, 0.5], b), &traj(-1, &[0.0], b)).unwrap();
        // products: [-1,-0.5): -1, [-0.5,0): +1, [0,0.5): -1, [0.5,1]: +1
        assert!((v - 0.0).abs() < 1e-15);
        assert!(overlap_integral(&traj(1, &[], 1.0), &traj(1, &[], 2.0)).is_err());
    }

    #[test]
    fn trajectory_conventions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let t = sample_trajectory(3, 1.5, 2.0, &mut rng);
            assert!(t.flips.windows(2).all(|w| w[0] < w[1]));
            assert!(t.flips.iter().all(|&f| f > -1.0 && f < 1.0));
            assert_eq!(t.spin_at(-1.0), t.initial_spin);
            let parity = if t.flips.len() % 2 == 0 { 1 } else { -1 };
            assert_eq!(t.spin_at(1.0), t.initial_spin * parity);
        }
        let tiny = (0..1000).filter(|_| !sample_trajectory(0, 1e-12, 1.0, &mut rng).flips.is_empty()).count();
        assert_eq!(tiny, 0);
    }

    #[test]
    fn flip_count_is_poisson() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let total: usize = (0..n).map(|_| sample_trajectory(0, 2.0, 3.0, &mut rng).flips.len()).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 6.0).abs() < 3.0 * (6.0f64 / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn free_chain_always_accepts() {
        let p = FieldProfile::homogeneous(Lattice::new(1, 1), 1.0, 0.0).unwrap();
        let mut s = PathSampler::new(&p, 3.0, EndpointLaw::Free, 7).unwrap();
        for _ in 0..50 {
            s.sweep();
        }
        assert_eq!(s.acceptance_rate(), 1.0);

        let single = FieldProfile::homogeneous(Lattice::new(0, 0), 1.0, 2.0).unwrap();
        let mut s = PathSampler::new(&single, 3.0, EndpointLaw::Free, 7).unwrap();
        mcmc_sweep(&mut s);
        assert_eq!(s.config().log_weight, 0.0);
        assert_eq!(s.acceptance_rate(), 1.0);
    }

    #[test]
    fn coupled_pair_rejects_sometimes() {
        let p = FieldProfile::homogeneous(Lattice::new(0, 1), 1.0, 1.0).unwrap();
        let mut s = PathSampler::new(&p, 4.0, EndpointLaw::Free, 3).unwrap();
        for _ in 0..2000 {
            s.sweep();
        }
        let r = s.acceptance_rate();
        assert!(r > 0.0 && r < 1.0, "{r}");
        assert!((s.config().log_weight - s.full_log_weight()).abs() < 1e-9);
    }

    #[test]
    fn bad_arguments() {
        let p = FieldProfile::homogeneous(Lattice::new(0, 0), 1.0, 1.0).unwrap();
        assert!(estimate_marginal(&p, 1.0, 10, 10, 0).is_err());
        assert!(PathSampler::new(&p, 0.0, EndpointLaw::Free, 0).is_err());
    }

    #[test]
    fn seed_determinism_and_merge() {
        let p = FieldProfile::homogeneous(Lattice::new(0, 1), 1.0, 1.0).unwrap();
        let a = estimate_marginal(&p, 2.0, 2000, 100, 11).unwrap();
        let b = estimate_marginal(&p, 2.0, 2000, 100, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.estimate.values().sum::<f64>(), 1.0);
        let c = estimate_marginal(&p, 2.0, 2000, 100, 12).unwrap();
        let pooled = a.merge(&c).unwrap();
        assert_eq!(pooled.samples, a.samples + c.samples);
        for (k, v) in &pooled.counts {
            assert_eq!(*v, a.counts[k] + c.counts[k]);
        }
    }

    #[test]
    fn json_keys_are_spin_strings() {
        let p = FieldProfile::homogeneous(Lattice::new(0, 1), 1.0, 0.0).unwrap();
        let e = estimate_marginal(&p, 1.0, 200, 0, 1).unwrap();
        let v = serde_json::to_value(&e).unwrap();
        let counts = v["counts"].as_object().unwrap();
        assert_eq!(counts.keys().cloned().collect::<Vec<_>>(), vec!["++", "+-", "-+", "--"]);
        assert!(v["std_error"].as_object().unwrap().contains_key("-+"));
    }

    #[test]
    fn perron_endpoint_law_builds() {
        let p = FieldProfile::new(Lattice::new(1, 1), vec![3.0, 0.4, 0.5, 3.0], 1.0).unwrap();
        let d = crate::lattice::decompose_clusters(&p, 1.0).unwrap();
        let law = EndpointLaw::perron(&p, &d).unwrap();
        match &law {
            EndpointLaw::Perron { clusters } => {
                assert_eq!(clusters.len(), 1);
                assert_eq!(clusters[0].indices, vec![1, 2]);
                assert_eq!(clusters[0].log_p.len(), 4);
            }
            EndpointLaw::Free => unreachable!(),
        }
        let mut s = PathSampler::new(&p, 2.0, law, 5).unwrap();
        for _ in 0..200 {
            s.sweep();
        }
        assert!((s.config().log_weight - s.full_log_weight()).abs() < 1e-9);
    }
}
