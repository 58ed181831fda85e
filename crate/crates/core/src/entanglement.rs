//! Schmidt spectrum and von Neumann entropy of the block `[0, L]` in a pure
//! ground state.
//!
//! The amplitude vector is viewed as a (block) x (environment) matrix `M`.
//! The reduced density matrices are `M M^T` and `M^T M`; only the smaller of
//! the two is formed and diagonalized.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground_state::{ground_state_with, GroundStateOptions, GroundStateResult};
use crate::lanczos::norm;
use crate::lattice::{FieldProfile, Lattice};

pub const DEFAULT_MAX_BLOCK: usize = 14;
const CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Block,
    Environment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntropyUnit {
    Bits,
    Nats,
}

/// Eigenvalues of the reduced density matrix, descending, summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    pub values: Vec<f64>,
}

impl SchmidtSpectrum {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&v| v < -CLAMP || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("negative Schmidt weight {bad:e}")));
        }
        values.iter_mut().for_each(|v| *v = v.max(0.0));
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values })
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn second(&self) -> f64 {
        self.values.get(1).copied().unwrap_or(0.0)
    }

    pub fn rank(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub entropy_bits: f64,
    pub spectrum: SchmidtSpectrum,
    pub residual: f64,
}

impl EntropyReport {
    pub fn block(&self) -> (i64, i64) {
        (0, self.l as i64)
    }
}

/// `(block index, environment index)` of basis state `b`.
fn split_index(lattice: Lattice, b: usize) -> (usize, usize) {
    let m = lattice.m;
    let width = lattice.l + 1;
    let low = b & ((1 << m) - 1);
    let block = (b >> m) & ((1 << width) - 1);
    let high = b >> (m + width);
    (block, low | (high << m))
}

/// Amplitudes arranged as a (block configurations) x (environment configurations) matrix.
pub fn amplitude_matrix(state: &GroundStateResult) -> DMatrix<f64> {
    let lattice = state.lattice;
    let block_dim = 1 << (lattice.l + 1);
    let env_dim = state.amplitudes.len() / block_dim;
    let mut m = DMatrix::zeros(block_dim, env_dim);
    for (b, &a) in state.amplitudes.iter().enumerate() {
        let (i, e) = split_index(lattice, b);
        m[(i, e)] = a;
    }
    m
}

fn check_norm(state: &GroundStateResult) -> Result<()> {
    let dev = (norm(&state.amplitudes) - 1.0).abs();
    if dev > 1e-8 {
        return Err(Error::NotNormalized(dev));
    }
    Ok(())
}

pub fn reduced_density_matrix(state: &GroundStateResult, side: Side) -> Result<DMatrix<f64>> {
    check_norm(state)?;
    let m = amplitude_matrix(state);
    Ok(match side {
        Side::Block => &m * m.transpose(),
        Side::Environment => m.transpose() * &m,
    })
}

/// Spectrum computed from the Gram matrix of the chosen side. Zeros beyond
/// the Schmidt rank bound `min(dim_block, dim_env)` are dropped.
pub fn schmidt_spectrum_from(state: &GroundStateResult, side: Side) -> Result<SchmidtSpectrum> {
    let rho = reduced_density_matrix(state, side)?;
    let block_dim = 1usize << (state.lattice.l + 1);
    let keep = block_dim.min(state.amplitudes.len() / block_dim);
    let mut spec = SchmidtSpectrum::new(rho.symmetric_eigenvalues().iter().copied().collect())?;
    spec.values.truncate(keep);
    Ok(spec)
}

pub fn schmidt_spectrum(state: &GroundStateResult) -> Result<SchmidtSpectrum> {
    let block_dim = 1usize << (state.lattice.l + 1);
    let env_dim = state.amplitudes.len() / block_dim;
    let side = if block_dim <= env_dim { Side::Block } else { Side::Environment };
    schmidt_spectrum_from(state, side)
}

/// `-sum p log2 p`, with `0 log 0 = 0`.
pub fn entanglement_entropy(spectrum: &SchmidtSpectrum) -> f64 {
    entanglement_entropy_in(spectrum, EntropyUnit::Bits)
}

pub fn entanglement_entropy_in(spectrum: &SchmidtSpectrum, unit: EntropyUnit) -> f64 {
    let nats: f64 = spectrum
        .values
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    let s = match unit {
        EntropyUnit::Bits => nats / std::f64::consts::LN_2,
        EntropyUnit::Nats => nats,
    };
    s.max(0.0)
}

#[derive(Clone, Copy, Debug)]
pub struct EntropyOptions {
    pub ground_state: GroundStateOptions,
    pub max_block: usize,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self { ground_state: GroundStateOptions::default(), max_block: DEFAULT_MAX_BLOCK }
    }
}

pub fn entropy_of_block(profile: &FieldProfile, tol: f64) -> Result<EntropyReport> {
    let opts = EntropyOptions {
        ground_state: GroundStateOptions::with_tol(tol),
        ..Default::default()
    };
    entropy_of_block_with(profile, opts)
}

pub fn entropy_of_block_with(profile: &FieldProfile, opts: EntropyOptions) -> Result<EntropyReport> {
    let lattice = profile.lattice();
    if lattice.l + 1 > opts.max_block {
        return Err(Error::TooLarge { n: lattice.l + 1, max: opts.max_block });
    }
    let state = ground_state_with(profile, opts.ground_state)?;
    report_for(&state)
}

pub fn report_for(state: &GroundStateResult) -> Result<EntropyReport> {
    let spectrum = schmidt_spectrum(state)?;
    Ok(EntropyReport {
        m: state.lattice.m,
        l: state.lattice.l,
        entropy_bits: entanglement_entropy(&spectrum),
        spectrum,
        residual: state.residual,
    })
}
