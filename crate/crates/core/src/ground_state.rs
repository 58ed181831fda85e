//! Matrix-free transverse-field Ising Hamiltonian
//! `H = -(J/2) sum_<x,y> s3_x s3_y - sum_x h_x s1_x` in the s3 product basis,
//! and its ground state.
//!
//! Basis convention: bit `k` of a basis index is the spin of the `k`-th site in
//! ascending order (bit 0 is site `-m`); bit value 0 means `s3 = +1`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lanczos::{self, LanczosOptions};
use crate::lattice::{FieldProfile, Lattice};

pub const DEFAULT_MAX_SITES: usize = 24;
const PARALLEL_THRESHOLD: usize = 1 << 14;

/// `s3` eigenvalue (+1 / -1) of site `k` in basis state `b`.
#[inline]
pub fn spin(b: usize, k: usize) -> f64 {
    if (b >> k) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianOperator {
    n: usize,
    fields: Vec<f64>,
    diagonal: Vec<f64>,
}

impl HamiltonianOperator {
    pub fn new(profile: &FieldProfile) -> Result<Self> {
        Self::with_max_sites(profile, DEFAULT_MAX_SITES)
    }

    pub fn with_max_sites(profile: &FieldProfile, max_sites: usize) -> Result<Self> {
        let n = profile.n_sites();
        if n > max_sites || n >= usize::BITS as usize - 1 {
            return Err(Error::TooLarge { n, max: max_sites });
        }
        let half_j = 0.5 * profile.j();
        let bonds = (n - 1) as f64;
        let bond_mask = (1usize << (n - 1)) - 1;
        let diagonal = (0..1usize << n)
            .map(|b| {
                // aligned neighbours contribute -J/2, anti-aligned +J/2
                let walls = ((b ^ (b >> 1)) & bond_mask).count_ones() as f64;
                -half_j * (bonds - 2.0 * walls)
            })
            .collect();
        Ok(Self { n, fields: profile.fields().to_vec(), diagonal })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    /// Crude bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        let d = self.diagonal.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        d + self.fields.iter().sum::<f64>()
    }

    #[inline]
    fn row(&self, b: usize, v: &[f64]) -> f64 {
        let mut acc = self.diagonal[b] * v[b];
        for (k, &h) in self.fields.iter().enumerate() {
            acc -= h * v[b ^ (1 << k)];
        }
        acc
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        if v.len() >= PARALLEL_THRESHOLD {
            out.par_chunks_mut(4096).enumerate().for_each(|(c, chunk)| {
                let base = c * 4096;
                for (i, o) in chunk.iter_mut().enumerate() {
                    *o = self.row(base + i, v);
                }
            });
        } else {
            for (b, o) in out.iter_mut().enumerate() {
                *o = self.row(b, v);
            }
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        let mut out = vec![0.0; v.len()];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// `<v, H v>` for a vector of matching dimension.
    pub fn expectation(&self, v: &[f64]) -> Result<f64> {
        Ok(lanczos::dot(v, &self.apply(v)?))
    }
}

pub fn apply_hamiltonian(h: &HamiltonianOperator, v: &[f64]) -> Result<Vec<f64>> {
    h.apply(v)
}

#[derive(Clone, Copy, Debug)]
pub struct GroundStateOptions {
    pub tol: f64,
    pub max_sites: usize,
    pub krylov_dim: usize,
    pub max_iterations: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_sites: DEFAULT_MAX_SITES, krylov_dim: 60, max_iterations: 5000 }
    }
}

impl GroundStateOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundStateResult {
    pub lattice: Lattice,
    pub energy: f64,
    /// Unit-norm amplitudes over the s3 basis, sign-normalized.
    pub amplitudes: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl GroundStateResult {
    pub fn n_sites(&self) -> usize {
        self.lattice.len()
    }
}

pub fn ground_state(profile: &FieldProfile, tol: f64) -> Result<GroundStateResult> {
    ground_state_with(profile, GroundStateOptions::with_tol(tol))
}

pub fn ground_state_with(profile: &FieldProfile, opts: GroundStateOptions) -> Result<GroundStateResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let op = HamiltonianOperator::with_max_sites(profile, opts.max_sites)?;
    let dim = op.dim();
    // keep the Krylov band under ~512 MiB
    let band_cap = ((512usize << 20) / (8 * dim)).max(4);
    let lopts = LanczosOptions {
        tol: opts.tol,
        krylov_dim: opts.krylov_dim.min(band_cap),
        max_iterations: opts.max_iterations,
    };
    // The Perron vector is positive, so the uniform start always overlaps it.
    let start = vec![1.0; dim];
    let pair = lanczos::lowest_eigenpair(dim, |v, out| op.apply_into(v, out), &start, lopts)?;

    let mut amplitudes = pair.vector;
    let pivot = amplitudes
        .iter()
        .copied()
        .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
    if pivot < 0.0 {
        amplitudes.iter_mut().for_each(|x| *x = -*x);
    }

    let mut warnings = Vec::new();
    if let Some(next) = pair.next_ritz {
        if next - pair.value < 1e-10 * op.norm_bound() {
            warnings.push(format!(
                "near-degenerate lowest Ritz pair: gap {:e} below 1e-10 * |H|",
                next - pair.value
            ));
        }
    }

    Ok(GroundStateResult {
        lattice: profile.lattice(),
        energy: pair.value,
        amplitudes,
        residual: pair.residual,
        iterations: pair.iterations,
        warnings,
    })
}

/// A configuration of `s3` values, displayed as a string of `+` and `-`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig(pub Vec<i8>);

impl SpinConfig {
    /// Spins of the sites selected by `indices` in basis state `b`.
    pub fn from_basis(b: usize, indices: &[usize]) -> Self {
        Self(indices.iter().map(|&k| if (b >> k) & 1 == 0 { 1 } else { -1 }).collect())
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }

    /// All `2^n` configurations in basis order of their own bits.
    pub fn all(n: usize) -> impl Iterator<Item = SpinConfig> {
        let idx: Vec<usize> = (0..n).collect();
        (0..1usize << n).map(move |b| SpinConfig::from_basis(b, &idx))
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for SpinConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' | '\u{2212}' => Ok(-1),
                _ => Err(Error::InvalidArgument(format!("bad spin character {c:?}"))),
            })
            .collect::<Result<Vec<i8>>>()
            .map(SpinConfig)
    }
}

impl Serialize for SpinConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SpinConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Marginal of `|psi|^2` on `sites` (any order; keys follow that order).
pub fn ground_state_marginal(result: &GroundStateResult, sites: &[i64]) -> Result<BTreeMap<SpinConfig, f64>> {
    let indices = sites
        .iter()
        .map(|&x| result.lattice.index_of(x))
        .collect::<Result<Vec<_>>>()?;
    let mut out = BTreeMap::new();
    for c in SpinConfig::all(indices.len()) {
        out.insert(c, 0.0);
    }
    for (b, a) in result.amplitudes.iter().enumerate() {
        *out.get_mut(&SpinConfig::from_basis(b, &indices)).expect("all keys present") += a * a;
    }
    Ok(out)
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct VectorHeader {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub site_order: String,
    pub energy: f64,
    pub residual: f64,
}

/// One JSON header line, then `2^n` little-endian `f64` amplitudes.
pub fn write_vector_file<W: Write>(result: &GroundStateResult, mut w: W) -> Result<()> {
    let header = VectorHeader {
        n: result.n_sites(),
        m: result.lattice.m,
        l: result.lattice.l,
        site_order: "ascending from -m; bit k = k-th site; bit 0 = +1".into(),
        energy: result.energy,
        residual: result.residual,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for a in &result.amplitudes {
        w.write_all(&a.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vector_file<R: BufRead>(mut r: R) -> Result<(VectorHeader, Vec<f64>)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: VectorHeader = serde_json::from_str(line.trim_end())?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let expected = 8usize << header.n;
    if bytes.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: bytes.len() });
    }
    let amps = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header, amps))
}
