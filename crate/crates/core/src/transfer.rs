//! Transfer matrices of a low-field cluster over a time stretch of length `s`.
//!
//! `g_s(σ, σ')` is the Poisson average of the Gibbs weight over cluster
//! trajectories pinned to `σ` at time 0 and `σ'` at time `s`. By Feynman-Kac
//! it equals `[exp(s (G - Σh I))](σ, σ')`, where `G` has the field `h_i` on
//! every single-site flip and the intra-cluster coupling `±(J/2) Σ σ_j σ_{j+1}`
//! on the diagonal.
//!
//! Cluster basis: bit `i` is the `i`-th cluster site, bit value 0 means `+1`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::expm;

pub const DEFAULT_MAX_CLUSTER: usize = 6;

/// Sign of the intra-cluster coupling in the path weight.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSign {
    /// `exp(+J/2 ∫σσ)`, consistent with the ferromagnetic Hamiltonian.
    #[default]
    Ferromagnetic,
    /// `exp(-J/2 ∫σσ)`.
    Antiferromagnetic,
}

impl CouplingSign {
    fn factor(self) -> f64 {
        match self {
            CouplingSign::Ferromagnetic => 1.0,
            CouplingSign::Antiferromagnetic => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterBlock {
    pub fields: Vec<f64>,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(default)]
    pub sign: CouplingSign,
}

impl ClusterBlock {
    pub fn new(fields: Vec<f64>, j: f64) -> Result<Self> {
        Self::with_max_len(fields, j, DEFAULT_MAX_CLUSTER)
    }

    pub fn with_max_len(fields: Vec<f64>, j: f64, max_len: usize) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::InvalidArgument("empty cluster".into()));
        }
        if fields.len() > max_len {
            return Err(Error::TooLarge { n: fields.len(), max: max_len });
        }
        if fields.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidProfile("cluster fields must be positive".into()));
        }
        if !(j >= 0.0 && j.is_finite()) {
            return Err(Error::InvalidProfile(format!("coupling must be nonnegative, got {j}")));
        }
        Ok(Self { fields, j, sign: CouplingSign::Ferromagnetic })
    }

    pub fn with_sign(mut self, sign: CouplingSign) -> Self {
        self.sign = sign;
        self
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn dim(&self) -> usize {
        1 << self.len()
    }

    /// Diagonal potential `±(J/2) Σ σ_j σ_{j+1}` of basis state `b`.
    pub fn potential(&self, b: usize) -> f64 {
        let l = self.len();
        let aligned = (0..l.saturating_sub(1))
            .map(|k| if ((b >> k) ^ (b >> (k + 1))) & 1 == 0 { 1.0 } else { -1.0 })
            .sum::<f64>();
        self.sign.factor() * 0.5 * self.j * aligned
    }
}

pub fn cluster_generator(block: &ClusterBlock) -> DMatrix<f64> {
    let dim = block.dim();
    let mut g = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        g[(b, b)] = block.potential(b);
        for (i, &h) in block.fields.iter().enumerate() {
            g[(b ^ (1 << i), b)] = h;
        }
    }
    g
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferBlock {
    pub s: f64,
    pub matrix: DMatrix<f64>,
}

pub fn transfer(block: &ClusterBlock, s: f64) -> Result<TransferBlock> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("time length must be positive, got {s}")));
    }
    let total: f64 = block.fields.iter().sum();
    let dim = block.dim();
    let a = (cluster_generator(block) - DMatrix::identity(dim, dim) * total) * s;
    Ok(TransferBlock { s, matrix: expm(&a) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerronData {
    pub lambda: f64,
    pub p: Vec<f64>,
    pub lambda2_abs: f64,
    /// `-(1/s) ln(lambda2_abs / lambda)`.
    pub gap_rate: f64,
    /// `max |g_s/λ - p p^T| / (lambda2_abs / λ)`.
    pub equilibration_c: f64,
}

/// Max-entry distance of `g/λ` from the rank-one projector `p p^T`.
fn rank_one_deviation(tb: &TransferBlock, lambda: f64, p: &[f64]) -> f64 {
    let n = p.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((tb.matrix[(i, j)] / lambda - p[i] * p[j]).abs());
        }
    }
    worst
}

pub fn perron(tb: &TransferBlock) -> PerronData {
    let sym = (&tb.matrix + tb.matrix.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let top = eig.eigenvalues.imax();
    let lambda = eig.eigenvalues[top];
    let mut p: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    if p.iter().sum::<f64>() < 0.0 {
        p.iter_mut().for_each(|x| *x = -*x);
    }
    let lambda2_abs = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != top)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    let ratio = lambda2_abs / lambda;
    let gap_rate = -ratio.ln() / tb.s;
    let deviation = rank_one_deviation(tb, lambda, &p);
    let equilibration_c = if ratio > 0.0 { deviation / ratio } else { 0.0 };
    PerronData { lambda, p, lambda2_abs, gap_rate, equilibration_c }
}

/// Gap rate and equilibration constant `c = sup_s dev(s) e^{γ s}` measured
/// over the time lengths `s_values`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub length: usize,
    pub gamma: f64,
    pub c_meas: f64,
    /// Perron vector (independent of `s`).
    pub p: Vec<f64>,
}

pub fn measure_equilibration(block: &ClusterBlock, s_values: &[f64]) -> Result<SpectralSummary> {
    if s_values.is_empty() {
        return Err(Error::InvalidArgument("no time lengths to measure".into()));
    }
    let mut gamma = f64::INFINITY;
    let mut c = 0.0f64;
    let mut p = Vec::new();
    for &s in s_values {
        let tb = transfer(block, s)?;
        let pd = perron(&tb);
        gamma = gamma.min(pd.gap_rate);
        p = pd.p.clone();
        // dev(s) e^{γ s} with the rate measured at this s
        c = c.max(rank_one_deviation(&tb, pd.lambda, &pd.p) * (pd.gap_rate * s).exp());
    }
    Ok(SpectralSummary { length: block.len(), gamma, c_meas: c, p })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub cluster: Vec<f64>,
    #[serde(rename = "J")]
    pub j: f64,
    pub s: f64,
    pub lambda: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub lambda_in_bounds: bool,
    pub gap_rate: f64,
    /// `λ - |λ_2|` of `g_s`.
    pub spectral_gap: f64,
    /// `exp(-2 J l s) / Π_j sinh(h_j s)` as printed.
    pub paper_gap_formula: f64,
    pub paper_formula_exceeds_one: bool,
    pub paper_formula_below_gap: bool,
    pub equilibration_c: f64,
    /// `dev(2s) / (c(s) (λ2/λ)^2)`; at most 1.1 counts as consistent.
    pub equilibration_ratio: f64,
    pub equilibration_consistent: bool,
}

pub fn check_bounds(block: &ClusterBlock, s: f64) -> Result<BoundReport> {
    let tb = transfer(block, s)?;
    let pd = perron(&tb);
    let l = block.len() as f64;
    let lambda_lo = (-l * block.j * s).exp();
    let lambda_hi = (l * block.j * s).exp();
    let slack = 1e-12 * lambda_hi;

    let sinh_prod: f64 = block.fields.iter().map(|&h| (h * s).sinh()).product();
    let paper_gap_formula = (-2.0 * block.j * l * s).exp() / sinh_prod;
    let spectral_gap = pd.lambda - pd.lambda2_abs;

    let doubled = transfer(block, 2.0 * s)?;
    let pd2 = perron(&doubled);
    let dev2 = rank_one_deviation(&doubled, pd2.lambda, &pd2.p);
    let ratio = pd.lambda2_abs / pd.lambda;
    let predicted = pd.equilibration_c * ratio * ratio;
    let equilibration_ratio = if predicted > 0.0 { dev2 / predicted } else if dev2 == 0.0 { 0.0 } else { f64::INFINITY };

    Ok(BoundReport {
        cluster: block.fields.clone(),
        j: block.j,
        s,
        lambda: pd.lambda,
        lambda_lo,
        lambda_hi,
        lambda_in_bounds: pd.lambda >= lambda_lo - slack && pd.lambda <= lambda_hi + slack,
        gap_rate: pd.gap_rate,
        spectral_gap,
        paper_gap_formula,
        paper_formula_exceeds_one: paper_gap_formula > 1.0,
        paper_formula_below_gap: paper_gap_formula <= spectral_gap,
        equilibration_c: pd.equilibration_c,
        equilibration_ratio,
        equilibration_consistent: equilibration_ratio <= 1.1,
    })
}
