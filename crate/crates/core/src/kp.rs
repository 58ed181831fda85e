//! Numeric Kotecký–Preiss certificate for the space-time cluster expansion.
//!
//! The time axis of every column is cut into short intervals of length `δ1`
//! (high-field columns) or long intervals of length `δ2 = q·δ1` (columns of a
//! low-field cluster). Four families of grid objects carry activity bounds:
//! horizontal bonds (`b1`), short vertical intervals (`b2`), equilibrated long
//! intervals (`b3`) and non-equilibrated long intervals (`b4`). A certificate
//! records that, for given `θ` and `η`, every object's bound absorbs the
//! geometric factor and that the resulting polymer sum satisfies the
//! Kotecký–Preiss condition.
//!
//! Parameters span many orders of magnitude (`C2` can exceed `e^{3000}`), so
//! `q`, `δ1` and `C2` are held as logarithms and every inequality is checked in
//! the log domain.

use std::f64::consts::{E, LN_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transfer::{measure_equilibration, ClusterBlock, SpectralSummary};

/// Per-object area plus diameter, in grid-object units.
pub const C1_GEOM: f64 = 2.0;
/// Objects touching a short interval: two vertical neighbours plus up to
/// three overlapping intervals in each adjacent column.
pub const DEGREE: usize = 8;
pub const C_SAFETY: f64 = 2.0;
/// Time lengths at which cluster transfer matrices are measured.
pub const EQUILIBRATION_TIMES: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

const MAX_DELTA2_DOUBLINGS: u32 = 48;
const ETA_STEPS: usize = 40;
/// `θ` is chosen this far (in log) inside the absorption limits.
const THETA_MARGIN: f64 = 0.1;

/// Serialize infinite logarithms as the strings `"-inf"` / `"inf"`.
mod log_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("bad log value {other:?}"))),
            },
        }
    }
}

fn representable(ln: f64) -> Option<f64> {
    let v = ln.exp();
    v.is_finite().then_some(v)
}

/// `δ2` and `q = 2^q_log2`; `δ1 = δ2 / q` is derived, never stored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub delta2: f64,
    pub q_log2: u32,
}

impl GridParams {
    pub fn new(delta2: f64, q_log2: u32) -> Result<Self> {
        if !(delta2 > 0.0 && delta2.is_finite()) || q_log2 == 0 {
            return Err(Error::InvalidArgument(format!("invalid grid: delta2 = {delta2}, q = 2^{q_log2}")));
        }
        Ok(Self { delta2, q_log2 })
    }

    /// Grid from `δ1` and `δ2`; the ratio must be a power of two.
    pub fn from_lengths(delta1: f64, delta2: f64) -> Result<Self> {
        let ratio = delta2 / delta1;
        let k = ratio.log2().round();
        if !(k >= 1.0) || (2f64.powf(k) - ratio).abs() > 1e-12 * ratio {
            return Err(Error::InvalidArgument(format!("delta2/delta1 = {ratio} is not a power of two ≥ 2")));
        }
        Self::new(delta2, k as u32)
    }

    pub fn q(&self) -> Option<u64> {
        1u64.checked_shl(self.q_log2)
    }

    pub fn ln_delta1(&self) -> f64 {
        let d1 = self.delta1();
        if d1 >= f64::MIN_POSITIVE {
            d1.ln()
        } else {
            self.delta2.ln() - self.q_log2 as f64 * LN_2
        }
    }

    /// Zero once `δ1` underflows.
    pub fn delta1(&self) -> f64 {
        match i32::try_from(self.q_log2) {
            Ok(k) if k < 1100 => self.delta2 * 2f64.powi(-k),
            _ => 0.0,
        }
    }
}

/// `(J, C1, C2, K)` with `C2` as a logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileBounds {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "ln_C2")]
    pub ln_c2: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

impl ProfileBounds {
    pub fn new(j: f64, c1: f64, c2: f64, k: usize) -> Self {
        Self { j, c1, ln_c2: c2.ln(), k }
    }

    pub fn c2(&self) -> Option<f64> {
        representable(self.ln_c2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundLedger {
    /// `J δ1`.
    #[serde(with = "log_serde")]
    pub ln_b1: f64,
    /// `exp(-C2 δ1)`, the bound used by the checker.
    #[serde(with = "log_serde")]
    pub ln_b2: f64,
    /// `exp(-2 C2 δ1)`, the tighter integrated form, reported only.
    #[serde(with = "log_serde")]
    pub ln_b2_integrated: f64,
    /// `c_meas exp(-γ_min δ2)`.
    #[serde(with = "log_serde")]
    pub ln_b3: f64,
    /// `exp(2 J K δ2)`.
    pub ln_b4: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    /// `None` when `exp(ln_b4)` overflows.
    pub b4: Option<f64>,
    pub gamma_min: Option<f64>,
    pub c_meas: f64,
    pub c1_geom: f64,
    pub degree: usize,
    /// Degree with long intervals resolved against the short grid,
    /// `2 + 2(q + 2)`; reported, not used.
    pub resolved_degree: Option<u64>,
}

/// Gap data for every cluster length `1..=K`.
pub fn build_ledger(bounds: &ProfileBounds, grid: &GridParams, spectra: &[SpectralSummary]) -> Result<BoundLedger> {
    if !(bounds.j >= 0.0 && bounds.c1 > 0.0 && bounds.ln_c2.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid profile bounds {bounds:?}")));
    }
    for len in 1..=bounds.k {
        if !spectra.iter().any(|s| s.length == len) {
            return Err(Error::MissingPerronData(len));
        }
    }
    let present: Vec<&SpectralSummary> = spectra.iter().filter(|s| s.length >= 1 && s.length <= bounds.k).collect();
    let gamma_min = present.iter().map(|s| s.gamma).reduce(f64::min);
    let c_meas = C_SAFETY * present.iter().map(|s| s.c_meas).fold(0.0, f64::max);

    let ln_delta1 = grid.ln_delta1();
    let ln_b1 = bounds.j.ln() + ln_delta1;
    let c2_delta1 = (bounds.ln_c2 + ln_delta1).exp();
    let ln_b2 = -c2_delta1;
    let ln_b2_integrated = -2.0 * c2_delta1;
    let ln_b3 = match gamma_min {
        Some(g) => c_meas.ln() - g * grid.delta2,
        None => f64::NEG_INFINITY,
    };
    let ln_b4 = 2.0 * bounds.j * bounds.k as f64 * grid.delta2;
    let resolved_degree = grid.q().and_then(|q| q.checked_add(2)).and_then(|x| x.checked_mul(2)).map(|x| x + 2);
    Ok(BoundLedger {
        ln_b1,
        ln_b2,
        ln_b2_integrated,
        ln_b3,
        ln_b4,
        b1: ln_b1.exp(),
        b2: ln_b2.exp(),
        b3: ln_b3.exp(),
        b4: representable(ln_b4),
        gamma_min,
        c_meas,
        c1_geom: C1_GEOM,
        degree: DEGREE,
        resolved_degree,
    })
}

/// Smallest root of `T = η e^{dT}`, which exists iff `d η e ≤ 1`.
///
/// It dominates the generating function `η(1+T)^d` of `d`-ary trees, and
/// hence `Σ η^{|R|}` over connected object sets containing a fixed object in
/// a graph of maximal degree `d`.
pub fn tree_bound(eta: f64, degree: usize) -> Option<f64> {
    let d = degree as f64;
    if degree == 0 {
        return Some(eta);
    }
    if d * eta * E > 1.0 {
        return None;
    }
    let f = |t: f64| eta * (d * t).exp() - t;
    let (mut lo, mut hi) = (0.0, 1.0 / d);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub tag: String,
    #[serde(with = "log_serde")]
    pub ln_lhs: f64,
    #[serde(with = "log_serde")]
    pub ln_rhs: f64,
    /// `ln_rhs - ln_lhs`; nonnegative when the inequality holds.
    #[serde(with = "log_serde")]
    pub margin: f64,
}

impl InequalityCheck {
    fn new(tag: &str, ln_lhs: f64, ln_rhs: f64) -> Self {
        let margin = if ln_lhs == f64::NEG_INFINITY { f64::INFINITY } else { ln_rhs - ln_lhs };
        Self { tag: tag.into(), ln_lhs, ln_rhs, margin }
    }

    pub fn holds(&self) -> bool {
        self.margin >= 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpCertificate {
    pub bounds: Option<ProfileBounds>,
    pub grid: Option<GridParams>,
    pub ledger: BoundLedger,
    /// Zero when `θ` underflows; `ln_theta` is authoritative.
    pub theta: f64,
    #[serde(with = "log_serde")]
    pub ln_theta: f64,
    pub eta: f64,
    pub tree_bound: Option<f64>,
    pub checks: Vec<InequalityCheck>,
    pub valid: bool,
    /// Smallest log margin over all checks.
    #[serde(with = "log_serde")]
    pub slack: f64,
    pub failing: Vec<String>,
    pub assumptions: Vec<String>,
}

pub fn assumptions() -> Vec<String> {
    [
        "polymers are connected sets of grid objects; a(R) + d(R) <= c1_geom |R| with c1_geom = 2 in object units",
        "each object's bound is multiplied by exp(2 c1_geom) before comparison with eta",
        "connectivity degree d = 8 counts a short interval's neighbours; long intervals are not resolved against the short grid (resolved_degree reports that count)",
        "the polymer sum through a fixed object is bounded by the smallest root of T = eta exp(d T)",
        "Kotecky-Preiss condition with a(R) = |R|: (d + 1) T <= 1",
        "equilibrated long intervals are absorbed directly: b3 exp(2 c1_geom) <= eta",
        "non-equilibrated long intervals attach to horizontal bonds (at most two per bond) and take theta^(1/4) each; the bond keeps theta^(1/2)",
        "b2 uses the looser exp(-C2 delta1) bound; the integrated exp(-2 C2 delta1) form is reported as ln_b2_integrated",
        "b3 uses the minimum measured gap over clusters of length 1..K and twice the maximum measured equilibration constant",
        "cluster lengths are bounded by K (upper-case K throughout)",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// Evaluate every inequality of the chain for given `θ` and `η`.
pub fn kp_check(ledger: &BoundLedger, theta: f64, eta: f64) -> KpCertificate {
    kp_check_ln(ledger, theta.ln(), eta)
}

/// As [`kp_check`] with `θ` given by its logarithm.
pub fn kp_check_ln(ledger: &BoundLedger, ln_theta: f64, eta: f64) -> KpCertificate {
    let absorb = 2.0 * ledger.c1_geom;
    let (lt, le) = (ln_theta, eta.ln());
    let tree = tree_bound(eta, ledger.degree);
    let d = ledger.degree as f64;
    // Without horizontal bonds no long interval can stay non-equilibrated
    // (at most two per bond), and without clusters there are no long intervals.
    let no_bonds = ledger.ln_b1 == f64::NEG_INFINITY;
    let no_clusters = ledger.gamma_min.is_none();
    let mut checks = vec![
        InequalityCheck::new("theta_in_unit_interval", lt, 0.0),
        InequalityCheck::new("eta_in_unit_interval", le, 0.0),
        InequalityCheck::new("horizontal_bond_b1", ledger.ln_b1, lt),
        InequalityCheck::new("short_interval_b2", ledger.ln_b2, lt),
        InequalityCheck::new("equilibrated_long_b3", ledger.ln_b3 + absorb, le),
        InequalityCheck::new("horizontal_absorption", if no_bonds { f64::NEG_INFINITY } else { 0.5 * lt + absorb }, le),
        InequalityCheck::new("short_absorption", lt + absorb, le),
        InequalityCheck::new(
            "long_absorption_b4",
            if no_bonds || no_clusters { f64::NEG_INFINITY } else { 0.25 * lt + absorb + ledger.ln_b4 },
            le,
        ),
        InequalityCheck::new("tree_sum_domain", (d * eta * E).ln(), 0.0),
        InequalityCheck::new("kotecky_preiss", tree.map_or(f64::INFINITY, |t| ((d + 1.0) * t).ln()), 0.0),
    ];
    if ln_theta.is_nan() || !(eta > 0.0) {
        checks.push(InequalityCheck::new("positive_parameters", 0.0, f64::NEG_INFINITY));
    }
    let slack = checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    let failing: Vec<String> = checks.iter().filter(|c| !c.holds()).map(|c| c.tag.clone()).collect();
    let valid = failing.is_empty() && slack > 0.0;
    KpCertificate {
        bounds: None,
        grid: None,
        ledger: ledger.clone(),
        theta: ln_theta.exp(),
        ln_theta,
        eta,
        tree_bound: tree,
        checks,
        valid,
        slack,
        failing,
        assumptions: assumptions(),
    }
}

/// Gap data for homogeneous clusters at the field lower bound `c1`, lengths
/// `1..=k`. Lower fields close the gap, so these are the worst clusters.
pub fn cluster_inventory(j: f64, c1: f64, k: usize) -> Result<Vec<SpectralSummary>> {
    (1..=k)
        .map(|len| {
            let block = ClusterBlock::new(vec![c1; len], j)?;
            measure_equilibration(&block, &EQUILIBRATION_TIMES)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierEntry {
    pub eta: f64,
    pub delta2: Option<f64>,
    pub q_log2: Option<u32>,
    #[serde(rename = "ln_C2")]
    pub ln_c2: Option<f64>,
    pub ln_theta: Option<f64>,
    #[serde(with = "log_serde")]
    pub slack: f64,
    pub valid: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub found: bool,
    /// The first valid certificate in schedule order, or the best-slack
    /// attempt when none is valid.
    pub certificate: Option<KpCertificate>,
    pub frontier: Vec<FrontierEntry>,
    /// Failing inequality of the best attempt on failure.
    pub binding: Option<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub ln_c2_start: f64,
    pub max_delta2_doublings: u32,
    pub eta_steps: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { ln_c2_start: 0.0, max_delta2_doublings: MAX_DELTA2_DOUBLINGS, eta_steps: ETA_STEPS }
    }
}

struct Attempt {
    entry: FrontierEntry,
    certificate: Option<KpCertificate>,
}

/// Parameters in proof order for one `η`: `δ2` first, then `θ`, then `δ1`,
/// and finally `C2`.
fn attempt(j: f64, c1: f64, k: usize, spectra: &[SpectralSummary], eta: f64, opts: &SearchOptions) -> Result<Attempt> {
    let absorb = 2.0 * C1_GEOM;
    let le = eta.ln();
    let mut entry = FrontierEntry {
        eta,
        delta2: None,
        q_log2: None,
        ln_c2: None,
        ln_theta: None,
        slack: f64::NEG_INFINITY,
        valid: false,
        note: None,
    };

    // δ2: doubling until equilibrated long intervals are absorbed.
    let probe = |delta2: f64| -> Result<BoundLedger> {
        build_ledger(&ProfileBounds { j, c1, ln_c2: opts.ln_c2_start, k }, &GridParams::new(delta2, 1)?, spectra)
    };
    let mut delta2 = None;
    for i in 0..=opts.max_delta2_doublings {
        let d2 = 2f64.powi(i as i32);
        if probe(d2)?.ln_b3 + absorb <= le {
            delta2 = Some(d2);
            break;
        }
    }
    let Some(delta2) = delta2 else {
        entry.note = Some("delta2 schedule exhausted before b3 absorption".into());
        return Ok(Attempt { entry, certificate: None });
    };
    entry.delta2 = Some(delta2);

    // θ: largest value the absorption inequalities allow.
    let ln_b4 = 2.0 * j * k as f64 * delta2;
    let lt = [2.0 * (le - absorb), le - absorb, 4.0 * (le - absorb - ln_b4)]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
        - THETA_MARGIN;
    entry.ln_theta = Some(lt);

    // δ1 = δ2 / 2^k: smallest k with J δ1 <= θ.
    let q_log2 = if j > 0.0 { (((j * delta2).ln() - lt) / LN_2).ceil().max(1.0) as u32 } else { 1 };
    let mut grid = GridParams::new(delta2, q_log2)?;
    if j > 0.0 && j.ln() + grid.ln_delta1() > lt {
        grid.q_log2 += 1;
    }
    entry.q_log2 = Some(grid.q_log2);

    // C2 = 2^i C2_start: smallest i with exp(-C2 δ1) <= θ.
    let needed = (-lt).ln() - grid.ln_delta1();
    let steps = ((needed - opts.ln_c2_start) / LN_2).ceil().max(0.0);
    let mut ln_c2 = opts.ln_c2_start + steps * LN_2;
    let mut bounds = ProfileBounds { j, c1, ln_c2, k };
    if build_ledger(&bounds, &grid, spectra)?.ln_b2 > lt {
        ln_c2 += LN_2;
        bounds.ln_c2 = ln_c2;
    }
    entry.ln_c2 = Some(ln_c2);

    let ledger = build_ledger(&bounds, &grid, spectra)?;
    let mut cert = kp_check_ln(&ledger, lt, eta);
    cert.bounds = Some(bounds);
    cert.grid = Some(grid);
    entry.slack = cert.slack;
    entry.valid = cert.valid;
    if !cert.valid {
        entry.note = Some(format!("failing: {}", cert.failing.join(", ")));
    }
    Ok(Attempt { entry, certificate: Some(cert) })
}

/// `η` runs over a half-octave grid below the tree-sum domain edge
/// `1/(d e)`; the first `η` giving a valid certificate wins.
pub fn search_parameters(j: f64, c1: f64, k: usize, spectra: &[SpectralSummary]) -> Result<SearchOutcome> {
    search_parameters_with(j, c1, k, spectra, SearchOptions::default())
}

pub fn search_parameters_with(
    j: f64,
    c1: f64,
    k: usize,
    spectra: &[SpectralSummary],
    opts: SearchOptions,
) -> Result<SearchOutcome> {
    if !(j >= 0.0 && j.is_finite() && c1 > 0.0 && c1.is_finite()) {
        return Err(Error::InvalidArgument(format!("need J >= 0 and C1 > 0, got J = {j}, C1 = {c1}")));
    }
    let eta_max = 1.0 / (DEGREE as f64 * E);
    let etas: Vec<f64> = (0..opts.eta_steps).map(|i| eta_max * 2f64.powf(-(i as f64) / 2.0)).collect();
    let attempts: Vec<Attempt> =
        etas.par_iter().map(|&eta| attempt(j, c1, k, spectra, eta, &opts)).collect::<Result<_>>()?;

    let first_valid = attempts.iter().position(|a| a.entry.valid);
    let frontier: Vec<FrontierEntry> = attempts.iter().map(|a| a.entry.clone()).collect();
    match first_valid {
        Some(i) => Ok(SearchOutcome {
            found: true,
            certificate: attempts[i].certificate.clone(),
            frontier: frontier[..=i].to_vec(),
            binding: None,
        }),
        None => {
            let best = attempts
                .iter()
                .filter_map(|a| a.certificate.as_ref())
                .max_by(|a, b| a.slack.total_cmp(&b.slack))
                .cloned();
            let binding = best.as_ref().and_then(|c| {
                c.checks.iter().min_by(|a, b| a.margin.total_cmp(&b.margin)).map(|c| c.tag.clone())
            });
            Ok(SearchOutcome { found: false, certificate: best, frontier, binding })
        }
    }
}
