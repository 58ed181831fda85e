//! Finite chains `{-m, ..., m+L}`, transverse-field profiles on them, and the
//! decomposition of the low-field set into maximal intervals ("clusters").

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The chain `{-m, -m+1, ..., m+L}`. The block `[0, L]` always lies inside it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lattice {
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
}

impl Lattice {
    pub fn new(m: usize, l: usize) -> Self {
        Self { m, l }
    }

    pub fn len(&self) -> usize {
        2 * self.m + self.l + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first_site(&self) -> i64 {
        -(self.m as i64)
    }

    pub fn last_site(&self) -> i64 {
        (self.m + self.l) as i64
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> + Clone {
        self.first_site()..=self.last_site()
    }

    pub fn contains(&self, site: i64) -> bool {
        (self.first_site()..=self.last_site()).contains(&site)
    }

    /// Position of `site` in ascending order (bit index in the spin basis).
    pub fn index_of(&self, site: i64) -> Result<usize> {
        if self.contains(site) {
            Ok((site - self.first_site()) as usize)
        } else {
            Err(Error::SiteOutOfRange(site))
        }
    }

    pub fn site_at(&self, index: usize) -> i64 {
        self.first_site() + index as i64
    }

    /// Index range of the block `[0, L]`.
    pub fn block_indices(&self) -> std::ops::Range<usize> {
        self.m..self.m + self.l + 1
    }
}

pub fn build_lattice(m: usize, l: usize) -> Lattice {
    Lattice::new(m, l)
}

/// Transverse fields `h_x > 0` (site-ordered, ascending from `-m`) and the
/// coupling `J >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct FieldProfile {
    lattice: Lattice,
    h: Vec<f64>,
    j: f64,
}

#[derive(Serialize, Deserialize)]
struct ProfileRepr {
    m: usize,
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "J")]
    j: f64,
    h: Vec<f64>,
}

impl TryFrom<ProfileRepr> for FieldProfile {
    type Error = Error;

    fn try_from(r: ProfileRepr) -> Result<Self> {
        FieldProfile::new(Lattice::new(r.m, r.l), r.h, r.j)
    }
}

impl From<FieldProfile> for ProfileRepr {
    fn from(p: FieldProfile) -> Self {
        ProfileRepr { m: p.lattice.m, l: p.lattice.l, j: p.j, h: p.h }
    }
}

impl FieldProfile {
    pub fn new(lattice: Lattice, h: Vec<f64>, j: f64) -> Result<Self> {
        if h.len() != lattice.len() {
            return Err(Error::InvalidProfile(format!(
                "{} field values for a lattice of {} sites",
                h.len(),
                lattice.len()
            )));
        }
        if let Some((i, &x)) = h.iter().enumerate().find(|(_, &x)| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidProfile(format!(
                "field at site {} must be positive and finite, got {x}",
                lattice.site_at(i)
            )));
        }
        if !(j >= 0.0 && j.is_finite()) {
            return Err(Error::InvalidProfile(format!("coupling must be nonnegative, got {j}")));
        }
        Ok(Self { lattice, h, j })
    }

    pub fn homogeneous(lattice: Lattice, h: f64, j: f64) -> Result<Self> {
        Self::new(lattice, vec![h; lattice.len()], j)
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    /// Fields in ascending site order.
    pub fn fields(&self) -> &[f64] {
        &self.h
    }

    pub fn field_at(&self, site: i64) -> Result<f64> {
        Ok(self.h[self.lattice.index_of(site)?])
    }

    pub fn with_coupling(&self, j: f64) -> Result<Self> {
        Self::new(self.lattice, self.h.clone(), j)
    }

    pub fn n_sites(&self) -> usize {
        self.h.len()
    }
}

/// `h_x = values[x mod p]` with the nonnegative modulus, so the profile is
/// genuinely `p`-periodic on negative sites too.
pub fn periodic_profile(lattice: Lattice, period_values: &[f64], j: f64) -> Result<FieldProfile> {
    if period_values.is_empty() {
        return Err(Error::InvalidProfile("empty period".into()));
    }
    let p = period_values.len() as i64;
    let h = lattice
        .sites()
        .map(|x| period_values[x.rem_euclid(p) as usize])
        .collect();
    FieldProfile::new(lattice, h, j)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum FieldLaw {
    Uniform { a: f64, b: f64 },
}

/// i.i.d. fields from `law`, deterministic in `seed`.
pub fn random_profile(lattice: Lattice, seed: u64, law: FieldLaw, j: f64) -> Result<FieldProfile> {
    let FieldLaw::Uniform { a, b } = law;
    if !(a > 0.0) || !(b >= a) || !b.is_finite() {
        return Err(Error::InvalidProfile(format!("uniform({a}, {b}) needs 0 < a <= b")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = (0..lattice.len())
        .map(|_| if a == b { a } else { rng.random_range(a..=b) })
        .collect();
    FieldProfile::new(lattice, h, j)
}

/// Inclusive integer interval `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cluster {
    pub start: i64,
    pub end: i64,
}

impl Cluster {
    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn contains(&self, x: i64) -> bool {
        (self.start..=self.end).contains(&x)
    }
}

/// The low-field set `A`, its maximal intervals, and the bounds `K`, `C1`, `C2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterDecomposition {
    pub low_field: Vec<i64>,
    pub clusters: Vec<Cluster>,
    /// Largest cluster size, 0 when `A` is empty.
    pub k: usize,
    /// `min_{x in A} h_x`, `+inf` when `A` is empty.
    pub c1: f64,
    /// `min_{x not in A} h_x`, `+inf` when the complement is empty.
    pub c2: f64,
}

impl ClusterDecomposition {
    /// Decomposition for an explicitly chosen `A`. Sites outside the lattice
    /// are rejected; duplicates are ignored.
    pub fn from_set(profile: &FieldProfile, set: &[i64]) -> Result<Self> {
        let lattice = profile.lattice();
        let mut in_a = vec![false; lattice.len()];
        for &x in set {
            in_a[lattice.index_of(x)?] = true;
        }
        Ok(Self::from_mask(profile, &in_a))
    }

    fn from_mask(profile: &FieldProfile, in_a: &[bool]) -> Self {
        let lattice = profile.lattice();
        let h = profile.fields();
        let mut clusters = Vec::new();
        let mut open: Option<i64> = None;
        for (i, &a) in in_a.iter().enumerate() {
            let x = lattice.site_at(i);
            match (a, open) {
                (true, None) => open = Some(x),
                (false, Some(s)) => {
                    clusters.push(Cluster { start: s, end: x - 1 });
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(s) = open {
            clusters.push(Cluster { start: s, end: lattice.last_site() });
        }
        let min_where = |want: bool| {
            in_a.iter()
                .zip(h)
                .filter(|(&a, _)| a == want)
                .map(|(_, &x)| x)
                .fold(f64::INFINITY, f64::min)
        };
        Self {
            low_field: lattice.sites().zip(in_a).filter(|(_, &a)| a).map(|(x, _)| x).collect(),
            k: clusters.iter().map(Cluster::len).max().unwrap_or(0),
            clusters,
            c1: min_where(true),
            c2: min_where(false),
        }
    }

    /// Checks the hypotheses `h >= C1` on `A`, `h >= C2` off `A`, cluster sizes `<= K`.
    pub fn satisfies(&self, k: usize, c1: f64, c2: f64) -> bool {
        self.k <= k && self.c1 >= c1 && self.c2 >= c2
    }
}

/// `A := {x : h_x < threshold}` and its maximal intervals.
pub fn decompose_clusters(profile: &FieldProfile, threshold: f64) -> Result<ClusterDecomposition> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {threshold}")));
    }
    let mask: Vec<bool> = profile.fields().iter().map(|&h| h < threshold).collect();
    Ok(ClusterDecomposition::from_mask(profile, &mask))
}
