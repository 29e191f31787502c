//! The supremum statistic `T = max_A P_n(A) − ν(Γ(A))` over a set family and
//! two approximations of its null quantile.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correspondence::{Carrier, ObsSet};
use crate::measure::Sample;
use crate::model::StructuralModel;
use crate::setclass::{enumerate, estimated_binding_class, SetFamily};
use crate::{rng, Error, Result};

/// Eigenvalues below this are a factorization failure rather than rounding.
pub const EIGEN_CLIP: f64 = -1e-10;
/// Largest binding class factorized through its own covariance matrix;
/// larger ones go through the atoms of the empirical measure.
pub const EIGEN_LIMIT: usize = 512;
/// Smallest replication count accepted by either quantile method.
pub const MIN_REPLICATIONS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatisticValue {
    /// `T`.
    pub raw: f64,
    /// `√n · T`.
    pub scaled: f64,
    pub argmax: ObsSet,
    /// Position of the argmax in the family enumeration.
    pub argmax_index: usize,
    pub family: SetFamily,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileMethod {
    Bridge,
    Subsample,
}

impl fmt::Display for QuantileMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuantileMethod::Bridge => "bridge",
            QuantileMethod::Subsample => "subsample",
        })
    }
}

impl FromStr for QuantileMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bridge" => Ok(QuantileMethod::Bridge),
            "subsample" => Ok(QuantileMethod::Subsample),
            _ => Err(Error::Config(format!("unknown quantile method '{s}'; expected bridge or subsample"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantileEstimate {
    pub alpha: f64,
    pub q_hat: f64,
    pub method: QuantileMethod,
    pub replications: usize,
    pub seed: u64,
    /// Bandwidth used for the estimated binding class (bridge only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    /// Size of the estimated binding class (bridge only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binding_members: Option<usize>,
    /// Subsample size `b_n` (subsample only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsample_size: Option<usize>,
}

/// Enumerated family with its model-side masses `ν(Γ(A))`.
struct Candidates {
    sets: Vec<ObsSet>,
    image: Vec<f64>,
}

impl Candidates {
    fn new(fam: SetFamily, model: &dyn StructuralModel, sample: &Sample) -> Result<Self> {
        let carrier = model.carrier();
        if let Carrier::Finite { size } = carrier {
            sample.check_finite(size)?;
        }
        let sets = enumerate(fam, &carrier, sample)?;
        let image = sets.iter().map(|a| model.image_mass(a)).collect::<Result<_>>()?;
        Ok(Self { sets, image })
    }

    /// `(max_A P_n(A) − ν(Γ(A)), first index attaining it)`.
    fn sup(&self, sample: &Sample) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, (a, image)) in self.sets.iter().zip(&self.image).enumerate() {
            let v = sample.mass(a) - image;
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }
}

/// `T = max_A P_n(A) − ν(Γ(A))` over the enumerated family. Ties go to the
/// earliest candidate.
pub fn ks_capacity_statistic(sample: &Sample, model: &dyn StructuralModel, fam: SetFamily) -> Result<StatisticValue> {
    let c = Candidates::new(fam, model, sample)?;
    let (raw, i) = c.sup(sample);
    let n = sample.len();
    Ok(StatisticValue {
        raw,
        scaled: (n as f64).sqrt() * raw,
        argmax: c.sets[i].clone(),
        argmax_index: i,
        family: fam,
        n,
    })
}

/// `inf{x : (1/B) #{v_i ≤ x} ≥ α}`, the left-continuous empirical quantile.
/// Sorts `values` in place.
pub fn empirical_quantile(values: &mut [f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Config("quantile of an empty set of replications".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Config(format!("level {alpha} is outside (0, 1]")));
    }
    values.sort_by(f64::total_cmp);
    let b = values.len();
    let k = (1..=b).find(|&k| k as f64 / b as f64 >= alpha).unwrap_or(b);
    Ok(values[k - 1])
}

fn check_level(alpha: f64, reps: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("level {alpha} is outside (0, 1)")));
    }
    if reps < MIN_REPLICATIONS {
        return Err(Error::Config(format!("{reps} replications; at least {MIN_REPLICATIONS} are needed")));
    }
    Ok(())
}

/// Draws of the centered Gaussian process indexed by a family of sets, with
/// the covariance `P_n(A ∩ B) − P_n(A) P_n(B)` of the Brownian bridge.
enum BridgeSampler {
    /// Every member has zero variance.
    Degenerate,
    /// `Z = L ξ` with `L L' = Σ` from a clipped eigendecomposition.
    Factor { factor: DMatrix<f64>, zero_member: bool },
    /// `W_g = √p_g ξ_g − p_g Σ_h √p_h ξ_h` has covariance `diag(p) − p p'`
    /// over the atoms; each member sums `W` over the runs of consecutive
    /// atoms it contains, read off prefix sums.
    Atoms { p: Vec<f64>, root_p: Vec<f64>, members: Vec<Vec<(usize, usize)>>, zero_member: bool },
}

impl BridgeSampler {
    fn new(sets: &[&ObsSet], sample: &Sample) -> Result<Self> {
        let n = sample.len() as f64;
        let (mut atoms, mut p) = (Vec::new(), Vec::new());
        for chunk in sample.values().chunk_by(|a, b| a == b) {
            atoms.push(chunk[0]);
            p.push(chunk.len() as f64 / n);
        }
        let contains = |set: &ObsSet, v: f64| match set {
            ObsSet::Finite(b) => b.contains(v as usize),
            ObsSet::Real(u) => u.contains(v),
        };
        // distinct membership patterns over the sample atoms; everything
        // else about a set is invisible to the empirical covariance
        let mut patterns: Vec<Vec<bool>> =
            sets.iter().map(|s| atoms.iter().map(|&v| contains(s, v)).collect()).collect();
        patterns.sort();
        patterns.dedup();
        let mass = |pat: &[bool]| pat.iter().zip(&p).filter(|(m, _)| **m).map(|(_, w)| w).sum::<f64>();
        let before = patterns.len();
        patterns.retain(|pat| {
            let m = mass(pat);
            m * (1.0 - m) > 1e-15
        });
        let zero_member = patterns.len() < before;
        let m = patterns.len();
        if m == 0 {
            return Ok(BridgeSampler::Degenerate);
        }
        if m <= EIGEN_LIMIT {
            let pm: Vec<f64> = patterns.iter().map(|pat| mass(pat)).collect();
            let sigma = DMatrix::from_fn(m, m, |i, j| {
                let joint: f64 = (0..atoms.len()).filter(|&g| patterns[i][g] && patterns[j][g]).map(|g| p[g]).sum();
                joint - pm[i] * pm[j]
            });
            let eigen = SymmetricEigen::new(sigma);
            if let Some(&bad) = eigen.eigenvalues.iter().find(|&&l| l < EIGEN_CLIP) {
                return Err(Error::Numeric(format!(
                    "bridge covariance has eigenvalue {bad:e}, below the clipping tolerance {EIGEN_CLIP:e}"
                )));
            }
            let roots = eigen.eigenvalues.map(|l| l.max(0.0).sqrt());
            let factor = eigen.eigenvectors * DMatrix::from_diagonal(&roots);
            return Ok(BridgeSampler::Factor { factor, zero_member });
        }
        let members = patterns.iter().map(|pat| runs(pat)).collect();
        Ok(BridgeSampler::Atoms { root_p: p.iter().map(|w| w.sqrt()).collect(), p, members, zero_member })
    }

    /// Supremum of one draw over the family.
    fn draw_sup(&self, rng: &mut impl rand::Rng) -> f64 {
        match self {
            BridgeSampler::Degenerate => 0.0,
            BridgeSampler::Factor { factor, zero_member } => {
                let xi: Vec<f64> = (0..factor.ncols()).map(|_| StandardNormal.sample(rng)).collect();
                let start = if *zero_member { 0.0 } else { f64::NEG_INFINITY };
                factor.row_iter().map(|row| row.iter().zip(&xi).map(|(a, x)| a * x).sum::<f64>()).fold(start, f64::max)
            }
            BridgeSampler::Atoms { p, root_p, members, zero_member } => {
                let xi: Vec<f64> = (0..p.len()).map(|_| StandardNormal.sample(rng)).collect();
                let common: f64 = root_p.iter().zip(&xi).map(|(r, x)| r * x).sum();
                let mut prefix = Vec::with_capacity(p.len() + 1);
                prefix.push(0.0);
                for g in 0..p.len() {
                    prefix.push(prefix[g] + root_p[g] * xi[g] - p[g] * common);
                }
                let start = if *zero_member { 0.0 } else { f64::NEG_INFINITY };
                members.iter().map(|m| m.iter().map(|&(a, b)| prefix[b] - prefix[a]).sum::<f64>()).fold(start, f64::max)
            }
        }
    }
}

/// Half-open index ranges `[a, b)` of the `true` runs in a pattern.
fn runs(pattern: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (g, &inside) in pattern.iter().chain([&false]).enumerate() {
        match (inside, start) {
            (true, None) => start = Some(g),
            (false, Some(a)) => {
                out.push((a, g));
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// α-quantile of the supremum of the Brownian bridge over the estimated
/// binding class `{A : P_n(A) ≥ ν(Γ(A)) − h_n}`.
pub fn bridge_quantile(
    sample: &Sample,
    model: &dyn StructuralModel,
    fam: SetFamily,
    alpha: f64,
    reps: usize,
    h_n: f64,
    seed: u64,
) -> Result<QuantileEstimate> {
    check_level(alpha, reps)?;
    let c = Candidates::new(fam, model, sample)?;
    let binding = estimated_binding_class(&c.sets, sample, model, h_n)?;
    let members: Vec<&ObsSet> = binding.members.iter().map(|&i| &c.sets[i]).collect();
    let sampler = BridgeSampler::new(&members, sample)?;
    let mut sups: Vec<f64> =
        (0..reps).into_par_iter().map(|r| sampler.draw_sup(&mut rng::stream(seed, r as u64))).collect();
    Ok(QuantileEstimate {
        alpha,
        q_hat: empirical_quantile(&mut sups, alpha)?,
        method: QuantileMethod::Bridge,
        replications: reps,
        seed,
        bandwidth: Some(h_n),
        binding_members: Some(binding.len()),
        subsample_size: None,
    })
}

/// Default subsample size `⌈n^(2/3)⌉`, kept below `n`.
pub fn default_subsample_size(n: usize) -> usize {
    ((n as f64).powf(2.0 / 3.0).ceil() as usize).min(n.saturating_sub(1)).max(2)
}

/// α-quantile of `√b · T(P_b)` over `count` subsamples of size `b` drawn
/// without replacement.
pub fn subsample_quantile(
    sample: &Sample,
    model: &dyn StructuralModel,
    fam: SetFamily,
    alpha: f64,
    b: usize,
    count: usize,
    seed: u64,
) -> Result<QuantileEstimate> {
    check_level(alpha, count)?;
    let n = sample.len();
    if b < 2 || b >= n {
        return Err(Error::Config(format!("subsample size {b} must satisfy 2 ≤ b < n = {n} (and 1/b_n + b_n/n → 0)")));
    }
    // on finite carriers the family does not depend on the sample
    let shared = match model.carrier() {
        Carrier::Finite { .. } => Some(Candidates::new(fam, model, sample)?),
        Carrier::Real { .. } => None,
    };
    let root_b = (b as f64).sqrt();
    let mut stats = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let sub = sample.select(&index::sample(&mut r, n, b).into_vec())?;
            let t = match &shared {
                Some(c) => c.sup(&sub).0,
                None => Candidates::new(fam, model, &sub)?.sup(&sub).0,
            };
            Ok(root_b * t)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(QuantileEstimate {
        alpha,
        q_hat: empirical_quantile(&mut stats, alpha)?,
        method: QuantileMethod::Subsample,
        replications: count,
        seed,
        bandwidth: None,
        binding_members: None,
        subsample_size: Some(b),
    })
}
