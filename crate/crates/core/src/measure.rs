//! Probability measures: weighted finite supports, atomless laws on the real
//! line, and samples with their empirical measure.

use serde::{Deserialize, Serialize};

use crate::correspondence::{BitSet, Interval, IntervalUnion, LatentGrid, ObsSet};
use crate::{Error, Result};

/// Tolerance on `|Σ w − 1|` for a discrete measure.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Anything that can assign a probability to a set.
pub trait SetMeasure {
    fn measure(&self, set: &ObsSet) -> Result<f64>;
}

/// Weighted finite support. When built from integer counts the exact
/// rational representation is kept so that flow computations can run in
/// integer arithmetic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    labels: Vec<String>,
    weights: Vec<f64>,
    #[serde(skip)]
    exact: Option<ExactWeights>,
}

/// Weights `numerators[i] / denominator`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactWeights {
    pub numerators: Vec<u64>,
    pub denominator: u64,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let labels = (0..weights.len()).map(|i| i.to_string()).collect();
        Self::with_labels(labels, weights)
    }

    pub fn with_labels(labels: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || labels.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!("{} labels for {} weights", labels.len(), weights.len())));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not a non-negative number")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { labels, weights, exact: None })
    }

    /// The measure `counts[i] / Σ counts`, kept exactly.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let denominator: u64 = counts.iter().sum();
        if denominator == 0 {
            return Err(Error::InvalidMeasure("counts sum to zero".into()));
        }
        let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / denominator as f64).collect();
        let total: f64 = weights.iter().sum();
        // renormalizing in floating point is not needed for the exact path, but
        // keeps the f64 view within tolerance for long supports
        let weights = if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            weights.iter().map(|w| w / total).collect()
        } else {
            weights
        };
        let mut m = Self::new(weights)?;
        m.exact = Some(ExactWeights { numerators: counts.to_vec(), denominator });
        Ok(m)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_counts(&vec![1; n])
    }

    /// Point mass on atom `i` of an `n`-point support.
    pub fn dirac(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::InvalidMeasure(format!("atom {i} outside support of size {n}")));
        }
        let mut counts = vec![0; n];
        counts[i] = 1;
        Self::from_counts(&counts)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn exact(&self) -> Option<&ExactWeights> {
        self.exact.as_ref()
    }

    /// Mass of a subset of the support.
    pub fn mass(&self, set: &BitSet) -> Result<f64> {
        if set.width() != self.len() {
            return Err(Error::CarrierMismatch(format!(
                "set of width {} against a measure on {} atoms",
                set.width(),
                self.len()
            )));
        }
        Ok(set.iter().map(|i| self.weights[i]).sum())
    }

    /// `Σ f·w`.
    pub fn expectation(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.len() {
            return Err(Error::CarrierMismatch(format!("{} values for {} atoms", f.len(), self.len())));
        }
        Ok(f.iter().zip(&self.weights).map(|(a, b)| a * b).sum())
    }
}

impl SetMeasure for DiscreteMeasure {
    fn measure(&self, set: &ObsSet) -> Result<f64> {
        self.mass(set.as_finite()?)
    }
}

/// Atomless probability laws on the real line, given through their CDF.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum LatentLaw {
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Law on `[0, 1]` with distribution function `u^phi`.
    Power { phi: f64 },
}

impl LatentLaw {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidMeasure(format!("uniform law needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(LatentLaw::Uniform { lo, hi })
    }

    pub fn power(phi: f64) -> Result<Self> {
        if !(phi.is_finite() && phi > 0.0) {
            return Err(Error::InvalidMeasure(format!("power law needs phi > 0, got {phi}")));
        }
        Ok(LatentLaw::Power { phi })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            LatentLaw::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            LatentLaw::Power { phi } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    x.powf(phi)
                }
            }
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            LatentLaw::Uniform { lo, hi } => (lo, hi),
            LatentLaw::Power { .. } => (0.0, 1.0),
        }
    }

    pub fn interval_mass(&self, i: &Interval) -> f64 {
        if i.is_empty() {
            0.0
        } else {
            (self.cdf(i.hi) - self.cdf(i.lo)).max(0.0)
        }
    }

    /// Endpoint openness is irrelevant: the law has no atoms.
    pub fn union_mass(&self, u: &IntervalUnion) -> f64 {
        u.parts().iter().map(|p| self.interval_mass(p)).sum::<f64>().min(1.0)
    }

    /// Cell masses on a latent grid, renormalized onto the grid.
    pub fn discretize(&self, grid: &LatentGrid) -> Result<DiscreteMeasure> {
        let masses: Vec<f64> = (0..grid.cells).map(|j| self.interval_mass(&grid.cell(j))).collect();
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidMeasure("latent grid carries no mass".into()));
        }
        DiscreteMeasure::with_labels(
            (0..grid.cells).map(|j| grid.midpoint(j).to_string()).collect(),
            masses.iter().map(|m| m / total).collect(),
        )
    }
}

impl SetMeasure for LatentLaw {
    fn measure(&self, set: &ObsSet) -> Result<f64> {
        Ok(self.union_mass(set.as_real()?))
    }
}

/// A sample of observations, stored sorted. On finite carriers the values
/// are atom indices `0, 1, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidMeasure("empty sample".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure(format!("non-finite observation {v}")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    /// Observations of atom indices on a finite carrier.
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Result<Self> {
        Self::new(indices.into_iter().map(|i| i as f64).collect())
    }

    /// A binary sample with `ones` observations equal to 1.
    pub fn binary(n: usize, ones: usize) -> Result<Self> {
        if ones > n {
            return Err(Error::InvalidMeasure(format!("{ones} ones in a sample of size {n}")));
        }
        Self::from_indices((0..n).map(|i| usize::from(i < ones)))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sorted distinct values.
    pub fn distinct(&self) -> Vec<f64> {
        let mut out = self.values.clone();
        out.dedup();
        out
    }

    /// Checks that every observation is an atom index below `k`.
    pub fn check_finite(&self, k: usize) -> Result<()> {
        match self.values.iter().find(|&&v| v.fract() != 0.0 || v < 0.0 || v >= k as f64) {
            Some(v) => Err(Error::Domain(format!("observation {v} is not an atom index below {k}"))),
            None => Ok(()),
        }
    }

    /// Number of observations per atom on a `k`-point carrier.
    pub fn counts(&self, k: usize) -> Result<Vec<u64>> {
        self.check_finite(k)?;
        let mut counts = vec![0u64; k];
        for &v in &self.values {
            counts[v as usize] += 1;
        }
        Ok(counts)
    }

    /// Empirical law `P_n` on a `k`-point carrier, exact.
    pub fn empirical(&self, k: usize) -> Result<DiscreteMeasure> {
        DiscreteMeasure::from_counts(&self.counts(k)?)
    }

    fn count_in(&self, i: &Interval) -> usize {
        if i.is_empty() {
            return 0;
        }
        let start = if i.lo_closed {
            self.values.partition_point(|&v| v < i.lo)
        } else {
            self.values.partition_point(|&v| v <= i.lo)
        };
        let end = if i.hi_closed {
            self.values.partition_point(|&v| v <= i.hi)
        } else {
            self.values.partition_point(|&v| v < i.hi)
        };
        end.saturating_sub(start)
    }

    /// Number of observations in a set.
    pub fn count(&self, set: &ObsSet) -> usize {
        match set {
            ObsSet::Real(u) => u.parts().iter().map(|p| self.count_in(p)).sum(),
            ObsSet::Finite(b) => b
                .iter()
                .map(|atom| {
                    let x = atom as f64;
                    self.count_in(&Interval { lo: x, hi: x, lo_closed: true, hi_closed: true })
                })
                .sum(),
        }
    }

    /// `P_n(A)`.
    pub fn mass(&self, set: &ObsSet) -> f64 {
        self.count(set) as f64 / self.len() as f64
    }

    /// Sub-sample made of the observations at `indices` (positions in sorted order).
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.values[i]).collect())
    }
}

impl SetMeasure for Sample {
    fn measure(&self, set: &ObsSet) -> Result<f64> {
        Ok(self.mass(set))
    }
}
