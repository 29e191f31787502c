//! Specification tests, confidence regions by test inversion over a
//! parameter grid, and the two built-in models.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::correspondence::{Carrier, Interval, IntervalValuedCorrespondence};
use crate::measure::{LatentLaw, Sample};
use crate::model::{IntervalValuedModel, StructuralModel};
use crate::setclass::{BandwidthRule, SetFamily};
use crate::statistic::{
    bridge_quantile, default_subsample_size, ks_capacity_statistic, subsample_quantile, QuantileEstimate,
    QuantileMethod, StatisticValue,
};
use crate::{rng, Error, Result};

/// Slack allowed when a grid axis should end exactly on its stop value.
pub const GRID_TOLERANCE: f64 = 1e-12;

/// A rectangular grid of parameter values, iterated in row-major order
/// (the last axis varies fastest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    names: Vec<String>,
    axes: Vec<Vec<f64>>,
}

impl ParamGrid {
    pub fn new(names: Vec<String>, axes: Vec<Vec<f64>>) -> Result<Self> {
        if names.is_empty() || names.len() != axes.len() {
            return Err(Error::Config(format!("{} axis names for {} axes", names.len(), axes.len())));
        }
        if let Some(i) = axes.iter().position(Vec::is_empty) {
            return Err(Error::Config(format!("grid axis '{}' is empty", names[i])));
        }
        Ok(Self { names, axes })
    }

    /// `start, start + step, …` up to `stop` inclusive (within `1e-12`).
    pub fn axis(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
            return Err(Error::Config(format!("invalid grid axis {start}:{stop}:{step}")));
        }
        let steps = ((stop - start) / step + GRID_TOLERANCE).floor() as usize;
        let mut values: Vec<f64> = (0..=steps).map(|i| start + i as f64 * step).collect();
        if let Some(last) = values.last_mut() {
            if (*last - stop).abs() <= GRID_TOLERANCE * stop.abs().max(1.0) {
                *last = stop;
            }
        }
        Ok(values)
    }

    /// Parses `name=start:stop:step[,name=start:stop:step…]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut names = Vec::new();
        let mut axes = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, range) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("grid axis '{part}' is not name=start:stop:step")))?;
            let bounds: Vec<f64> = range
                .split(':')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config(format!("grid axis '{part}' has a non-numeric bound")))?;
            let [start, stop, step] = bounds[..] else {
                return Err(Error::Config(format!("grid axis '{part}' is not name=start:stop:step")));
            };
            if names.iter().any(|n| n == name.trim()) {
                return Err(Error::Config(format!("grid axis '{}' appears twice", name.trim())));
            }
            names.push(name.trim().to_string());
            axes.push(Self::axis(start, stop, step)?);
        }
        Self::new(names, axes)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `i`-th point in row-major order.
    pub fn point(&self, mut i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            out[k] = axis[i % axis.len()];
            i /= axis.len();
        }
        out
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Position of the axis called `name`.
    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|n| n == name).ok_or_else(|| Error::Config(format!("grid has no axis '{name}'")))
    }

    fn labelled(&self, point: &[f64]) -> BTreeMap<String, f64> {
        self.names.iter().cloned().zip(point.iter().copied()).collect()
    }
}

/// Everything a specification test needs besides the sample and the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOptions {
    pub family: SetFamily,
    pub alpha: f64,
    pub method: QuantileMethod,
    /// Bridge replications.
    pub reps: usize,
    pub bandwidth: BandwidthRule,
    /// Fixed `h_n` in place of the bandwidth rule.
    pub bandwidth_override: Option<f64>,
    /// `b_n`; `⌈n^(2/3)⌉` when unset.
    pub subsample_size: Option<usize>,
    /// `B_n`.
    pub subsample_count: usize,
    pub seed: u64,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self {
            family: SetFamily::PowerSet,
            alpha: 0.95,
            method: QuantileMethod::Bridge,
            reps: 1000,
            bandwidth: BandwidthRule::default(),
            bandwidth_override: None,
            subsample_size: None,
            subsample_count: 500,
            seed: 0,
        }
    }
}

/// How, if at all, the family is known to be core determining for the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreCertificate {
    /// The family is the full power set of a finite carrier.
    PowerSet,
    /// Cells with non-decreasing envelopes.
    MonotoneEnvelopes,
    /// Neither applies; the caller vouches for the family.
    Unverified,
}

pub fn core_certificate(fam: SetFamily, model: &dyn StructuralModel) -> CoreCertificate {
    match (fam, model.carrier()) {
        (SetFamily::PowerSet, Carrier::Finite { .. }) => CoreCertificate::PowerSet,
        (SetFamily::Cells, _) if model.monotone_envelopes() => CoreCertificate::MonotoneEnvelopes,
        _ => CoreCertificate::Unverified,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub theta: BTreeMap<String, f64>,
    pub statistic: StatisticValue,
    pub quantile: QuantileEstimate,
    /// `√n · T > q̂`; equality accepts.
    pub reject: bool,
    pub core_determining: CoreCertificate,
}

/// Tests `H₀: ν ∈ Core(Γ, P)` at one parameter value.
pub fn specification_test(sample: &Sample, model: &dyn StructuralModel, options: &TestOptions) -> Result<TestReport> {
    let statistic = ks_capacity_statistic(sample, model, options.family)?;
    let n = sample.len();
    let quantile = match options.method {
        QuantileMethod::Bridge => {
            let h = match options.bandwidth_override {
                Some(h) => h,
                None => options.bandwidth.at(n)?,
            };
            bridge_quantile(sample, model, options.family, options.alpha, options.reps, h, options.seed)?
        }
        QuantileMethod::Subsample => subsample_quantile(
            sample,
            model,
            options.family,
            options.alpha,
            options.subsample_size.unwrap_or_else(|| default_subsample_size(n)),
            options.subsample_count,
            options.seed,
        )?,
    };
    Ok(TestReport {
        theta: BTreeMap::new(),
        reject: statistic.scaled > quantile.q_hat,
        statistic,
        quantile,
        core_determining: core_certificate(options.family, model),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionReport {
    pub axes: Vec<String>,
    pub points: Vec<TestReport>,
    /// Row-major indices of the accepted grid points.
    pub accepted: Vec<usize>,
}

impl RegionReport {
    pub fn accepted_thetas(&self) -> impl Iterator<Item = &BTreeMap<String, f64>> {
        self.accepted.iter().map(|&i| &self.points[i].theta)
    }
}

/// `CR_n = {θ : √n T(θ) ≤ q̂(θ)}` on a grid. Each point gets its own seed
/// derived from the master seed and its index, so the region does not depend
/// on thread scheduling.
pub fn confidence_region<F>(
    sample: &Sample,
    model_at: F,
    grid: &ParamGrid,
    options: &TestOptions,
) -> Result<RegionReport>
where
    F: Fn(&[f64]) -> Result<Box<dyn StructuralModel>> + Sync,
{
    if grid.is_empty() {
        return Err(Error::Config("empty parameter grid".into()));
    }
    let points = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let theta = grid.point(i);
            let model = model_at(&theta)?;
            let point_options = TestOptions { seed: rng::mix(options.seed, i as u64), ..options.clone() };
            let mut report = specification_test(sample, model.as_ref(), &point_options)?;
            report.theta = grid.labelled(&theta);
            Ok(report)
        })
        .collect::<Result<Vec<_>>>()?;
    let accepted = points.iter().enumerate().filter(|(_, r)| !r.reject).map(|(i, _)| i).collect();
    Ok(RegionReport { axes: grid.names().to_vec(), points, accepted })
}

/// Binary entry game: `Γ(1) = [0, λ]`, `Γ(0) = [0, 1]`, and `ν` with
/// distribution function `u^φ` on `[0, 1]`. Observable atoms are `0` and `1`.
pub fn entry_game_model(lambda: f64, phi: f64) -> Result<IntervalValuedModel> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!("λ = {lambda} is outside (0, 1]")));
    }
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::Domain(format!("φ = {phi} must be positive")));
    }
    let corr = IntervalValuedCorrespondence::new(
        vec!["0".into(), "1".into()],
        vec![Interval::closed(0.0, 1.0)?, Interval::closed(0.0, lambda)?],
    )?;
    Ok(IntervalValuedModel::new(corr, LatentLaw::power(phi)?))
}

/// Identified set for the mean of bracketed data and a confidence interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub lower: f64,
    pub upper: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub alpha: f64,
    pub delta: f64,
    pub n: usize,
    /// Plug-in standard deviation of `Σ (y_i ∓ δ/2) 1{Y = y_i}`.
    pub sigma: f64,
    pub variance_method: String,
}

/// Bounds on the mean of a variable observed only through brackets
/// `(y − δ/2, y + δ/2)` with centers `y`, and a confidence interval that
/// widens each bound by `z_α σ̂ / √n`.
pub fn censored_mean_bounds(centers: &Sample, delta: f64, alpha: f64) -> Result<BoundsReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Config(format!("bracket width δ = {delta} must be positive")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("level {alpha} is outside (0, 1)")));
    }
    let n = centers.len() as f64;
    let mut atoms = Vec::new();
    for chunk in centers.values().chunk_by(|a, b| a == b) {
        atoms.push((chunk[0], chunk.len() as f64 / n));
    }
    if let Some(w) = atoms.windows(2).find(|w| w[1].0 - w[0].0 < delta) {
        return Err(Error::Domain(format!("brackets centered at {} and {} overlap at width {delta}", w[0].0, w[1].0)));
    }
    let mean: f64 = atoms.iter().map(|(y, p)| y * p).sum();
    // shifting every center by ∓δ/2 leaves the variance unchanged
    let variance = (atoms.iter().map(|(y, p)| (y - mean).powi(2) * p).sum::<f64>()).max(0.0);
    let sigma = variance.sqrt();
    let z = Normal::standard().inverse_cdf(alpha);
    let (lower, upper) = (mean - delta / 2.0, mean + delta / 2.0);
    let shift = z * sigma / n.sqrt();
    Ok(BoundsReport {
        lower,
        upper,
        ci_lower: lower - shift,
        ci_upper: upper + shift,
        alpha,
        delta,
        n: centers.len(),
        sigma,
        variance_method: "delta method on the multinomial bracket frequencies".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspondence::{BitSet, ObsSet};

    #[test]
    fn grid_parsing() {
        let g = ParamGrid::parse("lambda=0.05:1:0.05,phi=0.25:4:0.25").unwrap();
        assert_eq!(g.axes()[0].len(), 20);
        assert_eq!(g.axes()[1].len(), 16);
        assert_eq!(g.len(), 320);
        assert_eq!(*g.axes()[0].last().unwrap(), 1.0);
        assert_eq!(g.point(0), vec![0.05, 0.25]);
        assert_eq!(g.point(1), vec![0.05, 0.5]);
        assert_eq!(g.point(16)[0], 0.1);
        assert!(ParamGrid::parse("lambda=1:0:0.1").is_err());
        assert!(ParamGrid::parse("lambda=0:1").is_err());
        assert!(ParamGrid::parse("lambda=0:1:x").is_err());
        assert!(ParamGrid::parse("").is_err());
        assert_eq!(ParamGrid::axis(0.0, 0.3, 0.1).unwrap().len(), 4);
    }

    #[test]
    fn entry_game_masses() {
        let mass = |l, p, atoms: &[usize]| {
            entry_game_model(l, p)
                .unwrap()
                .image_mass(&ObsSet::Finite(BitSet::from_indices(2, atoms.iter().copied()).unwrap()))
                .unwrap()
        };
        assert!((mass(0.5, 1.0, &[1]) - 0.5).abs() < 1e-15);
        assert!((mass(0.5, 2.0, &[1]) - 0.25).abs() < 1e-15);
        assert_eq!(mass(1.0, 3.0, &[1]), 1.0);
        assert_eq!(mass(0.5, 1.0, &[0]), 1.0);
        assert_eq!(mass(0.5, 1.0, &[0, 1]), 1.0);
        assert_eq!(mass(0.5, 1.0, &[]), 0.0);
        assert!(entry_game_model(0.0, 1.0).is_err());
        assert!(entry_game_model(1.2, 1.0).is_err());
        assert!(entry_game_model(0.5, 0.0).is_err());
    }

    #[test]
    fn tests_at_the_entry_game() {
        let opts = TestOptions { seed: 7, ..TestOptions::default() };
        let accept =
            specification_test(&Sample::binary(1000, 470).unwrap(), &entry_game_model(0.5, 1.0).unwrap(), &opts)
                .unwrap();
        assert!(!accept.reject);
        assert_eq!(accept.statistic.raw, 0.0);
        let reject =
            specification_test(&Sample::binary(1000, 650).unwrap(), &entry_game_model(0.5, 1.0).unwrap(), &opts)
                .unwrap();
        assert!(reject.reject);
        assert!((reject.statistic.scaled - 1000f64.sqrt() * 0.15).abs() < 1e-9);
        assert_eq!(reject.core_determining, CoreCertificate::PowerSet);
    }

    #[test]
    fn bounds_examples() {
        let b = censored_mean_bounds(&Sample::new(vec![10.0, 20.0]).unwrap(), 2.0, 0.95).unwrap();
        assert_eq!((b.lower, b.upper), (14.0, 16.0));
        assert!(b.ci_lower < 14.0 && b.ci_upper > 16.0);
        let single = censored_mean_bounds(&Sample::new(vec![10.0; 5]).unwrap(), 2.0, 0.95).unwrap();
        assert_eq!((single.lower, single.upper, single.ci_lower, single.ci_upper), (9.0, 11.0, 9.0, 11.0));
        let thin = censored_mean_bounds(&Sample::new(vec![1.0, 2.0, 4.0]).unwrap(), 1e-9, 0.9).unwrap();
        assert!((thin.lower - 7.0 / 3.0).abs() < 1e-8 && (thin.upper - 7.0 / 3.0).abs() < 1e-8);
        assert!(censored_mean_bounds(&Sample::new(vec![1.0]).unwrap(), 0.0, 0.95).is_err());
        assert!(matches!(
            censored_mean_bounds(&Sample::new(vec![1.0, 2.0]).unwrap(), 1.5, 0.95),
            Err(Error::Domain(_))
        ));
    }
}
