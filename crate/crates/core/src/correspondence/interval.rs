use serde::{Deserialize, Serialize};

use super::finite::FiniteCorrespondence;
use super::sets::{BitSet, Interval, IntervalUnion};
use crate::{Error, Result};

/// Correspondence on a compact real interval whose values are the intervals
/// `Γ(y) = [l(y), u(y)]` between two piecewise-linear envelopes.
///
/// Images are returned with closed endpoints. That is exact for every
/// atomless latent law, which is the only case the statistic layer uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalCorrespondence {
    knots: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Side {
    /// `{g ≤ c}` (or `<` when strict)
    Below,
    /// `{g ≥ c}` (or `>` when strict)
    Above,
}

/// Part of the segment `[k0, k1]` on which the linear interpolant of
/// `(g0, g1)` lies below / above `c`.
fn segment_level(k0: f64, k1: f64, g0: f64, g1: f64, c: f64, side: Side, strict: bool) -> Option<Interval> {
    let holds = |g: f64| match (side, strict) {
        (Side::Below, false) => g <= c,
        (Side::Below, true) => g < c,
        (Side::Above, false) => g >= c,
        (Side::Above, true) => g > c,
    };
    let (h0, h1) = (holds(g0), holds(g1));
    if h0 && h1 {
        return Some(Interval { lo: k0, hi: k1, lo_closed: true, hi_closed: true });
    }
    if !h0 && !h1 {
        // linear: if both endpoints fail, the whole segment fails
        return None;
    }
    let cross = if c == g0 {
        k0
    } else if c == g1 {
        k1
    } else {
        (k0 + (c - g0) * (k1 - k0) / (g1 - g0)).clamp(k0, k1)
    };
    if h0 {
        Some(Interval { lo: k0, hi: cross, lo_closed: true, hi_closed: !strict })
    } else {
        Some(Interval { lo: cross, hi: k1, lo_closed: !strict, hi_closed: true })
    }
}

impl IntervalCorrespondence {
    pub fn new(knots: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidCorrespondence("need at least two knots".into()));
        }
        if lower.len() != knots.len() || upper.len() != knots.len() {
            return Err(Error::InvalidCorrespondence(format!(
                "{} knots but {} lower and {} upper values",
                knots.len(),
                lower.len(),
                upper.len()
            )));
        }
        if knots.iter().chain(&lower).chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCorrespondence("knots and envelope values must be finite".into()));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidCorrespondence("knots must be strictly increasing".into()));
        }
        if let Some(i) = (0..knots.len()).find(|&i| lower[i] > upper[i]) {
            return Err(Error::InvalidCorrespondence(format!(
                "lower envelope {} exceeds upper envelope {} at knot {}",
                lower[i], upper[i], knots[i]
            )));
        }
        Ok(Self { knots, lower, upper })
    }

    /// `Γ(y) = {γ(y)}` for the linear map sending `[lo, hi]` onto `[u_lo, u_hi]`.
    pub fn linear_bijection(lo: f64, hi: f64, u_lo: f64, u_hi: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![u_lo, u_hi], vec![u_lo, u_hi])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Repr {
            knots: Vec<f64>,
            lower: Vec<f64>,
            upper: Vec<f64>,
        }
        let r: Repr = serde_json::from_str(text).map_err(|e| Error::InvalidCorrespondence(format!("bad JSON: {e}")))?;
        Self::new(r.knots, r.lower, r.upper)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    fn domain_interval(&self) -> Interval {
        let (lo, hi) = self.domain();
        Interval { lo, hi, lo_closed: true, hi_closed: true }
    }

    fn interpolate(&self, values: &[f64], y: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&y) {
            return Err(Error::Domain(format!("{y} outside [{lo}, {hi}]")));
        }
        let i = self.knots.partition_point(|&k| k <= y).clamp(1, self.knots.len() - 1);
        let (k0, k1) = (self.knots[i - 1], self.knots[i]);
        if y == k0 {
            return Ok(values[i - 1]);
        }
        if y == k1 {
            return Ok(values[i]);
        }
        let t = (y - k0) / (k1 - k0);
        Ok(values[i - 1] + t * (values[i] - values[i - 1]))
    }

    pub fn lower_at(&self, y: f64) -> Result<f64> {
        self.interpolate(&self.lower, y)
    }

    pub fn upper_at(&self, y: f64) -> Result<f64> {
        self.interpolate(&self.upper, y)
    }

    /// `Γ(y)` as a closed interval.
    pub fn value_at(&self, y: f64) -> Result<Interval> {
        Interval::closed(self.lower_at(y)?, self.upper_at(y)?)
    }

    /// Minimum of `l` and maximum of `u` over a closed sub-interval of the domain.
    fn envelope_extrema(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        let mut lo = self.lower_at(a)?.min(self.lower_at(b)?);
        let mut hi = self.upper_at(a)?.max(self.upper_at(b)?);
        for (i, &k) in self.knots.iter().enumerate() {
            if k > a && k < b {
                lo = lo.min(self.lower[i]);
                hi = hi.max(self.upper[i]);
            }
        }
        Ok((lo, hi))
    }

    /// `Γ(A)`: for every component `I` of `A` (clipped to the domain), the
    /// closed interval `[min_I l, max_I u]`, merged into a disjoint union.
    pub fn image(&self, a: &IntervalUnion) -> Result<IntervalUnion> {
        let dom = self.domain_interval();
        let mut parts = Vec::with_capacity(a.parts().len());
        for part in a.parts() {
            let clipped = part.intersect(&dom);
            if clipped.is_empty() {
                continue;
            }
            let (lo, hi) = self.envelope_extrema(clipped.lo, clipped.hi)?;
            parts.push(Interval::closed(lo, hi)?);
        }
        Ok(IntervalUnion::from_intervals(parts))
    }

    /// Points of the domain where both conditions hold, assembled segment by segment.
    fn level_pair(&self, lower_cond: (f64, Side, bool), upper_cond: (f64, Side, bool)) -> Vec<Interval> {
        let trivially = |c: f64, side: Side| -> Option<bool> {
            match (side, c) {
                (Side::Below, c) if c == f64::INFINITY => Some(true),
                (Side::Below, c) if c == f64::NEG_INFINITY => Some(false),
                (Side::Above, c) if c == f64::NEG_INFINITY => Some(true),
                (Side::Above, c) if c == f64::INFINITY => Some(false),
                _ => None,
            }
        };
        let mut out = Vec::new();
        for i in 0..self.knots.len() - 1 {
            let (k0, k1) = (self.knots[i], self.knots[i + 1]);
            let whole = Interval { lo: k0, hi: k1, lo_closed: true, hi_closed: true };
            let piece = |values: &[f64], (c, side, strict): (f64, Side, bool)| -> Option<Interval> {
                match trivially(c, side) {
                    Some(true) => Some(whole),
                    Some(false) => None,
                    None => segment_level(k0, k1, values[i], values[i + 1], c, side, strict),
                }
            };
            if let (Some(p), Some(q)) = (piece(&self.lower, lower_cond), piece(&self.upper, upper_cond)) {
                let r = p.intersect(&q);
                if !r.is_empty() {
                    out.push(r);
                }
            }
        }
        out
    }

    /// `Γ⁻¹(B) = {y : Γ(y) ∩ B ≠ ∅}` as a subset of the domain.
    pub fn preimage(&self, b: &IntervalUnion) -> Result<IntervalUnion> {
        let mut parts = Vec::new();
        for comp in b.parts() {
            // [l(y), u(y)] meets comp  ⇔  l(y) ≤ comp.hi and u(y) ≥ comp.lo
            parts.extend(
                self.level_pair((comp.hi, Side::Below, !comp.hi_closed), (comp.lo, Side::Above, !comp.lo_closed)),
            );
        }
        Ok(IntervalUnion::from_intervals(parts))
    }

    /// `{y : Γ(y) ⊆ B}`. `Γ(y)` is connected, so it must sit inside one component.
    pub fn lower_inverse(&self, b: &IntervalUnion) -> Result<IntervalUnion> {
        let mut parts = Vec::new();
        for comp in b.parts() {
            parts.extend(
                self.level_pair((comp.lo, Side::Above, !comp.lo_closed), (comp.hi, Side::Below, !comp.hi_closed)),
            );
        }
        Ok(IntervalUnion::from_intervals(parts))
    }

    /// Both envelopes non-decreasing across the knots.
    pub fn has_monotone_envelopes(&self) -> bool {
        let non_decreasing = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
        non_decreasing(&self.lower) && non_decreasing(&self.upper)
    }

    /// Finite approximation: observable atoms at `y_points`, latent atoms the
    /// cells of `grid`; `(y, cell)` is admissible when the cell midpoint lies in
    /// `Γ(y)`, or, for images thinner than a cell, when the cell meets `Γ(y)`.
    pub fn discretize(&self, y_points: &[f64], grid: &LatentGrid) -> Result<FiniteCorrespondence> {
        let values = y_points.iter().map(|&y| self.value_at(y)).collect::<Result<Vec<_>>>()?;
        discretize_values(y_points.iter().map(|y| y.to_string()).collect(), &values, grid)
    }
}

/// Finite observable support whose atoms carry interval values `Γ(y_i)`.
/// Covers the binary entry game and bracketed (censored) observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalValuedCorrespondence {
    y_labels: Vec<String>,
    values: Vec<Interval>,
}

impl IntervalValuedCorrespondence {
    pub fn new(y_labels: Vec<String>, values: Vec<Interval>) -> Result<Self> {
        if y_labels.is_empty() || y_labels.len() != values.len() {
            return Err(Error::InvalidCorrespondence(format!("{} labels for {} values", y_labels.len(), values.len())));
        }
        if let Some(i) = values.iter().position(Interval::is_empty) {
            return Err(Error::InvalidCorrespondence(format!("atom {} has an empty image", y_labels[i])));
        }
        Ok(Self { y_labels, values })
    }

    pub fn y_len(&self) -> usize {
        self.values.len()
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn values(&self) -> &[Interval] {
        &self.values
    }

    fn check_obs(&self, a: &BitSet) -> Result<()> {
        if a.width() != self.y_len() {
            return Err(Error::Domain(format!(
                "observable set of width {} on a carrier of size {}",
                a.width(),
                self.y_len()
            )));
        }
        Ok(())
    }

    pub fn image(&self, a: &BitSet) -> Result<IntervalUnion> {
        self.check_obs(a)?;
        Ok(IntervalUnion::from_intervals(a.iter().map(|y| self.values[y]).collect()))
    }

    pub fn preimage(&self, b: &IntervalUnion) -> Result<BitSet> {
        BitSet::from_indices(self.y_len(), (0..self.y_len()).filter(|&y| b.intersects_interval(&self.values[y])))
    }

    pub fn lower_inverse(&self, b: &IntervalUnion) -> Result<BitSet> {
        BitSet::from_indices(self.y_len(), (0..self.y_len()).filter(|&y| b.contains_interval(&self.values[y])))
    }

    pub fn has_monotone_envelopes(&self) -> bool {
        self.values.windows(2).all(|w| w[0].lo <= w[1].lo && w[0].hi <= w[1].hi)
    }

    pub fn discretize(&self, grid: &LatentGrid) -> Result<FiniteCorrespondence> {
        discretize_values(self.y_labels.clone(), &self.values, grid)
    }
}

fn discretize_values(y_labels: Vec<String>, values: &[Interval], grid: &LatentGrid) -> Result<FiniteCorrespondence> {
    let mut edges = Vec::new();
    for (y, value) in values.iter().enumerate() {
        let before = edges.len();
        edges.extend(grid.cells_at_midpoints(value).map(|j| (y, j)));
        if edges.len() == before {
            // narrower than a cell: keep the cells it touches
            edges.extend(grid.cells_meeting(value).map(|j| (y, j)));
        }
        if edges.len() == before {
            return Err(Error::Domain(format!(
                "image of {} = [{}, {}] misses the latent grid [{}, {}]",
                y_labels[y], value.lo, value.hi, grid.lo, grid.hi
            )));
        }
    }
    FiniteCorrespondence::new(y_labels, (0..grid.cells).map(|j| grid.midpoint(j).to_string()).collect(), &edges)
}

/// Uniform partition of a latent interval into `cells` closed cells, each
/// represented by its midpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentGrid {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl LatentGrid {
    pub const DEFAULT_CELLS: usize = 512;

    pub fn new(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || cells == 0 {
            return Err(Error::Config(format!("invalid latent grid [{lo}, {hi}] with {cells} cells")));
        }
        Ok(Self { lo, hi, cells })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn cell(&self, j: usize) -> Interval {
        let w = self.width();
        let hi = if j + 1 == self.cells { self.hi } else { self.lo + (j + 1) as f64 * w };
        Interval { lo: self.lo + j as f64 * w, hi, lo_closed: true, hi_closed: true }
    }

    pub fn midpoint(&self, j: usize) -> f64 {
        self.lo + (j as f64 + 0.5) * self.width()
    }

    /// Cells whose midpoint lies in `interval`.
    pub fn cells_at_midpoints(&self, interval: &Interval) -> impl Iterator<Item = usize> + '_ {
        let interval = *interval;
        (0..self.cells).filter(move |&j| interval.contains(self.midpoint(j)))
    }

    pub fn cells_meeting(&self, interval: &Interval) -> impl Iterator<Item = usize> + '_ {
        let interval = *interval;
        (0..self.cells).filter(move |&j| self.cell(j).intersects(&interval))
    }
}
