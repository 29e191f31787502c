//! Belief and plausibility functions induced by a correspondence, capacity
//! tables on small latent supports, alternation checks, Choquet integrals and
//! core membership.
//!
//! Latent subsets are encoded as bitmasks over the latent atoms; every table
//! enumerates all `2ⁿ` of them, so the latent support is capped at
//! [`MAX_CARRIER`] atoms.

mod simplex;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use crate::measure::DiscreteMeasure;

use crate::correspondence::{BitSet, FiniteCorrespondence};
use crate::{Error, Result, TOLERANCE};
use simplex::{LpOutcome, Relation, Row};

/// Largest latent support for which tables are materialized.
pub const MAX_CARRIER: usize = 20;

fn check_pair(p: &DiscreteMeasure, corr: &FiniteCorrespondence) -> Result<()> {
    if p.len() != corr.y_len() {
        return Err(Error::CarrierMismatch(format!(
            "measure on {} atoms, correspondence with {} observable atoms",
            p.len(),
            corr.y_len()
        )));
    }
    Ok(())
}

/// `P̲(B) = P{y : Γ(y) ⊆ B}`.
pub fn belief(p: &DiscreteMeasure, corr: &FiniteCorrespondence, b: &BitSet) -> Result<f64> {
    check_pair(p, corr)?;
    p.mass(&corr.lower_inverse(b)?)
}

/// `P̄(B) = P{y : Γ(y) ∩ B ≠ ∅}`.
pub fn plausibility(p: &DiscreteMeasure, corr: &FiniteCorrespondence, b: &BitSet) -> Result<f64> {
    check_pair(p, corr)?;
    p.mass(&corr.preimage(b)?)
}

/// Set function on all subsets of an `n`-atom support, indexed by bitmask.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacityTable {
    n: usize,
    values: Vec<f64>,
}

/// JSON view: decimal bitmask → value.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapacityTableJson {
    pub n: usize,
    pub values: BTreeMap<String, f64>,
}

impl CapacityTable {
    /// Checks `φ(∅) = 0`, `φ(full) = 1`, values in `[0, 1]` and monotonicity,
    /// all to [`TOLERANCE`].
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n > MAX_CARRIER {
            return Err(Error::Size(format!("capacity tables need n ≤ {MAX_CARRIER}, got {n}")));
        }
        if values.len() != 1 << n {
            return Err(Error::InvalidMeasure(format!("{} values for 2^{n} subsets", values.len())));
        }
        let full = (1usize << n) - 1;
        if values[0].abs() > TOLERANCE || (values[full] - 1.0).abs() > TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "capacity needs φ(∅) = 0 and φ(full) = 1, got {} and {}",
                values[0], values[full]
            )));
        }
        for mask in 0..values.len() {
            if !(-TOLERANCE..=1.0 + TOLERANCE).contains(&values[mask]) {
                return Err(Error::InvalidMeasure(format!("φ({mask:#b}) = {} outside [0, 1]", values[mask])));
            }
            for bit in 0..n {
                let bigger = mask | 1 << bit;
                if values[mask] > values[bigger] + TOLERANCE {
                    return Err(Error::InvalidMeasure(format!("not monotone: φ({mask:#b}) > φ({bigger:#b})")));
                }
            }
        }
        Ok(Self { n, values })
    }

    /// The additive table of a probability measure.
    pub fn from_measure(m: &DiscreteMeasure) -> Result<Self> {
        let n = m.len();
        Self::guard(n)?;
        let mut values = vec![0.0; 1 << n];
        for mask in 1..values.len() {
            let low = mask.trailing_zeros() as usize;
            values[mask] = values[mask & (mask - 1)] + m.weight(low);
        }
        Self::new(n, values)
    }

    /// `B ↦ P̄(B)` over all latent subsets.
    pub fn plausibility(p: &DiscreteMeasure, corr: &FiniteCorrespondence) -> Result<Self> {
        Self::induced(p, corr, |img, b| img & b != 0)
    }

    /// `B ↦ P̲(B)` over all latent subsets.
    pub fn belief(p: &DiscreteMeasure, corr: &FiniteCorrespondence) -> Result<Self> {
        Self::induced(p, corr, |img, b| img & !b == 0)
    }

    fn guard(n: usize) -> Result<()> {
        if n > MAX_CARRIER {
            return Err(Error::Size(format!("latent support of {n} atoms exceeds the table cap of {MAX_CARRIER}")));
        }
        Ok(())
    }

    fn induced(p: &DiscreteMeasure, corr: &FiniteCorrespondence, counts: impl Fn(u64, u64) -> bool) -> Result<Self> {
        check_pair(p, corr)?;
        let n = corr.u_len();
        Self::guard(n)?;
        let images: Vec<u64> =
            (0..corr.y_len()).map(|y| corr.image_of(y).to_mask().expect("n ≤ 20 fits a mask")).collect();
        let values = (0..1u64 << n)
            .map(|b| images.iter().enumerate().filter(|(_, &img)| counts(img, b)).map(|(y, _)| p.weight(y)).sum())
            .collect();
        Self::new(n, values)
    }

    pub fn carrier_size(&self) -> usize {
        self.n
    }

    pub fn value(&self, mask: u64) -> f64 {
        self.values[mask as usize]
    }

    pub fn value_of(&self, set: &BitSet) -> Result<f64> {
        if set.width() != self.n {
            return Err(Error::CarrierMismatch(format!("set of width {} on a table over {}", set.width(), self.n)));
        }
        Ok(self.value(set.to_mask().expect("n ≤ 20 fits a mask")))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `A ↦ 1 − φ(Aᶜ)`.
    pub fn conjugate(&self) -> Self {
        let full = (1usize << self.n) - 1;
        Self { n: self.n, values: (0..=full).map(|m| 1.0 - self.values[full ^ m]).collect() }
    }

    pub fn to_json(&self) -> CapacityTableJson {
        CapacityTableJson {
            n: self.n,
            values: self.values.iter().enumerate().map(|(m, &v)| (m.to_string(), v)).collect(),
        }
    }

    pub fn from_json(json: &CapacityTableJson) -> Result<Self> {
        let mut values = vec![f64::NAN; 1 << json.n.min(MAX_CARRIER)];
        for (k, &v) in &json.values {
            let mask: usize = k.parse().map_err(|_| Error::InvalidMeasure(format!("bad bitmask key {k:?}")))?;
            *values
                .get_mut(mask)
                .ok_or_else(|| Error::InvalidMeasure(format!("bitmask {mask} outside 2^{}", json.n)))? = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidMeasure("capacity table JSON is missing subsets".into()));
        }
        Self::new(json.n, values)
    }
}

/// How [`is_alternating_with`] searches the families `A₁, …, A_k`.
#[derive(Clone, Copy, Debug)]
pub struct AlternationSearch {
    /// Enumerate every multiset of `k` subsets when there are at most this many.
    pub exhaustive_budget: u64,
    /// Number of random families drawn otherwise.
    pub samples: usize,
    pub seed: u64,
}

impl Default for AlternationSearch {
    fn default() -> Self {
        Self { exhaustive_budget: 1 << 21, samples: 1 << 16, seed: 0 }
    }
}

/// Outcome of an alternation check. `holds == true` after a sampled search
/// means no violation was found, not that none exists.
#[derive(Clone, Debug, PartialEq)]
pub struct AlternationVerdict {
    pub holds: bool,
    pub exhaustive: bool,
    pub families_checked: u64,
    pub counterexample: Option<Vec<u64>>,
}

/// Checks `φ(⋂Aᵢ) ≤ Σ_{∅≠I} (−1)^{|I|+1} φ(⋃_I Aᵢ)` for families of up to
/// `order` sets, with the default search settings.
pub fn is_alternating(cap: &CapacityTable, order: usize) -> bool {
    is_alternating_with(cap, order, &AlternationSearch::default()).holds
}

/// A family with a repeated set gives the same inequality as the family with
/// the repeat removed, so multisets of exactly `order` sets cover every
/// smaller order as well.
pub fn is_alternating_with(cap: &CapacityTable, order: usize, search: &AlternationSearch) -> AlternationVerdict {
    if order < 2 {
        return AlternationVerdict { holds: true, exhaustive: true, families_checked: 0, counterexample: None };
    }
    let sets = 1u64 << cap.n;
    let exhaustive_count = multiset_count(sets, order as u64);
    let exhaustive = order <= 4 && exhaustive_count.is_some_and(|c| c <= search.exhaustive_budget);

    let mut family = vec![0u64; order];
    let mut checked = 0u64;
    if exhaustive {
        loop {
            checked += 1;
            if !alternating_inequality_holds(cap, &family) {
                return AlternationVerdict {
                    holds: false,
                    exhaustive,
                    families_checked: checked,
                    counterexample: Some(family),
                };
            }
            // next non-decreasing tuple
            let Some(i) = (0..order).rev().find(|&i| family[i] + 1 < sets) else {
                break;
            };
            let next = family[i] + 1;
            family[i..].iter_mut().for_each(|v| *v = next);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
        for _ in 0..search.samples {
            family.iter_mut().for_each(|v| *v = rng.random_range(0..sets));
            checked += 1;
            if !alternating_inequality_holds(cap, &family) {
                return AlternationVerdict {
                    holds: false,
                    exhaustive,
                    families_checked: checked,
                    counterexample: Some(family),
                };
            }
        }
    }
    AlternationVerdict { holds: true, exhaustive, families_checked: checked, counterexample: None }
}

fn multiset_count(sets: u64, k: u64) -> Option<u64> {
    // C(sets + k - 1, k)
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (sets + i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).ok()
}

fn alternating_inequality_holds(cap: &CapacityTable, family: &[u64]) -> bool {
    let full = (1u64 << cap.n) - 1;
    let intersection = family.iter().fold(full, |acc, a| acc & a);
    let mut rhs = 0.0;
    for choice in 1u32..1 << family.len() {
        let union = family.iter().enumerate().filter(|(i, _)| choice >> i & 1 == 1).fold(0, |acc, (_, a)| acc | a);
        let sign = if choice.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
        rhs += sign * cap.value(union);
    }
    cap.value(intersection) <= rhs + TOLERANCE
}

/// Choquet integral of `f` against `cap`: with atoms sorted by decreasing `f`,
/// `Σ f(σᵢ)·(φ(Sᵢ) − φ(Sᵢ₋₁))` where `Sᵢ = {σ₁, …, σᵢ}`.
pub fn choquet_integral(cap: &CapacityTable, f: &[f64]) -> Result<f64> {
    if f.len() != cap.n {
        return Err(Error::CarrierMismatch(format!("{} values for a capacity on {} atoms", f.len(), cap.n)));
    }
    if let Some(v) = f.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("integrand value {v} is not finite")));
    }
    let mut order: Vec<usize> = (0..cap.n).collect();
    order.sort_by(|&a, &b| f[b].total_cmp(&f[a]));
    let mut total = 0.0;
    let mut level = 0u64;
    let mut previous = 0.0;
    for &atom in &order {
        level |= 1 << atom;
        let v = cap.value(level);
        total += f[atom] * (v - previous);
        previous = v;
    }
    Ok(total)
}

/// `sup { Σ f·q : q ≥ 0, Σ q = 1, q(B) ≤ P̄(B) ∀B }`, by linear programming.
///
/// The program is solved through its dual (one row per latent atom, one column
/// per subset), which is far smaller as a dense tableau than the primal.
pub fn core_sup_expectation(p: &DiscreteMeasure, corr: &FiniteCorrespondence, f: &[f64]) -> Result<f64> {
    let pl = CapacityTable::plausibility(p, corr)?;
    if f.len() != pl.n {
        return Err(Error::CarrierMismatch(format!("{} values for {} latent atoms", f.len(), pl.n)));
    }
    let n = pl.n;
    let subsets = (1usize << n) - 1;
    // columns: y_B for B = 1..2^n - 1, then z⁺, z⁻ (multiplier of Σq = 1)
    let columns = subsets + 2;
    let mut objective = vec![0.0; columns];
    for b in 1..=subsets {
        objective[b - 1] = -pl.value(b as u64);
    }
    objective[subsets] = -1.0;
    objective[subsets + 1] = 1.0;
    let rows: Vec<Row> = (0..n)
        .map(|u| {
            let mut coefficients = vec![0.0; columns];
            for b in 1..=subsets {
                if b >> u & 1 == 1 {
                    coefficients[b - 1] = 1.0;
                }
            }
            coefficients[subsets] = 1.0;
            coefficients[subsets + 1] = -1.0;
            Row { coefficients, relation: Relation::Ge, rhs: f[u] }
        })
        .collect();
    match simplex::maximize(&objective, &rows) {
        LpOutcome::Optimal { value, .. } => Ok(-value),
        LpOutcome::Unbounded => Err(Error::Internal("core is empty: the expectation program is infeasible".into())),
        LpOutcome::Infeasible => Err(Error::Internal("dual of the core program is infeasible".into())),
    }
}

/// Outcome of [`core_membership`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoreMembership {
    pub member: bool,
    /// The latent set with the largest excess `ν(B) − P̄(B)` (smallest mask on
    /// ties), present only when that excess is positive.
    pub witness: Option<BitSet>,
    pub max_excess: f64,
}

/// Whether `ν(B) ≤ P̄(B)` for every latent subset `B`.
pub fn core_membership(
    nu: &DiscreteMeasure,
    corr: &FiniteCorrespondence,
    p: &DiscreteMeasure,
) -> Result<CoreMembership> {
    if nu.len() != corr.u_len() {
        return Err(Error::CarrierMismatch(format!(
            "latent measure on {} atoms, correspondence with {} latent atoms",
            nu.len(),
            corr.u_len()
        )));
    }
    let pl = CapacityTable::plausibility(p, corr)?;
    let nu_table = CapacityTable::from_measure(nu)?;
    let mut best = (f64::NEG_INFINITY, 0u64);
    for b in 0..1u64 << pl.n {
        let excess = nu_table.value(b) - pl.value(b);
        if excess > best.0 + TOLERANCE {
            best = (excess, b);
        }
    }
    let member = best.0 <= TOLERANCE;
    let witness = if member { None } else { Some(BitSet::from_mask(pl.n, best.1)?) };
    Ok(CoreMembership { member, witness, max_excess: best.0.max(0.0) })
}
