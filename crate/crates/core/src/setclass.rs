//! Families of observable sets over which the statistic takes its supremum,
//! binding classes, bandwidths and a randomized core-determining check.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correspondence::{BitSet, Carrier, FiniteCorrespondence, Interval, IntervalUnion, ObsSet};
use crate::measure::{DiscreteMeasure, Sample, SetMeasure};
use crate::model::StructuralModel;
use crate::{rng, Error, Result, TOLERANCE};

/// Default cap on the number of enumerated candidate sets.
pub const DEFAULT_BUDGET: usize = 2_000_000;
/// Largest finite carrier for the power-set family.
pub const MAX_POWERSET_CARRIER: usize = 24;
/// Largest number of pieces in a union family.
pub const MAX_UNION_PIECES: usize = 3;
/// Largest carrier accepted by [`is_core_determining_bruteforce`].
pub const MAX_CORE_CHECK_CARRIER: usize = 12;
/// Default number of random laws tried by [`is_core_determining_bruteforce`].
pub const DEFAULT_CORE_TRIALS: usize = 10_000;

/// Written as `powerset`, `cells`, `rectangles` or `unions:K`, also in JSON.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SetFamily {
    /// Every subset of a finite carrier.
    PowerSet,
    /// Lower and upper half-lines `(−∞, y]` and `[y, ∞)`.
    Cells,
    /// Bounded intervals `[y, z]`.
    Rectangles,
    /// Unions of at most `K` intervals.
    UnionsOfK(usize),
}

impl fmt::Display for SetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetFamily::PowerSet => write!(f, "powerset"),
            SetFamily::Cells => write!(f, "cells"),
            SetFamily::Rectangles => write!(f, "rectangles"),
            SetFamily::UnionsOfK(k) => write!(f, "unions:{k}"),
        }
    }
}

impl From<SetFamily> for String {
    fn from(f: SetFamily) -> Self {
        f.to_string()
    }
}

impl TryFrom<String> for SetFamily {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for SetFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "powerset" => Ok(SetFamily::PowerSet),
            "cells" => Ok(SetFamily::Cells),
            "rectangles" => Ok(SetFamily::Rectangles),
            _ => {
                let k = s.strip_prefix("unions:").and_then(|k| k.parse::<usize>().ok()).ok_or_else(|| {
                    Error::Config(format!("unknown set family '{s}'; expected powerset, cells, rectangles or unions:K"))
                })?;
                if k == 0 || k > MAX_UNION_PIECES {
                    return Err(Error::Config(format!("unions:{k} needs 1 ≤ K ≤ {MAX_UNION_PIECES}")));
                }
                Ok(SetFamily::UnionsOfK(k))
            }
        }
    }
}

/// Candidate sets on a carrier.
///
/// Finite carriers are enumerated over all atoms. Real carriers are anchored
/// at the distinct sample values: the empirical measure is a step function of
/// the endpoints and `ν(Γ(·))` is continuous in them, so the supremum over the
/// continuum family is attained at closed sets with sample-point endpoints.
/// Every enumeration starts with the empty set and the full carrier.
pub fn enumerate(fam: SetFamily, carrier: &Carrier, sample: &Sample) -> Result<Vec<ObsSet>> {
    enumerate_with_budget(fam, carrier, sample, DEFAULT_BUDGET)
}

pub fn enumerate_with_budget(fam: SetFamily, carrier: &Carrier, sample: &Sample, budget: usize) -> Result<Vec<ObsSet>> {
    match *carrier {
        Carrier::Finite { size } => {
            Ok(enumerate_finite_with_budget(fam, size, budget)?.into_iter().map(ObsSet::Finite).collect())
        }
        Carrier::Real { .. } => {
            let anchors = sample.distinct();
            let m = anchors.len();
            check_budget(candidate_count(fam, m, false)?, budget)?;
            let closed = |lo: f64, hi: f64| Interval { lo, hi, lo_closed: lo.is_finite(), hi_closed: hi.is_finite() };
            let mut out = vec![carrier.empty_set(), carrier.full_set()];
            match fam {
                SetFamily::PowerSet => unreachable!("rejected by candidate_count"),
                SetFamily::Cells => {
                    out.extend(
                        anchors.iter().map(|&y| IntervalUnion::from_interval(closed(f64::NEG_INFINITY, y)).into()),
                    );
                    out.extend(anchors.iter().map(|&y| IntervalUnion::from_interval(closed(y, f64::INFINITY)).into()));
                }
                SetFamily::Rectangles => {
                    for i in 0..m {
                        for j in i..m {
                            out.push(IntervalUnion::from_interval(closed(anchors[i], anchors[j])).into());
                        }
                    }
                }
                SetFamily::UnionsOfK(k) => {
                    for runs in separated_runs(m, k, 0) {
                        let parts = runs.iter().map(|&(a, b)| closed(anchors[a], anchors[b])).collect();
                        out.push(IntervalUnion::from_intervals(parts).into());
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Candidate sets on the finite carrier `0..size`, ordered by atom index.
pub fn enumerate_finite(fam: SetFamily, size: usize) -> Result<Vec<BitSet>> {
    enumerate_finite_with_budget(fam, size, DEFAULT_BUDGET)
}

fn enumerate_finite_with_budget(fam: SetFamily, size: usize, budget: usize) -> Result<Vec<BitSet>> {
    check_budget(candidate_count(fam, size, true)?, budget)?;
    let range = |a: usize, b: usize| BitSet::from_indices(size, a..=b);
    let mut out = vec![BitSet::empty(size), BitSet::full(size)];
    match fam {
        SetFamily::PowerSet => {
            out.extend((1..(1u64 << size) - 1).map(|mask| BitSet::from_mask(size, mask).expect("mask fits")));
        }
        SetFamily::Cells => {
            for i in 0..size {
                out.push(range(0, i)?);
            }
            for i in 0..size {
                out.push(range(i, size - 1)?);
            }
        }
        SetFamily::Rectangles => {
            for i in 0..size {
                for j in i..size {
                    out.push(range(i, j)?);
                }
            }
        }
        SetFamily::UnionsOfK(k) => {
            for runs in separated_runs(size, k, 1) {
                out.push(BitSet::from_indices(size, runs.iter().flat_map(|&(a, b)| a..=b))?);
            }
        }
    }
    Ok(out)
}

fn check_budget(count: u128, budget: usize) -> Result<()> {
    if count > budget as u128 {
        return Err(Error::Size(format!("{count} candidate sets exceed the budget of {budget}")));
    }
    Ok(())
}

/// Number of sets [`enumerate`] produces on `m` anchors.
pub fn candidate_count(fam: SetFamily, m: usize, finite: bool) -> Result<u128> {
    let m128 = m as u128;
    Ok(2 + match fam {
        SetFamily::PowerSet => {
            if !finite {
                return Err(Error::Config("the power-set family needs a finite carrier".into()));
            }
            if m > MAX_POWERSET_CARRIER {
                return Err(Error::Size(format!(
                    "power set of {m} atoms exceeds the {MAX_POWERSET_CARRIER}-atom limit"
                )));
            }
            (1u128 << m) - 2
        }
        SetFamily::Cells => 2 * m128,
        SetFamily::Rectangles => m128 * (m128 + 1) / 2,
        SetFamily::UnionsOfK(k) => {
            if k == 0 || k > MAX_UNION_PIECES {
                return Err(Error::Config(format!("unions:{k} needs 1 ≤ K ≤ {MAX_UNION_PIECES}")));
            }
            run_counts(m, k, usize::from(finite)).iter().sum()
        }
    })
}

/// `counts[r − 1]` = number of ways to pick `r` index runs `[a_1, b_1] < … <
/// [a_r, b_r]` in `0..m` with at least `gap` unused indices between runs.
fn run_counts(m: usize, k: usize, gap: usize) -> Vec<u128> {
    // ways[s] for the remaining runs with the next run starting at index ≥ s
    let mut ways = vec![1u128; m + gap + 2];
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let mut starting_at = vec![0u128; m + 1];
        let mut tail = 0u128;
        for a in (0..m).rev() {
            // a run [a, b] followed by the remaining runs from b + 1 + gap
            tail = tail.saturating_add(ways[a + 1 + gap]);
            starting_at[a] = tail;
        }
        // starting_at[a] currently holds Σ_{b ≥ a} ways[b + 1 + gap]
        let mut next = vec![0u128; m + gap + 2];
        let mut acc = 0u128;
        for s in (0..m).rev() {
            acc = acc.saturating_add(starting_at[s]);
            next[s] = acc;
        }
        out.push(next[0]);
        ways = next;
    }
    out
}

/// All collections of `1..=k` index runs in `0..m` separated by at least
/// `gap` unused indices, in lexicographic order of their pieces.
fn separated_runs(m: usize, k: usize, gap: usize) -> Vec<Vec<(usize, usize)>> {
    fn extend(
        start: usize,
        m: usize,
        left: usize,
        gap: usize,
        current: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        for a in start..m {
            for b in a..m {
                current.push((a, b));
                out.push(current.clone());
                if left > 1 {
                    extend(b + 1 + gap, m, left - 1, gap, current, out);
                }
                current.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(0, m, k, gap, &mut Vec::new(), &mut out);
    out
}

/// Indices of the members of an enumerated family retained by a binding rule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BindingClass {
    pub members: Vec<usize>,
    pub bandwidth: f64,
}

impl BindingClass {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// `{A ∈ sets : P(A) ≥ ν(Γ(A)) − h}`; with `h = 0` the binding class proper.
pub fn binding_class(sets: &[ObsSet], p: &dyn SetMeasure, model: &dyn StructuralModel, h: f64) -> Result<BindingClass> {
    if h.is_nan() || h < 0.0 {
        return Err(Error::Config(format!("bandwidth {h} must be non-negative")));
    }
    let mut members = Vec::new();
    for (i, a) in sets.iter().enumerate() {
        if p.measure(a)? >= model.image_mass(a)? - h - TOLERANCE {
            members.push(i);
        }
    }
    Ok(BindingClass { members, bandwidth: h })
}

/// The binding class estimated from a sample, with `P_n` in place of `P`.
pub fn estimated_binding_class(
    sets: &[ObsSet],
    sample: &Sample,
    model: &dyn StructuralModel,
    h: f64,
) -> Result<BindingClass> {
    binding_class(sets, sample, model, h)
}

/// Bandwidth `h_n = c · n^(−γ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandwidthRule {
    pub c: f64,
    pub gamma: f64,
}

impl Default for BandwidthRule {
    fn default() -> Self {
        Self { c: 0.5, gamma: 0.25 }
    }
}

impl BandwidthRule {
    pub fn at(&self, n: usize) -> Result<f64> {
        default_bandwidth(n, self.c, self.gamma)
    }
}

/// `c · n^(−γ)`. Any `0 < γ < 1/2` makes `h_n → 0` while `h_n` still
/// dominates `√(ln ln n / n)`.
pub fn default_bandwidth(n: usize, c: f64, gamma: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Config(format!("bandwidth needs n ≥ 2, got {n}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("bandwidth scale {c} must be positive")));
    }
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::Config(format!(
            "bandwidth exponent {gamma} is outside (0, 1/2): h_n must vanish more slowly than sqrt(ln ln n / n)"
        )));
    }
    Ok(c * (n as f64).powf(-gamma))
}

/// Evidence found by [`is_core_determining_bruteforce`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoreCounterexample {
    /// A law of the observables satisfying every inequality in the family.
    pub p: Vec<f64>,
    /// A set where it violates `P(A) ≤ ν(Γ(A))`, the smallest bitmask among
    /// the largest violations.
    pub set: BitSet,
    pub excess: f64,
    pub trial: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoreVerdict {
    /// `false` only with a counterexample; `true` means none was found.
    pub core_determining: bool,
    pub counterexample: Option<CoreCounterexample>,
    pub trials: usize,
}

/// Searches for a law `P` that satisfies `P(A) ≤ ν(Γ(A))` on the family but
/// not on the full power set.
///
/// Laws are drawn uniformly from the simplex; trial `t` uses random stream
/// `t` under `seed`, and the reported counterexample is the one with the
/// smallest trial index, however the work is split across threads.
pub fn is_core_determining_bruteforce(
    fam: SetFamily,
    corr: &FiniteCorrespondence,
    nu: &DiscreteMeasure,
    trials: usize,
    seed: u64,
) -> Result<CoreVerdict> {
    let k = corr.y_len();
    if k > MAX_CORE_CHECK_CARRIER {
        return Err(Error::Size(format!(
            "{k} observables exceed the {MAX_CORE_CHECK_CARRIER}-atom limit of the core-determining check"
        )));
    }
    if nu.len() != corr.u_len() {
        return Err(Error::CarrierMismatch(format!(
            "ν has {} atoms but Γ has {} latent atoms",
            nu.len(),
            corr.u_len()
        )));
    }
    let subsets = 1usize << k;
    let image_mass: Vec<f64> =
        (0..subsets as u64).map(|mask| nu.mass(&corr.image(&BitSet::from_mask(k, mask)?)?)).collect::<Result<_>>()?;
    let family: Vec<usize> = enumerate_finite(fam, k)?.iter().map(|b| b.to_mask().expect("k ≤ 12") as usize).collect();

    let found = (0..trials).into_par_iter().find_map_first(|trial| {
        let mut r = rng::stream(seed, trial as u64);
        let draws: Vec<f64> = (0..k).map(|_| r.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        let p: Vec<f64> = draws.iter().map(|d| d / total).collect();
        let mut mass = vec![0.0; subsets];
        for mask in 1..subsets {
            let low = mask.trailing_zeros() as usize;
            mass[mask] = mass[mask & (mask - 1)] + p[low];
        }
        let excess = |mask: usize| mass[mask] - image_mass[mask];
        if family.iter().any(|&m| excess(m) > TOLERANCE) {
            return None;
        }
        let best = (0..subsets).map(excess).fold(f64::NEG_INFINITY, f64::max);
        if best <= TOLERANCE {
            return None;
        }
        let set = (0..subsets).find(|&m| excess(m) >= best - 1e-12).expect("maximum is attained");
        Some(CoreCounterexample { p, set: BitSet::from_mask(k, set as u64).expect("k ≤ 12"), excess: best, trial })
    });
    Ok(CoreVerdict { core_determining: found.is_none(), counterexample: found, trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: u128, k: u128) -> u128 {
        if k > n {
            return 0;
        }
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn parse_and_display() {
        for s in ["powerset", "cells", "rectangles", "unions:2"] {
            assert_eq!(s.parse::<SetFamily>().unwrap().to_string(), s);
        }
        assert!("unions:4".parse::<SetFamily>().is_err());
        assert!("balls".parse::<SetFamily>().is_err());
        assert_eq!(serde_json::to_string(&SetFamily::UnionsOfK(3)).unwrap(), "\"unions:3\"");
        assert_eq!(serde_json::from_str::<SetFamily>("\"cells\"").unwrap(), SetFamily::Cells);
    }

    #[test]
    fn real_cells_on_two_points() {
        let sample = Sample::new(vec![0.2, 0.7]).unwrap();
        let sets = enumerate(SetFamily::Cells, &Carrier::Real { lo: 0.0, hi: 1.0 }, &sample).unwrap();
        assert_eq!(sets.len(), 6);
        assert!(sets[0].is_empty());
        let counts: Vec<usize> = sets.iter().map(|s| sample.count(s)).collect();
        assert_eq!(counts, vec![0, 2, 1, 2, 2, 1]);
    }

    #[test]
    fn rectangles_cover_both_points() {
        let sample = Sample::new(vec![0.2, 0.7]).unwrap();
        let sets = enumerate(SetFamily::Rectangles, &Carrier::Real { lo: 0.0, hi: 1.0 }, &sample).unwrap();
        assert_eq!(sets.len(), 5);
        assert!(sets.iter().skip(2).any(|s| sample.count(s) == 2));
    }

    #[test]
    fn finite_power_set() {
        let sets = enumerate_finite(SetFamily::PowerSet, 2).unwrap();
        let mut masks: Vec<u64> = sets.iter().map(|b| b.to_mask().unwrap()).collect();
        masks.sort_unstable();
        assert_eq!(masks, vec![0, 1, 2, 3]);
        assert!(matches!(enumerate_finite(SetFamily::PowerSet, 25), Err(Error::Size(_))));
    }

    #[test]
    fn finite_union_counts_match_brute_force() {
        // a subset of 0..m is a union of at most k runs iff it has at most k maximal runs
        for m in 1..=9usize {
            for k in 1..=3 {
                let runs_in =
                    |mask: u64| (0..m).filter(|&i| mask >> i & 1 == 1 && (i == 0 || mask >> (i - 1) & 1 == 0)).count();
                let expected = (1..(1u64 << m)).filter(|&mask| runs_in(mask) <= k).count() as u128 + 2;
                assert_eq!(candidate_count(SetFamily::UnionsOfK(k), m, true).unwrap(), expected, "m={m} k={k}");
                let sets = enumerate_finite(SetFamily::UnionsOfK(k), m).unwrap();
                assert_eq!(sets.len() as u128, expected);
            }
        }
    }

    #[test]
    fn real_union_counts() {
        // r runs with a_1 ≤ b_1 < a_2 ≤ … ≤ b_r in 0..m: shift to 2r strictly increasing values in 0..m + r
        for m in 1..=12usize {
            for k in 1..=3usize {
                let expected: u128 = (1..=k as u128).map(|r| binom(m as u128 + r, 2 * r)).sum::<u128>() + 2;
                assert_eq!(candidate_count(SetFamily::UnionsOfK(k), m, false).unwrap(), expected);
                assert_eq!(separated_runs(m, k, 0).len() as u128 + 2, expected);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let sample = Sample::new((0..100).map(f64::from).collect()).unwrap();
        let carrier = Carrier::Real { lo: 0.0, hi: 100.0 };
        match enumerate_with_budget(SetFamily::UnionsOfK(3), &carrier, &sample, 1000) {
            Err(Error::Size(msg)) => assert!(msg.contains("exceed")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bandwidth_values() {
        assert!((default_bandwidth(256, 0.5, 0.25).unwrap() - 0.125).abs() < 1e-15);
        assert!((default_bandwidth(16, 1.0, 0.5 - 1e-6).unwrap() - 0.25).abs() < 1e-5);
        assert!(matches!(default_bandwidth(100, 0.5, 0.6), Err(Error::Config(_))));
        assert!(default_bandwidth(100, 0.5, 0.0).is_err());
        assert!(default_bandwidth(1, 0.5, 0.25).is_err());
    }

    #[test]
    fn cells_miss_a_non_interval_violation() {
        let corr = FiniteCorrespondence::from_edges(3, 2, &[(0, 0), (1, 1), (2, 0)]).unwrap();
        let nu = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        let verdict = is_core_determining_bruteforce(SetFamily::Cells, &corr, &nu, 10_000, 1).unwrap();
        assert!(!verdict.core_determining);
        let ce = verdict.counterexample.unwrap();
        assert_eq!(ce.set, BitSet::from_indices(3, [0, 2]).unwrap());
        assert!(ce.p[0] + ce.p[2] > 0.5);
        let power = is_core_determining_bruteforce(SetFamily::PowerSet, &corr, &nu, 2_000, 1).unwrap();
        assert!(power.core_determining);
    }
}
