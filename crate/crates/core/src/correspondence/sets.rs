use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fixed-width bit set over the atoms `0..width` of a finite carrier.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitSet {
    width: usize,
    words: Vec<u64>,
}

impl BitSet {
    pub fn empty(width: usize) -> Self {
        Self { width, words: vec![0; width.div_ceil(64)] }
    }

    pub fn full(width: usize) -> Self {
        let mut set = Self::empty(width);
        for (i, word) in set.words.iter_mut().enumerate() {
            let remaining = width - 64 * i;
            *word = if remaining >= 64 { u64::MAX } else { (1u64 << remaining) - 1 };
        }
        set
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(width: usize, indices: I) -> Result<Self> {
        let mut set = Self::empty(width);
        for i in indices {
            if i >= width {
                return Err(Error::Domain(format!("index {i} outside carrier of size {width}")));
            }
            set.insert(i);
        }
        Ok(set)
    }

    /// Builds a set from the low `width` bits of `mask` (`width ≤ 64`).
    pub fn from_mask(width: usize, mask: u64) -> Result<Self> {
        if width > 64 {
            return Err(Error::Domain(format!("mask constructor needs width ≤ 64, got {width}")));
        }
        if width < 64 && mask >> width != 0 {
            return Err(Error::Domain(format!("mask {mask:#b} has bits beyond width {width}")));
        }
        let mut set = Self::empty(width);
        if width > 0 {
            set.words[0] = mask;
        }
        Ok(set)
    }

    /// The bits as an integer mask, when the carrier fits in 64 bits.
    pub fn to_mask(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.width && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.width, "index {i} outside width {}", self.width);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        assert!(i < self.width, "index {i} outside width {}", self.width);
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.width
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(move |&i| self.contains(i))
    }

    fn check_width(&self, other: &Self) -> Result<()> {
        if self.width != other.width {
            return Err(Error::CarrierMismatch(format!("bit sets of width {} and {}", self.width, other.width)));
        }
        Ok(())
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_width(other)?;
        Ok(self.zip_with(other, |a, b| a | b))
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.check_width(other)?;
        Ok(self.zip_with(other, |a, b| a & b))
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check_width(other)?;
        Ok(self.zip_with(other, |a, b| a & !b))
    }

    pub fn complement(&self) -> Self {
        Self::full(self.width).zip_with(self, |a, b| a & !b)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.width == other.width && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub(crate) fn union_with(&mut self, other: &Self) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        Self { width: self.width, words: self.words.iter().zip(&other.words).map(|(&a, &b)| f(a, b)).collect() }
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Serialize, Deserialize)]
struct BitSetRepr {
    width: usize,
    members: Vec<usize>,
}

impl Serialize for BitSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        BitSetRepr { width: self.width, members: self.iter().collect() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BitSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = BitSetRepr::deserialize(deserializer)?;
        BitSet::from_indices(repr.width, repr.members).map_err(serde::de::Error::custom)
    }
}

/// A real interval with explicit endpoint openness. Infinite endpoints are
/// always treated as open.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::Domain("interval endpoint is NaN".into()));
        }
        Ok(Self { lo, hi, lo_closed: lo_closed && lo.is_finite(), hi_closed: hi_closed && hi.is_finite() })
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, true)
    }

    pub fn open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, false, false)
    }

    pub fn point(x: f64) -> Result<Self> {
        Self::closed(x, x)
    }

    pub fn real_line() -> Self {
        Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY, lo_closed: false, hi_closed: false }
    }

    pub fn is_empty(&self) -> bool {
        match self.lo.partial_cmp(&self.hi) {
            Some(Ordering::Less) => false,
            Some(Ordering::Equal) => !(self.lo_closed && self.hi_closed),
            _ => true,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let (lo, lo_closed) = match self.lo.partial_cmp(&other.lo) {
            Some(Ordering::Greater) => (self.lo, self.lo_closed),
            Some(Ordering::Less) => (other.lo, other.lo_closed),
            _ => (self.lo, self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Less) => (self.hi, self.hi_closed),
            Some(Ordering::Greater) => (other.hi, other.hi_closed),
            _ => (self.hi, self.hi_closed && other.hi_closed),
        };
        Self { lo, hi, lo_closed, hi_closed }
    }

    pub fn intersects(&self, other: &Self) -> bool {
        !self.intersect(other).is_empty()
    }

    /// Whether `self ⊆ other`. The empty interval is a subset of anything.
    pub fn is_subset(&self, other: &Self) -> bool {
        if self.is_empty() {
            return true;
        }
        let lo_ok = self.lo > other.lo || (self.lo == other.lo && (other.lo_closed || !self.lo_closed));
        let hi_ok = self.hi < other.hi || (self.hi == other.hi && (other.hi_closed || !self.hi_closed));
        lo_ok && hi_ok
    }

    pub fn to_closed(&self) -> Self {
        Self { lo_closed: self.lo.is_finite(), hi_closed: self.hi.is_finite(), ..*self }
    }

    pub fn length(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    /// Whether `self` ends before `other` starts with no shared or touching point
    /// that would merge them into one interval.
    fn separated_before(&self, other: &Self) -> bool {
        self.hi < other.lo || (self.hi == other.lo && !self.hi_closed && !other.lo_closed)
    }
}

/// Finite union of pairwise disjoint intervals, sorted by left endpoint.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    parts: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_interval(interval: Interval) -> Self {
        Self::from_intervals(vec![interval])
    }

    /// Normalizes an arbitrary list of intervals: drops empty pieces, sorts, and
    /// merges pieces that overlap or touch.
    pub fn from_intervals(mut intervals: Vec<Interval>) -> Self {
        intervals.retain(|i| !i.is_empty());
        intervals.sort_by(|a, b| {
            a.lo.partial_cmp(&b.lo).unwrap_or(Ordering::Equal).then_with(|| b.lo_closed.cmp(&a.lo_closed))
        });
        let mut parts: Vec<Interval> = Vec::with_capacity(intervals.len());
        for next in intervals {
            match parts.last_mut() {
                Some(last) if !last.separated_before(&next) => {
                    if next.hi > last.hi {
                        last.hi = next.hi;
                        last.hi_closed = next.hi_closed;
                    } else if next.hi == last.hi {
                        last.hi_closed |= next.hi_closed;
                    }
                }
                _ => parts.push(next),
            }
        }
        Self { parts }
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.parts.iter().any(|p| p.contains(x))
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_intervals(self.parts.iter().chain(&other.parts).copied().collect())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for a in &self.parts {
            for b in &other.parts {
                let c = a.intersect(b);
                if !c.is_empty() {
                    out.push(c);
                }
            }
        }
        Self::from_intervals(out)
    }

    pub fn intersect_interval(&self, interval: &Interval) -> Self {
        self.intersection(&Self::from_interval(*interval))
    }

    /// Complement within the real line.
    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.parts.len() + 1);
        let mut lo = f64::NEG_INFINITY;
        let mut lo_closed = false;
        for p in &self.parts {
            out.push(Interval { lo, hi: p.lo, lo_closed, hi_closed: !p.lo_closed && p.lo.is_finite() });
            lo = p.hi;
            lo_closed = !p.hi_closed && p.hi.is_finite();
        }
        out.push(Interval { lo, hi: f64::INFINITY, lo_closed, hi_closed: false });
        Self::from_intervals(out)
    }

    /// Whether `interval` lies inside a single component. Because the
    /// components are separated, this is equivalent to inclusion in the union.
    pub fn contains_interval(&self, interval: &Interval) -> bool {
        interval.is_empty() || self.parts.iter().any(|p| interval.is_subset(p))
    }

    pub fn intersects_interval(&self, interval: &Interval) -> bool {
        self.parts.iter().any(|p| p.intersects(interval))
    }

    /// Replaces every endpoint flag by "closed" and re-merges.
    pub fn to_closed(&self) -> Self {
        Self::from_intervals(self.parts.iter().map(Interval::to_closed).collect())
    }

    pub fn total_length(&self) -> f64 {
        self.parts.iter().map(Interval::length).sum()
    }
}

/// A subset of a carrier: a bit set over a finite carrier or an interval union
/// over a real one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObsSet {
    Finite(BitSet),
    Real(IntervalUnion),
}

/// Latent-side sets share the representation of observable sets.
pub type LatentSet = ObsSet;

impl ObsSet {
    pub fn is_empty(&self) -> bool {
        match self {
            ObsSet::Finite(b) => b.is_empty(),
            ObsSet::Real(u) => u.is_empty(),
        }
    }

    pub fn as_finite(&self) -> Result<&BitSet> {
        match self {
            ObsSet::Finite(b) => Ok(b),
            ObsSet::Real(_) => Err(Error::CarrierMismatch("expected a finite set, got an interval union".into())),
        }
    }

    pub fn as_real(&self) -> Result<&IntervalUnion> {
        match self {
            ObsSet::Real(u) => Ok(u),
            ObsSet::Finite(_) => Err(Error::CarrierMismatch("expected an interval union, got a finite set".into())),
        }
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (ObsSet::Finite(a), ObsSet::Finite(b)) => Ok(ObsSet::Finite(a.intersection(b)?)),
            (ObsSet::Real(a), ObsSet::Real(b)) => Ok(ObsSet::Real(a.intersection(b))),
            _ => Err(Error::CarrierMismatch("intersection of finite and real sets".into())),
        }
    }
}

impl From<BitSet> for ObsSet {
    fn from(b: BitSet) -> Self {
        ObsSet::Finite(b)
    }
}

impl From<IntervalUnion> for ObsSet {
    fn from(u: IntervalUnion) -> Self {
        ObsSet::Real(u)
    }
}

/// The space a set lives in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Carrier {
    /// Atoms `0..size`, ordered by index.
    Finite { size: usize },
    /// A closed real interval (endpoints may be infinite).
    Real { lo: f64, hi: f64 },
}

impl Carrier {
    pub fn full_set(&self) -> ObsSet {
        match *self {
            Carrier::Finite { size } => ObsSet::Finite(BitSet::full(size)),
            Carrier::Real { lo, hi } => ObsSet::Real(IntervalUnion::from_interval(Interval {
                lo,
                hi,
                lo_closed: lo.is_finite(),
                hi_closed: hi.is_finite(),
            })),
        }
    }

    pub fn empty_set(&self) -> ObsSet {
        match *self {
            Carrier::Finite { size } => ObsSet::Finite(BitSet::empty(size)),
            Carrier::Real { .. } => ObsSet::Real(IntervalUnion::empty()),
        }
    }

    pub fn check(&self, set: &ObsSet) -> Result<()> {
        match (self, set) {
            (Carrier::Finite { size }, ObsSet::Finite(b)) if b.width() == *size => Ok(()),
            (Carrier::Finite { size }, ObsSet::Finite(b)) => {
                Err(Error::Domain(format!("set of width {} on a carrier of size {size}", b.width())))
            }
            (Carrier::Real { .. }, ObsSet::Real(_)) => Ok(()),
            _ => Err(Error::CarrierMismatch(format!("set kind does not match carrier {self:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitset_basics() {
        let a = BitSet::from_indices(70, [0, 3, 65]).unwrap();
        assert_eq!(a.len(), 3);
        assert!(a.contains(65) && !a.contains(64));
        assert_eq!(a.complement().len(), 67);
        assert!(BitSet::full(70).is_full());
        assert!(BitSet::from_indices(3, [3]).is_err());
        assert_eq!(BitSet::from_mask(3, 0b101).unwrap().iter().collect::<Vec<_>>(), vec![0, 2]);
        assert!(BitSet::from_mask(2, 0b100).is_err());
    }

    #[test]
    fn width_mismatch_is_reported() {
        let a = BitSet::empty(3);
        let b = BitSet::empty(4);
        assert!(matches!(a.union(&b), Err(Error::CarrierMismatch(_))));
    }

    #[test]
    fn interval_union_merges_touching_pieces() {
        let u = IntervalUnion::from_intervals(vec![
            Interval::closed(2.0, 3.0).unwrap(),
            Interval::new(0.0, 1.0, true, false).unwrap(),
            Interval::closed(1.0, 1.5).unwrap(),
        ]);
        assert_eq!(u.parts().len(), 2);
        assert_eq!(u.parts()[0], Interval::closed(0.0, 1.5).unwrap());

        // (0,1) and (1,2) stay apart: the point 1 is in neither.
        let v =
            IntervalUnion::from_intervals(vec![Interval::open(1.0, 2.0).unwrap(), Interval::open(0.0, 1.0).unwrap()]);
        assert_eq!(v.parts().len(), 2);
        assert!(!v.contains(1.0));
    }

    #[test]
    fn complement_flips_endpoints() {
        let u = IntervalUnion::from_interval(Interval::new(0.0, 1.0, true, false).unwrap());
        let c = u.complement();
        assert!(c.contains(-0.5) && c.contains(1.0) && !c.contains(0.0));
        assert_eq!(c.complement(), u);
    }

    #[test]
    fn subset_respects_openness() {
        let open = Interval::open(0.0, 1.0).unwrap();
        let closed = Interval::closed(0.0, 1.0).unwrap();
        assert!(open.is_subset(&closed));
        assert!(!closed.is_subset(&open));
        assert!(Interval::open(0.5, 0.5).unwrap().is_subset(&open));
    }
}
