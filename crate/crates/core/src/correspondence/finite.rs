use serde::{Deserialize, Serialize};

use super::sets::BitSet;
use crate::{Error, Result};

/// Bipartite admissibility relation between finite observable and latent
/// supports. `Γ(y)` is the set of latent atoms joined to `y` by an edge.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteCorrespondence {
    y_labels: Vec<String>,
    u_labels: Vec<String>,
    forward: Vec<BitSet>,
    backward: Vec<BitSet>,
    inverse_valid: bool,
}

/// On-disk shape: `{ "y": [...], "u": [...], "edges": [[i, j], ...] }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrespondenceJson {
    pub y: Vec<serde_json::Value>,
    pub u: Vec<serde_json::Value>,
    pub edges: Vec<[usize; 2]>,
}

fn label_text(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl FiniteCorrespondence {
    /// Builds the correspondence and checks that every observable atom has a
    /// non-empty image. Latent atoms without an edge are allowed, but then the
    /// inverse correspondence is unavailable (see [`Self::inverse_valid`]).
    pub fn new(y_labels: Vec<String>, u_labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let (ny, nu) = (y_labels.len(), u_labels.len());
        if ny == 0 || nu == 0 {
            return Err(Error::InvalidCorrespondence("observable and latent supports must be non-empty".into()));
        }
        let mut forward = vec![BitSet::empty(nu); ny];
        let mut backward = vec![BitSet::empty(ny); nu];
        for &(y, u) in edges {
            if y >= ny || u >= nu {
                return Err(Error::InvalidCorrespondence(format!(
                    "edge ({y}, {u}) outside supports of sizes ({ny}, {nu})"
                )));
            }
            forward[y].insert(u);
            backward[u].insert(y);
        }
        if let Some(y) = forward.iter().position(BitSet::is_empty) {
            return Err(Error::InvalidCorrespondence(format!(
                "observable atom {y} ({}) has an empty image",
                y_labels[y]
            )));
        }
        let inverse_valid = backward.iter().all(|b| !b.is_empty());
        Ok(Self { y_labels, u_labels, forward, backward, inverse_valid })
    }

    /// Correspondence on unlabeled atoms `0..ny` and `0..nu`.
    pub fn from_edges(ny: usize, nu: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::new((0..ny).map(|i| format!("y{i}")).collect(), (0..nu).map(|j| format!("u{j}")).collect(), edges)
    }

    /// The identity pairing `y_i ↔ u_i`.
    pub fn bijection(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).map(|i| (i, i)).collect();
        Self::from_edges(n, n, &edges)
    }

    pub fn from_json_value(json: &CorrespondenceJson) -> Result<Self> {
        let edges: Vec<_> = json.edges.iter().map(|&[y, u]| (y, u)).collect();
        Self::new(json.y.iter().map(label_text).collect(), json.u.iter().map(label_text).collect(), &edges)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: CorrespondenceJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidCorrespondence(format!("bad JSON: {e}")))?;
        Self::from_json_value(&json)
    }

    pub fn to_json(&self) -> CorrespondenceJson {
        CorrespondenceJson {
            y: self.y_labels.iter().cloned().map(serde_json::Value::String).collect(),
            u: self.u_labels.iter().cloned().map(serde_json::Value::String).collect(),
            edges: self.edges().map(|(y, u)| [y, u]).collect(),
        }
    }

    pub fn y_len(&self) -> usize {
        self.y_labels.len()
    }

    pub fn u_len(&self) -> usize {
        self.u_labels.len()
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn u_labels(&self) -> &[String] {
        &self.u_labels
    }

    /// Whether every latent atom is reached, so that `Γ⁻¹` also has
    /// non-empty values.
    pub fn inverse_valid(&self) -> bool {
        self.inverse_valid
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.forward.iter().enumerate().flat_map(|(y, img)| img.iter().map(move |u| (y, u)))
    }

    pub fn is_edge(&self, y: usize, u: usize) -> bool {
        y < self.y_len() && self.forward[y].contains(u)
    }

    /// `Γ({y})`.
    pub fn image_of(&self, y: usize) -> &BitSet {
        &self.forward[y]
    }

    /// `{y : u ∈ Γ(y)}`.
    pub fn preimage_of(&self, u: usize) -> &BitSet {
        &self.backward[u]
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

    fn check_latent(&self, b: &BitSet) -> Result<()> {
        if b.width() != self.u_len() {
            return Err(Error::Domain(format!(
                "latent set of width {} on a carrier of size {}",
                b.width(),
                self.u_len()
            )));
        }
        Ok(())
    }

    /// `Γ(A) = ⋃_{y∈A} Γ(y)`.
    pub fn image(&self, a: &BitSet) -> Result<BitSet> {
        self.check_obs(a)?;
        let mut out = BitSet::empty(self.u_len());
        for y in a.iter() {
            out.union_with(&self.forward[y]);
        }
        Ok(out)
    }

    /// `Γ⁻¹(B) = {y : Γ(y) ∩ B ≠ ∅}`.
    pub fn preimage(&self, b: &BitSet) -> Result<BitSet> {
        self.check_latent(b)?;
        BitSet::from_indices(self.y_len(), (0..self.y_len()).filter(|&y| self.forward[y].intersects(b)))
    }

    /// `{y : Γ(y) ⊆ B}`.
    pub fn lower_inverse(&self, b: &BitSet) -> Result<BitSet> {
        self.check_latent(b)?;
        BitSet::from_indices(self.y_len(), (0..self.y_len()).filter(|&y| self.forward[y].is_subset(b)))
    }

    /// The inverse correspondence `Γ⁻¹ : U ⇉ Y`.
    pub fn inverse(&self) -> Result<Self> {
        if !self.inverse_valid {
            let u = self.backward.iter().position(BitSet::is_empty).unwrap_or(0);
            return Err(Error::InvalidCorrespondence(format!(
                "latent atom {u} ({}) is unreachable, so the inverse has an empty value",
                self.u_labels[u]
            )));
        }
        let edges: Vec<_> = self.edges().map(|(y, u)| (u, y)).collect();
        Self::new(self.u_labels.clone(), self.y_labels.clone(), &edges)
    }

    /// Same supports with one extra admissible pair.
    pub fn with_edge(&self, y: usize, u: usize) -> Result<Self> {
        let mut edges: Vec<_> = self.edges().collect();
        edges.push((y, u));
        Self::new(self.y_labels.clone(), self.u_labels.clone(), &edges)
    }

    /// Single-valued and one-to-one onto the latent support.
    pub fn is_bijection(&self) -> bool {
        self.y_len() == self.u_len()
            && self.forward.iter().all(|img| img.len() == 1)
            && self.backward.iter().all(|pre| pre.len() == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> FiniteCorrespondence {
        // Γ(y1) = {u1}, Γ(y2) = {u1, u2}
        FiniteCorrespondence::from_edges(2, 2, &[(0, 0), (1, 0), (1, 1)]).unwrap()
    }

    fn set(width: usize, idx: &[usize]) -> BitSet {
        BitSet::from_indices(width, idx.iter().copied()).unwrap()
    }

    #[test]
    fn image_examples() {
        let g = two_by_two();
        assert_eq!(g.image(&set(2, &[0, 1])).unwrap(), set(2, &[0, 1]));
        assert_eq!(g.image(&BitSet::empty(2)).unwrap(), BitSet::empty(2));
    }

    #[test]
    fn preimage_examples() {
        let g = two_by_two();
        assert_eq!(g.preimage(&set(2, &[1])).unwrap(), set(2, &[1]));
        assert_eq!(g.preimage(&BitSet::full(2)).unwrap(), BitSet::full(2));
    }

    #[test]
    fn lower_inverse_examples() {
        let g = two_by_two();
        assert_eq!(g.lower_inverse(&set(2, &[0])).unwrap(), set(2, &[0]));
        assert_eq!(g.lower_inverse(&BitSet::full(2)).unwrap(), BitSet::full(2));
    }

    #[test]
    fn out_of_carrier_sets_are_domain_errors() {
        let g = two_by_two();
        assert!(matches!(g.image(&BitSet::empty(3)), Err(Error::Domain(_))));
        assert!(matches!(g.preimage(&BitSet::empty(1)), Err(Error::Domain(_))));
        assert!(matches!(g.lower_inverse(&BitSet::empty(5)), Err(Error::Domain(_))));
    }

    #[test]
    fn construction_rejects_empty_images() {
        let err = FiniteCorrespondence::from_edges(2, 2, &[(0, 0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidCorrespondence(_)));
        assert!(FiniteCorrespondence::from_edges(1, 1, &[(0, 3)]).is_err());
    }

    #[test]
    fn inverse_validity_is_reported() {
        let g = FiniteCorrespondence::from_edges(2, 3, &[(0, 0), (1, 1)]).unwrap();
        assert!(!g.inverse_valid());
        assert!(g.inverse().is_err());
        let inv = two_by_two().inverse().unwrap();
        assert_eq!(inv.image_of(0), &set(2, &[0, 1]));
        assert_eq!(inv.image_of(1), &set(2, &[1]));
    }

    #[test]
    fn json_round_trip() {
        let g = FiniteCorrespondence::from_json(r#"{"y": ["a", 2], "u": ["b"], "edges": [[0,0],[1,0]]}"#).unwrap();
        assert_eq!(g.y_labels(), &["a".to_string(), "2".to_string()]);
        let back = FiniteCorrespondence::from_json_value(&g.to_json()).unwrap();
        assert_eq!(back, g);
    }
}
