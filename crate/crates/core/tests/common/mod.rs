#![allow(dead_code)]

use incomplete_core::correspondence::{BitSet, FiniteCorrespondence};
use incomplete_core::measure::DiscreteMeasure;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A finite model `(Γ, ν)` with a law `P` of the observables, all weights
/// exact rationals.
#[derive(Clone, Debug)]
pub struct Instance {
    pub corr: FiniteCorrespondence,
    pub p: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub p_counts: Vec<u64>,
    pub nu_counts: Vec<u64>,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    incomplete_core::rng::stream(seed, 0)
}

/// Random `Γ` on `ny × nu` atoms with non-empty values; each extra edge is
/// present with probability `density`.
pub fn random_correspondence(r: &mut impl Rng, ny: usize, nu: usize, density: f64) -> FiniteCorrespondence {
    let mut edges = Vec::new();
    for y in 0..ny {
        let forced = r.random_range(0..nu);
        for u in 0..nu {
            if u == forced || r.random_bool(density) {
                edges.push((y, u));
            }
        }
    }
    FiniteCorrespondence::from_edges(ny, nu, &edges).unwrap()
}

pub fn random_counts(r: &mut impl Rng, k: usize, total: u64) -> Vec<u64> {
    let mut counts = vec![0u64; k];
    for _ in 0..total {
        counts[r.random_range(0..k)] += 1;
    }
    counts
}

/// With probability one half `ν` is the image of `P` under a random
/// admissible assignment (so the model is well specified); otherwise `ν`
/// is unrelated to `P`.
pub fn random_instance(r: &mut impl Rng, max_y: usize, max_u: usize) -> Instance {
    let ny = r.random_range(1..=max_y);
    let nu = r.random_range(1..=max_u);
    let density = r.random_range(0.1..0.7);
    let corr = random_correspondence(r, ny, nu, density);
    let total = r.random_range(1..=24u64);
    let p_counts = random_counts(r, ny, total);
    let nu_counts = if r.random_bool(0.5) {
        let mut c = vec![0u64; nu];
        for (y, &k) in p_counts.iter().enumerate() {
            let image: Vec<usize> = corr.image_of(y).iter().collect();
            for _ in 0..k {
                c[image[r.random_range(0..image.len())]] += 1;
            }
        }
        c
    } else {
        let total = r.random_range(1..=24u64);
        random_counts(r, nu, total)
    };
    let p = DiscreteMeasure::from_counts(&p_counts).unwrap();
    let nu_m = DiscreteMeasure::from_counts(&nu_counts).unwrap();
    Instance { corr, p, nu: nu_m, p_counts, nu_counts }
}

/// `P(A)` as an exact fraction `(numerator, denominator)`.
pub fn exact_mass(counts: &[u64], set: &BitSet) -> (u64, u64) {
    (set.iter().map(|i| counts[i]).sum(), counts.iter().sum())
}

/// `a/b ≤ c/d` for non-negative fractions.
pub fn frac_le((a, b): (u64, u64), (c, d): (u64, u64)) -> bool {
    (a as u128) * (d as u128) <= (c as u128) * (b as u128)
}

pub fn all_subsets(n: usize) -> impl Iterator<Item = BitSet> {
    (0..1u64 << n).map(move |m| BitSet::from_mask(n, m).unwrap())
}

/// Prints one acceptance line and returns whether it passed.
pub fn report(id: u32, name: &str, pass: bool, detail: String) -> bool {
    println!("[{}] criterion {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}
