//! Zero-one cost optimal transport between `P` on the observables and `ν` on
//! the latent variables.
//!
//! The primal value `T*` is the least mass any coupling of `P` and `ν` must
//! put outside `Graph Γ`. It is computed as `1 − maxflow` on the network
//! `source → y (P(y)) → u (∞ on admissible edges) → sink (ν(u))`; the source
//! side of the minimum cut is a set `A` attaining the dual value
//! `sup_A P(A) − ν(Γ(A))`.

mod maxflow;

use serde::Serialize;

use crate::correspondence::{BitSet, FiniteCorrespondence};
use crate::measure::DiscreteMeasure;
use crate::{Error, Result};

use maxflow::{FlowNetwork, FlowNum};

/// Largest observable carrier accepted by [`dual_statistic_bruteforce`].
pub const MAX_BRUTEFORCE_CARRIER: usize = 24;

/// Largest common denominator used for exact integer flows.
const MAX_EXACT_SCALE: u64 = 1 << 50;

/// Solution of the zero-one transport problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingResult {
    /// `T*`: mass that cannot be placed on admissible pairs.
    pub violation_mass: f64,
    /// Admissible transported mass as `(y, u, mass)`, totalling `1 − T*`.
    pub coupling: Vec<(usize, usize, f64)>,
    /// A set `A` of observables with `P(A) − ν(Γ(A)) = T*`; the
    /// inclusion-minimal such set.
    pub dual_witness: BitSet,
    /// Whether the flow ran in exact integer arithmetic.
    pub exact: bool,
}

impl CouplingResult {
    pub fn is_feasible(&self) -> bool {
        self.violation_mass <= crate::TOLERANCE
    }
}

fn check_carriers(p: &DiscreteMeasure, nu: &DiscreteMeasure, corr: &FiniteCorrespondence) -> Result<()> {
    if p.len() != corr.y_len() || nu.len() != corr.u_len() {
        return Err(Error::CarrierMismatch(format!(
            "P has {} atoms and ν has {}, but Γ maps {} observables to {} latent atoms",
            p.len(),
            nu.len(),
            corr.y_len(),
            corr.u_len()
        )));
    }
    Ok(())
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Integer capacities for two exactly known measures over a common denominator.
fn exact_capacities(p: &DiscreteMeasure, nu: &DiscreteMeasure) -> Option<(Vec<i64>, Vec<i64>, u64)> {
    let (ep, en) = (p.exact()?, nu.exact()?);
    let g = gcd(ep.denominator, en.denominator);
    let scale = (ep.denominator / g).checked_mul(en.denominator)?;
    if scale > MAX_EXACT_SCALE {
        return None;
    }
    let lift = |nums: &[u64], den: u64| nums.iter().map(|&k| (k * (scale / den)) as i64).collect::<Vec<_>>();
    Some((lift(&ep.numerators, ep.denominator), lift(&en.numerators, en.denominator), scale))
}

struct Solved<F> {
    flow: F,
    coupling: Vec<(usize, usize, F)>,
    witness: BitSet,
}

fn solve<F: FlowNum>(p: &[F], nu: &[F], corr: &FiniteCorrespondence) -> Solved<F> {
    let (ny, nu_len) = (corr.y_len(), corr.u_len());
    let (source, sink) = (0, 1);
    let y_node = |y: usize| 2 + y;
    let u_node = |u: usize| 2 + ny + u;
    let mut g = FlowNetwork::new(2 + ny + nu_len);
    for (y, &w) in p.iter().enumerate() {
        g.add_edge(source, y_node(y), w);
    }
    let pairs: Vec<_> = corr.edges().map(|(y, u)| (y, u, g.add_edge(y_node(y), u_node(u), F::INFINITE))).collect();
    for (u, &w) in nu.iter().enumerate() {
        g.add_edge(u_node(u), sink, w);
    }
    let flow = g.max_flow(source, sink);
    let coupling = pairs
        .into_iter()
        .filter_map(|(y, u, e)| {
            let f = g.flow(e);
            f.positive().then_some((y, u, f))
        })
        .collect();
    let side = g.source_side(source);
    let mut witness = BitSet::empty(ny);
    for y in (0..ny).filter(|&y| side[y_node(y)]) {
        witness.insert(y);
    }
    Solved { flow, coupling, witness }
}

/// Solves the zero-one transport problem by maximum flow.
///
/// Runs in integer arithmetic when both measures carry exact rational weights
/// (empirical measures, measures built from counts); otherwise in floating
/// point with a `1e-12` slack on residual capacities.
pub fn feasible_coupling(
    p: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    corr: &FiniteCorrespondence,
) -> Result<CouplingResult> {
    check_carriers(p, nu, corr)?;
    if let Some((pi, ni, scale)) = exact_capacities(p, nu) {
        let s = solve(&pi, &ni, corr);
        let scale_f = scale as f64;
        return Ok(CouplingResult {
            violation_mass: (scale as i64 - s.flow) as f64 / scale_f,
            coupling: s.coupling.into_iter().map(|(y, u, f)| (y, u, f as f64 / scale_f)).collect(),
            dual_witness: s.witness,
            exact: true,
        });
    }
    let s = solve(p.weights(), nu.weights(), corr);
    Ok(CouplingResult {
        violation_mass: (1.0 - s.flow).max(0.0),
        coupling: s.coupling,
        dual_witness: s.witness,
        exact: false,
    })
}

/// `sup_A P(A) − ν(Γ(A))` by enumerating all subsets of the observables.
///
/// Ties are broken toward the smallest bitmask. Exact when both measures are
/// exact; otherwise values within `1e-12` of the maximum count as ties.
pub fn dual_statistic_bruteforce(
    p: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    corr: &FiniteCorrespondence,
) -> Result<(f64, BitSet)> {
    check_carriers(p, nu, corr)?;
    let ny = corr.y_len();
    if ny > MAX_BRUTEFORCE_CARRIER {
        return Err(Error::Size(format!(
            "{ny} observables exceed the {MAX_BRUTEFORCE_CARRIER}-atom limit of the subset search; use feasible_coupling"
        )));
    }
    let images: Vec<&BitSet> = (0..ny).map(|y| corr.image_of(y)).collect();
    let image_of_mask = |mask: u64| {
        let mut b = BitSet::empty(corr.u_len());
        for y in (0..ny).filter(|y| mask >> y & 1 == 1) {
            b.union_with(images[y]);
        }
        b
    };
    let masks = 0..(1u64 << ny);
    let witness = |mask: u64| BitSet::from_mask(ny, mask);

    if let Some((pi, ni, scale)) = exact_capacities(p, nu) {
        let value = |mask: u64| -> i64 {
            let pa: i64 = (0..ny).filter(|y| mask >> y & 1 == 1).map(|y| pi[y]).sum();
            pa - image_of_mask(mask).iter().map(|u| ni[u]).sum::<i64>()
        };
        let best = masks.clone().map(value).max().unwrap_or(0);
        let mask = masks.into_iter().find(|&m| value(m) == best).unwrap_or(0);
        return Ok((best as f64 / scale as f64, witness(mask)?));
    }

    let value = |mask: u64| -> f64 {
        let pa: f64 = (0..ny).filter(|y| mask >> y & 1 == 1).map(|y| p.weight(y)).sum();
        pa - image_of_mask(mask).iter().map(|u| nu.weight(u)).sum::<f64>()
    };
    let best = masks.clone().map(value).fold(f64::NEG_INFINITY, f64::max);
    let mask = masks.into_iter().find(|&m| value(m) >= best - 1e-12).unwrap_or(0);
    Ok((best, witness(mask)?))
}
