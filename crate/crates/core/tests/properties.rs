mod common;

use proptest::prelude::*;

use incomplete_core::capacity::{belief, choquet_integral, plausibility, CapacityTable};
use incomplete_core::correspondence::{BitSet, FiniteCorrespondence};
use incomplete_core::inference::censored_mean_bounds;
use incomplete_core::measure::{DiscreteMeasure, Sample};
use incomplete_core::model::{FiniteModel, IntervalModel, StructuralModel};
use incomplete_core::setclass::{candidate_count, enumerate, enumerate_finite, estimated_binding_class, SetFamily};
use incomplete_core::statistic::{bridge_quantile, ks_capacity_statistic, subsample_quantile};
use incomplete_core::transport::feasible_coupling;

use common::{all_subsets, Instance};

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=6, 1usize..=6)
        .prop_flat_map(|(ny, nu)| {
            (
                Just(ny),
                Just(nu),
                proptest::collection::vec(any::<bool>(), ny * nu),
                proptest::collection::vec(0u64..6, ny),
                proptest::collection::vec(0u64..6, nu),
            )
        })
        .prop_map(|(ny, nu, mask, mut p_counts, mut nu_counts)| {
            let edges: Vec<(usize, usize)> = (0..ny)
                .flat_map(|y| (0..nu).map(move |u| (y, u)))
                .filter(|&(y, u)| mask[y * nu + u] || u == y % nu)
                .collect();
            if p_counts.iter().all(|&c| c == 0) {
                p_counts[0] = 1;
            }
            if nu_counts.iter().all(|&c| c == 0) {
                nu_counts[0] = 1;
            }
            Instance {
                corr: FiniteCorrespondence::from_edges(ny, nu, &edges).unwrap(),
                p: DiscreteMeasure::from_counts(&p_counts).unwrap(),
                nu: DiscreteMeasure::from_counts(&nu_counts).unwrap(),
                p_counts,
                nu_counts,
            }
        })
}

/// A finite model together with a sample on its observable atoms.
fn finite_model_and_sample() -> impl Strategy<Value = (FiniteModel, Sample)> {
    instance()
        .prop_flat_map(|inst| {
            let ny = inst.corr.y_len();
            let model = FiniteModel::new(inst.corr, inst.nu).unwrap();
            (Just(model), proptest::collection::vec(0..ny, 5..80))
        })
        .prop_map(|(model, idx)| (model, Sample::from_indices(idx).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lower_inverse_sits_inside_preimage(inst in instance()) {
        for b in all_subsets(inst.corr.u_len()) {
            let lower = inst.corr.lower_inverse(&b).unwrap();
            let upper = inst.corr.preimage(&b).unwrap();
            prop_assert!(lower.is_subset(&upper));
            prop_assert_eq!(upper, inst.corr.lower_inverse(&b.complement()).unwrap().complement());
        }
    }

    #[test]
    fn belief_and_plausibility_are_conjugate(inst in instance()) {
        for b in all_subsets(inst.corr.u_len()) {
            let pl = plausibility(&inst.p, &inst.corr, &b).unwrap();
            let bel = belief(&inst.p, &inst.corr, &b).unwrap();
            let bel_c = belief(&inst.p, &inst.corr, &b.complement()).unwrap();
            prop_assert!(bel <= pl + 1e-15);
            prop_assert!((pl - (1.0 - bel_c)).abs() <= 1e-12);
        }
    }

    #[test]
    fn choquet_is_monotone_and_translation_equivariant(
        inst in instance(),
        raw in proptest::collection::vec(-10.0f64..10.0, 6),
        shift in -5.0f64..5.0,
    ) {
        let table = CapacityTable::plausibility(&inst.p, &inst.corr).unwrap();
        let f = &raw[..inst.corr.u_len()];
        let c = choquet_integral(&table, f).unwrap();
        let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(c >= lo - 1e-9 && c <= hi + 1e-9);
        let shifted: Vec<f64> = f.iter().map(|x| x + shift).collect();
        prop_assert!((choquet_integral(&table, &shifted).unwrap() - (c + shift)).abs() <= 1e-9);
        let raised: Vec<f64> = f.iter().map(|x| x.max(0.0)).collect();
        prop_assert!(choquet_integral(&table, &raised).unwrap() >= c - 1e-9);
    }

    #[test]
    fn adding_an_edge_never_increases_the_violation(inst in instance(), y in 0usize..6, u in 0usize..6) {
        let (y, u) = (y % inst.corr.y_len(), u % inst.corr.u_len());
        let before = feasible_coupling(&inst.p, &inst.nu, &inst.corr).unwrap();
        let after = feasible_coupling(&inst.p, &inst.nu, &inst.corr.with_edge(y, u).unwrap()).unwrap();
        prop_assert!(after.violation_mass <= before.violation_mass + 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&before.violation_mass));
    }

    #[test]
    fn transport_is_symmetric_under_inversion(inst in instance()) {
        prop_assume!(inst.corr.inverse_valid());
        let forward = feasible_coupling(&inst.p, &inst.nu, &inst.corr).unwrap();
        let backward = feasible_coupling(&inst.nu, &inst.p, &inst.corr.inverse().unwrap()).unwrap();
        prop_assert!((forward.violation_mass - backward.violation_mass).abs() <= 1e-12);
    }

    #[test]
    fn coupling_respects_marginals_and_edges(inst in instance()) {
        let res = feasible_coupling(&inst.p, &inst.nu, &inst.corr).unwrap();
        let mut row = vec![0.0; inst.corr.y_len()];
        let mut col = vec![0.0; inst.corr.u_len()];
        for &(y, u, m) in &res.coupling {
            prop_assert!(inst.corr.is_edge(y, u) && m >= 0.0);
            row[y] += m;
            col[u] += m;
        }
        for (y, mass) in row.iter().enumerate() {
            prop_assert!(*mass <= inst.p.weight(y) + 1e-12);
        }
        for (u, mass) in col.iter().enumerate() {
            prop_assert!(*mass <= inst.nu.weight(u) + 1e-12);
        }
        let moved: f64 = row.iter().sum();
        prop_assert!((1.0 - moved - res.violation_mass).abs() <= 1e-9);
    }

    #[test]
    fn finite_enumeration_matches_its_count(m in 1usize..=10, k in 1usize..=3) {
        for fam in [SetFamily::PowerSet, SetFamily::Cells, SetFamily::Rectangles, SetFamily::UnionsOfK(k)] {
            let sets = enumerate_finite(fam, m).unwrap();
            prop_assert_eq!(sets.len() as u128, candidate_count(fam, m, true).unwrap());
            prop_assert!(sets[0].is_empty());
            for set in &sets {
                let idx: Vec<usize> = set.iter().collect();
                let runs = 1 + idx.windows(2).filter(|w| w[1] > w[0] + 1).count();
                let ok = set.is_empty() || set.is_full() || match fam {
                    SetFamily::PowerSet => true,
                    SetFamily::Cells => runs == 1 && (idx[0] == 0 || idx[idx.len() - 1] == m - 1),
                    SetFamily::Rectangles => runs == 1,
                    SetFamily::UnionsOfK(k) => runs <= k,
                };
                prop_assert!(ok, "{} produced {:?}", fam, idx);
            }
        }
    }

    #[test]
    fn binding_classes_grow_with_the_bandwidth((model, sample) in finite_model_and_sample(), h in 0.0f64..0.5, dh in 0.0f64..0.5) {
        let sets = enumerate(SetFamily::PowerSet, &model.carrier(), &sample).unwrap();
        let small = estimated_binding_class(&sets, &sample, &model, h).unwrap();
        let large = estimated_binding_class(&sets, &sample, &model, h + dh).unwrap();
        prop_assert!(small.members.iter().all(|i| large.members.contains(i)));
        prop_assert!(small.members.contains(&0));
    }

    #[test]
    fn statistic_is_nonnegative_and_scaled((model, sample) in finite_model_and_sample()) {
        for fam in [SetFamily::PowerSet, SetFamily::Cells] {
            let t = ks_capacity_statistic(&sample, &model, fam).unwrap();
            prop_assert!(t.raw >= 0.0 && t.raw <= 1.0 + 1e-12);
            prop_assert!((t.scaled - (sample.len() as f64).sqrt() * t.raw).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bridge_quantile_is_deterministic_and_monotone_in_level(
        (model, sample) in finite_model_and_sample(),
        seed in any::<u64>(),
        a in 0.5f64..0.99,
        b in 0.5f64..0.99,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let q = |alpha| bridge_quantile(&sample, &model, SetFamily::PowerSet, alpha, 200, 0.1, seed).unwrap().q_hat;
        let (q_lo, q_hi) = (q(lo), q(hi));
        prop_assert!(q_lo >= 0.0);
        prop_assert!(q_lo <= q_hi);
        prop_assert_eq!(q_hi.to_bits(), q(hi).to_bits());
    }

    #[test]
    fn subsample_quantile_is_deterministic(
        xs in proptest::collection::vec(0.0f64..1.0, 20..120),
        seed in any::<u64>(),
    ) {
        let model = IntervalModel::uniform_bijection(0.0, 1.0).unwrap();
        let sample = Sample::new(xs).unwrap();
        let b = sample.len() / 2;
        let run = || subsample_quantile(&sample, &model, SetFamily::Cells, 0.9, b, 100, seed).unwrap().q_hat;
        let first = run();
        prop_assert!(first >= 0.0);
        prop_assert_eq!(first.to_bits(), run().to_bits());
    }

    #[test]
    fn censored_bounds_nest(
        centers in proptest::collection::vec(-100.0f64..100.0, 2..200),
        delta in 0.0f64..1.0,
        a in 0.5f64..0.999,
        b in 0.5f64..0.999,
    ) {
        let sample = Sample::new(centers).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let narrow = censored_mean_bounds(&sample, delta, lo);
        prop_assume!(narrow.is_ok());
        let narrow = narrow.unwrap();
        let wide = censored_mean_bounds(&sample, delta, hi).unwrap();
        prop_assert!(narrow.ci_lower <= narrow.lower && narrow.lower <= narrow.upper && narrow.upper <= narrow.ci_upper);
        prop_assert!(wide.ci_lower <= narrow.ci_lower + 1e-12 && narrow.ci_upper <= wide.ci_upper + 1e-12);
        prop_assert!((narrow.upper - narrow.lower - delta).abs() <= 1e-9);
    }
}

#[test]
fn bitsets_round_trip_through_masks() {
    for n in 0..=8 {
        for s in all_subsets(n) {
            let rebuilt = BitSet::from_indices(n, s.iter()).unwrap();
            assert_eq!(rebuilt, s);
        }
    }
}
