use std::sync::Arc;

use pca_core::coupling::CouplingState;
use pca_core::dynamics::{Boundary, Configuration};
use pca_core::exact::{gap_a, gibbs_table, nu_table, stochastic_order, transition_matrix, wm_gap, GapMode, OrderMode, PotentialPhi};
use pca_core::exec::Sequential;
use pca_core::lattice::{ball, Region, Site};
use pca_core::noise::RandomnessKey;
use pca_core::rule::{ClassCRule, InteractionKernel, Spin};
use proptest::prelude::*;

fn nn(beta: f64) -> ClassCRule {
    ClassCRule::new(beta, InteractionKernel::nn2d(1.0).unwrap()).unwrap()
}

fn s(c: &[i32]) -> Site {
    Site::new(c).unwrap()
}

fn small_regions() -> Vec<Region> {
    vec![
        ball(2, 0).unwrap(),
        ball(2, 1).unwrap(),
        Region::cube(s(&[0, 0]), 2).unwrap(),
        Region::explicit([s(&[0, 0]), s(&[1, 0]), s(&[3, 1])]).unwrap(),
    ]
}

/// A random boundary on the width-2 collar and a pointwise larger one.
fn ordered_boundaries(region: &Region, seed: u64) -> (Boundary, Boundary) {
    let key = RandomnessKey::new(seed);
    let Some(Boundary::Explicit(low)) = Boundary::random(region, 2, &key, 0.5) else { unreachable!() };
    let mut high = low.clone();
    let raise = Configuration::random(low.region().clone(), &key.with_experiment(1), 0.5);
    for i in 0..high.len() {
        if raise.get(i) == Spin::Plus {
            high.set(i, Spin::Plus);
        }
    }
    (Boundary::Explicit(low), Boundary::Explicit(high))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tables_and_rows_normalized(beta in 0.0f64..2.0, which in 0usize..4, seed in any::<u64>()) {
        let region = &small_regions()[which];
        let rule = nn(beta);
        let (tau, _) = ordered_boundaries(region, seed);
        for b in [Boundary::AllPlus, Boundary::AllMinus, tau] {
            let t = nu_table(&rule, region, &b).unwrap();
            prop_assert!((t.total() - 1.0).abs() < 1e-12);
            let g = gibbs_table(&PotentialPhi::of(&rule), region, &b).unwrap();
            prop_assert!((g.total() - 1.0).abs() < 1e-12);
            let p = transition_matrix(&rule, region, &b).unwrap();
            prop_assert!(p.max_row_defect() < 1e-12);
            // stationarity, independent of the detailed-balance check
            prop_assert!(p.apply_left(&t).unwrap().max_abs_diff(&t).unwrap() < 1e-10);
        }
    }

    #[test]
    fn gaps_nonnegative(beta in 0.0f64..1.5, l in 0u32..3) {
        let rule = nn(beta);
        prop_assert!(gap_a(&Sequential, &rule, l, GapMode::ExactOnly).unwrap().value >= 0.0);
        prop_assert!(wm_gap(&PotentialPhi::of(&rule), l).unwrap() >= 0.0);
    }

    #[test]
    fn gibbs_monotone_in_boundary(beta in 0.0f64..1.5, which in prop::sample::select(vec![0usize, 2, 3]), seed in any::<u64>()) {
        let region = &small_regions()[which];
        let pot = PotentialPhi::of(&nn(beta));
        let (low, high) = ordered_boundaries(region, seed);
        let v = stochastic_order(&gibbs_table(&pot, region, &low).unwrap(), &gibbs_table(&pot, region, &high).unwrap()).unwrap();
        prop_assert_eq!(v.mode, OrderMode::Exact);
        prop_assert!(v.holds, "margin {}", v.margin);
    }

    #[test]
    fn conditionals_below_plus_table(beta in 0.0f64..1.5, exterior in 0u64..16) {
        let rule = nn(beta);
        let inner = ball(2, 0).unwrap();
        let outer = ball(2, 1).unwrap();
        let big = nu_table(&rule, &outer, &Boundary::AllPlus).unwrap();
        let ring = Arc::new(Region::explicit(outer.sites().iter().copied().filter(|x| !inner.contains(x))).unwrap());
        let cond = big.conditional(&inner, &Configuration::from_rank(ring, exterior)).unwrap();
        let small = nu_table(&rule, &inner, &Boundary::AllPlus).unwrap();
        prop_assert!(stochastic_order(&cond, &small).unwrap().holds);
    }

    #[test]
    fn coalescence_is_absorbing(beta in 0.0f64..1.0, seed in any::<u64>()) {
        let region = Arc::new(ball(2, 2).unwrap());
        let replicas = [
            (Boundary::AllMinus, Configuration::all_minus(region.clone())),
            (Boundary::AllMinus, Configuration::all_plus(region.clone())),
        ];
        let mut st = CouplingState::new(&nn(beta), &replicas, RandomnessKey::new(seed)).unwrap();
        let mut seen = false;
        for _ in 0..60 {
            st.step().unwrap();
            if seen {
                prop_assert!(st.coalesced());
            }
            seen |= st.coalesced();
        }
    }
}
