mod common;

use std::cmp::Ordering;

use common::certs::{goods_mmax_certified, order_of, phase_one_violation, propx_structural, within_one_plus_lambda};
use common::{naive_agent, naive_factors, naive_overall, others_mms, r};
use fairdiv::chores_alloc::{
    ef1_allocate, efx_allocate_equal_weights, propx_allocate, swap_mmax, two_agent_mmax, two_agent_mmax_lifted,
    two_agent_mmax_with, FitRule, SwapDecision,
};
use fairdiv::fixtures::{build_fixture, gen_random, CostMode, WeightMode};
use fairdiv::goods_alloc::{ece_preprocess_lifted, ece_preprocess_mmax, envy_cycle_rotate, envy_graph, unenvied};
use fairdiv::reduction::to_ordered;
use fairdiv::{checkers, FactorBound, FairnessNotion, Flavor, Instance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chores(n: usize, m: usize, weights: WeightMode, costs: CostMode, seed: u64) -> Instance {
    gen_random(n, m, Flavor::Chores, weights, costs, seed).unwrap()
}

/// MMAX within `1 + lambda(n)` for every agent, from reference values.
fn swap_certified(inst: &Instance, alloc: &fairdiv::Allocation) -> bool {
    let m = inst.m();
    (0..inst.n()).all(|i| {
        let own = &alloc.bundles[i];
        if own.is_empty() {
            return true;
        }
        let cheapest = own.iter().map(|&j| inst.value(i, j)).min().unwrap();
        let load: fairdiv::Rational = own.iter().map(|&j| inst.value(i, j)).sum::<fairdiv::Rational>() - cheapest;
        let others: Vec<usize> = (0..m).filter(|j| !own.contains(j)).collect();
        within_one_plus_lambda(&load, &others_mms(inst, i, &others), inst.n())
    })
}

#[test]
fn swap_stays_within_one_plus_lambda() {
    for seed in 0..80u64 {
        let n = 2 + (seed % 3) as usize;
        let m = 2 + (seed % 6) as usize;
        let inst = chores(n, m, WeightMode::Random, CostMode::Uniform, seed);
        let propx = propx_allocate(&inst).unwrap();
        let (out, _) = swap_mmax(&inst, &propx).unwrap();
        out.validate(&inst).unwrap();
        assert!(swap_certified(&inst, &out), "seed {seed}");
        let bound = FactorBound::one_plus_lambda(n).unwrap();
        assert!(checkers::satisfies(&inst, &out, FairnessNotion::Mmax, &bound).unwrap(), "seed {seed}");
    }
}

#[test]
fn swap_gives_receivers_singletons() {
    let fixture = build_fixture("swap-motivation", None).unwrap();
    let inst = &fixture.instance;
    let alloc = fixture.allocation.as_ref().unwrap();
    let (out, trace) = swap_mmax(inst, alloc).unwrap();
    let swaps: Vec<_> = trace.decisions.iter().filter(|d| !matches!(d, SwapDecision::NoSwap { .. })).collect();
    assert!(!swaps.is_empty());
    for d in swaps {
        if let SwapDecision::ThreeWaySwap { f_min, f_max, j, k, .. } = d {
            assert_eq!(out.bundles[*j], vec![*f_min]);
            assert_eq!(out.bundles[*k], vec![*f_max]);
        }
    }
    assert!(swap_certified(inst, &out));

    let two = Instance::new(
        Flavor::Chores,
        vec![r(1, 2), r(1, 2)],
        vec![vec![r(9, 10), r(1, 20), r(1, 20)], vec![r(1, 3), r(1, 3), r(1, 3)]],
    )
    .unwrap();
    let start = fairdiv::Allocation::new(vec![vec![0], vec![1, 2]]);
    let (out, trace) = swap_mmax(&two, &start).unwrap();
    assert!(trace.decisions.iter().all(|d| matches!(d, SwapDecision::NoSwap { .. })));
    assert_eq!(out, start);
}

#[test]
fn swap_rejects_non_propx_input() {
    let inst = chores(2, 4, WeightMode::Equal, CostMode::Identical, 3);
    let all_to_one = fairdiv::Allocation::new(vec![vec![0, 1, 2, 3], vec![]]);
    assert!(swap_mmax(&inst, &all_to_one).is_err());
}

#[test]
fn producers_meet_their_notions() {
    for seed in 0..60u64 {
        let n = 1 + (seed % 4) as usize;
        let m = (seed % 8) as usize;
        let inst = chores(n, m, WeightMode::Random, CostMode::Uniform, seed);
        let p = propx_allocate(&inst).unwrap();
        assert!(naive_factors(&inst, &p, FairnessNotion::Propx).iter().all(|f| f.as_ref().is_some_and(|f| *f <= r(1, 1))));
        assert!(propx_structural(&inst, &p), "seed {seed}");
        let e = ef1_allocate(&inst).unwrap();
        assert!(naive_factors(&inst, &e, FairnessNotion::Ef1).iter().all(|f| f.as_ref().is_some_and(|f| *f <= r(1, 1))));

        let eq = chores(n, m, WeightMode::Equal, CostMode::Uniform, seed);
        let lift = to_ordered(&eq);
        let x = efx_allocate_equal_weights(&lift).unwrap();
        let f = naive_overall(&lift.ordered, &naive_factors(&lift.ordered, &x, FairnessNotion::Efx));
        assert!(f.is_some_and(|f| f <= r(1, 1)), "seed {seed}");
    }
}

#[test]
fn two_agent_stays_within_bound() {
    let bound = r(191, 100);
    for seed in 0..120u64 {
        let m = 1 + (seed % 9) as usize;
        let inst = chores(2, m, WeightMode::Random, CostMode::Ordered, seed);
        let lift = to_ordered(&inst);
        for rule in [FitRule::AfterAdd, FitRule::BeforeAdd] {
            let (x, trace) = two_agent_mmax_with(&lift, rule).unwrap();
            x.validate(&lift.ordered).unwrap();
            if rule == FitRule::AfterAdd {
                for notion in [FairnessNotion::Mmax, FairnessNotion::Efx] {
                    for i in 0..2 {
                        let f = naive_agent(&lift.ordered, &x, i, notion);
                        assert!(f.as_ref().is_some_and(|f| *f <= bound), "seed {seed} {notion} agent {i}: {f:?}");
                    }
                }
            }
            // prefix items go to an agent who finds them no costlier
            for &(j, a) in &trace.prefix {
                assert!(lift.ordered.value(a, j) <= lift.ordered.value(1 - a, j));
            }
            if let (Some(j), Some(i)) = (trace.break_item, trace.cheaper_agent) {
                assert_eq!(trace.prefix.len(), j);
                assert!(lift.ordered.value(i, j) <= lift.ordered.value(1 - i, j));
            } else {
                assert_eq!(trace.prefix.len(), m);
            }
        }
        let (lifted, _) = two_agent_mmax_lifted(&inst, FitRule::AfterAdd).unwrap();
        let f = naive_overall(&inst, &naive_factors(&inst, &lifted, FairnessNotion::Mmax));
        assert!(f.is_some_and(|f| f <= bound));
    }
}

/// Checking the load before adding the item lets a bundle overshoot its share
/// by one large chore, and then the bound no longer holds.
#[test]
fn literal_fit_rule_can_exceed_bound() {
    let inst = chores(2, 3, WeightMode::Random, CostMode::Ordered, 11);
    let lift = to_ordered(&inst);
    let (x, _) = two_agent_mmax_with(&lift, FitRule::BeforeAdd).unwrap();
    assert_eq!(naive_agent(&lift.ordered, &x, 1, FairnessNotion::Mmax), Some(r(56, 11)));
    let (y, _) = two_agent_mmax_with(&lift, FitRule::AfterAdd).unwrap();
    let f = naive_overall(&lift.ordered, &naive_factors(&lift.ordered, &y, FairnessNotion::Mmax));
    assert!(f.is_some_and(|f| f <= r(191, 100)));
}

#[test]
fn two_agent_needs_two_agents() {
    let inst = chores(3, 4, WeightMode::Equal, CostMode::Ordered, 1);
    assert!(two_agent_mmax(&to_ordered(&inst)).is_err());
}

#[test]
fn two_agent_beats_swap_on_motivating_instance() {
    let fixture = build_fixture("two-agent-motivation", None).unwrap();
    let inst = &fixture.instance;
    let propx = fixture.allocation.as_ref().unwrap();
    let (swapped, trace) = swap_mmax(inst, propx).unwrap();
    assert!(trace.decisions.iter().all(|d| matches!(d, SwapDecision::NoSwap { .. })));
    assert_eq!(&swapped, propx);
    let (two, _) = two_agent_mmax_lifted(inst, FitRule::AfterAdd).unwrap();
    assert_eq!(order_of(inst, FairnessNotion::Mmax, &two, &swapped), Ordering::Less);
}

#[test]
fn goods_algorithm_certified() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for seed in 0..80u64 {
        let n = rng.gen_range(2..=4usize);
        let m = rng.gen_range(1..=8usize);
        let inst = gen_random(n, m, Flavor::Goods, WeightMode::Equal, CostMode::Uniform, seed).unwrap();
        let lift = to_ordered(&inst);
        let (x, trace) = ece_preprocess_mmax(&lift).unwrap();
        assert_eq!(phase_one_violation(&lift.ordered, &trace), None, "seed {seed}");
        assert_eq!(goods_mmax_certified(&lift.ordered, &x), None, "seed {seed}");
        let (lifted, _) = ece_preprocess_lifted(&inst).unwrap();
        assert_eq!(goods_mmax_certified(&inst, &lifted), None, "seed {seed}");
        assert!(checkers::satisfies(&inst, &lifted, FairnessNotion::Mmax, &FactorBound::phi_minus_one()).unwrap());
    }
}

#[test]
fn goods_algorithm_preconditions() {
    let weighted = gen_random(3, 5, Flavor::Goods, WeightMode::Random, CostMode::Uniform, 2).unwrap();
    assert!(ece_preprocess_lifted(&weighted).is_err());
    let chores = chores(3, 5, WeightMode::Equal, CostMode::Uniform, 2);
    assert!(ece_preprocess_lifted(&chores).is_err());
}

#[test]
fn rotation_never_lowers_own_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rotated = 0;
    for seed in 0..300u64 {
        let n = rng.gen_range(2..=4usize);
        let m = rng.gen_range(n..=8usize);
        let inst = gen_random(n, m, Flavor::Goods, WeightMode::Equal, CostMode::Uniform, seed).unwrap();
        let mut masks: Vec<u64> = vec![0; n];
        for j in 0..m {
            masks[rng.gen_range(0..n)] |= 1 << j;
        }
        if !unenvied(&envy_graph(&inst, &masks)).is_empty() {
            assert!(envy_cycle_rotate(&inst, &mut masks.clone()).is_err());
            continue;
        }
        let before: Vec<_> = (0..n).map(|i| inst.value_of(i, masks[i])).collect();
        let cycle = envy_cycle_rotate(&inst, &mut masks).unwrap();
        let after: Vec<_> = (0..n).map(|i| inst.value_of(i, masks[i])).collect();
        for i in 0..n {
            assert!(after[i] >= before[i]);
        }
        for &i in &cycle {
            assert!(after[i] > before[i]);
        }
        rotated += 1;
    }
    assert!(rotated > 0);
}

/// Two held items tie in the grabber's eyes; the grab must take the one every
/// agent ranks higher or a later label would prefer the grabbed item.
#[test]
fn grab_ties_prefer_the_higher_ranked_item() {
    let rows = [[14, 9, 8, 6], [15, 15, 13, 3], [15, 15, 5, 1], [9, 7, 7, 2]];
    let dens = [37, 46, 36, 25];
    let values = rows
        .iter()
        .zip(dens)
        .map(|(row, d)| row.iter().map(|&v| r(v, d)).collect())
        .collect();
    let inst = Instance::new(Flavor::Goods, vec![r(1, 4); 4], values).unwrap();
    let lift = to_ordered(&inst);
    let (_, trace) = ece_preprocess_mmax(&lift).unwrap();
    assert!(!trace.grabs.is_empty());
    assert_eq!(phase_one_violation(&lift.ordered, &trace), None);
}
