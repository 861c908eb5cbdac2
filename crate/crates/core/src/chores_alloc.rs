//! Chores algorithms: producers for PROPX, EF1 and (equal weights) EFX
//! allocations, the swap algorithm turning a PROPX allocation into an
//! approximate MMAX one, and the improved two-agent algorithm.
//!
//! Producers build a candidate with a fast rule, check it with the exact
//! checker, and fall back to search when the candidate fails.

use std::cmp::Ordering;

use num_traits::Zero;
use serde::Serialize;

use crate::checkers::{self, max_item, min_item};
use crate::error::{Error, Result};
use crate::model::{Allocation, FairnessNotion, Flavor, Instance, ItemSet};
use crate::numeric::{lambda_threshold, rat, serde_rational, surd_compare, FactorBound, Rational};
use crate::oracle::{Nonexistence, Oracle};
use crate::reduction::{lift_allocation, to_ordered, OrderedLift};

/// Which path produced a contract-verified allocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProducerPath {
    Heuristic,
    Backtracking,
    Exhaustive,
}

#[derive(Clone, Debug, Serialize)]
pub struct Produced {
    pub allocation: Allocation,
    pub path: ProducerPath,
}

fn require_chores(instance: &Instance) -> Result<()> {
    if instance.flavor() != Flavor::Chores {
        return Err(Error::Precondition("this algorithm allocates chores".into()));
    }
    Ok(())
}

/// Exhaustive fallback: first allocation meeting `notion` at factor 1.
fn exhaustive(oracle: &Oracle, instance: &Instance, notion: FairnessNotion) -> Result<Produced> {
    match oracle.verify_nonexistence(instance, notion)? {
        Nonexistence::Witness { allocation, .. } => Ok(Produced {
            allocation,
            path: ProducerPath::Exhaustive,
        }),
        Nonexistence::NoAllocationSatisfies { .. } => Err(Error::Soundness(format!(
            "no {notion} allocation exists, contradicting the existence guarantee"
        ))),
    }
}

fn meets(oracle: &Oracle, instance: &Instance, allocation: &Allocation, notion: FairnessNotion) -> Result<bool> {
    oracle.satisfies(instance, allocation, notion, &FactorBound::one())
}

pub fn propx_allocate(instance: &Instance) -> Result<Allocation> {
    Ok(propx_allocate_traced(&Oracle::default(), instance)?.allocation)
}

/// PROPX allocation built on the ordered instance and lifted back.
///
/// On an ordered instance with items handed out largest-first, an agent's
/// cheapest item is the last one it receives, so the allocation is PROPX
/// exactly when every agent's load is within its share each time it
/// receives an item. A depth-first search over that rule is therefore
/// complete; the first branch tried gives the item to the eligible agent
/// whose load relative to its share stays smallest.
pub fn propx_allocate_traced(oracle: &Oracle, instance: &Instance) -> Result<Produced> {
    require_chores(instance)?;
    let lift = to_ordered(instance);
    let ordered = &lift.ordered;
    let (n, m) = (ordered.n(), ordered.m());
    let shares: Vec<Rational> = (0..n)
        .map(|i| ordered.weight(i) * ordered.total_value(i))
        .collect();

    struct Dfs<'a> {
        inst: &'a Instance,
        shares: &'a [Rational],
        loads: Vec<Rational>,
        assign: Vec<usize>,
        backtracked: bool,
        nodes: u64,
    }
    impl Dfs<'_> {
        fn key(&self, i: usize, item: usize) -> Rational {
            if self.shares[i].is_zero() {
                Rational::zero()
            } else {
                (&self.loads[i] + self.inst.value(i, item)) / &self.shares[i]
            }
        }

        fn run(&mut self, t: usize) -> Result<bool> {
            if t == self.assign.len() {
                return Ok(true);
            }
            self.nodes += 1;
            if self.nodes > 20_000_000 {
                return Err(Error::SizeLimit("PROPX search exceeded its node budget".into()));
            }
            let mut eligible: Vec<usize> = (0..self.inst.n())
                .filter(|&i| self.loads[i] <= self.shares[i])
                .collect();
            eligible.sort_by_cached_key(|&i| (self.key(i, t), i));
            for (attempt, i) in eligible.into_iter().enumerate() {
                if attempt > 0 {
                    self.backtracked = true;
                }
                self.assign[t] = i;
                let added = self.inst.value(i, t).clone();
                self.loads[i] += &added;
                if self.run(t + 1)? {
                    return Ok(true);
                }
                self.loads[i] -= &added;
            }
            Ok(false)
        }
    }

    let mut dfs = Dfs {
        inst: ordered,
        shares: &shares,
        loads: vec![Rational::zero(); n],
        assign: vec![0; m],
        backtracked: false,
        nodes: 0,
    };
    if dfs.run(0)? {
        let ordered_alloc = Allocation::from_assignment(&dfs.assign, n);
        let allocation = lift_allocation(&lift, instance, &ordered_alloc)?;
        if meets(oracle, instance, &allocation, FairnessNotion::Propx)? {
            let path = if dfs.backtracked {
                ProducerPath::Backtracking
            } else {
                ProducerPath::Heuristic
            };
            return Ok(Produced { allocation, path });
        }
    }
    exhaustive(oracle, instance, FairnessNotion::Propx)
}

pub fn ef1_allocate(instance: &Instance) -> Result<Allocation> {
    Ok(ef1_allocate_traced(&Oracle::default(), instance)?.allocation)
}

/// Weighted picking sequence: the next picker minimizes `(picks + 1) / w`
/// (smallest index on ties) and takes its cheapest remaining chore. Tries the
/// schedule forwards and then with pickers taking the costliest chore in
/// reverse schedule order; each candidate is checked exactly.
pub fn ef1_allocate_traced(oracle: &Oracle, instance: &Instance) -> Result<Produced> {
    require_chores(instance)?;
    let (n, m) = (instance.n(), instance.m());
    let mut picks = vec![0u64; n];
    let mut schedule = Vec::with_capacity(m);
    for _ in 0..m {
        let next = (0..n)
            .min_by(|&a, &b| {
                let ka = rat(picks[a] as i64 + 1, 1) / instance.weight(a);
                let kb = rat(picks[b] as i64 + 1, 1) / instance.weight(b);
                ka.cmp(&kb).then(a.cmp(&b))
            })
            .expect("n >= 1");
        picks[next] += 1;
        schedule.push(next);
    }
    let run = |order: &mut dyn Iterator<Item = usize>, cheapest: bool| {
        let mut remaining: ItemSet = instance.full_set();
        let mut bundles = vec![Vec::new(); n];
        for agent in order {
            let item = if cheapest {
                min_item(instance, agent, remaining)
            } else {
                max_item(instance, agent, remaining)
            }
            .expect("one item per pick");
            remaining &= !(1u64 << item);
            bundles[agent].push(item);
        }
        Allocation::new(bundles)
    };
    let forward = run(&mut schedule.iter().copied(), true);
    if meets(oracle, instance, &forward, FairnessNotion::Ef1)? {
        return Ok(Produced {
            allocation: forward,
            path: ProducerPath::Heuristic,
        });
    }
    let reverse = run(&mut schedule.iter().rev().copied(), false);
    if meets(oracle, instance, &reverse, FairnessNotion::Ef1)? {
        return Ok(Produced {
            allocation: reverse,
            path: ProducerPath::Heuristic,
        });
    }
    exhaustive(oracle, instance, FairnessNotion::Ef1)
}

/// EFX allocation of the ordered instance for equal weights.
pub fn efx_allocate_equal_weights(lift: &OrderedLift) -> Result<Allocation> {
    Ok(efx_allocate_traced(&Oracle::default(), lift)?.allocation)
}

/// Envy-cycle elimination for chores with top-trading rotations: chores go
/// out largest-first to an agent who envies nobody; when every agent envies
/// someone, agents each take the bundle that is cheapest for them along a
/// cycle of that "cheapest bundle" graph. Since the new chore is the smallest
/// in the receiver's bundle and the receiver envied nobody, EFX is kept.
pub fn efx_allocate_traced(oracle: &Oracle, lift: &OrderedLift) -> Result<Produced> {
    let inst = &lift.ordered;
    require_chores(inst)?;
    if !inst.equal_weights() {
        return Err(Error::Precondition("EFX producer needs equal weights".into()));
    }
    let n = inst.n();
    let mut masks: Vec<ItemSet> = vec![0; n];
    for item in 0..inst.m() {
        let sink = loop {
            if let Some(s) = (0..n).find(|&i| !envies_someone(inst, &masks, i)) {
                break s;
            }
            top_trading_rotate(inst, &mut masks);
        };
        masks[sink] |= 1 << item;
    }
    let allocation = Allocation::from_masks(&masks);
    if meets(oracle, inst, &allocation, FairnessNotion::Efx)? {
        return Ok(Produced {
            allocation,
            path: ProducerPath::Heuristic,
        });
    }
    exhaustive(oracle, inst, FairnessNotion::Efx)
}

fn envies_someone(inst: &Instance, masks: &[ItemSet], i: usize) -> bool {
    let own = inst.value_of(i, masks[i]);
    (0..inst.n()).any(|j| j != i && own > inst.value_of(i, masks[j]))
}

/// Every agent points to the bundle it finds cheapest (smallest index on
/// ties); with no agent content, the pointers form a cycle, and rotating
/// along it leaves each agent on that cycle envying nobody.
fn top_trading_rotate(inst: &Instance, masks: &mut [ItemSet]) {
    let n = inst.n();
    let target: Vec<usize> = (0..n)
        .map(|i| {
            (0..n)
                .min_by(|&a, &b| {
                    inst.value_of(i, masks[a])
                        .cmp(&inst.value_of(i, masks[b]))
                        .then(a.cmp(&b))
                })
                .expect("n >= 1")
        })
        .collect();
    let mut seen = vec![false; n];
    let mut at = 0;
    while !seen[at] {
        seen[at] = true;
        at = target[at];
    }
    let start = at;
    let old = masks.to_vec();
    loop {
        masks[at] = old[target[at]];
        at = target[at];
        if at == start {
            break;
        }
    }
}

/// What the swap algorithm did for one agent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SwapDecision {
    NoSwap {
        agent: usize,
    },
    /// The other agent ends up holding only `given`.
    TwoAgentSwap {
        agent: usize,
        given: usize,
        receiver: usize,
    },
    /// `f_min` goes to `j` and `f_max` to `k`; `agent` absorbs their bundles.
    ThreeWaySwap {
        agent: usize,
        f_min: usize,
        f_max: usize,
        j: usize,
        k: usize,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct SwapTrace {
    pub input: Allocation,
    pub decisions: Vec<SwapDecision>,
    pub output: Allocation,
}

/// Swap algorithm: for each agent in index order, if its bundle has at least
/// two chores and its cheapest chore costs more than `lambda(n)` times
/// everything else, hand chores out so that the receivers hold singletons.
/// Conditions are evaluated on the current, possibly already swapped, state.
pub fn swap_mmax(instance: &Instance, propx: &Allocation) -> Result<(Allocation, SwapTrace)> {
    require_chores(instance)?;
    let n = instance.n();
    let lambda = lambda_threshold(n)?;
    if !checkers::satisfies(instance, propx, FairnessNotion::Propx, &FactorBound::one())? {
        return Err(Error::Precondition("swap input is not PROPX".into()));
    }
    let full = instance.full_set();
    let mut masks = propx.masks();
    let mut decisions = Vec::with_capacity(n);
    for i in 0..n {
        let own = masks[i];
        let rest = full & !own;
        let heavy = own.count_ones() >= 2 && {
            let fmin = min_item(instance, i, own).expect("non-empty");
            surd_compare(instance.value(i, fmin), &instance.value_of(i, rest), &lambda) == Ordering::Greater
        };
        if !heavy {
            decisions.push(SwapDecision::NoSwap { agent: i });
            continue;
        }
        let f_min = min_item(instance, i, own).expect("non-empty");
        if n == 2 {
            let other = 1 - i;
            masks[i] = full & !(1u64 << f_min);
            masks[other] = 1u64 << f_min;
            decisions.push(SwapDecision::TwoAgentSwap {
                agent: i,
                given: f_min,
                receiver: other,
            });
            continue;
        }
        let f_max = max_item(instance, i, own & !(1u64 << f_min)).expect("two items");
        let mut others: Vec<(Rational, usize)> = (0..n)
            .filter(|&q| q != i)
            .map(|q| (instance.value_of(i, masks[q]), q))
            .collect();
        others.sort();
        let (j, k) = (others[0].1, others[1].1);
        masks[i] = (own & !(1u64 << f_min) & !(1u64 << f_max)) | masks[j] | masks[k];
        masks[j] = 1u64 << f_min;
        masks[k] = 1u64 << f_max;
        decisions.push(SwapDecision::ThreeWaySwap {
            agent: i,
            f_min,
            f_max,
            j,
            k,
        });
    }
    let output = Allocation::from_masks(&masks);
    let trace = SwapTrace {
        input: propx.clone(),
        decisions,
        output: output.clone(),
    };
    Ok((output, trace))
}

/// How the greedy loop of the two-agent algorithm decides whether an item fits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitRule {
    /// Give the item only if the bundle stays within the share after adding it.
    #[default]
    AfterAdd,
    /// Give the item whenever the bundle is within the share before adding it.
    BeforeAdd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakCase {
    /// The break item alone goes to the other agent.
    IsolateItem,
    /// The other agent takes everything the cheaper agent does not hold.
    OtherTakesRest,
    /// The cheaper agent takes the break item, the other the remainder.
    SplitRemainder,
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoAgentTrace {
    pub fit_rule: FitRule,
    /// `(item, agent)` pairs handed out before any break.
    pub prefix: Vec<(usize, usize)>,
    pub break_item: Option<usize>,
    pub cheaper_agent: Option<usize>,
    pub case: Option<BreakCase>,
    #[serde(with = "serde_rational")]
    pub lambda: Rational,
    #[serde(with = "serde_rational")]
    pub mu: Rational,
}

pub fn two_agent_lambda() -> Rational {
    rat(191, 100)
}

pub fn two_agent_mu() -> Rational {
    rat(263, 100)
}

/// Two-agent algorithm on the ordered instance of `lift`; the returned
/// allocation is for `lift.ordered`.
pub fn two_agent_mmax(lift: &OrderedLift) -> Result<(Allocation, TwoAgentTrace)> {
    two_agent_mmax_with(lift, FitRule::AfterAdd)
}

pub fn two_agent_mmax_with(lift: &OrderedLift, fit_rule: FitRule) -> Result<(Allocation, TwoAgentTrace)> {
    let inst = lift.ordered.normalize();
    require_chores(&inst)?;
    if inst.n() != 2 {
        return Err(Error::Precondition(format!(
            "two-agent algorithm needs exactly two agents, got {}",
            inst.n()
        )));
    }
    if !inst.is_ordered() {
        return Err(Error::Precondition("two-agent algorithm needs an ordered instance".into()));
    }
    let (lambda, mu) = (two_agent_lambda(), two_agent_mu());
    let m = inst.m();
    let full = inst.full_set();
    let w = [inst.weight(0).clone(), inst.weight(1).clone()];
    let mut x: [ItemSet; 2] = [0, 0];
    let mut cost = [Rational::zero(), Rational::zero()];
    let mut trace = TwoAgentTrace {
        fit_rule,
        prefix: Vec::new(),
        break_item: None,
        cheaper_agent: None,
        case: None,
        lambda: lambda.clone(),
        mu: mu.clone(),
    };
    for j in 0..m {
        let c = [inst.value(0, j).clone(), inst.value(1, j).clone()];
        let fits = |a: usize| match fit_rule {
            FitRule::AfterAdd => &cost[a] + &c[a] <= w[a],
            FitRule::BeforeAdd => cost[a] <= w[a],
        };
        let to = if c[0] <= c[1] && fits(0) {
            Some(0)
        } else if c[0] >= c[1] && fits(1) {
            Some(1)
        } else {
            None
        };
        if let Some(a) = to {
            x[a] |= 1 << j;
            cost[a] += &c[a];
            trace.prefix.push((j, a));
            continue;
        }
        let i = if c[0] <= c[1] { 0 } else { 1 };
        let l = 1 - i;
        let bit = 1u64 << j;
        let rest: ItemSet = full & !(x[0] | x[1] | bit);
        let case = if x[i] != 0 && c[i] > &mu * inst.value_of(i, x[l] | rest) {
            x[i] = full & !bit;
            x[l] = bit;
            BreakCase::IsolateItem
        } else if &w[i] * inst.value_of(l, full & !x[i]) <= &lambda * &w[l] * inst.value_of(l, x[i]) {
            x[l] = full & !x[i];
            BreakCase::OtherTakesRest
        } else {
            x[i] |= bit;
            x[l] |= rest;
            BreakCase::SplitRemainder
        };
        trace.break_item = Some(j);
        trace.cheaper_agent = Some(i);
        trace.case = Some(case);
        break;
    }
    Ok((Allocation::from_masks(&x), trace))
}

/// Runs the two-agent algorithm on the ordered instance and lifts the result.
pub fn two_agent_mmax_lifted(instance: &Instance, fit_rule: FitRule) -> Result<(Allocation, TwoAgentTrace)> {
    let lift = to_ordered(instance);
    let (ordered, trace) = two_agent_mmax_with(&lift, fit_rule)?;
    Ok((lift_allocation(&lift, instance, &ordered)?, trace))
}

/// The two-agent algorithm's guarantee.
pub fn two_agent_bound() -> FactorBound {
    FactorBound::exact(two_agent_lambda())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    fn identical(weights: Vec<Rational>, row: Vec<Rational>) -> Instance {
        let n = weights.len();
        Instance::new(Flavor::Chores, weights, vec![row; n]).unwrap()
    }

    #[test]
    fn propx_single_agent() {
        let inst = identical(vec![rat(1, 1)], vec![rat(1, 2), rat(1, 2)]);
        let p = propx_allocate(&inst).unwrap();
        assert_eq!(p.bundles, vec![vec![0, 1]]);
    }

    #[test]
    fn propx_hard_instance() {
        let e = rat(1, 10);
        let inst = identical(
            vec![rat(1, 2), rat(1, 4), rat(1, 4)],
            vec![rat(1, 2) - &e, rat(1, 2) - &e, e.clone(), e],
        );
        let p = propx_allocate(&inst).unwrap();
        assert!(checkers::satisfies(&inst, &p, FairnessNotion::Propx, &FactorBound::one()).unwrap());
    }

    #[test]
    fn ef1_small() {
        let inst = identical(vec![rat(2, 3), rat(1, 3)], vec![rat(1, 4); 4]);
        let a = ef1_allocate(&inst).unwrap();
        assert!(checkers::satisfies(&inst, &a, FairnessNotion::Ef1, &FactorBound::one()).unwrap());
    }

    #[test]
    fn efx_identical() {
        let inst = identical(vec![rat(1, 3); 3], vec![rat(1, 2), rat(1, 4), rat(1, 8), rat(1, 8)]);
        let lift = to_ordered(&inst);
        let a = efx_allocate_equal_weights(&lift).unwrap();
        assert!(checkers::satisfies(&lift.ordered, &a, FairnessNotion::Efx, &FactorBound::one()).unwrap());
    }

    #[test]
    fn swap_fires_on_hard_instance() {
        let e = rat(1, 10);
        let inst = identical(
            vec![rat(1, 2), rat(1, 4), rat(1, 4)],
            vec![rat(1, 2) - &e, rat(1, 2) - &e, e.clone(), e],
        );
        let input = Allocation::new(vec![vec![0, 1], vec![2], vec![3]]);
        let (out, trace) = swap_mmax(&inst, &input).unwrap();
        assert!(matches!(trace.decisions[0], SwapDecision::ThreeWaySwap { .. }));
        // ties on cost: f_min is the lower index
        assert_eq!(out.bundles, vec![vec![2, 3], vec![0], vec![1]]);
        let bound = FactorBound::one_plus_lambda(3).unwrap();
        assert!(checkers::satisfies(&inst, &out, FairnessNotion::Mmax, &bound).unwrap());
    }

    #[test]
    fn swap_leaves_singletons() {
        let inst = identical(vec![rat(1, 2), rat(1, 2)], vec![rat(1, 2), rat(1, 2)]);
        let input = Allocation::new(vec![vec![0], vec![1]]);
        let (out, trace) = swap_mmax(&inst, &input).unwrap();
        assert_eq!(out, input);
        assert!(trace.decisions.iter().all(|d| matches!(d, SwapDecision::NoSwap { .. })));
    }

    #[test]
    fn swap_rejects_non_propx() {
        let inst = identical(vec![rat(1, 2), rat(1, 2)], vec![rat(1, 3), rat(1, 3), rat(1, 3)]);
        let input = Allocation::new(vec![vec![0, 1, 2], vec![]]);
        assert!(matches!(swap_mmax(&inst, &input), Err(Error::Precondition(_))));
    }

    #[test]
    fn two_agent_prop_path() {
        let inst = identical(vec![rat(1, 2), rat(1, 2)], vec![rat(1, 4); 4]);
        let lift = to_ordered(&inst);
        let (a, trace) = two_agent_mmax(&lift).unwrap();
        assert!(trace.break_item.is_none());
        assert!(checkers::satisfies(&lift.ordered, &a, FairnessNotion::Prop, &FactorBound::one()).unwrap());
    }
}
