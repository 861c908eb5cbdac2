//! Envy-cycle elimination with a golden-ratio preprocessing phase, for goods
//! and equal weights.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_traits::Zero;
use serde::Serialize;

use crate::checkers::max_item;
use crate::error::{Error, Result};
use crate::model::{items_of, Allocation, Flavor, Instance, ItemSet};
use crate::numeric::{surd_compare, Rational, SurdThreshold};
use crate::reduction::{lift_allocation, to_ordered, OrderedLift};

/// An agent taking over another agent's single item during phase one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Grab {
    pub agent: usize,
    pub from: usize,
    pub item: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct GoodsTrace {
    pub grabs: Vec<Grab>,
    /// Agents that grabbed, in the order they did.
    pub locked: Vec<usize>,
    /// Order labels: grabbers get 1, 2, ... and the rest follow phase two's order.
    pub labels: Vec<usize>,
    /// Time each agent last entered the loop: items taken so far plus one.
    pub entry_times: Vec<usize>,
    /// Each agent's item when phase one ends.
    pub phase_one: Vec<Option<usize>>,
    /// Items still unallocated when phase one ends.
    pub unallocated_after_phase_one: Vec<usize>,
    pub phase_two: Vec<(usize, usize)>,
    /// `(item, receiver)` during envy-cycle elimination.
    pub phase_three: Vec<(usize, usize)>,
    pub rotations: Vec<Vec<usize>>,
}

/// `adj[i][j]` iff agent `i` values `j`'s bundle strictly above its own.
pub fn envy_graph(inst: &Instance, masks: &[ItemSet]) -> Vec<Vec<bool>> {
    let n = inst.n();
    (0..n)
        .map(|i| {
            let own = inst.value_of(i, masks[i]);
            (0..n)
                .map(|j| j != i && own < inst.value_of(i, masks[j]))
                .collect()
        })
        .collect()
}

/// Agents nobody envies.
pub fn unenvied(graph: &[Vec<bool>]) -> Vec<usize> {
    let n = graph.len();
    (0..n).filter(|&j| (0..n).all(|i| !graph[i][j])).collect()
}

/// Rotates bundles along an envy cycle. Every agent must be envied by
/// someone. Prefers a cycle where each agent points at the bundle it values
/// most; when that restricted graph has no cycle, walks incoming edges
/// backwards instead. Returns the cycle, each agent followed by the one whose
/// bundle it takes.
pub fn envy_cycle_rotate(inst: &Instance, masks: &mut [ItemSet]) -> Result<Vec<usize>> {
    let graph = envy_graph(inst, masks);
    if let Some(&j) = unenvied(&graph).first() {
        return Err(Error::Contract(format!(
            "envy-cycle rotation called while agent {j} is envied by nobody"
        )));
    }
    let n = inst.n();
    let top: Vec<Option<usize>> = (0..n)
        .map(|i| {
            let mut best: Option<(Rational, usize)> = None;
            for j in (0..n).filter(|&j| graph[i][j]) {
                let v = inst.value_of(i, masks[j]);
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, j));
                }
            }
            best.map(|(_, j)| j)
        })
        .collect();
    let cycle = top_cycle(&top).unwrap_or_else(|| backward_cycle(&graph));
    let old = masks.to_vec();
    for (p, &a) in cycle.iter().enumerate() {
        let b = cycle[(p + 1) % cycle.len()];
        masks[a] = old[b];
    }
    Ok(cycle)
}

fn top_cycle(top: &[Option<usize>]) -> Option<Vec<usize>> {
    for start in 0..top.len() {
        let mut path = vec![start];
        let mut at = start;
        while let Some(next) = top[at] {
            if let Some(pos) = path.iter().position(|&x| x == next) {
                return Some(path[pos..].to_vec());
            }
            path.push(next);
            at = next;
        }
    }
    None
}

fn backward_cycle(graph: &[Vec<bool>]) -> Vec<usize> {
    let n = graph.len();
    let mut path = vec![0];
    let mut at = 0;
    loop {
        let prev = (0..n).find(|&i| graph[i][at]).expect("everyone is envied");
        if let Some(pos) = path.iter().position(|&x| x == prev) {
            // path runs against the envy direction
            let mut cycle = path[pos..].to_vec();
            cycle.reverse();
            return cycle;
        }
        path.push(prev);
        at = prev;
    }
}

/// Runs the three phases on `lift.ordered`; the allocation is for the ordered
/// instance.
pub fn ece_preprocess_mmax(lift: &OrderedLift) -> Result<(Allocation, GoodsTrace)> {
    let inst = &lift.ordered;
    if inst.flavor() != Flavor::Goods {
        return Err(Error::Precondition("envy-cycle elimination allocates goods".into()));
    }
    if !inst.equal_weights() {
        return Err(Error::Precondition("envy-cycle elimination needs equal weights".into()));
    }
    if !inst.is_ordered() {
        return Err(Error::Precondition("envy-cycle elimination needs an ordered instance".into()));
    }
    let (n, m) = (inst.n(), inst.m());
    let phi = SurdThreshold::golden_ratio();
    let value = |i: usize, e: Option<usize>| e.map_or_else(Rational::zero, |e| inst.value(i, e).clone());

    let mut remaining: ItemSet = inst.full_set();
    let mut holding: Vec<Option<usize>> = vec![None; n];
    let mut queue: BTreeSet<usize> = (0..n).collect();
    let mut locked = vec![false; n];
    let mut labels = vec![0usize; n];
    let mut entry_times = vec![0usize; n];
    let mut trace_locked = Vec::new();
    let mut grabs = Vec::new();
    let mut r = 1;

    while let Some(&i) = queue.iter().next() {
        let e_i = max_item(inst, i, remaining);
        entry_times[i] = m - remaining.count_ones() as usize + 1;
        // value ties go to the lower item index, which every agent ranks at
        // least as high on an ordered instance, then to the lower agent index
        let target = (0..n)
            .filter(|&k| k != i && !queue.contains(&k) && !locked[k] && holding[k].is_some())
            .max_by(|&a, &b| {
                value(i, holding[a])
                    .cmp(&value(i, holding[b]))
                    .then(holding[b].cmp(&holding[a]))
                    .then(b.cmp(&a))
            });
        let j = target.unwrap_or(i);
        let grab = j != i && surd_compare(&value(i, holding[j]), &value(i, e_i), &phi) == Ordering::Greater;
        queue.remove(&i);
        if grab {
            let item = holding[j].take().expect("grabbed agent holds an item");
            holding[i] = Some(item);
            locked[i] = true;
            labels[i] = r;
            r += 1;
            trace_locked.push(i);
            grabs.push(Grab { agent: i, from: j, item });
            queue.insert(j);
        } else if let Some(e) = e_i {
            remaining &= !(1u64 << e);
            holding[i] = Some(e);
        }
    }
    let phase_one = holding.clone();
    let unallocated_after_phase_one: Vec<usize> = items_of(remaining).collect();

    let mut masks: Vec<ItemSet> = holding.iter().map(|h| h.map_or(0, |e| 1u64 << e)).collect();
    let mut rest: Vec<usize> = (0..n).filter(|&i| !locked[i]).collect();
    rest.sort_by(|&a, &b| entry_times[b].cmp(&entry_times[a]).then(a.cmp(&b)));
    let mut phase_two = Vec::new();
    for (s, &i) in rest.iter().enumerate() {
        labels[i] = n - s;
        if let Some(e) = max_item(inst, i, remaining) {
            remaining &= !(1u64 << e);
            masks[i] |= 1u64 << e;
            phase_two.push((i, e));
        }
    }

    let mut phase_three = Vec::new();
    let mut rotations = Vec::new();
    for item in items_of(remaining) {
        let receiver = loop {
            if let Some(&j) = unenvied(&envy_graph(inst, &masks)).first() {
                break j;
            }
            rotations.push(envy_cycle_rotate(inst, &mut masks)?);
        };
        masks[receiver] |= 1u64 << item;
        phase_three.push((item, receiver));
    }

    let trace = GoodsTrace {
        grabs,
        locked: trace_locked,
        labels,
        entry_times,
        phase_one,
        unallocated_after_phase_one,
        phase_two,
        phase_three,
        rotations,
    };
    Ok((Allocation::from_masks(&masks), trace))
}

/// Reduces to the ordered instance, runs the algorithm, and lifts back.
pub fn ece_preprocess_lifted(instance: &Instance) -> Result<(Allocation, GoodsTrace)> {
    let lift = to_ordered(instance);
    let (ordered, trace) = ece_preprocess_mmax(&lift)?;
    Ok((lift_allocation(&lift, instance, &ordered)?, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checkers;
    use crate::model::FairnessNotion;
    use crate::numeric::{rat, FactorBound};

    fn goods(rows: Vec<Vec<Rational>>) -> Instance {
        let n = rows.len() as i64;
        Instance::new(Flavor::Goods, vec![rat(1, n); rows.len()], rows).unwrap()
    }

    #[test]
    fn two_agents_three_goods() {
        let row = vec![rat(1, 2), rat(1, 4), rat(1, 4)];
        let inst = goods(vec![row.clone(), row]);
        let lift = to_ordered(&inst);
        let (alloc, _) = ece_preprocess_mmax(&lift).unwrap();
        let r = checkers::factor(&lift.ordered, &alloc, FairnessNotion::Mmax).unwrap();
        assert!(r.satisfies(&FactorBound::phi_minus_one()));
    }

    #[test]
    fn few_items_give_singletons() {
        let inst = goods(vec![vec![rat(2, 3), rat(1, 3)]; 3]);
        let lift = to_ordered(&inst);
        let (alloc, trace) = ece_preprocess_mmax(&lift).unwrap();
        assert!(alloc.bundles.iter().all(|b| b.len() <= 1));
        assert!(trace.phase_three.is_empty());
        assert!(checkers::satisfies(&lift.ordered, &alloc, FairnessNotion::Mmax, &FactorBound::one()).unwrap());
    }

    #[test]
    fn grab_happens() {
        // agent 1 sees item 0 as far more than phi times item 1
        let inst = goods(vec![
            vec![rat(1, 2), rat(1, 2), rat(0, 1)],
            vec![rat(9, 10), rat(1, 20), rat(1, 20)],
        ]);
        let lift = to_ordered(&inst);
        let (_, trace) = ece_preprocess_mmax(&lift).unwrap();
        assert_eq!(trace.grabs, vec![Grab { agent: 1, from: 0, item: 0 }]);
        assert_eq!(trace.locked, vec![1]);
        assert_eq!(trace.phase_one, vec![Some(1), Some(0)]);
    }

    #[test]
    fn mutual_envy_swaps() {
        let inst = goods(vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]]);
        let mut masks = vec![0b01, 0b10];
        let cycle = envy_cycle_rotate(&inst, &mut masks).unwrap();
        assert_eq!(cycle.len(), 2);
        assert_eq!(masks, vec![0b10, 0b01]);
        assert!(matches!(envy_cycle_rotate(&inst, &mut masks), Err(Error::Contract(_))));
    }

    #[test]
    fn three_cycle_rotates() {
        let inst = goods(vec![
            vec![rat(0, 1), rat(1, 1), rat(0, 1)],
            vec![rat(0, 1), rat(0, 1), rat(1, 1)],
            vec![rat(1, 1), rat(0, 1), rat(0, 1)],
        ]);
        let mut masks = vec![0b001, 0b010, 0b100];
        let before: Rational = (0..3).map(|i| inst.value_of(i, masks[i])).sum();
        envy_cycle_rotate(&inst, &mut masks).unwrap();
        assert_eq!(masks, vec![0b010, 0b100, 0b001]);
        let after: Rational = (0..3).map(|i| inst.value_of(i, masks[i])).sum();
        assert!(after > before);
    }
}
