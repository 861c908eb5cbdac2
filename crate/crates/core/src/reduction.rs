//! Ordered instances and lifting their allocations back to the original
//! instance.
//!
//! In the ordered instance every agent's row is sorted non-increasing, so all
//! agents rank items the same way. An allocation of the ordered instance is
//! lifted by letting the holder of each ordered item pick an original item:
//! chores go smallest-first with each holder taking its cheapest remaining
//! chore, goods go largest-first with each holder taking its favorite
//! remaining good.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Allocation, Flavor, Instance};

#[derive(Clone, Debug)]
pub struct OrderedLift {
    pub ordered: Instance,
    /// `rank[i][original item] = position` in agent `i`'s sorted row.
    pub rank: Vec<Vec<usize>>,
    /// `order[i][position] = original item`.
    pub order: Vec<Vec<usize>>,
}

/// One pick made while lifting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LiftStep {
    pub ordered_item: usize,
    pub agent: usize,
    pub original_item: usize,
}

/// Sorts every row non-increasing; ties keep original index order.
pub fn to_ordered(instance: &Instance) -> OrderedLift {
    let (n, m) = (instance.n(), instance.m());
    let mut order = Vec::with_capacity(n);
    let mut rank = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let row = instance.row(i);
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&a, &b| row[b].cmp(&row[a]));
        let mut r = vec![0; m];
        for (pos, &item) in idx.iter().enumerate() {
            r[item] = pos;
        }
        values.push(idx.iter().map(|&j| row[j].clone()).collect());
        order.push(idx);
        rank.push(r);
    }
    OrderedLift {
        ordered: instance.replace_values(values),
        rank,
        order,
    }
}

pub fn lift_allocation(lift: &OrderedLift, original: &Instance, ordered_allocation: &Allocation) -> Result<Allocation> {
    Ok(lift_allocation_traced(lift, original, ordered_allocation)?.0)
}

pub fn lift_allocation_traced(
    lift: &OrderedLift,
    original: &Instance,
    ordered_allocation: &Allocation,
) -> Result<(Allocation, Vec<LiftStep>)> {
    if (lift.ordered.n(), lift.ordered.m()) != (original.n(), original.m()) {
        return Err(Error::Precondition(
            "ordered instance does not match the original's dimensions".into(),
        ));
    }
    ordered_allocation.validate(&lift.ordered)?;
    let m = original.m();
    let mut holder = vec![0; m];
    for (agent, bundle) in ordered_allocation.bundles.iter().enumerate() {
        for &j in bundle {
            holder[j] = agent;
        }
    }
    let steps: Vec<usize> = match original.flavor() {
        Flavor::Chores => (0..m).rev().collect(),
        Flavor::Goods => (0..m).collect(),
    };
    let mut remaining = vec![true; m];
    let mut bundles = vec![Vec::new(); original.n()];
    let mut trace = Vec::with_capacity(m);
    for j in steps {
        let agent = holder[j];
        let row = original.row(agent);
        let mut pick: Option<usize> = None;
        for item in (0..m).filter(|&t| remaining[t]) {
            let better = match pick {
                None => true,
                Some(p) => match original.flavor() {
                    Flavor::Chores => row[item] < row[p],
                    Flavor::Goods => row[item] > row[p],
                },
            };
            if better {
                pick = Some(item);
            }
        }
        let item = pick.expect("one remaining item per step");
        remaining[item] = false;
        bundles[agent].push(item);
        trace.push(LiftStep {
            ordered_item: j,
            agent,
            original_item: item,
        });
    }
    Ok((Allocation::new(bundles), trace))
}
