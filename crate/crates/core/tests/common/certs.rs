//! Certificate checks shared by the algorithm, reduction and acceptance
//! tests. Irrational thresholds are compared by squaring, independently of
//! the library's surd code.

use std::cmp::Ordering;

use fairdiv::goods_alloc::GoodsTrace;
use fairdiv::reduction::{lift_allocation, to_ordered};
use fairdiv::{Allocation, FairnessNotion, Flavor, Instance, Rational};
use num_traits::{Signed, Zero};

use super::{cmp_naive, naive_agent, others_mms};

/// `x > phi * y` for `y >= 0`.
pub fn above_phi_times(x: &Rational, y: &Rational) -> bool {
    let d = x * Rational::from_integer(2.into()) - y;
    d.is_positive() && &d * &d > y * y * Rational::from_integer(5.into())
}

/// `x <= t * y` for `t = 1 + lambda(n)`, the positive root of
/// `t^2 - (n + 1) t + 1 = 0`, with `y >= 0`.
pub fn within_one_plus_lambda(x: &Rational, y: &Rational, n: usize) -> bool {
    // t = ((n+1) + sqrt((n+1)^2 - 4)) / 2, so x <= t y iff
    // 2x - (n+1) y <= sqrt((n+1)^2 - 4) y
    let k = Rational::from_integer(((n + 1) as i64).into());
    let d = x * Rational::from_integer(2.into()) - &k * y;
    if !d.is_positive() {
        return true;
    }
    let disc = &k * &k - Rational::from_integer(4.into());
    &d * &d <= y * y * disc
}

/// `x >= (phi - 1) * y` for `y >= 0`: phi - 1 = (sqrt 5 - 1) / 2.
pub fn at_least_phi_minus_one_times(x: &Rational, y: &Rational) -> bool {
    // 2x + y >= sqrt(5) y
    let d = x * Rational::from_integer(2.into()) + y;
    !d.is_negative() && &d * &d >= y * y * Rational::from_integer(5.into())
}

pub fn complement(m: usize, own: &[usize]) -> Vec<usize> {
    (0..m).filter(|j| !own.contains(j)).collect()
}

pub fn cost(inst: &Instance, i: usize, items: &[usize]) -> Rational {
    items.iter().map(|&j| inst.value(i, j).clone()).sum()
}

/// Own value after dropping the item picked by `pick` (which sees item values).
pub fn after_removal(inst: &Instance, i: usize, bundle: &[usize], largest: bool) -> Rational {
    let total = cost(inst, i, bundle);
    let picked = bundle.iter().map(|&j| inst.value(i, j)).fold(None::<&Rational>, |acc, v| match acc {
        None => Some(v),
        Some(a) if (largest && v > a) || (!largest && v < a) => Some(v),
        keep => keep,
    });
    match picked {
        Some(v) => total - v,
        None => total,
    }
}

/// Checks the three lift properties for one (instance, ordered allocation)
/// pair and returns a description of the first violation.
pub fn lift_violation(inst: &Instance, ordered_alloc: &Allocation) -> Option<String> {
    let lift = to_ordered(inst);
    let lifted = lift_allocation(&lift, inst, ordered_alloc).unwrap();
    let ordered = &lift.ordered;
    let m = inst.m();
    let chores = inst.flavor() == Flavor::Chores;
    lifted.validate(inst).unwrap();
    for i in 0..inst.n() {
        let x = &lifted.bundles[i];
        let xo = &ordered_alloc.bundles[i];
        if x.len() != xo.len() {
            return Some(format!("agent {i}: bundle sizes {} vs {}", x.len(), xo.len()));
        }
        let dominated = |a: &Rational, b: &Rational| if chores { a <= b } else { a >= b };
        if !dominated(&cost(inst, i, x), &cost(ordered, i, xo)) {
            return Some(format!("agent {i}: own bundle not dominated"));
        }
        for largest in [true, false] {
            let a = after_removal(inst, i, x, largest);
            let b = after_removal(ordered, i, xo, largest);
            if !dominated(&a, &b) {
                return Some(format!("agent {i}: removal of {} not dominated", if largest { "max" } else { "min" }));
            }
        }
        if inst.n() >= 2 {
            let mms = others_mms(inst, i, &complement(m, x));
            let mms_o = others_mms(ordered, i, &complement(m, xo));
            let ok = if chores { mms >= mms_o } else { mms <= mms_o };
            if !ok {
                return Some(format!("agent {i}: others' share {mms} vs ordered {mms_o}"));
            }
        }
        for notion in [FairnessNotion::Mma1, FairnessNotion::Mmax] {
            let f = naive_agent(inst, &lifted, i, notion);
            let fo = naive_agent(ordered, ordered_alloc, i, notion);
            let ord = cmp_naive(&f, &fo);
            let worse = if chores { ord == Ordering::Greater } else { ord == Ordering::Less };
            if worse {
                return Some(format!("agent {i}: lifted {notion} {f:?} worse than ordered {fo:?}"));
            }
        }
    }
    None
}

fn value_of(inst: &Instance, i: usize, item: Option<usize>) -> Rational {
    item.map_or_else(Rational::zero, |e| inst.value(i, e).clone())
}

/// The four phase-one properties of the goods algorithm, on the ordered
/// instance it ran on.
pub fn phase_one_violation(inst: &Instance, trace: &GoodsTrace) -> Option<String> {
    let (n, m) = (inst.n(), inst.m());
    let held = &trace.phase_one;
    let locked = |i: usize| trace.locked.contains(&i);
    let taken = held.iter().flatten().count();
    if taken != n.min(m) || held.iter().flatten().collect::<std::collections::BTreeSet<_>>().len() != taken {
        return Some(format!("phase one holdings {held:?} are not {} distinct singletons", n.min(m)));
    }
    for i in (0..n).filter(|&i| locked(i)) {
        for &e in &trace.unallocated_after_phase_one {
            if !above_phi_times(&value_of(inst, i, held[i]), inst.value(i, e)) {
                return Some(format!("locked agent {i} does not beat phi times item {e}"));
            }
        }
    }
    for i in (0..n).filter(|&i| !locked(i)) {
        for j in (0..n).filter(|&j| j != i && !locked(j)) {
            if above_phi_times(&value_of(inst, i, held[j]), &value_of(inst, i, held[i])) {
                return Some(format!("agent {i} values {j}'s item above phi times its own"));
            }
        }
    }
    if m >= n {
        for i in 0..n {
            for j in (0..n).filter(|&j| trace.labels[i] < trace.labels[j]) {
                let (ai, aj) = (held[i], held[j]);
                if value_of(inst, i, ai) < value_of(inst, i, aj) || value_of(inst, j, ai) < value_of(inst, j, aj) {
                    return Some(format!("labels {} < {} but agents {i}, {j} disagree", trace.labels[i], trace.labels[j]));
                }
            }
        }
    }
    None
}

/// PROPX rearranged: `c(X_i - f) / w_i <= (c(X_-i) + c(f)) / (1 - w_i)` for
/// the cheapest own chore `f`.
pub fn propx_structural(inst: &Instance, alloc: &Allocation) -> bool {
    let m = inst.m();
    (0..inst.n()).all(|i| {
        let own = &alloc.bundles[i];
        if own.is_empty() || inst.n() == 1 {
            return true;
        }
        let cheapest = own.iter().map(|&j| inst.value(i, j)).min().unwrap().clone();
        let rest = cost(inst, i, own) - &cheapest;
        let others = cost(inst, i, &complement(m, own));
        let wi = inst.weight(i);
        let one = Rational::from_integer(1.into());
        rest * (&one - wi) <= (others + cheapest) * wi
    })
}

/// Goods MMAX factor at least `phi - 1` for every agent, from the reference
/// factors.
pub fn goods_mmax_certified(inst: &Instance, alloc: &Allocation) -> Option<String> {
    for i in 0..inst.n() {
        match naive_agent(inst, alloc, i, FairnessNotion::Mmax) {
            None => {}
            Some(f) => {
                if !at_least_phi_minus_one_times(&f, &Rational::from_integer(1.into())) {
                    return Some(format!("agent {i}: MMAX factor {f} below phi - 1"));
                }
            }
        }
    }
    None
}

pub fn order_of(inst: &Instance, notion: FairnessNotion, a: &Allocation, b: &Allocation) -> Ordering {
    cmp_naive(
        &super::naive_overall(inst, &super::naive_factors(inst, a, notion)),
        &super::naive_overall(inst, &super::naive_factors(inst, b, notion)),
    )
}
