//! Brute-force reference computations, written straight from the definitions
//! and sharing no code with the library's checkers or oracle.

#![allow(dead_code)]

pub mod certs;

use std::cmp::Ordering;

use fairdiv::{Allocation, FactorBound, FairnessNotion, Flavor, Instance, Rational};
use num_traits::{One, Zero};

/// A factor where `None` stands for infinity.
pub type Naive = Option<Rational>;

pub fn ratio(num: &Rational, den: &Rational) -> Naive {
    if den.is_zero() {
        if num.is_zero() {
            Some(Rational::one())
        } else {
            None
        }
    } else {
        Some(num / den)
    }
}

pub fn cmp_naive(a: &Naive, b: &Naive) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, _) => Ordering::Greater,
        (_, None) => Ordering::Less,
        (Some(x), Some(y)) => x.cmp(y),
    }
}

fn max_naive(it: impl IntoIterator<Item = Naive>) -> Option<Naive> {
    it.into_iter().max_by(cmp_naive)
}

fn min_naive(it: impl IntoIterator<Item = Naive>) -> Option<Naive> {
    it.into_iter().min_by(cmp_naive)
}

pub fn same(bound: &FactorBound, naive: &Naive) -> bool {
    match naive {
        None => bound.is_infinite(),
        Some(r) => bound.as_exact() == Some(r),
    }
}

fn sum(row: &[Rational], items: &[usize]) -> Rational {
    items.iter().map(|&j| row[j].clone()).sum()
}

fn without(items: &[usize], e: usize) -> Vec<usize> {
    items.iter().copied().filter(|&j| j != e).collect()
}

/// `owner * opt` over every labeled assignment of `items` to `recipients`:
/// min over assignments of max share for chores, max of min share for goods.
pub fn naive_mms(row: &[Rational], items: &[usize], recipients: &[Rational], owner: &Rational, flavor: Flavor) -> Rational {
    let k = recipients.len();
    assert!(k >= 1);
    let total = k.pow(items.len() as u32);
    let mut best: Option<Rational> = None;
    let mut loads = vec![Rational::zero(); k];
    for code in 0..total {
        for l in loads.iter_mut() {
            *l = Rational::zero();
        }
        let mut c = code;
        for &j in items {
            loads[c % k] += &row[j];
            c /= k;
        }
        let shares = loads.iter().zip(recipients).map(|(l, w)| l / w);
        let v = match flavor {
            Flavor::Chores => shares.max().unwrap(),
            Flavor::Goods => shares.min().unwrap(),
        };
        best = Some(match best {
            None => v,
            Some(b) => match flavor {
                Flavor::Chores => b.min(v),
                Flavor::Goods => b.max(v),
            },
        });
    }
    owner * best.unwrap()
}

pub fn others_mms(inst: &Instance, agent: usize, items: &[usize]) -> Rational {
    let recipients: Vec<Rational> = (0..inst.n()).filter(|&j| j != agent).map(|j| inst.weight(j).clone()).collect();
    naive_mms(inst.row(agent), items, &recipients, inst.weight(agent), inst.flavor())
}

pub fn full_mms(inst: &Instance, agent: usize) -> Rational {
    let items: Vec<usize> = (0..inst.m()).collect();
    naive_mms(inst.row(agent), &items, inst.weights(), inst.weight(agent), inst.flavor())
}

/// Per-agent factors straight from the definitions. Every "some item" is a
/// minimum (chores) or maximum (goods) over all choices, every "any item" the
/// opposite; empty own bundles are vacuous for chores' up-to-one notions.
pub fn naive_factors(inst: &Instance, alloc: &Allocation, notion: FairnessNotion) -> Vec<Naive> {
    (0..inst.n()).map(|i| naive_agent(inst, alloc, i, notion)).collect()
}

pub fn naive_agent(inst: &Instance, alloc: &Allocation, i: usize, notion: FairnessNotion) -> Naive {
    use FairnessNotion::*;
    let n = inst.n();
    if n == 1 {
        return Some(Rational::one());
    }
    let row = inst.row(i);
    let wi = inst.weight(i);
    let own = &alloc.bundles[i];
    let others: Vec<usize> = (0..inst.m()).filter(|j| !own.contains(j)).collect();
    let total = sum(row, &(0..inst.m()).collect::<Vec<_>>());
    let rivals: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    let share = |items: &[usize], w: &Rational| sum(row, items) / w;
    match inst.flavor() {
        Flavor::Chores => {
            let one_removed = matches!(notion, Ef1 | Efx | Prop1 | Propx | Mma1 | Mmax);
            if one_removed && own.is_empty() {
                return Some(Rational::one());
            }
            let some = matches!(notion, Ef1 | Prop1 | Mma1);
            // value of own bundle after removing f, against a benchmark
            let pick = |f: &dyn Fn(&[usize]) -> Naive| -> Naive {
                if !one_removed {
                    return f(own);
                }
                let all = own.iter().map(|&e| f(&without(own, e)));
                if some { min_naive(all) } else { max_naive(all) }.unwrap()
            };
            match notion {
                Ef | Ef1 | Efx => max_naive(rivals.iter().map(|&j| {
                    let theirs = share(&alloc.bundles[j], inst.weight(j));
                    pick(&|b: &[usize]| ratio(&share(b, wi), &theirs))
                }))
                .unwrap(),
                Prop | Prop1 | Propx => {
                    let bench = wi * &total;
                    pick(&|b: &[usize]| ratio(&sum(row, b), &bench))
                }
                Mms => ratio(&sum(row, own), &full_mms(inst, i)),
                Mma | Mma1 | Mmax => {
                    let bench = others_mms(inst, i, &others);
                    pick(&|b: &[usize]| ratio(&sum(row, b), &bench))
                }
            }
        }
        Flavor::Goods => {
            let mine = sum(row, own);
            match notion {
                Ef | Ef1 | Efx => min_naive(rivals.iter().map(|&j| {
                    let theirs = &alloc.bundles[j];
                    let mine_share = &mine / wi;
                    let w = inst.weight(j);
                    if notion == Ef || theirs.is_empty() {
                        return ratio(&mine_share, &share(theirs, w));
                    }
                    let all = theirs.iter().map(|&e| ratio(&mine_share, &share(&without(theirs, e), w)));
                    if notion == Ef1 { max_naive(all) } else { min_naive(all) }.unwrap()
                }))
                .unwrap(),
                Prop | Prop1 | Propx => {
                    let bench = wi * &total;
                    if notion == Prop || others.is_empty() {
                        return ratio(&mine, &bench);
                    }
                    let all = others.iter().map(|&e| ratio(&(&mine + &row[e]), &bench));
                    if notion == Prop1 { max_naive(all) } else { min_naive(all) }.unwrap()
                }
                Mms => ratio(&mine, &full_mms(inst, i)),
                Mma | Mma1 | Mmax => {
                    if notion == Mma || others.is_empty() {
                        return ratio(&mine, &others_mms(inst, i, &others));
                    }
                    let all = others
                        .iter()
                        .map(|&e| ratio(&mine, &others_mms(inst, i, &without(&others, e))));
                    if notion == Mma1 { max_naive(all) } else { min_naive(all) }.unwrap()
                }
            }
        }
    }
}

/// Overall factor: worst agent.
pub fn naive_overall(inst: &Instance, factors: &[Naive]) -> Naive {
    match inst.flavor() {
        Flavor::Chores => max_naive(factors.iter().cloned()).unwrap(),
        Flavor::Goods => min_naive(factors.iter().cloned()).unwrap(),
    }
}

/// Every assignment of `m` items to `n` agents, item 0 most significant.
pub fn all_allocations(n: usize, m: usize) -> impl Iterator<Item = Allocation> {
    let total = n.pow(m as u32);
    (0..total).map(move |code| {
        let mut assignment = vec![0; m];
        let mut c = code;
        for slot in assignment.iter_mut().rev() {
            *slot = c % n;
            c /= n;
        }
        Allocation::from_assignment(&assignment, n)
    })
}

pub fn r(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}
