//! Exact weighted maximin shares and whole-space allocation sweeps.

use std::collections::HashMap;
use std::ops::{Add, ControlFlow, Mul};
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering as AtomicOrdering};

use dashmap::DashMap;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::checkers::{self, AgentFactor};
use crate::error::{Error, Result};
use crate::model::{items_of, mask_of, Allocation, FairnessNotion, Flavor, Instance, ItemSet};
use crate::numeric::{FactorBound, Rational};

pub const DEFAULT_BUDGET: u64 = 50_000_000;
pub const BUDGET_ENV: &str = "FAIRDIV_BUDGET";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    /// Largest item set (counting non-zero items) an MMS query may range over.
    pub max_items: usize,
    pub max_recipients: usize,
    /// Allocation evaluations allowed in a whole-space sweep.
    pub budget: u64,
    /// Search-tree nodes allowed in a single MMS query.
    pub mms_nodes: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        let budget = std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or(DEFAULT_BUDGET);
        OracleLimits {
            max_items: 14,
            max_recipients: 5,
            budget,
            mms_nodes: 200_000_000,
        }
    }
}

/// How the partition search treats recipients of equal weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Every labeled assignment is a candidate; only bound pruning.
    Labeled,
    /// Additionally skips a slot when an earlier slot has the same weight and
    /// the same load, since the two subtrees are mirror images.
    Canonical,
}

/// One maximin-share question: `owner_weight * opt over partitions of items
/// among recipients`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MmsQuery {
    pub agent: usize,
    pub items: Vec<usize>,
    pub recipients: Vec<Rational>,
    pub owner_weight: Rational,
}

type CacheKey = (u32, u32, Flavor, ItemSet);

/// Memo of unscaled MMS values keyed by row content, recipient multiset,
/// flavor and item mask.
#[derive(Default)]
pub struct MmsCache {
    rows: DashMap<Vec<Rational>, u32>,
    recipients: DashMap<Vec<Rational>, u32>,
    next_id: AtomicU32,
    values: DashMap<CacheKey, Rational>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl MmsCache {
    fn intern(&self, map: &DashMap<Vec<Rational>, u32>, key: &[Rational]) -> u32 {
        if let Some(id) = map.get(key) {
            return *id;
        }
        *map.entry(key.to_vec())
            .or_insert_with(|| self.next_id.fetch_add(1, AtomicOrdering::Relaxed))
    }

    pub fn clear(&self) {
        self.values.clear();
        self.hits.store(0, AtomicOrdering::Relaxed);
        self.misses.store(0, AtomicOrdering::Relaxed);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(AtomicOrdering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(AtomicOrdering::Relaxed)
    }
}

/// Shared context for MMS queries and sweeps.
pub struct Oracle {
    pub limits: OracleLimits,
    pub strategy: Strategy,
    /// Worker threads for whole-space sweeps; 1 runs on the calling thread.
    pub jobs: usize,
    pub use_cache: bool,
    cache: MmsCache,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle::new(OracleLimits::default())
    }
}

impl Oracle {
    pub fn new(limits: OracleLimits) -> Self {
        Oracle {
            limits,
            strategy: Strategy::Canonical,
            jobs: 1,
            use_cache: true,
            cache: MmsCache::default(),
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    pub fn without_cache(mut self) -> Self {
        self.use_cache = false;
        self
    }

    pub fn cache(&self) -> &MmsCache {
        &self.cache
    }

    pub fn mms(&self, instance: &Instance, query: &MmsQuery) -> Result<Rational> {
        if query.agent >= instance.n() {
            return Err(Error::OutOfRange {
                what: "agent",
                index: query.agent,
                limit: instance.n(),
            });
        }
        if let Some(&j) = query.items.iter().find(|&&j| j >= instance.m()) {
            return Err(Error::OutOfRange {
                what: "item",
                index: j,
                limit: instance.m(),
            });
        }
        self.mms_set(
            instance,
            query.agent,
            mask_of(&query.items),
            &query.recipients,
            &query.owner_weight,
        )
    }

    /// `owner * MMS` of `agent`'s valuation over `set` split among `recipients`.
    pub fn mms_set(
        &self,
        instance: &Instance,
        agent: usize,
        set: ItemSet,
        recipients: &[Rational],
        owner: &Rational,
    ) -> Result<Rational> {
        let row = instance.row(agent);
        let flavor = instance.flavor();
        if !self.use_cache {
            let values: Vec<Rational> = items_of(set).map(|j| row[j].clone()).collect();
            return Ok(owner * mms_of_values(&values, recipients, flavor, self.strategy, &self.limits)?);
        }
        let mut sorted = recipients.to_vec();
        sorted.sort();
        let key = (
            self.cache.intern(&self.cache.rows, row),
            self.cache.intern(&self.cache.recipients, &sorted),
            flavor,
            set,
        );
        if let Some(v) = self.cache.values.get(&key) {
            self.cache.hits.fetch_add(1, AtomicOrdering::Relaxed);
            return Ok(owner * &*v);
        }
        self.cache.misses.fetch_add(1, AtomicOrdering::Relaxed);
        let values: Vec<Rational> = items_of(set).map(|j| row[j].clone()).collect();
        let v = mms_of_values(&values, recipients, flavor, self.strategy, &self.limits)?;
        let stored = self.cache.values.entry(key).or_insert(v).clone();
        Ok(owner * stored)
    }

    /// `MMS_i(M, n)`.
    pub fn mms_full(&self, instance: &Instance, agent: usize) -> Result<Rational> {
        self.mms_set(
            instance,
            agent,
            instance.full_set(),
            instance.weights(),
            instance.weight(agent),
        )
    }

    /// `MMS_i(S, n - 1)` over the other agents' weights.
    pub fn mms_others(&self, instance: &Instance, agent: usize, set: ItemSet) -> Result<Rational> {
        let others: Vec<Rational> = (0..instance.n())
            .filter(|&j| j != agent)
            .map(|j| instance.weight(j).clone())
            .collect();
        self.mms_set(instance, agent, set, &others, instance.weight(agent))
    }
}

/// Optimum over labeled partitions of `values` among `recipients`, without
/// the owner's weight: min-max of `value / weight` for chores, max-min for
/// goods.
pub fn mms_of_values(
    values: &[Rational],
    recipients: &[Rational],
    flavor: Flavor,
    strategy: Strategy,
    limits: &OracleLimits,
) -> Result<Rational> {
    if recipients.is_empty() {
        return Err(Error::Precondition("maximin share needs at least one recipient".into()));
    }
    if recipients.len() > limits.max_recipients {
        return Err(Error::SizeLimit(format!(
            "{} recipients exceeds the limit of {}",
            recipients.len(),
            limits.max_recipients
        )));
    }
    if recipients.iter().any(|w| *w <= Rational::zero()) {
        return Err(Error::Precondition("recipient weights must be positive".into()));
    }
    let nonzero: Vec<&Rational> = values.iter().filter(|v| !v.is_zero()).collect();
    if nonzero.len() > limits.max_items {
        return Err(Error::SizeLimit(format!(
            "{} items exceeds the limit of {}",
            nonzero.len(),
            limits.max_items
        )));
    }
    if nonzero.is_empty() {
        return Ok(Rational::zero());
    }

    let d = nonzero
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let w = recipients
        .iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let to_int = |r: &Rational, scale: &BigInt| -> BigUint {
        (r * Rational::from_integer(scale.clone()))
            .to_integer()
            .to_biguint()
            .expect("non-negative")
    };
    let mut costs: Vec<BigUint> = nonzero.iter().map(|v| to_int(v, &d)).collect();
    costs.sort_unstable_by(|x, y| y.cmp(x));
    let slots: Vec<BigUint> = recipients.iter().map(|r| to_int(r, &w)).collect();

    let total: BigUint = costs.iter().sum();
    let max_slot = slots.iter().max().cloned().unwrap_or_default();
    let fits_u128 = total.bits() + max_slot.bits() + 1 < 127;
    let (num, den) = if fits_u128 {
        let c: Vec<u128> = costs.iter().map(|x| x.to_u128().expect("fits")).collect();
        let a: Vec<u128> = slots.iter().map(|x| x.to_u128().expect("fits")).collect();
        let (n, d) = optimize(&c, &a, flavor, strategy, limits.mms_nodes)?;
        (BigUint::from(n), BigUint::from(d))
    } else {
        optimize(&costs, &slots, flavor, strategy, limits.mms_nodes)?
    };
    // value = (num / D) / (den / W)
    let numer = BigInt::from(num) * &w;
    let denom = BigInt::from(den) * &d;
    Ok(Rational::new(numer, denom))
}

trait Scalar: Clone + Ord + Zero + Add<Output = Self> + Mul<Output = Self> {}
impl<T: Clone + Ord + Zero + Add<Output = T> + Mul<Output = T>> Scalar for T {}

/// `x1 / y1 < x2 / y2` for positive denominators.
fn frac_lt<T: Scalar>(x1: &T, y1: &T, x2: &T, y2: &T) -> bool {
    x1.clone() * y2.clone() < x2.clone() * y1.clone()
}

struct Search<'a, T> {
    costs: &'a [T],
    slots: &'a [T],
    suffix: Vec<T>,
    canonical: bool,
    loads: Vec<T>,
    best: (T, T),
    target: (T, T),
    done: bool,
    nodes: u64,
    node_budget: u64,
}

impl<T: Scalar> Search<'_, T> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.node_budget {
            return Err(Error::SizeLimit(format!(
                "maximin share search exceeded {} nodes",
                self.node_budget
            )));
        }
        Ok(())
    }

    fn mirrored(&self, j: usize) -> bool {
        self.canonical
            && (0..j).any(|q| self.slots[q] == self.slots[j] && self.loads[q] == self.loads[j])
    }

    fn min_max(&mut self, t: usize, cur: (T, T)) -> Result<()> {
        if self.done {
            return Ok(());
        }
        self.tick()?;
        if t == self.costs.len() {
            if frac_lt(&cur.0, &cur.1, &self.best.0, &self.best.1) {
                self.best = cur;
                if !frac_lt(&self.target.0, &self.target.1, &self.best.0, &self.best.1) {
                    self.done = true;
                }
            }
            return Ok(());
        }
        for j in 0..self.slots.len() {
            if self.mirrored(j) {
                continue;
            }
            let load = self.loads[j].clone() + self.costs[t].clone();
            if !frac_lt(&load, &self.slots[j], &self.best.0, &self.best.1) {
                continue;
            }
            let next = if frac_lt(&cur.0, &cur.1, &load, &self.slots[j]) {
                (load.clone(), self.slots[j].clone())
            } else {
                cur.clone()
            };
            let old = std::mem::replace(&mut self.loads[j], load);
            self.min_max(t + 1, next)?;
            self.loads[j] = old;
            if self.done {
                break;
            }
        }
        Ok(())
    }

    fn max_min(&mut self, t: usize) -> Result<()> {
        if self.done {
            return Ok(());
        }
        self.tick()?;
        if t == self.costs.len() {
            let (mut vn, mut vd) = (self.loads[0].clone(), self.slots[0].clone());
            for j in 1..self.slots.len() {
                if frac_lt(&self.loads[j], &self.slots[j], &vn, &vd) {
                    vn = self.loads[j].clone();
                    vd = self.slots[j].clone();
                }
            }
            if frac_lt(&self.best.0, &self.best.1, &vn, &vd) {
                self.best = (vn, vd);
                if !frac_lt(&self.best.0, &self.best.1, &self.target.0, &self.target.1) {
                    self.done = true;
                }
            }
            return Ok(());
        }
        let rest = &self.suffix[t];
        for j in 0..self.slots.len() {
            let bound = self.loads[j].clone() + rest.clone();
            if !frac_lt(&self.best.0, &self.best.1, &bound, &self.slots[j]) {
                return Ok(());
            }
        }
        for j in 0..self.slots.len() {
            if self.mirrored(j) {
                continue;
            }
            let load = self.loads[j].clone() + self.costs[t].clone();
            let old = std::mem::replace(&mut self.loads[j], load);
            self.max_min(t + 1)?;
            self.loads[j] = old;
            if self.done {
                break;
            }
        }
        Ok(())
    }
}

/// Branch and bound over item-to-slot assignments; `costs` sorted descending
/// and all positive. Returns the optimum as the fraction `load / slot`.
fn optimize<T: Scalar>(
    costs: &[T],
    slots: &[T],
    flavor: Flavor,
    strategy: Strategy,
    node_budget: u64,
) -> Result<(T, T)> {
    let k = slots.len();
    let mut suffix = vec![T::zero(); costs.len() + 1];
    for t in (0..costs.len()).rev() {
        suffix[t] = suffix[t + 1].clone() + costs[t].clone();
    }
    let total = suffix[0].clone();
    let slot_sum = slots.iter().fold(T::zero(), |acc, a| acc + a.clone());

    // greedy start
    let mut loads = vec![T::zero(); k];
    for c in costs {
        let pick = match flavor {
            Flavor::Chores => (0..k)
                .min_by(|&p, &q| {
                    let lp = loads[p].clone() + c.clone();
                    let lq = loads[q].clone() + c.clone();
                    (lp * slots[q].clone()).cmp(&(lq * slots[p].clone()))
                })
                .expect("k >= 1"),
            Flavor::Goods => (0..k)
                .min_by(|&p, &q| {
                    (loads[p].clone() * slots[q].clone()).cmp(&(loads[q].clone() * slots[p].clone()))
                })
                .expect("k >= 1"),
        };
        loads[pick] = loads[pick].clone() + c.clone();
    }
    let pick_ratio = |better: &dyn Fn(&T, &T, &T, &T) -> bool, loads: &[T]| {
        let mut r = (loads[0].clone(), slots[0].clone());
        for j in 1..k {
            if better(&loads[j], &slots[j], &r.0, &r.1) {
                r = (loads[j].clone(), slots[j].clone());
            }
        }
        r
    };

    let (best, target) = match flavor {
        Flavor::Chores => {
            let greedy = pick_ratio(&|a, b, c, d| frac_lt(c, d, a, b), &loads);
            // lower bound: the average load, and the largest item on the heaviest slot
            let max_slot = slots.iter().max().expect("k >= 1").clone();
            let mut target = (total, slot_sum);
            if frac_lt(&target.0, &target.1, &costs[0], &max_slot) {
                target = (costs[0].clone(), max_slot);
            }
            (greedy, target)
        }
        Flavor::Goods => (pick_ratio(&|a, b, c, d| frac_lt(a, b, c, d), &loads), (total, slot_sum)),
    };
    let done = match flavor {
        Flavor::Chores => !frac_lt(&target.0, &target.1, &best.0, &best.1),
        Flavor::Goods => !frac_lt(&best.0, &best.1, &target.0, &target.1),
    };
    let mut search = Search {
        costs,
        slots,
        suffix,
        canonical: strategy == Strategy::Canonical,
        loads: vec![T::zero(); k],
        best,
        target,
        done,
        nodes: 0,
        node_budget,
    };
    match flavor {
        Flavor::Chores => search.min_max(0, (T::zero(), slots[0].clone()))?,
        Flavor::Goods => search.max_min(0)?,
    }
    Ok(search.best)
}

/// Best allocation found by a whole-space sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    pub allocation: Allocation,
    pub factor: FactorBound,
    pub evaluated: u64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Nonexistence {
    NoAllocationSatisfies { evaluated: u64 },
    Witness { allocation: Allocation, factor: FactorBound },
}

/// Per-agent factor lookups for one sweep. Notions that only depend on the
/// agent's own bundle are memoized by that bundle's mask.
struct Evaluator<'a> {
    oracle: &'a Oracle,
    instance: &'a Instance,
    notion: FairnessNotion,
    memo: Vec<HashMap<ItemSet, FactorBound>>,
}

impl<'a> Evaluator<'a> {
    fn new(oracle: &'a Oracle, instance: &'a Instance, notion: FairnessNotion) -> Self {
        Evaluator {
            oracle,
            instance,
            notion,
            memo: vec![HashMap::new(); instance.n()],
        }
    }

    fn agent(&mut self, agent: usize, masks: &[ItemSet]) -> Result<FactorBound> {
        if !self.notion.own_bundle_determined() {
            return Ok(
                checkers::agent_factor(self.oracle, self.instance, masks, agent, self.notion)?.factor,
            );
        }
        if let Some(f) = self.memo[agent].get(&masks[agent]) {
            return Ok(f.clone());
        }
        let f: AgentFactor = checkers::agent_factor(self.oracle, self.instance, masks, agent, self.notion)?;
        self.memo[agent].insert(masks[agent], f.factor.clone());
        Ok(f.factor)
    }

    fn overall(&mut self, masks: &[ItemSet]) -> Result<FactorBound> {
        let mut worst = self.agent(0, masks)?;
        for i in 1..self.instance.n() {
            let f = self.agent(i, masks)?;
            if worse(self.instance.flavor(), &f, &worst) {
                worst = f;
            }
        }
        Ok(worst)
    }

    fn satisfied(&mut self, masks: &[ItemSet]) -> Result<bool> {
        let one = FactorBound::one();
        for i in 0..self.instance.n() {
            let f = self.agent(i, masks)?;
            if worse(self.instance.flavor(), &f, &one) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `a` is strictly worse than `b`: larger for chores, smaller for goods.
fn worse(flavor: Flavor, a: &FactorBound, b: &FactorBound) -> bool {
    let ord = a.partial_cmp(b).expect("computed factors are rational or infinite");
    match flavor {
        Flavor::Chores => ord == std::cmp::Ordering::Greater,
        Flavor::Goods => ord == std::cmp::Ordering::Less,
    }
}

/// Walks every assignment whose leading digits equal `prefix`, in
/// lexicographic order with item 0 most significant.
fn sweep_chunk(
    n: usize,
    m: usize,
    prefix: &[usize],
    mut visit: impl FnMut(&[usize], &[ItemSet]) -> Result<ControlFlow<()>>,
) -> Result<()> {
    let mut digits = vec![0usize; m];
    digits[..prefix.len()].copy_from_slice(prefix);
    let mut masks = vec![0u64; n];
    for (item, &agent) in digits.iter().enumerate() {
        masks[agent] |= 1 << item;
    }
    loop {
        if visit(&digits, &masks)?.is_break() {
            return Ok(());
        }
        let mut t = m;
        loop {
            if t == prefix.len() {
                return Ok(());
            }
            t -= 1;
            let bit = 1u64 << t;
            masks[digits[t]] &= !bit;
            if digits[t] + 1 < n {
                digits[t] += 1;
                masks[digits[t]] |= bit;
                break;
            }
            digits[t] = 0;
            masks[0] |= bit;
        }
    }
}

impl Oracle {
    fn check_budget(&self, instance: &Instance) -> Result<u64> {
        let total = (instance.n() as u64)
            .checked_pow(instance.m() as u32)
            .filter(|&t| t <= self.limits.budget)
            .ok_or_else(|| {
                Error::SizeLimit(format!(
                    "{}^{} allocations exceeds the budget of {} (set {BUDGET_ENV} to raise it)",
                    instance.n(),
                    instance.m(),
                    self.limits.budget
                ))
            })?;
        Ok(total)
    }

    /// Leading digits fixed per parallel chunk; one chunk when sequential.
    fn chunks(&self, n: usize, m: usize) -> Vec<Vec<usize>> {
        let mut depth = 0;
        if self.jobs > 1 {
            while depth < m && n.pow(depth as u32) < 8 * self.jobs {
                depth += 1;
            }
        }
        let mut out = vec![Vec::new()];
        for _ in 0..depth {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..n).map(move |d| {
                        let mut q = p.clone();
                        q.push(d);
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn run_parallel<R: Send>(&self, work: impl FnOnce() -> R + Send) -> Result<R> {
        if self.jobs <= 1 {
            return Ok(work());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(work))
    }

    /// Enumerates all `n^m` allocations and returns the first one (in
    /// lexicographic assignment order) with the best overall factor.
    pub fn best_factor_search(&self, instance: &Instance, notion: FairnessNotion) -> Result<SearchOutcome> {
        let total = self.check_budget(instance)?;
        let (n, m) = (instance.n(), instance.m());
        let flavor = instance.flavor();
        let chunks = self.chunks(n, m);
        let scan = |prefix: &Vec<usize>| -> Result<(Vec<usize>, FactorBound)> {
            let mut eval = Evaluator::new(self, instance, notion);
            let mut best: Option<(Vec<usize>, FactorBound)> = None;
            sweep_chunk(n, m, prefix, |digits, masks| {
                let f = eval.overall(masks)?;
                if best.as_ref().is_none_or(|(_, b)| worse(flavor, b, &f)) {
                    best = Some((digits.to_vec(), f));
                }
                Ok(ControlFlow::Continue(()))
            })?;
            Ok(best.expect("every chunk holds at least one allocation"))
        };
        let results: Vec<Result<(Vec<usize>, FactorBound)>> = if chunks.len() == 1 {
            vec![scan(&chunks[0])]
        } else {
            self.run_parallel(|| chunks.par_iter().map(scan).collect())?
        };
        let mut best: Option<(Vec<usize>, FactorBound)> = None;
        for r in results {
            let (digits, f) = r?;
            if best.as_ref().is_none_or(|(_, b)| worse(flavor, b, &f)) {
                best = Some((digits, f));
            }
        }
        let (digits, factor) = best.expect("at least one chunk");
        Ok(SearchOutcome {
            allocation: Allocation::from_assignment(&digits, n),
            factor,
            evaluated: total,
        })
    }

    /// Exhaustively looks for an allocation meeting `notion` at factor 1.
    pub fn verify_nonexistence(&self, instance: &Instance, notion: FairnessNotion) -> Result<Nonexistence> {
        let total = self.check_budget(instance)?;
        let (n, m) = (instance.n(), instance.m());
        let chunks = self.chunks(n, m);
        let scan = |prefix: &Vec<usize>| -> Result<Option<Vec<usize>>> {
            let mut eval = Evaluator::new(self, instance, notion);
            let mut found = None;
            sweep_chunk(n, m, prefix, |digits, masks| {
                if eval.satisfied(masks)? {
                    found = Some(digits.to_vec());
                    return Ok(ControlFlow::Break(()));
                }
                Ok(ControlFlow::Continue(()))
            })?;
            Ok(found)
        };
        let hit = if chunks.len() == 1 {
            scan(&chunks[0])?
        } else {
            let first = self.run_parallel(|| {
                chunks.par_iter().map(scan).find_map_first(|r| match r {
                    Ok(None) => None,
                    other => Some(other),
                })
            })?;
            match first {
                Some(r) => r?,
                None => None,
            }
        };
        match hit {
            None => Ok(Nonexistence::NoAllocationSatisfies { evaluated: total }),
            Some(digits) => {
                let allocation = Allocation::from_assignment(&digits, n);
                let factor = checkers::factor_with(self, instance, &allocation, notion)?.overall;
                Ok(Nonexistence::Witness { allocation, factor })
            }
        }
    }
}
