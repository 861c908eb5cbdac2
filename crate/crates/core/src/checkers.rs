//! Exact approximation factors of an allocation under each fairness notion.
//!
//! A per-agent factor is the least `alpha` for which the agent's condition
//! holds, as a raw ratio (it may be below 1). Chores aggregate by the maximum
//! over agents, goods by the minimum.

use std::cmp::Ordering;

use num_traits::Zero;
use serde::Serialize;

use crate::error::Result;
use crate::model::{items_of, Allocation, FairnessNotion, Flavor, Instance, ItemSet};
use crate::numeric::{serde_rational, FactorBound, Rational};
use crate::oracle::Oracle;

/// One agent's factor together with the comparison that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct AgentFactor {
    pub agent: usize,
    pub factor: FactorBound,
    pub factor_display: String,
    pub bundle: Vec<usize>,
    /// Item taken out of (chores: own bundle; goods: a rival's bundle or the
    /// other agents' pool) or added to the comparison.
    pub removed: Option<usize>,
    /// Agent whose bundle is the binding comparison in envy notions.
    pub rival: Option<usize>,
    #[serde(with = "serde_rational")]
    pub value: Rational,
    #[serde(with = "serde_rational")]
    pub benchmark: Rational,
    /// Condition holds trivially (empty bundle or a single agent).
    pub vacuous: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorResult {
    pub notion: FairnessNotion,
    pub flavor: Flavor,
    pub per_agent: Vec<AgentFactor>,
    pub overall: FactorBound,
    pub overall_display: String,
    pub worst_agent: usize,
}

impl FactorResult {
    /// Exact test of `overall <= threshold` (chores) or `>= threshold` (goods).
    pub fn satisfies(&self, threshold: &FactorBound) -> bool {
        self.per_agent
            .iter()
            .all(|a| within(self.flavor, &a.factor, threshold))
    }

    pub fn agent(&self, i: usize) -> &AgentFactor {
        &self.per_agent[i]
    }
}

pub(crate) fn within(flavor: Flavor, factor: &FactorBound, threshold: &FactorBound) -> bool {
    let ord = match (factor, threshold) {
        (FactorBound::Infinite, FactorBound::Infinite) => Ordering::Equal,
        (FactorBound::Infinite, _) => Ordering::Greater,
        (FactorBound::Exact(x), t) => t.cmp_rational(x),
        (f, t) => f.partial_cmp(t).expect("factor values are rational or infinite"),
    };
    match flavor {
        Flavor::Chores => ord != Ordering::Greater,
        Flavor::Goods => ord != Ordering::Less,
    }
}

/// Factor of `allocation` under `notion`, using a fresh default oracle.
pub fn factor(instance: &Instance, allocation: &Allocation, notion: FairnessNotion) -> Result<FactorResult> {
    factor_with(&Oracle::default(), instance, allocation, notion)
}

pub fn satisfies(
    instance: &Instance,
    allocation: &Allocation,
    notion: FairnessNotion,
    threshold: &FactorBound,
) -> Result<bool> {
    Ok(factor(instance, allocation, notion)?.satisfies(threshold))
}

pub fn factor_with(
    oracle: &Oracle,
    instance: &Instance,
    allocation: &Allocation,
    notion: FairnessNotion,
) -> Result<FactorResult> {
    allocation.validate(instance)?;
    let masks = allocation.masks();
    let per_agent = (0..instance.n())
        .map(|i| agent_factor(oracle, instance, &masks, i, notion))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0;
    for (i, a) in per_agent.iter().enumerate().skip(1) {
        let ord = a.factor.partial_cmp(&per_agent[worst].factor).expect("comparable");
        let worse = match instance.flavor() {
            Flavor::Chores => ord == Ordering::Greater,
            Flavor::Goods => ord == Ordering::Less,
        };
        if worse {
            worst = i;
        }
    }
    let overall = per_agent[worst].factor.clone();
    Ok(FactorResult {
        notion,
        flavor: instance.flavor(),
        overall_display: overall.to_decimal(12),
        overall,
        per_agent,
        worst_agent: worst,
    })
}

impl Oracle {
    pub fn factor(&self, instance: &Instance, allocation: &Allocation, notion: FairnessNotion) -> Result<FactorResult> {
        factor_with(self, instance, allocation, notion)
    }

    pub fn satisfies(
        &self,
        instance: &Instance,
        allocation: &Allocation,
        notion: FairnessNotion,
        threshold: &FactorBound,
    ) -> Result<bool> {
        Ok(factor_with(self, instance, allocation, notion)?.satisfies(threshold))
    }
}

/// Most valuable item of `set` for `agent`, smallest index on ties.
pub fn max_item(instance: &Instance, agent: usize, set: ItemSet) -> Option<usize> {
    let row = instance.row(agent);
    items_of(set).fold(None, |best, j| match best {
        Some(b) if row[b] >= row[j] => Some(b),
        _ => Some(j),
    })
}

/// Least valuable item of `set` for `agent`, smallest index on ties.
pub fn min_item(instance: &Instance, agent: usize, set: ItemSet) -> Option<usize> {
    let row = instance.row(agent);
    items_of(set).fold(None, |best, j| match best {
        Some(b) if row[b] <= row[j] => Some(b),
        _ => Some(j),
    })
}

fn drop_item(set: ItemSet, item: Option<usize>) -> ItemSet {
    item.map_or(set, |j| set & !(1u64 << j))
}

struct Draft {
    factor: FactorBound,
    removed: Option<usize>,
    rival: Option<usize>,
    value: Rational,
    benchmark: Rational,
    vacuous: bool,
}

impl Draft {
    fn ratio(value: Rational, benchmark: Rational, removed: Option<usize>) -> Self {
        Draft {
            factor: FactorBound::ratio(&value, &benchmark),
            removed,
            rival: None,
            value,
            benchmark,
            vacuous: false,
        }
    }

    fn vacuous() -> Self {
        Draft {
            factor: FactorBound::one(),
            removed: None,
            rival: None,
            value: Rational::zero(),
            benchmark: Rational::zero(),
            vacuous: true,
        }
    }
}

/// Factor of one agent. For own-bundle notions only `masks[agent]` is read.
pub(crate) fn agent_factor(
    oracle: &Oracle,
    instance: &Instance,
    masks: &[ItemSet],
    agent: usize,
    notion: FairnessNotion,
) -> Result<AgentFactor> {
    let draft = if instance.n() == 1 {
        Draft::vacuous()
    } else {
        match instance.flavor() {
            Flavor::Chores => chores_factor(oracle, instance, masks, agent, notion)?,
            Flavor::Goods => goods_factor(oracle, instance, masks, agent, notion)?,
        }
    };
    Ok(AgentFactor {
        agent,
        factor_display: draft.factor.to_decimal(12),
        factor: draft.factor,
        bundle: items_of(masks[agent]).collect(),
        removed: draft.removed,
        rival: draft.rival,
        value: draft.value,
        benchmark: draft.benchmark,
        vacuous: draft.vacuous,
    })
}

/// Keeps the worst per-rival ratio (largest for chores, smallest for goods),
/// first rival on ties.
fn envy(
    instance: &Instance,
    masks: &[ItemSet],
    agent: usize,
    own: Rational,
    removed: Option<usize>,
    rival_set: impl Fn(ItemSet) -> (ItemSet, Option<usize>),
) -> Draft {
    let flavor = instance.flavor();
    let own_share = &own / instance.weight(agent);
    let mut best: Option<Draft> = None;
    for j in (0..instance.n()).filter(|&j| j != agent) {
        let (set, rival_removed) = rival_set(masks[j]);
        let share = instance.value_of(agent, set) / instance.weight(j);
        let mut d = Draft::ratio(own_share.clone(), share, removed.or(rival_removed));
        d.rival = Some(j);
        let replace = match &best {
            None => true,
            Some(b) => {
                let ord = d.factor.partial_cmp(&b.factor).expect("comparable");
                match flavor {
                    Flavor::Chores => ord == Ordering::Greater,
                    Flavor::Goods => ord == Ordering::Less,
                }
            }
        };
        if replace {
            best = Some(d);
        }
    }
    best.expect("at least two agents")
}

fn chores_factor(
    oracle: &Oracle,
    instance: &Instance,
    masks: &[ItemSet],
    agent: usize,
    notion: FairnessNotion,
) -> Result<Draft> {
    use FairnessNotion::*;
    let own_set = masks[agent];
    let others = instance.full_set() & !own_set;
    let removed = match notion {
        Ef1 | Prop1 | Mma1 => max_item(instance, agent, own_set),
        Efx | Propx | Mmax => min_item(instance, agent, own_set),
        Ef | Prop | Mms | Mma => None,
    };
    if removed.is_none() && matches!(notion, Ef1 | Efx | Prop1 | Propx | Mma1 | Mmax) {
        return Ok(Draft::vacuous());
    }
    let value = instance.value_of(agent, drop_item(own_set, removed));
    Ok(match notion {
        Ef | Ef1 | Efx => envy(instance, masks, agent, value, removed, |s| (s, None)),
        Prop | Prop1 | Propx => {
            let bench = instance.weight(agent) * instance.total_value(agent);
            Draft::ratio(value, bench, removed)
        }
        Mms => Draft::ratio(value, oracle.mms_full(instance, agent)?, None),
        Mma | Mma1 | Mmax => Draft::ratio(value, oracle.mms_others(instance, agent, others)?, removed),
    })
}

fn goods_factor(
    oracle: &Oracle,
    instance: &Instance,
    masks: &[ItemSet],
    agent: usize,
    notion: FairnessNotion,
) -> Result<Draft> {
    use FairnessNotion::*;
    let own_set = masks[agent];
    let others = instance.full_set() & !own_set;
    let own = instance.value_of(agent, own_set);
    Ok(match notion {
        Ef => envy(instance, masks, agent, own, None, |s| (s, None)),
        Ef1 => envy(instance, masks, agent, own, None, |s| {
            let e = max_item(instance, agent, s);
            (drop_item(s, e), e)
        }),
        Efx => envy(instance, masks, agent, own, None, |s| {
            let e = min_item(instance, agent, s);
            (drop_item(s, e), e)
        }),
        Prop | Prop1 | Propx => {
            let added = match notion {
                Prop1 => max_item(instance, agent, others),
                Propx => min_item(instance, agent, others),
                _ => None,
            };
            let value = own + added.map_or_else(Rational::zero, |e| instance.value(agent, e).clone());
            let bench = instance.weight(agent) * instance.total_value(agent);
            Draft::ratio(value, bench, added)
        }
        Mms => Draft::ratio(own, oracle.mms_full(instance, agent)?, None),
        Mma | Mma1 | Mmax => {
            let removed = match notion {
                Mma1 => max_item(instance, agent, others),
                Mmax => min_item(instance, agent, others),
                _ => None,
            };
            let bench = oracle.mms_others(instance, agent, drop_item(others, removed))?;
            Draft::ratio(own, bench, removed)
        }
    })
}
