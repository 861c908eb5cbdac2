//! Instances, allocations, fairness notions and their JSON forms.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{format_rational, parse_rational, Rational};

/// Bundles are stored as bitmasks internally, so instances are capped at 64 items.
pub const MAX_ITEMS: usize = 64;

/// Bitmask over item indices.
pub type ItemSet = u64;

pub fn mask_of(items: &[usize]) -> ItemSet {
    items.iter().fold(0, |m, &i| m | (1u64 << i))
}

pub fn items_of(mask: ItemSet) -> impl Iterator<Item = usize> {
    let mut rest = mask;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        }
    })
}

pub fn full_mask(m: usize) -> ItemSet {
    if m == 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Chores,
    Goods,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Chores => "chores",
            Flavor::Goods => "goods",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FairnessNotion {
    Ef,
    Ef1,
    Efx,
    Prop,
    Prop1,
    Propx,
    Mms,
    Mma,
    Mma1,
    Mmax,
}

impl FairnessNotion {
    pub const ALL: [FairnessNotion; 10] = [
        FairnessNotion::Ef,
        FairnessNotion::Ef1,
        FairnessNotion::Efx,
        FairnessNotion::Prop,
        FairnessNotion::Prop1,
        FairnessNotion::Propx,
        FairnessNotion::Mms,
        FairnessNotion::Mma,
        FairnessNotion::Mma1,
        FairnessNotion::Mmax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FairnessNotion::Ef => "ef",
            FairnessNotion::Ef1 => "ef1",
            FairnessNotion::Efx => "efx",
            FairnessNotion::Prop => "prop",
            FairnessNotion::Prop1 => "prop1",
            FairnessNotion::Propx => "propx",
            FairnessNotion::Mms => "mms",
            FairnessNotion::Mma => "mma",
            FairnessNotion::Mma1 => "mma1",
            FairnessNotion::Mmax => "mmax",
        }
    }

    /// True when an agent's verdict depends only on its own bundle (the rest
    /// of the items are then the complement).
    pub fn own_bundle_determined(self) -> bool {
        !matches!(
            self,
            FairnessNotion::Ef | FairnessNotion::Ef1 | FairnessNotion::Efx
        )
    }

    pub fn uses_mms(self) -> bool {
        matches!(
            self,
            FairnessNotion::Mms | FairnessNotion::Mma | FairnessNotion::Mma1 | FairnessNotion::Mmax
        )
    }
}

impl fmt::Display for FairnessNotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FairnessNotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        FairnessNotion::ALL
            .into_iter()
            .find(|n| n.name() == lower)
            .ok_or_else(|| Error::Schema(format!("unknown fairness notion {s:?}")))
    }
}

/// Agents with weights and additive valuations over positional items.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    flavor: Flavor,
    weights: Vec<Rational>,
    values: Vec<Vec<Rational>>,
    item_labels: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    flavor: Flavor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    items: Option<Vec<String>>,
    agents: Vec<AgentDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    weight: String,
    values: Vec<String>,
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidInstance {
        field: field.into(),
        reason: reason.into(),
    }
}

impl Instance {
    pub fn new(flavor: Flavor, weights: Vec<Rational>, values: Vec<Vec<Rational>>) -> Result<Self> {
        Self::with_labels(flavor, weights, values, None)
    }

    pub fn with_labels(
        flavor: Flavor,
        weights: Vec<Rational>,
        values: Vec<Vec<Rational>>,
        item_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("agents", "at least one agent is required"));
        }
        if weights.len() != values.len() {
            return Err(invalid(
                "agents",
                format!("{} weights but {} valuation rows", weights.len(), values.len()),
            ));
        }
        let m = values[0].len();
        if m > MAX_ITEMS {
            return Err(invalid("items", format!("{m} items exceeds the limit of {MAX_ITEMS}")));
        }
        for (i, w) in weights.iter().enumerate() {
            if !w.is_positive() {
                return Err(invalid(format!("agents[{i}].weight"), "weight must be positive"));
            }
        }
        let total: Rational = weights.iter().sum();
        if !total.is_one() {
            return Err(invalid(
                "agents[*].weight",
                format!("weights sum to {}, expected exactly 1", format_rational(&total)),
            ));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != m {
                return Err(invalid(
                    format!("agents[{i}].values"),
                    format!("expected {m} entries, found {}", row.len()),
                ));
            }
            if let Some(j) = row.iter().position(|v| v.is_negative()) {
                return Err(invalid(format!("agents[{i}].values[{j}]"), "value must be non-negative"));
            }
        }
        if let Some(labels) = &item_labels {
            if labels.len() != m {
                return Err(invalid(
                    "items",
                    format!("{} labels for {m} items", labels.len()),
                ));
            }
        }
        Ok(Instance {
            flavor,
            weights,
            values,
            item_labels,
        })
    }

    /// Parses and validates the JSON instance document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        let mut weights = Vec::with_capacity(doc.agents.len());
        let mut values = Vec::with_capacity(doc.agents.len());
        for (i, agent) in doc.agents.iter().enumerate() {
            let w = parse_rational(&agent.weight)
                .map_err(|e| invalid(format!("agents[{i}].weight"), e.to_string()))?;
            weights.push(w);
            let row = agent
                .values
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    parse_rational(v)
                        .map_err(|e| invalid(format!("agents[{i}].values[{j}]"), e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        Instance::with_labels(doc.flavor, weights, values, doc.items)
    }

    pub fn to_json(&self) -> String {
        let doc = InstanceDoc {
            flavor: self.flavor,
            items: self.item_labels.clone(),
            agents: self
                .weights
                .iter()
                .zip(&self.values)
                .map(|(w, row)| AgentDoc {
                    weight: format_rational(w),
                    values: row.iter().map(format_rational).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("instance serializes")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::from_str(&self.to_json()).expect("round trip")
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn m(&self) -> usize {
        self.values[0].len()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, agent: usize) -> &Rational {
        &self.weights[agent]
    }

    pub fn row(&self, agent: usize) -> &[Rational] {
        &self.values[agent]
    }

    pub fn value(&self, agent: usize, item: usize) -> &Rational {
        &self.values[agent][item]
    }

    pub fn item_labels(&self) -> Option<&[String]> {
        self.item_labels.as_deref()
    }

    pub fn full_set(&self) -> ItemSet {
        full_mask(self.m())
    }

    pub fn equal_weights(&self) -> bool {
        self.weights.iter().all(|w| *w == self.weights[0])
    }

    /// All rows non-increasing in item index.
    pub fn is_ordered(&self) -> bool {
        self.values
            .iter()
            .all(|row| row.windows(2).all(|p| p[0] >= p[1]))
    }

    /// Exact additive value of `items` for `agent`.
    pub fn bundle_value(&self, agent: usize, items: &[usize]) -> Result<Rational> {
        if agent >= self.n() {
            return Err(Error::OutOfRange {
                what: "agent",
                index: agent,
                limit: self.n(),
            });
        }
        let mut total = Rational::zero();
        for &j in items {
            if j >= self.m() {
                return Err(Error::OutOfRange {
                    what: "item",
                    index: j,
                    limit: self.m(),
                });
            }
            total += &self.values[agent][j];
        }
        Ok(total)
    }

    /// Value of a bitmask bundle; indices are assumed in range.
    pub fn value_of(&self, agent: usize, set: ItemSet) -> Rational {
        let row = &self.values[agent];
        items_of(set).fold(Rational::zero(), |acc, j| acc + &row[j])
    }

    pub fn total_value(&self, agent: usize) -> Rational {
        self.values[agent].iter().sum()
    }

    /// Scales every non-zero row to sum to exactly 1. Zero rows stay zero.
    pub fn normalize(&self) -> Instance {
        let values = self
            .values
            .iter()
            .map(|row| {
                let total: Rational = row.iter().sum();
                if total.is_zero() {
                    row.clone()
                } else {
                    row.iter().map(|v| v / &total).collect()
                }
            })
            .collect();
        Instance {
            flavor: self.flavor,
            weights: self.weights.clone(),
            values,
            item_labels: self.item_labels.clone(),
        }
    }

    /// Same instance with one agent's row multiplied by `factor > 0`.
    pub fn scale_row(&self, agent: usize, factor: &Rational) -> Instance {
        let mut out = self.clone();
        for v in &mut out.values[agent] {
            *v *= factor;
        }
        out
    }

    pub(crate) fn replace_values(&self, values: Vec<Vec<Rational>>) -> Instance {
        Instance {
            flavor: self.flavor,
            weights: self.weights.clone(),
            values,
            item_labels: None,
        }
    }
}

impl Serialize for Instance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_value().serialize(s)
    }
}

/// An n-partition of the items: one bundle of item indices per agent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Allocation {
    pub bundles: Vec<Vec<usize>>,
}

impl Allocation {
    pub fn new(mut bundles: Vec<Vec<usize>>) -> Self {
        for b in &mut bundles {
            b.sort_unstable();
        }
        Allocation { bundles }
    }

    pub fn empty(n: usize) -> Self {
        Allocation {
            bundles: vec![Vec::new(); n],
        }
    }

    pub fn from_masks(masks: &[ItemSet]) -> Self {
        Allocation {
            bundles: masks.iter().map(|&m| items_of(m).collect()).collect(),
        }
    }

    /// `assignment[item] = agent`.
    pub fn from_assignment(assignment: &[usize], n: usize) -> Self {
        let mut bundles = vec![Vec::new(); n];
        for (item, &agent) in assignment.iter().enumerate() {
            bundles[agent].push(item);
        }
        Allocation { bundles }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: Allocation = serde_json::from_str(text)?;
        Ok(Allocation::new(a.bundles))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("allocation serializes")
    }

    pub fn n(&self) -> usize {
        self.bundles.len()
    }

    pub fn masks(&self) -> Vec<ItemSet> {
        self.bundles.iter().map(|b| mask_of(b)).collect()
    }

    /// Checks this is a full partition of `0..instance.m()` among `instance.n()` agents.
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        let (n, m) = (instance.n(), instance.m());
        if self.bundles.len() != n {
            return Err(Error::InvalidAllocation(format!(
                "{} bundles for {n} agents",
                self.bundles.len()
            )));
        }
        let mut seen = vec![false; m];
        for (agent, bundle) in self.bundles.iter().enumerate() {
            for &item in bundle {
                if item >= m {
                    return Err(Error::InvalidAllocation(format!(
                        "agent {agent} holds item {item}, but there are only {m} items"
                    )));
                }
                if std::mem::replace(&mut seen[item], true) {
                    return Err(Error::InvalidAllocation(format!("item {item} allocated twice")));
                }
            }
        }
        if let Some(item) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidAllocation(format!("item {item} is unallocated")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    const TABLE1: &str = r#"{
        "flavor": "chores",
        "items": ["f1", "f2", "f3", "f4", "f5"],
        "agents": [
            {"weight": "1/2", "values": ["19/72", "17/72", "2/9", "11/72", "1/8"]},
            {"weight": "1/3", "values": ["19/72", "17/72", "2/9", "11/72", "1/8"]},
            {"weight": "1/6", "values": ["19/72", "17/72", "2/9", "11/72", "1/8"]}
        ]
    }"#;

    #[test]
    fn loads_table1() {
        let inst = Instance::from_json(TABLE1).unwrap();
        assert_eq!((inst.n(), inst.m()), (3, 5));
        for i in 0..3 {
            assert_eq!(inst.total_value(i), rat(1, 1));
        }
        assert_eq!(inst.bundle_value(0, &[2]).unwrap(), rat(2, 9));
        assert_eq!(inst.bundle_value(1, &[0, 1]).unwrap(), rat(1, 2));
        assert_eq!(inst.bundle_value(2, &[]).unwrap(), rat(0, 1));
        assert!(inst.bundle_value(0, &[5]).is_err());
        assert!(inst.bundle_value(3, &[0]).is_err());
        assert!(inst.is_ordered());
    }

    #[test]
    fn round_trip() {
        let inst = Instance::from_json(TABLE1).unwrap();
        let again = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn single_agent_no_items() {
        let inst = Instance::from_json(r#"{"flavor":"goods","agents":[{"weight":"1","values":[]}]}"#)
            .unwrap();
        assert_eq!((inst.n(), inst.m()), (1, 0));
    }

    #[test]
    fn diagnostics_name_the_field() {
        let cases = [
            (r#"{"flavor":"chores","agents":[{"weight":"1/2","values":["1"]},{"weight":"1/3","values":["1"]}]}"#, "weight"),
            (r#"{"flavor":"chores","agents":[{"weight":"1","values":["-1/2"]}]}"#, "agents[0].values[0]"),
            (r#"{"flavor":"chores","agents":[]}"#, "agents"),
            (r#"{"flavor":"chores","agents":[{"weight":"1/2","values":["1"]},{"weight":"1/2","values":[]}]}"#, "agents[1].values"),
            (r#"{"flavor":"chores","agents":[{"weight":"0.5","values":[]},{"weight":"1/2","values":[]}]}"#, "agents[0].weight"),
            (r#"{"flavor":"chores","agents":[{"weight":"0","values":[]},{"weight":"1","values":[]}]}"#, "agents[0].weight"),
        ];
        for (doc, field) in cases {
            let err = Instance::from_json(doc).unwrap_err().to_string();
            assert!(err.contains(field), "{err} should mention {field}");
        }
        assert!(matches!(
            Instance::from_json(r#"{"flavor":"pie","agents":[]}"#),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn normalize_rows() {
        let inst = Instance::new(
            Flavor::Chores,
            vec![rat(1, 2), rat(1, 2)],
            vec![
                vec![rat(1, 1), rat(1, 1), rat(2, 1)],
                vec![rat(0, 1), rat(0, 1), rat(0, 1)],
            ],
        )
        .unwrap();
        let norm = inst.normalize();
        assert_eq!(norm.row(0), &[rat(1, 4), rat(1, 4), rat(1, 2)]);
        assert_eq!(norm.row(1), inst.row(1));
        assert_eq!(norm.normalize(), norm);
        // a row summing to 7/8 is accepted as is and rescaled only on request
        let partial = Instance::new(Flavor::Chores, vec![rat(1, 1)], vec![vec![rat(3, 8), rat(1, 2)]])
            .unwrap();
        assert_eq!(partial.normalize().total_value(0), rat(1, 1));
    }

    #[test]
    fn allocation_validation() {
        let inst = Instance::from_json(TABLE1).unwrap();
        let ok = Allocation::from_json(r#"{"bundles":[[2],[0,1],[3,4]]}"#).unwrap();
        ok.validate(&inst).unwrap();
        for bad in [
            r#"{"bundles":[[2],[0,1],[3]]}"#,
            r#"{"bundles":[[2],[0,1],[3,4,4]]}"#,
            r#"{"bundles":[[2],[0,1,5],[3,4]]}"#,
            r#"{"bundles":[[2],[0,1,3,4]]}"#,
        ] {
            assert!(Allocation::from_json(bad).unwrap().validate(&inst).is_err());
        }
    }

    #[test]
    fn masks() {
        assert_eq!(mask_of(&[0, 3]), 0b1001);
        assert_eq!(items_of(0b1010).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(full_mask(3), 0b111);
        assert_eq!(full_mask(64), u64::MAX);
    }
}
