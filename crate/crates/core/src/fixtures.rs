//! Named example instances with pinned allocations and expected outcomes,
//! plus seeded random generators.
//!
//! Expected factors are stored as exact rationals already evaluated at the
//! fixture's epsilon; [`Fixture::verify`] recomputes each of them.

use std::cmp::Ordering;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::checkers;
use crate::error::{Error, Result};
use crate::model::{mask_of, Allocation, FairnessNotion, Flavor, Instance};
use crate::numeric::{format_rational, int, rat, surd_compare, FactorBound, Rational, SurdThreshold};
use crate::oracle::Oracle;

pub const FIXTURE_NAMES: [&str; 11] = [
    "table1",
    "propx-not-mma",
    "mmax-not-prop1",
    "mms-not-mma-weighted",
    "approx-mms-not-mma1",
    "mms-not-mmax",
    "mma-not-mms",
    "mmax-preferred",
    "swap-motivation",
    "two-agent-motivation",
    "goods-nonexistence",
];

/// One checkable claim about a fixture.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expectation {
    /// The agent's factor for `notion` on the pinned allocation equals `value`.
    Factor {
        agent: usize,
        notion: FairnessNotion,
        #[serde(with = "crate::numeric::serde_rational")]
        value: Rational,
    },
    /// The agent meets `notion` at factor 1 on the pinned allocation, or not.
    Holds { agent: usize, notion: FairnessNotion, holds: bool },
    /// `MMS_i(items, n - 1)` over the other agents' weights.
    OthersMms {
        agent: usize,
        items: Vec<usize>,
        #[serde(with = "crate::numeric::serde_rational")]
        value: Rational,
    },
    /// `MMS_i(M, n)`.
    FullMms {
        agent: usize,
        #[serde(with = "crate::numeric::serde_rational")]
        value: Rational,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct Fixture {
    pub name: String,
    #[serde(with = "opt_rational")]
    pub eps: Option<Rational>,
    pub instance: Instance,
    pub allocation: Option<Allocation>,
    pub expectations: Vec<Expectation>,
    pub description: String,
}

mod opt_rational {
    use serde::Serializer;

    use crate::numeric::{format_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_str(&format_rational(r)),
            None => s.serialize_none(),
        }
    }
}

impl Fixture {
    /// Recomputes every expectation; returns one line per disagreement.
    pub fn verify(&self, oracle: &Oracle) -> Result<Vec<String>> {
        let mut failures = Vec::new();
        for e in &self.expectations {
            match e {
                Expectation::Factor { agent, notion, value } => {
                    let r = oracle.factor(&self.instance, self.pinned()?, *notion)?;
                    let got = &r.agent(*agent).factor;
                    if got.as_exact() != Some(value) {
                        failures.push(format!(
                            "{}: agent {agent} {notion} factor is {got}, expected {}",
                            self.name,
                            format_rational(value)
                        ));
                    }
                }
                Expectation::Holds { agent, notion, holds } => {
                    let r = oracle.factor(&self.instance, self.pinned()?, *notion)?;
                    let ok = checkers::within(self.instance.flavor(), &r.agent(*agent).factor, &FactorBound::one());
                    if ok != *holds {
                        failures.push(format!(
                            "{}: agent {agent} {notion} holds = {ok}, expected {holds}",
                            self.name
                        ));
                    }
                }
                Expectation::OthersMms { agent, items, value } => {
                    let got = oracle.mms_others(&self.instance, *agent, mask_of(items))?;
                    if got != *value {
                        failures.push(format!(
                            "{}: agent {agent} MMS of {items:?} is {}, expected {}",
                            self.name,
                            format_rational(&got),
                            format_rational(value)
                        ));
                    }
                }
                Expectation::FullMms { agent, value } => {
                    let got = oracle.mms_full(&self.instance, *agent)?;
                    if got != *value {
                        failures.push(format!(
                            "{}: agent {agent} MMS is {}, expected {}",
                            self.name,
                            format_rational(&got),
                            format_rational(value)
                        ));
                    }
                }
            }
        }
        Ok(failures)
    }

    fn pinned(&self) -> Result<&Allocation> {
        self.allocation
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("fixture {} has no pinned allocation", self.name)))
    }
}

/// Open interval of admissible epsilon values and the default.
fn eps_range(name: &str) -> Option<(Rational, Rational, Rational)> {
    match name {
        "propx-not-mma" | "mms-not-mma-weighted" => Some((rat(0, 1), rat(1, 6), rat(1, 10))),
        "approx-mms-not-mma1" | "mms-not-mmax" => Some((rat(0, 1), rat(1, 1), rat(1, 2))),
        "mmax-preferred" => Some((rat(0, 1), rat(1, 3), rat(1, 100))),
        "swap-motivation" => Some((rat(0, 1), rat(1, 4), rat(1, 10))),
        "goods-nonexistence" => Some((rat(0, 1), rat(1, 3), rat(1, 100))),
        _ => None,
    }
}

fn resolve_eps(name: &str, eps: Option<Rational>) -> Result<Option<Rational>> {
    match (eps_range(name), eps) {
        (None, None) => Ok(None),
        (None, Some(_)) => Err(Error::ParameterRange(format!("fixture {name} takes no epsilon"))),
        (Some((_, _, d)), None) => Ok(Some(d)),
        (Some((lo, hi, _)), Some(e)) => {
            if e > lo && e < hi {
                Ok(Some(e))
            } else {
                Err(Error::ParameterRange(format!(
                    "fixture {name} needs {} < eps < {}, got {}",
                    format_rational(&lo),
                    format_rational(&hi),
                    format_rational(&e)
                )))
            }
        }
    }
}

fn identical(flavor: Flavor, weights: Vec<Rational>, row: Vec<Rational>) -> Result<Instance> {
    let rows = vec![row; weights.len()];
    Instance::new(flavor, weights, rows)
}

fn equal(n: i64) -> Vec<Rational> {
    vec![rat(1, n); n as usize]
}

fn factor(agent: usize, notion: FairnessNotion, value: Rational) -> Expectation {
    Expectation::Factor { agent, notion, value }
}

fn holds(agent: usize, notion: FairnessNotion, holds: bool) -> Expectation {
    Expectation::Holds { agent, notion, holds }
}

fn alloc(bundles: &[&[usize]]) -> Option<Allocation> {
    Some(Allocation::new(bundles.iter().map(|b| b.to_vec()).collect()))
}

pub fn build_fixture(name: &str, eps: Option<Rational>) -> Result<Fixture> {
    use FairnessNotion::*;
    if !FIXTURE_NAMES.contains(&name) {
        return Err(Error::UnknownFixture(name.to_string()));
    }
    let eps = resolve_eps(name, eps)?;
    let e = eps.clone().unwrap_or_else(Rational::zero);
    let half = rat(1, 2);
    let chores = Flavor::Chores;
    let (instance, allocation, expectations, description) = match name {
        "table1" => {
            let row = vec![rat(19, 72), rat(17, 72), rat(2, 9), rat(11, 72), rat(1, 8)];
            (
                identical(chores, vec![rat(1, 2), rat(1, 3), rat(1, 6)], row)?,
                alloc(&[&[2], &[0, 1], &[3, 4]]),
                vec![
                    Expectation::OthersMms { agent: 0, items: vec![0, 1, 3, 4], value: rat(19, 24) },
                    Expectation::OthersMms { agent: 1, items: vec![2, 3, 4], value: rat(1, 4) },
                    Expectation::OthersMms { agent: 2, items: vec![0, 1, 2], value: rat(11, 72) },
                    holds(0, Mma, true),
                    holds(1, Mma1, true),
                    holds(1, Mmax, false),
                    factor(1, Mmax, rat(19, 18)),
                    factor(2, Mmax, int(1)),
                ],
                "three weighted agents with one cost row; agent 1 is MMA1 but not MMAX",
            )
        }
        "propx-not-mma" => {
            let big = &half - &e;
            let row = vec![big.clone(), big.clone(), e.clone(), e.clone()];
            let f = &big / (int(2) * &e);
            (
                identical(chores, equal(2), row)?,
                alloc(&[&[0, 1], &[2, 3]]),
                vec![
                    holds(0, Propx, true),
                    holds(1, Propx, true),
                    factor(0, Mma1, f.clone()),
                    factor(0, Mmax, f),
                ],
                "PROPX allocation whose MMA1 and MMAX factors grow like 1/(4 eps)",
            )
        }
        "mmax-not-prop1" => {
            let third = rat(1, 3);
            let row = vec![third.clone(), third.clone(), third, Rational::zero(), Rational::zero()];
            (
                identical(chores, equal(4), row)?,
                alloc(&[&[0, 1], &[2], &[3], &[4]]),
                vec![
                    factor(0, Mmax, int(1)),
                    holds(1, Mmax, true),
                    holds(2, Mmax, true),
                    holds(3, Mmax, true),
                    factor(0, Prop1, rat(4, 3)),
                    factor(0, Propx, rat(4, 3)),
                ],
                "MMAX allocation that is neither PROP1 nor PROPX",
            )
        }
        "mms-not-mma-weighted" => {
            let big = &half - &e;
            let row = vec![big.clone(), big.clone(), e.clone(), e.clone()];
            let f = &big / (int(2) * &e);
            (
                identical(chores, vec![rat(1, 2), rat(1, 4), rat(1, 4)], row)?,
                alloc(&[&[0, 1], &[2], &[3]]),
                vec![
                    Expectation::FullMms { agent: 0, value: int(1) - int(2) * &e },
                    factor(0, Mms, int(1)),
                    holds(1, Mms, true),
                    holds(2, Mms, true),
                    factor(0, Mma1, f.clone()),
                    factor(0, Mmax, f),
                ],
                "weighted MMS allocation with unbounded MMA1 and MMAX factors",
            )
        }
        "approx-mms-not-mma1" => {
            let d = int(3) + &e;
            let row = vec![int(2) / &d, int(1) / &d, &e / &d];
            (
                identical(chores, equal(2), row)?,
                alloc(&[&[0, 1], &[2]]),
                vec![
                    Expectation::FullMms { agent: 0, value: int(2) / &d },
                    holds(1, Mms, true),
                    factor(0, Mms, rat(3, 2)),
                    factor(0, Mma1, int(1) / &e),
                ],
                "3/2-MMS allocation whose MMA1 factor is 1/eps",
            )
        }
        "mms-not-mmax" => {
            let d = int(1) + &e;
            let row = vec![int(1) / &d, &e / &d, Rational::zero()];
            (
                identical(chores, equal(2), row)?,
                alloc(&[&[0, 2], &[1]]),
                vec![
                    Expectation::FullMms { agent: 0, value: int(1) / &d },
                    factor(0, Mms, int(1)),
                    holds(1, Mms, true),
                    holds(0, Mma1, true),
                    factor(0, Mmax, int(1) / &e),
                ],
                "MMS allocation whose MMAX factor is 1/eps",
            )
        }
        "mma-not-mms" => {
            let row = [6, 15, 22, 26, 10, 7, 12, 19, 12].iter().map(|&c| rat(c, 129)).collect();
            (
                identical(chores, equal(3), row)?,
                alloc(&[&[0, 3, 6], &[1, 4, 7], &[2, 5, 8]]),
                vec![
                    Expectation::FullMms { agent: 0, value: rat(43, 129) },
                    Expectation::OthersMms { agent: 0, items: vec![1, 2, 4, 5, 7, 8], value: rat(44, 129) },
                    factor(0, Mms, rat(44, 43)),
                    factor(0, Mma, int(1)),
                    holds(1, Mma, true),
                    holds(2, Mma, true),
                ],
                "MMA allocation that is not MMS, equal weights",
            )
        }
        "mmax-preferred" => {
            let d = int(4) + int(9) * &e;
            let small = int(3) * &e / &d;
            let row = vec![int(3) / &d, int(1) / &d, small.clone(), small.clone(), small];
            (
                identical(chores, vec![rat(1, 2), rat(1, 4), rat(1, 4)], row)?,
                alloc(&[&[0, 1], &[2, 3], &[4]]),
                vec![
                    Expectation::FullMms { agent: 0, value: int(3) / &d },
                    Expectation::FullMms { agent: 1, value: int(3) / (int(8) + int(18) * &e) },
                    Expectation::FullMms { agent: 2, value: int(3) / (int(8) + int(18) * &e) },
                    Expectation::OthersMms { agent: 0, items: vec![2, 3, 4], value: int(12) * &e / &d },
                    Expectation::OthersMms { agent: 1, items: vec![2, 3, 4], value: int(3) * &e / &d },
                    Expectation::OthersMms { agent: 2, items: vec![2, 3, 4], value: int(3) * &e / &d },
                    factor(0, Mms, rat(4, 3)),
                    factor(0, Mmax, int(1) / (int(4) * &e)),
                ],
                "agent 0 holding both heavy chores is 4/3-MMS but far from MMAX",
            )
        }
        "swap-motivation" => {
            let big = &half - &e;
            let row = vec![big.clone(), big.clone(), e.clone(), e.clone()];
            (
                identical(chores, vec![rat(1, 2), rat(1, 4), rat(1, 4)], row)?,
                alloc(&[&[0, 1], &[2], &[3]]),
                vec![
                    holds(0, Propx, true),
                    holds(1, Propx, true),
                    holds(2, Propx, true),
                    factor(0, Mmax, &big / (int(2) * &e)),
                ],
                "PROPX allocation where the heavy agent should trade chores away",
            )
        }
        "two-agent-motivation" => {
            // rational stand-ins for weights (3 - sqrt 5)/2, (sqrt 5 - 1)/2
            let (w0, w1) = (rat(38, 100), rat(62, 100));
            let row = vec![rat(31, 100), rat(31, 100), rat(236, 1000), rat(144, 1000)];
            let share = &w0 * (rat(38, 100) / &w1);
            (
                identical(chores, vec![w0, w1], row)?,
                alloc(&[&[0, 1], &[2, 3]]),
                vec![
                    holds(0, Propx, true),
                    holds(1, Propx, true),
                    Expectation::OthersMms { agent: 0, items: vec![2, 3], value: share.clone() },
                    factor(0, Mmax, rat(31, 100) / share),
                ],
                "two agents where the swap condition never fires on a PROPX input",
            )
        }
        "goods-nonexistence" => {
            let instance = goods_nonexistence_instance(4, &e)?;
            let big = int(1) - int(3) * &e;
            let mut ex: Vec<Expectation> = (0..3).map(|i| Expectation::FullMms { agent: i, value: e.clone() }).collect();
            ex.push(Expectation::FullMms { agent: 3, value: big });
            (
                instance,
                None,
                ex,
                "weighted goods instance with no MMA1 or MMAX allocation",
            )
        }
        _ => unreachable!("name checked above"),
    };
    Ok(Fixture {
        name: name.to_string(),
        eps,
        instance,
        allocation,
        expectations,
        description: description.to_string(),
    })
}

/// Goods instance with `n - 1` light agents and one heavy agent for which no
/// allocation is MMA1 or MMAX. Needs `n >= 4` and
/// `1 - (n - 1) eps >= 2 phi n eps`.
pub fn goods_nonexistence_instance(n: usize, eps: &Rational) -> Result<Instance> {
    if n < 4 {
        return Err(Error::ParameterRange(format!("needs n >= 4, got {n}")));
    }
    if *eps <= Rational::zero() {
        return Err(Error::ParameterRange("needs eps > 0".into()));
    }
    let k = int(n as i64);
    let heavy = int(1) - (&k - int(1)) * eps;
    if surd_compare(&heavy, &(int(2) * &k * eps), &SurdThreshold::golden_ratio()) == Ordering::Less {
        return Err(Error::ParameterRange(format!(
            "eps = {} violates 1 - (n-1) eps >= 2 phi n eps for n = {n}",
            format_rational(eps)
        )));
    }
    let m = 3 * n - 1;
    let light_row: Vec<Rational> = (0..m)
        .map(|j| {
            if j < 2 * n - 2 {
                eps / int(2)
            } else if j < 2 * n {
                &heavy / int(2)
            } else {
                Rational::zero()
            }
        })
        .collect();
    let heavy_row: Vec<Rational> = (0..m)
        .map(|j| if j < 2 * n { &heavy / (int(2) * &k) } else { eps.clone() })
        .collect();
    let mut rows = vec![light_row; n - 1];
    rows.push(heavy_row);
    let mut weights = vec![eps.clone(); n - 1];
    weights.push(heavy);
    Instance::new(Flavor::Goods, weights, rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    Equal,
    /// Exponential draws normalized and rounded to a common denominator.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostMode {
    /// Independent integer draws per entry.
    Uniform,
    /// One row shared by every agent.
    Identical,
    /// Independent rows, each sorted non-increasing.
    Ordered,
}

const WEIGHT_DENOMINATOR: u64 = 120;
const VALUE_MAX: u64 = 20;

/// Seeded random instance; rows sum to 1 and weights are exact rationals
/// summing to 1.
pub fn gen_random(
    n: usize,
    m: usize,
    flavor: Flavor,
    weight_mode: WeightMode,
    cost_mode: CostMode,
    seed: u64,
) -> Result<Instance> {
    if n == 0 {
        return Err(Error::ParameterRange("needs n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = match weight_mode {
        WeightMode::Equal => vec![rat(1, n as i64); n],
        WeightMode::Random => random_weights(&mut rng, n),
    };
    let draw_row = |rng: &mut ChaCha8Rng| -> Vec<u64> {
        let mut row: Vec<u64> = (0..m).map(|_| rng.gen_range(0..=VALUE_MAX)).collect();
        if m > 0 && row.iter().all(|&x| x == 0) {
            row[0] = 1;
        }
        row
    };
    let shared = draw_row(&mut rng);
    let rows: Vec<Vec<Rational>> = (0..n)
        .map(|_| {
            let mut row = match cost_mode {
                CostMode::Identical => shared.clone(),
                _ => draw_row(&mut rng),
            };
            if cost_mode == CostMode::Ordered {
                row.sort_unstable_by(|a, b| b.cmp(a));
            }
            let total: u64 = row.iter().sum::<u64>().max(1);
            row.iter().map(|&x| rat(x as i64, total as i64)).collect()
        })
        .collect();
    Instance::new(flavor, weights, rows)
}

/// Largest-remainder rounding of `-ln U` draws to multiples of
/// `1 / WEIGHT_DENOMINATOR`, each at least one unit.
fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    let denominator = WEIGHT_DENOMINATOR.max(2 * n as u64);
    let spare = denominator - n as u64;
    let draws: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let sum: f64 = draws.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let quotas: Vec<f64> = draws.iter().map(|d| d / sum * spare as f64).collect();
    let mut units: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let mut left = spare - units.iter().sum::<u64>().min(spare);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        units[i] += 1;
        left -= 1;
    }
    units
        .iter()
        .map(|&u| rat((u + 1) as i64, denominator as i64))
        .collect()
}

/// Uniformly random assignment of every item to an agent.
pub fn gen_random_allocation(n: usize, m: usize, seed: u64) -> Allocation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment: Vec<usize> = (0..m).map(|_| rng.gen_range(0..n)).collect();
    Allocation::from_assignment(&assignment, n)
}

/// Checks a fixture's pinned allocation against a notion at factor 1.
pub fn pinned_satisfies(fixture: &Fixture, notion: FairnessNotion) -> Result<bool> {
    let allocation = fixture.pinned()?;
    checkers::satisfies(&fixture.instance, allocation, notion, &FactorBound::one())
}
