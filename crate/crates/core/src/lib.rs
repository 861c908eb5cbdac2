//! Fair allocation of indivisible chores and goods among weighted agents.
//!
//! Exact checkers for envy-based, proportional and maximin-aware notions,
//! brute-force oracles, the ordered-instance reduction, and approximation
//! algorithms for chores (swap and two-agent) and goods (envy-cycle
//! elimination with preprocessing).

pub mod checkers;
pub mod chores_alloc;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod goods_alloc;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod reduction;

pub use checkers::{factor, satisfies, AgentFactor, FactorResult};
pub use error::{Error, Result};
pub use model::{Allocation, FairnessNotion, Flavor, Instance};
pub use numeric::{FactorBound, Rational, SurdThreshold};
pub use oracle::{MmsCache, MmsQuery, Oracle, OracleLimits};
