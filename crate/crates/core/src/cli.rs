//! Command-line front end. Every command prints one JSON report.
//!
//! Exit codes: 0 when the command's success predicate holds, 1 when it is
//! violated or the input is rejected, 2 on usage errors.

use std::ffi::OsString;
use std::path::Path;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::chores_alloc::{
    ef1_allocate_traced, efx_allocate_traced, propx_allocate_traced, swap_mmax, two_agent_bound,
    two_agent_mmax_lifted, FitRule,
};
use crate::error::{Error, Result};
use crate::fixtures::{gen_random, build_fixture, CostMode, WeightMode};
use crate::goods_alloc::ece_preprocess_lifted;
use crate::model::{Allocation, FairnessNotion, Flavor, Instance};
use crate::numeric::{
    format_rational, lambda_threshold, parse_rational, FactorBound, Rational, SurdThreshold,
};
use crate::oracle::{MmsQuery, Nonexistence, Oracle, OracleLimits};
use crate::reduction::{lift_allocation_traced, to_ordered};

#[derive(Parser, Debug)]
#[command(name = "fairdiv", version, about = "Fair allocation of indivisible chores and goods among weighted agents")]
struct Cli {
    /// Worker threads for whole-space sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Rescale every instance row to sum to 1 after loading.
    #[arg(long, global = true)]
    normalize: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Factor of an allocation under one notion.
    Check {
        #[arg(long)]
        instance: String,
        #[arg(long)]
        allocation: String,
        #[arg(long, value_parser = parse_notion)]
        notion: FairnessNotion,
        /// Rational, or one of 1+lambda, lambda, phi, phi-1, inf.
        #[arg(long, default_value = "1")]
        threshold: String,
    },
    /// Run an allocation algorithm.
    Allocate {
        #[arg(long)]
        alg: Alg,
        #[arg(long)]
        instance: String,
        /// PROPX allocation to start the swap algorithm from.
        #[arg(long)]
        propx_input: Option<String>,
        /// Two-agent algorithm: test the fit before adding the item.
        #[arg(long)]
        literal: bool,
        /// Also write the allocation JSON here.
        #[arg(long)]
        out: Option<String>,
    },
    /// Maximin-share queries and exhaustive search.
    Oracle {
        #[command(subcommand)]
        query: OracleCommand,
    },
    /// Ordered instance and rank maps.
    Reduce {
        #[arg(long)]
        instance: String,
    },
    /// Lift an allocation of the ordered instance back to the original.
    Lift {
        #[arg(long)]
        instance: String,
        #[arg(long)]
        ordered_allocation: String,
    },
    /// Emit a named example or a random instance.
    Gen(GenArgs),
    /// Sweep every allocation looking for one meeting the notion at factor 1.
    VerifyNonexistence {
        #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
        instance: Option<String>,
        #[arg(long)]
        fixture: Option<String>,
        #[arg(long)]
        eps: Option<String>,
        #[arg(long, value_parser = parse_notion)]
        notion: FairnessNotion,
    },
    /// lambda(n) and 1 + lambda(n) for n = 2..=n-max.
    Ratios {
        #[arg(long, default_value_t = 10)]
        n_max: usize,
    },
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// `owner_weight * MMS` of an agent's valuation over a set of items.
    Mms {
        #[arg(long)]
        instance: String,
        #[arg(long)]
        agent: usize,
        /// Comma-separated item indices; all items when omitted.
        #[arg(long, value_delimiter = ',')]
        items: Option<Vec<usize>>,
        /// Comma-separated recipient weights; the other agents' weights when omitted.
        #[arg(long, value_delimiter = ',')]
        recipients: Option<Vec<String>>,
        /// Defaults to the agent's own weight.
        #[arg(long)]
        owner_weight: Option<String>,
    },
    /// Best allocation for a notion over all n^m assignments.
    Search {
        #[arg(long)]
        instance: String,
        #[arg(long, value_parser = parse_notion)]
        notion: FairnessNotion,
    },
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    fixture: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 6)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FlavorArg::Chores)]
    flavor: FlavorArg,
    #[arg(long, value_enum, default_value_t = WeightArg::Random)]
    weights: WeightArg,
    #[arg(long, value_enum, default_value_t = CostArg::Uniform)]
    costs: CostArg,
    /// Also write the instance JSON here.
    #[arg(long)]
    out: Option<String>,
    /// Also write the pinned allocation JSON here, when there is one.
    #[arg(long)]
    allocation_out: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Alg {
    Swap,
    TwoAgent,
    Propx,
    Ef1,
    EfxTtc,
    GoodsEce,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FlavorArg {
    Chores,
    Goods,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WeightArg {
    Equal,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CostArg {
    Uniform,
    Identical,
    Ordered,
}

fn parse_notion(s: &str) -> std::result::Result<FairnessNotion, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Outcome of one command before it is wrapped into the report.
struct Outcome {
    success: bool,
    digest: Option<String>,
    result: Value,
}

/// Parses `argv` (including the program name), runs the command, and returns
/// the exit code with the text for stdout (stderr for usage errors).
pub fn run<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return (code, e.render().to_string());
        }
    };
    let command: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let limits = OracleLimits::default();
    let oracle = Oracle::new(limits.clone()).with_jobs(cli.jobs);
    let config = json!({
        "jobs": cli.jobs,
        "normalize": cli.normalize,
        "budget": limits.budget,
        "max_items": limits.max_items,
        "max_recipients": limits.max_recipients,
    });
    let start = Instant::now();
    let outcome = dispatch(&cli, &oracle);
    let elapsed_ms = start.elapsed().as_secs_f64() * 1000.0;
    let (code, report) = match outcome {
        Ok(o) => (
            if o.success { 0 } else { 1 },
            json!({
                "command": command,
                "instance_digest": o.digest,
                "success": o.success,
                "result": o.result,
                "timing_ms": elapsed_ms,
                "config": config,
            }),
        ),
        Err(e) => (
            1,
            json!({
                "command": command,
                "success": false,
                "error": e.to_string(),
                "timing_ms": elapsed_ms,
                "config": config,
            }),
        ),
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    (code, text)
}

fn dispatch(cli: &Cli, oracle: &Oracle) -> Result<Outcome> {
    let load = |path: &str| -> Result<Instance> {
        let inst = load_instance(path)?;
        Ok(if cli.normalize { inst.normalize() } else { inst })
    };
    match &cli.command {
        Command::Check {
            instance,
            allocation,
            notion,
            threshold,
        } => {
            let inst = load(instance)?;
            let alloc = load_allocation(allocation)?;
            let bound = parse_threshold(threshold, inst.n())?;
            let r = oracle.factor(&inst, &alloc, *notion)?;
            let ok = r.satisfies(&bound);
            Ok(Outcome {
                success: ok,
                digest: Some(digest(&inst)),
                result: json!({
                    "threshold": bound,
                    "threshold_display": bound.to_decimal(12),
                    "satisfied": ok,
                    "factor": r,
                }),
            })
        }
        Command::Allocate {
            alg,
            instance,
            propx_input,
            literal,
            out,
        } => {
            let inst = load(instance)?;
            let o = allocate(oracle, &inst, *alg, propx_input.as_deref(), *literal)?;
            if let Some(path) = out {
                let alloc: Allocation = serde_json::from_value(o.result["allocation"].clone())?;
                write_file(path, &alloc.to_json())?;
            }
            Ok(o)
        }
        Command::Oracle { query } => match query {
            OracleCommand::Mms {
                instance,
                agent,
                items,
                recipients,
                owner_weight,
            } => {
                let inst = load(instance)?;
                if *agent >= inst.n() {
                    return Err(Error::OutOfRange {
                        what: "agent",
                        index: *agent,
                        limit: inst.n(),
                    });
                }
                let items = items.clone().unwrap_or_else(|| (0..inst.m()).collect());
                let recipients = match recipients {
                    Some(r) => r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?,
                    None => (0..inst.n())
                        .filter(|j| j != agent)
                        .map(|j| inst.weight(j).clone())
                        .collect(),
                };
                let owner_weight = match owner_weight {
                    Some(s) => parse_rational(s)?,
                    None => inst.weight(*agent).clone(),
                };
                let query = MmsQuery {
                    agent: *agent,
                    items: items.clone(),
                    recipients: recipients.clone(),
                    owner_weight: owner_weight.clone(),
                };
                let v = oracle.mms(&inst, &query)?;
                Ok(Outcome {
                    success: true,
                    digest: Some(digest(&inst)),
                    result: json!({
                        "agent": agent,
                        "items": items,
                        "recipients": recipients.iter().map(format_rational).collect::<Vec<_>>(),
                        "owner_weight": format_rational(&owner_weight),
                        "mms": format_rational(&v),
                        "mms_display": FactorBound::exact(v).to_decimal(12),
                    }),
                })
            }
            OracleCommand::Search { instance, notion } => {
                let inst = load(instance)?;
                let s = oracle.best_factor_search(&inst, *notion)?;
                Ok(Outcome {
                    success: true,
                    digest: Some(digest(&inst)),
                    result: json!({
                        "notion": notion,
                        "allocation": s.allocation,
                        "factor": s.factor,
                        "factor_display": s.factor.to_decimal(12),
                        "evaluated": s.evaluated,
                    }),
                })
            }
        },
        Command::Reduce { instance } => {
            let inst = load(instance)?;
            let lift = to_ordered(&inst);
            Ok(Outcome {
                success: true,
                digest: Some(digest(&inst)),
                result: json!({
                    "ordered": lift.ordered.to_json_value(),
                    "rank": lift.rank,
                    "order": lift.order,
                }),
            })
        }
        Command::Lift {
            instance,
            ordered_allocation,
        } => {
            let inst = load(instance)?;
            let ordered = load_allocation(ordered_allocation)?;
            let lift = to_ordered(&inst);
            let (alloc, steps) = lift_allocation_traced(&lift, &inst, &ordered)?;
            Ok(Outcome {
                success: true,
                digest: Some(digest(&inst)),
                result: json!({ "allocation": alloc, "steps": steps }),
            })
        }
        Command::Gen(g) => generate(g),
        Command::VerifyNonexistence {
            instance,
            fixture,
            eps,
            notion,
        } => {
            let inst = match (instance, fixture) {
                (Some(path), _) => load(path)?,
                (None, Some(name)) => {
                    let eps = eps.as_deref().map(parse_rational).transpose()?;
                    build_fixture(name, eps)?.instance
                }
                (None, None) => unreachable!("clap requires one of the two"),
            };
            let verdict = oracle.verify_nonexistence(&inst, *notion)?;
            let none = matches!(verdict, Nonexistence::NoAllocationSatisfies { .. });
            Ok(Outcome {
                success: none,
                digest: Some(digest(&inst)),
                result: json!({ "notion": notion, "outcome": verdict }),
            })
        }
        Command::Ratios { n_max } => {
            if *n_max < 2 {
                return Err(Error::ParameterRange("--n-max must be at least 2".into()));
            }
            let rows = (2..=*n_max)
                .map(|n| -> Result<Value> {
                    let t = lambda_threshold(n)?;
                    let (a, b, c) = t.coefficients();
                    let lambda = FactorBound::surd(t.clone(), Rational::from_integer(0.into()), Rational::from_integer(1.into()))?;
                    let one_plus = FactorBound::one_plus_lambda(n)?;
                    Ok(json!({
                        "n": n,
                        "quadratic": [a.to_string(), b.to_string(), c.to_string()],
                        "lambda_display": lambda.to_decimal(12),
                        "one_plus_lambda_display": one_plus.to_decimal(12),
                    }))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Outcome {
                success: true,
                digest: None,
                result: json!({ "rows": rows }),
            })
        }
    }
}

fn allocate(oracle: &Oracle, inst: &Instance, alg: Alg, propx_input: Option<&str>, literal: bool) -> Result<Outcome> {
    use FairnessNotion::*;
    let n = inst.n();
    let (allocation, trace, notion, bound) = match alg {
        Alg::Swap => {
            let (input, path) = match propx_input {
                Some(p) => (load_allocation(p)?, json!("given")),
                None => {
                    let p = propx_allocate_traced(oracle, inst)?;
                    (p.allocation, json!(p.path))
                }
            };
            let (out, trace) = swap_mmax(inst, &input)?;
            let trace = json!({ "propx_source": path, "swap": trace });
            (out, trace, Mmax, FactorBound::one_plus_lambda(n)?)
        }
        Alg::TwoAgent => {
            let rule = if literal { FitRule::BeforeAdd } else { FitRule::AfterAdd };
            let (out, trace) = two_agent_mmax_lifted(inst, rule)?;
            (out, json!(trace), Mmax, two_agent_bound())
        }
        Alg::Propx => {
            let p = propx_allocate_traced(oracle, inst)?;
            (p.allocation, json!({ "path": p.path }), Propx, FactorBound::one())
        }
        Alg::Ef1 => {
            let p = ef1_allocate_traced(oracle, inst)?;
            (p.allocation, json!({ "path": p.path }), Ef1, FactorBound::one())
        }
        Alg::EfxTtc => {
            let lift = to_ordered(inst);
            let p = efx_allocate_traced(oracle, &lift)?;
            let efx = oracle.factor(&lift.ordered, &p.allocation, Efx)?;
            let (out, steps) = lift_allocation_traced(&lift, inst, &p.allocation)?;
            let trace = json!({
                "path": p.path,
                "ordered_allocation": p.allocation,
                "ordered_efx": efx,
                "lift": steps,
            });
            (out, trace, Mmax, FactorBound::one())
        }
        Alg::GoodsEce => {
            let (out, trace) = ece_preprocess_lifted(inst)?;
            (out, json!(trace), Mmax, FactorBound::phi_minus_one())
        }
    };
    let report = oracle.factor(inst, &allocation, notion)?;
    let ok = report.satisfies(&bound);
    Ok(Outcome {
        success: ok,
        digest: Some(digest(inst)),
        result: json!({
            "allocation": allocation,
            "trace": trace,
            "guarantee": { "notion": notion, "bound": bound, "bound_display": bound.to_decimal(12) },
            "satisfied": ok,
            "report": report,
        }),
    })
}

fn generate(g: &GenArgs) -> Result<Outcome> {
    let (instance, allocation, extra) = match &g.fixture {
        Some(name) => {
            let eps = g.eps.as_deref().map(parse_rational).transpose()?;
            let f = build_fixture(name, eps)?;
            let extra = json!({
                "name": f.name,
                "eps": f.eps.as_ref().map(format_rational),
                "description": f.description,
                "expectations": f.expectations,
            });
            (f.instance, f.allocation, extra)
        }
        None => {
            let flavor = match g.flavor {
                FlavorArg::Chores => Flavor::Chores,
                FlavorArg::Goods => Flavor::Goods,
            };
            let weights = match g.weights {
                WeightArg::Equal => WeightMode::Equal,
                WeightArg::Random => WeightMode::Random,
            };
            let costs = match g.costs {
                CostArg::Uniform => CostMode::Uniform,
                CostArg::Identical => CostMode::Identical,
                CostArg::Ordered => CostMode::Ordered,
            };
            let inst = gen_random(g.n, g.m, flavor, weights, costs, g.seed)?;
            (inst, None, json!({ "seed": g.seed }))
        }
    };
    if let Some(path) = &g.out {
        write_file(path, &instance.to_json())?;
    }
    if let (Some(path), Some(a)) = (&g.allocation_out, &allocation) {
        write_file(path, &a.to_json())?;
    }
    Ok(Outcome {
        success: true,
        digest: Some(digest(&instance)),
        result: json!({
            "instance": instance.to_json_value(),
            "allocation": allocation,
            "fixture": extra,
        }),
    })
}

/// Threshold syntax: a rational, or `1+lambda`, `lambda`, `phi`, `phi-1`,
/// `inf`. `lambda` is taken at the instance's agent count.
pub fn parse_threshold(s: &str, n: usize) -> Result<FactorBound> {
    let zero = Rational::from_integer(0.into());
    let one = Rational::from_integer(1.into());
    match s.trim().to_ascii_lowercase().as_str() {
        "1+lambda" | "one+lambda" => FactorBound::one_plus_lambda(n),
        "lambda" => FactorBound::surd(lambda_threshold(n)?, zero, one),
        "phi" => FactorBound::surd(SurdThreshold::golden_ratio(), zero, one),
        "phi-1" => Ok(FactorBound::phi_minus_one()),
        "inf" => Ok(FactorBound::Infinite),
        other => parse_rational(other).map(FactorBound::exact),
    }
}

fn read_file(path: &str) -> Result<String> {
    std::fs::read_to_string(Path::new(path)).map_err(|source| Error::Io {
        path: path.to_string(),
        source,
    })
}

fn write_file(path: &str, text: &str) -> Result<()> {
    std::fs::write(Path::new(path), format!("{text}\n")).map_err(|source| Error::Io {
        path: path.to_string(),
        source,
    })
}

/// Accepts an instance document or a `gen` report wrapping one.
fn load_instance(path: &str) -> Result<Instance> {
    let text = read_file(path)?;
    match Instance::from_json(&text) {
        Ok(inst) => Ok(inst),
        Err(e) => {
            let wrapped = serde_json::from_str::<Value>(&text)
                .ok()
                .and_then(|v| v.get("result").and_then(|r| r.get("instance")).cloned());
            match wrapped {
                Some(v) => Instance::from_json(&v.to_string()),
                None => Err(e),
            }
        }
    }
}

/// Accepts an allocation document or a report carrying `result.allocation`.
fn load_allocation(path: &str) -> Result<Allocation> {
    let text = read_file(path)?;
    match Allocation::from_json(&text) {
        Ok(a) => Ok(a),
        Err(e) => {
            let wrapped = serde_json::from_str::<Value>(&text)
                .ok()
                .and_then(|v| v.get("result").and_then(|r| r.get("allocation")).cloned())
                .filter(|v| !v.is_null());
            match wrapped {
                Some(v) => Allocation::from_json(&v.to_string()),
                None => Err(e),
            }
        }
    }
}

/// SHA-256 of the canonical instance JSON.
fn digest(inst: &Instance) -> String {
    Sha256::digest(inst.to_json().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
