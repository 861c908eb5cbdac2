//! Python bindings. Instances and allocations cross the boundary as JSON
//! text in the same formats the command line reads and writes.

use fairdiv::numeric::{format_rational, parse_rational};
use fairdiv::oracle::Oracle;
use fairdiv::{Allocation, FairnessNotion, Instance};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn load(instance: &str, allocation: &str) -> PyResult<(Instance, Allocation)> {
    let inst = Instance::from_json(instance).map_err(py_err)?;
    let alloc = Allocation::from_json(allocation).map_err(py_err)?;
    alloc.validate(&inst).map_err(py_err)?;
    Ok((inst, alloc))
}

/// Per-agent factors of `allocation` under `notion`, as JSON.
#[pyfunction]
fn factor(instance: &str, allocation: &str, notion: &str) -> PyResult<String> {
    let (inst, alloc) = load(instance, allocation)?;
    let notion: FairnessNotion = notion.parse().map_err(py_err)?;
    let r = fairdiv::factor(&inst, &alloc, notion).map_err(py_err)?;
    serde_json::to_string(&r).map_err(py_err)
}

/// Whether `allocation` meets `notion` exactly, or within `threshold`
/// (for example "19/18" or "1+lambda").
#[pyfunction]
#[pyo3(signature = (instance, allocation, notion, threshold=None))]
fn satisfies(instance: &str, allocation: &str, notion: &str, threshold: Option<&str>) -> PyResult<bool> {
    let (inst, alloc) = load(instance, allocation)?;
    let notion: FairnessNotion = notion.parse().map_err(py_err)?;
    let bound = fairdiv::cli::parse_threshold(threshold.unwrap_or("1"), inst.n()).map_err(py_err)?;
    let r = fairdiv::factor(&inst, &alloc, notion).map_err(py_err)?;
    Ok(r.satisfies(&bound))
}

/// Maximin share of `agent`, over all items or over `items` split among the
/// other agents.
#[pyfunction]
#[pyo3(signature = (instance, agent, items=None))]
fn mms(instance: &str, agent: usize, items: Option<Vec<usize>>) -> PyResult<String> {
    let inst = Instance::from_json(instance).map_err(py_err)?;
    let oracle = Oracle::default();
    let value = match items {
        None => oracle.mms_full(&inst, agent),
        Some(items) => {
            let mut mask = 0u64;
            for e in items {
                if e >= inst.m() {
                    return Err(py_err(format!("item {e} out of range")));
                }
                mask |= 1u64 << e;
            }
            oracle.mms_others(&inst, agent, mask)
        }
    }
    .map_err(py_err)?;
    Ok(format_rational(&value))
}

/// A named fixture as JSON: instance, pinned allocation and expectations.
#[pyfunction]
#[pyo3(signature = (name, eps=None))]
fn fixture(name: &str, eps: Option<&str>) -> PyResult<String> {
    let eps = eps.map(parse_rational).transpose().map_err(py_err)?;
    let fx = fairdiv::fixtures::build_fixture(name, eps).map_err(py_err)?;
    serde_json::to_string(&fx).map_err(py_err)
}

/// Runs the command line in-process; returns the exit code and stdout text.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String) {
    let argv = std::iter::once("fairdiv".to_string()).chain(args);
    fairdiv::cli::run(argv)
}

#[pymodule]
fn pyfairdiv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(factor, m)?)?;
    m.add_function(wrap_pyfunction!(satisfies, m)?)?;
    m.add_function(wrap_pyfunction!(mms, m)?)?;
    m.add_function(wrap_pyfunction!(fixture, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
