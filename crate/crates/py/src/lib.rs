//! Python bindings: Lie algebra data, fusion rules, conformal-block ranks,
//! Sugawara window checks and the torsor suite.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use twistcb::blocks::{self, BlockError, Label, LabelAssignment, Puncture};
use twistcb::cli::{self, RhoSpec, RunConfig};
use twistcb::config::Limits;
use twistcb::cover::CoveringGraph;
use twistcb::cyclo::qi;
use twistcb::liealg::{self, CartanType, Weight};
use twistcb::looprep::integrable_module;
use twistcb::sugawara;
use twistcb::torsorlab;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn block_err(e: BlockError) -> PyErr {
    match e {
        BlockError::InvalidGraph(_) | BlockError::MissingLabel(_) | BlockError::Level(..) => value_err(e),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_rho(rho: Option<&str>) -> PyResult<Option<RhoSpec>> {
    match rho {
        None => Ok(None),
        Some("trivial") => Ok(Some(RhoSpec::Trivial)),
        Some("outer") | Some("diagram") => Ok(Some(RhoSpec::Outer)),
        Some("minus-transpose") => Ok(Some(RhoSpec::MinusTranspose)),
        Some(other) => Err(value_err(format!("unknown rho {other:?}"))),
    }
}

/// A simple Lie algebra in its Chevalley basis.
#[pyclass(name = "LieAlgebra", frozen)]
struct PyLieAlgebra {
    inner: Arc<liealg::LieAlgebra>,
    name: String,
}

#[pymethods]
impl PyLieAlgebra {
    #[new]
    fn new(cartan_type: &str) -> PyResult<Self> {
        let t: CartanType = cartan_type.parse().map_err(value_err)?;
        let alg = liealg::build_simple(t).map_err(value_err)?;
        Ok(PyLieAlgebra { inner: Arc::new(alg), name: cartan_type.to_uppercase() })
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn dual_coxeter(&self) -> i64 {
        self.inner.dual_coxeter_from_comarks()
    }

    /// Dominant weights of level at most `level`, in fundamental coordinates.
    fn weights(&self, level: u32) -> Vec<Vec<i64>> {
        self.inner.enumerate_levels(level).into_iter().map(|w| w.0).collect()
    }

    /// Level-ℓ fusion product λ ⊗ μ as sorted (weight, multiplicity) pairs.
    fn fusion(&self, level: u32, lam: Vec<i64>, mu: Vec<i64>) -> PyResult<Vec<(Vec<i64>, i64)>> {
        let prods = blocks::fusion_products(&self.inner, level, &Weight(lam), &Weight(mu)).map_err(block_err)?;
        Ok(prods.into_iter().map(|(w, n)| (w.0, n)).collect())
    }

    /// Rank of blocks on P¹ with three labels, from the fusion rules.
    fn fusion_rank(&self, level: u32, a: Vec<i64>, b: Vec<i64>, c: Vec<i64>) -> PyResult<u64> {
        let table = blocks::fusion_table(&self.inner, level).map_err(block_err)?;
        table.rank(&Weight(a), &Weight(b), &Weight(c)).map_err(block_err)
    }

    /// Rank of untwisted coinvariants on P¹ with punctures at 0, 1, 2, ...,
    /// as (rank, stabilized, depth).
    #[pyo3(signature = (level, labels, max_depth = 4))]
    fn coinvariant_rank(&self, py: Python<'_>, level: u32, labels: Vec<Vec<i64>>, max_depth: usize) -> PyResult<(usize, bool, usize)> {
        Limits::default().check_depth(max_depth).map_err(value_err)?;
        let alg = self.inner.clone();
        py.detach(move || {
            let (model, rho) = blocks::untwisted_setup(&alg);
            let punctures: Vec<Puncture> = labels
                .iter()
                .enumerate()
                .map(|(i, w)| Puncture { x: qi(i as i64), label: Label::new(&Weight(w.clone()), 0) })
                .collect();
            let r = blocks::coinvariant_rank(alg, level, &model, &rho, &punctures, max_depth).map_err(block_err)?;
            Ok((r.rank, r.stabilized, r.depth_used))
        })
    }

    /// Both Virasoro identities for |k|, |l| ≤ k_max on H_ℓ(λ) truncated at
    /// `depth`; returns (pass, detail).
    #[pyo3(signature = (level, weight, depth = 3, k_max = 2))]
    fn virasoro_check(&self, py: Python<'_>, level: u32, weight: Vec<i64>, depth: usize, k_max: i64) -> PyResult<(bool, String)> {
        Limits::default().check_depth(depth).map_err(value_err)?;
        let alg = self.inner.clone();
        py.detach(move || {
            let m = integrable_module(alg.clone(), &Weight(weight), level, depth).map_err(value_err)?;
            let cas = sugawara::casimir(&alg);
            let r = sugawara::virasoro_window_check(&m, &cas, k_max, 2).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
            let detail = r.failure.clone().unwrap_or_else(|| format!("{} pairs, {} mode checks", r.pairs_checked, r.mode_checks));
            Ok((r.ok(), detail))
        })
    }

    fn __repr__(&self) -> String {
        format!("LieAlgebra('{}')", self.name)
    }
}

/// Rank report for a covering graph given as JSON text, with labels as
/// JSON text mapping leg labels to {"weight": [...]}.
#[pyfunction]
#[pyo3(signature = (graph_json, labels_json, algebra = "A1", level = 1, depth = 4, rho = None))]
fn rank_graph(
    py: Python<'_>,
    graph_json: &str,
    labels_json: &str,
    algebra: &str,
    level: u32,
    depth: usize,
    rho: Option<&str>,
) -> PyResult<Py<PyDict>> {
    let graph = CoveringGraph::from_json(graph_json).map_err(value_err)?;
    let labels = LabelAssignment::from_json(labels_json).map_err(value_err)?;
    let parsed = cli::Cli {
        command: cli::Command::Weights,
        algebra: algebra.into(),
        level,
        p: graph.p,
        depth,
        format: cli::Format::Json,
        seed: 0,
        rho: parse_rho(rho)?,
    };
    let cfg = RunConfig::from_cli(&parsed, &Limits::default()).map_err(value_err)?;
    let row = py.detach(|| cli::rank_graph(&cfg, &graph, &labels)).map_err(block_err)?;
    let out = PyDict::new(py);
    out.set_item("graph", row.graph)?;
    out.set_item("labels", row.labels)?;
    out.set_item("level", row.level)?;
    out.set_item("rank", row.rank)?;
    out.set_item("stabilized", row.stabilized)?;
    out.set_item("depth", row.depth)?;
    out.set_item("method", row.method)?;
    Ok(out.unbind())
}

/// Runs the command-line front end; returns (exit code, stdout, stderr).
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> (i32, String, String) {
    let mut argv = vec!["twistcb".to_string()];
    argv.extend(args);
    let out = py.detach(|| cli::run_from(argv));
    (out.code, out.stdout, out.stderr)
}

/// The finite torsor suite as (name, pass, detail) triples.
#[pyfunction]
fn torsor_suite(py: Python<'_>) -> PyResult<Vec<(String, bool, String)>> {
    let lines = py.detach(torsorlab::torsor_suite).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(lines.into_iter().map(|l| (l.name, l.pass, l.detail)).collect())
}

#[pymodule]
fn twistcb_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLieAlgebra>()?;
    m.add_function(wrap_pyfunction!(rank_graph, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add_function(wrap_pyfunction!(torsor_suite, m)?)?;
    Ok(())
}
