//! Python bindings: `import privavg`.

use std::collections::{BTreeMap, BTreeSet};

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use privavg_core::consensus::{decimal_string, ConsensusAlgo, Variant};
use privavg_core::privacy_audit::{self, AuditVerdict, SampledTest};
use privavg_core::{experiment, simnet, AdversarySpec, AgentId, Modulus, ProtocolParams, SimConfig};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, x: &impl std::fmt::Display) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((x.to_string(),))
}

fn modulus(p: u64) -> PyResult<Modulus> {
    Modulus::new(p).map_err(err)
}

/// Undirected graph on agents `1..=n`.
#[pyclass(name = "Topology", module = "privavg", frozen)]
struct PyTopology(privavg_core::Topology);

#[pymethods]
impl PyTopology {
    #[new]
    fn new(n: usize, edges: Vec<(AgentId, AgentId)>) -> PyResult<Self> {
        privavg_core::Topology::new(n, edges).map(Self).map_err(err)
    }

    #[staticmethod]
    fn complete(n: usize) -> Self {
        Self(privavg_core::Topology::complete(n))
    }

    #[staticmethod]
    fn path(n: usize) -> Self {
        Self(privavg_core::Topology::path(n))
    }

    #[staticmethod]
    fn cycle(n: usize) -> Self {
        Self(privavg_core::Topology::cycle(n))
    }

    #[staticmethod]
    fn star(n: usize) -> Self {
        Self(privavg_core::Topology::star(n))
    }

    /// Parse the `n <count>` / `e <i> <j>` text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        text.parse().map(Self).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn edges(&self) -> Vec<(AgentId, AgentId)> {
        self.0.edges().to_vec()
    }

    fn neighbors(&self, i: AgentId) -> PyResult<Vec<AgentId>> {
        Ok(self.0.neighbors(i).map_err(err)?.iter().copied().collect())
    }

    fn is_connected(&self) -> bool {
        self.0.is_connected()
    }

    fn vertex_connectivity(&self) -> PyResult<usize> {
        self.0.vertex_connectivity().map_err(err)
    }

    fn is_vertex_cut(&self, cut: BTreeSet<AgentId>) -> PyResult<bool> {
        self.0.is_vertex_cut(&cut).map_err(err)
    }

    /// Components of the graph with `removed` deleted, as sorted lists.
    fn components_without(&self, removed: BTreeSet<AgentId>) -> PyResult<Vec<Vec<AgentId>>> {
        let parts = self.0.components_without(&removed).map_err(err)?;
        Ok(parts.parts().iter().map(|p| p.iter().copied().collect()).collect())
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Topology(n={}, edges={:?})", self.0.n(), self.0.edges())
    }
}

/// Outcome of one simulated run.
#[pyclass(name = "RunResult", module = "privavg", frozen)]
struct PyRunResult {
    report: simnet::RunReport,
    replay: String,
}

#[pymethods]
impl PyRunResult {
    /// The exact average as a `fractions.Fraction`.
    #[getter]
    fn average<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.report.average)
    }

    #[getter]
    fn average_decimal(&self) -> String {
        decimal_string(&self.report.average)
    }

    #[getter]
    fn masks(&self) -> Vec<u64> {
        self.report.masks()
    }

    #[getter]
    fn effective_inputs(&self) -> Vec<u64> {
        self.report.effective_inputs()
    }

    #[getter]
    fn p(&self) -> u64 {
        self.report.p
    }

    #[getter]
    fn phase1_messages(&self) -> u64 {
        self.report.phase1_messages
    }

    #[getter]
    fn phase2_rounds(&self) -> u64 {
        self.report.phase2_rounds
    }

    /// `(i, j, b_ij)` for each edge touching the adversary, if one was set.
    #[getter]
    fn incident_differences(&self) -> Option<Vec<(AgentId, AgentId, u64)>> {
        let view = self.report.view.as_ref()?;
        Some(view.incident_differences.iter().map(|d| (d.i, d.j, d.b)).collect())
    }

    fn report_toml(&self) -> PyResult<String> {
        self.report.to_text().map_err(err)
    }

    fn replay(&self) -> String {
        self.replay.clone()
    }

    fn __repr__(&self) -> String {
        format!("RunResult(average={}, p={})", self.report.average, self.report.p)
    }
}

#[pyclass(name = "Verdict", module = "privavg", frozen, get_all)]
struct PyVerdict {
    claim: String,
    method: String,
    params: String,
    passed: bool,
    hypothesis_holds: bool,
    statistic: Option<f64>,
    p_value: Option<f64>,
    details: String,
}

#[pymethods]
impl PyVerdict {
    fn __str__(&self) -> String {
        self.details.clone()
    }

    fn __repr__(&self) -> String {
        format!("Verdict(claim={:?}, method={:?}, passed={})", self.claim, self.method, self.passed)
    }
}

impl From<AuditVerdict> for PyVerdict {
    fn from(v: AuditVerdict) -> Self {
        PyVerdict {
            claim: v.claim.id().into(),
            method: v.method.id().into(),
            params: v.params,
            passed: v.pass,
            hypothesis_holds: v.hypothesis_holds,
            statistic: v.statistic,
            p_value: v.p_value,
            details: v.details,
        }
    }
}

fn algo(name: &str) -> PyResult<ConsensusAlgo> {
    match Variant::parse(name) {
        Some(Variant::FloodSum) => Ok(ConsensusAlgo::flood()),
        Some(Variant::GossipAvg) => Ok(ConsensusAlgo::gossip()),
        None => Err(err(format!("unknown algorithm {name:?}"))),
    }
}

/// Run both protocol phases. `shares` pins `r_ij` as `{(i, j): value}`.
#[pyfunction]
#[pyo3(signature = (topology, inputs, q, p=None, algo="flood", seed=0, adversary=None, shares=None, max_delay=4))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    topology: &PyTopology,
    inputs: Vec<u64>,
    q: u64,
    p: Option<u64>,
    algo: &str,
    seed: u64,
    adversary: Option<BTreeSet<AgentId>>,
    shares: Option<BTreeMap<(AgentId, AgentId), u64>>,
    max_delay: u64,
) -> PyResult<PyRunResult> {
    let params = ProtocolParams::new(topology.0.n(), q, p).map_err(err)?;
    let mut cfg =
        SimConfig::new(topology.0.clone(), inputs, params).algo(self::algo(algo)?).seed(seed).max_delay(max_delay);
    if let Some(adv) = adversary {
        cfg = cfg.adversary(AdversarySpec::new(adv));
    }
    if let Some(shares) = shares {
        cfg = cfg.pinned_shares(shares);
    }
    let out = simnet::simulate(&cfg).map_err(err)?;
    Ok(PyRunResult { report: out.report, replay: out.replay.to_text() })
}

/// Shift inputs from `[q1, q2]` to `[0, q2 - q1]`; returns `(s, q, shift)`.
#[pyfunction]
fn normalize_inputs(xs: Vec<i64>, q1: i64, q2: i64) -> PyResult<(Vec<u64>, u64, i64)> {
    let n = experiment::normalize_inputs(&xs, q1, q2).map_err(err)?;
    Ok((n.s, n.q, n.shift))
}

#[pyfunction]
fn check_lemma2(topology: &PyTopology, p: u64) -> PyResult<PyVerdict> {
    Ok(privacy_audit::check_lemma2(&topology.0, modulus(p)?).map_err(err)?.into())
}

#[pyfunction]
fn check_lemma3(topology: &PyTopology, p: u64, s: Vec<u64>) -> PyResult<PyVerdict> {
    Ok(privacy_audit::check_lemma3(&topology.0, modulus(p)?, &s).map_err(err)?.into())
}

#[pyfunction]
fn check_theorem1(
    topology: &PyTopology,
    p: u64,
    adversary: BTreeSet<AgentId>,
    s: Vec<u64>,
    s_prime: Vec<u64>,
) -> PyResult<PyVerdict> {
    let adv = AdversarySpec::new(adversary);
    Ok(privacy_audit::check_theorem1(&topology.0, modulus(p)?, &adv, &s, &s_prime).map_err(err)?.into())
}

#[pyfunction]
fn check_corollary2(
    topology: &PyTopology,
    p: u64,
    adversary: BTreeSet<AgentId>,
    target: BTreeSet<AgentId>,
    s: Vec<u64>,
    s_prime: Vec<u64>,
) -> PyResult<PyVerdict> {
    let adv = AdversarySpec::new(adversary);
    Ok(privacy_audit::check_corollary2(&topology.0, modulus(p)?, &adv, &target, &s, &s_prime).map_err(err)?.into())
}

/// Chi-square comparison of simulated adversary views under `s` and `s_prime`.
#[pyfunction]
#[pyo3(signature = (topology, q, adversary, s, s_prime, p=None, target=None, samples=100_000, alpha=0.01, seed=0))]
#[allow(clippy::too_many_arguments)]
fn sampled_view_test(
    py: Python<'_>,
    topology: &PyTopology,
    q: u64,
    adversary: BTreeSet<AgentId>,
    s: Vec<u64>,
    s_prime: Vec<u64>,
    p: Option<u64>,
    target: Option<BTreeSet<AgentId>>,
    samples: usize,
    alpha: f64,
    seed: u64,
) -> PyResult<PyVerdict> {
    let params = ProtocolParams::new(topology.0.n(), q, p).map_err(err)?;
    let mut test = SampledTest::new(topology.0.clone(), params, AdversarySpec::new(adversary), s, s_prime)
        .samples(samples)
        .alpha(alpha)
        .base_seed(seed);
    if let Some(h) = target {
        test = test.target(h);
    }
    let verdict = py.detach(|| privacy_audit::sampled_view_test(&test)).map_err(err)?;
    Ok(verdict.into())
}

#[pymodule]
fn privavg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTopology>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PyVerdict>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_inputs, m)?)?;
    m.add_function(wrap_pyfunction!(check_lemma2, m)?)?;
    m.add_function(wrap_pyfunction!(check_lemma3, m)?)?;
    m.add_function(wrap_pyfunction!(check_theorem1, m)?)?;
    m.add_function(wrap_pyfunction!(check_corollary2, m)?)?;
    m.add_function(wrap_pyfunction!(sampled_view_test, m)?)?;
    Ok(())
}
