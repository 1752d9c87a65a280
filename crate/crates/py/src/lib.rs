//! Python bindings for the biphoton toolkit.
//!
//! Exposes the solver, the probability tables, the inequality audits, the
//! deterministic-strategy enumeration, the Monte Carlo sampler, and the
//! interaction-free measurement figures. Report-like results cross the
//! boundary as plain dicts mirroring the CLI's JSON schemas.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use biphoton::hardy::{self, HardyConfiguration, HardySolution};
use biphoton::optics::{JointProbabilityTable, OpticalSetting, SettingPair};
use biphoton::{bell, cli, closed_form, events, ifm, lhv};

fn to_py_err(err: biphoton::Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn json_to_py<'py>(py: Python<'py>, value: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match value {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any()
            }
        }
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize_to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let json = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &json)
}

fn build_config(
    t1_prime: f64,
    r2_prime: f64,
    u_prime: f64,
    phi0: f64,
    n1: i64,
    n2: i64,
    n3: i64,
) -> PyResult<HardyConfiguration> {
    HardyConfiguration {
        t1_prime,
        r2_prime,
        u_prime,
        phi0,
        n1,
        n2,
        n3,
    }
    .validated()
    .map_err(to_py_err)
}

/// A solved set of interferometer settings satisfying the three
/// zero-coincidence conditions with a nonzero target coincidence.
#[pyclass(name = "Solution", module = "biphoton_py")]
struct Solution {
    inner: HardySolution,
}

#[pymethods]
impl Solution {
    #[getter]
    fn u(&self) -> f64 {
        self.inner.u
    }

    #[getter]
    fn hardy_probability(&self) -> f64 {
        self.inner.hardy_probability
    }

    #[getter]
    fn subensemble_fraction(&self) -> f64 {
        self.inner.subensemble_fraction
    }

    /// Splitter coefficient pairs, keyed "1", "1p", "2", "2p".
    #[getter]
    fn splitters<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let s = &self.inner;
        let dict = PyDict::new(py);
        dict.set_item("1", (s.r1, s.t1))?;
        dict.set_item("1p", (s.r1_prime, s.t1_prime))?;
        dict.set_item("2", (s.r2, s.t2))?;
        dict.set_item("2p", (s.r2_prime, s.t2_prime))?;
        Ok(dict.into_any())
    }

    /// Phases (phi1, phi2, phi1', phi2').
    #[getter]
    fn phases(&self) -> (f64, f64, f64, f64) {
        let p = &self.inner.phases;
        (p.phi1, p.phi2, p.phi1_prime, p.phi2_prime)
    }

    /// Joint probability tables for the four configurations, keyed by
    /// configuration label.
    fn tables<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let dict = PyDict::new(py);
        for (pair, table) in SettingPair::ALL.iter().zip(self.inner.tables()) {
            dict.set_item(pair.label(), serialize_to_py(py, &table)?)?;
        }
        Ok(dict.into_any())
    }

    /// Every analytic inequality report for this solution.
    fn audit<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let audit = cli::audit_solution(&self.inner).map_err(to_py_err)?;
        let dict = PyDict::new(py);
        dict.set_item(
            "ch_postselected",
            serialize_to_py(py, &audit.ch_postselected)?,
        )?;
        dict.set_item("ch_total", serialize_to_py(py, &audit.ch_total)?)?;
        dict.set_item("ch_simplified", serialize_to_py(py, &audit.ch_simplified)?)?;
        for (key, (correlations, report)) in [
            ("chsh_unnormalised", &audit.chsh_unnormalised),
            ("chsh_normalised", &audit.chsh_normalised),
            ("chsh_conditional", &audit.chsh_conditional),
        ] {
            let entry = PyDict::new(py);
            entry.set_item("correlations", serialize_to_py(py, correlations)?)?;
            entry.set_item("report", serialize_to_py(py, report)?)?;
            dict.set_item(key, entry)?;
        }
        Ok(dict.into_any())
    }

    /// Seeded Monte Carlo run over this solution's tables; returns the
    /// summary (counts, frequencies, empirical inequality margins).
    #[pyo3(signature = (trials, seed=0, weights=None))]
    fn sample_summary<'py>(
        &self,
        py: Python<'py>,
        trials: u64,
        seed: u64,
        weights: Option<[f64; 4]>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let (_, summary) = events::run_summary(
            &self.inner.tables(),
            trials,
            seed,
            weights.unwrap_or([1.0; 4]),
        )
        .map_err(to_py_err)?;
        serialize_to_py(py, &summary)
    }

    /// Full solution record as a dict (same schema as the CLI JSON).
    fn as_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serialize_to_py(py, &self.inner)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(t1_prime={}, r2_prime={}, u={}, hardy_probability={})",
            self.inner.t1_prime, self.inner.r2_prime, self.inner.u, self.inner.hardy_probability
        )
    }
}

/// Solve the zero-coincidence constraint system.
#[pyfunction]
#[pyo3(signature = (t1_prime, r2_prime, u_prime=1.0, phi0=0.0, n1=1, n2=1, n3=1))]
#[allow(clippy::too_many_arguments)]
fn solve(
    t1_prime: f64,
    r2_prime: f64,
    u_prime: f64,
    phi0: f64,
    n1: i64,
    n2: i64,
    n3: i64,
) -> PyResult<Solution> {
    let config = build_config(t1_prime, r2_prime, u_prime, phi0, n1, n2, n3)?;
    Ok(Solution {
        inner: hardy::solve(&config).map_err(to_py_err)?,
    })
}

/// Solve the symmetric configuration t1' = r2' = q.
#[pyfunction]
#[pyo3(signature = (q, u_prime=1.0, phi0=0.0, n1=1, n2=1, n3=1))]
fn solve_diagonal(
    q: f64,
    u_prime: f64,
    phi0: f64,
    n1: i64,
    n2: i64,
    n3: i64,
) -> PyResult<Solution> {
    solve(q, q, u_prime, phi0, n1, n2, n3)
}

/// Joint probability table for explicit settings (phase, reflectivity per
/// side, absorber transmission on side 2).
#[pyfunction]
#[pyo3(signature = (phi1, r1, phi2, r2, u=1.0))]
fn joint_probabilities<'py>(
    py: Python<'py>,
    phi1: f64,
    r1: f64,
    phi2: f64,
    r2: f64,
    u: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let s1 = OpticalSetting::side1(phi1, r1).map_err(to_py_err)?;
    let s2 = OpticalSetting::side2(phi2, r2, u).map_err(to_py_err)?;
    serialize_to_py(py, &closed_form::joint_probability_table(&s1, &s2))
}

/// Side-2 single detection probabilities (P(L2), P(U2), P(A2)).
#[pyfunction]
fn single_detection_probabilities(r2: f64, u: f64) -> PyResult<(f64, f64, f64)> {
    let s2 = OpticalSetting::side2(0.0, r2, u).map_err(to_py_err)?;
    let p = closed_form::single_detection_probs(&s2);
    Ok((p.p_l2, p.p_u2, p.p_a2))
}

/// Phases (phi1, phi2, phi1', phi2') fixed by the offset and odd integers.
#[pyfunction]
fn assign_phases(phi0: f64, n1: i64, n2: i64, n3: i64) -> PyResult<(f64, f64, f64, f64)> {
    let p = hardy::assign_phases(phi0, n1, n2, n3).map_err(to_py_err)?;
    Ok((p.phi1, p.phi2, p.phi1_prime, p.phi2_prime))
}

/// Standard-apparatus report: the zero conditions force the target
/// coincidence to vanish and the correlations to saturate the bound.
#[pyfunction]
#[pyo3(signature = (n1=1, n2=1, n3=1))]
fn check_standard_setup<'py>(
    py: Python<'py>,
    n1: i64,
    n2: i64,
    n3: i64,
) -> PyResult<Bound<'py, PyAny>> {
    serialize_to_py(
        py,
        &hardy::check_standard_infeasibility(n1, n2, n3).map_err(to_py_err)?,
    )
}

/// Grid-search maximum of the target coincidence; returns
/// ((t1_prime, r2_prime), value).
#[pyfunction]
#[pyo3(signature = (resolution=100))]
fn maximize_hardy(resolution: usize) -> PyResult<((f64, f64), f64)> {
    let (config, value) = hardy::maximize_hardy(resolution).map_err(to_py_err)?;
    Ok(((config.t1_prime, config.r2_prime), value))
}

/// Exhaustive deterministic-strategy audit plus the postselection
/// violation exhibit.
#[pyfunction]
fn lhv_report(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    let report = lhv::verify_ch_total_all();
    let (strategy, postselected) = lhv::find_postselected_violation();
    let dict = PyDict::new(py);
    dict.set_item("strategy_count", report.vertices.len())?;
    dict.set_item("max_ch_total_margin", report.max_ch_total_margin)?;
    dict.set_item("max_postselected_margin", report.max_postselected_margin)?;
    dict.set_item("vertices", serialize_to_py(py, &report.vertices)?)?;
    let exhibit = PyDict::new(py);
    exhibit.set_item("strategy", serialize_to_py(py, &strategy)?)?;
    exhibit.set_item("postselected", serialize_to_py(py, &postselected)?)?;
    dict.set_item("violation_exhibit", exhibit)?;
    Ok(dict.into_any())
}

/// Interaction-free measurement figures at one (u, r2) point.
#[pyfunction]
fn ifm_report(py: Python<'_>, u: f64, r2: f64) -> PyResult<Bound<'_, PyAny>> {
    serialize_to_py(py, &ifm::ifm_efficiency(u, r2).map_err(to_py_err)?)
}

/// Dark-coincidence probability; returns (value, is_supremum).
#[pyfunction]
fn dark_coincidence(u: f64, r2: f64) -> PyResult<(f64, bool)> {
    let p = ifm::dark_coincidence_prob(u, r2).map_err(to_py_err)?;
    Ok((p.limiting_value(), p.is_supremum()))
}

/// Correlation-bound audit for four tables given as dicts (in configuration
/// order); `normalised` refers them to the drained-source intensity.
#[pyfunction]
#[pyo3(signature = (tables, normalised=false))]
fn chsh<'py>(
    py: Python<'py>,
    tables: Vec<Bound<'py, PyAny>>,
    normalised: bool,
) -> PyResult<Bound<'py, PyAny>> {
    if tables.len() != 4 {
        return Err(PyValueError::new_err("chsh needs exactly 4 tables"));
    }
    let table_from_dict = |d: &Bound<'py, PyAny>| -> PyResult<JointProbabilityTable> {
        Ok(JointProbabilityTable {
            p_l1_l2: d.get_item("p_l1_l2")?.extract()?,
            p_l1_u2: d.get_item("p_l1_u2")?.extract()?,
            p_l1_a2: d.get_item("p_l1_a2")?.extract()?,
            p_u1_l2: d.get_item("p_u1_l2")?.extract()?,
            p_u1_u2: d.get_item("p_u1_u2")?.extract()?,
            p_u1_a2: d.get_item("p_u1_a2")?.extract()?,
        })
    };
    let array = [
        table_from_dict(&tables[0])?,
        table_from_dict(&tables[1])?,
        table_from_dict(&tables[2])?,
        table_from_dict(&tables[3])?,
    ];
    let (correlations, report) = bell::chsh(&array, normalised).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("correlations", serialize_to_py(py, &correlations)?)?;
    out.set_item("report", serialize_to_py(py, &report)?)?;
    Ok(out.into_any())
}

/// Event records as a list of (trial, pair, outcome1, outcome2) tuples.
#[pyfunction]
#[pyo3(signature = (t1_prime, r2_prime, trials, seed=0, u_prime=1.0))]
fn sample_events(
    t1_prime: f64,
    r2_prime: f64,
    trials: u64,
    seed: u64,
    u_prime: f64,
) -> PyResult<Vec<(u64, String, String, String)>> {
    let config = build_config(t1_prime, r2_prime, u_prime, 0.0, 1, 1, 1)?;
    let solution = hardy::solve(&config).map_err(to_py_err)?;
    let records = events::sample_events(&solution, trials, seed, [1.0; 4]).map_err(to_py_err)?;
    Ok(records
        .into_iter()
        .map(|e| {
            (
                e.trial,
                e.pair.label().to_string(),
                e.outcome1.to_string(),
                e.outcome2.to_string(),
            )
        })
        .collect())
}

/// RNG scheme identifier recorded in run summaries.
#[pyfunction]
fn rng_algorithm_id() -> &'static str {
    events::RNG_ALGORITHM_ID
}

#[pymodule]
fn biphoton_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_diagonal, m)?)?;
    m.add_function(wrap_pyfunction!(joint_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(single_detection_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(assign_phases, m)?)?;
    m.add_function(wrap_pyfunction!(check_standard_setup, m)?)?;
    m.add_function(wrap_pyfunction!(maximize_hardy, m)?)?;
    m.add_function(wrap_pyfunction!(lhv_report, m)?)?;
    m.add_function(wrap_pyfunction!(ifm_report, m)?)?;
    m.add_function(wrap_pyfunction!(dark_coincidence, m)?)?;
    m.add_function(wrap_pyfunction!(chsh, m)?)?;
    m.add_function(wrap_pyfunction!(sample_events, m)?)?;
    m.add_function(wrap_pyfunction!(rng_algorithm_id, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
