//! Python bindings: sessions driven turn by turn, the scripted student, and
//! a few genome and fitness helpers. Structured results cross the boundary
//! as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;
use socratic_ga::events::write_jsonl;
use socratic_ga::genome::seeded_rng;
use socratic_ga::metrics::compute;
use socratic_ga::stores::KnownsStore;
use socratic_ga::{
    Answer, Chromosome, Domain, Error, GaConfig, Mode, ProblemScript, Prompt, QuadTuple,
    ScriptedStudent, Session, SessionStatus, Turn, VariableId,
};

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidConfig(_)
        | Error::AnswerShape(_)
        | Error::ScriptParse { .. }
        | Error::SchemaViolation(_)
        | Error::MalformedChromosome { .. }
        | Error::NoPendingPrompt => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Converts any serializable value into Python objects through JSON.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(PyModule::import(py, "json")?
        .call_method1("loads", (text,))?
        .unbind())
}

fn from_py<T: serde::de::DeserializeOwned>(
    py: Python<'_>,
    value: &Bound<'_, PyAny>,
) -> PyResult<T> {
    let text: String = PyModule::import(py, "json")?
        .call_method1("dumps", (value,))?
        .extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn status_str(s: SessionStatus) -> &'static str {
    match s {
        SessionStatus::Running => "running",
        SessionStatus::Solved => "solved",
        SessionStatus::Exhausted => "exhausted",
        SessionStatus::Aborted => "aborted",
    }
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    mode.parse().map_err(err)
}

fn config(population_size: usize, max_generations: u32, mode: &str) -> PyResult<GaConfig> {
    let c = GaConfig {
        population_size,
        max_generations,
        mode: parse_mode(mode)?,
        ..GaConfig::default()
    };
    c.validate().map_err(err)?;
    Ok(c)
}

fn script(problem: Option<&str>) -> PyResult<ProblemScript> {
    match problem {
        Some(text) => socratic_ga::load_script(text).map_err(err),
        None => Ok(ProblemScript::car()),
    }
}

/// A tutoring session. Call `poll()` for the next turn and `respond()` to
/// answer a question.
#[pyclass(name = "Session", module = "socratic_tutor")]
struct PySession {
    inner: Session,
}

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (seed=1, population_size=50, max_generations=500, mode="ga", target=None))]
    fn new(
        seed: u64,
        population_size: usize,
        max_generations: u32,
        mode: &str,
        target: Option<&str>,
    ) -> PyResult<Self> {
        let mut inner = Session::new(
            config(population_size, max_generations, mode)?,
            seed,
            Domain::bundled(),
        )
        .map_err(err)?;
        if let Some(t) = target {
            inner = inner.with_target_variable(t.parse::<VariableId>().map_err(err)?);
        }
        Ok(PySession { inner })
    }

    /// `{"turn": "say"|"ask", "prompt": {...}}` or `{"turn": "finished", "status": ...}`.
    fn poll(&mut self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let turn = self.inner.poll().map_err(err)?;
        let value = match turn {
            Turn::Say(p) => serde_json::json!({ "turn": "say", "prompt": p }),
            Turn::Ask(p) => serde_json::json!({ "turn": "ask", "prompt": p }),
            Turn::Finished(s) => serde_json::json!({ "turn": "finished", "status": status_str(s) }),
        };
        to_py(py, &value)
    }

    /// Answers the pending question. Yes/no questions need `affirmative`.
    #[pyo3(signature = (text, affirmative=None))]
    fn respond(&mut self, text: &str, affirmative: Option<bool>) -> PyResult<()> {
        let answer = match affirmative {
            Some(a) => Answer {
                text: text.to_string(),
                affirmative: Some(a),
            },
            None => Answer::from_line(text),
        };
        self.inner.respond(answer).map_err(err)
    }

    #[getter]
    fn status(&self) -> &'static str {
        status_str(self.inner.status())
    }

    #[getter]
    fn generation(&self) -> u32 {
        self.inner.generation()
    }

    fn knowns(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let rows: Vec<_> = self.inner.stores().knowns.iter().collect();
        to_py(py, &rows)
    }

    fn events(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.events())
    }

    fn events_jsonl(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        write_jsonl(self.inner.events(), &mut buf).map_err(err)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn metrics(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &compute(self.inner.events()).map_err(err)?)
    }

    /// Serialized session state; restore with `Session.from_json`.
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(|inner| PySession { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

/// Answers prompts from a problem script (the bundled car problem by default).
#[pyclass(name = "ScriptedStudent", module = "socratic_tutor")]
struct PyScriptedStudent {
    inner: ScriptedStudent,
}

#[pymethods]
impl PyScriptedStudent {
    #[new]
    #[pyo3(signature = (problem=None))]
    fn new(problem: Option<&str>) -> PyResult<Self> {
        Ok(PyScriptedStudent {
            inner: ScriptedStudent::new(script(problem)?),
        })
    }

    /// Takes a prompt dict as returned by `Session.poll()` and returns
    /// `{"text": ..., "affirmative": ...}`.
    fn answer(&mut self, py: Python<'_>, prompt: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
        let prompt: Prompt = from_py(py, prompt)?;
        to_py(py, &self.inner.answer(&prompt).map_err(err)?)
    }
}

/// Runs a scripted session to the end; returns status, generations and metrics.
#[pyfunction]
#[pyo3(signature = (seed=1, mode="ga", population_size=50, max_generations=500, problem=None))]
fn run_scripted(
    py: Python<'_>,
    seed: u64,
    mode: &str,
    population_size: usize,
    max_generations: u32,
    problem: Option<&str>,
) -> PyResult<Py<PyAny>> {
    let script = script(problem)?;
    let config = config(population_size, max_generations, mode)?;
    let (session, metrics) = py
        .detach(|| socratic_ga::run_scripted(&script, config, seed, Domain::bundled()))
        .map_err(err)?;
    to_py(
        py,
        &serde_json::json!({
            "status": status_str(session.status()),
            "generations": session.generation(),
            "knowns": session.stores().knowns.len(),
            "metrics": metrics,
        }),
    )
}

#[pyfunction]
fn encode_tuple(n: u8, e: u8, v: u8, z: u8) -> PyResult<u16> {
    if [n, e, v, z].iter().any(|f| *f > 7) {
        return Err(PyValueError::new_err("tuple fields must lie in 0..=7"));
    }
    Ok(QuadTuple::new(n, e, v, z).encode())
}

#[pyfunction]
fn decode_tuple(word: u16) -> PyResult<(u8, u8, u8, u8)> {
    if word >= 4096 {
        return Err(PyValueError::new_err("a tuple word has 12 bits"));
    }
    let t = QuadTuple::decode(word);
    Ok((t.n, t.e, t.v, t.z))
}

/// Fitness of a random chromosome of `bits` bits against an empty store.
#[pyfunction]
#[pyo3(signature = (seed, bits=12_000))]
fn empty_store_fitness(seed: u64, bits: usize) -> PyResult<u32> {
    let config = GaConfig {
        chromosome_bits: bits,
        ..GaConfig::default()
    };
    config.validate().map_err(err)?;
    let c = Chromosome::random(bits, &mut seeded_rng(seed)).map_err(err)?;
    socratic_ga::fitness(&c, &KnownsStore::new(), &config, &Domain::bundled())
        .map(|r| r.value)
        .map_err(err)
}

#[pymodule]
fn socratic_tutor(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySession>()?;
    m.add_class::<PyScriptedStudent>()?;
    m.add_function(wrap_pyfunction!(run_scripted, m)?)?;
    m.add_function(wrap_pyfunction!(encode_tuple, m)?)?;
    m.add_function(wrap_pyfunction!(decode_tuple, m)?)?;
    m.add_function(wrap_pyfunction!(empty_store_fitness, m)?)?;
    Ok(())
}
