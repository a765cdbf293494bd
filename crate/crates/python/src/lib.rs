//! Python bindings. Structured results come back as plain dicts and lists.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;
use vran_core::baselines::{run_baseline_episode, solve_stao, BaselinePolicy};
use vran_core::dqn::DqnAgent;
use vran_core::env::{Action, Environment as CoreEnvironment, TrafficTrace};
use vran_core::harness::{self, ExperimentConfig};
use vran_core::omega::OmegaModel;
use vran_core::{seed, ConfigChoice, Deployment, Error, Split};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::Checkpoint(_) => PyIOError::new_err(e.to_string()),
        Error::InvalidConfig(_)
        | Error::Toml(_)
        | Error::InvalidAction(_)
        | Error::UnknownSplit(_)
        | Error::UnknownConfiguration(_)
        | Error::InvalidProfile(_)
        | Error::DimensionMismatch { .. }
        | Error::EmptyDataset
        | Error::EmptySweep => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(f)) => f.into_pyobject(py)?.into_any(),
            _ => py.None().into_bound(py),
        },
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
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn parse_split(n: usize) -> PyResult<Split> {
    Split::from_index(n).map_err(to_py_err)
}

/// Experiment configuration: a preset plus dotted-key overrides.
#[pyclass(name = "Config", module = "vran", skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (preset = "desk"))]
    fn new(preset: &str) -> PyResult<Self> {
        Ok(Self { inner: ExperimentConfig::preset(preset).map_err(to_py_err)? })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { inner: ExperimentConfig::from_toml_str(text).map_err(to_py_err)? })
    }

    /// Applies `key=value`, e.g. `cfg.set("traffic.stages", "24")`.
    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.apply_override(&format!("{key}={value}")).map_err(to_py_err)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn episodes(&self) -> usize {
        self.inner.episodes
    }

    #[getter]
    fn stages(&self) -> usize {
        self.inner.traffic.stages
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml_string().map_err(to_py_err)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    /// Per-second demand of training episode `episode` (1-based).
    fn training_trace(&self, episode: usize) -> PyResult<Vec<f64>> {
        Ok(harness::training_trace(&self.inner, episode).map_err(to_py_err)?.demands().to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(seed={}, episodes={}, stages={}, hash={})",
            self.inner.seed,
            self.inner.episodes,
            self.inner.traffic.stages,
            &self.inner.hash()[..12]
        )
    }
}

fn trace_from(cfg: &ExperimentConfig, demands: Vec<f64>) -> PyResult<TrafficTrace> {
    TrafficTrace::new(cfg.traffic.seconds_per_stage, demands).map_err(to_py_err)
}

/// One episode of the stage-level environment.
#[pyclass(name = "Environment", module = "vran")]
struct PyEnvironment {
    inner: CoreEnvironment,
}

#[pymethods]
impl PyEnvironment {
    /// `demands` is the per-second trace; `noise_seed` enables utilization noise.
    #[new]
    #[pyo3(signature = (config, demands, noise_seed = None))]
    fn new(config: &PyConfig, demands: Vec<f64>, noise_seed: Option<u64>) -> PyResult<Self> {
        let cfg = &config.inner;
        let params = cfg.env_params().map_err(to_py_err)?;
        let trace = trace_from(cfg, demands)?;
        let noise = noise_seed.map(|s| seed::rng(s, seed::stream::NOISE, 0));
        Ok(Self { inner: CoreEnvironment::new(params, trace, noise).map_err(to_py_err)? })
    }

    fn state<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, self.inner.state())
    }

    #[getter]
    fn stage(&self) -> usize {
        self.inner.stage()
    }

    #[getter]
    fn done(&self) -> bool {
        self.inner.is_done()
    }

    /// Keeps the current deployment.
    fn keep<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let action = Action::keep(self.inner.deployment());
        self.apply(py, action)
    }

    /// Deploys split 1..=4 with the given allocations.
    fn deploy<'py>(&mut self, py: Python<'py>, split: usize, vdu: f64, vcu: f64) -> PyResult<Bound<'py, PyAny>> {
        let action = Action::deploy(parse_split(split)?, vdu, vcu);
        self.apply(py, action)
    }
}

impl PyEnvironment {
    fn apply<'py>(&mut self, py: Python<'py>, action: Action) -> PyResult<Bound<'py, PyAny>> {
        let step = self.inner.step(&action).map_err(to_py_err)?;
        let d = PyDict::new(py);
        d.set_item("demand", step.demand)?;
        d.set_item("cost", to_py(py, &step.cost)?)?;
        d.set_item("outcome", to_py(py, &step.outcome)?)?;
        d.set_item("next_state", to_py(py, &step.next_state)?)?;
        d.set_item("done", step.done)?;
        Ok(d.into_any())
    }
}

/// Demand-to-allocation regressor.
#[pyclass(name = "Omega", module = "vran")]
struct PyOmega {
    inner: OmegaModel,
}

#[pymethods]
impl PyOmega {
    /// Trains on a generated dataset; returns `(model, report)`.
    #[staticmethod]
    fn pretrain<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<(Self, Bound<'py, PyAny>)> {
        let (inner, report) = harness::pretrain_omega(&config.inner).map_err(to_py_err)?;
        Ok((Self { inner }, to_py(py, &report)?))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: OmegaModel::load(&path).map_err(to_py_err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py_err)
    }

    /// Allocation for `split` (1..=4) at `demand`, as `(vdu, vcu)`.
    fn predict(&self, demand: f64, split: usize) -> PyResult<(f64, f64)> {
        let s = parse_split(split)?;
        let prev = Deployment { split: s, vdu: 0.0, vcu: 0.0 };
        Ok(self.inner.predict(demand, ConfigChoice::Deploy(s), &prev))
    }
}

/// Configuration-selection agent.
#[pyclass(name = "Agent", module = "vran")]
struct PyAgent {
    inner: DqnAgent,
}

#[pymethods]
impl PyAgent {
    /// Runs the training loop; returns `(agent, per-episode metrics)`.
    #[staticmethod]
    fn train<'py>(py: Python<'py>, config: &PyConfig, omega: &PyOmega) -> PyResult<(Self, Bound<'py, PyAny>)> {
        let run = harness::run_training(&config.inner, &omega.inner).map_err(to_py_err)?;
        Ok((Self { inner: run.agent }, to_py(py, &run.episodes)?))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: DqnAgent::load(&path).map_err(to_py_err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py_err)
    }

    fn q_values(&self, state: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.q_values(&state).map_err(to_py_err)
    }

    /// Index of the best configuration: 0 keeps, 1..=4 deploy that split.
    fn greedy(&self, state: Vec<f64>) -> PyResult<usize> {
        self.inner.greedy(&state).map_err(to_py_err)
    }

    /// Scaled observation vector the network consumes.
    #[staticmethod]
    fn encode(config: &PyConfig, state: &Bound<'_, PyDict>) -> PyResult<Vec<f64>> {
        let v: Value = pythonish(state)?;
        let s = serde_json::from_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(config.inner.encoder().encode(&s))
    }
}

fn pythonish(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    if obj.is_none() {
        return Ok(Value::Null);
    }
    if let Ok(b) = obj.extract::<bool>() {
        return Ok(Value::Bool(b));
    }
    if let Ok(i) = obj.extract::<i64>() {
        return Ok(Value::from(i));
    }
    if let Ok(f) = obj.extract::<f64>() {
        return Ok(Value::from(f));
    }
    if let Ok(s) = obj.extract::<String>() {
        return Ok(Value::String(s));
    }
    if let Ok(d) = obj.cast::<PyDict>() {
        let mut map = serde_json::Map::new();
        for (k, v) in d.iter() {
            map.insert(k.extract::<String>()?, pythonish(&v)?);
        }
        return Ok(Value::Object(map));
    }
    if let Ok(l) = obj.cast::<PyList>() {
        return l.iter().map(|v| pythonish(&v)).collect::<PyResult<Vec<_>>>().map(Value::Array);
    }
    Err(PyValueError::new_err("unsupported value"))
}

/// Learned policy against both oracles on held-out traces.
#[pyfunction]
fn evaluate<'py>(py: Python<'py>, agent: &PyAgent, omega: &PyOmega, config: &PyConfig) -> PyResult<Bound<'py, PyAny>> {
    let report = harness::run_evaluation(&agent.inner, &omega.inner, &config.inner).map_err(to_py_err)?;
    to_py(py, &report)
}

/// Best fixed deployment for a per-second trace.
#[pyfunction]
fn static_optimum<'py>(py: Python<'py>, config: &PyConfig, demands: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = &config.inner;
    let params = cfg.env_params().map_err(to_py_err)?;
    let sol = solve_stao(&params, &trace_from(cfg, demands)?, &cfg.grid()).map_err(to_py_err)?;
    to_py(py, &sol)
}

/// Replays an oracle policy (`"stao"` or `"dyno"`) over a per-second trace.
#[pyfunction]
fn baseline_episode<'py>(
    py: Python<'py>,
    policy: &str,
    config: &PyConfig,
    demands: Vec<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let policy: BaselinePolicy = policy.parse().map_err(to_py_err)?;
    let cfg = &config.inner;
    let params = cfg.env_params().map_err(to_py_err)?;
    let ep = run_baseline_episode(policy, &params, &trace_from(cfg, demands)?, &cfg.grid()).map_err(to_py_err)?;
    to_py(py, &ep)
}

#[pymodule]
fn vran(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyEnvironment>()?;
    m.add_class::<PyOmega>()?;
    m.add_class::<PyAgent>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(static_optimum, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_episode, m)?)?;
    Ok(())
}
