//! Python bindings: `import pysupermarket`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use supermarket::drift::{exact_drift_q, exact_drift_u, DriftBounds};
use supermarket::model::{self, CoefficientTable};
use supermarket::oracle::{self as exact, CappedChain, Representation};
use supermarket::profile::{self as engine};
use supermarket::rng::{seeded, SimRng};
use supermarket::vector::{self as vec_engine, PairSource, QueueVector};
use supermarket::walk;

fn err(e: supermarket::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// The model tuple (n, d, λ, ε, k); k defaults to k(λ, d).
#[pyclass(name = "Params", frozen, from_py_object)]
#[derive(Clone)]
struct Params(supermarket::Params);

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (n, d, lam, epsilon, k=None))]
    fn new(n: u128, d: u64, lam: f64, epsilon: f64, k: Option<u32>) -> PyResult<Self> {
        let p = match k {
            Some(k) => supermarket::Params::with_k(n, d, lam, epsilon, k),
            None => supermarket::Params::new(n, d, lam, epsilon),
        };
        p.map(Params).map_err(err)
    }

    #[getter]
    fn n(&self) -> u128 {
        self.0.n
    }

    #[getter]
    fn d(&self) -> u64 {
        self.0.d
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon
    }

    #[getter]
    fn k(&self) -> u32 {
        self.0.k
    }

    fn lambda_d(&self) -> f64 {
        self.0.lambda_d()
    }

    /// n(1−λ)(λd)^{j−1}.
    fn level_scale(&self, j: u32) -> f64 {
        self.0.level_scale(j)
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!("Params(n={}, d={}, lam={}, epsilon={}, k={})", p.n, p.d, p.lambda, p.epsilon, p.k)
    }
}

/// A queue-length profile.
#[pyclass(name = "Profile", frozen, from_py_object)]
#[derive(Clone)]
struct Profile(engine::Profile);

#[pymethods]
impl Profile {
    #[staticmethod]
    fn empty(n: u64) -> PyResult<Self> {
        engine::Profile::empty(n).map(Profile).map_err(err)
    }

    #[staticmethod]
    fn from_lengths(lengths: Vec<u32>) -> PyResult<Self> {
        engine::Profile::from_lengths(&lengths).map(Profile).map_err(err)
    }

    /// `tails[j-1]` = number of queues with length ≥ j.
    #[staticmethod]
    fn from_tail_counts(n: u64, tails: Vec<u64>) -> PyResult<Self> {
        engine::Profile::from_tail_counts(n, &tails).map(Profile).map_err(err)
    }

    #[getter]
    fn n(&self) -> u64 {
        self.0.n_queues()
    }

    /// u_j.
    fn tail(&self, j: usize) -> f64 {
        model::Occupancy::tail(&self.0, j)
    }

    /// Number of queues of each length 0, 1, ….
    fn counts(&self) -> Vec<u64> {
        self.0.counts()
    }

    fn max_len(&self) -> usize {
        model::Occupancy::max_len(&self.0)
    }

    fn total(&self) -> u64 {
        self.0.total()
    }

    fn __repr__(&self) -> String {
        format!("Profile(counts={:?})", self.0.counts())
    }
}

/// The profile chain with its own random stream.
#[pyclass(name = "Chain")]
struct Chain {
    chain: engine::ProfileChain,
    rng: SimRng,
    steps: u64,
}

#[pymethods]
impl Chain {
    #[new]
    #[pyo3(signature = (profile, lam, d, seed, cap=None))]
    fn new(profile: &Profile, lam: f64, d: u64, seed: u64, cap: Option<usize>) -> PyResult<Self> {
        let chain = engine::ProfileChain::new(profile.0.clone(), lam, d, cap).map_err(err)?;
        Ok(Chain { chain, rng: seeded(seed), steps: 0 })
    }

    /// Advances `steps` steps with the GIL released.
    fn run(&mut self, py: Python<'_>, steps: u64) {
        let (chain, rng) = (&mut self.chain, &mut self.rng);
        py.detach(|| {
            for _ in 0..steps {
                chain.step(rng);
            }
        });
        self.steps += steps;
    }

    #[getter]
    fn steps(&self) -> u64 {
        self.steps
    }

    fn profile(&self) -> Profile {
        Profile(self.chain.profile().clone())
    }
}

#[pyfunction]
fn k_of(lam: f64, d: u64) -> PyResult<u32> {
    supermarket::k_of(lam, d).map_err(err)
}

/// π(j) for j = 1..=levels.
#[pyfunction]
fn fixed_point(lam: f64, d: u64, levels: usize) -> PyResult<Vec<f64>> {
    let fp = model::FixedPoint::new(lam, d, levels).map_err(err)?;
    Ok((1..=levels).map(|j| fp.pi(j).value).collect())
}

/// 1 − ũ_j for j = 1..=levels.
#[pyfunction]
fn linearized_deficits(lam: f64, d: u64, levels: usize) -> PyResult<Vec<f64>> {
    Ok(model::FixedPoint::new(lam, d, levels).map_err(err)?.tilde_u_deficit)
}

#[pyfunction]
fn beta(lambda_d: f64, k: u32, i: u32) -> f64 {
    model::coefficients::beta(lambda_d, k, i)
}

#[pyfunction]
fn gamma(lambda_d: f64, j: u32, i: u32) -> f64 {
    model::coefficients::gamma(lambda_d, j, i)
}

/// Q_j(x)/n.
#[pyfunction]
fn q_over_n(x: &Profile, j: u32, params: &Params) -> PyResult<f64> {
    let t = CoefficientTable::new(params.0.lambda_d(), params.0.k).map_err(err)?;
    Ok(model::q_over_n(&x.0, j, &t))
}

/// E[u_i(X₁) − u_i(x)] in one step.
#[pyfunction]
fn drift_u(x: &Profile, i: usize, lam: f64, d: u64) -> f64 {
    exact_drift_u(&x.0, i, lam, d)
}

/// E[Q_j(X₁) − Q_j(x)]/n in one step.
#[pyfunction]
fn drift_q(x: &Profile, j: u32, params: &Params) -> PyResult<f64> {
    let t = CoefficientTable::new(params.0.lambda_d(), params.0.k).map_err(err)?;
    Ok(exact_drift_q(&x.0, j, &t, params.0.lambda, params.0.d))
}

/// Every drift bound at x, as dicts with exact value, bounds and verdict.
#[pyfunction]
fn drift_bounds<'py>(py: Python<'py>, x: &Profile, params: &Params) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let b = DriftBounds::new(&params.0).map_err(err)?;
    b.all(&x.0)
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("functional", &r.functional)?;
            d.set_item("exact", r.exact)?;
            d.set_item("lower", r.lower)?;
            d.set_item("upper", r.upper)?;
            d.set_item("satisfied", r.satisfied())?;
            Ok(d)
        })
        .collect()
}

/// Overall verdict, the reasons it fails and each comparison.
#[pyfunction]
fn regime_check<'py>(py: Python<'py>, params: &Params) -> PyResult<Bound<'py, PyDict>> {
    let rep = model::regime_check(&params.0);
    let d = PyDict::new(py);
    d.set_item("overall", rep.overall)?;
    d.set_item("transitional", rep.transitional)?;
    d.set_item("diagnosis", rep.diagnosis())?;
    let rows: Vec<(&str, String, String, bool)> =
        rep.hypotheses.iter().chain(&rep.derived).map(|c| (c.name, c.lhs.clone(), c.rhs.clone(), c.holds)).collect();
    d.set_item("comparisons", rows)?;
    Ok(d)
}

/// Time-averaged u_1..u_levels after a burn-in, from the given start.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (start, lam, d, burn_in, steps, levels, seed))]
fn time_average(
    py: Python<'_>,
    start: &Profile,
    lam: f64,
    d: u64,
    burn_in: u64,
    steps: u64,
    levels: usize,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let mut chain = engine::ProfileChain::new(start.0.clone(), lam, d, None).map_err(err)?;
    Ok(py.detach(|| engine::time_average(&mut chain, burn_in, steps, levels, seed)).tail)
}

/// Coalescence times of adjacent pairs taken after a burn-in from `start`;
/// None where a pair had not met by the horizon.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (start, lam, d, replicas, horizon, seed, burn_in=100_000))]
fn coalescence_times(
    py: Python<'_>,
    start: &Profile,
    lam: f64,
    d: u64,
    replicas: usize,
    horizon: u64,
    seed: u64,
    burn_in: u64,
) -> PyResult<Vec<Option<u64>>> {
    let source = PairSource::AdjacentAfterBurnIn { base: QueueVector::from_profile(&start.0), burn_in };
    let stats = py.detach(|| vec_engine::coalescence_stats(d, lam, &source, replicas, horizon, seed)).map_err(err)?;
    Ok(stats.times)
}

/// Mean Q_k trajectory and the pooled per-step increment inside ℋ^{3ε}.
#[pyfunction]
fn relaxation<'py>(
    py: Python<'py>,
    params: &Params,
    replicas: usize,
    record_every: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = py.detach(|| vec_engine::relaxation_experiment(&params.0, replicas, record_every, seed)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("feasible", rep.feasible)?;
    d.set_item("trajectory", rep.trajectory.clone())?;
    d.set_item("mean_increment", rep.mean_increment)?;
    d.set_item("stderr", rep.stderr)?;
    d.set_item("ceiling", rep.ceiling)?;
    d.set_item("within_ceiling", rep.within_ceiling())?;
    Ok(d)
}

/// Exact stationary law of the capped profile chain: (states, probabilities).
#[pyfunction]
fn stationary(n: usize, cap: u32, d: u32, lam: f64) -> PyResult<(Vec<Vec<u32>>, Vec<f64>)> {
    let chain = CappedChain::build(n, cap, d, lam, Representation::Profile).map_err(err)?;
    let pi = exact::stationary(&chain).map_err(err)?;
    Ok(((0..chain.len()).map(|i| chain.state(i).to_vec()).collect(), pi))
}

/// P(a walk with drift −v leaves [−b, a) upwards), closed form.
#[pyfunction]
fn crossing_probability(v: f64, a: f64, b: f64) -> f64 {
    walk::crossing_gamblers_ruin(v, a, b)
}

#[pymodule]
mod pysupermarket {
    #[pymodule_export]
    use super::{
        beta, coalescence_times, crossing_probability, drift_bounds, drift_q, drift_u, fixed_point, gamma, k_of,
        linearized_deficits, q_over_n, regime_check, relaxation, stationary, time_average, Chain, Params, Profile,
    };
}
