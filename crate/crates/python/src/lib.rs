//! Python bindings for the samplers, certificates and diagnostics.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gibbs_scan::diagnostics::{self, RatioError};
use gibbs_scan::drift::{
    self, DriftCertificate, DriftTarget, MomentBounds, MomentContract, TransferCertificate,
};
use gibbs_scan::models::{
    nn_act_oracle, nn_conditionals, nn_contract, nn_lag1_correlation, ri_contract,
    NormalNormalParams, RandomIntercept, RandomInterceptParams,
};
use gibbs_scan::{ConditionalPair, JointState, RngStream, ScanStrategy};

fn to_py(err: gibbs_scan::Error) -> PyErr {
    if err.is_argument_error() {
        PyValueError::new_err(err.to_string())
    } else {
        PyRuntimeError::new_err(err.to_string())
    }
}

fn parse_strategy(spec: &str) -> PyResult<ScanStrategy> {
    spec.parse().map_err(to_py)
}

/// A scan order: "cgs", "cgs-y", "rqgs:<q>" or "rsgs:<p>".
#[pyclass(name = "Strategy", frozen)]
struct PyStrategy {
    inner: ScanStrategy,
}

#[pymethods]
impl PyStrategy {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Self {
            inner: parse_strategy(spec)?,
        })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().abbreviation()
    }

    #[getter]
    fn probability(&self) -> Option<f64> {
        self.inner.probability()
    }

    fn __repr__(&self) -> String {
        format!("Strategy('{}')", self.inner)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

fn cert_dict<'py>(py: Python<'py>, c: &DriftCertificate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("strategy", c.strategy.to_string())?;
    d.set_item("lambda", c.lambda)?;
    d.set_item("b", c.b)?;
    d.set_item("v", c.v)?;
    d.set_item("coef_f", c.coef_f)?;
    d.set_item("coef_g", c.coef_g)?;
    Ok(d)
}

fn transfer_dict<'py>(py: Python<'py>, t: &TransferCertificate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("lambda", t.lambda_tilde)?;
    d.set_item("b", t.b_tilde)?;
    d.set_item("v", t.v)?;
    d.set_item("w", t.w)?;
    d.set_item("source_lambda", t.source.lambda)?;
    d.set_item("recipe", t.recipe.to_string())?;
    Ok(d)
}

fn certificate_for(bounds: &MomentBounds, strategy: &ScanStrategy) -> PyResult<DriftCertificate> {
    match *strategy {
        ScanStrategy::Composition { x_first: true } => drift::certificate_cgs(bounds),
        ScanStrategy::Composition { x_first: false } => {
            return Err(PyValueError::new_err(
                "certificates are stated for the x-first composition scan",
            ))
        }
        ScanStrategy::RandomSequence { q } => drift::certificate_rqgs(bounds, q),
        ScanStrategy::RandomScan { p } => drift::certificate_rsgs(bounds, p),
    }
    .map_err(to_py)
}

/// Drift certificate for `strategy` from the contract constants.
#[pyfunction]
fn certify<'py>(
    py: Python<'py>,
    j: f64,
    k: f64,
    m: f64,
    n: f64,
    strategy: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let bounds = MomentBounds::new(j, k, m, n).map_err(to_py)?;
    cert_dict(py, &certificate_for(&bounds, &parse_strategy(strategy)?)?)
}

/// `(cgs, rqgs, rsgs_two_step, rsgs, ordered)` rates for one `(jm, q, p)`.
#[pyfunction]
fn rate_ordering(jm: f64, q: f64, p: f64) -> PyResult<(f64, f64, f64, f64, bool)> {
    let bounds = MomentBounds::new(jm, 1.0, 1.0, 1.0).map_err(to_py)?;
    let r = drift::rate_ordering(&bounds, q, p).map_err(to_py)?;
    Ok((r.cgs, r.rqgs, r.rsgs_two_step, r.rsgs, r.ordered))
}

/// Composition-scan certificate transferred from a random strategy's.
#[pyfunction]
fn transfer<'py>(
    py: Python<'py>,
    j: f64,
    k: f64,
    m: f64,
    n: f64,
    strategy: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let bounds = MomentBounds::new(j, k, m, n).map_err(to_py)?;
    let cert = certificate_for(&bounds, &parse_strategy(strategy)?)?;
    transfer_dict(py, &drift::transfer_from_certificate(&cert).map_err(to_py)?)
}

enum Target {
    NormalNormal(NormalNormalParams),
    RandomIntercept(RandomIntercept, RandomInterceptParams),
}

/// A two-component target with closed-form conditionals.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    target: Target,
}

impl PyModel {
    fn cond(&self) -> Box<dyn ConditionalPair + '_> {
        match &self.target {
            Target::NormalNormal(p) => Box::new(nn_conditionals(*p)),
            Target::RandomIntercept(m, _) => Box::new(m.clone()),
        }
    }

    fn contract(&self) -> MomentContract {
        match &self.target {
            Target::NormalNormal(p) => nn_contract(p),
            Target::RandomIntercept(_, p) => ri_contract(p),
        }
    }

    fn state(&self, x: Option<Vec<f64>>, y: Option<Vec<f64>>) -> PyResult<JointState> {
        let (dx, dy) = {
            let c = self.cond();
            (c.dim_x(), c.dim_y())
        };
        let default_x = match self.target {
            Target::NormalNormal(_) => vec![0.0; dx],
            Target::RandomIntercept(..) => vec![1.0; dx],
        };
        JointState::new(x.unwrap_or(default_x), y.unwrap_or_else(|| vec![0.0; dy])).map_err(to_py)
    }
}

#[pymethods]
impl PyModel {
    /// Normal-Normal model with `n` observations.
    #[staticmethod]
    fn normal_normal(n: usize, theta2: f64, tau2: f64) -> PyResult<Self> {
        Ok(Self {
            target: Target::NormalNormal(NormalNormalParams::new(n, theta2, tau2).map_err(to_py)?),
        })
    }

    /// Preset 1 (`tau2 = 1`) or 2 (`tau2 = 0.1`), both with `N = 10`, `theta2 = 1`.
    #[staticmethod]
    fn setting(id: u8) -> PyResult<Self> {
        Ok(Self {
            target: Target::NormalNormal(NormalNormalParams::setting(id).map_err(to_py)?),
        })
    }

    /// Balanced random-intercept model on synthetic data.
    #[staticmethod]
    fn random_intercept(
        subjects: usize,
        per_subject: usize,
        regressors: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let params = RandomInterceptParams::synthetic(subjects, per_subject, regressors, seed)
            .map_err(to_py)?;
        Ok(Self {
            target: Target::RandomIntercept(RandomIntercept::new(params.clone()), params),
        })
    }

    /// Random-intercept model from a `subject_id,response,x1,...` file.
    #[staticmethod]
    fn random_intercept_csv(path: &str) -> PyResult<Self> {
        let params = RandomInterceptParams::from_csv_path(path).map_err(to_py)?;
        Ok(Self {
            target: Target::RandomIntercept(RandomIntercept::new(params.clone()), params),
        })
    }

    #[getter]
    fn dims(&self) -> (usize, usize) {
        let c = self.cond();
        (c.dim_x(), c.dim_y())
    }

    /// Contract constants `(j, k, m, n)`.
    #[getter]
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let b = self.contract().bounds;
        (b.j, b.k, b.m, b.n)
    }

    /// Composition-scan lag-one autocorrelation and ACT of the y sub-chain
    /// (Normal-Normal only).
    fn oracle(&self) -> PyResult<(f64, f64)> {
        match &self.target {
            Target::NormalNormal(p) => Ok((nn_lag1_correlation(p), nn_act_oracle(p))),
            Target::RandomIntercept(..) => Err(PyValueError::new_err(
                "no closed-form oracle for this model",
            )),
        }
    }

    /// Runs a chain and returns `(xs, ys)`, one list per stored state.
    #[pyo3(signature = (strategy, iterations, seed=0, stream=0, thin=1, x0=None, y0=None))]
    #[allow(clippy::too_many_arguments, clippy::type_complexity)]
    fn run(
        &self,
        py: Python<'_>,
        strategy: &str,
        iterations: usize,
        seed: u64,
        stream: u64,
        thin: usize,
        x0: Option<Vec<f64>>,
        y0: Option<Vec<f64>>,
    ) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let s = parse_strategy(strategy)?;
        let init = self.state(x0, y0)?;
        let chain = py
            .detach(|| {
                gibbs_scan::run_thinned(
                    &init,
                    iterations,
                    &s,
                    self.cond().as_ref(),
                    &RngStream::new(seed, stream),
                    thin,
                )
            })
            .map_err(to_py)?;
        Ok(chain.states.into_iter().map(|s| (s.x, s.y)).unzip())
    }

    /// Per-replicate averages of `y[index]` from the default initial state.
    #[pyo3(signature = (strategy, iterations, replicates, seed=0, index=0))]
    fn replicate_means(
        &self,
        py: Python<'_>,
        strategy: &str,
        iterations: usize,
        replicates: usize,
        seed: u64,
        index: usize,
    ) -> PyResult<Vec<f64>> {
        let s = parse_strategy(strategy)?;
        let init = self.state(None, None)?;
        if index >= init.y.len() {
            return Err(PyValueError::new_err("index out of range for y"));
        }
        py.detach(|| {
            diagnostics::replicate_means(
                self.cond().as_ref(),
                &s,
                &init,
                iterations,
                replicates,
                &RngStream::new(seed, 0),
                |st| st.y[index],
            )
        })
        .map_err(to_py)
    }

    /// Checks the strategy's drift certificate (or, with `transfer`, the
    /// composition-scan certificate transferred from it) at states along a
    /// composition-scan pilot run. Returns the fraction of probes passing.
    #[pyo3(signature = (strategy, probes=50, mc_samples=10_000, seed=0, transfer=false))]
    fn verify_drift(
        &self,
        py: Python<'_>,
        strategy: &str,
        probes: usize,
        mc_samples: usize,
        seed: u64,
        transfer: bool,
    ) -> PyResult<f64> {
        let s = parse_strategy(strategy)?;
        let contract = self.contract();
        let cert = certificate_for(&contract.bounds, &s)?;
        let init = self.state(None, None)?;
        let cond = self.cond();
        py.detach(|| {
            let pilot = gibbs_scan::run_thinned(
                &init,
                probes.max(1) * 10,
                &ScanStrategy::composition(),
                cond.as_ref(),
                &RngStream::new(seed, 1),
                10,
            )?;
            let states = &pilot.states[1..];
            let rng = RngStream::new(seed, 2);
            let report = if transfer {
                let t = drift::transfer_from_certificate(&cert)?;
                drift::verify_drift(
                    DriftTarget::Transfer {
                        certificate: &t,
                        source: &cert,
                    },
                    cond.as_ref(),
                    &contract,
                    states,
                    mc_samples,
                    &rng,
                )?
            } else {
                drift::verify_drift(
                    DriftTarget::Certificate(&cert),
                    cond.as_ref(),
                    &contract,
                    states,
                    mc_samples,
                    &rng,
                )?
            };
            Ok(report.pass_fraction)
        })
        .map_err(to_py)
    }
}

/// `{mean, sigma2_hat, batch_size, batch_count, n_star, ci_half_width}`.
#[pyfunction]
fn batch_means<'py>(py: Python<'py>, values: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let est = diagnostics::batch_means(&values).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("mean", est.mean)?;
    d.set_item("sigma2_hat", est.sigma2_hat)?;
    d.set_item("batch_size", est.batch_size)?;
    d.set_item("batch_count", est.batch_count)?;
    d.set_item("n_star", est.n_star)?;
    d.set_item("ci_half_width", diagnostics::ci95(&est).half_width)?;
    Ok(d)
}

#[pyfunction]
fn act_hat(values: Vec<f64>, var_marginal: f64) -> PyResult<f64> {
    let est = diagnostics::batch_means(&values).map_err(to_py)?;
    diagnostics::act_hat(&est, var_marginal).map_err(to_py)
}

#[pyfunction]
fn lag1_autocorrelation(values: Vec<f64>) -> PyResult<f64> {
    diagnostics::lag1_autocorrelation(&values).map_err(to_py)
}

/// `(ratio, se)` of mean squared replicate means; `method` is "delta" or
/// "jackknife".
#[pyfunction]
#[pyo3(signature = (candidate, baseline, method="delta"))]
fn mse_ratio(candidate: Vec<f64>, baseline: Vec<f64>, method: &str) -> PyResult<(f64, f64)> {
    let m = match method {
        "delta" => RatioError::Delta,
        "jackknife" => RatioError::Jackknife,
        other => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    };
    let s = diagnostics::mse_ratio(&candidate, &baseline, m).map_err(to_py)?;
    Ok((s.ratio_vs_baseline, s.ratio_se))
}

#[pymodule]
fn gibbs_scan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStrategy>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(rate_ordering, m)?)?;
    m.add_function(wrap_pyfunction!(transfer, m)?)?;
    m.add_function(wrap_pyfunction!(batch_means, m)?)?;
    m.add_function(wrap_pyfunction!(act_hat, m)?)?;
    m.add_function(wrap_pyfunction!(lag1_autocorrelation, m)?)?;
    m.add_function(wrap_pyfunction!(mse_ratio, m)?)?;
    Ok(())
}
