//! Python bindings: parameters, single runs, sweeps and the small analytic
//! helpers. Arrays come back as plain lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use nlrl_core::sweeps::{heatmap_run, SweepSpec};
use nlrl_core::{
    evolve, make_params, mean_displacement, InitialStateSpec, LatticeState, ModelKind, SimConfig,
    Sublattice,
};
use nlrl_core::{Error, ModelParams as CoreParams};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Diverged { .. } | Error::Io { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "ModelParams", frozen, from_py_object)]
#[derive(Clone)]
struct PyModelParams {
    inner: CoreParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (model, delta_g, gamma_a=2.0, u=0.0, negate_linear=false))]
    fn new(model: &str, delta_g: f64, gamma_a: f64, u: f64, negate_linear: bool) -> PyResult<Self> {
        let kind: ModelKind = model.parse().map_err(to_py)?;
        let inner = make_params(kind, delta_g, gamma_a, u, negate_linear).map_err(to_py)?;
        Ok(PyModelParams { inner })
    }

    #[getter]
    fn model(&self) -> &'static str {
        self.inner.kind().name()
    }
    #[getter]
    fn delta_g(&self) -> f64 {
        self.inner.delta_g()
    }
    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }
    #[getter]
    fn nu(&self) -> f64 {
        self.inner.nu()
    }
    #[getter]
    fn gamma_a(&self) -> f64 {
        self.inner.gamma_a()
    }
    #[getter]
    fn u(&self) -> f64 {
        self.inner.u()
    }
    #[getter]
    fn negate_linear(&self) -> bool {
        self.inner.negate_linear()
    }

    fn __repr__(&self) -> String {
        format!(
            "ModelParams(model='{}', delta_g={}, gamma_a={}, u={}, negate_linear={})",
            self.inner.kind(),
            self.inner.delta_g(),
            self.inner.gamma_a(),
            self.inner.u(),
            if self.inner.negate_linear() {
                "True"
            } else {
                "False"
            }
        )
    }
}

fn sim_config(
    gamma_a: f64,
    half_width: Option<usize>,
    dt: f64,
    horizon: Option<f64>,
    initial: Option<(i64, String)>,
) -> PyResult<SimConfig> {
    let mut cfg = if let Some(t) = horizon {
        let n = half_width.unwrap_or_else(|| nlrl_core::integrator::default_half_width(gamma_a));
        SimConfig::new(n, dt, t, InitialStateSpec::default()).map_err(to_py)?
    } else {
        SimConfig::for_loss_rate(gamma_a)
            .map_err(to_py)?
            .with_dt(dt)
            .map_err(to_py)?
    };
    if let Some(n) = half_width {
        cfg = cfg.with_half_width(n).map_err(to_py)?;
    }
    if let Some((m, site)) = initial {
        let sublattice: Sublattice = site.parse().map_err(to_py)?;
        cfg.initial = InitialStateSpec::SingleSite { m, sublattice };
        LatticeState::from_initial(cfg.half_width, &cfg.initial).map_err(to_py)?;
    }
    Ok(cfg)
}

/// Runs one evolution and returns a dict with the mean displacement, the
/// residual norm, the truncation flag and the time series.
#[pyfunction]
#[pyo3(signature = (params, half_width=None, dt=1e-3, horizon=None, initial=None))]
fn run(
    py: Python<'_>,
    params: &PyModelParams,
    half_width: Option<usize>,
    dt: f64,
    horizon: Option<f64>,
    initial: Option<(i64, String)>,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let cfg = sim_config(params.inner.gamma_a(), half_width, dt, horizon, initial)?;
    let p = params.inner;
    let heat = py.detach(move || heatmap_run(&p, &cfg)).map_err(to_py)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("mean_displacement", heat.displacement.final_value)?;
    d.set_item("residual_norm", heat.displacement.residual_norm)?;
    d.set_item("truncation_unsafe", heat.truncation_unsafe)?;
    d.set_item("times", heat.displacement.times.clone())?;
    d.set_item("displacement", heat.displacement.values.clone())?;
    d.set_item("norm", heat.norm.clone())?;
    d.set_item("cells", heat.occupancy.cells.clone())?;
    d.set_item("occupancy", heat.occupancy.values.clone())?;
    d.set_item("contrast", heat.contrast.values.clone())?;
    Ok(d.unbind())
}

/// Mean displacement of one run.
#[pyfunction]
#[pyo3(signature = (params, half_width=None, dt=1e-3, horizon=None))]
fn mean_displacement_of(
    py: Python<'_>,
    params: &PyModelParams,
    half_width: Option<usize>,
    dt: f64,
    horizon: Option<f64>,
) -> PyResult<(f64, f64, bool)> {
    let mut cfg = sim_config(params.inner.gamma_a(), half_width, dt, horizon, None)?;
    cfg.sample_stride = cfg.step_count();
    let p = params.inner;
    let traj = py.detach(move || evolve(&p, &cfg)).map_err(to_py)?;
    let md = mean_displacement(&traj);
    Ok((md.value, md.residual_norm, md.truncation_unsafe))
}

/// Mean displacement over `delta_g_grid` for each value in `u_values`.
/// Returns `{u: [values...]}`; diverged points are NaN.
#[pyfunction]
#[pyo3(signature = (model, delta_g_grid, u_values, gamma_a=2.0, half_width=None, dt=1e-3, horizon=None, negate_linear=false))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    model: &str,
    delta_g_grid: Vec<f64>,
    u_values: Vec<f64>,
    gamma_a: f64,
    half_width: Option<usize>,
    dt: f64,
    horizon: Option<f64>,
    negate_linear: bool,
) -> PyResult<Vec<(f64, Vec<f64>)>> {
    let spec = SweepSpec {
        model: model.parse().map_err(to_py)?,
        delta_g_grid,
        u_values,
        gamma_a,
        sim: sim_config(gamma_a, half_width, dt, horizon, None)?,
        negate_linear,
    };
    let result = py
        .detach(move || nlrl_core::run_sweep(&spec))
        .map_err(to_py)?;
    Ok(result
        .curves
        .iter()
        .map(|c| (c.u, c.points.iter().map(|p| p.mean_displacement).collect()))
        .collect())
}

#[pyfunction]
fn winding_number(mu: f64, nu: f64) -> PyResult<i32> {
    nlrl_core::winding_number(mu, nu).map_err(to_py)
}

#[pyfunction]
fn incoherent_reference(mu: f64, nu: f64) -> PyResult<f64> {
    nlrl_core::incoherent_reference(mu, nu).map_err(to_py)
}

/// Norm-rate residual of `params` at a state given as lists of complex
/// amplitudes on cells `-N..=N`.
#[pyfunction]
fn norm_rate_residual(
    params: &PyModelParams,
    a: Vec<num_complex_py::C>,
    b: Vec<num_complex_py::C>,
) -> PyResult<f64> {
    if a.len() != b.len() || a.len().is_multiple_of(2) {
        return Err(PyValueError::new_err(
            "a and b must have the same odd length 2N + 1",
        ));
    }
    let mut s = LatticeState::zeros(a.len() / 2);
    s.a = a.into_iter().map(Into::into).collect();
    s.b = b.into_iter().map(Into::into).collect();
    nlrl_core::norm_rate_residual(&params.inner, &s).map_err(to_py)
}

mod num_complex_py {
    use pyo3::prelude::*;
    use pyo3::types::PyComplex;

    /// A Python complex (or real) number.
    pub struct C(pub f64, pub f64);

    impl<'py> FromPyObject<'_, 'py> for C {
        type Error = PyErr;

        fn extract(ob: Borrowed<'_, 'py, PyAny>) -> PyResult<Self> {
            if let Ok(z) = ob.cast::<PyComplex>() {
                return Ok(C(z.real(), z.imag()));
            }
            Ok(C(ob.extract::<f64>()?, 0.0))
        }
    }

    impl From<C> for nlrl_core::Complex64 {
        fn from(c: C) -> Self {
            nlrl_core::Complex64::new(c.0, c.1)
        }
    }
}

#[pymodule]
fn nlrl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(mean_displacement_of, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(winding_number, m)?)?;
    m.add_function(wrap_pyfunction!(incoherent_reference, m)?)?;
    m.add_function(wrap_pyfunction!(norm_rate_residual, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
