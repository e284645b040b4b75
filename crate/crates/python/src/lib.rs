//! Python bindings for the heisenrep engine.
//!
//! `lam` stands for the holonomy parameter λ (`lambda` is reserved in Python).
//! Library failures raise `HeisenrepError`; the message starts with the
//! error category, e.g. `"caustic: ..."` or `"contour error: ..."`.

use std::sync::Arc;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use heisenrep::bundle::{self, DiscretePath, FlatConnection, PolarPoint};
use heisenrep::cli::{run_checks as run_check_suite, CheckConfig};
use heisenrep::hilbert::{self, HamiltonianParams};
use heisenrep::models::{self, LevelWindow};
use heisenrep::propagators::{self as prop, PathIntegralOptions, PropagatorRequest, SliceKernel, TimeContour};
use heisenrep::Error;

create_exception!(heisenrep_py, HeisenrepError, PyException);

fn err(e: Error) -> PyErr {
    HeisenrepError::new_err(e.to_string())
}

fn point(q: (f64, f64)) -> PyResult<PolarPoint> {
    PolarPoint::new(q.0, q.1).map_err(err)
}

fn contour(kind: &str, delta: f64) -> PyResult<TimeContour> {
    match kind {
        "real" => Ok(TimeContour::real()),
        "euclidean" => Ok(TimeContour::euclidean()),
        "wick" => TimeContour::wick(delta).map_err(err),
        _ => Err(PyValueError::new_err(format!("unknown contour {kind:?}; use real, euclidean or wick"))),
    }
}

/// Mass, frequency, the μ/ν couplings and ħ of the Hamiltonian.
#[pyclass(name = "Params", frozen)]
struct PyParams(HamiltonianParams);

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (mass=1.0, omega=1.0, mu=0.0, nu=0.0, hbar=1.0))]
    fn new(mass: f64, omega: f64, mu: f64, nu: f64, hbar: f64) -> PyResult<Self> {
        HamiltonianParams::new(mass, omega, mu, nu, hbar).map(Self).map_err(err)
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.0.mass
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.0.omega
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.0.nu
    }

    #[getter]
    fn hbar(&self) -> f64 {
        self.0.hbar
    }

    /// √(ħ/mω), or None for the free particle.
    fn length_scale(&self) -> Option<f64> {
        self.0.length_scale()
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!("Params(mass={}, omega={}, mu={}, nu={}, hbar={})", p.mass, p.omega, p.mu, p.nu, p.hbar)
    }
}

#[pyclass(name = "RadialGrid", frozen)]
struct PyRadialGrid(Arc<hilbert::RadialGrid>);

#[pymethods]
impl PyRadialGrid {
    #[new]
    fn new(r_min: f64, r_max: f64, n_nodes: usize) -> PyResult<Self> {
        hilbert::RadialGrid::log(r_min, r_max, n_nodes).map(|g| Self(Arc::new(g))).map_err(err)
    }

    /// Log grid fitted to oscillator states up to (n_r_max, alpha_max).
    #[staticmethod]
    #[pyo3(signature = (params, n_r_max, alpha_max, n_nodes=2000))]
    fn for_oscillator(params: PyRef<PyParams>, n_r_max: usize, alpha_max: f64, n_nodes: usize) -> PyResult<Self> {
        models::oscillator_grid(&params.0, n_r_max, alpha_max, n_nodes).map(|g| Self(Arc::new(g))).map_err(err)
    }

    fn nodes(&self) -> Vec<f64> {
        self.0.nodes().to_vec()
    }

    /// Quadrature weights of ∫ f r dr.
    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("RadialGrid(r_min={}, r_max={}, n_nodes={})", self.0.r_min(), self.0.r_max(), self.0.len())
    }
}

/// One angular-momentum sector f(r) e^{iℓθ} sampled on a grid.
#[pyclass(name = "RadialMode", frozen)]
struct PyRadialMode(hilbert::RadialMode);

#[pymethods]
impl PyRadialMode {
    #[new]
    fn new(ell: i64, grid: PyRef<PyRadialGrid>, samples: Vec<Complex64>) -> PyResult<Self> {
        hilbert::RadialMode::new(ell, grid.0.clone(), samples).map(Self).map_err(err)
    }

    #[getter]
    fn ell(&self) -> i64 {
        self.0.ell()
    }

    fn samples(&self) -> Vec<Complex64> {
        self.0.samples().to_vec()
    }

    fn nodes(&self) -> Vec<f64> {
        self.0.grid().nodes().to_vec()
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }

    fn __len__(&self) -> usize {
        self.0.samples().len()
    }
}

/// ħω(2n_r + 1 + |α|).
#[pyfunction]
#[pyo3(signature = (n_r, ell, params, lam=0.0))]
fn oscillator_energy(n_r: usize, ell: i64, params: PyRef<PyParams>, lam: f64) -> PyResult<f64> {
    models::oscillator_energy(n_r, ell, &params.0, lam).map_err(err)
}

/// Sorted levels (n_r, ell, energy) at one λ, truncated to the levels the
/// window is complete for.
#[pyfunction]
#[pyo3(signature = (params, lam=0.0, n_r_max=12, ell_max=20))]
fn spectrum(params: PyRef<PyParams>, lam: f64, n_r_max: usize, ell_max: i64) -> PyResult<Vec<(usize, i64, f64)>> {
    let rows = models::spectral_flow(&[lam], &params.0, &LevelWindow::symmetric(n_r_max, ell_max)).map_err(err)?;
    let row = &rows[0];
    Ok(row.levels.iter().filter(|l| l.energy < row.complete_below).map(|l| (l.n_r, l.ell, l.energy)).collect())
}

/// max |E_k(λ) − E_k(λ+1)| over the complete part of the spectrum.
#[pyfunction]
#[pyo3(signature = (params, lam, n_r_max=12, ell_max=20))]
fn periodicity_defect(params: PyRef<PyParams>, lam: f64, n_r_max: usize, ell_max: i64) -> PyResult<f64> {
    models::periodicity_defect(&params.0, lam, &LevelWindow::symmetric(n_r_max, ell_max)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n_r, ell, params, grid, lam=0.0))]
fn oscillator_wavefunction(
    n_r: usize,
    ell: i64,
    params: PyRef<PyParams>,
    grid: PyRef<PyRadialGrid>,
    lam: f64,
) -> PyResult<PyRadialMode> {
    models::oscillator_wavefunction(n_r, ell, &params.0, lam, grid.0.clone()).map(PyRadialMode).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (params, mode, lam=0.0))]
fn apply_hamiltonian(params: PyRef<PyParams>, mode: PyRef<PyRadialMode>, lam: f64) -> PyResult<PyRadialMode> {
    let conn = FlatConnection::with_hbar(lam, params.0.hbar).map_err(err)?;
    hilbert::apply_hamiltonian(&params.0, &conn, &mode.0).map(PyRadialMode).map_err(err)
}

#[pyfunction]
fn inner_product(psi: PyRef<PyRadialMode>, phi: PyRef<PyRadialMode>) -> PyResult<Complex64> {
    hilbert::inner_product(&psi.0, &phi.0).map_err(err)
}

/// Holonomy of the flat connection along the polyline through `points`
/// given as (r, theta) pairs. A closed path repeats its first point at the end.
#[pyfunction]
#[pyo3(signature = (lam, points, closed=false))]
fn holonomy(lam: f64, points: Vec<(f64, f64)>, closed: bool) -> PyResult<Complex64> {
    let vertices = points.into_iter().map(point).collect::<PyResult<Vec<_>>>()?;
    let path = DiscretePath::new(vertices, closed).map_err(err)?;
    Ok(bundle::holonomy(&FlatConnection::new(lam), &path))
}

/// Winding number about the origin of a closed polyline; the last point
/// must repeat the first.
#[pyfunction]
fn winding_number(points: Vec<(f64, f64)>) -> PyResult<i64> {
    let vertices = points.into_iter().map(point).collect::<PyResult<Vec<_>>>()?;
    let path = DiscretePath::new(vertices, true).map_err(err)?;
    bundle::winding_number(&path).map_err(err)
}

/// Partial-wave sum of the plane wave e^{i(x p_x + y p_y)/ħ}, |ℓ| ≤ ell_max.
#[pyfunction]
#[pyo3(signature = (x, y, p_x, p_y, hbar=1.0, ell_max=60))]
fn plane_wave_expansion(x: f64, y: f64, p_x: f64, p_y: f64, hbar: f64, ell_max: usize) -> Complex64 {
    models::plane_wave_expansion(x, y, p_x, p_y, hbar, ell_max)
}

/// K(q_f, q_i; Δt) with q given as (r, theta). `method` is "spectral",
/// "direct" or "closed". Returns (value, tail_bound).
#[pyfunction]
#[pyo3(signature = (q_f, q_i, delta_t, params, lam=0.0, contour="wick", delta=1e-3, method="spectral", ell_cutoff=40, n_r_cutoff=80))]
#[allow(clippy::too_many_arguments)]
fn propagator(
    q_f: (f64, f64),
    q_i: (f64, f64),
    delta_t: f64,
    params: PyRef<PyParams>,
    lam: f64,
    contour: &str,
    delta: f64,
    method: &str,
    ell_cutoff: usize,
    n_r_cutoff: usize,
) -> PyResult<(Complex64, f64)> {
    let req = request(q_f, q_i, delta_t, &params.0, lam, self::contour(contour, delta)?, ell_cutoff)?;
    let oscillator = req.params.omega > 0.0;
    match method {
        "spectral" if oscillator => prop::propagator_spectral_oscillator(&req),
        "spectral" => prop::propagator_spectral_free(&req),
        "direct" => prop::propagator_direct_sum_oscillator(&req, n_r_cutoff),
        "closed" if lam != 0.0 => Err(Error::Input("closed forms hold only at lambda = 0".into())),
        "closed" if oscillator => {
            prop::propagator_closed_oscillator(&req.q_f, &req.q_i, delta_t, req.contour, &req.params)
                .map(|value| prop::PropagatorValue { value, ell_cutoff: 0, tail_bound: 0.0 })
        }
        "closed" if req.contour.is_damped() => prop::propagator_closed_free(&req.q_f, &req.q_i, delta_t, req.contour, &req.params)
            .map(|value| prop::PropagatorValue { value, ell_cutoff: 0, tail_bound: 0.0 }),
        "closed" => Err(Error::Contour("the free closed form needs a damped contour".into())),
        _ => return Err(PyValueError::new_err(format!("unknown method {method:?}"))),
    }
    .map(|v| (v.value, v.tail_bound))
    .map_err(err)
}

/// Real-time spectral propagator by extrapolating damped Wick contours to
/// δ = 0. Returns (value, error_estimate).
#[pyfunction]
#[pyo3(signature = (q_f, q_i, delta_t, params, lam=0.0, rel_tol=1e-10, ell_cutoff=40))]
fn propagator_real_time(
    q_f: (f64, f64),
    q_i: (f64, f64),
    delta_t: f64,
    params: PyRef<PyParams>,
    lam: f64,
    rel_tol: f64,
    ell_cutoff: usize,
) -> PyResult<(Complex64, f64)> {
    let req = request(q_f, q_i, delta_t, &params.0, lam, TimeContour::real(), ell_cutoff)?;
    let spectral = if req.params.omega > 0.0 { prop::propagator_spectral_oscillator } else { prop::propagator_spectral_free };
    let ex = prop::wick_extrapolate(|d| spectral(&req.with_contour(TimeContour::wick(d)?)).map(|v| v.value), rel_tol)
        .map_err(err)?;
    Ok((ex.value, ex.error_estimate))
}

/// Time-sliced path integral with `n_slices` slices on a damped contour.
/// Returns (value, resolution).
#[pyfunction]
#[pyo3(signature = (q_f, q_i, delta_t, params, n_slices, lam=0.0, contour="euclidean", delta=1e-3, kernel="bessel", ell_cutoff=40))]
#[allow(clippy::too_many_arguments)]
fn pathintegral(
    q_f: (f64, f64),
    q_i: (f64, f64),
    delta_t: f64,
    params: PyRef<PyParams>,
    n_slices: usize,
    lam: f64,
    contour: &str,
    delta: f64,
    kernel: &str,
    ell_cutoff: usize,
) -> PyResult<(Complex64, f64)> {
    let req = request(q_f, q_i, delta_t, &params.0, lam, self::contour(contour, delta)?, ell_cutoff)?;
    let kernel = match kernel {
        "bessel" => SliceKernel::Bessel,
        "reduced" => SliceKernel::Reduced,
        _ => return Err(PyValueError::new_err(format!("unknown kernel {kernel:?}; use bessel or reduced"))),
    };
    let opts = PathIntegralOptions { kernel, ..PathIntegralOptions::default() };
    let v = prop::propagator_pathintegral_with(&req, n_slices, &opts).map_err(err)?;
    Ok((v.value, v.resolution))
}

fn request(
    q_f: (f64, f64),
    q_i: (f64, f64),
    delta_t: f64,
    params: &HamiltonianParams,
    lam: f64,
    contour: TimeContour,
    ell_cutoff: usize,
) -> PyResult<PropagatorRequest> {
    Ok(PropagatorRequest::new(point(q_i)?, point(q_f)?, delta_t, *params, lam, contour).with_ell_cutoff(ell_cutoff))
}

/// Runs the invariant-check suite and returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (seed=2024, only=None))]
fn run_checks(py: Python<'_>, seed: u64, only: Option<Vec<String>>) -> PyResult<String> {
    let cfg = CheckConfig { seed, only, ..CheckConfig::default() };
    let report = py.detach(|| run_check_suite(&cfg)).map_err(err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn heisenrep_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HeisenrepError", m.py().get_type::<HeisenrepError>())?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyRadialGrid>()?;
    m.add_class::<PyRadialMode>()?;
    m.add_function(wrap_pyfunction!(oscillator_energy, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(periodicity_defect, m)?)?;
    m.add_function(wrap_pyfunction!(oscillator_wavefunction, m)?)?;
    m.add_function(wrap_pyfunction!(apply_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(inner_product, m)?)?;
    m.add_function(wrap_pyfunction!(holonomy, m)?)?;
    m.add_function(wrap_pyfunction!(winding_number, m)?)?;
    m.add_function(wrap_pyfunction!(plane_wave_expansion, m)?)?;
    m.add_function(wrap_pyfunction!(propagator, m)?)?;
    m.add_function(wrap_pyfunction!(propagator_real_time, m)?)?;
    m.add_function(wrap_pyfunction!(pathintegral, m)?)?;
    m.add_function(wrap_pyfunction!(run_checks, m)?)?;
    Ok(())
}
