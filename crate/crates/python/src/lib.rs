//! Python bindings. Points cross the boundary as lists of unit-norm
//! coordinate lists; kernel variants as `"bias_free"` / `"with_bias"`.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use spectral_bias::dynamics::{self, ThresholdQuery};
use spectral_bias::experiments::demos::{self, OddConfig, TwoSinesConfig};
use spectral_bias::experiments::sweep::{self, SweepSpec};
use spectral_bias::harmonics::{self, UnitPoint};
use spectral_bias::nets::{self, TrainConfig, Trainable};
use spectral_bias::{kernels, spectra, Error, KernelVariant};

fn err(e: Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn variant(name: &str) -> PyResult<KernelVariant> {
    name.parse().map_err(err)
}

fn points(coords: Vec<Vec<f64>>) -> PyResult<Vec<UnitPoint>> {
    coords
        .into_iter()
        .map(|c| {
            let d = c.len().saturating_sub(1);
            UnitPoint::new(c, d).map_err(err)
        })
        .collect()
}

fn coords(points: &[UnitPoint]) -> Vec<Vec<f64>> {
    points.iter().map(|p| p.coords().to_vec()).collect()
}

#[pyfunction]
fn k_infinity(t: f64) -> f64 {
    kernels::k_infinity(t)
}

#[pyfunction]
fn k_bar_infinity(t: f64) -> f64 {
    kernels::k_bar_infinity(t)
}

/// Coefficient of frequency `k` on S^d from the closed form, or quadrature for odd d >= 3.
#[pyfunction]
fn coefficient(variant_name: &str, k: usize, d: usize) -> PyResult<f64> {
    spectra::coefficient(variant(variant_name)?, k, d).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (variant_name, k, d, nodes=None))]
fn eigen_quadrature(variant_name: &str, k: usize, d: usize, nodes: Option<usize>) -> PyResult<f64> {
    let nodes = nodes.unwrap_or_else(|| spectra::default_nodes(k, d));
    spectra::eigen_quadrature(variant(variant_name)?, k, d, nodes).map_err(err)
}

#[pyfunction]
fn convergence_exponent(variant_name: &str, d: usize, k_max: usize) -> PyResult<f64> {
    spectra::convergence_exponent(variant(variant_name)?, d, k_max).map_err(err)
}

#[pyfunction]
fn uniform_circle_grid(n: usize) -> Vec<Vec<f64>> {
    coords(&harmonics::uniform_circle_grid(n))
}

#[pyfunction]
fn sample_uniform_sphere(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    coords(&harmonics::sample_uniform_sphere(n, d, seed))
}

#[pyclass(frozen)]
struct GramMatrix(kernels::GramMatrix);

#[pymethods]
impl GramMatrix {
    #[new]
    fn new(points_coords: Vec<Vec<f64>>, variant_name: &str) -> PyResult<Self> {
        Ok(Self(kernels::gram_matrix(&points(points_coords)?, variant(variant_name)?).map_err(err)?))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        if i >= self.0.n() || j >= self.0.n() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.0.get(i, j))
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        (0..self.0.n()).map(|i| self.0.row(i).to_vec()).collect()
    }

    fn is_circulant(&self, tol: f64) -> bool {
        self.0.is_circulant(tol)
    }

    /// `(eigenvalues descending, eigenvectors as columns of a row list)`.
    fn spectrum(&self) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let s = spectra::matrix_spectrum(&self.0).map_err(err)?;
        let vecs = (0..s.len()).map(|i| s.eigenvectors.row(i).iter().copied().collect()).collect();
        Ok((s.eigenvalues, vecs))
    }
}

#[pyclass(frozen)]
struct LinearForecast(dynamics::LinearForecast);

#[pymethods]
impl LinearForecast {
    #[new]
    fn new(gram: &GramMatrix, labels: Vec<f64>, eta: f64) -> PyResult<Self> {
        Ok(Self(dynamics::build_forecast(&gram.0, &labels, eta).map_err(err)?))
    }

    fn residual_at(&self, t: u64) -> f64 {
        self.0.residual_at(t)
    }

    fn frequency_residual_at(&self, k: usize, t: u64) -> Option<f64> {
        self.0.frequency_residual_at(k, t)
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues.clone()
    }
}

/// Linearized iterations for a mode with eigenvalue `lam` to reach
/// `target + slack` of its start; `None` when it never does.
#[pyfunction]
#[pyo3(signature = (lam, eta, target, slack=0.0))]
fn iterations_to_fraction(lam: f64, eta: f64, target: f64, slack: f64) -> PyResult<Option<u64>> {
    let q = ThresholdQuery::new(target, slack).map_err(err)?;
    Ok(dynamics::iterations_to_fraction(lam, eta, q).map_err(err)?.finite())
}

#[pyclass]
struct TwoLayerNet(nets::TwoLayerNet);

#[pymethods]
impl TwoLayerNet {
    #[new]
    #[pyo3(signature = (m, input_dim, kappa, with_bias, seed=0))]
    fn new(m: usize, input_dim: usize, kappa: f64, with_bias: bool, seed: u64) -> PyResult<Self> {
        Ok(Self(nets::init_two_layer(m, input_dim, kappa, with_bias, seed).map_err(err)?))
    }

    fn predict(&self, points_coords: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.0.predict(&points(points_coords)?).map_err(err)
    }

    /// Full-batch gradient descent on `1/2 sum (y - u)^2`; returns
    /// `(residual_trace, epochs_to_stop or None, verdict)`.
    #[pyo3(signature = (points_coords, labels, eta, max_epochs, stop_fraction=0.05))]
    fn train(
        &mut self,
        points_coords: Vec<Vec<f64>>,
        labels: Vec<f64>,
        eta: f64,
        max_epochs: usize,
        stop_fraction: f64,
    ) -> PyResult<(Vec<f64>, Option<usize>, String)> {
        let cfg = TrainConfig { eta, max_epochs, stop_fraction, ..TrainConfig::default() };
        let run = nets::train_full_batch(&mut self.0, &points(points_coords)?, &labels, &cfg).map_err(err)?;
        let verdict = serde_json::to_value(run.verdict).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok((run.residual_trace, run.epochs_to_stop, verdict.as_str().unwrap_or_default().to_string()))
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }
}

/// Runs a sweep described by TOML text and returns the result as JSON.
#[pyfunction]
fn run_sweep(config_toml: &str) -> PyResult<String> {
    let spec = SweepSpec::from_toml(config_toml).map_err(err)?;
    Ok(sweep::run_sweep(&spec).map_err(err)?.to_json())
}

/// Two-sines demo from JSON overrides; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (config_json="{}"))]
fn demo_two_sines(config_json: &str) -> PyResult<String> {
    let cfg: TwoSinesConfig = serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = demos::demo_two_sines(&cfg).map_err(err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Odd-interpolation demo from JSON overrides; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (config_json="{}"))]
fn demo_odd_interpolation(config_json: &str) -> PyResult<String> {
    let cfg: OddConfig = serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = demos::demo_odd_interpolation(&cfg).map_err(err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn spectral_bias_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(k_infinity, m)?)?;
    m.add_function(wrap_pyfunction!(k_bar_infinity, m)?)?;
    m.add_function(wrap_pyfunction!(coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(eigen_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_circle_grid, m)?)?;
    m.add_function(wrap_pyfunction!(sample_uniform_sphere, m)?)?;
    m.add_function(wrap_pyfunction!(iterations_to_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(demo_two_sines, m)?)?;
    m.add_function(wrap_pyfunction!(demo_odd_interpolation, m)?)?;
    m.add_class::<GramMatrix>()?;
    m.add_class::<LinearForecast>()?;
    m.add_class::<TwoLayerNet>()?;
    Ok(())
}
