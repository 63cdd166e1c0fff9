//! Python bindings: Blaschke products, Carleson norms, contours, subspace
//! systems and weight classification.

use carleson_kit::blaschke::{self, BlaschkeProduct};
use carleson_kit::carleson::{self, CurveMeasure, DiscreteMeasure};
use carleson_kit::contour::{
    self, BoundedFunction, ContourConstants, ContourOptions, SingularAtom,
};
use carleson_kit::linalg::{orthonormal_basis, CMatrix};
use carleson_kit::riesz::{self, SubspaceSystem};
use carleson_kit::weighted::{self, WeightFormula};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: carleson_kit::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Finite Blaschke product with the given zeros (repeated zeros allowed).
#[pyclass(name = "BlaschkeProduct", frozen)]
struct PyBlaschke {
    inner: BlaschkeProduct,
}

#[pymethods]
impl PyBlaschke {
    #[new]
    fn new(zeros: Vec<Complex64>) -> PyResult<Self> {
        Ok(Self {
            inner: BlaschkeProduct::with_multiplicity(&zeros).map_err(py_err)?,
        })
    }

    fn __call__(&self, z: Complex64) -> PyResult<Complex64> {
        blaschke::evaluate(&self.inner, z).map_err(py_err)
    }

    fn modulus(&self, z: Complex64) -> f64 {
        self.inner.modulus(z)
    }

    #[getter]
    fn zeros(&self) -> Vec<Complex64> {
        self.inner.zeros()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn __repr__(&self) -> String {
        format!("BlaschkeProduct(degree={})", self.inner.degree())
    }
}

/// Interpolation constants δ, α and the Carleson norm of Σ(1 − |λ|²)δ_λ.
#[pyfunction]
fn interpolation_constants<'py>(
    py: Python<'py>,
    points: Vec<Complex64>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = blaschke::interpolation_constants(&points).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("delta", r.delta)?;
    d.set_item("alpha", r.alpha)?;
    d.set_item("carleson_norm", r.carleson_norm_of_sequence_measure)?;
    d.set_item("depth", r.carleson_depth)?;
    Ok(d)
}

/// (∏_{μ≠λ}|b_μ(λ)|)⁻¹ for λ in `points`.
#[pyfunction]
fn projection_norm(points: Vec<Complex64>, lam: Complex64) -> PyResult<f64> {
    blaschke::projection_norm_formula(&points, lam).map_err(py_err)
}

/// Carleson norm of Σ m·δ_z over dyadic boxes down to `depth` (Euclidean units).
#[pyfunction]
#[pyo3(signature = (atoms, depth = 12))]
fn carleson_norm(atoms: Vec<(Complex64, f64)>, depth: u32) -> PyResult<f64> {
    let mu = DiscreteMeasure::new(atoms).map_err(py_err)?;
    Ok(carleson::carleson_norm_discrete(&mu, depth))
}

/// Carleson norm of arc length along the given polylines.
#[pyfunction]
#[pyo3(signature = (polylines, depth = 12))]
fn curve_carleson_norm(polylines: Vec<Vec<Complex64>>, depth: u32) -> PyResult<f64> {
    let mu = CurveMeasure::new(polylines).map_err(py_err)?;
    Ok(carleson::carleson_norm_curve(&mu, depth))
}

/// Box, kernel-test and embedding constants of an atomic measure.
#[pyfunction]
#[pyo3(signature = (atoms, depth = 12))]
fn compare_constants<'py>(
    py: Python<'py>,
    atoms: Vec<(Complex64, f64)>,
    depth: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let mu = DiscreteMeasure::new(atoms).map_err(py_err)?;
    let c = carleson::compare_constants(&mu, depth);
    let d = PyDict::new(py);
    d.set_item("box", c.box_constant)?;
    d.set_item("kernel", c.kernel_constant)?;
    d.set_item("embedding", c.embedding_constant)?;
    d.set_item("worst_ratio", c.worst_ratio)?;
    Ok(d)
}

/// Carleson contour for φ = B·S with the given zeros and singular atoms
/// `(angle, mass)`, verified on a quasi-uniform sample set.
#[pyfunction]
#[pyo3(name = "contour", signature = (zeros, epsilon, singular = Vec::new(), depth = 12))]
fn carleson_contour<'py>(
    py: Python<'py>,
    zeros: Vec<Complex64>,
    epsilon: f64,
    singular: Vec<(f64, f64)>,
    depth: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let atoms = singular
        .into_iter()
        .map(|(angle, mass)| SingularAtom { angle, mass })
        .collect();
    let phi = BoundedFunction::new(&zeros, atoms, None).map_err(py_err)?;
    let result = contour::bourgain_contour(
        &phi,
        epsilon,
        ContourConstants::default(),
        ContourOptions::default(),
    )
    .map_err(py_err)?;
    let samples = contour::verification_samples(&phi, &result.region, 7);
    let v = contour::verify_region(
        &phi,
        &result.region,
        &result.polylines,
        epsilon,
        result.derived.log_eps_prime,
        &samples,
        depth,
    )
    .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("gamma", result.derived.gamma)?;
    d.set_item("log_eps_prime", result.derived.log_eps_prime)?;
    d.set_item("carleson_norm", v.carleson_norm)?;
    d.set_item("samples", v.samples)?;
    d.set_item("upper_violations", v.upper_violations)?;
    d.set_item("lower_violations", v.lower_violations)?;
    d.set_item("passed", v.passed)?;
    d.set_item("polylines", result.polylines)?;
    d.set_item("disks", result.region.disks().collect::<Vec<_>>())?;
    Ok(d)
}

/// Subspaces of Cⁿ, each given by spanning vectors; frames are orthonormalized.
#[pyclass(name = "SubspaceSystem", frozen)]
struct PySystem {
    inner: SubspaceSystem,
}

#[pymethods]
impl PySystem {
    #[new]
    fn new(subspaces: Vec<Vec<Vec<Complex64>>>) -> PyResult<Self> {
        let frames = subspaces
            .iter()
            .map(|vectors| {
                let rows = vectors.first().map_or(0, Vec::len);
                if rows == 0 || vectors.iter().any(|v| v.len() != rows) {
                    return Err(PyValueError::new_err(
                        "vectors of a subspace must share a positive length",
                    ));
                }
                let m = CMatrix::from_fn(rows, vectors.len(), |i, j| vectors[j][i]);
                Ok(orthonormal_basis(&m, 1e-12))
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self {
            inner: SubspaceSystem::from_frames(&frames).map_err(py_err)?,
        })
    }

    /// Reproducing kernels k_λ of H² as one-dimensional subspaces.
    #[staticmethod]
    fn kernels(points: Vec<Complex64>) -> PyResult<Self> {
        Ok(Self {
            inner: SubspaceSystem::kernels(&points).map_err(py_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// (δ, per-subspace δ_n)
    fn uniform_minimality(&self) -> PyResult<(f64, Vec<f64>)> {
        let r = riesz::uniform_minimality(&self.inner).map_err(py_err)?;
        Ok((r.delta, r.per_subspace))
    }

    fn orthogonalizer_condition(&self) -> PyResult<f64> {
        riesz::orthogonalizer_condition(&self.inner).map_err(py_err)
    }

    fn embedding_norm(&self) -> f64 {
        riesz::embedding_norm(&self.inner)
    }

    fn skew_projection_norm(&self, subset: Vec<usize>) -> PyResult<f64> {
        riesz::skew_projection_norm(&self.inner, &subset).map_err(py_err)
    }

    /// Indices N with δ(N) < delta and δ(N ∖ {k}) ≥ delta, or None when δ ≥ delta.
    fn critical_subset(&self, delta: f64) -> PyResult<Option<Vec<usize>>> {
        Ok(riesz::extract_critical_subset(&self.inner, delta)
            .map_err(py_err)?
            .map(|c| c.indices))
    }
}

/// A weight on the circle.
#[pyclass(name = "Weight", frozen)]
struct PyWeight {
    inner: weighted::Weight,
}

impl PyWeight {
    fn formula(f: WeightFormula) -> PyResult<Self> {
        Ok(Self {
            inner: weighted::Weight::formula(f).map_err(py_err)?,
        })
    }
}

#[pymethods]
impl PyWeight {
    #[staticmethod]
    fn constant(value: f64) -> PyResult<Self> {
        Self::formula(WeightFormula::Constant { value })
    }

    /// |1 − e^{it}|^exponent
    #[staticmethod]
    fn power_singularity(exponent: f64) -> PyResult<Self> {
        Self::formula(WeightFormula::PowerSingularity { exponent })
    }

    /// mean + amplitude·cos t
    #[staticmethod]
    fn cosine_shift(mean: f64, amplitude: f64) -> PyResult<Self> {
        Self::formula(WeightFormula::CosineShift { mean, amplitude })
    }

    /// Values at the nodes 2πj/n, n a power of two.
    #[staticmethod]
    fn samples(values: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: weighted::Weight::samples(values).map_err(py_err)?,
        })
    }

    /// Integrability level 0..=5.
    #[pyo3(signature = (max_log2 = weighted::DEFAULT_MAX_LOG2))]
    fn level(&self, max_log2: u32) -> u8 {
        weighted::classify_weight(&self.inner, max_log2).level
    }

    /// (‖P⁰‖² on the section, ∫w·∫1/w)
    #[pyo3(signature = (section_size = 1024, max_log2 = weighted::DEFAULT_MAX_LOG2))]
    fn p0_check(&self, section_size: usize, max_log2: u32) -> PyResult<(f64, f64)> {
        let r = weighted::p0_norm_check(&self.inner, section_size, max_log2).map_err(py_err)?;
        Ok((r.lhs, r.rhs))
    }
}

#[pymodule]
#[pyo3(name = "carleson_kit")]
fn carleson_kit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBlaschke>()?;
    m.add_class::<PySystem>()?;
    m.add_class::<PyWeight>()?;
    m.add_function(wrap_pyfunction!(interpolation_constants, m)?)?;
    m.add_function(wrap_pyfunction!(projection_norm, m)?)?;
    m.add_function(wrap_pyfunction!(carleson_norm, m)?)?;
    m.add_function(wrap_pyfunction!(curve_carleson_norm, m)?)?;
    m.add_function(wrap_pyfunction!(compare_constants, m)?)?;
    m.add_function(wrap_pyfunction!(carleson_contour, m)?)?;
    Ok(())
}
