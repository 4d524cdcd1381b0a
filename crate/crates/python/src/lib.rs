//! Python bindings: build, query, dump and render diagrams.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use awvd::cube::{DuplicatePolicy, DEFAULT_FRAC_BITS};
use awvd::diagram::{build_diagram, Amwvd, BuildOptions, CoverMode};
use awvd::error::Error;
use awvd::geom::{derive_params, SiteSet};
use awvd::oracle::{gen_instance, ratio_check, WeightLaw};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::RefinementDepthExceeded { .. } | Error::BudgetExceeded(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn site_set(points: Vec<Vec<f64>>, weights: Vec<f64>) -> PyResult<SiteSet> {
    if points.len() != weights.len() {
        return Err(PyValueError::new_err(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    let d = points.first().map_or(0, |p| p.len());
    SiteSet::new(d, points.into_iter().zip(weights).collect()).map_err(to_py)
}

/// Approximate multiplicatively weighted Voronoi diagram.
#[pyclass(name = "Diagram", module = "awvd", frozen)]
struct Diagram {
    inner: Amwvd,
}

#[pymethods]
impl Diagram {
    /// Builds a diagram. Sites are ranked by weight; labels returned by
    /// queries are 1-based ranks (see `site`).
    #[new]
    #[pyo3(signature = (points, weights, eps=0.25, mode="reduced", frac_bits=DEFAULT_FRAC_BITS, threads=None))]
    fn new(
        py: Python<'_>,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        eps: f64,
        mode: &str,
        frac_bits: u32,
        threads: Option<usize>,
    ) -> PyResult<Self> {
        let sites = site_set(points, weights)?;
        let mode: CoverMode = mode.parse().map_err(to_py)?;
        let params = derive_params(eps).map_err(to_py)?;
        let opts = BuildOptions {
            frac_bits,
            threads,
            policy: DuplicatePolicy::MinLabel,
        };
        let inner = py
            .detach(|| build_diagram(sites, mode, &params, &opts))
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Restores a diagram from `dump()` output.
    #[staticmethod]
    fn load(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: awvd::io::load(text).map_err(to_py)?,
        })
    }

    fn dump(&self) -> String {
        awvd::io::dump(&self.inner)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.sites.len()
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.params.eps
    }

    fn cell_count(&self) -> usize {
        self.inner.cell_count()
    }

    /// `(coords, weight, original_index)` of the site with the given rank.
    fn site(&self, label: usize) -> PyResult<(Vec<f64>, f64, usize)> {
        if label == 0 || label > self.inner.sites.len() {
            return Err(PyValueError::new_err(format!("label {label} out of range")));
        }
        let s = self.inner.sites.site(label);
        Ok((
            s.coords.clone(),
            s.weight,
            self.inner.sites.original_position(label),
        ))
    }

    /// `(label, weighted distance to that site)`.
    fn query(&self, p: Vec<f64>) -> PyResult<(usize, f64)> {
        let q = self.inner.query(&p).map_err(to_py)?;
        Ok((q.label, q.distance))
    }

    fn query_many(&self, py: Python<'_>, points: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
        py.detach(|| {
            points
                .iter()
                .map(|p| self.inner.query(p).map(|q| q.label))
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(to_py)
    }

    /// Compares `m` random queries against the exact nearest site.
    #[pyo3(signature = (m=10_000, seed=1))]
    fn ratio_check(&self, py: Python<'_>, m: usize, seed: u64) -> PyResult<(f64, f64, u32)> {
        let r = py
            .detach(|| ratio_check(&self.inner, m, seed))
            .map_err(to_py)?;
        Ok((r.max_ratio, r.mean_ratio, r.max_comparisons))
    }

    fn stats(&self) -> String {
        self.inner.stats_report(false)
    }

    fn render_svg(&self) -> PyResult<String> {
        awvd::render::render_svg(&self.inner).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Diagram(n={}, d={}, eps={}, mode={}, cells={})",
            self.inner.sites.len(),
            self.inner.dim(),
            self.inner.params.eps,
            self.inner.mode,
            self.inner.cell_count()
        )
    }
}

/// Random instance as `(points, weights)`.
#[pyfunction]
#[pyo3(signature = (n, d=2, weights="uniform", seed=1))]
fn generate(n: usize, d: usize, weights: &str, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let law: WeightLaw = weights.parse().map_err(to_py)?;
    let inst = gen_instance(n, d, law, seed).map_err(to_py)?;
    Ok(inst.points.into_iter().unzip())
}

#[pymodule]
#[pyo3(name = "awvd")]
fn awvd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Diagram>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
