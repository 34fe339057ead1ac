//! Python bindings: `BasicSet` plus the counting, entropy, classification,
//! boundary and realization operations as module functions.
//!
//! Structured results come back as plain dicts and lists built from the same
//! JSON documents the CLI prints.

use num_bigint::BigUint;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;

use treeshift as ts;
use treeshift::boundary::{boundary_counts_exact, boundary_counts_log};
use treeshift::eval::{count_exact, count_log, DEFAULT_PRECISION};

create_exception!(
    treeshift,
    BudgetError,
    PyException,
    "A bit, node or precision budget was exceeded."
);

fn err(e: ts::Error) -> PyErr {
    if e.is_budget() {
        BudgetError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for ts::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_bound_py_any(py)?,
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_bound_py_any(py)?,
            (None, Some(u)) => u.into_bound_py_any(py)?,
            _ => n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py)?,
        },
        Value::String(s) => s.into_bound_py_any(py)?,
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialized<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &value)
}

fn boundary_kind(s: Option<&str>) -> PyResult<Option<ts::BoundaryKind>> {
    match s {
        None | Some("none") => Ok(None),
        Some(s) => s.parse().map(Some).py(),
    }
}

/// A set of allowed 2-blocks (root, child_0, ..., child_{d-1}).
#[pyclass(name = "BasicSet", module = "treeshift", frozen)]
struct PyBasicSet {
    inner: ts::BasicSet,
}

#[pymethods]
impl PyBasicSet {
    #[new]
    #[pyo3(signature = (d, k, blocks=Vec::new()))]
    fn new(d: usize, k: usize, blocks: Vec<Vec<u32>>) -> PyResult<Self> {
        let sig = ts::Signature::new(d, k).py()?;
        let inner = ts::BasicSet::from_tuples(sig, blocks.iter().map(Vec::as_slice)).py()?;
        Ok(PyBasicSet { inner })
    }

    /// Parses the text format (`signature: d=2 k=2`, `block: 1 -> 1 2`).
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyBasicSet {
            inner: ts::BasicSet::parse(text).py()?,
        })
    }

    /// Bit i selects the i-th 2-block in lexicographic order.
    #[staticmethod]
    fn from_mask(d: usize, k: usize, mask: u64) -> PyResult<Self> {
        let sig = ts::Signature::new(d, k).py()?;
        Ok(PyBasicSet {
            inner: ts::BasicSet::from_mask(sig, mask).py()?,
        })
    }

    #[staticmethod]
    fn full(d: usize, k: usize) -> PyResult<Self> {
        Ok(PyBasicSet {
            inner: ts::BasicSet::full(ts::Signature::new(d, k).py()?),
        })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.signature().d()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.signature().k()
    }

    #[getter]
    fn blocks(&self) -> Vec<Vec<u32>> {
        self.inner
            .blocks()
            .map(|b| std::iter::once(b.root).chain(b.children.iter().copied()).collect())
            .collect()
    }

    #[getter]
    fn mask(&self) -> Option<u64> {
        self.inner.to_mask()
    }

    /// Returns the essential part and the removed symbols.
    fn essentialize(&self) -> (PyBasicSet, Vec<u32>) {
        let (inner, removed) = self.inner.essentialize();
        (PyBasicSet { inner }, removed)
    }

    fn is_essential(&self) -> bool {
        self.inner.is_essential()
    }

    fn relabel(&self, perm: Vec<u32>) -> PyResult<Self> {
        Ok(PyBasicSet {
            inner: self.inner.relabel(&perm).py()?,
        })
    }

    fn swap_children(&self, perm: Vec<usize>) -> PyResult<Self> {
        Ok(PyBasicSet {
            inner: self.inner.swap_children(&perm).py()?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, block: Vec<u32>) -> bool {
        match block.split_first() {
            Some((&root, children)) => self.inner.contains_tuple(root, children),
            None => false,
        }
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("BasicSet(d={}, k={}, blocks={:?})", self.d(), self.k(), self.blocks())
    }
}

/// Block counts c_n for n = 2..=n. Exact counts are Python ints; the log
/// backend returns natural logs.
#[pyfunction]
#[pyo3(signature = (b, n, backend="exact", boundary=None, essentialize=true, precision=DEFAULT_PRECISION))]
fn count<'py>(
    py: Python<'py>,
    b: &PyBasicSet,
    n: usize,
    backend: &str,
    boundary: Option<&str>,
    essentialize: bool,
    precision: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let kind = boundary_kind(boundary)?;
    let b = &b.inner;
    match (backend, kind) {
        ("exact", None) => count_exact(b, n, essentialize)
            .py()?
            .totals()
            .to_vec()
            .into_bound_py_any(py),
        ("exact", Some(kind)) => boundary_counts_exact(b, kind, n, essentialize)
            .py()?
            .into_bound_py_any(py),
        ("log", None) => count_log(b, n, precision, essentialize)
            .py()?
            .totals()
            .to_vec()
            .into_bound_py_any(py),
        ("log", Some(kind)) => boundary_counts_log(b, kind, n, precision, essentialize)
            .py()?
            .totals()
            .to_vec()
            .into_bound_py_any(py),
        (other, _) => Err(PyValueError::new_err(format!("unknown backend `{other}`"))),
    }
}

/// Per-root exact counts a_n^(i), one list per height starting at n = 2.
#[pyfunction]
#[pyo3(signature = (b, n, essentialize=true))]
fn count_per_symbol(b: &PyBasicSet, n: usize, essentialize: bool) -> PyResult<Vec<Vec<BigUint>>> {
    let c = count_exact(&b.inner, n, essentialize).py()?;
    Ok((2..=n).map(|m| c.at(m).to_vec()).collect())
}

/// Brute-force per-root counts at height n.
#[pyfunction]
#[pyo3(signature = (b, n, boundary=None))]
fn oracle_count(b: &PyBasicSet, n: usize, boundary: Option<&str>) -> PyResult<Vec<u64>> {
    let mut q = ts::OracleQuery::new(&b.inner, n);
    if let Some(kind) = boundary_kind(boundary)? {
        q = q.boundary(kind);
    }
    Ok(ts::oracle_count(&q).py()?.per_symbol)
}

/// Entropy estimate as a dict (value, estimator, lag, n_used, diagnostic).
#[pyfunction]
#[pyo3(signature = (b, n=40, estimator="difference", boundary=None, precision=DEFAULT_PRECISION))]
fn entropy<'py>(
    py: Python<'py>,
    b: &PyBasicSet,
    n: usize,
    estimator: &str,
    boundary: Option<&str>,
    precision: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let estimator = match estimator {
        "difference" => ts::Estimator::Difference,
        "ratio" => ts::Estimator::Ratio,
        other => return Err(PyValueError::new_err(format!("unknown estimator `{other}`"))),
    };
    let seq = match boundary_kind(boundary)? {
        None => count_log(&b.inner, n, precision, true).py()?,
        Some(kind) => boundary_counts_log(&b.inner, kind, n, precision, true).py()?,
    };
    serialized(py, &ts::entropy_estimate(&seq, estimator))
}

/// Hidden entropy estimate; kappa defaults to d.
#[pyfunction]
#[pyo3(signature = (b, n=40, kappa=None))]
fn hidden_entropy<'py>(py: Python<'py>, b: &PyBasicSet, n: usize, kappa: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let seq = count_log(&b.inner, n, DEFAULT_PRECISION, true).py()?;
    let kappa = kappa.unwrap_or(b.inner.signature().d() as f64);
    serialized(py, &ts::hidden_entropy_estimate(&seq, kappa).py()?)
}

/// Symbolic verdict. d = k = 2 uses the full case analysis.
#[pyfunction]
fn classify<'py>(py: Python<'py>, b: &PyBasicSet) -> PyResult<Bound<'py, PyAny>> {
    let sig = b.inner.signature();
    let v = if sig.d() == 2 && sig.k() == 2 {
        ts::classify_2x2(&b.inner).py()?
    } else {
        ts::classify_general(&ts::derive_snre(&b.inner))
    };
    let out = to_py(py, &v.to_json())?;
    out.set_item("nats", v.value.nats())?;
    Ok(out)
}

/// Recurrence system as text, or as the JSON document when `json` is set.
#[pyfunction]
#[pyo3(signature = (b, json=false))]
fn derive_snre<'py>(py: Python<'py>, b: &PyBasicSet, json: bool) -> PyResult<Bound<'py, PyAny>> {
    let s = ts::derive_snre(&b.inner);
    if json {
        to_py(py, &s.to_json())
    } else {
        s.monomials().to_text().into_bound_py_any(py)
    }
}

/// Basic set realizing a recurrence system given in the monomial text form.
#[pyfunction]
fn snre_to_basic_set(d: usize, k: usize, text: &str) -> PyResult<PyBasicSet> {
    let sys = ts::MonomialSystem::parse(ts::Signature::new(d, k).py()?, text).py()?;
    Ok(PyBasicSet {
        inner: ts::snre_to_basic_set(&sys).py()?,
    })
}

#[pyfunction]
fn boundary_check<'py>(py: Python<'py>, b: &PyBasicSet) -> PyResult<Bound<'py, PyAny>> {
    let out = PyDict::new(py);
    let checks = [
        ts::check_neumann(&b.inner).py()?,
        ts::check_dirichlet(&b.inner, 1).py()?,
        ts::check_dirichlet(&b.inner, 2).py()?,
        ts::check_periodic(&b.inner).py()?,
    ];
    for c in &checks {
        out.set_item(c.kind.to_string(), serialized(py, c)?)?;
    }
    Ok(out.into_any())
}

/// Largest positive root of the polynomial, by bisection.
#[pyfunction]
fn max_root(poly: &str) -> PyResult<f64> {
    ts::max_root(&ts::RealizationPolynomial::parse(poly).py()?, 1e-15).py()
}

/// Builds and verifies a realization; the dict carries the basic set, the
/// symbol legend and the entropy check.
#[pyfunction]
#[pyo3(signature = (poly, n=40))]
fn realize<'py>(py: Python<'py>, poly: &str, n: usize) -> PyResult<Bound<'py, PyAny>> {
    let r = ts::build_realization(&ts::RealizationPolynomial::parse(poly).py()?).py()?;
    let report = ts::verify_realization(&r, n).py()?;
    let out = PyDict::new(py);
    out.set_item(
        "basic_set",
        PyBasicSet {
            inner: r.basic_set.clone(),
        },
    )?;
    out.set_item("d", r.d)?;
    out.set_item("k", r.k)?;
    out.set_item("rho", r.rho)?;
    out.set_item("ln_rho", report.ln_rho)?;
    out.set_item("estimate", report.entropy_estimate.value)?;
    out.set_item("abs_error", report.abs_error)?;
    out.set_item("legend", to_py(py, &r.legend_json())?)?;
    out.set_item("fallback_forcing", r.fallback_forcing)?;
    Ok(out.into_any())
}

/// Classifies every basic set of the signature, ordered by mask.
#[pyfunction]
#[pyo3(signature = (d=2, k=2))]
fn sweep<'py>(py: Python<'py>, d: usize, k: usize) -> PyResult<Bound<'py, PyAny>> {
    let rows = ts::sweep(ts::Signature::new(d, k).py()?).py()?;
    let list = PyList::empty(py);
    for r in &rows {
        let row = to_py(py, &r.verdict.to_json())?;
        row.set_item("mask", r.mask)?;
        row.set_item("h_numeric", r.h_numeric)?;
        list.append(row)?;
    }
    Ok(list.into_any())
}

/// Entropy of x_{n+1} = x_n^2 + |g_n| under a perturbation rule
/// (`zero`, `maximal`, `uniform`, `constant:<c>`).
#[pyfunction]
#[pyo3(signature = (x1=2.0, rule="uniform", n=50, seed=0))]
fn probe(x1: f64, rule: &str, n: usize, seed: u64) -> PyResult<f64> {
    let rule = match rule {
        "zero" => ts::PerturbationRule::Zero,
        "maximal" => ts::PerturbationRule::Maximal,
        "uniform" => ts::PerturbationRule::Uniform { seed },
        other => other
            .strip_prefix("constant:")
            .and_then(|c| c.parse().ok())
            .map(ts::PerturbationRule::Constant)
            .ok_or_else(|| PyValueError::new_err(format!("unknown rule `{other}`")))?,
    };
    Ok(ts::aho_sloane_probe(x1, rule, n).py()?.value)
}

#[pymodule(name = "treeshift")]
fn treeshift_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBasicSet>()?;
    m.add("BudgetError", m.py().get_type::<BudgetError>())?;
    m.add_function(wrap_pyfunction!(count, m)?)?;
    m.add_function(wrap_pyfunction!(count_per_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_count, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(hidden_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(derive_snre, m)?)?;
    m.add_function(wrap_pyfunction!(snre_to_basic_set, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_check, m)?)?;
    m.add_function(wrap_pyfunction!(max_root, m)?)?;
    m.add_function(wrap_pyfunction!(realize, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(probe, m)?)?;
    Ok(())
}
