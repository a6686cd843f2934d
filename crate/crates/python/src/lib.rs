//! Python bindings for `fmarkov`.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use fmarkov::approx::markov_approximation;
use fmarkov::entropy;
use fmarkov::measure::{self, MeasureSource};
use fmarkov::transition::{self as tr, USER_TOL};
use fmarkov::{verify, Domain, GroupKind, GroupSpec};

create_exception!(fmarkov_py, FmarkovError, PyException);

fn err(e: fmarkov::Error) -> PyErr {
    FmarkovError::new_err(e.to_string())
}

fn spec_of(rank: usize, semigroup: bool) -> PyResult<GroupSpec> {
    let kind = if semigroup {
        GroupKind::Semigroup
    } else {
        GroupKind::Group
    };
    GroupSpec::new(rank, kind).map_err(err)
}

/// A transition system: `pi` and one stochastic matrix per generator.
#[pyclass(
    name = "TransitionSystem",
    module = "fmarkov_py",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyTransitionSystem {
    inner: tr::TransitionSystem,
}

impl PyTransitionSystem {
    fn source(&self, coarsen: Option<Vec<String>>) -> PyResult<MeasureSource> {
        match coarsen {
            Some(labels) => measure::coarsen(&self.inner, &labels).map_err(err),
            None => Ok(MeasureSource::Markov(self.inner.clone())),
        }
    }
}

fn wrap(r: fmarkov::Result<tr::TransitionSystem>) -> PyResult<PyTransitionSystem> {
    r.map(|inner| PyTransitionSystem { inner }).map_err(err)
}

#[pymethods]
impl PyTransitionSystem {
    #[staticmethod]
    #[pyo3(signature = (rank=2))]
    fn wsf(rank: usize) -> PyResult<Self> {
        wrap(tr::wsf_system(rank))
    }

    #[staticmethod]
    #[pyo3(signature = (rank=2))]
    fn matching(rank: usize) -> PyResult<Self> {
        wrap(tr::matching_system(rank))
    }

    #[staticmethod]
    #[pyo3(signature = (eps, rank=2, semigroup=false))]
    fn flip(eps: f64, rank: usize, semigroup: bool) -> PyResult<Self> {
        wrap(tr::flip_system(spec_of(rank, semigroup)?, eps))
    }

    #[staticmethod]
    #[pyo3(signature = (p, rank=2, semigroup=false))]
    fn bernoulli(p: Vec<f64>, rank: usize, semigroup: bool) -> PyResult<Self> {
        wrap(tr::bernoulli_system(spec_of(rank, semigroup)?, &p))
    }

    /// One permutation (list of images) per positive generator.
    #[staticmethod]
    #[pyo3(signature = (perms, semigroup=false))]
    fn permutation(perms: Vec<Vec<usize>>, semigroup: bool) -> PyResult<Self> {
        let n = perms.first().map_or(0, Vec::len);
        wrap(tr::permutation_system_from_positive(
            spec_of(perms.len(), semigroup)?,
            n,
            &perms,
        ))
    }

    #[staticmethod]
    #[pyo3(signature = (n, stay, rank=2, semigroup=false))]
    fn cyclic(n: usize, stay: f64, rank: usize, semigroup: bool) -> PyResult<Self> {
        wrap(tr::cyclic_system(spec_of(rank, semigroup)?, n, stay))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        wrap(tr::TransitionSystem::from_json(text))
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn product(&self, other: &PyTransitionSystem) -> PyResult<Self> {
        wrap(tr::product_system(&self.inner, &other.inner))
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.spec().rank()
    }

    #[getter]
    fn is_group(&self) -> bool {
        self.inner.spec().is_group()
    }

    #[getter]
    fn states(&self) -> Vec<String> {
        self.inner.states().to_vec()
    }

    #[getter]
    fn pi(&self) -> Vec<f64> {
        self.inner.pi().to_vec()
    }

    /// Matrices keyed by generator (`"s1"`, `"s1_inv"`, ...).
    #[getter]
    fn matrices(&self) -> Vec<(String, Vec<Vec<f64>>)> {
        self.inner
            .spec()
            .generators()
            .into_iter()
            .zip(self.inner.matrices())
            .map(|(s, m)| (s.file_key(), m.rows()))
            .collect()
    }

    /// `(ok, report text, max residual)`.
    #[pyo3(signature = (tol=USER_TOL))]
    fn validate(&self, tol: f64) -> (bool, String, f64) {
        let report = tr::validate(&self.inner, tol);
        (report.is_empty(), report.to_string(), report.max_residual())
    }

    /// Closed-form f; raises on non-invariant systems.
    fn f(&self) -> PyResult<f64> {
        entropy::f_markov(&self.inner).map_err(err)
    }

    /// `F(alpha^n)` by exact marginal entropies.
    #[pyo3(signature = (n, coarsen=None))]
    fn big_f(&self, n: usize, coarsen: Option<Vec<String>>) -> PyResult<f64> {
        Ok(entropy::big_f(&self.source(coarsen)?, n)
            .map_err(err)?
            .big_f)
    }

    #[pyo3(signature = (n_max, coarsen=None))]
    fn f_sequence(&self, n_max: usize, coarsen: Option<Vec<String>>) -> PyResult<Vec<f64>> {
        let reports = entropy::f_sequence(&self.source(coarsen)?, n_max).map_err(err)?;
        Ok(reports.into_iter().map(|r| r.big_f).collect())
    }

    /// Depth-`m` Markov approximation of this system (or its coarsening).
    #[pyo3(signature = (depth, coarsen=None))]
    fn approximation(&self, depth: usize, coarsen: Option<Vec<String>>) -> PyResult<Self> {
        let approx = markov_approximation(&self.source(coarsen)?, depth).map_err(err)?;
        Ok(PyTransitionSystem {
            inner: approx.inner,
        })
    }

    /// Sampled patterns on `B(e, radius)` as `(words, rows of state indices)`.
    #[pyo3(signature = (radius, count, seed=verify::DEFAULT_SEED))]
    fn sample(
        &self,
        radius: usize,
        count: usize,
        seed: u64,
    ) -> PyResult<(Vec<String>, Vec<Vec<usize>>)> {
        let s = measure::sample(&self.inner, radius, seed, count).map_err(err)?;
        Ok((s.domain.iter().map(|w| w.to_string()).collect(), s.rows))
    }

    /// Exact marginal on `B(e, radius)` as JSON.
    #[pyo3(signature = (radius, coarsen=None))]
    fn marginal_json(&self, radius: usize, coarsen: Option<Vec<String>>) -> PyResult<String> {
        let src = self.source(coarsen)?;
        let m = src
            .ball_marginal(&Domain::ball(src.spec(), radius))
            .map_err(err)?;
        Ok(m.to_json())
    }

    fn __repr__(&self) -> String {
        format!(
            "TransitionSystem(rank={}, kind={:?}, states={:?})",
            self.inner.spec().rank(),
            self.inner.spec().kind(),
            self.inner.states()
        )
    }
}

#[pyfunction]
fn shannon(p: Vec<f64>) -> PyResult<f64> {
    entropy::shannon(&p).map_err(err)
}

/// `H(A | B)` for a joint law with rows indexed by `A`.
#[pyfunction]
fn conditional_entropy(joint: Vec<Vec<f64>>) -> PyResult<f64> {
    entropy::conditional_entropy(&joint).map_err(err)
}

/// Words of `B(e, radius)` in shortlex order.
#[pyfunction]
#[pyo3(signature = (rank, radius, semigroup=false))]
fn ball(rank: usize, radius: usize, semigroup: bool) -> PyResult<Vec<String>> {
    let spec = spec_of(rank, semigroup)?;
    Ok(Domain::ball(&spec, radius)
        .iter()
        .map(|w| w.to_string())
        .collect())
}

#[pyfunction]
fn d1(a: &PyTransitionSystem, b: &PyTransitionSystem) -> f64 {
    measure::d1(&a.inner.pair_stats(), &b.inner.pair_stats())
}

/// Runs the verification suite and returns its JSON summary.
#[pyfunction]
#[pyo3(signature = (seed=verify::DEFAULT_SEED, only=None))]
fn run_checks(seed: u64, only: Option<&str>) -> String {
    verify::to_json(&verify::run_selected(seed, only))
}

#[pymodule]
fn fmarkov_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FmarkovError", m.py().get_type::<FmarkovError>())?;
    m.add_class::<PyTransitionSystem>()?;
    m.add_function(wrap_pyfunction!(shannon, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(ball, m)?)?;
    m.add_function(wrap_pyfunction!(d1, m)?)?;
    m.add_function(wrap_pyfunction!(run_checks, m)?)?;
    Ok(())
}
