//! Python bindings for `monotest-core`.
//!
//! Type vectors are 4-tuples `(at, nt, d, c)`, outcomes are pairs
//! `(y_t, y_u)`, and exact probabilities come back as `fractions.Fraction`.
//! Test functions are lists of rejection probabilities in grid order (see
//! `TypeSpace.outcomes`).

use std::collections::BTreeMap;

use monotest_core::bayes::{self, DiscretePrior};
use monotest_core::freq::{self, PowerReport, TestFunction};
use monotest_core::{exact, identification, oracle, population, Design, Error, OutcomePmf, Rational, TypeCounts};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

create_exception!(monotest, MonotestError, PyValueError);

fn err(e: Error) -> PyErr {
    MonotestError::new_err(format!("{}: {e}", e.kind()))
}

type Theta = (u32, u32, u32, u32);

fn theta(t: Theta) -> TypeCounts {
    TypeCounts::new(t.0, t.1, t.2, t.3)
}

fn tuple(t: &TypeCounts) -> Theta {
    (t.at, t.nt, t.d, t.c)
}

fn design(n: u32, n1: u32) -> PyResult<Design> {
    Design::new(n, n1).map_err(err)
}

fn fraction<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((exact::format(r),))
}

fn rational(obj: &Bound<'_, PyAny>) -> PyResult<Rational> {
    exact::parse(&obj.str()?.to_cow()?).map_err(err)
}

fn pmf_dict<'py>(py: Python<'py>, f: &OutcomePmf) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for i in f.support_indices() {
        let y = f.design().outcome_at(i);
        d.set_item((y.y_t, y.y_u), fraction(py, &f.mass_at(i))?)?;
    }
    Ok(d)
}

fn report_dict<'py>(py: Python<'py>, r: &PowerReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("theta", tuple(&r.theta))?;
    d.set_item("power", r.power)?;
    d.set_item("wap", r.wap)?;
    d.set_item("size", r.size)?;
    Ok(d)
}

/// Exact outcome pmf `{(y_t, y_u): Fraction}` over the support.
#[pyfunction]
fn pmf<'py>(py: Python<'py>, n: u32, n1: u32, theta: Theta) -> PyResult<Bound<'py, PyDict>> {
    let f = population::pmf(design(n, n1)?, &self::theta(theta)).map_err(err)?;
    pmf_dict(py, &f)
}

/// Sorted outcome support.
#[pyfunction]
fn support(n: u32, n1: u32, theta: Theta) -> PyResult<Vec<(u32, u32)>> {
    let s = population::support(design(n, n1)?, &self::theta(theta)).map_err(err)?;
    Ok(s.into_iter().map(|y| (y.y_t, y.y_u)).collect())
}

/// `(mu_t, mu_u, mu_tu)` as fractions.
#[pyfunction]
fn moments<'py>(
    py: Python<'py>,
    n: u32,
    n1: u32,
    theta: Theta,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let f = population::pmf(design(n, n1)?, &self::theta(theta)).map_err(err)?;
    let m = identification::moments(&f);
    Ok((fraction(py, &m.mu_t)?, fraction(py, &m.mu_u)?, fraction(py, &m.mu_tu)?))
}

/// Type counts recovered from moments given as fractions, ints or strings.
#[pyfunction]
fn invert_moments(
    n: u32,
    n1: u32,
    mu_t: &Bound<'_, PyAny>,
    mu_u: &Bound<'_, PyAny>,
    mu_tu: &Bound<'_, PyAny>,
) -> PyResult<Theta> {
    let m = identification::Moments {
        mu_t: rational(mu_t)?,
        mu_u: rational(mu_u)?,
        mu_tu: rational(mu_tu)?,
    };
    identification::invert_moments(&m, design(n, n1)?)
        .map(|t| tuple(&t))
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, v, alpha = 0.05))]
fn wap_bound(n: u32, v: &Bound<'_, PyAny>, alpha: f64) -> PyResult<f64> {
    freq::wap_bound(n, &rational(v)?, alpha).map_err(err)
}

/// `{"dual_bound", "closed_form", "dual_bound_exact"}` for an alternative.
#[pyfunction]
#[pyo3(signature = (n, n1, theta, alpha = 0.05))]
fn unbiased_power_bound<'py>(
    py: Python<'py>,
    n: u32,
    n1: u32,
    theta: Theta,
    alpha: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let b = freq::unbiased_power_bound(design(n, n1)?, &self::theta(theta), alpha).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("dual_bound", b.dual_bound)?;
    d.set_item("closed_form", b.closed_form)?;
    d.set_item("dual_bound_exact", fraction(py, &b.dual_bound_exact)?)?;
    Ok(d)
}

fn prior_dict<'py>(py: Python<'py>, p: &DiscretePrior) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (t, w) in p.weights() {
        d.set_item(tuple(t), fraction(py, w)?)?;
    }
    Ok(d)
}

/// Never-updating prior for the balanced design of size `n` with null
/// probability `c`, and its posterior null probability at each supported
/// outcome: `(prior, {(y_t, y_u): Fraction})`.
#[pyfunction]
fn never_update<'py>(
    py: Python<'py>,
    n: u32,
    c: &Bound<'_, PyAny>,
) -> PyResult<(Bound<'py, PyDict>, Bound<'py, PyDict>)> {
    let d = design(n, n / 2)?;
    let prior = bayes::never_update_prior(d, &rational(c)?).map_err(err)?;
    let marginal = prior.marginal().map_err(err)?;
    let post = PyDict::new(py);
    for (i, m) in marginal.iter().enumerate() {
        if *m > Rational::from_integer(0.into()) {
            let y = d.outcome_at(i);
            let p = bayes::posterior_null_prob(&prior, y).map_err(err)?;
            post.set_item((y.y_t, y.y_u), fraction(py, &p)?)?;
        }
    }
    Ok((prior_dict(py, &prior)?, post))
}

/// Posterior null probability under equal prior mass on two type vectors.
#[pyfunction]
fn two_point_posterior<'py>(
    py: Python<'py>,
    n: u32,
    n1: u32,
    theta0: Theta,
    theta1: Theta,
    y: (u32, u32),
) -> PyResult<Bound<'py, PyAny>> {
    let prior = bayes::two_point_prior(design(n, n1)?, &theta(theta0), &theta(theta1)).map_err(err)?;
    let p = bayes::posterior_null_prob(&prior, population::OutcomeCounts::new(y.0, y.1)).map_err(err)?;
    fraction(py, &p)
}

/// The parity lattice sets `{"a", "b", "c"}` as sorted lists of outcomes.
#[pyfunction]
fn lattice_sets<'py>(py: Python<'py>, n: u32) -> PyResult<Bound<'py, PyDict>> {
    let s = bayes::lattice_sets(n).map_err(err)?;
    let d = PyDict::new(py);
    for (name, set) in [("a", &s.a), ("b", &s.b), ("c", &s.c)] {
        let items: Vec<(u32, u32)> = set.iter().map(|y| (y.y_t, y.y_u)).collect();
        d.set_item(name, items)?;
    }
    Ok(d)
}

/// Exact pmf by enumerating all treated subsets.
#[pyfunction]
#[pyo3(signature = (n, n1, theta, cap = oracle::DEFAULT_CAP))]
fn enumerate_pmf<'py>(py: Python<'py>, n: u32, n1: u32, theta: Theta, cap: u64) -> PyResult<Bound<'py, PyDict>> {
    let table = oracle::science_table_from(&self::theta(theta));
    let f = oracle::enumerate_pmf(design(n, n1)?, &table, cap).map_err(err)?;
    pmf_dict(py, &f)
}

/// Empirical pmf from `reps` seeded random assignments.
#[pyfunction]
fn monte_carlo_pmf<'py>(
    py: Python<'py>,
    n: u32,
    n1: u32,
    theta: Theta,
    seed: u64,
    reps: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let table = oracle::science_table_from(&self::theta(theta));
    let f = oracle::monte_carlo_pmf(design(n, n1)?, &table, seed, reps).map_err(err)?;
    pmf_dict(py, &f)
}

/// All type vectors of a design with their outcome pmfs; entry point for
/// test construction and evaluation.
#[pyclass(name = "TypeSpace", frozen)]
struct PyTypeSpace {
    inner: population::TypeSpace,
}

impl PyTypeSpace {
    fn test(&self, values: Vec<f64>) -> PyResult<TestFunction> {
        TestFunction::new(self.inner.design(), values).map_err(err)
    }
}

#[pymethods]
impl PyTypeSpace {
    #[new]
    fn new(py: Python<'_>, n: u32, n1: u32) -> PyResult<Self> {
        let d = design(n, n1)?;
        Ok(PyTypeSpace {
            inner: py.detach(|| population::TypeSpace::new(d)),
        })
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.design().n()
    }

    #[getter]
    fn n1(&self) -> u32 {
        self.inner.design().n1()
    }

    /// Outcome grid in the order used by test functions.
    fn outcomes(&self) -> Vec<(u32, u32)> {
        self.inner.design().outcomes().map(|y| (y.y_t, y.y_u)).collect()
    }

    fn nulls(&self) -> Vec<Theta> {
        self.inner.nulls().iter().map(|&i| tuple(&self.inner.types()[i])).collect()
    }

    fn alternatives(&self) -> Vec<Theta> {
        self.inner.alternatives().iter().map(|&i| tuple(&self.inner.types()[i])).collect()
    }

    fn power(&self, values: Vec<f64>, theta: Theta) -> PyResult<f64> {
        freq::power_at(&self.inner, &self.test(values)?, &self::theta(theta)).map_err(err)
    }

    fn power_exact<'py>(&self, py: Python<'py>, values: Vec<f64>, theta: Theta) -> PyResult<Bound<'py, PyAny>> {
        let p = freq::power_at_exact(&self.test(values)?, &self::theta(theta)).map_err(err)?;
        fraction(py, &p)
    }

    fn size(&self, values: Vec<f64>) -> PyResult<f64> {
        freq::size_of(&self.inner, &self.test(values)?).map_err(err)
    }

    fn wap(&self, values: Vec<f64>, theta: Theta) -> PyResult<f64> {
        freq::wap(&self.inner, &self.test(values)?, &self::theta(theta)).map_err(err)
    }

    /// `(values, report)` for the most powerful test against `theta`.
    #[pyo3(signature = (theta, alpha = 0.05))]
    fn mp_test<'py>(&self, py: Python<'py>, theta: Theta, alpha: f64) -> PyResult<(Vec<f64>, Bound<'py, PyDict>)> {
        let (delta, report) = py
            .detach(|| freq::mp_test(&self.inner, &self::theta(theta), alpha))
            .map_err(err)?;
        Ok((delta.values().to_vec(), report_dict(py, &report)?))
    }

    /// One report dict per alternative, in canonical order.
    #[pyo3(signature = (alpha = 0.05))]
    fn power_scan<'py>(&self, py: Python<'py>, alpha: f64) -> PyResult<Bound<'py, PyList>> {
        let rows = py.detach(|| freq::power_scan(&self.inner, alpha)).map_err(err)?;
        let out = PyList::empty(py);
        for r in &rows {
            out.append(report_dict(py, r)?)?;
        }
        Ok(out)
    }

    /// `(values, theta1, unscaled_size)` of the support-based test.
    #[pyo3(signature = (alpha = 0.05))]
    fn support_test<'py>(&self, py: Python<'py>, alpha: f64) -> PyResult<(Vec<f64>, Theta, Bound<'py, PyAny>)> {
        let st = freq::support_test(&self.inner, alpha).map_err(err)?;
        Ok((st.test.values().to_vec(), tuple(&st.theta1), fraction(py, &st.unscaled_size)?))
    }

    #[pyo3(signature = (alpha = 0.05))]
    fn unbiased_test(&self, alpha: f64) -> PyResult<Vec<f64>> {
        freq::unbiased_test(&self.inner, alpha)
            .map(|d| d.values().to_vec())
            .map_err(err)
    }

    /// `(theta_weak, power, average_power)` for a level-`alpha` test.
    #[pyo3(signature = (values, alpha = 0.05))]
    fn trivial_power_check(&self, values: Vec<f64>, alpha: f64) -> PyResult<(Theta, f64, f64)> {
        let r = freq::trivial_power_check(&self.inner, &self.test(values)?, alpha).map_err(err)?;
        Ok((tuple(&r.theta_weak), r.power, r.average_power))
    }
}

/// Prior from a `{theta: weight}` mapping; weights are parsed exactly.
#[pyfunction]
fn posterior_null_prob<'py>(
    py: Python<'py>,
    n: u32,
    n1: u32,
    prior: BTreeMap<Theta, Bound<'py, PyAny>>,
    y: (u32, u32),
) -> PyResult<Bound<'py, PyAny>> {
    let mut weights = BTreeMap::new();
    for (t, w) in prior {
        weights.insert(theta(t), rational(&w)?);
    }
    let prior = DiscretePrior::new(design(n, n1)?, weights).map_err(err)?;
    let p = bayes::posterior_null_prob(&prior, population::OutcomeCounts::new(y.0, y.1)).map_err(err)?;
    fraction(py, &p)
}

#[pymodule]
fn monotest(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MonotestError", m.py().get_type::<MonotestError>())?;
    m.add_class::<PyTypeSpace>()?;
    m.add_function(wrap_pyfunction!(pmf, m)?)?;
    m.add_function(wrap_pyfunction!(support, m)?)?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(invert_moments, m)?)?;
    m.add_function(wrap_pyfunction!(wap_bound, m)?)?;
    m.add_function(wrap_pyfunction!(unbiased_power_bound, m)?)?;
    m.add_function(wrap_pyfunction!(never_update, m)?)?;
    m.add_function(wrap_pyfunction!(two_point_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(posterior_null_prob, m)?)?;
    m.add_function(wrap_pyfunction!(lattice_sets, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_pmf, m)?)?;
    Ok(())
}
