//! Python bindings for the `cfrac` crate: scalar continued fractions, planar
//! convex-body fractions, and the two function-side fractions.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cfrac::body2::ConvexBody2;
use cfrac::fn1d::{
    self, default_h_pl, ATransformInstance, ConvexFn1, LfInstance, Slope, DEFAULT_H_BOUND,
};
use cfrac::geom::{rat_from_f64, rat_to_f64, Rat, Vec2};
use cfrac::scalar::{self, ScalarInstance};
use cfrac::semigroup::{
    self, ApproximantTrace, ConditionReport, TermSequence, TraceVerdict,
};
use cfrac::set_cf::{self, SetCFProblem};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_rat(x: f64) -> PyResult<Rat> {
    rat_from_f64(x).ok_or_else(|| PyValueError::new_err(format!("not a finite number: {x}")))
}

fn to_vec2(p: (f64, f64)) -> PyResult<Vec2> {
    Vec2::from_f64(p.0, p.1).ok_or_else(|| PyValueError::new_err("not a finite point"))
}

fn verdict_str(v: &TraceVerdict) -> &'static str {
    match v {
        TraceVerdict::Converged => "converged",
        TraceVerdict::DivergedOscillating => "diverged-oscillating",
        TraceVerdict::Undetermined => "undetermined",
    }
}

/// (n, gap, norm) triples plus verdict, shared by every trace wrapper.
#[pyclass(name = "Trace", from_py_object)]
#[derive(Clone)]
pub struct PyTrace {
    #[pyo3(get)]
    pub verdict: String,
    /// (n, gap, norm) per approximant; gap is NaN on the last entry.
    #[pyo3(get)]
    pub entries: Vec<(usize, f64, f64)>,
}

impl PyTrace {
    fn from_trace<V>(t: &ApproximantTrace<V>) -> PyTrace {
        PyTrace {
            verdict: verdict_str(&t.verdict).to_string(),
            entries: t.entries.iter().map(|e| (e.n, e.gap, e.norm)).collect(),
        }
    }
}

#[pymethods]
impl PyTrace {
    fn __repr__(&self) -> String {
        format!("Trace(verdict={:?}, n={})", self.verdict, self.entries.len())
    }
}

fn report_dict(py: Python<'_>, rep: &ConditionReport) -> PyResult<Py<PyAny>> {
    let d = pyo3::types::PyDict::new(py);
    d.set_item("criterion", &rep.criterion)?;
    d.set_item("holds", rep.holds())?;
    d.set_item("params", rep.params.clone())?;
    d.set_item("certificates", rep.certificates.clone())?;
    Ok(d.into_any().unbind())
}

// -- scalar ----------------------------------------------------------------

/// Limit of the finite continued fraction with the given positive terms.
#[pyfunction]
fn eval_cf(terms: Vec<f64>) -> f64 {
    scalar::eval_cf(&terms)
}

/// upsilon(r, R) = (sqrt(r^2 + 4 r / R) + r) / 2.
#[pyfunction]
fn upsilon(r: f64, big_r: f64) -> f64 {
    scalar::upsilon(r, big_r)
}

/// Limit of the periodic scalar fraction with terms in [r, R].
#[pyfunction]
fn periodic_limit(r: f64, big_r: f64) -> PyResult<f64> {
    scalar::periodic_limit(r, big_r).map_err(err)
}

/// Tail bound q^(2(n - 2k)) / ((1 - q^2) r).
#[pyfunction]
#[pyo3(signature = (q, k, r, n))]
fn a_posteriori_error(q: f64, k: usize, r: f64, n: usize) -> PyResult<f64> {
    semigroup::a_posteriori_error(q, k, r, n).map_err(err)
}

/// Trace of the scalar fraction; `periodic` repeats the term block forever.
#[pyfunction]
#[pyo3(signature = (terms, periodic = false, max_iter = 60, tol = 1e-9))]
fn scalar_trace(
    terms: Vec<f64>,
    periodic: bool,
    max_iter: usize,
    tol: f64,
) -> PyResult<(PyTrace, Vec<f64>, Option<f64>)> {
    let seq = if periodic { TermSequence::Periodic(terms) } else { TermSequence::Finite(terms) };
    let t = scalar::scalar_trace(&seq, max_iter, tol).map_err(err)?;
    let values = t.entries.iter().map(|e| e.value).collect();
    Ok((PyTrace::from_trace(&t), values, t.limit))
}

/// Contraction certificate for terms pinched in [r, R].
#[pyfunction]
fn check_urr(py: Python<'_>, r: f64, big_r: f64) -> PyResult<Py<PyAny>> {
    let rep = semigroup::check_urr(r, big_r, |x| ScalarInstance_profile(x)).map_err(err)?;
    report_dict(py, &rep)
}

#[allow(non_snake_case)]
fn ScalarInstance_profile(x: f64) -> f64 {
    use cfrac::semigroup::Instance;
    ScalarInstance.profile(x)
}

// -- bodies ----------------------------------------------------------------

/// Closed convex subset of the plane (polytope + recession cone).
#[pyclass(name = "Body", from_py_object)]
#[derive(Clone)]
pub struct PyBody {
    inner: ConvexBody2,
}

#[pymethods]
impl PyBody {
    /// Inscribed regular polygon approximating the ball of radius `r`.
    #[staticmethod]
    #[pyo3(signature = (r, sides = 64))]
    fn ball(r: f64, sides: usize) -> PyResult<PyBody> {
        Ok(PyBody { inner: ConvexBody2::ball_ngon(r, sides).map_err(err)? })
    }

    /// Segment from `-u` to `u`.
    #[staticmethod]
    fn segment(u: (f64, f64)) -> PyResult<PyBody> {
        Ok(PyBody { inner: ConvexBody2::centred_segment(to_vec2(u)?).map_err(err)? })
    }

    /// Horizontal strip `|y| <= a`.
    #[staticmethod]
    fn strip(a: f64) -> PyResult<PyBody> {
        Ok(PyBody { inner: ConvexBody2::strip(to_rat(a)?).map_err(err)? })
    }

    /// Convex hull of the given points plus recession rays.
    #[staticmethod]
    #[pyo3(signature = (points, rays = Vec::new()))]
    fn polygon(points: Vec<(f64, f64)>, rays: Vec<(f64, f64)>) -> PyResult<PyBody> {
        let pts: Vec<Vec2> = points.into_iter().map(to_vec2).collect::<PyResult<_>>()?;
        let rs: Vec<Vec2> = rays.into_iter().map(to_vec2).collect::<PyResult<_>>()?;
        Ok(PyBody { inner: ConvexBody2::from_vrep(&pts, &rs).map_err(err)? })
    }

    fn polar(&self) -> PyResult<PyBody> {
        Ok(PyBody { inner: self.inner.polar().map_err(err)? })
    }

    fn add(&self, other: &PyBody) -> PyResult<PyBody> {
        Ok(PyBody { inner: self.inner.minkowski_sum(&other.inner).map_err(err)? })
    }

    fn scale(&self, a: f64) -> PyResult<PyBody> {
        Ok(PyBody { inner: self.inner.scale(&to_rat(a)?).map_err(err)? })
    }

    /// Support value h_K(u), or None when unbounded in direction u.
    fn support(&self, u: (f64, f64)) -> PyResult<Option<f64>> {
        Ok(self.inner.support(&to_vec2(u)?).as_ref().map(rat_to_f64))
    }

    fn contains_point(&self, p: (f64, f64)) -> PyResult<bool> {
        Ok(self.inner.contains_point(&to_vec2(p)?))
    }

    fn hausdorff(&self, other: &PyBody) -> f64 {
        self.inner.hausdorff(&other.inner)
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn inradius(&self) -> f64 {
        self.inner.inradius_centered()
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.verts().iter().map(|v| v.to_f64()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Body(vertices={}, bounded={})",
            self.inner.verts().len(),
            self.inner.is_bounded()
        )
    }
}

/// Trace of the set-valued fraction; returns (trace, approximants, limit).
#[pyfunction]
#[pyo3(signature = (terms, periodic = false, max_iter = 60, tol = 1e-9))]
fn set_trace(
    terms: Vec<PyBody>,
    periodic: bool,
    max_iter: usize,
    tol: f64,
) -> PyResult<(PyTrace, Vec<PyBody>, Option<PyBody>)> {
    let bodies: Vec<ConvexBody2> = terms.into_iter().map(|b| b.inner).collect();
    let seq = if periodic { TermSequence::Periodic(bodies) } else { TermSequence::Finite(bodies) };
    let t = set_cf::set_cf_trace(&SetCFProblem { terms: seq, tolerance: tol, max_iter })
        .map_err(err)?;
    let values = t.entries.iter().map(|e| PyBody { inner: e.value.clone() }).collect();
    let limit = t.limit.clone().map(|b| PyBody { inner: b });
    Ok((PyTrace::from_trace(&t), values, limit))
}

/// Origin-in-interior criterion for constant set fractions.
#[pyfunction]
fn check_constant(py: Python<'_>, k: &PyBody) -> PyResult<Py<PyAny>> {
    report_dict(py, &set_cf::check_constant_theorem(&k.inner))
}

/// Convergence criterion on iterated sums K + K* + K + ...
#[pyfunction]
#[pyo3(signature = (k, k_max = 20))]
fn check_nec_suf(py: Python<'_>, k: &PyBody, k_max: usize) -> PyResult<Py<PyAny>> {
    report_dict(py, &set_cf::check_nec_suf(&k.inner, k_max).map_err(err)?)
}

/// Lipschitz bound for polarity on bodies containing the origin.
#[pyfunction]
fn polar_lipschitz_check(py: Python<'_>, k: &PyBody, l: &PyBody) -> PyResult<Py<PyAny>> {
    report_dict(py, &set_cf::polar_lipschitz_check(&k.inner, &l.inner))
}

// -- functions -------------------------------------------------------------

fn slope_out(s: &Slope) -> Option<f64> {
    match s {
        Slope::Finite(r) => Some(rat_to_f64(r)),
        Slope::NegInf => Some(f64::NEG_INFINITY),
        Slope::PosInf => Some(f64::INFINITY),
    }
}

/// Piecewise linear convex function f >= 0 with f(0) = 0.
#[pyclass(name = "Fn", from_py_object)]
#[derive(Clone)]
pub struct PyFn {
    inner: ConvexFn1,
}

#[pymethods]
impl PyFn {
    /// Breakpoints `(x, f(x))` plus boundary slopes; `None` means an
    /// infinite slope (bounded effective domain on that side).
    #[staticmethod]
    #[pyo3(signature = (points, left_slope = None, right_slope = None))]
    fn from_points(
        points: Vec<(f64, f64)>,
        left_slope: Option<f64>,
        right_slope: Option<f64>,
    ) -> PyResult<PyFn> {
        let pts: Vec<(Rat, Rat)> = points
            .into_iter()
            .map(|(x, y)| Ok((to_rat(x)?, to_rat(y)?)))
            .collect::<PyResult<_>>()?;
        let sl = match left_slope {
            Some(v) => Slope::Finite(to_rat(v)?),
            None => Slope::NegInf,
        };
        let sr = match right_slope {
            Some(v) => Slope::Finite(to_rat(v)?),
            None => Slope::PosInf,
        };
        Ok(PyFn { inner: ConvexFn1::new(pts, sl, sr).map_err(err)? })
    }

    /// f(x) = |x|.
    #[staticmethod]
    fn abs() -> PyFn {
        PyFn { inner: ConvexFn1::abs() }
    }

    /// PL surrogate of c x^2 / 2 on the default sampling grid; the
    /// surrogate sits within c * quad_bound() of the quadratic.
    #[staticmethod]
    fn quad(c: f64) -> PyResult<PyFn> {
        Ok(PyFn { inner: default_h_pl().scale_rat(&to_rat(c)?) })
    }

    /// Indicator of [a, b] (0 inside, +infinity outside).
    #[staticmethod]
    fn indicator(a: f64, b: f64) -> PyResult<PyFn> {
        Ok(PyFn { inner: ConvexFn1::indicator_interval(to_rat(a)?, to_rat(b)?).map_err(err)? })
    }

    /// f(x), or None outside the effective domain.
    fn eval(&self, x: f64) -> PyResult<Option<f64>> {
        Ok(self.inner.eval(&to_rat(x)?).as_ref().map(rat_to_f64))
    }

    fn add(&self, other: &PyFn) -> PyFn {
        PyFn { inner: self.inner.add(&other.inner) }
    }

    fn scale(&self, c: f64) -> PyResult<PyFn> {
        Ok(PyFn { inner: self.inner.scale_rat(&to_rat(c)?) })
    }

    /// Legendre conjugate f*.
    fn conjugate(&self) -> PyFn {
        PyFn { inner: self.inner.legendre() }
    }

    /// Infimal convolution (f [] g) = (f* + g*)*.
    fn inf_conv(&self, other: &PyFn) -> PyFn {
        PyFn { inner: self.inner.inf_conv(&other.inner) }
    }

    /// Second order-reversing involution A f.
    fn a_transform(&self) -> PyFn {
        PyFn { inner: self.inner.a_transform() }
    }

    /// Breakpoints and (left, right) boundary slopes (+-inf when infinite).
    fn points(&self) -> Vec<(f64, f64)> {
        self.inner.pts().iter().map(|(x, y)| (rat_to_f64(x), rat_to_f64(y))).collect()
    }

    fn slopes(&self) -> (Option<f64>, Option<f64>) {
        (slope_out(self.inner.left_slope()), slope_out(self.inner.right_slope()))
    }

    fn __eq__(&self, other: &PyFn) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Fn(breakpoints={})", self.inner.pts().len())
    }
}

/// Sampling error of Fn.quad(1) against x^2 / 2.
#[pyfunction]
fn quad_bound() -> f64 {
    DEFAULT_H_BOUND
}

/// Gauge-relative distance rho_h(f, g); h defaults to the quadratic
/// surrogate.
#[pyfunction]
#[pyo3(signature = (f, g, h = None))]
fn rho(f: &PyFn, g: &PyFn, h: Option<&PyFn>) -> f64 {
    let gauge = h.map(|h| h.inner.clone()).unwrap_or_else(default_h_pl);
    fn1d::rho_pl(&f.inner, &g.inner, &gauge)
}

/// Trace of the conjugation-based function fraction.
#[pyfunction]
#[pyo3(signature = (terms, periodic = false, max_iter = 60, tol = 1e-9))]
fn func_lf_trace(
    terms: Vec<PyFn>,
    periodic: bool,
    max_iter: usize,
    tol: f64,
) -> PyResult<(PyTrace, Option<PyFn>)> {
    let inst = LfInstance::default();
    let fs: Vec<ConvexFn1> = terms.into_iter().map(|f| f.inner).collect();
    let seq = if periodic { TermSequence::Periodic(fs) } else { TermSequence::Finite(fs) };
    let t = semigroup::approximant_trace(&inst, &seq, max_iter, tol).map_err(err)?;
    let limit = t.limit.clone().map(|f| PyFn { inner: f });
    Ok((PyTrace::from_trace(&t), limit))
}

/// Trace of the A-transform function fraction.
#[pyfunction]
#[pyo3(signature = (terms, periodic = false, max_iter = 60, tol = 1e-9))]
fn func_a_trace(
    terms: Vec<PyFn>,
    periodic: bool,
    max_iter: usize,
    tol: f64,
) -> PyResult<(PyTrace, Option<PyFn>)> {
    let inst = ATransformInstance::default();
    let fs: Vec<ConvexFn1> = terms.into_iter().map(|f| f.inner).collect();
    let seq = if periodic { TermSequence::Periodic(fs) } else { TermSequence::Finite(fs) };
    let t = semigroup::approximant_trace(&inst, &seq, max_iter, tol).map_err(err)?;
    let limit = t.limit.clone().map(|f| PyFn { inner: f });
    Ok((PyTrace::from_trace(&t), limit))
}

/// Constant-fraction criterion r^2 + 4 r / R > 4 for r h <= f <= R h.
#[pyfunction]
fn check_fn_constant(py: Python<'_>, f: &PyFn) -> PyResult<Py<PyAny>> {
    report_dict(py, &fn1d::check_legendre_theorem(&f.inner, &default_h_pl()))
}

/// PL surrogate of the self-polar power function c_p |x|^p; returns
/// (function, sampling_bound).
#[pyfunction]
#[pyo3(signature = (p, half_range = 16.0, steps = 3200))]
fn h_p(p: f64, half_range: f64, steps: u32) -> PyResult<(PyFn, f64)> {
    let (f, b) = fn1d::h_p_construct(p, half_range, steps).map_err(err)?;
    Ok((PyFn { inner: f }, b))
}

#[pymodule]
fn cfrac_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTrace>()?;
    m.add_class::<PyBody>()?;
    m.add_class::<PyFn>()?;
    m.add_function(wrap_pyfunction!(eval_cf, m)?)?;
    m.add_function(wrap_pyfunction!(upsilon, m)?)?;
    m.add_function(wrap_pyfunction!(periodic_limit, m)?)?;
    m.add_function(wrap_pyfunction!(a_posteriori_error, m)?)?;
    m.add_function(wrap_pyfunction!(scalar_trace, m)?)?;
    m.add_function(wrap_pyfunction!(check_urr, m)?)?;
    m.add_function(wrap_pyfunction!(set_trace, m)?)?;
    m.add_function(wrap_pyfunction!(check_constant, m)?)?;
    m.add_function(wrap_pyfunction!(check_nec_suf, m)?)?;
    m.add_function(wrap_pyfunction!(polar_lipschitz_check, m)?)?;
    m.add_function(wrap_pyfunction!(quad_bound, m)?)?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(func_lf_trace, m)?)?;
    m.add_function(wrap_pyfunction!(func_a_trace, m)?)?;
    m.add_function(wrap_pyfunction!(check_fn_constant, m)?)?;
    m.add_function(wrap_pyfunction!(h_p, m)?)?;
    Ok(())
}
