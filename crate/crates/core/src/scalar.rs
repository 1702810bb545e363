//! The extended nonnegative reals `[0, +inf]` with `*` = reciprocal
//! (`1/0 = inf`, `1/inf = 0`): the model instance, and the oracle the set
//! and function instances reduce to on centred balls and quadratics.

use crate::error::{CfError, Result};
use crate::semigroup::{
    ApproximantTrace, ConditionReport, Instance, TermSequence, TraceVerdict, Verdict,
};

pub struct ScalarInstance;

fn recip(x: f64) -> f64 {
    if x == 0.0 {
        f64::INFINITY
    } else if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

impl Instance for ScalarInstance {
    type Val = f64;

    fn add(&self, x: &f64, y: &f64) -> f64 {
        x + y
    }

    fn involute(&self, x: &f64) -> f64 {
        recip(*x)
    }

    fn scale(&self, a: f64, x: &f64) -> f64 {
        if *x == 0.0 {
            0.0
        } else {
            a * x
        }
    }

    fn neutral(&self) -> f64 {
        0.0
    }

    fn top(&self) -> f64 {
        f64::INFINITY
    }

    fn leq(&self, x: &f64, y: &f64, tol: f64) -> bool {
        *x <= y + tol
    }

    fn rho(&self, x: &f64, y: &f64) -> f64 {
        if x.is_infinite() && y.is_infinite() {
            0.0
        } else {
            (x - y).abs()
        }
    }

    fn h_lower(&self, x: &f64) -> f64 {
        *x
    }

    fn h_upper(&self, x: &f64) -> f64 {
        *x
    }

    fn profile(&self, _ratio: f64) -> f64 {
        1.0
    }

    fn exact_xh(&self) -> bool {
        true
    }
}

/// Backward evaluation of `[b_1, ..., b_n]` in extended arithmetic.
pub fn eval_cf(terms: &[f64]) -> f64 {
    assert!(!terms.is_empty());
    let mut z = recip(*terms.last().unwrap());
    for b in terms[..terms.len() - 1].iter().rev() {
        z = recip(b + z);
    }
    z
}

/// `upsilon(r, R) = (sqrt(r^2 + 4 r / R) + r) / 2`, the reciprocal of the limit
/// of the 2-periodic fraction `[r, R, r, R, ...]`.
pub fn upsilon(r: f64, big_r: f64) -> f64 {
    let quot = if big_r.is_infinite() { 0.0 } else { 4.0 * r / big_r };
    0.5 * ((r * r + quot).sqrt() + r)
}

/// Limit of `[r, R, r, R, ...]` = `1 / upsilon(r, R)`.
pub fn periodic_limit(r: f64, big_r: f64) -> Result<f64> {
    if !(r > 0.0) || !(big_r > 0.0) {
        return Err(CfError::InvalidParameters("need r, R > 0".into()));
    }
    Ok(1.0 / upsilon(r, big_r))
}

/// `[b_1, ..., b_n]` with input validation.
pub fn scalar_cf(terms: &[f64]) -> Result<f64> {
    if terms.is_empty() {
        return Err(CfError::InvalidInput("empty term list".into()));
    }
    if terms.iter().any(|b| *b < 0.0 || b.is_nan()) {
        return Err(CfError::InvalidInput("terms must lie in [0, inf]".into()));
    }
    Ok(eval_cf(terms))
}

/// Trace of a scalar fraction over a term sequence.
pub fn scalar_trace(
    terms: &TermSequence<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<ApproximantTrace<f64>> {
    crate::semigroup::approximant_trace(&ScalarInstance, terms, max_iter, tol)
}

/// Seidel–Stern style dichotomy for positive scalar terms: the fraction
/// converges iff the partial sums of the terms diverge.  The verdict reports
/// the convergence side; both the empirical trace and the partial sums at the
/// horizon are used, since for a rule sequence the sum behaviour beyond the
/// horizon is unknowable here.
pub fn seidel_stern_verdict(terms: &TermSequence<f64>, horizon: usize, tol: f64) -> Result<ConditionReport> {
    let avail = match terms {
        TermSequence::Finite(v) => v.len().min(horizon),
        _ => horizon,
    };
    if avail < 2 * crate::semigroup::CONVERGENCE_WINDOW + 2 {
        return Err(CfError::InvalidParameters(
            "horizon too short for a verdict".into(),
        ));
    }
    let prefix = terms.prefix(avail).unwrap();
    if prefix.iter().any(|b| !(*b > 0.0)) {
        return Err(CfError::InvalidInput(
            "dichotomy applies to strictly positive terms".into(),
        ));
    }
    let sum: f64 = prefix.iter().sum();
    let tail_sum: f64 = prefix[avail / 2..].iter().sum();
    let trace = scalar_trace(terms, avail, tol)?;
    // Sum divergence is the decisive quantity; the empirical trace settles the
    // clear-cut cases, the tail of the partial sums the slow ones.
    let verdict = match trace.verdict {
        TraceVerdict::Converged => Verdict::Holds,
        TraceVerdict::DivergedOscillating => Verdict::Fails,
        TraceVerdict::Undetermined => {
            if tail_sum < 100.0 * tol {
                Verdict::Fails
            } else if tail_sum > 0.5 {
                Verdict::Holds
            } else {
                Verdict::HorizonLimited
            }
        }
    };
    Ok(ConditionReport {
        criterion: "seidel-stern".into(),
        params: vec![("horizon".into(), avail as f64), ("tol".into(), tol)],
        verdict,
        certificates: vec![(avail, sum)],
    })
}
