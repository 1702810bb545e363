//! Continued-fraction engine over a partially ordered abelian semigroup
//! carrying an order-reversing involution `*` and a distinguished self-polar
//! element `h`.
//!
//! The fraction built from terms `x1, x2, ...` is the backward fold
//! `[x1] = x1*`, `[x1, ..., x_{n+1}] = (x1 + [x2, ..., x_{n+1}])*`.
//! Everything below is generic over an [`Instance`]; the concrete semigroups
//! (extended reals, planar convex bodies, convex functions) live in sibling
//! modules.

use serde::Serialize;

use crate::error::{CfError, Result};
use crate::scalar;

/// One semigroup instance: the carrier type plus the operations and the
/// metric data derived from its self-polar element.
pub trait Instance {
    type Val: Clone;

    fn add(&self, x: &Self::Val, y: &Self::Val) -> Self::Val;
    fn involute(&self, x: &Self::Val) -> Self::Val;
    fn scale(&self, a: f64, x: &Self::Val) -> Self::Val;

    /// Neutral element `e` (0, {0}, the zero function).
    fn neutral(&self) -> Self::Val;
    /// Absorbing element `e* ` (infinity, the whole plane, the indicator of {0}... dualized).
    fn top(&self) -> Self::Val;

    /// `x <= y` up to `tol` in units of `h`: `x <= y + tol * h`.
    /// `tol == 0` requests the exact comparison where the instance supports it.
    fn leq(&self, x: &Self::Val, y: &Self::Val, tol: f64) -> bool;

    /// Metric `rho_h(x, y) = inf { t >= 0 : x <= y + t h, y <= x + t h }`.
    /// May be `f64::INFINITY`.
    fn rho(&self, x: &Self::Val, y: &Self::Val) -> f64;

    fn norm(&self, x: &Self::Val) -> f64 {
        self.rho(x, &self.neutral())
    }

    /// Largest `a` with `a h <= x` (inradius-like quantity).
    fn h_lower(&self, x: &Self::Val) -> f64;
    /// Smallest `a` with `x <= a h` (norm-like quantity).
    fn h_upper(&self, x: &Self::Val) -> f64;

    /// Lipschitz profile `C_R` of the involution on `{ h <= x <= R h }`,
    /// nondecreasing in `R`, `C_1 >= 1`.
    fn profile(&self, ratio: f64) -> f64;

    /// Whether `rho_h(x*, (x + t h)*) <= t` holds exactly for `x >= h`
    /// in this instance (as opposed to only the profile-weighted form).
    fn exact_xh(&self) -> bool;
}

/// Term sequences fed to the engine. `Rule` terms are unbounded ahead, which
/// matters for the verdicts of window-based checks.
pub enum TermSequence<V> {
    Finite(Vec<V>),
    /// Infinite repetition of the given block.
    Periodic(Vec<V>),
    Rule(Box<dyn Fn(usize) -> V>),
}

impl<V: Clone> TermSequence<V> {
    /// Term `x_n`, 1-based. `None` once a finite sequence is exhausted.
    pub fn term(&self, n: usize) -> Option<V> {
        assert!(n >= 1);
        match self {
            TermSequence::Finite(v) => v.get(n - 1).cloned(),
            TermSequence::Periodic(v) => Some(v[(n - 1) % v.len()].clone()),
            TermSequence::Rule(f) => Some(f(n)),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, TermSequence::Finite(_))
    }

    pub fn is_rule(&self) -> bool {
        matches!(self, TermSequence::Rule(_))
    }

    pub fn prefix(&self, n: usize) -> Option<Vec<V>> {
        (1..=n).map(|i| self.term(i)).collect()
    }
}

/// `[x1, ..., xn]` by the backward recursion.
pub fn approximant<I: Instance>(inst: &I, terms: &[I::Val]) -> Result<I::Val> {
    if terms.is_empty() {
        return Err(CfError::InvalidInput("empty term list".into()));
    }
    let mut z = inst.involute(terms.last().unwrap());
    for x in terms[..terms.len() - 1].iter().rev() {
        z = inst.involute(&inst.add(x, &z));
    }
    Ok(z)
}

/// Dual addition `x (+) y = (x* + y*)*`.
pub fn dual_add<I: Instance>(inst: &I, x: &I::Val, y: &I::Val) -> I::Val {
    inst.involute(&inst.add(&inst.involute(x), &inst.involute(y)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceVerdict {
    Converged,
    DivergedOscillating,
    Undetermined,
}

#[derive(Clone)]
pub struct TraceEntry<V> {
    pub n: usize,
    pub value: V,
    /// `rho(z_n, z_{n+1})`; `NAN` for the last computed entry.
    pub gap: f64,
    pub norm: f64,
}

pub struct ApproximantTrace<V> {
    pub entries: Vec<TraceEntry<V>>,
    pub verdict: TraceVerdict,
    /// `z_N` when the verdict is `Converged`.
    pub limit: Option<V>,
    /// Even / odd subsequence representatives when oscillating.
    pub even_limit: Option<V>,
    pub odd_limit: Option<V>,
    pub events: Vec<String>,
}

/// Number of consecutive sub-tolerance gaps required to declare convergence.
pub const CONVERGENCE_WINDOW: usize = 8;
/// Oscillating divergence requires the two interleaved limits to differ by
/// more than this multiple of the tolerance.
pub const OSCILLATION_FACTOR: f64 = 10.0;

/// Computes `z_1..z_N` with `rho`-gaps and classifies the tail.
///
/// Constant and periodic sequences use the forward recursion over rotations
/// (O(N p) semigroup operations); arbitrary finite lists fall back to the
/// O(N^2) backward fold.
pub fn approximant_trace<I: Instance>(
    inst: &I,
    terms: &TermSequence<I::Val>,
    max_iter: usize,
    tol: f64,
) -> Result<ApproximantTrace<I::Val>> {
    if max_iter == 0 {
        return Err(CfError::InvalidParameters("max_iter must be positive".into()));
    }
    if tol <= 0.0 {
        return Err(CfError::InvalidParameters("tol must be positive".into()));
    }
    let mut values: Vec<I::Val> = Vec::with_capacity(max_iter);
    let mut gaps_inline: Option<Vec<f64>> = None;
    match terms {
        TermSequence::Periodic(block) => {
            let p = block.len();
            if p == 0 {
                return Err(CfError::InvalidInput("empty periodic block".into()));
            }
            // state[r] = [x_{r+1}, ..., x_{r+m}] for the current length m
            let mut state: Vec<I::Val> = (0..p).map(|r| inst.involute(&block[r])).collect();
            values.push(state[0].clone());
            let mut gv: Vec<f64> = Vec::new();
            for _m in 2..=max_iter {
                let next: Vec<I::Val> = (0..p)
                    .map(|r| inst.involute(&inst.add(&block[r], &state[(r + 1) % p])))
                    .collect();
                state = next;
                gv.push(inst.rho(values.last().unwrap(), &state[0]));
                values.push(state[0].clone());
                // stop once convergence is already established
                let c = gv.len();
                if c >= CONVERGENCE_WINDOW
                    && gv[c - CONVERGENCE_WINDOW..].iter().all(|g| g.is_finite() && *g < tol)
                {
                    break;
                }
            }
            gaps_inline = Some(gv);
        }
        _ => {
            let avail = match terms {
                TermSequence::Finite(v) => v.len().min(max_iter),
                _ => max_iter,
            };
            if avail == 0 {
                return Err(CfError::InvalidInput("empty term list".into()));
            }
            let prefix = terms.prefix(avail).unwrap();
            for n in 1..=avail {
                values.push(approximant(inst, &prefix[..n])?);
            }
        }
    }

    let count = values.len();
    let mut gaps = vec![f64::NAN; count];
    let mut events = Vec::new();
    match gaps_inline {
        Some(gv) => {
            for (i, g) in gv.into_iter().enumerate() {
                gaps[i] = g;
            }
        }
        None => {
            for n in 0..count - 1 {
                gaps[n] = inst.rho(&values[n], &values[n + 1]);
            }
        }
    }
    for n in 0..count.saturating_sub(1) {
        if gaps[n].is_infinite() && events.len() < 4 {
            events.push(format!("rho(z_{}, z_{}) is infinite", n + 1, n + 2));
        }
    }

    let entries: Vec<TraceEntry<I::Val>> = values
        .iter()
        .enumerate()
        .map(|(i, v)| TraceEntry {
            n: i + 1,
            value: v.clone(),
            gap: gaps[i],
            norm: inst.norm(v),
        })
        .collect();

    // Convergence: a trailing window of small consecutive gaps.
    let converged = count > CONVERGENCE_WINDOW
        && gaps[count - 1 - CONVERGENCE_WINDOW..count - 1]
            .iter()
            .all(|g| g.is_finite() && *g < tol);

    let mut verdict = TraceVerdict::Undetermined;
    let mut limit = None;
    let mut even_limit = None;
    let mut odd_limit = None;
    if converged {
        verdict = TraceVerdict::Converged;
        limit = Some(values[count - 1].clone());
    } else if count >= 2 * CONVERGENCE_WINDOW + 2 {
        // Oscillation: both parity subsequences settle while staying apart.
        let sub_gap = |start: usize| -> Vec<f64> {
            let mut v = Vec::new();
            let mut i = start;
            while i + 2 < count {
                v.push(inst.rho(&values[i], &values[i + 2]));
                i += 2;
            }
            v
        };
        let even = sub_gap(1); // z_2, z_4, ... (0-based index 1)
        let odd = sub_gap(0);
        let settled = |g: &[f64]| {
            g.len() >= CONVERGENCE_WINDOW / 2
                && g[g.len() - CONVERGENCE_WINDOW / 2..]
                    .iter()
                    .all(|x| x.is_finite() && *x < tol)
        };
        if settled(&even) && settled(&odd) {
            // values[i] is z_{i+1}: even-n approximants sit at odd 0-based indices
            let last_even = if (count - 1) % 2 == 1 { count - 1 } else { count - 2 };
            let last_odd = if last_even == count - 1 { count - 2 } else { count - 1 };
            let le = &values[last_even];
            let lo = &values[last_odd];
            let split = inst.rho(le, lo);
            if split > OSCILLATION_FACTOR * tol {
                verdict = TraceVerdict::DivergedOscillating;
                even_limit = Some(le.clone());
                odd_limit = Some(lo.clone());
                events.push(format!("even/odd limits separated by {split:.3e}"));
            }
        }
    }

    Ok(ApproximantTrace {
        entries,
        verdict,
        limit,
        even_limit,
        odd_limit,
        events,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    HorizonLimited,
    NotApplicable,
}

/// Outcome of one condition check, with numeric witnesses.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub criterion: String,
    pub params: Vec<(String, f64)>,
    pub verdict: Verdict,
    /// Pairs (index, witness value); the index is 0 where no natural index exists.
    pub certificates: Vec<(usize, f64)>,
}

impl ConditionReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

/// Monotonicity of the two interleaved approximant chains:
/// `z_2 <= z_4 <= ...` and `z_1 >= z_3 >= ...`.
pub fn check_monotone<I: Instance>(
    inst: &I,
    trace: &ApproximantTrace<I::Val>,
    tol: f64,
) -> ConditionReport {
    let vals = &trace.entries;
    let mut verdict = Verdict::Holds;
    let mut certificates = Vec::new();
    let mut i = 1; // z_2 at index 1
    while i + 2 < vals.len() {
        if !inst.leq(&vals[i].value, &vals[i + 2].value, tol) {
            verdict = Verdict::Fails;
            certificates.push((i + 1, inst.rho(&vals[i].value, &vals[i + 2].value)));
        }
        i += 2;
    }
    let mut i = 0;
    while i + 2 < vals.len() {
        if !inst.leq(&vals[i + 2].value, &vals[i].value, tol) {
            verdict = Verdict::Fails;
            certificates.push((i + 1, inst.rho(&vals[i].value, &vals[i + 2].value)));
        }
        i += 2;
    }
    ConditionReport {
        criterion: "monotone".into(),
        params: vec![("tol".into(), tol), ("n".into(), vals.len() as f64)],
        verdict,
        certificates,
    }
}

/// Scalar sandwich for terms pinched as `r_n h <= x_n <= R_n h`: returns the
/// pair of scalar fraction values bracketing `[x_1,...,x_n]` in units of `h`.
/// The lower fraction alternates `R_1, r_2, R_3, ...`, the upper one
/// `r_1, R_2, r_3, ...` (so the final term agrees with parity).
pub fn sandwich_bounds(r_seq: &[f64], big_r_seq: &[f64]) -> Result<(f64, f64)> {
    let n = r_seq.len();
    if n == 0 || big_r_seq.len() != n {
        return Err(CfError::InvalidParameters(
            "need equal-length nonempty bound sequences".into(),
        ));
    }
    for i in 0..n {
        if !(r_seq[i] >= 0.0) || big_r_seq[i] < r_seq[i] {
            return Err(CfError::InvalidParameters(format!(
                "need 0 <= r_n <= R_n at n = {}",
                i + 1
            )));
        }
    }
    let lower: Vec<f64> = (0..n)
        .map(|i| if i % 2 == 0 { big_r_seq[i] } else { r_seq[i] })
        .collect();
    let upper: Vec<f64> = (0..n)
        .map(|i| if i % 2 == 0 { r_seq[i] } else { big_r_seq[i] })
        .collect();
    Ok((scalar::eval_cf(&lower), scalar::eval_cf(&upper)))
}

/// Simple uniform-bound convergence cases for instances where the
/// `rho_h(x*, (x + t h)*) <= t` contraction is exact:
/// (i) `r > 1`; (ii) `r = 1` with `R` finite; (iii) `r < 1` with `R <= r/(1-r)`.
pub fn check_uniform_simple<I: Instance>(inst: &I, r: f64, big_r: f64) -> Result<ConditionReport> {
    if !(r > 0.0) || big_r < r {
        return Err(CfError::InvalidParameters("need 0 < r <= R".into()));
    }
    if !inst.exact_xh() {
        return Err(CfError::InvalidParameters(
            "instance lacks the exact contraction; use check_urr with its profile".into(),
        ));
    }
    let eps = 1e-12;
    let case = if r > 1.0 + eps {
        1
    } else if (r - 1.0).abs() <= eps && big_r.is_finite() {
        2
    } else if r < 1.0 + eps && big_r <= r / (1.0 - r).max(eps) + eps {
        3
    } else {
        0
    };
    Ok(ConditionReport {
        criterion: "uniform-simple".into(),
        params: vec![("r".into(), r), ("R".into(), big_r)],
        verdict: if case > 0 { Verdict::Holds } else { Verdict::Fails },
        certificates: vec![(case, r / (1.0 - r).abs().max(eps))],
    })
}

/// Uniform contraction test with a nontrivial profile `C`:
/// `q = C(upsilon(R,r)/upsilon(r,R)) / upsilon(r,R)` must be below 1.
pub fn check_urr(
    r: f64,
    big_r: f64,
    profile: impl Fn(f64) -> f64,
) -> Result<ConditionReport> {
    if !(r > 0.0) || big_r < r {
        return Err(CfError::InvalidParameters("need 0 < r <= R".into()));
    }
    let u = scalar::upsilon(r, big_r);
    let u_rev = scalar::upsilon(big_r, r);
    let q = profile(u_rev / u) / u;
    Ok(ConditionReport {
        criterion: "urr".into(),
        params: vec![("r".into(), r), ("R".into(), big_r)],
        verdict: if q < 1.0 { Verdict::Holds } else { Verdict::Fails },
        certificates: vec![(0, q)],
    })
}

/// Windowed two-sided pinching: for each start `n`,
/// `x_n + [x_{n+1},...,x_{n+2k}] >= a h` and
/// `x_n + [x_{n+1},...,x_{n+2k-1}] <= b h`, together with `a > C(b/a)`.
pub fn check_subk<I: Instance>(
    inst: &I,
    terms: &TermSequence<I::Val>,
    k: usize,
    a: f64,
    b: f64,
    n_windows: usize,
) -> Result<ConditionReport> {
    if k == 0 {
        return Err(CfError::InvalidParameters("need k >= 1".into()));
    }
    if !(a > 0.0) || b < a {
        return Err(CfError::InvalidParameters("need 0 < a <= b".into()));
    }
    let profile_gate = inst.profile(b / a);
    let mut verdict = if a > profile_gate {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    let mut certificates = vec![(0, profile_gate)];
    let eps = 1e-12;
    let mut checked = 0usize;
    for n in 1..=n_windows {
        let window: Option<Vec<I::Val>> = (n..=n + 2 * k).map(|i| terms.term(i)).collect();
        let window = match window {
            Some(w) => w,
            None => break, // finite sequence exhausted
        };
        checked += 1;
        let x_n = &window[0];
        let even = approximant(inst, &window[1..])?; // 2k terms
        let odd = approximant(inst, &window[1..window.len() - 1])?; // 2k-1 terms
        let lo = inst.h_lower(&inst.add(x_n, &even));
        let hi = inst.h_upper(&inst.add(x_n, &odd));
        if !(lo >= a - eps) || !(hi <= b + eps) {
            verdict = Verdict::Fails;
            certificates.push((n, if lo < a - eps { lo } else { hi }));
        }
    }
    if checked == 0 {
        return Err(CfError::InvalidInput(
            "term sequence too short for one window".into(),
        ));
    }
    if verdict == Verdict::Holds && terms.is_rule() {
        // A rule sequence is unbounded ahead of the horizon.
        verdict = Verdict::HorizonLimited;
    }
    Ok(ConditionReport {
        criterion: "subk".into(),
        params: vec![
            ("k".into(), k as f64),
            ("a".into(), a),
            ("b".into(), b),
            ("windows".into(), checked as f64),
        ],
        verdict,
        certificates,
    })
}

/// Variable-term convergence: the trailing infimum of
/// `n * log( r_n r_{n+1} / C((R_n + 1/r_{n+1}) / r_n)^2 )` must exceed 1.
pub fn check_variable_terms(
    r_seq: &[f64],
    big_r_seq: &[f64],
    profile: impl Fn(f64) -> f64,
    margin: f64,
) -> Result<ConditionReport> {
    let n = r_seq.len();
    if n < 4 || big_r_seq.len() != n {
        return Err(CfError::InvalidParameters(
            "need equal-length bound sequences with at least 4 entries".into(),
        ));
    }
    let mut s = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let (r, r_next, big_r) = (r_seq[i], r_seq[i + 1], big_r_seq[i]);
        if !(r > 0.0) || big_r < r {
            return Err(CfError::InvalidParameters(format!(
                "need 0 < r_n <= R_n at n = {}",
                i + 1
            )));
        }
        let c = profile((big_r + 1.0 / r_next) / r);
        s.push((i + 1) as f64 * (r * r_next / (c * c)).ln());
    }
    let tail = &s[s.len() / 2..];
    let inf = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let sup = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let verdict = if inf > 1.0 + margin {
        Verdict::Holds
    } else if sup < 1.0 - margin {
        Verdict::Fails
    } else {
        Verdict::HorizonLimited
    };
    Ok(ConditionReport {
        criterion: "variable-terms".into(),
        params: vec![("margin".into(), margin), ("n".into(), n as f64)],
        verdict,
        certificates: vec![(s.len() / 2 + 1, inf), (s.len(), sup)],
    })
}

/// A-posteriori tail bound `q^{2(n - 2k)} / ((1 - q^2) r)`.
pub fn a_posteriori_error(q: f64, k: usize, r: f64, n: usize) -> Result<f64> {
    if !(0.0 < q && q < 1.0) {
        return Err(CfError::InvalidParameters("need 0 < q < 1".into()));
    }
    if !(r > 0.0) {
        return Err(CfError::InvalidParameters("need r > 0".into()));
    }
    if n <= 2 * k {
        return Err(CfError::InvalidParameters("need n > 2k".into()));
    }
    Ok(q.powi(2 * (n - 2 * k) as i32) / ((1.0 - q * q) * r))
}

/// `rho(z*, z + x)`: zero iff `z` is the fixed point of the one-term map.
pub fn fixed_point_residual<I: Instance>(inst: &I, z: &I::Val, x: &I::Val) -> f64 {
    inst.rho(&inst.involute(z), &inst.add(z, x))
}

/// Distance between limits of two fractions with termwise distance bound
/// `d` and common lower pinching `r h <= x_n` with `r > 1`:
/// `rho(z', z'') <= d / (r^2 - 1)`.
pub fn limit_distance_bound(d: f64, r: f64) -> Result<f64> {
    if !(r > 1.0) {
        return Err(CfError::InvalidParameters("need r > 1".into()));
    }
    Ok(d / (r * r - 1.0))
}
