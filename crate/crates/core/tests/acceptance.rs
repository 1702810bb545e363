//! End-to-end acceptance gate: one pass/fail line per criterion.
//!
//! Criterion 11 reproduces a claimed threshold for the three-segment
//! configuration that turns out not to exist (the relevant inradius is
//! bounded by sqrt(6)/4 < 1 at every segment length); the line reports FAIL
//! with the closed-form analysis, and the test instead asserts that analysis.

use cfrac::body2::{BodySpec, ConvexBody2};
use cfrac::fn1d::{
    self, default_h_pl, c_profile_lf, check_legendre_theorem, quad_bounds_rel, rho_pl, ConvexFn1,
    LfInstance, DEFAULT_H_BOUND,
};
use cfrac::geom::{rat, rat_from_f64, rat_i, rat_to_f64, Rat, Vec2};
use cfrac::scalar::{self, upsilon, ScalarInstance};
use cfrac::semigroup::{
    a_posteriori_error, approximant_trace, check_monotone, check_urr, fixed_point_residual,
    Instance, TermSequence, TraceVerdict,
};
use cfrac::set_cf::{self, polar_lipschitz_check, BodyInstance, SetCFProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn seed() -> u64 {
    std::env::var("CF_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(7)
}

fn pass(msg: impl Into<String>) -> Outcome {
    Ok(msg.into())
}

fn fail(msg: impl Into<String>) -> Outcome {
    Err(msg.into())
}

// -- generators ------------------------------------------------------------

/// Random rational polytope containing the centred ball of radius 1/2.
fn random_polytope(rng: &mut ChaCha8Rng) -> ConvexBody2 {
    let base = ConvexBody2::ball_ngon(0.5, 12).unwrap();
    let mut pts: Vec<Vec2> = base.verts().to_vec();
    for _ in 0..rng.gen_range(3..8) {
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r: f64 = rng.gen_range(0.6..3.0);
        pts.push(Vec2::from_f64(r * a.cos(), r * a.sin()).unwrap());
    }
    ConvexBody2::from_vrep(&pts, &[]).unwrap()
}

/// Random convex PL function with `h <= f <= R h`, built by adding tangent
/// lines of `R h` to `h`.
fn random_pinched(rng: &mut ChaCha8Rng, h: &ConvexFn1, big_r: &Rat) -> ConvexFn1 {
    let mut f = h.clone();
    for _ in 0..rng.gen_range(1..5) {
        let s = rat(rng.gen_range(-80..=80), 40);
        let a = big_r * &s;
        let b = -(&a * &s) / rat_i(2);
        f = f.max_with_line(&a, &b).unwrap();
    }
    f
}

/// Random nonnegative convex PL function (optionally with bounded domain).
fn random_fn(rng: &mut ChaCha8Rng) -> ConvexFn1 {
    let mut f = ConvexFn1::zero();
    for _ in 0..rng.gen_range(1..6) {
        let a = rat(rng.gen_range(-60..=60), 20);
        let b = rat(rng.gen_range(-40..=0), 20);
        f = f.max_with_line(&a, &b).unwrap();
    }
    if rng.gen_bool(0.4) {
        let lo = rat(rng.gen_range(-60..=-1), 20);
        let hi = rat(rng.gen_range(1..=60), 20);
        f = f.add(&ConvexFn1::indicator_interval(lo, hi).unwrap());
    }
    f
}

// -- criteria --------------------------------------------------------------

fn c1_scalar_goldens() -> Outcome {
    let trace = scalar::scalar_trace(&TermSequence::Periodic(vec![1.0]), 60, 1e-12).unwrap();
    let limit = trace.entries.last().unwrap().value;
    let want = (5f64.sqrt() - 1.0) / 2.0;
    if (limit - want).abs() > 1e-9 {
        return fail(format!("[1,1,...] limit {limit} vs {want}"));
    }
    let u = upsilon(1.0, 1.0);
    let want_u = (1.0 + 5f64.sqrt()) / 2.0;
    if (u - want_u).abs() > 1e-12 {
        return fail(format!("upsilon(1,1) = {u} vs {want_u}"));
    }
    pass(format!("limit {limit:.12}, upsilon(1,1) {u:.12}"))
}

fn c2_ball_fixed_point() -> Outcome {
    for eps in [0.5, 1.0, 3.0] {
        let trace = scalar::scalar_trace(&TermSequence::Periodic(vec![eps]), 200, 1e-12).unwrap();
        if trace.verdict != TraceVerdict::Converged {
            return fail(format!("eps {eps}: verdict {:?}", trace.verdict));
        }
        let limit = trace.limit.unwrap();
        let want = 0.5 * ((eps * eps + 4.0).sqrt() - eps);
        if (limit - want).abs() > 1e-9 {
            return fail(format!("eps {eps}: limit {limit} vs {want}"));
        }
        let res = fixed_point_residual(&ScalarInstance, &limit, &eps);
        if res > 1e-8 {
            return fail(format!("eps {eps}: residual {res}"));
        }
    }
    pass("limit radius matches (sqrt(eps^2+4)-eps)/2 at eps in {0.5, 1, 3}; residuals <= 1e-8")
}

fn c3_polar_lipschitz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed() ^ 0x03);
    let mut violations = 0usize;
    for _ in 0..500 {
        let k = random_polytope(&mut rng);
        let l = random_polytope(&mut rng);
        if !polar_lipschitz_check(&k, &l).holds() {
            violations += 1;
        }
    }
    if violations > 0 {
        return fail(format!("{violations}/500 pairs violate the polar bound"));
    }
    pass("0/500 violations of rho_H(K*,L*) <= max(|K*|,|L*|)^2 rho_H(K,L)")
}

fn c4_nec_suf() -> Outcome {
    for a in [0.5, 1.0, 2.0] {
        let strip = BodySpec::Strip(a).to_body().unwrap();
        let trace = set_cf::set_cf_trace(&SetCFProblem {
            terms: TermSequence::Periodic(vec![strip.clone()]),
            tolerance: 1e-9,
            max_iter: 60,
        })
        .unwrap();
        if trace.verdict != TraceVerdict::Converged {
            return fail(format!("strip({a}): verdict {:?}", trace.verdict));
        }
        if !set_cf::check_nec_suf(&strip, 20).unwrap().holds() {
            return fail(format!("strip({a}): nec-suf does not hold"));
        }
    }
    let segs = vec![
        BodySpec::Segment([[-1.0, 0.0], [1.0, 0.0]]).to_body().unwrap(),
        BodySpec::Segment([[-2.0, 0.0], [2.0, 0.0]]).to_body().unwrap(),
    ];
    let trace = set_cf::set_cf_trace(&SetCFProblem {
        terms: TermSequence::Periodic(segs.clone()),
        tolerance: 1e-9,
        max_iter: 60,
    })
    .unwrap();
    if trace.verdict != TraceVerdict::DivergedOscillating {
        return fail(format!("segments: verdict {:?}", trace.verdict));
    }
    if set_cf::check_nec_suf(&segs[0], 20).unwrap().holds() {
        return fail("segments: nec-suf unexpectedly holds");
    }
    pass("strips converge with nec-suf holding; segments oscillate with nec-suf failing through k = 20")
}

fn c5_seidel_stern() -> Outcome {
    let segs = vec![
        BodySpec::Segment([[-1.0, 0.0], [1.0, 0.0]]).to_body().unwrap(),
        BodySpec::Segment([[-2.0, 0.0], [2.0, 0.0]]).to_body().unwrap(),
    ];
    let norm_sum: f64 = (0..60).map(|i| segs[i % 2].norm()).sum();
    if norm_sum <= 50.0 {
        return fail("term norms do not accumulate");
    }
    let trace = set_cf::set_cf_trace(&SetCFProblem {
        terms: TermSequence::Periodic(segs),
        tolerance: 1e-9,
        max_iter: 60,
    })
    .unwrap();
    if trace.verdict != TraceVerdict::DivergedOscillating {
        return fail(format!("verdict {:?}", trace.verdict));
    }
    pass(format!("sum of term norms {norm_sum:.0} over 60 terms, yet the fraction oscillates"))
}

fn c6_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed() ^ 0x06);
    let mut violations = 0usize;
    // scalar
    for _ in 0..80 {
        let n = rng.gen_range(6..=10);
        let terms: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..3.0)).collect();
        let trace = scalar::scalar_trace(&TermSequence::Finite(terms), n, 1e-12).unwrap();
        if !check_monotone(&ScalarInstance, &trace, 1e-9).holds() {
            violations += 1;
        }
    }
    // bodies
    let body_inst = BodyInstance::default();
    for _ in 0..60 {
        let n = rng.gen_range(4..=6);
        let terms: Vec<ConvexBody2> = (0..n).map(|_| random_polytope(&mut rng)).collect();
        let trace = approximant_trace(&body_inst, &TermSequence::Finite(terms), n, 1e-12).unwrap();
        if !check_monotone(&body_inst, &trace, 1e-9).holds() {
            violations += 1;
        }
    }
    // functions (coarse gauge keeps the terms small)
    let (h, _) = ConvexFn1::h_pl(2, 16);
    let fn_inst = LfInstance { h: h.clone(), round_bits: Some(64) };
    for _ in 0..60 {
        let n = rng.gen_range(4..=6);
        let terms: Vec<ConvexFn1> = (0..n).map(|_| random_pinched(&mut rng, &h, &rat_i(3))).collect();
        let trace = approximant_trace(&fn_inst, &TermSequence::Finite(terms), n, 1e-12).unwrap();
        if !check_monotone(&fn_inst, &trace, 1e-9).holds() {
            violations += 1;
        }
    }
    if violations > 0 {
        return fail(format!("{violations}/200 instances violate even/odd monotonicity"));
    }
    pass("0/200 violations across the scalar, body and function instances")
}

fn c7_lf_lipschitz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed() ^ 0x07);
    let h = default_h_pl();
    let rs = [rat(3, 2), rat_i(2), rat_i(10)];
    let ts = [rat(1, 100), rat(1, 10), rat_i(1)];
    let mut cases = 0usize;
    let mut violations = 0usize;
    let mut worst_slack = f64::NEG_INFINITY;
    'outer: for i in 0.. {
        let big_r = &rs[i % 3];
        let f = random_pinched(&mut rng, &h, big_r);
        let fc = f.legendre();
        let (_, big_r_f) = quad_bounds_rel(&f, &h);
        let c = c_profile_lf(big_r_f.max(1.0)).unwrap();
        for tr in &ts {
            let t = rat_to_f64(tr);
            let lhs = rho_pl(&fc, &f.add(&h.scale_rat(tr)).legendre(), &h);
            let rhs = c * c * t + 10.0 * DEFAULT_H_BOUND;
            if lhs > rhs {
                violations += 1;
            }
            worst_slack = worst_slack.max(lhs - c * c * t);
            cases += 1;
            if cases >= 200 {
                break 'outer;
            }
        }
    }
    if violations > 0 {
        return fail(format!("{violations}/{cases} cases violate the conjugation Lipschitz bound"));
    }
    pass(format!(
        "0/{cases} violations of rho_h(f*, (f+th)*) <= (1+sqrt(1-1/R))^2 t (worst slack {worst_slack:.2e} vs sampling bound {DEFAULT_H_BOUND:.2e})"
    ))
}

fn c8_constant_function_fraction() -> Outcome {
    // finer gauge sampling so the discretization shift of the fixed point
    // stays below the 1e-6 target on the constant
    let (h, _) = ConvexFn1::h_pl(2, 800);
    let inst = LfInstance { h: h.clone(), round_bits: Some(64) };
    let f = h.scale_rat(&rat_i(2));
    let trace = approximant_trace(&inst, &TermSequence::Periodic(vec![f.clone()]), 100, 1e-10).unwrap();
    if trace.verdict != TraceVerdict::Converged {
        return fail(format!("verdict {:?}", trace.verdict));
    }
    let limit = trace.limit.unwrap();
    let gamma_hat = rat_to_f64(&limit.eval(&rat_i(2)).unwrap()) / 2.0;
    let gamma = 2f64.sqrt() - 1.0;
    if (gamma_hat - gamma).abs() > 1e-6 {
        return fail(format!("gamma estimate {gamma_hat} vs {gamma}"));
    }
    // the three worked checker cases
    let h0 = default_h_pl();
    let two_h = h0.scale_rat(&rat_i(2));
    if !check_legendre_theorem(&two_h, &h0).holds() {
        return fail("checker rejects r = R = 2");
    }
    if !check_legendre_theorem(&h0, &h0).holds() {
        return fail("checker rejects r = R = 1");
    }
    let weak = h0.scale_rat(&rat(1, 2)).max_with_line(&rat_i(10), &rat_i(-5)).unwrap();
    let rep = check_legendre_theorem(&weak, &h0);
    if rep.holds() {
        return fail("checker accepts r = 0.5, R = 10");
    }
    pass(format!(
        "c = 2 limit constant {gamma_hat:.9} vs sqrt(2)-1 = {gamma:.9}; checker matches the three worked cases"
    ))
}

fn c9_a_transform() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed() ^ 0x09);
    for i in 0..200 {
        let f = random_fn(&mut rng);
        if f.a_transform().a_transform() != f {
            return fail(format!("involution broken on random input {i}"));
        }
    }
    let abs = ConvexFn1::abs();
    if abs.a_transform() != abs {
        return fail("|x| is not an exact fixed point");
    }
    for p in [1.5, 3.0] {
        let (hp, b) = fn1d::h_p_construct(p, 16.0, 3200).unwrap();
        let hpo = hp.a_transform();
        let c = ((p - 1.0).powf(p - 1.0) / p.powf(p)).sqrt();
        let mut worst = 0.0f64;
        for k in (-20..=20).filter(|k| (*k as f64 / 20.0).abs() >= 0.25) {
            let x = k as f64 / 20.0;
            let v = rat_to_f64(&hpo.eval(&rat_from_f64(x).unwrap()).unwrap());
            worst = worst.max((v - c * x.abs().powf(p)).abs());
        }
        if worst > 10.0 * b {
            return fail(format!("p = {p}: residual {worst:.3e} above 10x bound {:.3e}", 10.0 * b));
        }
    }
    pass("involution exact on 200 random inputs; |x| fixed exactly; h_p fixed within 10x sampling bound at p in {1.5, 3}")
}

fn c10_a_posteriori() -> Outcome {
    // scalar constant runs, and ball runs through the exact scalar reduction
    for (label, c) in [("scalar c=1", 1.0), ("scalar c=3", 3.0), ("ball eps=0.5", 0.5), ("ball eps=3", 3.0)] {
        let rep = check_urr(c, c, |x| ScalarInstance.profile(x)).unwrap();
        if !rep.holds() {
            return fail(format!("{label}: no contraction certificate"));
        }
        let q = rep.certificates[0].1;
        // a rule sequence forces all 100 approximants to be computed
        let terms: TermSequence<f64> = TermSequence::Rule(Box::new(move |_| c));
        let trace = approximant_trace(&ScalarInstance, &terms, 100, 1e-300).unwrap();
        let z_n: Vec<f64> = trace.entries.iter().map(|e| e.value).collect();
        let big_n = z_n.len();
        if big_n != 100 {
            return fail(format!("{label}: expected 100 approximants, got {big_n}"));
        }
        for n in 1..big_n {
            let lhs = (z_n[n - 1] - z_n[big_n - 1]).abs();
            // the 1e-15 slack covers rounding once both sides sit at the
            // floor of double precision
            let bound = a_posteriori_error(q, 0, c, n).unwrap() + 1e-15;
            if lhs > bound {
                return fail(format!("{label}: rho(z_{n}, z_100) = {lhs:.3e} > bound {bound:.3e}"));
            }
        }
    }
    pass("0 violations of rho(z_n, z_N) <= q^(2n)/((1-q^2) r) for n < N = 100 on scalar and ball runs")
}

/// Three unit-spaced directions at 120 degrees scaled to length `l`.
fn three_segments(l: f64) -> (Vec2, Vec2, Vec2) {
    let s3 = 3f64.sqrt() / 2.0;
    (
        Vec2::from_f64(l, 0.0).unwrap(),
        Vec2::from_f64(-l / 2.0, l * s3).unwrap(),
        Vec2::from_f64(-l / 2.0, -l * s3).unwrap(),
    )
}

fn c11_three_segments() -> Outcome {
    // bisection over the segment length, as specified: find L* with the
    // condition holding above it
    let holds_at = |l: f64| {
        let (u1, u2, u3) = three_segments(l);
        set_cf::three_segment_condition(&u1, &u2, &u3).unwrap().holds()
    };
    let mut found = None;
    let (mut lo, mut hi) = (1e-3, 1e3);
    if holds_at(hi) {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if holds_at(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        found = Some(hi);
    }
    match found {
        Some(l_star) => pass(format!("threshold L* = {l_star:.6}")),
        None => fail(
            "no threshold exists: the inradius of the normalized three-segment sum is \
             l*(sqrt(3)/2)/(1+l^2/2) <= sqrt(6)/4 ~ 0.612 < 1 at every length, so the \
             sufficient condition never activates; empirically the 3-periodic fraction \
             converges at small lengths (L = 1, 2) and oscillates at large ones (L = 4, 8), \
             the opposite of a large-length threshold",
        ),
    }
}

/// The closed-form analysis behind the criterion-11 FAIL line: the identity
/// holds, the sufficient condition fails at every length, the best observed
/// inradius approaches sqrt(6)/4, and the 3-periodic trace behaviour runs
/// opposite to a large-length threshold.
fn c11_supporting_facts() {
    let e1 = Vec2::from_f64(1.0, 0.0).unwrap();
    let e2 = Vec2::from_f64(0.0, 1.0).unwrap();
    assert!(set_cf::three_segment_identity(&e1, &e2).unwrap());
    let mut best = 0.0f64;
    for k in 1..=60 {
        let l = k as f64 / 6.0;
        let (u1, u2, u3) = three_segments(l);
        let rep = set_cf::three_segment_condition(&u1, &u2, &u3).unwrap();
        assert!(!rep.holds(), "condition unexpectedly holds at L = {l}");
        if let Some((_, r)) = rep.certificates.first() {
            best = best.max(*r);
        }
    }
    let sup = 6f64.sqrt() / 4.0;
    assert!(best <= sup + 1e-9 && best >= sup - 2e-2, "observed best inradius {best} vs sup {sup}");
    for (l, want) in [(1.0, TraceVerdict::Converged), (8.0, TraceVerdict::DivergedOscillating)] {
        let (u1, u2, u3) = three_segments(l);
        let segs: Vec<ConvexBody2> = [u1, u2, u3]
            .iter()
            .map(|u| ConvexBody2::centred_segment(u.clone()).unwrap())
            .collect();
        let trace = set_cf::set_cf_trace(&SetCFProblem {
            terms: TermSequence::Periodic(segs),
            tolerance: 1e-8,
            max_iter: 100,
        })
        .unwrap();
        assert_eq!(trace.verdict, want, "3-periodic trace at L = {l}");
    }
}

#[test]
fn acceptance() {
    let criteria: Vec<(usize, &str, Outcome)> = vec![
        (1, "scalar golden values", c1_scalar_goldens()),
        (2, "ball fixed point", c2_ball_fixed_point()),
        (3, "set polar Lipschitz", c3_polar_lipschitz()),
        (4, "necessary-and-sufficient condition", c4_nec_suf()),
        (5, "Seidel-Stern counterexample", c5_seidel_stern()),
        (6, "even/odd monotonicity suite", c6_monotonicity()),
        (7, "conjugation Lipschitz window", c7_lf_lipschitz()),
        (8, "constant function fraction", c8_constant_function_fraction()),
        (9, "second involution", c9_a_transform()),
        (10, "a-posteriori tail bound", c10_a_posteriori()),
        (11, "three-segment threshold", c11_three_segments()),
    ];
    let mut unexpected = Vec::new();
    for (n, name, outcome) in &criteria {
        match outcome {
            Ok(msg) => println!("criterion {n:2} ({name}): PASS - {msg}"),
            Err(msg) => println!("criterion {n:2} ({name}): FAIL - {msg}"),
        }
        let expected_fail = *n == 11;
        if outcome.is_err() != expected_fail {
            unexpected.push(format!("criterion {n} ({name}): {outcome:?}"));
        }
    }
    // the FAIL on criterion 11 is the documented outcome; pin down the
    // analysis it rests on, and the part of the claim that does hold
    c11_supporting_facts();
    assert!(unexpected.is_empty(), "unexpected outcomes: {unexpected:#?}");
}
