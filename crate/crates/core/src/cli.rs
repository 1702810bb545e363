//! Command-line front end: parse term specs, run traces and checkers, and
//! emit machine-readable trace data.
//!
//! Exit codes: 0 success, 2 invalid input, 3 violated expectation in a named
//! example.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::body2::{BodySpec, ConvexBody2};
use crate::error::{CfError, Result};
use crate::fn1d::{
    self, default_h_pl, ATransformInstance, ConvexFn1, FnSpec, LfInstance,
};
use crate::geom::{rat_from_f64, rat_to_f64};
use crate::scalar::{self, ScalarInstance};
use crate::semigroup::{
    approximant_trace, check_monotone, check_subk, check_uniform_simple, check_urr,
    check_variable_terms, fixed_point_residual, ApproximantTrace, ConditionReport, Instance,
    TermSequence, TraceVerdict, Verdict,
};
use crate::set_cf::{self, classify_terms, SetCFProblem, SetTerms};

#[derive(Parser)]
#[command(name = "cf", about = "Continued fractions over ordered semigroups", version)]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scalar fractions over the nonnegative extended reals
    Scalar(RunArgs),
    /// Fractions of planar convex bodies under polarity
    Set(RunArgs),
    /// Fractions of convex functions under Legendre conjugation
    FuncLf(RunArgs),
    /// Fractions of convex functions under the second involution
    FuncA(RunArgs),
    /// Canonical named examples with asserted outcomes
    Examples(ExamplesArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Inline JSON term spec, or @PATH to read the spec from a file
    #[arg(long)]
    terms: String,
    /// Treat the single term as the constant term of the fraction
    #[arg(long)]
    r#const: bool,
    /// Repeat the term list periodically
    #[arg(long)]
    periodic: bool,
    #[arg(long, default_value_t = 60)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Comma-separated checker names (e.g. monotone,urr,nec-suf,constant)
    #[arg(long, value_delimiter = ',')]
    check: Vec<String>,
    /// Write the trace to this path instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct ExamplesArgs {
    /// List the registered example names
    #[arg(long)]
    list: bool,
    /// Example name to run
    name: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Serialize)]
struct Row {
    n: usize,
    gap: f64,
    norm: f64,
    inradius_or_r: f64,
    residual: f64,
}

#[derive(Serialize)]
struct RunReport {
    instance: &'static str,
    verdict: TraceVerdict,
    entries: Vec<Row>,
    events: Vec<String>,
    reports: Vec<ConditionReport>,
}

pub fn main_entry<I: IntoIterator<Item = String>>(argv: I) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind::*;
            let code = match e.kind() {
                DisplayHelp | DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let out = match cli.cmd {
        Cmd::Scalar(a) => run_scalar(&a),
        Cmd::Set(a) => run_set(&a),
        Cmd::FuncLf(a) => run_func_lf(&a),
        Cmd::FuncA(a) => run_func_a(&a),
        Cmd::Examples(a) => return run_examples(&a),
    };
    match out {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn load_spec(raw: &str) -> Result<String> {
    if let Some(path) = raw.strip_prefix('@') {
        std::fs::read_to_string(path).map_err(|e| CfError::Format(format!("cannot read {path}: {e}")))
    } else {
        Ok(raw.to_string())
    }
}

fn sequence<T: Clone>(terms: Vec<T>, args: &RunArgs) -> Result<TermSequence<T>> {
    if args.r#const && terms.len() != 1 {
        return Err(CfError::InvalidInput("--const takes exactly one term".into()));
    }
    if args.r#const || args.periodic {
        Ok(TermSequence::Periodic(terms))
    } else {
        Ok(TermSequence::Finite(terms))
    }
}

fn rows<I: Instance>(inst: &I, trace: &ApproximantTrace<I::Val>, first: &I::Val) -> Vec<Row> {
    trace
        .entries
        .iter()
        .map(|e| Row {
            n: e.n,
            gap: e.gap,
            norm: e.norm,
            inradius_or_r: inst.h_lower(&e.value),
            residual: fixed_point_residual(inst, &e.value, first),
        })
        .collect()
}

fn fmt_cell(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn emit(args: &RunArgs, report: RunReport) -> Result<()> {
    let body = match args.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report)
                .map_err(|e| CfError::Format(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from("n,gap,norm,inradius_or_r,residual\n");
            for r in &report.entries {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.n,
                    fmt_cell(r.gap),
                    fmt_cell(r.norm),
                    fmt_cell(r.inradius_or_r),
                    fmt_cell(r.residual)
                ));
            }
            // the trace file stays plot-friendly; reports go to stderr
            if !report.reports.is_empty() {
                eprintln!(
                    "{}",
                    serde_json::to_string(&report.reports).map_err(|e| CfError::Format(e.to_string()))?
                );
            }
            s
        }
    };
    match &args.output {
        Some(p) => std::fs::write(p, body).map_err(|e| CfError::Format(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn unknown_check(name: &str) -> CfError {
    CfError::InvalidInput(format!("unknown check {name:?}"))
}

fn run_scalar(args: &RunArgs) -> Result<()> {
    let raw = load_spec(&args.terms)?;
    let vals: Vec<f64> = match serde_json::from_str::<serde_json::Value>(&raw) {
        Ok(serde_json::Value::Array(_)) => {
            serde_json::from_str(&raw).map_err(|e| CfError::Format(format!("terms: {e}")))?
        }
        Ok(serde_json::Value::Number(n)) => vec![n.as_f64().unwrap()],
        _ => return Err(CfError::Format("scalar terms must be a number or an array of numbers".into())),
    };
    if vals.iter().any(|v| !(*v >= 0.0)) {
        return Err(CfError::InvalidInput("scalar terms must be nonnegative".into()));
    }
    let terms = sequence(vals.clone(), args)?;
    let trace = scalar::scalar_trace(&terms, args.max_iter, args.tol)?;
    let inst = ScalarInstance;
    let mut reports = Vec::new();
    let (r, big_r) = (
        vals.iter().cloned().fold(f64::INFINITY, f64::min),
        vals.iter().cloned().fold(0.0f64, f64::max),
    );
    for name in &args.check {
        let rep = match name.as_str() {
            "monotone" => check_monotone(&inst, &trace, args.tol),
            "urr" => check_urr(r, big_r, |x| inst.profile(x))?,
            "uniform-simple" => check_uniform_simple(&inst, r, big_r)?,
            "subk" => check_subk(&inst, &terms, 1, r, big_r, 8)?,
            "variable-terms" => check_variable_terms(&vals, &vals, |x| inst.profile(x), 0.05)?,
            "seidel-stern" => scalar::seidel_stern_verdict(&terms, args.max_iter, args.tol)?,
            other => return Err(unknown_check(other)),
        };
        reports.push(rep);
    }
    let entries = rows(&inst, &trace, &vals[0]);
    emit(args, RunReport { instance: "scalar", verdict: trace.verdict, entries, events: trace.events, reports })
}

fn parse_bodies(raw: &str) -> Result<Vec<BodySpec>> {
    match serde_json::from_str::<serde_json::Value>(&raw) {
        Ok(serde_json::Value::Array(_)) => {
            serde_json::from_str(raw).map_err(|e| CfError::Format(format!("terms: {e}")))
        }
        Ok(serde_json::Value::Object(_)) => {
            let one: BodySpec = serde_json::from_str(raw).map_err(|e| CfError::Format(format!("terms: {e}")))?;
            Ok(vec![one])
        }
        _ => Err(CfError::Format("set terms must be a body object or an array of them".into())),
    }
}

fn run_set(args: &RunArgs) -> Result<()> {
    let raw = load_spec(&args.terms)?;
    let specs = parse_bodies(&raw)?;
    match classify_terms(&specs)? {
        SetTerms::Balls(radii) => {
            // pure ball sequences run through the exact scalar reduction
            let terms = sequence(radii.clone(), args)?;
            let trace = scalar::scalar_trace(&terms, args.max_iter, args.tol)?;
            let inst = ScalarInstance;
            let mut reports = Vec::new();
            for name in &args.check {
                let rep = match name.as_str() {
                    "monotone" => check_monotone(&inst, &trace, args.tol),
                    "constant" => set_cf::check_constant_theorem_ball(radii[0]),
                    "urr" => {
                        let (r, big_r) = (
                            radii.iter().cloned().fold(f64::INFINITY, f64::min),
                            radii.iter().cloned().fold(0.0f64, f64::max),
                        );
                        check_urr(r, big_r, |x| inst.profile(x))?
                    }
                    other => return Err(unknown_check(other)),
                };
                reports.push(rep);
            }
            let entries = rows(&inst, &trace, &radii[0]);
            emit(args, RunReport { instance: "set", verdict: trace.verdict, entries, events: trace.events, reports })
        }
        SetTerms::Bodies(specs) => {
            let bodies: Vec<ConvexBody2> = specs.iter().map(|s| s.to_body()).collect::<Result<_>>()?;
            let terms = sequence(bodies.clone(), args)?;
            let problem = SetCFProblem { terms, tolerance: args.tol, max_iter: args.max_iter };
            let trace = set_cf::set_cf_trace(&problem)?;
            let inst = crate::set_cf::BodyInstance::default();
            let mut reports = Vec::new();
            for name in &args.check {
                let rep = match name.as_str() {
                    "monotone" => check_monotone(&inst, &trace, args.tol),
                    "nec-suf" => set_cf::check_nec_suf(&bodies[0], 20)?,
                    "constant" => set_cf::check_constant_theorem(&bodies[0]),
                    "urr" => {
                        let (r, big_r) = (bodies[0].inradius_centered(), bodies[0].norm());
                        check_urr(r, big_r, |x| inst.profile(x))?
                    }
                    other => return Err(unknown_check(other)),
                };
                reports.push(rep);
            }
            let entries = rows(&inst, &trace, &bodies[0]);
            emit(args, RunReport { instance: "set", verdict: trace.verdict, entries, events: trace.events, reports })
        }
    }
}

fn parse_fns(raw: &str) -> Result<Vec<ConvexFn1>> {
    let specs: Vec<FnSpec> = match serde_json::from_str::<serde_json::Value>(raw) {
        Ok(serde_json::Value::Array(_)) => {
            serde_json::from_str(raw).map_err(|e| CfError::Format(format!("terms: {e}")))?
        }
        Ok(serde_json::Value::Object(_)) => {
            vec![serde_json::from_str(raw).map_err(|e| CfError::Format(format!("terms: {e}")))?]
        }
        _ => return Err(CfError::Format("function terms must be an object or an array of them".into())),
    };
    specs.iter().map(|s| s.to_fn().map(|(f, _)| f)).collect()
}

fn run_func_lf(args: &RunArgs) -> Result<()> {
    let raw = load_spec(&args.terms)?;
    let fns = parse_fns(&raw)?;
    let terms = sequence(fns.clone(), args)?;
    let inst = LfInstance::default();
    let trace = approximant_trace(&inst, &terms, args.max_iter, args.tol)?;
    let mut reports = Vec::new();
    for name in &args.check {
        let rep = match name.as_str() {
            "monotone" => check_monotone(&inst, &trace, args.tol),
            "constant" => fn1d::check_legendre_theorem(&fns[0], &inst.h),
            "urr" => {
                let (r, big_r) = fn1d::quad_bounds_rel(&fns[0], &inst.h);
                check_urr(r, big_r, |x| inst.profile(x))?
            }
            other => return Err(unknown_check(other)),
        };
        reports.push(rep);
    }
    let entries = rows(&inst, &trace, &fns[0]);
    emit(args, RunReport { instance: "func-lf", verdict: trace.verdict, entries, events: trace.events, reports })
}

fn run_func_a(args: &RunArgs) -> Result<()> {
    let raw = load_spec(&args.terms)?;
    let fns = parse_fns(&raw)?;
    let terms = sequence(fns.clone(), args)?;
    let inst = ATransformInstance::default();
    let trace = approximant_trace(&inst, &terms, args.max_iter, args.tol)?;
    let mut reports = Vec::new();
    for name in &args.check {
        let rep = match name.as_str() {
            "monotone" => check_monotone(&inst, &trace, args.tol),
            "a-xh" => fn1d::check_a_xh(&fns[0], &inst.h, 0.5)?,
            "self-polar" => {
                let res = fn1d::rho_pl(&fns[0].a_transform(), &fns[0], &inst.h);
                ConditionReport {
                    criterion: "self-polar".into(),
                    params: vec![],
                    verdict: if res <= 1e-9 { Verdict::Holds } else { Verdict::Fails },
                    certificates: vec![(0, res)],
                }
            }
            other => return Err(unknown_check(other)),
        };
        reports.push(rep);
    }
    let entries = rows(&inst, &trace, &fns[0]);
    emit(args, RunReport { instance: "func-a", verdict: trace.verdict, entries, events: trace.events, reports })
}

pub const EXAMPLE_NAMES: [&str; 7] = [
    "ball",
    "segment",
    "strip",
    "seidel-counterexample",
    "three-segments",
    "quadratic-function",
    "hp-selfpolar",
];

fn run_examples(args: &ExamplesArgs) -> i32 {
    if args.list {
        for n in EXAMPLE_NAMES {
            println!("{n}");
        }
        return 0;
    }
    let Some(name) = &args.name else {
        eprintln!("error: pass an example name or --list");
        return 2;
    };
    match example(name) {
        Ok(msg) => {
            println!("example {name}: {msg}");
            0
        }
        Err(ExampleError::Unknown) => {
            eprintln!("error: unknown example {name:?}");
            2
        }
        Err(ExampleError::Failed(msg)) => {
            eprintln!("example {name}: FAILED: {msg}");
            3
        }
        Err(ExampleError::Run(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

enum ExampleError {
    Unknown,
    Failed(String),
    Run(CfError),
}

impl From<CfError> for ExampleError {
    fn from(e: CfError) -> Self {
        ExampleError::Run(e)
    }
}

fn expect(cond: bool, msg: impl Into<String>) -> std::result::Result<(), ExampleError> {
    if cond {
        Ok(())
    } else {
        Err(ExampleError::Failed(msg.into()))
    }
}

fn example(name: &str) -> std::result::Result<String, ExampleError> {
    match name {
        "ball" => {
            // constant ball of radius 3: limit radius (sqrt(13) - 3)/2
            let terms = TermSequence::Periodic(vec![3.0f64]);
            let trace = scalar::scalar_trace(&terms, 100, 1e-12)?;
            expect(trace.verdict == TraceVerdict::Converged, "trace did not converge")?;
            let limit = trace.limit.unwrap();
            let want = (13f64.sqrt() - 3.0) / 2.0;
            expect((limit - want).abs() <= 1e-9, format!("limit {limit} vs {want}"))?;
            Ok(format!("converged, limit radius {limit:.6}"))
        }
        "segment" => {
            let bodies = segment_pair()?;
            let trace = set_cf::set_cf_trace(&SetCFProblem {
                terms: TermSequence::Periodic(bodies.clone()),
                tolerance: 1e-9,
                max_iter: 60,
            })?;
            expect(trace.verdict == TraceVerdict::DivergedOscillating, format!("verdict {:?}", trace.verdict))?;
            let nec = set_cf::check_nec_suf(&bodies[0], 20)?;
            expect(!nec.holds(), "nec-suf unexpectedly holds for a segment")?;
            Ok("diverged-oscillating; nec-suf fails through k = 20".into())
        }
        "strip" => {
            let strip = BodySpec::Strip(1.0).to_body()?;
            let trace = set_cf::set_cf_trace(&SetCFProblem {
                terms: TermSequence::Periodic(vec![strip.clone()]),
                tolerance: 1e-9,
                max_iter: 60,
            })?;
            expect(trace.verdict == TraceVerdict::Converged, format!("verdict {:?}", trace.verdict))?;
            let nec = set_cf::check_nec_suf(&strip, 20)?;
            expect(nec.holds(), "nec-suf fails for the strip")?;
            Ok("converged; nec-suf holds".into())
        }
        "seidel-counterexample" => {
            let bodies = segment_pair()?;
            let trace = set_cf::set_cf_trace(&SetCFProblem {
                terms: TermSequence::Periodic(bodies.clone()),
                tolerance: 1e-9,
                max_iter: 60,
            })?;
            // term norms are bounded below, so their partial sums diverge,
            // yet the fraction oscillates: the scalar dichotomy fails here
            let norm_sum: f64 = (0..60).map(|i| bodies[i % 2].norm()).sum();
            expect(norm_sum > 50.0, "term norms do not accumulate")?;
            expect(
                trace.verdict == TraceVerdict::DivergedOscillating,
                format!("verdict {:?}", trace.verdict),
            )?;
            Ok("term norms sum beyond any bound, yet the fraction oscillates".into())
        }
        "three-segments" => {
            let e1 = crate::geom::Vec2::from_f64(1.0, 0.0).unwrap();
            let e2 = crate::geom::Vec2::from_f64(0.0, 1.0).unwrap();
            expect(set_cf::three_segment_identity(&e1, &e2)?, "sum identity fails")?;
            // the sufficient condition is out of reach at every length: the
            // inradius of a sum of three segments at 120 degrees tops out at
            // sqrt(6)/4, below the threshold 1 the condition asks for
            let mut worst = 0.0f64;
            for k in 1..=40 {
                let l = k as f64 / 4.0;
                let rep = three_segment_at(l)?;
                expect(!rep.holds(), format!("condition unexpectedly holds at L = {l}"))?;
                if let Some((_, r)) = rep.certificates.first() {
                    worst = worst.max(*r);
                }
            }
            Ok(format!(
                "sum identity holds; the length condition fails at every L (best inradius {worst:.6}, limit sqrt(6)/4 = {:.6})",
                6f64.sqrt() / 4.0
            ))
        }
        "quadratic-function" => {
            let inst = LfInstance::default();
            let f = default_h_pl().scale_rat(&rat_from_f64(2.0).unwrap());
            let trace = approximant_trace(&inst, &TermSequence::Periodic(vec![f.clone()]), 80, 1e-9)?;
            expect(trace.verdict == TraceVerdict::Converged, format!("verdict {:?}", trace.verdict))?;
            let limit = trace.limit.unwrap();
            let v = rat_to_f64(&limit.eval(&rat_from_f64(2.0).unwrap()).unwrap());
            let gamma = v / 2.0;
            let want = 2f64.sqrt() - 1.0;
            expect((gamma - want).abs() <= 1e-4, format!("gamma estimate {gamma}"))?;
            let rep = fn1d::check_legendre_theorem(&f, &inst.h);
            expect(rep.holds(), "convergence condition fails for c = 2")?;
            Ok(format!("converged; gamma estimate {gamma:.6} vs sqrt(2)-1 = {want:.6}"))
        }
        "hp-selfpolar" => {
            let abs = ConvexFn1::abs();
            let res1 = fn1d::rho_pl(&abs.a_transform(), &abs, &abs);
            expect(res1 == 0.0, format!("p = 1 residual {res1}"))?;
            let (h2, b2) = fn1d::h_p_construct(2.0, 16.0, 3200)?;
            let res2 = {
                let hh = h2.a_transform();
                let mut worst = 0.0f64;
                // stay where the defining sup is attained inside the window
                for k in (-20..=20).filter(|k| (*k as f64 / 20.0).abs() >= 0.25) {
                    let x = rat_from_f64(k as f64 / 20.0).unwrap();
                    if let (Some(a), Some(b)) = (hh.eval(&x), h2.eval(&x)) {
                        worst = worst.max(rat_to_f64(&(&a - &b)).abs());
                    }
                }
                worst
            };
            expect(res2 <= 10.0 * b2, format!("p = 2 residual {res2} vs bound {}", 10.0 * b2))?;
            Ok(format!("p = 1 exact fixed point; p = 2 residual {res2:.3e} within 10x sampling bound"))
        }
        _ => Err(ExampleError::Unknown),
    }
}

fn segment_pair() -> Result<Vec<ConvexBody2>> {
    Ok(vec![
        BodySpec::Segment([[-1.0, 0.0], [1.0, 0.0]]).to_body()?,
        BodySpec::Segment([[-2.0, 0.0], [2.0, 0.0]]).to_body()?,
    ])
}

fn three_segment_at(l: f64) -> Result<ConditionReport> {
    let s3 = 3f64.sqrt() / 2.0;
    let u1 = crate::geom::Vec2::from_f64(l, 0.0).unwrap();
    let u2 = crate::geom::Vec2::from_f64(-l / 2.0, l * s3).unwrap();
    let u3 = crate::geom::Vec2::from_f64(-l / 2.0, -l * s3).unwrap();
    set_cf::three_segment_condition(&u1, &u2, &u3)
}
