//! Command-line interface: resolve spaces from descriptors, dispatch the
//! subcommands, and emit deterministic JSON or CSV reports.
//!
//! Exit codes: 0 when the requested check passes (or the run only
//! constructs output), 1 when a check fails and the report carries the
//! witness, 2 for usage errors such as malformed descriptors, expressions
//! or flag combinations.
//!
//! Identical invocations produce byte-identical output: report keys are
//! sorted, floating-point values carry 17 significant digits, and every
//! sampled check derives from `--seed`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fixpoint::{self, FixpointProblem, FoldStrategy, PointMap};
use crate::matrixaudit::{self, DistanceMatrix};
use crate::scalarfn::{self, BinOpFn, ScalarFn};
use crate::sharp;
use crate::space::{
    self, resolve_space, AxiomKind, AxiomReport, OMetricSpace, Point, SpaceSummary, WitnessCheck,
};
use crate::topology::{self, Ball, SequenceSpec};
use crate::transforms::TransformSpec;
use crate::TOL_BET;

const LONG_ABOUT: &str = "\
Audit, transform and probe O-metric spaces: metric-like structures
(X, d, a) whose triangle inequality runs through a binary operation o,
so that d(x, z) <= o(d(x, y), d(y, z)) and d(x, y) = a exactly when
x = y.

Spaces are addressed as builtin:<name>[?param=value], as inline JSON
descriptors, or as paths to descriptor files.

Exit codes:
  0  the requested check passed (or the run only constructed output)
  1  a check failed; the report carries the witness
  2  usage error (bad flags, malformed descriptors or expressions)

Identical invocations produce byte-identical output: report keys are
sorted, floats carry 17 significant digits, and all sampling derives
from --seed.";

#[derive(Parser)]
#[command(name = "ometric", version, about = "Audit and transform O-metric spaces", long_about = LONG_ABOUT)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Seed for every sampled check (identical seeds give identical reports).
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Draws per sampled check; small finite domains are checked exhaustively.
    #[arg(long, global = true, default_value_t = 10_000)]
    samples: usize,

    /// Comparison tolerance (default 1e-9; the fixpoint residual defaults
    /// to 1e-8 instead when this flag is not given).
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Write the report to a file instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Output format. Reports default to JSON; generated matrices and gap
    /// surfaces default to CSV (comma-separated rows, no header).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

impl GlobalOpts {
    fn tol(&self) -> f64 {
        self.tol.unwrap_or(crate::TOL_EQ)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Audit the identity, symmetry and triangle axioms of a space, or
    /// re-check a previously reported counterexample.
    Check(CheckArgs),
    /// Derive a new space from existing ones and audit the result.
    Transform(TransformArgs),
    /// Balls, sequence diagnostics, uniqueness and openness conditions,
    /// separation witnesses, upward regeneration.
    Topology(TopologyArgs),
    /// Picard iteration with a hypothesis audit and a uniqueness probe.
    Fixpoint(FixpointArgs),
    /// Sharpened chain bounds against naive triangle sums.
    Sharp(SharpArgs),
    /// Finite distance-matrix audits and generators.
    Matrix(MatrixArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Space to audit: builtin reference, inline JSON, or descriptor file.
    #[arg(long)]
    space: String,

    /// Re-check a reported counterexample instead of sampling: JSON
    /// `{"axiom": "identity-at-base"|"symmetry"|"triangle-o",
    ///   "points": [[..], ..]}` as found under `counterexample` in a
    /// failing report. Exits 1 when the violation reproduces.
    #[arg(long, value_name = "JSON")]
    verify_witness: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransformKind {
    /// Re-express distances through a non-decreasing map `theta`.
    Pushforward,
    /// Raise distances to the power `r`.
    Power,
    /// Collapse an upward space to an ordinary metric via `lambda`.
    ToMetric,
    /// Mirror a space downward through decreasing `theta` with mirror
    /// operation `phi`.
    Dual,
    /// Combine several spaces by folding `phi` over coordinate distances.
    Product,
}

impl TransformKind {
    fn name(self) -> &'static str {
        match self {
            TransformKind::Pushforward => "pushforward",
            TransformKind::Power => "power",
            TransformKind::ToMetric => "to-metric",
            TransformKind::Dual => "dual",
            TransformKind::Product => "product",
        }
    }
}

#[derive(Args)]
struct TransformArgs {
    /// Operand space; repeat the flag for `product`.
    #[arg(long, required = true)]
    space: Vec<String>,

    #[arg(long, value_enum)]
    kind: TransformKind,

    /// Reparametrization for `pushforward` / `dual`: a catalog name
    /// (identity, ln1p, expm1, exp, log, sqrt, square, neg-exp, neg-log,
    /// ratio, circle-area, power:<r>, scale:<c>) or an expression in `u`.
    #[arg(long, value_name = "EXPR")]
    theta: Option<String>,

    /// Collapse map for `to-metric` (catalog name or expression in `u`).
    #[arg(long, value_name = "EXPR")]
    lambda: Option<String>,

    /// Exponent for `power`.
    #[arg(long)]
    r: Option<f64>,

    /// Binary operation for `dual` (the mirror partner of the triangle
    /// operation) and for `product` (the fold): an expression in `u`, `v`.
    #[arg(long, value_name = "EXPR")]
    phi: Option<String>,

    /// Draws for the sampled hypotheses inside the construction itself.
    #[arg(long, default_value_t = 2000)]
    verify_samples: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TopologyOp {
    /// Strict-ball membership: is `--point` within `--radius` of `--center`?
    Ball,
    /// Dyadic-window convergence and Cauchy trend analysis of a sequence.
    Sequence,
    /// Limit-uniqueness conditions on the triangle operation.
    UCheck,
    /// Openness conditions on an upward space, given an inner-radius
    /// function.
    CCheck,
    /// Separation radii around two points, with sampled disjointness.
    Hausdorff,
    /// Rebuild any space as an upward one with the reflected operation.
    Regenerate,
}

#[derive(Args)]
struct TopologyArgs {
    /// Space under study: builtin reference, inline JSON, or descriptor file.
    #[arg(long)]
    space: String,

    #[arg(long, value_enum)]
    op: TopologyOp,

    /// Ball center (`ball`): a number or JSON array.
    #[arg(long, allow_negative_numbers = true)]
    center: Option<String>,

    /// Ball radius (`ball`).
    #[arg(long)]
    radius: Option<f64>,

    /// Query point (`ball`); membership is strict, `|dist - a| < radius`.
    #[arg(long, allow_negative_numbers = true)]
    point: Option<String>,

    /// Explicit sequence prefix (`sequence`): JSON array of numbers or of
    /// point arrays, e.g. `[1, 0.5, 0.25, 0.125]`.
    #[arg(long)]
    points: Option<String>,

    /// Generated sequence (`sequence`): expression in `n`, sampled over
    /// dyadic index windows up to `--n-max`.
    #[arg(long, value_name = "EXPR")]
    gen: Option<String>,

    /// Largest generated index (`sequence` with --gen).
    #[arg(long)]
    n_max: Option<u64>,

    /// Convergence candidate (`sequence`): a number or JSON array. Without
    /// it only the Cauchy trend is judged.
    #[arg(long, allow_negative_numbers = true)]
    candidate: Option<String>,

    /// Inner-radius function for `c-check` / `hausdorff`: an expression in
    /// `u`, `v` evaluated with `u` = the outer radius level and `v` = the
    /// inner value.
    #[arg(long, value_name = "EXPR")]
    gamma: Option<String>,

    /// First point (`hausdorff`).
    #[arg(long, allow_negative_numbers = true)]
    x: Option<String>,

    /// Second point (`hausdorff`).
    #[arg(long, allow_negative_numbers = true)]
    y: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DeltaKind {
    /// Fold the space's own triangle operation (balanced binary tree).
    Fold,
    /// `s^f(n) * sum` with the dyadic depth `f`.
    Suzuki,
    /// Block sums sized by the contraction factor `k`.
    SuzukiPrime,
}

#[derive(Args)]
struct FixpointArgs {
    /// Space to iterate in: builtin reference, inline JSON, or file.
    #[arg(long)]
    space: String,

    /// Self-map as an expression in `x` (one-dimensional domains).
    #[arg(long, value_name = "EXPR")]
    map: String,

    /// Contraction gauge: a catalog name or an expression in `u`.
    #[arg(long, value_name = "EXPR")]
    psi: String,

    /// Polygon-bound family used by the hypothesis audit.
    #[arg(long, value_enum, default_value = "fold")]
    delta: DeltaKind,

    /// Relaxation constant for `suzuki` / `suzuki-prime` (s >= 1).
    #[arg(long)]
    s: Option<f64>,

    /// Contraction factor for `suzuki-prime` (0 < k < 1).
    #[arg(long)]
    k: Option<f64>,

    /// Starting point: a number or JSON array.
    #[arg(long, allow_negative_numbers = true)]
    x0: String,

    /// Iteration budget.
    #[arg(long, default_value_t = fixpoint::MAX_ITER)]
    max_iter: usize,

    /// Iterate even when an asserted hypothesis fails; the failure stays
    /// in the report.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SharpArgs {
    /// Distance generator: a catalog name (ln1p, sqrt, power:<r>, ...) or
    /// an increasing expression in `u` with theta(0) = 0.
    #[arg(long, value_name = "EXPR")]
    theta: String,

    /// Chain of consecutive distances: a comma list, a JSON array, or a
    /// path to a file holding either.
    #[arg(long)]
    chain: Option<String>,

    /// Equidistant chains: link length, repeated `--n` times.
    #[arg(long)]
    alpha: Option<f64>,

    /// Number of links for `--alpha`.
    #[arg(long)]
    n: Option<usize>,

    /// Measured end-to-end distance to compare against the bounds.
    #[arg(long)]
    actual: Option<f64>,

    /// Relaxation factor (s >= 1): switches chains to the relaxed bound
    /// `s^depth * sum` and scales the naive side of the gap surface.
    #[arg(long)]
    s: Option<f64>,

    /// Gap surface `lo,hi,steps`: tabulate `s*(u+v) - theta(theta^-1(u) +
    /// theta^-1(v))` on a square grid. CSV columns: u,v,naive,sharp,gap.
    #[arg(long, value_name = "LO,HI,STEPS")]
    grid: Option<String>,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(subcommand)]
    op: MatrixOp,
}

#[derive(Subcommand)]
enum MatrixOp {
    /// Exhaustive triple audit of a distance matrix (CSV rows or JSON
    /// nested arrays; orders up to 512).
    Audit {
        /// Matrix file.
        #[arg(long, value_name = "FILE")]
        r#in: PathBuf,
        /// Relative tolerance for betweenness detection (default 1e-9).
        #[arg(long)]
        tol_bet: Option<f64>,
    },
    /// Generate the planar spiral test matrix of a contraction ratio.
    Spiral {
        /// Contraction ratio in (0, 1).
        #[arg(long)]
        r: f64,
        /// Matrix order (3 ..= 1024).
        #[arg(long)]
        n: usize,
    },
    /// Optimal relaxation constants of spiral matrices across sizes.
    Quotients {
        /// Contraction ratio in (0, 1).
        #[arg(long)]
        r: f64,
        /// Comma-separated matrix orders.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
    },
    /// Check the dyadically weighted polygon bound on every index pair.
    Polygon {
        /// Matrix file.
        #[arg(long, value_name = "FILE")]
        r#in: PathBuf,
        /// Weight base (s >= 0).
        #[arg(long)]
        s: f64,
    },
    /// Constrained-triangle probe for s < 1: does the matrix satisfy it,
    /// and what does the finite truncation say about infinite extensions?
    Constrained {
        /// Matrix file.
        #[arg(long, value_name = "FILE")]
        r#in: PathBuf,
        /// Constraint factor in [0, 1).
        #[arg(long)]
        s: f64,
    },
}

/// Parse the command line and run it. Returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let g = &cli.global;
    match dispatch(&cli.command, g) {
        Ok(outcome) => {
            if let Err(e) = emit(g, &outcome.payload) {
                eprintln!("error: cannot write output: {e}");
                return 2;
            }
            if outcome.failed {
                1
            } else {
                0
            }
        }
        // A failed sampled hypothesis is a check failure with a witness in
        // its message; everything else is a usage error.
        Err(err @ Error::Hypothesis { .. }) => {
            let payload = Payload::Json(serde_json::json!({
                "error": err.to_string(),
                "kind": "hypothesis-failure",
            }));
            if let Err(e) = emit(g, &payload) {
                eprintln!("error: cannot write output: {e}");
                return 2;
            }
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

enum Payload {
    Json(Value),
    Csv(String),
}

impl Payload {
    fn json<T: Serialize>(report: &T) -> Result<Payload> {
        let value = serde_json::to_value(report)
            .map_err(|e| Error::Unsupported(format!("report serialization: {e}")))?;
        Ok(Payload::Json(value))
    }
}

struct Outcome {
    payload: Payload,
    failed: bool,
}

impl Outcome {
    fn judged<T: Serialize>(report: &T, failed: bool) -> Result<Outcome> {
        Ok(Outcome {
            payload: Payload::json(report)?,
            failed,
        })
    }
}

fn dispatch(command: &Command, g: &GlobalOpts) -> Result<Outcome> {
    match command {
        Command::Check(a) => run_check(g, a),
        Command::Transform(a) => run_transform(g, a),
        Command::Topology(a) => run_topology(g, a),
        Command::Fixpoint(a) => run_fixpoint(g, a),
        Command::Sharp(a) => run_sharp(g, a),
        Command::Matrix(a) => run_matrix(g, a),
    }
}

/// Reject `--format csv` for ops whose report has no tabular shape.
fn require_json(g: &GlobalOpts, op: &str) -> Result<()> {
    if g.format == Some(Format::Csv) {
        return Err(Error::InvalidParam(format!(
            "`{op}` emits a JSON report; CSV applies to generated matrices, \
             gap surfaces and quotient tables"
        )));
    }
    Ok(())
}

fn require<'a, T>(opt: &'a Option<T>, flag: &str, context: &str) -> Result<&'a T> {
    opt.as_ref()
        .ok_or_else(|| Error::InvalidParam(format!("{flag} is required for {context}")))
}

// ---------------------------------------------------------------------------
// check

#[derive(Serialize)]
struct CheckReport {
    space: SpaceSummary,
    axioms: Vec<AxiomReport>,
    passed: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    space: SpaceSummary,
    check: WitnessCheck,
}

#[derive(Deserialize)]
struct WitnessInput {
    axiom: AxiomKind,
    points: Vec<Point>,
}

fn run_check(g: &GlobalOpts, a: &CheckArgs) -> Result<Outcome> {
    require_json(g, "check")?;
    let space = resolve_space(&a.space)?;
    if let Some(text) = &a.verify_witness {
        let input: WitnessInput = serde_json::from_str(text)
            .map_err(|e| Error::Descriptor(format!("verify-witness: {e}")))?;
        let check = space::verify_witness(&space, input.axiom, &input.points, g.tol(), g.tol())?;
        let failed = check.violated;
        return Outcome::judged(
            &VerifyReport {
                space: space.summary(),
                check,
            },
            failed,
        );
    }
    let axioms = space::check_axioms(&space, g.samples, g.seed, g.tol(), g.tol());
    let passed = axioms.iter().all(|r| r.passed);
    Outcome::judged(
        &CheckReport {
            space: space.summary(),
            axioms,
            passed,
        },
        !passed,
    )
}

// ---------------------------------------------------------------------------
// transform

#[derive(Serialize)]
struct TransformReport {
    kind: &'static str,
    operands: Vec<String>,
    result: SpaceSummary,
    axioms: Vec<AxiomReport>,
    passed: bool,
}

fn run_transform(g: &GlobalOpts, a: &TransformArgs) -> Result<Outcome> {
    require_json(g, "transform")?;
    let spec = match a.kind {
        TransformKind::Pushforward => TransformSpec::Pushforward {
            theta: resolve_scalar(require(&a.theta, "--theta", "`pushforward`")?)?,
            o_b: None,
            b: None,
        },
        TransformKind::Power => TransformSpec::Power {
            r: *require(&a.r, "--r", "`power`")?,
        },
        TransformKind::ToMetric => TransformSpec::ToMetric {
            lambda: resolve_scalar(require(&a.lambda, "--lambda", "`to-metric`")?)?,
        },
        TransformKind::Dual => TransformSpec::DownwardDual {
            phi: BinOpFn::parse(require(&a.phi, "--phi", "`dual`")?)?,
            theta: resolve_scalar(require(&a.theta, "--theta", "`dual`")?)?,
        },
        TransformKind::Product => TransformSpec::Product {
            phi: BinOpFn::parse(require(&a.phi, "--phi", "`product`")?)?,
        },
    };
    let operands: Vec<OMetricSpace> = a
        .space
        .iter()
        .map(|s| resolve_space(s))
        .collect::<Result<_>>()?;
    let result = spec.apply(&operands, a.verify_samples, g.seed)?;
    let axioms = space::check_axioms(&result, g.samples, g.seed, g.tol(), g.tol());
    let passed = axioms.iter().all(|r| r.passed);
    Outcome::judged(
        &TransformReport {
            kind: a.kind.name(),
            operands: operands.iter().map(|s| s.name.clone()).collect(),
            result: result.summary(),
            axioms,
            passed,
        },
        !passed,
    )
}

// ---------------------------------------------------------------------------
// topology

#[derive(Serialize)]
struct BallReport {
    space: String,
    ball: Ball,
    point: Point,
    contains: bool,
}

#[derive(Serialize)]
struct SequenceReport {
    space: String,
    analysis: topology::SequenceAnalysis,
}

#[derive(Serialize)]
struct UniquenessEnvelope {
    space: String,
    report: topology::UniquenessReport,
}

#[derive(Serialize)]
struct OpennessEnvelope {
    space: String,
    gamma: String,
    report: topology::OpennessReport,
}

#[derive(Serialize)]
struct SeparationEnvelope {
    space: String,
    gamma: String,
    witness: topology::SeparationWitness,
}

#[derive(Serialize)]
struct RegenerateReport {
    source: String,
    result: SpaceSummary,
    axioms: Vec<AxiomReport>,
    passed: bool,
}

fn run_topology(g: &GlobalOpts, a: &TopologyArgs) -> Result<Outcome> {
    require_json(g, "topology")?;
    let space = resolve_space(&a.space)?;
    match a.op {
        TopologyOp::Ball => {
            let center = parse_point(require(&a.center, "--center", "`ball`")?, "--center")?;
            let radius = *require(&a.radius, "--radius", "`ball`")?;
            let point = parse_point(require(&a.point, "--point", "`ball`")?, "--point")?;
            let ball = Ball::new(center, radius)?;
            let contains = topology::ball_contains(&space, &ball, &point)?;
            Outcome::judged(
                &BallReport {
                    space: space.name.clone(),
                    ball,
                    point,
                    contains,
                },
                false,
            )
        }
        TopologyOp::Sequence => {
            let seq = match (&a.points, &a.gen) {
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidParam(
                        "--points and --gen are mutually exclusive".into(),
                    ))
                }
                (Some(text), None) => SequenceSpec::Points(parse_points(text)?),
                (None, Some(expr)) => SequenceSpec::Generated {
                    f: ScalarFn::parse_as(expr, "n")?,
                    n_max: *require(&a.n_max, "--n-max", "a generated sequence")?,
                },
                (None, None) => {
                    return Err(Error::InvalidParam(
                        "`sequence` needs --points or --gen".into(),
                    ))
                }
            };
            let candidate = match &a.candidate {
                Some(text) => Some(parse_point(text, "--candidate")?),
                None => None,
            };
            let analysis = topology::analyze_sequence(&space, &seq, candidate.as_deref())?;
            let failed = match analysis.converging_trend {
                Some(ok) => !ok,
                None => !analysis.cauchy_trend,
            };
            Outcome::judged(
                &SequenceReport {
                    space: space.name.clone(),
                    analysis,
                },
                failed,
            )
        }
        TopologyOp::UCheck => {
            let report = topology::check_u_conditions(&space, g.samples, g.seed);
            let failed = !report.limits_unique;
            Outcome::judged(
                &UniquenessEnvelope {
                    space: space.name.clone(),
                    report,
                },
                failed,
            )
        }
        TopologyOp::CCheck => {
            let gamma_text = require(&a.gamma, "--gamma", "`c-check`")?;
            let gamma = BinOpFn::parse(gamma_text)?;
            let report = topology::check_c_conditions(&space, &gamma, g.samples, g.seed)?;
            let failed =
                !(report.c1.passed && report.c2.passed && report.condition10.passed);
            Outcome::judged(
                &OpennessEnvelope {
                    space: space.name.clone(),
                    gamma: gamma_text.clone(),
                    report,
                },
                failed,
            )
        }
        TopologyOp::Hausdorff => {
            let gamma_text = require(&a.gamma, "--gamma", "`hausdorff`")?;
            let gamma = BinOpFn::parse(gamma_text)?;
            let x = parse_point(require(&a.x, "--x", "`hausdorff`")?, "--x")?;
            let y = parse_point(require(&a.y, "--y", "`hausdorff`")?, "--y")?;
            let witness = topology::hausdorff_witness(&space, &gamma, &x, &y, g.samples, g.seed)?;
            let failed = !witness.disjoint;
            Outcome::judged(
                &SeparationEnvelope {
                    space: space.name.clone(),
                    gamma: gamma_text.clone(),
                    witness,
                },
                failed,
            )
        }
        TopologyOp::Regenerate => {
            let result = topology::upward_regenerate(&space)?;
            let axioms = space::check_axioms(&result, g.samples, g.seed, g.tol(), g.tol());
            let passed = axioms.iter().all(|r| r.passed);
            Outcome::judged(
                &RegenerateReport {
                    source: space.name.clone(),
                    result: result.summary(),
                    axioms,
                    passed,
                },
                !passed,
            )
        }
    }
}

// ---------------------------------------------------------------------------
// fixpoint

fn run_fixpoint(g: &GlobalOpts, a: &FixpointArgs) -> Result<Outcome> {
    require_json(g, "fixpoint")?;
    let space = resolve_space(&a.space)?;
    let delta = match a.delta {
        DeltaKind::Fold => fixpoint::fold_delta(
            space.o_fn(),
            FoldStrategy::BalancedBinary,
            &space.interval,
            g.samples,
            g.seed,
        )?,
        DeltaKind::Suzuki => fixpoint::suzuki_delta(*require(&a.s, "--s", "`suzuki`")?)?,
        DeltaKind::SuzukiPrime => fixpoint::suzuki_delta_prime(
            *require(&a.s, "--s", "`suzuki-prime`")?,
            *require(&a.k, "--k", "`suzuki-prime`")?,
        )?,
    };
    let problem = FixpointProblem {
        space,
        map: PointMap::from_expr(&a.map)?,
        psi: resolve_scalar(&a.psi)?,
        delta,
        x0: parse_point(&a.x0, "--x0")?,
        tol_fix: g.tol.unwrap_or(crate::TOL_FIX),
        max_iter: a.max_iter,
        force: a.force,
        samples: g.samples,
        seed: g.seed,
    };
    let report = fixpoint::solve(&problem)?;
    let failed = !report.converged || (!report.hypotheses_ok && !report.forced);
    Outcome::judged(&report, failed)
}

// ---------------------------------------------------------------------------
// sharp

#[derive(Serialize)]
struct GapSurfaceReport {
    theta: String,
    s: f64,
    lo: f64,
    hi: f64,
    steps: usize,
    rows: Vec<sharp::GapRow>,
}

fn run_sharp(g: &GlobalOpts, a: &SharpArgs) -> Result<Outcome> {
    let theta = resolve_scalar(&a.theta)?;
    if let Some(grid) = &a.grid {
        if a.chain.is_some() || a.alpha.is_some() || a.n.is_some() {
            return Err(Error::InvalidParam(
                "--grid excludes --chain and --alpha/--n".into(),
            ));
        }
        let (lo, hi, steps) = parse_grid(grid)?;
        let s = a.s.unwrap_or(1.0);
        let rows = sharp::gap_surface(&theta, s, lo, hi, steps)?;
        let payload = match g.format {
            Some(Format::Json) => Payload::json(&GapSurfaceReport {
                theta: theta.source().to_string(),
                s,
                lo,
                hi,
                steps,
                rows,
            })?,
            _ => {
                let mut csv = String::new();
                for row in &rows {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{}",
                        row.u, row.v, row.naive, row.sharp, row.gap
                    );
                }
                Payload::Csv(csv)
            }
        };
        return Ok(Outcome {
            payload,
            failed: false,
        });
    }

    require_json(g, "sharp chain bounds")?;
    let links = match (&a.chain, a.alpha, a.n) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(Error::InvalidParam(
                "--chain excludes --alpha and --n".into(),
            ))
        }
        (Some(text), None, None) => parse_chain(text)?,
        (None, Some(alpha), Some(n)) => {
            if n == 0 {
                return Err(Error::InvalidParam("--n must be at least 1".into()));
            }
            vec![alpha; n]
        }
        (None, Some(_), None) | (None, None, Some(_)) => {
            return Err(Error::InvalidParam(
                "--alpha and --n go together".into(),
            ))
        }
        (None, None, None) => {
            return Err(Error::InvalidParam(
                "one of --chain, --alpha with --n, or --grid is required".into(),
            ))
        }
    };
    match a.s {
        Some(s) => {
            let report = sharp::bmetric_sharp(&links, &theta, s, a.actual, g.seed)?;
            let failed = report.actual_le_sharp == Some(false);
            Outcome::judged(&report, failed)
        }
        None => {
            let report = sharp::sharp_bound(&links, &theta, a.actual, g.seed)?;
            let failed = report.actual_le_sharp == Some(false);
            Outcome::judged(&report, failed)
        }
    }
}

// ---------------------------------------------------------------------------
// matrix

#[derive(Serialize)]
struct SpiralReport {
    r: f64,
    n: usize,
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct QuotientsReport {
    r: f64,
    rows: Vec<matrixaudit::QuotientGrowthRow>,
}

fn run_matrix(g: &GlobalOpts, a: &MatrixArgs) -> Result<Outcome> {
    match &a.op {
        MatrixOp::Audit { r#in, tol_bet } => {
            require_json(g, "matrix audit")?;
            let matrix = load_matrix(r#in)?;
            let report = matrixaudit::audit(&matrix, tol_bet.unwrap_or(TOL_BET))?;
            let failed = !report.triangle_holds;
            Outcome::judged(&report, failed)
        }
        MatrixOp::Spiral { r, n } => {
            let matrix = matrixaudit::spiral_matrix(*r, *n)?;
            let payload = match g.format {
                Some(Format::Json) => Payload::json(&SpiralReport {
                    r: *r,
                    n: *n,
                    rows: matrix.rows().to_vec(),
                })?,
                _ => Payload::Csv(matrix.to_csv()),
            };
            Ok(Outcome {
                payload,
                failed: false,
            })
        }
        MatrixOp::Quotients { r, sizes } => {
            if sizes.is_empty() {
                return Err(Error::InvalidParam("--sizes must not be empty".into()));
            }
            let rows = matrixaudit::quotient_growth(*r, sizes)?;
            let payload = match g.format {
                Some(Format::Csv) => {
                    let mut csv = String::new();
                    for row in &rows {
                        let _ = writeln!(csv, "{},{}", row.n, row.q_max);
                    }
                    Payload::Csv(csv)
                }
                _ => Payload::json(&QuotientsReport { r: *r, rows })?,
            };
            Ok(Outcome {
                payload,
                failed: false,
            })
        }
        MatrixOp::Polygon { r#in, s } => {
            require_json(g, "matrix polygon")?;
            let matrix = load_matrix(r#in)?;
            let report = matrixaudit::polygon_bound_check(&matrix, *s)?;
            let failed = !report.holds;
            Outcome::judged(&report, failed)
        }
        MatrixOp::Constrained { r#in, s } => {
            require_json(g, "matrix constrained")?;
            let matrix = load_matrix(r#in)?;
            let report = matrixaudit::constrained_richness(&matrix, *s)?;
            let failed = !report.holds;
            Outcome::judged(&report, failed)
        }
    }
}

// ---------------------------------------------------------------------------
// argument parsing helpers

/// A scalar-function argument: a catalog name (exact match, or the
/// parametrized `power:` / `scale:` forms) or an expression in `u`.
fn resolve_scalar(text: &str) -> Result<ScalarFn> {
    let t = text.trim();
    if t.starts_with("power:") || t.starts_with("scale:") || scalarfn::CATALOG_NAMES.contains(&t)
    {
        return scalarfn::catalog(t);
    }
    ScalarFn::parse(t)
}

/// A point argument: a bare number (one-dimensional) or a JSON array.
fn parse_point(text: &str, flag: &str) -> Result<Point> {
    let t = text.trim();
    if t.starts_with('[') {
        serde_json::from_str(t).map_err(|e| Error::InvalidParam(format!("{flag}: {e}")))
    } else {
        t.parse::<f64>().map(|x| vec![x]).map_err(|_| {
            Error::InvalidParam(format!("{flag}: expected a number or JSON array, got `{t}`"))
        })
    }
}

/// A sequence prefix: a JSON array whose entries are numbers (read as
/// one-dimensional points) or arrays of coordinates.
fn parse_points(text: &str) -> Result<Vec<Point>> {
    let values: Vec<Value> = serde_json::from_str(text.trim())
        .map_err(|e| Error::InvalidParam(format!("--points: {e}")))?;
    values
        .into_iter()
        .map(|v| match v {
            Value::Number(n) => n
                .as_f64()
                .map(|x| vec![x])
                .ok_or_else(|| Error::InvalidParam("--points: number out of range".into())),
            Value::Array(_) => serde_json::from_value(v)
                .map_err(|e| Error::InvalidParam(format!("--points: {e}"))),
            other => Err(Error::InvalidParam(format!(
                "--points: expected a number or array, got {other}"
            ))),
        })
        .collect()
}

/// A chain of link lengths: comma/newline-separated numbers or a JSON
/// array, either inline or in a file.
fn parse_chain(text: &str) -> Result<Vec<f64>> {
    let raw = if Path::new(text).is_file() {
        fs::read_to_string(text)
            .map_err(|e| Error::InvalidParam(format!("--chain: cannot read `{text}`: {e}")))?
    } else {
        text.to_string()
    };
    let t = raw.trim();
    let links: Vec<f64> = if t.starts_with('[') {
        serde_json::from_str(t).map_err(|e| Error::InvalidParam(format!("--chain: {e}")))?
    } else {
        t.split([',', '\n'])
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidParam(format!("--chain: bad number `{s}`")))
            })
            .collect::<Result<_>>()?
    };
    if links.is_empty() {
        return Err(Error::InvalidParam("--chain is empty".into()));
    }
    Ok(links)
}

fn parse_grid(text: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::InvalidParam(format!(
            "--grid expects `lo,hi,steps`, got `{text}`"
        )));
    }
    let lo = parts[0]
        .parse::<f64>()
        .map_err(|_| Error::InvalidParam(format!("--grid: bad lower bound `{}`", parts[0])))?;
    let hi = parts[1]
        .parse::<f64>()
        .map_err(|_| Error::InvalidParam(format!("--grid: bad upper bound `{}`", parts[1])))?;
    let steps = parts[2]
        .parse::<usize>()
        .map_err(|_| Error::InvalidParam(format!("--grid: bad step count `{}`", parts[2])))?;
    Ok((lo, hi, steps))
}

/// Load a distance matrix from CSV rows or JSON nested arrays, sniffing
/// the format from the first non-blank character.
fn load_matrix(path: &Path) -> Result<DistanceMatrix> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::InvalidParam(format!("cannot read `{}`: {e}", path.display()))
    })?;
    if text.trim_start().starts_with('[') {
        DistanceMatrix::from_json(&text)
    } else {
        DistanceMatrix::from_csv(&text)
    }
}

// ---------------------------------------------------------------------------
// deterministic output

fn emit(g: &GlobalOpts, payload: &Payload) -> std::io::Result<()> {
    let text = match payload {
        Payload::Json(v) => render_json(v),
        Payload::Csv(s) => s.clone(),
    };
    match &g.out {
        Some(path) => fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

/// Render a JSON value with sorted keys (the map is ordered), two-space
/// indentation, plain integers, and floats at 17 significant digits so
/// every `f64` round-trips exactly. Non-finite floats have already been
/// mapped to `null` by the value conversion.
fn render_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Number(n) => push_number(n, out),
        Value::String(s) => push_string(s, out),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else if items.iter().all(is_scalar) {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(item, indent, out);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    push_indent(indent + 1, out);
                    write_value(item, indent + 1, out);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                push_indent(indent, out);
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            let last = map.len() - 1;
            for (i, (key, val)) in map.iter().enumerate() {
                push_indent(indent + 1, out);
                push_string(key, out);
                out.push_str(": ");
                write_value(val, indent + 1, out);
                if i < last {
                    out.push(',');
                }
                out.push('\n');
            }
            push_indent(indent, out);
            out.push('}');
        }
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn push_indent(indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

fn push_number(n: &serde_json::Number, out: &mut String) {
    if let Some(i) = n.as_i64() {
        let _ = write!(out, "{i}");
    } else if let Some(u) = n.as_u64() {
        let _ = write!(out, "{u}");
    } else if let Some(f) = n.as_f64() {
        let _ = write!(out, "{f:.16e}");
    } else {
        out.push_str("null");
    }
}

fn push_string(s: &str, out: &mut String) {
    out.push_str(&serde_json::to_string(s).expect("strings always encode"));
}
