//! The space model: a point domain, a distance function into an interval
//! `I` around a base value `a`, and a triangle operation `o` such that
//! `dist(x, z) <= o(dist(x, y), dist(y, z))`.

mod builtins;
mod descriptor;

pub use builtins::{builtin, builtin_ref, genl_space, p_metric_with, BUILTIN_NAMES};
pub use descriptor::{parse_space_json, resolve_space};

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scalarfn::BinOpFn;
use crate::{approx_eq, leq_with_tol, rng, TOL_EQ, TOL_INEQ};

/// Points are small coordinate vectors: one entry for line domains, one
/// per axis for boxes and products.
pub type Point = Vec<f64>;

/// Where points live, with the bounds used for sampling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PointDomain {
    Line { lo: f64, hi: f64 },
    Box { bounds: Vec<(f64, f64)> },
    Finite { points: Vec<Point> },
}

impl PointDomain {
    pub fn line(lo: f64, hi: f64) -> Self {
        PointDomain::Line { lo, hi }
    }

    pub fn dim(&self) -> usize {
        match self {
            PointDomain::Line { .. } => 1,
            PointDomain::Box { bounds } => bounds.len(),
            PointDomain::Finite { points } => points.first().map_or(0, |p| p.len()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PointDomain::Line { .. } => "line",
            PointDomain::Box { .. } => "box",
            PointDomain::Finite { .. } => "finite",
        }
    }

    /// Number of distinct points, when finite.
    pub fn size(&self) -> Option<usize> {
        match self {
            PointDomain::Finite { points } => Some(points.len()),
            _ => None,
        }
    }

    pub fn sample(&self, r: &mut ChaCha8Rng) -> Point {
        use rand::Rng;
        match self {
            PointDomain::Line { lo, hi } => vec![r.gen_range(*lo..=*hi)],
            PointDomain::Box { bounds } => bounds
                .iter()
                .map(|(lo, hi)| r.gen_range(*lo..=*hi))
                .collect(),
            PointDomain::Finite { points } => points[r.gen_range(0..points.len())].clone(),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            PointDomain::Line { lo, hi } => p.len() == 1 && *lo <= p[0] && p[0] <= *hi,
            PointDomain::Box { bounds } => {
                p.len() == bounds.len()
                    && p.iter()
                        .zip(bounds)
                        .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
            }
            PointDomain::Finite { points } => points.iter().any(|q| q.as_slice() == p),
        }
    }
}

type DistClosure = Arc<dyn Fn(&[f64], &[f64]) -> Result<f64> + Send + Sync>;

/// Distance function with a printable label.
#[derive(Clone)]
pub struct DistFn {
    label: String,
    f: DistClosure,
}

impl DistFn {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(&[f64], &[f64]) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        DistFn {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        (self.f)(x, y)
    }
}

impl std::fmt::Debug for DistFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DistFn({})", self.label)
    }
}

/// Whether the distance interval sits above the base value, below it, or
/// straddles it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Upward,
    Downward,
    Neither,
}

/// A space `(X, dist, a)` with triangle operation `o` and distance
/// interval `interval` (the declared range of `dist`, containing `a`).
#[derive(Debug, Clone)]
pub struct OMetricSpace {
    pub name: String,
    pub domain: PointDomain,
    dist: DistFn,
    o: BinOpFn,
    pub a: f64,
    pub interval: Interval,
}

impl OMetricSpace {
    pub fn new(
        name: impl Into<String>,
        domain: PointDomain,
        dist: DistFn,
        o: BinOpFn,
        a: f64,
        interval: Interval,
    ) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidParam(format!("base value must be finite, got {a}")));
        }
        if !interval.contains(a) {
            return Err(Error::InvalidParam(format!(
                "interval {interval} does not contain the base value {a}"
            )));
        }
        if let PointDomain::Finite { points } = &domain {
            if points.is_empty() {
                return Err(Error::InvalidParam("finite domain has no points".into()));
            }
            let d = points[0].len();
            if points.iter().any(|p| p.len() != d) {
                return Err(Error::InvalidParam(
                    "finite domain points have mixed dimensions".into(),
                ));
            }
        }
        Ok(OMetricSpace {
            name: name.into(),
            domain,
            dist,
            o,
            a,
            interval,
        })
    }

    pub fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.dist.eval(x, y)
    }

    pub fn o(&self, u: f64, v: f64) -> Result<f64> {
        self.o.eval(u, v)
    }

    pub fn dist_fn(&self) -> &DistFn {
        &self.dist
    }

    pub fn o_fn(&self) -> &BinOpFn {
        &self.o
    }

    /// Classify by how the distance interval sits against `a`.
    pub fn direction(&self) -> Direction {
        let slop = TOL_EQ * self.a.abs().max(1.0);
        if self.interval.lo >= self.a - slop {
            Direction::Upward
        } else if self.interval.hi <= self.a + slop {
            Direction::Downward
        } else {
            Direction::Neither
        }
    }

    /// Draw one point from the domain.
    pub fn sample_point(&self, r: &mut ChaCha8Rng) -> Point {
        self.domain.sample(r)
    }

    /// Serializable summary (closures reduced to their labels).
    pub fn summary(&self) -> SpaceSummary {
        SpaceSummary {
            name: self.name.clone(),
            a: self.a,
            interval: (self.interval.lo, self.interval.hi),
            direction: self.direction(),
            domain_kind: self.domain.kind(),
            dim: self.domain.dim(),
            dist: self.dist.label().to_string(),
            o: self.o.source().to_string(),
        }
    }

    /// Run the three axiom checks; see [`check_axioms`].
    pub fn check_axioms(&self, samples: usize, seed: u64) -> Vec<AxiomReport> {
        check_axioms(self, samples, seed, TOL_EQ, TOL_INEQ)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpaceSummary {
    pub name: String,
    pub a: f64,
    pub interval: (f64, f64),
    pub direction: Direction,
    pub domain_kind: &'static str,
    pub dim: usize,
    pub dist: String,
    pub o: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxiomKind {
    /// `dist(x, y) = a` exactly when `x = y`.
    IdentityAtBase,
    /// `dist(x, y) = dist(y, x)`.
    Symmetry,
    /// `dist(x, z) <= o(dist(x, y), dist(y, z))`.
    TriangleO,
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub points: Vec<Point>,
    pub values: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub axiom: AxiomKind,
    pub passed: bool,
    pub counterexample: Option<Counterexample>,
    pub samples: usize,
    pub seed: u64,
}

fn fail(
    axiom: AxiomKind,
    points: Vec<Point>,
    values: Vec<f64>,
    detail: String,
    samples: usize,
    seed: u64,
) -> AxiomReport {
    AxiomReport {
        axiom,
        passed: false,
        counterexample: Some(Counterexample {
            points,
            values,
            detail,
        }),
        samples,
        seed,
    }
}

fn pass(axiom: AxiomKind, samples: usize, seed: u64) -> AxiomReport {
    AxiomReport {
        axiom,
        passed: true,
        counterexample: None,
        samples,
        seed,
    }
}

/// Sampled axiom audit: identity at the base value (both directions, the
/// "only if" side on distinct sampled pairs), symmetry, and the triangle
/// inequality through `o`. Finite domains with at most `samples` triples
/// are checked exhaustively. Evaluation errors fail the report with the
/// offending points. Same seed, same report.
pub fn check_axioms(
    space: &OMetricSpace,
    samples: usize,
    seed: u64,
    tol_eq: f64,
    tol_ineq: f64,
) -> Vec<AxiomReport> {
    vec![
        check_identity(space, samples, seed, tol_eq),
        check_symmetry(space, samples, seed, tol_eq),
        check_triangle(space, samples, seed, tol_ineq),
    ]
}

fn points_equal(x: &[f64], y: &[f64]) -> bool {
    x.len() == y.len() && x.iter().zip(y).all(|(a, b)| a == b)
}

fn check_identity(space: &OMetricSpace, samples: usize, seed: u64, tol_eq: f64) -> AxiomReport {
    let kind = AxiomKind::IdentityAtBase;
    let mut r = rng::seeded(seed);
    let singles: Vec<Point> = match &space.domain {
        PointDomain::Finite { points } if points.len() <= samples => points.clone(),
        _ => (0..samples).map(|_| space.sample_point(&mut r)).collect(),
    };
    for x in &singles {
        match space.dist(x, x) {
            Ok(d) => {
                if !approx_eq(d, space.a, tol_eq) {
                    return fail(
                        kind,
                        vec![x.clone()],
                        vec![d, space.a],
                        format!("dist(x, x) = {d}, expected the base value {}", space.a),
                        samples,
                        seed,
                    );
                }
            }
            Err(e) => {
                return fail(
                    kind,
                    vec![x.clone()],
                    vec![],
                    format!("evaluation error: {e}"),
                    samples,
                    seed,
                )
            }
        }
    }
    // Only-if direction on distinct sampled pairs.
    for _ in 0..samples {
        let x = space.sample_point(&mut r);
        let y = space.sample_point(&mut r);
        if points_equal(&x, &y) {
            continue;
        }
        match space.dist(&x, &y) {
            Ok(d) => {
                if approx_eq(d, space.a, tol_eq) {
                    return fail(
                        kind,
                        vec![x, y],
                        vec![d, space.a],
                        format!("distinct points at distance {d} = base value {}", space.a),
                        samples,
                        seed,
                    );
                }
            }
            Err(e) => {
                return fail(
                    kind,
                    vec![x, y],
                    vec![],
                    format!("evaluation error: {e}"),
                    samples,
                    seed,
                )
            }
        }
    }
    pass(kind, samples, seed)
}

fn check_symmetry(space: &OMetricSpace, samples: usize, seed: u64, tol_eq: f64) -> AxiomReport {
    let kind = AxiomKind::Symmetry;
    let mut r = rng::seeded(seed.wrapping_add(1));
    let pairs: Vec<(Point, Point)> = match &space.domain {
        PointDomain::Finite { points } if points.len() * points.len() <= samples => points
            .iter()
            .flat_map(|x| points.iter().map(move |y| (x.clone(), y.clone())))
            .collect(),
        _ => (0..samples)
            .map(|_| (space.sample_point(&mut r), space.sample_point(&mut r)))
            .collect(),
    };
    for (x, y) in &pairs {
        match (space.dist(x, y), space.dist(y, x)) {
            (Ok(dxy), Ok(dyx)) => {
                if !approx_eq(dxy, dyx, tol_eq) {
                    return fail(
                        kind,
                        vec![x.clone(), y.clone()],
                        vec![dxy, dyx],
                        format!("dist(x, y) = {dxy} but dist(y, x) = {dyx}"),
                        samples,
                        seed,
                    );
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                return fail(
                    kind,
                    vec![x.clone(), y.clone()],
                    vec![],
                    format!("evaluation error: {e}"),
                    samples,
                    seed,
                )
            }
        }
    }
    pass(kind, samples, seed)
}

fn check_triangle(space: &OMetricSpace, samples: usize, seed: u64, tol_ineq: f64) -> AxiomReport {
    let kind = AxiomKind::TriangleO;
    let mut r = rng::seeded(seed.wrapping_add(2));
    let triples: Vec<(Point, Point, Point)> = match &space.domain {
        PointDomain::Finite { points } if points.len().pow(3) <= samples => points
            .iter()
            .flat_map(|x| {
                points.iter().flat_map(move |y| {
                    points
                        .iter()
                        .map(move |z| (x.clone(), y.clone(), z.clone()))
                })
            })
            .collect(),
        _ => (0..samples)
            .map(|_| {
                (
                    space.sample_point(&mut r),
                    space.sample_point(&mut r),
                    space.sample_point(&mut r),
                )
            })
            .collect(),
    };
    for (x, y, z) in &triples {
        let legs = (|| -> Result<(f64, f64, f64, f64)> {
            let dxz = space.dist(x, z)?;
            let dxy = space.dist(x, y)?;
            let dyz = space.dist(y, z)?;
            let bound = space.o(dxy, dyz)?;
            Ok((dxz, dxy, dyz, bound))
        })();
        match legs {
            Ok((dxz, dxy, dyz, bound)) => {
                if !leq_with_tol(dxz, bound, tol_ineq) {
                    return fail(
                        kind,
                        vec![x.clone(), y.clone(), z.clone()],
                        vec![dxz, dxy, dyz, bound],
                        format!(
                            "dist(x, z) = {dxz} exceeds o(dist(x, y), dist(y, z)) = o({dxy}, {dyz}) = {bound}"
                        ),
                        samples,
                        seed,
                    );
                }
            }
            Err(e) => {
                return fail(
                    kind,
                    vec![x.clone(), y.clone(), z.clone()],
                    vec![],
                    format!("evaluation error: {e}"),
                    samples,
                    seed,
                )
            }
        }
    }
    pass(kind, samples, seed)
}

/// Re-evaluate one axiom at explicitly supplied points, for reproducing a
/// previously reported counterexample.
pub fn verify_witness(
    space: &OMetricSpace,
    axiom: AxiomKind,
    points: &[Point],
    tol_eq: f64,
    tol_ineq: f64,
) -> Result<WitnessCheck> {
    match axiom {
        AxiomKind::IdentityAtBase => match points {
            [x] => {
                let d = space.dist(x, x)?;
                Ok(WitnessCheck {
                    axiom,
                    values: vec![d, space.a],
                    violated: !approx_eq(d, space.a, tol_eq),
                })
            }
            [x, y] => {
                let d = space.dist(x, y)?;
                let violated = if points_equal(x, y) {
                    !approx_eq(d, space.a, tol_eq)
                } else {
                    approx_eq(d, space.a, tol_eq)
                };
                Ok(WitnessCheck {
                    axiom,
                    values: vec![d, space.a],
                    violated,
                })
            }
            _ => Err(Error::InvalidParam(
                "identity witness takes one or two points".into(),
            )),
        },
        AxiomKind::Symmetry => match points {
            [x, y] => {
                let dxy = space.dist(x, y)?;
                let dyx = space.dist(y, x)?;
                Ok(WitnessCheck {
                    axiom,
                    values: vec![dxy, dyx],
                    violated: !approx_eq(dxy, dyx, tol_eq),
                })
            }
            _ => Err(Error::InvalidParam("symmetry witness takes two points".into())),
        },
        AxiomKind::TriangleO => match points {
            [x, y, z] => {
                let dxz = space.dist(x, z)?;
                let dxy = space.dist(x, y)?;
                let dyz = space.dist(y, z)?;
                let bound = space.o(dxy, dyz)?;
                Ok(WitnessCheck {
                    axiom,
                    values: vec![dxz, dxy, dyz, bound],
                    violated: !leq_with_tol(dxz, bound, tol_ineq),
                })
            }
            _ => Err(Error::InvalidParam("triangle witness takes three points".into())),
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessCheck {
    pub axiom: AxiomKind,
    pub values: Vec<f64>,
    pub violated: bool,
}
