//! Space-to-space constructions. Every constructor samples its hypotheses
//! first and refuses (with a witness) rather than building a space whose
//! axioms would silently fail.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scalarfn::{self, BinOpFn, Monotonicity, ScalarFn};
use crate::space::{DistFn, Direction, OMetricSpace, PointDomain};
use crate::{approx_eq, leq_with_tol, rng, TOL_EQ, TOL_INEQ};

/// Default number of hypothesis draws for transform constructions.
pub const HYPOTHESIS_SAMPLES: usize = 2000;

/// A transform request, as assembled by the CLI.
#[derive(Debug)]
pub enum TransformSpec {
    /// Re-express distances through a non-decreasing `theta`. When `o_b`
    /// or `b` are omitted they are derived: `b = theta(a)` and
    /// `o_b(u, v) = theta(o(inv theta(u), inv theta(v)))`.
    Pushforward {
        theta: ScalarFn,
        o_b: Option<BinOpFn>,
        b: Option<f64>,
    },
    /// Raise distances to the `r`-th power (a pushforward by `t^r` with
    /// the matching triangle operation).
    Power { r: f64 },
    /// Collapse an upward space to an ordinary metric via `lambda`.
    ToMetric { lambda: ScalarFn },
    /// Mirror a space downward through decreasing `theta`, given the
    /// mirror partner `phi` of the triangle operation.
    DownwardDual { phi: BinOpFn, theta: ScalarFn },
    /// Finite product combined by folding binary `phi` over coordinate
    /// distances.
    Product { phi: BinOpFn },
}

impl TransformSpec {
    /// Apply to `operands` (one space, except `Product` which takes two
    /// or more).
    pub fn apply(
        &self,
        operands: &[OMetricSpace],
        samples: usize,
        seed: u64,
    ) -> Result<OMetricSpace> {
        let one = || -> Result<&OMetricSpace> {
            match operands {
                [s] => Ok(s),
                _ => Err(Error::InvalidParam(format!(
                    "this transform takes exactly one space, got {}",
                    operands.len()
                ))),
            }
        };
        match self {
            TransformSpec::Pushforward { theta, o_b, b } => match (o_b, b) {
                (Some(o_b), Some(b)) => {
                    pushforward(one()?, theta, o_b.clone(), *b, samples, seed)
                }
                (None, None) => pushforward_auto(one()?, theta, samples, seed),
                _ => Err(Error::InvalidParam(
                    "pushforward needs both target operation and base value, or neither".into(),
                )),
            },
            TransformSpec::Power { r } => power(one()?, *r, samples, seed),
            TransformSpec::ToMetric { lambda } => to_metric(one()?, lambda, samples, seed),
            TransformSpec::DownwardDual { phi, theta } => {
                downward_dual(one()?, phi, theta, samples, seed)
            }
            TransformSpec::Product { phi } => product(operands, phi, samples, seed),
        }
    }
}

/// Monotonicity gate that tolerates evaluation errors exactly at the
/// interval endpoints: declared intervals are closed supersets of the
/// true distance range, so a singularity on the boundary (such as `-ln`
/// at 0 when 0 is only the infimum of the distances) does not disqualify
/// a function monotone on the interior.
fn require_monotone(
    f: &ScalarFn,
    iv: &Interval,
    direction: Monotonicity,
    samples: usize,
    seed: u64,
    what: &str,
    fname: &str,
) -> Result<()> {
    let rep = scalarfn::check_monotone(f, iv, direction, samples, seed);
    if rep.passed {
        return Ok(());
    }
    if let Some(v) = rep.violations.first() {
        let rel = match direction {
            Monotonicity::NonDecreasing => ">",
            Monotonicity::NonIncreasing => "<",
        };
        return Err(Error::hypothesis(
            what,
            format!("{fname}({}) = {} {rel} {fname}({}) = {}", v.u, v.fu, v.v, v.fv),
        ));
    }
    if let Some((t, e)) = rep
        .eval_errors
        .iter()
        .find(|(t, _)| *t != iv.lo && *t != iv.hi)
    {
        return Err(Error::hypothesis(
            format!("{fname} evaluable on the distance interval"),
            format!("at {t}: {e}"),
        ));
    }
    Ok(())
}

fn theta_at(theta: &ScalarFn, t: f64, context: &str) -> Result<f64> {
    theta.eval_unchecked(t).map_err(|e| {
        Error::hypothesis(
            format!("{context} evaluable"),
            format!("at {t}: {e}"),
        )
    })
}

/// Image of `iv` under non-decreasing `theta`; unbounded ends stay
/// unbounded (the image is a declared superset, classification only
/// depends on the finite end).
fn image_interval_nondecreasing(theta: &ScalarFn, iv: &Interval) -> Result<Interval> {
    let lo = theta_at(theta, iv.lo, "theta")?;
    let hi = if iv.hi.is_finite() {
        theta_at(theta, iv.hi, "theta")?
    } else {
        f64::INFINITY
    };
    Ok(Interval::new(lo, hi))
}

/// Push `space` forward along `theta`, with explicit target operation and
/// base value.
///
/// Sampled hypotheses: `theta` non-decreasing on the distance interval,
/// `theta(a) = b`, and the commutation `o_b(theta(u), theta(v)) =
/// theta(o(u, v))`.
pub fn pushforward(
    space: &OMetricSpace,
    theta: &ScalarFn,
    o_b: BinOpFn,
    b: f64,
    samples: usize,
    seed: u64,
) -> Result<OMetricSpace> {
    let iv = space.interval;
    require_monotone(
        theta,
        &iv,
        Monotonicity::NonDecreasing,
        samples,
        seed,
        "theta non-decreasing on the distance interval",
        "theta",
    )?;
    let ta = theta_at(theta, space.a, "theta")?;
    if !approx_eq(ta, b, TOL_EQ) {
        return Err(Error::hypothesis(
            "theta maps base value to target base",
            format!("theta({}) = {ta}, target base {b}", space.a),
        ));
    }
    let mut r = rng::seeded(seed);
    for _ in 0..samples {
        let u = rng::draw(&mut r, &iv);
        let v = rng::draw(&mut r, &iv);
        let ouv = space.o(u, v)?;
        let lhs = o_b.eval(theta_at(theta, u, "theta")?, theta_at(theta, v, "theta")?)?;
        let rhs = theta_at(theta, ouv, "theta")?;
        if !approx_eq(lhs, rhs, TOL_EQ) {
            return Err(Error::hypothesis(
                "target operation commutes with theta",
                format!(
                    "u = {u}, v = {v}: o_b(theta(u), theta(v)) = {lhs} but theta(o(u, v)) = {rhs}"
                ),
            ));
        }
    }

    let interval = image_interval_nondecreasing(theta, &iv)?;
    let th = theta.clone();
    let base_dist = space.dist_fn().clone();
    let label = format!("{} after {}", theta.source(), base_dist.label());
    OMetricSpace::new(
        format!("pushforward({}, {})", space.name, theta.source()),
        space.domain.clone(),
        DistFn::new(label, move |x, y| th.eval_unchecked(base_dist.eval(x, y)?)),
        o_b,
        b,
        interval,
    )
}

/// Pushforward with the target operation and base derived from `theta`:
/// `b = theta(a)`, `o_b = theta . o . (inv theta x inv theta)`.
pub fn pushforward_auto(
    space: &OMetricSpace,
    theta: &ScalarFn,
    samples: usize,
    seed: u64,
) -> Result<OMetricSpace> {
    let b = theta_at(theta, space.a, "theta")?;
    let o_b = conjugate_op(space.o_fn().clone(), theta.clone(), space.interval);
    pushforward(space, theta, o_b, b, samples, seed)
}

/// The operation `theta . o . (inv theta x inv theta)`, inverting `theta`
/// analytically when possible and by bisection on `bracket` otherwise.
fn conjugate_op(o: BinOpFn, theta: ScalarFn, bracket: Interval) -> BinOpFn {
    let label = format!(
        "conjugate of {} by {}",
        o.source(),
        theta.source()
    );
    BinOpFn::native(label, move |u, v| {
        let iu = invert_theta(&theta, u, bracket)?;
        let iv = invert_theta(&theta, v, bracket)?;
        theta.eval_unchecked(o.eval(iu, iv)?)
    })
}

fn invert_theta(theta: &ScalarFn, y: f64, bracket: Interval) -> Result<f64> {
    if let Some(res) = theta.analytic_inverse(y) {
        return res;
    }
    scalarfn::invert(theta, y, bracket)
}

/// Rescale distances by `t^r` (`r > 0`), conjugating the triangle
/// operation to match.
pub fn power(space: &OMetricSpace, r: f64, samples: usize, seed: u64) -> Result<OMetricSpace> {
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::InvalidParam(format!("power needs r > 0, got {r}")));
    }
    if space.interval.lo < 0.0 {
        return Err(Error::InvalidParam(
            "power transform needs a non-negative distance interval".into(),
        ));
    }
    let theta = scalarfn::catalog(&format!("power:{r}"))?;
    let mut out = pushforward_auto(space, &theta, samples, seed)?;
    out.name = format!("power({}, r={r})", space.name);
    Ok(out)
}

/// Collapse an upward space to an ordinary metric: `dist' = lambda . dist`,
/// base 0, triangle operation `u + v`.
///
/// `lambda` must be non-decreasing with `lambda(a) = 0`. The additive
/// identity `lambda(o(u, v)) = lambda(u) + lambda(v)` is sampled; when it
/// fails (the declared `o` may overshoot the tight triangle bound), the
/// construction falls back to sampling the output triangle inequality
/// directly and refuses only if that fails too.
pub fn to_metric(
    space: &OMetricSpace,
    lambda: &ScalarFn,
    samples: usize,
    seed: u64,
) -> Result<OMetricSpace> {
    if space.direction() != Direction::Upward {
        return Err(Error::Unsupported(format!(
            "to_metric needs an upward space, `{}` is {:?}",
            space.name,
            space.direction()
        )));
    }
    let iv = space.interval;
    require_monotone(
        lambda,
        &iv,
        Monotonicity::NonDecreasing,
        samples,
        seed,
        "lambda non-decreasing on the distance interval",
        "lambda",
    )?;
    let la = theta_at(lambda, space.a, "lambda")?;
    if !approx_eq(la, 0.0, TOL_EQ) {
        return Err(Error::hypothesis(
            "lambda vanishes at the base value",
            format!("lambda({}) = {la}", space.a),
        ));
    }

    let mut r = rng::seeded(seed);
    let mut additive = true;
    for _ in 0..samples {
        let u = rng::draw(&mut r, &iv);
        let v = rng::draw(&mut r, &iv);
        let lhs = theta_at(lambda, space.o(u, v)?, "lambda")?;
        let rhs = theta_at(lambda, u, "lambda")? + theta_at(lambda, v, "lambda")?;
        if !approx_eq(lhs, rhs, TOL_EQ) {
            additive = false;
            break;
        }
    }
    if !additive {
        // Fall back to the operative claim: lambda(dist) satisfies the
        // plain triangle inequality on sampled triples.
        let mut r = rng::seeded(seed.wrapping_add(3));
        for _ in 0..samples {
            let x = space.sample_point(&mut r);
            let y = space.sample_point(&mut r);
            let z = space.sample_point(&mut r);
            let dxz = theta_at(lambda, space.dist(&x, &z)?, "lambda")?;
            let dxy = theta_at(lambda, space.dist(&x, &y)?, "lambda")?;
            let dyz = theta_at(lambda, space.dist(&y, &z)?, "lambda")?;
            if !leq_with_tol(dxz, dxy + dyz, TOL_INEQ) {
                return Err(Error::hypothesis(
                    "lambda of dist satisfies the triangle inequality",
                    format!(
                        "x = {x:?}, y = {y:?}, z = {z:?}: {dxz} > {dxy} + {dyz}"
                    ),
                ));
            }
        }
    }

    let lam = lambda.clone();
    let base_dist = space.dist_fn().clone();
    let label = format!("{} after {}", lambda.source(), base_dist.label());
    OMetricSpace::new(
        format!("metric({}, {})", space.name, lambda.source()),
        space.domain.clone(),
        DistFn::new(label, move |x, y| lam.eval_unchecked(base_dist.eval(x, y)?)),
        BinOpFn::parse("u+v")?,
        0.0,
        Interval::nonneg(),
    )
}

/// Mirror a space through a decreasing `theta`, given `phi` satisfying the
/// mirror condition `w <= o(u, v) <=> phi(w, v) <= u` on the distance
/// interval. The new operation is
/// `o'(u, v) = theta(phi(inv theta(u), inv theta(v)))`.
pub fn downward_dual(
    space: &OMetricSpace,
    phi: &BinOpFn,
    theta: &ScalarFn,
    samples: usize,
    seed: u64,
) -> Result<OMetricSpace> {
    let iv = space.interval;
    require_monotone(
        theta,
        &iv,
        Monotonicity::NonIncreasing,
        samples,
        seed,
        "theta decreasing on the distance interval",
        "theta",
    )?;

    // Mirror condition on sampled triples, skipping boundary-ambiguous
    // draws where either comparison sits within tolerance of equality.
    let mut r = rng::seeded(seed);
    for _ in 0..samples {
        let u = rng::draw(&mut r, &iv);
        let v = rng::draw(&mut r, &iv);
        let w = rng::draw(&mut r, &iv);
        let bound = space.o(u, v)?;
        let mirrored = phi.eval(w, v)?;
        let near_lhs = (w - bound).abs() <= TOL_EQ * w.abs().max(bound.abs()).max(1.0);
        let near_rhs = (mirrored - u).abs() <= TOL_EQ * mirrored.abs().max(u.abs()).max(1.0);
        if near_lhs || near_rhs {
            continue;
        }
        let lhs = w <= bound;
        let rhs = mirrored <= u;
        if lhs != rhs {
            return Err(Error::hypothesis(
                "mirror condition",
                format!(
                    "u = {u}, v = {v}, w = {w}: w <= o(u, v) is {lhs} (o = {bound}) \
                     but phi(w, v) <= u is {rhs} (phi = {mirrored})"
                ),
            ));
        }
    }

    let b = theta_at(theta, space.a, "theta")?;
    // Decreasing theta flips the interval; a singular upper end (such as
    // -ln at 0) means the image is unbounded above.
    let probe_hi = iv.sample_hi(1e6);
    let new_lo = theta.eval_unchecked(probe_hi).unwrap_or(0.0).max(0.0);
    let new_hi = theta.eval_unchecked(iv.lo).unwrap_or(f64::INFINITY);
    let interval = Interval::new(new_lo.min(b), new_hi.max(b));

    let th = theta.clone();
    let th2 = theta.clone();
    let ph = phi.clone();
    let base_dist = space.dist_fn().clone();
    let label = format!("{} after {}", theta.source(), base_dist.label());
    let o_label = format!(
        "theta(phi(inv theta(u), inv theta(v))), phi = {}, theta = {}",
        phi.source(),
        theta.source()
    );
    OMetricSpace::new(
        format!("dual({}, {})", space.name, theta.source()),
        space.domain.clone(),
        DistFn::new(label, move |x, y| th.eval_unchecked(base_dist.eval(x, y)?)),
        BinOpFn::native(o_label, move |u, v| {
            let iu = invert_theta(&th2, u, iv)?;
            let ivv = invert_theta(&th2, v, iv)?;
            th2.eval_unchecked(ph.eval(iu, ivv)?)
        }),
        b,
        interval,
    )
}

fn fold_phi(phi: &BinOpFn, args: &[f64]) -> Result<f64> {
    let mut acc = args[0];
    for &x in &args[1..] {
        acc = phi.eval(acc, x)?;
    }
    Ok(acc)
}

/// Product of two or more spaces over one shared base value, with
/// coordinate distances folded through `phi` and the max of the operand
/// triangle operations as the new `o`.
///
/// Sampled conditions on `phi`: identity at the all-base vector (and only
/// there), non-decreasing in each coordinate, and distributivity over the
/// pointwise triangle operations.
pub fn product(
    spaces: &[OMetricSpace],
    phi: &BinOpFn,
    samples: usize,
    seed: u64,
) -> Result<OMetricSpace> {
    if spaces.len() < 2 {
        return Err(Error::InvalidParam(format!(
            "product needs at least two spaces, got {}",
            spaces.len()
        )));
    }
    let a = spaces[0].a;
    for s in spaces {
        if !approx_eq(s.a, a, TOL_EQ) {
            return Err(Error::InvalidParam(format!(
                "mismatched base values: `{}` has {} but `{}` has {}",
                spaces[0].name, a, s.name, s.a
            )));
        }
    }

    let ivs: Vec<Interval> = spaces.iter().map(|s| s.interval).collect();
    let n = spaces.len();

    // (1) identity at the all-base vector.
    let at_base = fold_phi(phi, &vec![a; n])?;
    if !approx_eq(at_base, a, TOL_EQ) {
        return Err(Error::hypothesis(
            "phi(a, ..., a) = a",
            format!("got {at_base}"),
        ));
    }
    let mut r = rng::seeded(seed);
    let draw_vec = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        ivs.iter().map(|iv| rng::draw(r, iv)).collect()
    };
    // (1b) only there: vectors with one coordinate pushed off the base.
    for _ in 0..samples {
        let mut args = vec![a; n];
        use rand::Rng;
        let j = r.gen_range(0..n);
        let span = ivs[j].sample_hi(rng::UNBOUNDED_SPAN) - ivs[j].sample_lo(rng::UNBOUNDED_SPAN);
        let off = rng::draw(&mut r, &ivs[j]);
        if (off - a).abs() < 1e-3 * span.max(1.0) {
            continue;
        }
        args[j] = off;
        let val = fold_phi(phi, &args)?;
        if approx_eq(val, a, TOL_EQ) {
            return Err(Error::hypothesis(
                "phi equals the base only at the all-base vector",
                format!("phi({args:?}) = {val}"),
            ));
        }
    }
    // (2) non-decreasing in each coordinate.
    for _ in 0..samples {
        let mut args = draw_vec(&mut r);
        use rand::Rng;
        let j = r.gen_range(0..n);
        let lo = rng::draw(&mut r, &ivs[j]);
        let hi = rng::draw(&mut r, &ivs[j]);
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        args[j] = lo;
        let f_lo = fold_phi(phi, &args)?;
        args[j] = hi;
        let f_hi = fold_phi(phi, &args)?;
        if f_hi < f_lo - TOL_EQ * f_lo.abs().max(f_hi.abs()).max(1.0) {
            return Err(Error::hypothesis(
                "phi non-decreasing in each coordinate",
                format!("coordinate {j}: phi drops from {f_lo} to {f_hi} as it moves {lo} -> {hi}"),
            ));
        }
    }
    // (3) distributivity over the pointwise operations.
    let os: Vec<BinOpFn> = spaces.iter().map(|s| s.o_fn().clone()).collect();
    for _ in 0..samples {
        let us = draw_vec(&mut r);
        let vs = draw_vec(&mut r);
        let mut combined = Vec::with_capacity(n);
        for i in 0..n {
            combined.push(os[i].eval(us[i], vs[i])?);
        }
        let lhs = fold_phi(phi, &combined)?;
        let phi_u = fold_phi(phi, &us)?;
        let phi_v = fold_phi(phi, &vs)?;
        let mut rhs = f64::NEG_INFINITY;
        for o in &os {
            rhs = rhs.max(o.eval(phi_u, phi_v)?);
        }
        if !leq_with_tol(lhs, rhs, TOL_INEQ) {
            return Err(Error::hypothesis(
                "phi distributes over the pointwise operations",
                format!("u = {us:?}, v = {vs:?}: phi of pointwise bounds {lhs} > combined bound {rhs}"),
            ));
        }
    }

    // Domain: concatenate continuous domains, or take the cartesian
    // product of finite ones.
    let all_finite = spaces
        .iter()
        .all(|s| matches!(s.domain, PointDomain::Finite { .. }));
    let any_finite = spaces
        .iter()
        .any(|s| matches!(s.domain, PointDomain::Finite { .. }));
    let domain = if all_finite {
        let mut points: Vec<Vec<f64>> = vec![vec![]];
        for s in spaces {
            let PointDomain::Finite { points: ps } = &s.domain else {
                unreachable!()
            };
            let mut next = Vec::with_capacity(points.len() * ps.len());
            for head in &points {
                for p in ps {
                    let mut q = head.clone();
                    q.extend_from_slice(p);
                    next.push(q);
                }
            }
            points = next;
            if points.len() > 4096 {
                return Err(Error::Unsupported(
                    "finite product exceeds 4096 points".into(),
                ));
            }
        }
        PointDomain::Finite { points }
    } else if any_finite {
        return Err(Error::Unsupported(
            "product of finite with continuous domains is not supported".into(),
        ));
    } else {
        let mut bounds = Vec::new();
        for s in spaces {
            match &s.domain {
                PointDomain::Line { lo, hi } => bounds.push((*lo, *hi)),
                PointDomain::Box { bounds: bs } => bounds.extend_from_slice(bs),
                PointDomain::Finite { .. } => unreachable!(),
            }
        }
        PointDomain::Box { bounds }
    };

    // Distance interval: fold the ends through phi where finite.
    let los: Vec<f64> = ivs.iter().map(|iv| iv.lo).collect();
    let lo_val = fold_phi(phi, &los).unwrap_or(a).min(a);
    let hi_val = if ivs.iter().any(|iv| !iv.hi.is_finite()) {
        f64::INFINITY
    } else {
        let his: Vec<f64> = ivs.iter().map(|iv| iv.hi).collect();
        fold_phi(phi, &his).unwrap_or(f64::INFINITY).max(a)
    };

    let dims: Vec<usize> = spaces.iter().map(|s| s.domain.dim()).collect();
    let parts: Vec<OMetricSpace> = spaces.to_vec();
    let ph = phi.clone();
    let names: Vec<&str> = spaces.iter().map(|s| s.name.as_str()).collect();
    let dist_label = format!("fold of {} through {}", names.join(", "), phi.source());
    let os_for_o = os.clone();
    OMetricSpace::new(
        format!("product({}; {})", names.join(", "), phi.source()),
        domain,
        DistFn::new(dist_label, move |x, y| {
            let mut ds = Vec::with_capacity(parts.len());
            let mut at = 0;
            for (s, d) in parts.iter().zip(&dims) {
                ds.push(s.dist(&x[at..at + d], &y[at..at + d])?);
                at += d;
            }
            fold_phi(&ph, &ds)
        }),
        BinOpFn::native("max of operand triangle operations", move |u, v| {
            let mut best = f64::NEG_INFINITY;
            for o in &os_for_o {
                best = best.max(o.eval(u, v)?);
            }
            Ok(best)
        }),
        a,
        Interval::new(lo_val, hi_val),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalarfn::catalog;
    use crate::space::builtin_ref;

    fn euclid() -> OMetricSpace {
        builtin_ref("euclidean-metric").unwrap()
    }

    fn all_pass(space: &OMetricSpace) {
        for rep in space.check_axioms(2000, 42) {
            assert!(
                rep.passed,
                "{}: {:?} failed: {:?}",
                space.name, rep.axiom, rep.counterexample
            );
        }
    }

    #[test]
    fn pushforward_exp_recovers_multiplicative() {
        let out = pushforward(
            &euclid(),
            &catalog("exp").unwrap(),
            BinOpFn::parse("u*v").unwrap(),
            1.0,
            2000,
            42,
        )
        .unwrap();
        let reference = builtin_ref("multiplicative-exp").unwrap();
        let mut r = rng::seeded(1);
        for _ in 0..500 {
            let x = out.sample_point(&mut r);
            let y = out.sample_point(&mut r);
            let d1 = out.dist(&x, &y).unwrap();
            let d2 = reference.dist(&x, &y).unwrap();
            assert!(approx_eq(d1, d2, 1e-12), "{d1} vs {d2}");
        }
        assert_eq!(out.direction(), Direction::Upward);
        all_pass(&out);
    }

    #[test]
    fn pushforward_refuses_decreasing_or_noncommuting() {
        let e = euclid();
        // Decreasing theta.
        let err = pushforward(
            &e,
            &catalog("neg-exp").unwrap(),
            BinOpFn::parse("u/v").unwrap(),
            1.0,
            500,
            42,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Hypothesis { .. }));
        // Wrong target operation: squaring does not commute with plain sums.
        let err = pushforward(
            &e,
            &catalog("square").unwrap(),
            BinOpFn::parse("u+v").unwrap(),
            0.0,
            500,
            42,
        )
        .unwrap_err();
        match err {
            Error::Hypothesis { check, .. } => assert!(check.contains("commutes")),
            other => panic!("unexpected {other:?}"),
        }
        // Wrong base value.
        let err = pushforward(
            &e,
            &catalog("exp").unwrap(),
            BinOpFn::parse("u*v").unwrap(),
            0.0,
            500,
            42,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Hypothesis { .. }));
    }

    #[test]
    fn power_matches_squared_distances() {
        let out = power(&euclid(), 2.0, 2000, 42).unwrap();
        let d = out.dist(&[0.0], &[3.0]).unwrap();
        assert!((d - 9.0).abs() < 1e-12);
        // Conjugated operation: (sqrt(u) + sqrt(v))^2.
        let o = out.o(1.0, 1.0).unwrap();
        assert!((o - 4.0).abs() < 1e-9);
        all_pass(&out);
        for r in [0.5, 1.0, 3.0] {
            all_pass(&power(&euclid(), r, 1000, 42).unwrap());
        }
        assert!(power(&euclid(), 0.0, 100, 42).is_err());
        assert!(power(&euclid(), -1.0, 100, 42).is_err());
    }

    #[test]
    fn to_metric_collapses_multiplicative_to_euclidean() {
        let m = builtin_ref("multiplicative-exp").unwrap();
        let out = to_metric(&m, &catalog("log").unwrap(), 2000, 42).unwrap();
        let mut r = rng::seeded(5);
        for _ in 0..1000 {
            let x = out.sample_point(&mut r);
            let y = out.sample_point(&mut r);
            let d = out.dist(&x, &y).unwrap();
            assert!(
                approx_eq(d, (x[0] - y[0]).abs(), 1e-9),
                "lambda of dist should be |x-y|, got {d}"
            );
        }
        assert_eq!(out.a, 0.0);
        all_pass(&out);
    }

    #[test]
    fn to_metric_log_space_despite_loose_operation() {
        // The declared operation (u+1)(v+1) overshoots additivity, but
        // exp(dist)-1 = |x-y| is still a metric; the fallback accepts it.
        let space = builtin_ref("log-metric").unwrap();
        let out = to_metric(&space, &catalog("expm1").unwrap(), 2000, 42).unwrap();
        let mut r = rng::seeded(6);
        for _ in 0..1000 {
            let x = out.sample_point(&mut r);
            let y = out.sample_point(&mut r);
            let d = out.dist(&x, &y).unwrap();
            assert!(approx_eq(d, (x[0] - y[0]).abs(), 1e-9));
        }
        all_pass(&out);
    }

    #[test]
    fn to_metric_refuses_downward_and_bad_lambda() {
        let down = builtin_ref("exp-downward").unwrap();
        assert!(matches!(
            to_metric(&down, &catalog("log").unwrap(), 500, 42),
            Err(Error::Unsupported(_))
        ));
        // lambda(a) != 0.
        let m = builtin_ref("multiplicative-exp").unwrap();
        let err = to_metric(&m, &catalog("identity").unwrap(), 500, 42).unwrap_err();
        match err {
            Error::Hypothesis { check, .. } => assert!(check.contains("vanishes")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dual_of_euclidean_is_the_downward_exponential() {
        let out = downward_dual(
            &euclid(),
            &BinOpFn::parse("u-v").unwrap(),
            &catalog("neg-exp").unwrap(),
            2000,
            42,
        )
        .unwrap();
        assert!((out.a - 1.0).abs() < 1e-15);
        assert_eq!(out.direction(), Direction::Downward);
        // dist' = exp(-|x-y|).
        let d = out.dist(&[0.0], &[2.0]).unwrap();
        assert!((d - (-2f64).exp()).abs() < 1e-12);
        // o'(u, v) = u / v on sampled pairs from the new interval (0, 1].
        let mut r = rng::seeded(9);
        use rand::Rng;
        for _ in 0..1000 {
            let u: f64 = r.gen_range(0.01..=1.0);
            let v: f64 = r.gen_range(0.01..=1.0);
            let o = out.o(u, v).unwrap();
            assert!(approx_eq(o, u / v, 1e-9), "o({u}, {v}) = {o}, want {}", u / v);
        }
        all_pass(&out);
    }

    #[test]
    fn dual_applied_twice_returns_home() {
        let down = downward_dual(
            &euclid(),
            &BinOpFn::parse("u-v").unwrap(),
            &catalog("neg-exp").unwrap(),
            2000,
            42,
        )
        .unwrap();
        // Mirror partner of u/v is w*v; -ln t climbs back up.
        let back = downward_dual(
            &down,
            &BinOpFn::parse("u*v").unwrap(),
            &catalog("neg-log").unwrap(),
            2000,
            42,
        )
        .unwrap();
        assert!((back.a - 0.0).abs() < 1e-15);
        let e = euclid();
        let mut r = rng::seeded(11);
        for _ in 0..1000 {
            let x = e.sample_point(&mut r);
            let y = e.sample_point(&mut r);
            let d1 = back.dist(&x, &y).unwrap();
            let d2 = e.dist(&x, &y).unwrap();
            assert!(approx_eq(d1, d2, 1e-8), "{d1} vs {d2}");
        }
    }

    #[test]
    fn dual_refuses_broken_mirror() {
        let err = downward_dual(
            &euclid(),
            &BinOpFn::parse("u+v").unwrap(),
            &catalog("neg-exp").unwrap(),
            500,
            42,
        )
        .unwrap_err();
        match err {
            Error::Hypothesis { check, .. } => assert_eq!(check, "mirror condition"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn product_sum_and_max_combiners() {
        let e = euclid();
        let taxicab = product(
            &[e.clone(), e.clone()],
            &BinOpFn::parse("u+v").unwrap(),
            1000,
            42,
        )
        .unwrap();
        let d = taxicab.dist(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert!((d - 3.0).abs() < 1e-12);
        all_pass(&taxicab);

        let chebyshev = product(
            &[e.clone(), e.clone()],
            &BinOpFn::parse("max(u,v)").unwrap(),
            1000,
            42,
        )
        .unwrap();
        let d = chebyshev.dist(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
        all_pass(&chebyshev);

        // Three-way fold.
        let three = product(
            &[e.clone(), e.clone(), e.clone()],
            &BinOpFn::parse("u+v").unwrap(),
            1000,
            42,
        )
        .unwrap();
        let d = three.dist(&[0.0; 3], &[1.0, 1.0, 1.0]).unwrap();
        assert!((d - 3.0).abs() < 1e-12);
        all_pass(&three);
    }

    #[test]
    fn product_rejects_mismatched_bases_and_single_operand() {
        let e = euclid();
        let m = builtin_ref("multiplicative-exp").unwrap();
        assert!(matches!(
            product(&[e.clone(), m], &BinOpFn::parse("u+v").unwrap(), 200, 42),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(
            product(&[e], &BinOpFn::parse("u+v").unwrap(), 200, 42),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn roundtrip_to_metric_then_pushforward_back() {
        let m = builtin_ref("multiplicative-exp").unwrap();
        let flat = to_metric(&m, &catalog("log").unwrap(), 2000, 42).unwrap();
        let back = pushforward(
            &flat,
            &catalog("exp").unwrap(),
            BinOpFn::parse("u*v").unwrap(),
            1.0,
            2000,
            42,
        )
        .unwrap();
        let mut r = rng::seeded(13);
        for _ in 0..1000 {
            let x = m.sample_point(&mut r);
            let y = m.sample_point(&mut r);
            let d1 = back.dist(&x, &y).unwrap();
            let d2 = m.dist(&x, &y).unwrap();
            assert!(approx_eq(d1, d2, 1e-9), "{d1} vs {d2}");
        }
    }
}
