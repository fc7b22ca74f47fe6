//! Executable topology: ball membership, trend analysis of sequences,
//! uniqueness and openness condition checks, separation witnesses, and
//! the upward regeneration of an arbitrary space.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scalarfn::{self, BinOpFn, ScalarFn};
use crate::space::{Direction, DistFn, OMetricSpace, Point};
use crate::{leq_with_tol, rng, TOL_EQ, TOL_INEQ};

/// An open ball `B(x, r) = { y : |dist(x, y) - a| < r }`.
#[derive(Debug, Clone, Serialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParam(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Ball { center, radius })
    }
}

/// Strict membership test `|dist(x, y) - a| < r`.
pub fn ball_contains(space: &OMetricSpace, ball: &Ball, y: &[f64]) -> Result<bool> {
    if !space.domain.contains(&ball.center) {
        return Err(Error::InvalidParam(format!(
            "ball center {:?} lies outside the domain",
            ball.center
        )));
    }
    if !space.domain.contains(y) {
        return Err(Error::InvalidParam(format!("point {y:?} lies outside the domain")));
    }
    let d = space.dist(&ball.center, y)?;
    Ok((d - space.a).abs() < ball.radius)
}

/// A sequence to analyze: either an explicit finite prefix, or a
/// one-dimensional generator `x_n = f(n)` sampled up to `n_max`
/// (1-based).
#[derive(Debug, Clone)]
pub enum SequenceSpec {
    Points(Vec<Point>),
    Generated { f: ScalarFn, n_max: u64 },
}

impl SequenceSpec {
    fn len(&self) -> u64 {
        match self {
            SequenceSpec::Points(pts) => pts.len() as u64,
            SequenceSpec::Generated { n_max, .. } => *n_max,
        }
    }

    fn point_at(&self, n: u64) -> Result<Point> {
        match self {
            SequenceSpec::Points(pts) => Ok(pts[(n - 1) as usize].clone()),
            SequenceSpec::Generated { f, .. } => Ok(vec![f.eval(n as f64)?]),
        }
    }
}

/// Trend analysis over dyadic index windows. Window `k` covers indices
/// `[2^k, 2^{k+1})`; a verdict is a statement about the supplied prefix
/// only, never about the infinite sequence.
#[derive(Debug, Clone, Serialize)]
pub struct SequenceAnalysis {
    pub candidate: Option<Point>,
    /// Sampled 1-based indices, grouped in the flat order they were taken.
    pub indices: Vec<u64>,
    /// Sampled points (parallel to `indices`).
    pub points: Vec<Point>,
    /// `|dist(x_n, candidate) - a|` per sampled index.
    pub residuals: Vec<f64>,
    /// Max candidate-residual per window.
    pub window_maxima: Vec<f64>,
    /// Max pairwise `|dist(x_n, x_m) - a|` per window.
    pub cauchy_window_maxima: Vec<f64>,
    pub converging_trend: Option<bool>,
    pub cauchy_trend: bool,
    /// Residual threshold the final window must beat.
    pub tol: f64,
}

fn spread_indices(start: u64, end: u64, cap: usize) -> Vec<u64> {
    let count = end - start + 1;
    if count <= cap as u64 {
        return (start..=end).collect();
    }
    let mut out = Vec::with_capacity(cap);
    for i in 0..cap {
        let t = i as f64 / (cap - 1) as f64;
        out.push(start + (t * (count - 1) as f64).round() as u64);
    }
    out.dedup();
    out
}

fn trend_ok(maxima: &[f64], tol: f64) -> bool {
    if maxima.len() < 2 {
        return false;
    }
    let final_ok = *maxima.last().unwrap() < tol;
    let decreasing = maxima
        .windows(2)
        .all(|w| w[1] < w[0] || w[1] < tol);
    final_ok && decreasing
}

/// Residual trend analysis of a sequence prefix against an optional
/// convergence candidate, plus a windowed Cauchy analysis.
///
/// Explicit prefixes are sampled densely (up to 64 indices per window);
/// generated sequences sparsely (8 per window), which keeps very long
/// prefixes cheap.
pub fn analyze_sequence(
    space: &OMetricSpace,
    seq: &SequenceSpec,
    candidate: Option<&[f64]>,
) -> Result<SequenceAnalysis> {
    let n_max = seq.len();
    if n_max < 4 {
        return Err(Error::InvalidParam(format!(
            "sequence analysis needs at least 4 terms, got {n_max}"
        )));
    }
    if let Some(c) = candidate {
        if !space.domain.contains(c) {
            return Err(Error::InvalidParam(format!(
                "candidate {c:?} lies outside the domain"
            )));
        }
    }
    let conv_cap = match seq {
        SequenceSpec::Points(_) => 64,
        SequenceSpec::Generated { .. } => 8,
    };
    let tol = 10.0 * TOL_EQ * space.a.abs().max(1.0);

    let mut indices = Vec::new();
    let mut points = Vec::new();
    let mut residuals = Vec::new();
    let mut window_maxima = Vec::new();
    let mut cauchy_window_maxima = Vec::new();

    let mut k = 0u32;
    loop {
        let start = 1u64 << k;
        if start > n_max {
            break;
        }
        let end = ((1u64 << (k + 1)) - 1).min(n_max);

        let conv_idx = spread_indices(start, end, conv_cap);
        let mut pts = Vec::with_capacity(conv_idx.len());
        for &n in &conv_idx {
            let p = seq.point_at(n)?;
            if !space.domain.contains(&p) {
                return Err(Error::InvalidParam(format!(
                    "sequence point x_{n} = {p:?} lies outside the domain"
                )));
            }
            pts.push(p);
        }
        if let Some(c) = candidate {
            let mut wmax: f64 = 0.0;
            for p in &pts {
                let res = (space.dist(p, c)? - space.a).abs();
                residuals.push(res);
                wmax = wmax.max(res);
            }
            window_maxima.push(wmax);
        }

        // Cauchy pairs over a small subset of the window. Windows with a
        // single index (the first, and a truncated last one) have no
        // pairs and are skipped.
        let pair_idx = spread_indices(start, end, 8);
        if pair_idx.len() >= 2 {
            let mut pair_pts = Vec::with_capacity(pair_idx.len());
            for &n in &pair_idx {
                pair_pts.push(seq.point_at(n)?);
            }
            let mut cmax: f64 = 0.0;
            for i in 0..pair_pts.len() {
                for j in (i + 1)..pair_pts.len() {
                    cmax = cmax.max((space.dist(&pair_pts[i], &pair_pts[j])? - space.a).abs());
                }
            }
            cauchy_window_maxima.push(cmax);
        }

        indices.extend(conv_idx);
        points.extend(pts);
        k += 1;
    }

    let converging_trend = candidate.map(|_| trend_ok(&window_maxima, tol));
    let cauchy_trend = trend_ok(&cauchy_window_maxima, tol);
    Ok(SequenceAnalysis {
        candidate: candidate.map(|c| c.to_vec()),
        indices,
        points,
        residuals,
        window_maxima,
        cauchy_window_maxima,
        converging_trend,
        cauchy_trend,
        tol,
    })
}

/// One sampled condition verdict with an optional witness description.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionVerdict {
    pub name: String,
    pub passed: bool,
    pub witness: Option<String>,
}

impl ConditionVerdict {
    fn pass(name: &str) -> Self {
        ConditionVerdict {
            name: name.into(),
            passed: true,
            witness: None,
        }
    }
    fn fail(name: &str, witness: String) -> Self {
        ConditionVerdict {
            name: name.into(),
            passed: false,
            witness: Some(witness),
        }
    }
}

/// Verdicts for the limit-uniqueness conditions.
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    /// Continuity of the operation at the base pair.
    pub u1: ConditionVerdict,
    /// Non-decreasing in both variables plus a one-sided base identity.
    pub u2: ConditionVerdict,
    /// One-variable weakening of the above.
    pub u2_prime: ConditionVerdict,
    /// Sampled limits are unique when u1 and (u2 or u2') hold.
    pub limits_unique: bool,
}

fn base_identity_side(
    space: &OMetricSpace,
    var: usize,
    samples: usize,
    seed: u64,
) -> Option<String> {
    let a = space.a;
    let iv = space.interval;
    let span = iv.sample_hi(rng::UNBOUNDED_SPAN) - iv.sample_lo(rng::UNBOUNDED_SPAN);
    let margin = 1e-3 * span.max(1.0);
    let scale = TOL_EQ * a.abs().max(1.0);
    match space.o(a, a) {
        Ok(v) if (v - a).abs() <= scale => {}
        Ok(v) => return Some(format!("o(a, a) = {v}, expected the base value {a}")),
        Err(e) => return Some(format!("o(a, a) failed: {e}")),
    }
    let mut r = rng::seeded(seed);
    for u in rng::cover(&mut r, &iv, samples.max(8)) {
        if (u - a).abs() < margin {
            continue;
        }
        let val = match if var == 0 { space.o(u, a) } else { space.o(a, u) } {
            Ok(v) => v,
            Err(e) => return Some(format!("o at ({u}, base) failed: {e}")),
        };
        if (val - a).abs() <= scale {
            return Some(if var == 0 {
                format!("o({u}, a) = {val} equals the base value although u != a")
            } else {
                format!("o(a, {u}) = {val} equals the base value although u != a")
            });
        }
    }
    None
}

fn monotone_witness_text(w: &scalarfn::MonotoneEachWitness) -> String {
    format!(
        "variable {} with the other fixed at {}: o drops from {} to {} over {} -> {}",
        w.var, w.fixed, w.f_lo, w.f_hi, w.lo_arg, w.hi_arg
    )
}

/// Sampled verdicts for the limit-uniqueness conditions: continuity of
/// the operation at the base pair, monotonicity in both (or one)
/// variables, and the base identity `o(u, a) = a <=> u = a`.
pub fn check_u_conditions(space: &OMetricSpace, samples: usize, seed: u64) -> UniquenessReport {
    let a = space.a;
    let iv = space.interval;
    let o = space.o_fn();
    let span = iv.sample_hi(rng::UNBOUNDED_SPAN) - iv.sample_lo(rng::UNBOUNDED_SPAN);

    // U1: shrinking-neighborhood continuity at (a, a).
    let u1 = match o.eval(a, a) {
        Err(e) => ConditionVerdict::fail("U1", format!("o(a, a) failed: {e}")),
        Ok(base) => {
            let mut verdict = ConditionVerdict::pass("U1");
            let mut final_drift = f64::INFINITY;
            let mut worst: Option<(f64, f64, f64)> = None;
            for j in 1..=12 {
                let delta = span.max(1.0) * 10f64.powi(-j);
                let sub = Interval::new((a - delta).max(iv.lo), (a + delta).min(iv.hi));
                let mut r = rng::seeded(seed.wrapping_add(j as u64));
                let us = rng::cover(&mut r, &sub, 16);
                let mut drift: f64 = 0.0;
                for &u in &us {
                    for &v in &us {
                        match o.eval(u, v) {
                            Ok(val) => {
                                if (val - base).abs() > drift {
                                    drift = (val - base).abs();
                                    worst = Some((u, v, val));
                                }
                            }
                            Err(e) => {
                                verdict = ConditionVerdict::fail(
                                    "U1",
                                    format!("o({u}, {v}) failed near the base pair: {e}"),
                                );
                            }
                        }
                    }
                }
                final_drift = drift;
            }
            if verdict.passed && !(final_drift <= 10.0 * TOL_EQ * base.abs().max(1.0)) {
                let (u, v, val) = worst.unwrap();
                verdict = ConditionVerdict::fail(
                    "U1",
                    format!(
                        "o({u}, {v}) = {val} stays {final_drift} away from o(a, a) = {base} \
                         on the finest neighborhood"
                    ),
                );
            }
            verdict
        }
    };

    // Per-variable monotonicity.
    let mono = |var: usize, seed: u64| -> Option<String> {
        match scalarfn::check_monotone_var(o, &iv, var, false, samples, seed) {
            Ok(None) => None,
            Ok(Some(w)) => Some(monotone_witness_text(&w)),
            Err(e) => Some(format!("evaluation failed while sampling: {e}")),
        }
    };
    let mono0 = mono(0, seed.wrapping_add(101));
    let mono1 = mono(1, seed.wrapping_add(102));
    let side0 = base_identity_side(space, 0, samples / 4, seed.wrapping_add(103));
    let side1 = base_identity_side(space, 1, samples / 4, seed.wrapping_add(104));

    let u2 = match (&mono0, &mono1) {
        (None, None) => {
            if side0.is_none() || side1.is_none() {
                ConditionVerdict::pass("U2")
            } else {
                ConditionVerdict::fail("U2", side0.clone().unwrap())
            }
        }
        (Some(w), _) | (_, Some(w)) => ConditionVerdict::fail("U2", w.clone()),
    };

    let u2_prime = {
        let ok0 = mono0.is_none() && side0.is_none();
        let ok1 = mono1.is_none() && side1.is_none();
        if ok0 || ok1 {
            ConditionVerdict::pass("U2'")
        } else {
            let w = mono0
                .clone()
                .or_else(|| side0.clone())
                .or_else(|| mono1.clone())
                .or_else(|| side1.clone())
                .unwrap_or_default();
            ConditionVerdict::fail("U2'", w)
        }
    };

    let limits_unique = u1.passed && (u2.passed || u2_prime.passed);
    UniquenessReport {
        u1,
        u2,
        u2_prime,
        limits_unique,
    }
}

/// Structured witness of a failed inner-radius condition.
#[derive(Debug, Clone, Serialize)]
pub struct InnerRadiusWitness {
    pub r: f64,
    pub u: f64,
    pub gamma_value: f64,
    /// `o(u, gamma(r, u))` when it evaluated.
    pub bound: Option<f64>,
}

/// Verdicts for the openness conditions of an upward space.
#[derive(Debug, Clone, Serialize)]
pub struct OpennessReport {
    /// Existence-style check of the supplied inner-radius function:
    /// `gamma(r, u) > a` and `o(u, gamma(r, u)) <= r` for `a <= u < r`.
    pub c1: ConditionVerdict,
    pub c1_witness: Option<InnerRadiusWitness>,
    /// Strict monotonicity of the operation in both variables.
    pub c2: ConditionVerdict,
    /// The nested neighborhood condition: for every radius and interior
    /// level, some slice radius keeps the operation's image inside.
    pub condition10: ConditionVerdict,
}

/// Sampled verdicts for the openness conditions, with `gamma(r, u)`
/// supplied by the caller (first argument: target level `r`; second:
/// inner value `u`).
pub fn check_c_conditions(
    space: &OMetricSpace,
    gamma: &BinOpFn,
    samples: usize,
    seed: u64,
) -> Result<OpennessReport> {
    if space.direction() != Direction::Upward {
        return Err(Error::Unsupported(format!(
            "openness conditions need an upward space, `{}` is {:?}",
            space.name,
            space.direction()
        )));
    }
    let a = space.a;
    let iv = space.interval;
    let hi_eff = iv.sample_hi(rng::UNBOUNDED_SPAN);

    // C1.
    let mut c1 = ConditionVerdict::pass("C1");
    let mut c1_witness = None;
    let mut r = rng::seeded(seed);
    use rand::Rng;
    for _ in 0..samples {
        let lvl = r.gen_range(a..=hi_eff);
        if lvl - a < 1e-6 * (hi_eff - a) {
            continue;
        }
        let u = a + r.gen_range(0.0..1.0) * (lvl - a);
        if lvl - u < TOL_EQ * lvl.abs().max(1.0) {
            continue;
        }
        let g = match gamma.eval(lvl, u) {
            Ok(v) => v,
            Err(e) => {
                c1 = ConditionVerdict::fail("C1", format!("gamma({lvl}, {u}) failed: {e}"));
                c1_witness = Some(InnerRadiusWitness {
                    r: lvl,
                    u,
                    gamma_value: f64::NAN,
                    bound: None,
                });
                break;
            }
        };
        if !(g > a) {
            c1 = ConditionVerdict::fail(
                "C1",
                format!("gamma({lvl}, {u}) = {g} is not above the base value {a}"),
            );
            c1_witness = Some(InnerRadiusWitness {
                r: lvl,
                u,
                gamma_value: g,
                bound: None,
            });
            break;
        }
        let bound = match space.o(u, g) {
            Ok(v) => v,
            Err(e) => {
                c1 = ConditionVerdict::fail("C1", format!("o({u}, {g}) failed: {e}"));
                c1_witness = Some(InnerRadiusWitness {
                    r: lvl,
                    u,
                    gamma_value: g,
                    bound: None,
                });
                break;
            }
        };
        if !leq_with_tol(bound, lvl, TOL_INEQ) {
            c1 = ConditionVerdict::fail(
                "C1",
                format!("o({u}, gamma({lvl}, {u})) = {bound} exceeds the level {lvl}"),
            );
            c1_witness = Some(InnerRadiusWitness {
                r: lvl,
                u,
                gamma_value: g,
                bound: Some(bound),
            });
            break;
        }
    }

    // C2: strictly increasing in both variables.
    let c2 = match scalarfn::check_monotone_each(space.o_fn(), &iv, true, samples, seed.wrapping_add(1)) {
        Ok(None) => ConditionVerdict::pass("C2"),
        Ok(Some(w)) => ConditionVerdict::fail(
            "C2",
            format!(
                "variable {} with the other fixed at {}: o fails to strictly increase \
                 ({} -> {} over {} -> {})",
                w.var, w.fixed, w.f_lo, w.f_hi, w.lo_arg, w.hi_arg
            ),
        ),
        Err(e) => ConditionVerdict::fail("C2", format!("evaluation failed while sampling: {e}")),
    };

    // Nested neighborhood condition: for each sampled (r, u) with
    // |u - a| < r, search a ladder of slice radii s for one whose image
    // under o stays strictly inside the r-slice.
    let mut condition10 = ConditionVerdict::pass("condition-10");
    let span = hi_eff - a;
    'outer: for j in 0..=4 {
        let radius = span * 10f64.powi(-j);
        let mut rr = rng::seeded(seed.wrapping_add(11 + j as u64));
        for _ in 0..8 {
            let u = a + rr.gen_range(0.0..1.0) * radius.min(iv.hi - a);
            if (u - a) >= radius {
                continue;
            }
            let mut found = false;
            let mut best = f64::INFINITY;
            for m in 0..=40 {
                let s = radius * 0.5f64.powi(m);
                let sub = Interval::new(a, (a + s).min(iv.hi));
                let mut r2 = rng::seeded(seed.wrapping_add(17).wrapping_add(m as u64));
                let vs = rng::cover(&mut r2, &sub, 16);
                let mut sup = f64::NEG_INFINITY;
                for &v in &vs {
                    match space.o(u, v) {
                        Ok(w) => sup = sup.max(w),
                        Err(_) => {
                            sup = f64::INFINITY;
                            break;
                        }
                    }
                }
                best = best.min(sup);
                if sup - a < radius {
                    found = true;
                    break;
                }
            }
            if !found {
                condition10 = ConditionVerdict::fail(
                    "condition-10",
                    format!(
                        "radius {radius}, level u = {u}: the operation's image stays at \
                         {best} (>= a + r) for every sampled slice radius"
                    ),
                );
                break 'outer;
            }
        }
    }

    Ok(OpennessReport {
        c1,
        c1_witness,
        c2,
        condition10,
    })
}

/// Inner radius for ball openness: `s = gamma(a + r, u) - a` where `u`
/// is the distance from the outer center to the member.
pub fn inner_ball_radius(space: &OMetricSpace, gamma: &BinOpFn, r: f64, u: f64) -> Result<f64> {
    Ok(gamma.eval(space.a + r, u)? - space.a)
}

/// Separation radii around two distinct points, with sampled ball
/// disjointness.
#[derive(Debug, Clone, Serialize)]
pub struct SeparationWitness {
    pub x: Point,
    pub y: Point,
    pub dist: f64,
    /// Radius of the ball around `y`: `(dist - a) / 2`.
    pub r: f64,
    /// Radius of the ball around `x`: `gamma(dist, a + r) - a`.
    pub r1: f64,
    pub samples: usize,
    pub overlap_count: usize,
    pub disjoint: bool,
}

/// Construct the two separation radii from the openness machinery and
/// sample that the balls do not intersect.
pub fn hausdorff_witness(
    space: &OMetricSpace,
    gamma: &BinOpFn,
    x: &[f64],
    y: &[f64],
    samples: usize,
    seed: u64,
) -> Result<SeparationWitness> {
    let a = space.a;
    let d = space.dist(x, y)?;
    if (d - a).abs() <= TOL_EQ * a.abs().max(1.0) {
        return Err(Error::InvalidParam(
            "separation needs two distinct points (distance equals the base value)".into(),
        ));
    }
    if d < a {
        return Err(Error::Unsupported(
            "separation radii are defined for upward distances".into(),
        ));
    }
    let r = (d - a) / 2.0;
    let r1 = gamma.eval(d, a + r)? - a;
    if !(r1 > 0.0) {
        return Err(Error::hypothesis(
            "separation radius positive",
            format!("gamma({d}, {}) - {a} = {r1}", a + r),
        ));
    }
    let mut rng_ = rng::seeded(seed);
    let mut overlap = 0usize;
    for _ in 0..samples {
        let z = space.sample_point(&mut rng_);
        let in_x = (space.dist(x, &z)? - a).abs() < r1;
        let in_y = (space.dist(y, &z)? - a).abs() < r;
        if in_x && in_y {
            overlap += 1;
        }
    }
    Ok(SeparationWitness {
        x: x.to_vec(),
        y: y.to_vec(),
        dist: d,
        r,
        r1,
        samples,
        overlap_count: overlap,
        disjoint: overlap == 0,
    })
}

/// Regenerate any space as an upward one: `dist'(x, y) = a + |dist - a|`
/// with the reflected-max operation
/// `xi(u, v) = max{o(u, v), o(u, 2a - v), o(2a - u, v), o(2a - u, 2a - v), 2a}`,
/// where terms with arguments outside the original distance interval are
/// skipped. Residuals `|dist' - a|` coincide with `|dist - a|` up to one
/// floating-point rounding step, so convergence analyses carry over
/// unchanged.
pub fn upward_regenerate(space: &OMetricSpace) -> Result<OMetricSpace> {
    let a = space.a;
    let old_iv = space.interval;
    let o = space.o_fn().clone();
    let base_dist = space.dist_fn().clone();

    let hi = (old_iv.hi - a).max(a - old_iv.lo);
    let new_iv = Interval::new(a, a + hi);

    let xi_label = format!("reflected max of {} with floor 2a", o.source());
    let xi = BinOpFn::native(xi_label, move |u, v| {
        let mut best = 2.0 * a;
        let args = [
            (u, v),
            (u, 2.0 * a - v),
            (2.0 * a - u, v),
            (2.0 * a - u, 2.0 * a - v),
        ];
        for (p, q) in args {
            if old_iv.contains(p) && old_iv.contains(q) {
                if let Ok(val) = o.eval(p, q) {
                    if val.is_finite() {
                        best = best.max(val);
                    }
                }
            }
        }
        Ok(best)
    });
    let dist_label = format!("base + |{} - base|", base_dist.label());
    OMetricSpace::new(
        format!("upward({})", space.name),
        space.domain.clone(),
        DistFn::new(dist_label, move |x, y| {
            Ok(a + (base_dist.eval(x, y)? - a).abs())
        }),
        xi,
        a,
        new_iv,
    )
}
