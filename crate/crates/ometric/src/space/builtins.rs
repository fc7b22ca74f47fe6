//! Builtin example spaces. Each is a small, concrete `(X, dist, a, o)`
//! with sampling bounds chosen so distances (and `o` of two distances)
//! stay comfortably inside `f64` range.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scalarfn::{self, BinOpFn, Monotonicity, ScalarFn};
use crate::{approx_eq, rng, TOL_EQ};

use super::{DistFn, OMetricSpace, PointDomain};

/// Names accepted by [`builtin`]. Parameters: `b-metric-power` takes `p`
/// (> 0, default 2), `b-multiplicative` takes `s` (>= 1, default 2),
/// `ultrametric-max` takes `n` (points, default 16).
pub const BUILTIN_NAMES: &[&str] = &[
    "euclidean-metric",
    "b-metric-power",
    "multiplicative-exp",
    "b-multiplicative",
    "ultrametric-max",
    "p-metric",
    "log-metric",
    "exp-downward",
    "piecewise-mixed",
    "nonunique-limit",
    "circle-area",
];

fn abs_diff(x: &[f64], y: &[f64]) -> f64 {
    (x[0] - y[0]).abs()
}

/// Construct a builtin space by name.
pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<OMetricSpace> {
    let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
    match name {
        "euclidean-metric" => OMetricSpace::new(
            "euclidean-metric",
            PointDomain::line(-10.0, 10.0),
            DistFn::new("|x-y|", |x, y| Ok(abs_diff(x, y))),
            BinOpFn::parse("u+v")?,
            0.0,
            Interval::nonneg(),
        ),
        "b-metric-power" => {
            let p = get("p", 2.0);
            if p <= 0.0 || !p.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "b-metric-power needs p > 0, got {p}"
                )));
            }
            let s = 2f64.powf(p - 1.0).max(1.0);
            OMetricSpace::new(
                format!("b-metric-power(p={p})"),
                PointDomain::line(-10.0, 10.0),
                DistFn::new(format!("|x-y|^{p}"), move |x, y| Ok(abs_diff(x, y).powf(p))),
                BinOpFn::parse(&format!("{s}*(u+v)"))?,
                0.0,
                Interval::nonneg(),
            )
        }
        "multiplicative-exp" => OMetricSpace::new(
            "multiplicative-exp",
            PointDomain::line(-10.0, 10.0),
            DistFn::new("exp(|x-y|)", |x, y| Ok(abs_diff(x, y).exp())),
            BinOpFn::parse("u*v")?,
            1.0,
            Interval::new(1.0, f64::INFINITY),
        ),
        "b-multiplicative" => {
            let s = get("s", 2.0);
            if s < 1.0 || !s.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "b-multiplicative needs s >= 1, got {s}"
                )));
            }
            // exp of a power-p distance relaxes multiplication by exponent
            // s = 2^(p-1); narrow sampling bounds keep (u*v)^s finite.
            let p = 1.0 + s.log2();
            OMetricSpace::new(
                format!("b-multiplicative(s={s})"),
                PointDomain::line(-1.5, 1.5),
                DistFn::new(format!("exp(|x-y|^{p})"), move |x, y| {
                    Ok(abs_diff(x, y).powf(p).exp())
                }),
                BinOpFn::parse(&format!("(u*v)^{s}"))?,
                1.0,
                Interval::new(1.0, f64::INFINITY),
            )
        }
        "ultrametric-max" => {
            let n = get("n", 16.0);
            if !(2.0..=4096.0).contains(&n) || n.fract() != 0.0 {
                return Err(Error::InvalidParam(format!(
                    "ultrametric-max needs integer n in [2, 4096], got {n}"
                )));
            }
            let points: Vec<Vec<f64>> = (0..n as u64).map(|i| vec![i as f64]).collect();
            OMetricSpace::new(
                format!("ultrametric-max(n={n})"),
                PointDomain::Finite { points },
                DistFn::new("2^(msb of i xor j)", |x, y| {
                    let (i, j) = (x[0].round() as u64, y[0].round() as u64);
                    if i == j {
                        Ok(0.0)
                    } else {
                        let level = 63 - (i ^ j).leading_zeros();
                        Ok((1u64 << level) as f64)
                    }
                }),
                BinOpFn::parse("max(u,v)")?,
                0.0,
                Interval::nonneg(),
            )
        }
        "p-metric" => p_metric_with(
            ScalarFn::parse("u + u^2/4")?.with_domain(Interval::nonneg()),
        ),
        "log-metric" => OMetricSpace::new(
            "log-metric",
            PointDomain::line(-10.0, 10.0),
            DistFn::new("ln(1+|x-y|)", |x, y| Ok(abs_diff(x, y).ln_1p())),
            BinOpFn::parse("(u+1)*(v+1)")?,
            0.0,
            Interval::nonneg(),
        ),
        "exp-downward" => OMetricSpace::new(
            "exp-downward",
            PointDomain::line(-10.0, 10.0),
            DistFn::new("exp(-|x-y|)", |x, y| Ok((-abs_diff(x, y)).exp())),
            BinOpFn::parse("u/v")?,
            1.0,
            Interval::new(0.0, 1.0),
        ),
        "piecewise-mixed" => OMetricSpace::new(
            "piecewise-mixed",
            PointDomain::line(-10.0, 10.0),
            DistFn::new("exp(-|x-y|) if |x-y|<=1 else |x-y|", |x, y| {
                let t = abs_diff(x, y);
                Ok(if t <= 1.0 { (-t).exp() } else { t })
            }),
            // Case split on which side of 1 each leg falls; short legs come
            // in as exp(-length), long legs as the length itself.
            BinOpFn::native("piecewise max over leg cases", |u, v| {
                if u <= 0.0 || v <= 0.0 {
                    return Err(Error::domain(format!(
                        "piecewise triangle operation needs positive arguments, got ({u}, {v})"
                    )));
                }
                Ok(if u <= 1.0 && v <= 1.0 {
                    (u / v).max(-(u * v).ln())
                } else if u <= 1.0 {
                    (u * v.exp()).max(v - u.ln())
                } else if v <= 1.0 {
                    ((-u).exp() / v).max(u - v.ln())
                } else {
                    (v - u).exp().max(u + v)
                })
            }),
            1.0,
            // Short legs land in [1/e, 1], long legs in (1, inf); the
            // declared interval is the actual range of the distance.
            Interval::new((-1f64).exp(), f64::INFINITY),
        ),
        "nonunique-limit" => OMetricSpace::new(
            "nonunique-limit",
            PointDomain::line(-1.0, 1.0),
            DistFn::new("1 if x=y else |x*y|", |x, y| {
                Ok(if x[0] == y[0] { 1.0 } else { (x[0] * y[0]).abs() })
            }),
            BinOpFn::native("1/(u*v) if u,v nonzero else 1", |u, v| {
                if u == 0.0 || v == 0.0 {
                    Ok(1.0)
                } else {
                    let w = 1.0 / (u * v);
                    if w.is_finite() {
                        Ok(w)
                    } else {
                        Err(Error::domain(format!("1/({u}*{v}) overflows")))
                    }
                }
            }),
            1.0,
            Interval::new(0.0, 1.0),
        ),
        "circle-area" => OMetricSpace::new(
            "circle-area",
            PointDomain::Box {
                bounds: vec![(-10.0, 10.0), (-10.0, 10.0)],
            },
            DistFn::new("pi/4 * |x-y|^2 (planar)", |x, y| {
                let dx = x[0] - y[0];
                let dy = x[1] - y[1];
                Ok(std::f64::consts::FRAC_PI_4 * (dx * dx + dy * dy))
            }),
            BinOpFn::parse("(sqrt(u)+sqrt(v))^2")?,
            0.0,
            Interval::nonneg(),
        ),
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

/// The exponential-gap space `dist = exp(|x-y|) - 1` with a caller-supplied
/// growth cap `omega`: the triangle operation is `omega(u + v)`.
///
/// `omega` must be strictly increasing with `omega(t) >= t` on the sampled
/// window (checked; default cap `t + t^2/4` satisfies both).
pub fn p_metric_with(omega: ScalarFn) -> Result<OMetricSpace> {
    let iv = Interval::new(0.0, 40.0);
    let rep = scalarfn::check_monotone(&omega, &iv, Monotonicity::NonDecreasing, 500, 7);
    if !rep.passed {
        let detail = rep
            .violations
            .first()
            .map(|v| format!("omega({}) = {} > omega({}) = {}", v.u, v.fu, v.v, v.fv))
            .or_else(|| rep.eval_errors.first().map(|(t, e)| format!("at {t}: {e}")))
            .unwrap_or_default();
        return Err(Error::hypothesis("omega increasing", detail));
    }
    let (w_lo, w_hi) = (omega.eval(iv.lo)?, omega.eval(iv.hi)?);
    if w_hi <= w_lo {
        return Err(Error::hypothesis(
            "omega increasing",
            format!("omega({}) = {w_lo}, omega({}) = {w_hi}", iv.lo, iv.hi),
        ));
    }
    let mut r = rng::seeded(7);
    for t in rng::cover(&mut r, &iv, 500) {
        let w = omega.eval(t)?;
        if w < t - TOL_EQ * t.abs().max(1.0) {
            return Err(Error::hypothesis(
                "omega(t) >= t",
                format!("omega({t}) = {w}"),
            ));
        }
    }
    let omega_label = format!("omega(u+v), omega = {}", omega.source());
    let om = omega.clone();
    OMetricSpace::new(
        "p-metric",
        PointDomain::line(-10.0, 10.0),
        DistFn::new("exp(|x-y|)-1", |x, y| Ok(abs_diff(x, y).exp_m1())),
        BinOpFn::native(omega_label, move |u, v| om.eval_unchecked(u + v)),
        0.0,
        Interval::nonneg(),
    )
}

/// Parse a builtin reference of the form `name?key=value&key=value`
/// (a leading `builtin:` prefix is allowed).
pub fn builtin_ref(text: &str) -> Result<OMetricSpace> {
    let text = text.strip_prefix("builtin:").unwrap_or(text);
    let (name, query) = match text.split_once('?') {
        Some((n, q)) => (n, Some(q)),
        None => (text, None),
    };
    let mut params = BTreeMap::new();
    if let Some(q) = query {
        for pair in q.split('&').filter(|s| !s.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| {
                Error::Descriptor(format!("builtin parameter `{pair}` is not key=value"))
            })?;
            let v: f64 = v.parse().map_err(|_| {
                Error::Descriptor(format!("builtin parameter `{k}` has non-numeric value `{v}`"))
            })?;
            params.insert(k.to_string(), v);
        }
    }
    builtin(name, &params)
}

/// Build a space on the line from a triangle operation alone: distinct
/// points get `dist(x, y) = o(f(x), f(y))` with `f(t) = a + |t - a|`.
///
/// Sampled preconditions on `[a, a + 10]`: `o(a, a) = a`, `o` symmetric
/// and non-decreasing in each variable, and `u <= o(u, a)`.
pub fn genl_space(o: BinOpFn, a: f64, samples: usize, seed: u64) -> Result<OMetricSpace> {
    if !a.is_finite() {
        return Err(Error::InvalidParam(format!("base value must be finite, got {a}")));
    }
    let iv = Interval::new(a, a + rng::UNBOUNDED_SPAN);

    let oaa = o.eval(a, a)?;
    if !approx_eq(oaa, a, TOL_EQ) {
        return Err(Error::hypothesis(
            "o(a, a) = a",
            format!("o({a}, {a}) = {oaa}"),
        ));
    }
    if let Some(w) = scalarfn::check_commutative(&o, &iv, samples, seed)? {
        return Err(Error::hypothesis(
            "o symmetric",
            format!("o({}, {}) = {} but o({}, {}) = {}", w.u, w.v, w.ouv, w.v, w.u, w.ovu),
        ));
    }
    if let Some(w) = scalarfn::check_monotone_each(&o, &iv, false, samples, seed)? {
        return Err(Error::hypothesis(
            "o non-decreasing in each variable",
            format!(
                "var {} at fixed {}: o drops from {} to {} between {} and {}",
                w.var, w.fixed, w.f_lo, w.f_hi, w.lo_arg, w.hi_arg
            ),
        ));
    }
    let mut r = rng::seeded(seed);
    for u in rng::cover(&mut r, &iv, samples.max(8)) {
        let bound = o.eval(u, a)?;
        if !crate::leq_with_tol(u, bound, TOL_EQ) {
            return Err(Error::hypothesis(
                "u <= o(u, a)",
                format!("u = {u}, o(u, a) = {bound}"),
            ));
        }
    }

    let o_for_dist = o.clone();
    let label = format!("a + |t - a| folded through o = {}", o.source());
    OMetricSpace::new(
        format!("genl({}, a={a})", o.source()),
        PointDomain::line(a - rng::UNBOUNDED_SPAN, a + rng::UNBOUNDED_SPAN),
        DistFn::new(label, move |x, y| {
            if x[0] == y[0] {
                Ok(a)
            } else {
                o_for_dist.eval(a + (x[0] - a).abs(), a + (y[0] - a).abs())
            }
        }),
        o,
        a,
        Interval::new(a, f64::INFINITY),
    )
}
