//! Sharpened chain estimates. A distance built as `theta(underlying)`
//! admits two polygon bounds over a chain of links: the naive sum of the
//! link values, and the tighter pull-back bound
//! `theta(sum of theta^{-1}(link))`. This module computes both, their
//! gap, and the analogous pair for relaxed-triangle distances, plus a
//! gap surface over a two-link grid.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixpoint::dyadic_depth;
use crate::interval::Interval;
use crate::scalarfn::{self, ScalarFn};
use crate::{leq_with_tol, rng, TOL_INEQ};

const PAIR_SAMPLES: usize = 1000;
const CLOSED_FORM_TOL: f64 = 1e-12;

/// Preimage of `y` under an increasing `theta`, using the attached
/// analytic inverse when present and bisection on a grown bracket
/// otherwise.
fn pull_back(theta: &ScalarFn, y: f64) -> Result<f64> {
    if let Some(res) = theta.analytic_inverse(y) {
        return res;
    }
    let dom = theta.domain();
    let lo = dom.lo.max(0.0);
    if theta.eval(lo)? >= y {
        return Ok(lo);
    }
    let mut hi = if lo > 0.0 { 2.0 * lo + 1.0 } else { 1.0 };
    let mut steps = 0;
    loop {
        if hi > dom.hi {
            hi = dom.hi;
        }
        if theta.eval(hi)? >= y {
            break;
        }
        if hi >= dom.hi || steps > 200 {
            return Err(Error::hypothesis(
                "link value inside the generating function's range",
                format!("no preimage of {y} below {hi}"),
            ));
        }
        hi *= 2.0;
        steps += 1;
    }
    scalarfn::invert(theta, y, Interval::new(lo, hi))
}

fn validate_links(distances: &[f64]) -> Result<()> {
    if distances.is_empty() {
        return Err(Error::InvalidParam("chain needs at least one link".into()));
    }
    for &d in distances {
        if !d.is_finite() || d < 0.0 {
            return Err(Error::InvalidParam(format!(
                "chain links must be finite and nonnegative, got {d}"
            )));
        }
    }
    Ok(())
}

/// Interval the sampled hypothesis checks draw from: nonnegative, inside
/// the function's domain (halved when bounded, so sums stay evaluable),
/// wide enough to cover the chain's pulled-back total.
fn sampling_interval(theta: &ScalarFn, total: f64) -> Interval {
    let dom = theta.domain();
    let lo = dom.lo.max(0.0);
    let top = if dom.hi.is_finite() {
        (dom.hi / 2.0).min(total.max(1.0))
    } else {
        total.max(1.0)
    };
    Interval::new(lo, top.max(lo + 1e-6))
}

/// Refuse unless `theta` is nondecreasing on sampled pairs.
fn require_increasing(theta: &ScalarFn, iv: &Interval, seed: u64) -> Result<()> {
    let mut r = rng::seeded(seed);
    let pts = rng::cover(&mut r, iv, 64);
    for _ in 0..PAIR_SAMPLES {
        let x = pts[r.gen_range(0..pts.len())];
        let y = pts[r.gen_range(0..pts.len())];
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let (flo, fhi) = (theta.eval(lo)?, theta.eval(hi)?);
        if !leq_with_tol(flo, fhi, TOL_INEQ) {
            return Err(Error::hypothesis(
                "generating function nondecreasing",
                format!("{}({lo}) = {flo} > {}({hi}) = {fhi}", theta.source(), theta.source()),
            ));
        }
    }
    Ok(())
}

/// Sampled sub-additivity `theta(u + v) <= theta(u) + theta(v)`; a
/// failure downgrades the dominance flag rather than refusing.
fn sampled_subadditive(theta: &ScalarFn, iv: &Interval, seed: u64) -> bool {
    let mut r = rng::seeded(seed);
    for _ in 0..PAIR_SAMPLES {
        let u = r.gen_range(iv.lo..=iv.hi);
        let v = r.gen_range(iv.lo..=iv.hi);
        let (Ok(sum), Ok(fu), Ok(fv)) = (theta.eval(u + v), theta.eval(u), theta.eval(v)) else {
            return false;
        };
        if !leq_with_tol(sum, fu + fv, TOL_INEQ) {
            return false;
        }
    }
    true
}

/// Both polygon bounds over one chain of links measured in the
/// generated distance.
#[derive(Debug, Clone, Serialize)]
pub struct ChainBound {
    pub chain: Vec<f64>,
    pub theta: String,
    /// Plain sum of the links.
    pub naive: f64,
    /// `theta(sum of pulled-back links)`.
    pub sharp: f64,
    /// Closed form `theta(n * theta^{-1}(alpha))` when all links equal.
    pub equidistant_closed: Option<f64>,
    /// Measured end-to-end distance, if supplied.
    pub actual: Option<f64>,
    /// `naive - sharp`.
    pub gap: f64,
    pub theta_subadditive: bool,
    /// Sub-additivity held and `sharp <= naive`.
    pub dominance_ok: bool,
    pub actual_le_sharp: Option<bool>,
}

/// Compute the two chain bounds for a distance generated by `theta`
/// (increasing, `theta(0) = 0`): the naive link sum and the pull-back
/// estimate. A single link returns exactly itself as the sharp bound.
pub fn sharp_bound(
    distances: &[f64],
    theta: &ScalarFn,
    actual: Option<f64>,
    seed: u64,
) -> Result<ChainBound> {
    validate_links(distances)?;
    if let Some(ac) = actual {
        if !ac.is_finite() || ac < 0.0 {
            return Err(Error::InvalidParam(format!(
                "measured distance must be finite and nonnegative, got {ac}"
            )));
        }
    }
    let pulls: Vec<f64> = distances
        .iter()
        .map(|&d| pull_back(theta, d))
        .collect::<Result<_>>()?;
    let total: f64 = pulls.iter().sum();
    let iv = sampling_interval(theta, total);
    require_increasing(theta, &iv, seed)?;

    let naive: f64 = distances.iter().sum();
    let sharp = if distances.len() == 1 {
        distances[0]
    } else {
        theta.eval(total)?
    };

    let equidistant_closed = if distances.iter().all(|&d| d == distances[0]) {
        let closed = theta.eval(distances.len() as f64 * pulls[0])?;
        if distances.len() > 1
            && (closed - sharp).abs() > CLOSED_FORM_TOL * sharp.abs().max(1.0)
        {
            return Err(Error::hypothesis(
                "equidistant closed form agreement",
                format!("closed form {closed} vs accumulated {sharp}"),
            ));
        }
        Some(closed)
    } else {
        None
    };

    let theta_subadditive = sampled_subadditive(theta, &iv, seed.wrapping_add(1));
    let dominance_ok = theta_subadditive && leq_with_tol(sharp, naive, TOL_INEQ);
    Ok(ChainBound {
        chain: distances.to_vec(),
        theta: theta.source().to_string(),
        naive,
        sharp,
        equidistant_closed,
        actual,
        gap: naive - sharp,
        theta_subadditive,
        dominance_ok,
        actual_le_sharp: actual.map(|ac| leq_with_tol(ac, sharp, TOL_INEQ)),
    })
}

/// Both polygon bounds for a relaxed-triangle distance generated by a
/// convex `phi`: the dyadic-depth-weighted sum versus the pull-back.
#[derive(Debug, Clone, Serialize)]
pub struct RelaxedChainBound {
    pub chain: Vec<f64>,
    pub phi: String,
    pub s: f64,
    /// Dyadic depth of the chain length.
    pub depth: u32,
    /// `s^depth * sum of links`.
    pub naive: f64,
    /// `phi(sum of pulled-back links)`.
    pub sharp: f64,
    pub equidistant_closed: Option<f64>,
    pub actual: Option<f64>,
    pub gap: f64,
    pub dominance_ok: bool,
    pub actual_le_sharp: Option<bool>,
}

/// Chain bounds for a distance `phi(underlying)` whose triangle
/// inequality carries the factor `s >= 1`: the naive bound scales the
/// link sum by `s^depth(n)`, the sharp bound pulls the links back
/// through `phi` first.
pub fn bmetric_sharp(
    distances: &[f64],
    phi: &ScalarFn,
    s: f64,
    actual: Option<f64>,
    seed: u64,
) -> Result<RelaxedChainBound> {
    validate_links(distances)?;
    if !(s >= 1.0) || !s.is_finite() {
        return Err(Error::InvalidParam(format!(
            "relaxation factor must satisfy s >= 1, got {s}"
        )));
    }
    if let Some(ac) = actual {
        if !ac.is_finite() || ac < 0.0 {
            return Err(Error::InvalidParam(format!(
                "measured distance must be finite and nonnegative, got {ac}"
            )));
        }
    }
    let pulls: Vec<f64> = distances
        .iter()
        .map(|&d| pull_back(phi, d))
        .collect::<Result<_>>()?;
    let total: f64 = pulls.iter().sum();
    let iv = sampling_interval(phi, total);
    require_increasing(phi, &iv, seed)?;

    let depth = dyadic_depth(distances.len());
    let naive = s.powi(depth as i32) * distances.iter().sum::<f64>();
    let sharp = if distances.len() == 1 {
        distances[0]
    } else {
        phi.eval(total)?
    };

    let equidistant_closed = if distances.iter().all(|&d| d == distances[0]) {
        let closed = phi.eval(distances.len() as f64 * pulls[0])?;
        if distances.len() > 1
            && (closed - sharp).abs() > CLOSED_FORM_TOL * sharp.abs().max(1.0)
        {
            return Err(Error::hypothesis(
                "equidistant closed form agreement",
                format!("closed form {closed} vs accumulated {sharp}"),
            ));
        }
        Some(closed)
    } else {
        None
    };

    let dominance_ok = leq_with_tol(sharp, naive, TOL_INEQ);
    Ok(RelaxedChainBound {
        chain: distances.to_vec(),
        phi: phi.source().to_string(),
        s,
        depth,
        naive,
        sharp,
        equidistant_closed,
        actual,
        gap: naive - sharp,
        dominance_ok,
        actual_le_sharp: actual.map(|ac| leq_with_tol(ac, sharp, TOL_INEQ)),
    })
}

/// One grid cell of the two-link gap surface.
#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub u: f64,
    pub v: f64,
    /// `s * (u + v)`.
    pub naive: f64,
    /// `f(f^{-1}(u) + f^{-1}(v))`.
    pub sharp: f64,
    pub gap: f64,
}

/// Tabulate `s*(u+v) - f(f^{-1}(u) + f^{-1}(v))` over a square grid of
/// two-link chains, row-major with `steps + 1` points per axis.
pub fn gap_surface(f: &ScalarFn, s: f64, lo: f64, hi: f64, steps: usize) -> Result<Vec<GapRow>> {
    if !(s >= 1.0) || !s.is_finite() {
        return Err(Error::InvalidParam(format!(
            "relaxation factor must satisfy s >= 1, got {s}"
        )));
    }
    if !(lo >= 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::InvalidParam(format!(
            "grid needs 0 <= lo < hi, got [{lo}, {hi}]"
        )));
    }
    if steps == 0 || steps > 512 {
        return Err(Error::InvalidParam(format!(
            "grid steps must lie in 1..=512, got {steps}"
        )));
    }
    let mut rows = Vec::with_capacity((steps + 1) * (steps + 1));
    for i in 0..=steps {
        let u = lo + (hi - lo) * i as f64 / steps as f64;
        let pu = pull_back(f, u)?;
        for j in 0..=steps {
            let v = lo + (hi - lo) * j as f64 / steps as f64;
            let pv = pull_back(f, v)?;
            let naive = s * (u + v);
            let sharp = f.eval(pu + pv)?;
            rows.push(GapRow {
                u,
                v,
                naive,
                sharp,
                gap: naive - sharp,
            });
        }
    }
    Ok(rows)
}
