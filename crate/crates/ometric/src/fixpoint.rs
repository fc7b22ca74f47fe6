//! Generalized contraction solving: polygon-bound families built from a
//! triangle operation, Picard iteration with sampled hypothesis checks,
//! convergence certified at the base value, and a multi-seed uniqueness
//! probe.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scalarfn::{self, BinOpFn, ScalarFn};
use crate::space::{OMetricSpace, Point};
use crate::{approx_eq, leq_with_tol, rng, TOL_EQ, TOL_FIX, TOL_INEQ};

/// Default Picard iteration budget.
pub const MAX_ITER: usize = 10_000;
/// Seeds used by the uniqueness probe (the starting point plus four
/// fresh draws).
pub const UNIQUENESS_SEEDS: usize = 5;

/// `f(n) = -floor(-log2 n)`, the dyadic depth of `n`:
/// 0, 1, 2, 2, 3, 3, 3, 3, 4, ...
pub fn dyadic_depth(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        (n - 1).ilog2() + 1
    }
}

/// How a binary operation is folded into an n-ary bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FoldStrategy {
    /// `o(t1, o(t2, o(t3, ...)))` — nesting deepens to the right.
    LeftFold,
    /// Balanced binary tree, splitting at the midpoint. Tighter for
    /// super-additive operations, hence the default.
    BalancedBinary,
}

/// An arity-indexed family of polygon bounds: `delta_n` caps
/// `dist(x_0, x_n)` in terms of the consecutive distances.
#[derive(Debug, Clone)]
pub enum DeltaFamily {
    /// Repeated application of the triangle operation itself.
    Fold { o: BinOpFn, strategy: FoldStrategy },
    /// `s^{f(n)} * sum` for relaxed-triangle spaces with constant `s`.
    SuzukiSum { s: f64 },
    /// Block-sum bound for relaxed-triangle spaces under a `k`-contraction:
    /// blocks of size `2^l` scaled by growing powers of `s`, where `l` is
    /// the smallest exponent with `s * k^(2^l) < 1`.
    SuzukiPrime { s: f64, k: f64, l: u32 },
}

impl DeltaFamily {
    /// Evaluate the `n`-ary bound at `args` (`n = args.len() >= 1`).
    pub fn eval(&self, args: &[f64]) -> Result<f64> {
        if args.is_empty() {
            return Err(Error::InvalidParam("delta needs at least one argument".into()));
        }
        match self {
            DeltaFamily::Fold { o, strategy } => match strategy {
                FoldStrategy::LeftFold => {
                    let mut acc = args[args.len() - 1];
                    for &t in args[..args.len() - 1].iter().rev() {
                        acc = o.eval(t, acc)?;
                    }
                    Ok(acc)
                }
                FoldStrategy::BalancedBinary => fold_balanced(o, args),
            },
            DeltaFamily::SuzukiSum { s } => {
                let sum: f64 = args.iter().sum();
                Ok(s.powi(dyadic_depth(args.len()) as i32) * sum)
            }
            DeltaFamily::SuzukiPrime { s, l, .. } => Ok(suzuki_prime_eval(*s, *l, args)),
        }
    }

    /// Human-readable description for reports.
    pub fn describe(&self) -> String {
        match self {
            DeltaFamily::Fold { o, strategy } => {
                format!("fold of {} ({:?})", o.source(), strategy)
            }
            DeltaFamily::SuzukiSum { s } => format!("s^f(n) * sum, s = {s}"),
            DeltaFamily::SuzukiPrime { s, k, l } => {
                format!("block sums, s = {s}, k = {k}, block size 2^{l}")
            }
        }
    }
}

fn fold_balanced(o: &BinOpFn, args: &[f64]) -> Result<f64> {
    match args.len() {
        1 => Ok(args[0]),
        2 => o.eval(args[0], args[1]),
        n => {
            let mid = n / 2;
            o.eval(fold_balanced(o, &args[..mid])?, fold_balanced(o, &args[mid..])?)
        }
    }
}

fn suzuki_prime_eval(s: f64, l: u32, args: &[f64]) -> f64 {
    let n = args.len();
    let block = 1usize << l;
    if n <= block {
        return s.powi(l as i32) * args.iter().sum::<f64>();
    }
    let mu = n / block;
    let mut total = 0.0;
    for i in 0..mu {
        let seg: f64 = args[i * block..(i + 1) * block].iter().sum();
        total += s.powi((i as i32) + (l as i32) + 1) * seg;
    }
    let tail: f64 = args[mu * block..].iter().sum();
    total + s.powi(mu as i32) * tail
}

/// Build a fold family from a triangle operation, first sampling that the
/// operation is non-decreasing in each variable on `iv` (folding an
/// operation that can shrink does not preserve the polygon bound).
pub fn fold_delta(
    o: &BinOpFn,
    strategy: FoldStrategy,
    iv: &Interval,
    samples: usize,
    seed: u64,
) -> Result<DeltaFamily> {
    if let Some(w) = scalarfn::check_monotone_each(o, iv, false, samples, seed)? {
        return Err(Error::hypothesis(
            "operation non-decreasing in each variable",
            format!(
                "variable {} with the other fixed at {}: o drops from {} to {} over {} -> {}",
                w.var, w.fixed, w.f_lo, w.f_hi, w.lo_arg, w.hi_arg
            ),
        ));
    }
    Ok(DeltaFamily::Fold {
        o: o.clone(),
        strategy,
    })
}

/// `s^{f(n)} * sum` family for relaxed-triangle spaces (`s >= 1`).
pub fn suzuki_delta(s: f64) -> Result<DeltaFamily> {
    if !(s >= 1.0) || !s.is_finite() {
        return Err(Error::InvalidParam(format!("suzuki delta needs s >= 1, got {s}")));
    }
    Ok(DeltaFamily::SuzukiSum { s })
}

/// Block-sum family for relaxed-triangle spaces under contraction factor
/// `k`: picks the smallest `l` with `s * k^(2^l) < 1`.
pub fn suzuki_delta_prime(s: f64, k: f64) -> Result<DeltaFamily> {
    if !(s >= 1.0) || !s.is_finite() {
        return Err(Error::InvalidParam(format!("block delta needs s >= 1, got {s}")));
    }
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::InvalidParam(format!("block delta needs 0 < k < 1, got {k}")));
    }
    let mut l = 0u32;
    while s * k.powi((1i32) << l.min(30)) >= 1.0 {
        l += 1;
        if l > 60 {
            return Err(Error::InvalidParam(format!(
                "no block exponent found for s = {s}, k = {k}"
            )));
        }
    }
    Ok(DeltaFamily::SuzukiPrime { s, k, l })
}

type MapClosure = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// A self-map of the point domain, with a printable label.
#[derive(Clone)]
pub struct PointMap {
    label: String,
    f: MapClosure,
}

impl PointMap {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        PointMap {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    /// Parse a one-dimensional map from an expression in `x`.
    pub fn from_expr(text: &str) -> Result<Self> {
        let f = ScalarFn::parse_as(text, "x")?;
        Ok(PointMap::new(text, move |x: &[f64]| Ok(vec![f.eval(x[0])?])))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        (self.f)(x)
    }
}

impl std::fmt::Debug for PointMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PointMap({})", self.label)
    }
}

/// A contraction problem: iterate `map` on `space` from `x0`, with the
/// comparison function `psi` and polygon family `delta` standing in for
/// the usual Lipschitz constant and summed distances.
#[derive(Debug)]
pub struct FixpointProblem {
    pub space: OMetricSpace,
    pub map: PointMap,
    pub psi: ScalarFn,
    pub delta: DeltaFamily,
    pub x0: Point,
    pub tol_fix: f64,
    pub max_iter: usize,
    /// Iterate even when an asserted hypothesis fails (the failure stays
    /// in the report).
    pub force: bool,
    /// Draws per sampled hypothesis check.
    pub samples: usize,
    pub seed: u64,
}

impl FixpointProblem {
    pub fn new(space: OMetricSpace, map: PointMap, psi: ScalarFn, delta: DeltaFamily, x0: Point) -> Self {
        FixpointProblem {
            space,
            map,
            psi,
            delta,
            x0,
            tol_fix: TOL_FIX,
            max_iter: MAX_ITER,
            force: false,
            samples: 1000,
            seed: 42,
        }
    }
}

/// One entry of the hypothesis log. `asserted` entries refuse iteration
/// on failure (unless forced); informational entries are recorded only.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub asserted: bool,
    pub detail: String,
}

/// Outcome of restarting the iteration from several seeds.
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessProbe {
    pub starts: Vec<Point>,
    pub terminals: Vec<Option<Point>>,
    pub all_converged: bool,
    /// Largest `|dist(terminal_i, terminal_0) - a|`.
    pub max_deviation: f64,
    /// All terminal points coincide within `10 * tol_fix` at distance level.
    pub agreed: bool,
}

/// Full record of one solve.
#[derive(Debug, Clone, Serialize)]
pub struct FixpointReport {
    pub space: String,
    pub map: String,
    pub delta: String,
    pub hypotheses: Vec<HypothesisCheck>,
    pub hypotheses_ok: bool,
    pub forced: bool,
    pub iterates: Vec<Point>,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub fixed_point: Option<Point>,
    /// `|dist(x*, T x*) - a|` at the terminal point.
    pub fixed_point_residual: Option<f64>,
    pub uniqueness: Option<UniquenessProbe>,
}

fn residual(space: &OMetricSpace, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok((space.dist(x, y)? - space.a).abs())
}

/// Bare Picard loop: iterate until the step residual drops to `tol` or
/// the budget runs out. Returns the trace, residuals, and whether it
/// converged.
fn picard(
    space: &OMetricSpace,
    map: &PointMap,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<Point>, Vec<f64>, bool)> {
    let mut iterates = vec![x0.to_vec()];
    let mut residuals = Vec::new();
    let mut x = x0.to_vec();
    for _ in 0..max_iter {
        let next = map.eval(&x)?;
        let res = residual(space, &x, &next)?;
        iterates.push(next.clone());
        residuals.push(res);
        x = next;
        if res <= tol {
            return Ok((iterates, residuals, true));
        }
    }
    Ok((iterates, residuals, false))
}

/// Run the hypothesis log, Picard iteration, convergence certificate, and
/// uniqueness probe for `problem`.
///
/// Hypothesis failures refuse iteration unless `force` is set;
/// non-convergence is reported in the result rather than as an error so
/// the trace survives.
pub fn solve(problem: &FixpointProblem) -> Result<FixpointReport> {
    let sp = &problem.space;
    let a = sp.a;
    let iv = sp.interval;
    let psi = &problem.psi;
    let mut log: Vec<HypothesisCheck> = Vec::new();

    // psi fixes the base value.
    match psi.eval_unchecked(a) {
        Ok(pa) => log.push(HypothesisCheck {
            name: "psi fixes the base value".into(),
            passed: approx_eq(pa, a, TOL_EQ),
            asserted: true,
            detail: format!("psi({a}) = {pa}"),
        }),
        Err(e) => log.push(HypothesisCheck {
            name: "psi fixes the base value".into(),
            passed: false,
            asserted: true,
            detail: format!("psi({a}) failed: {e}"),
        }),
    }

    // psi non-decreasing on the distance interval.
    let rep = scalarfn::check_monotone(
        psi,
        &iv,
        scalarfn::Monotonicity::NonDecreasing,
        problem.samples,
        problem.seed,
    );
    log.push(HypothesisCheck {
        name: "psi non-decreasing".into(),
        passed: rep.passed,
        asserted: true,
        detail: rep
            .violations
            .first()
            .map(|v| format!("psi({}) = {} > psi({}) = {}", v.u, v.fu, v.v, v.fv))
            .or_else(|| rep.eval_errors.first().map(|(t, e)| format!("at {t}: {e}")))
            .unwrap_or_else(|| format!("{} sampled points", rep.samples)),
    });

    // Continuity at the base value: a shrinking-offset proxy, recorded
    // but never asserted (a sampled check cannot certify continuity).
    {
        let span = iv.sample_hi(rng::UNBOUNDED_SPAN) - iv.sample_lo(rng::UNBOUNDED_SPAN);
        let mut drifts = Vec::new();
        for j in 1..=10 {
            let t = a + 10f64.powi(-j) * span.max(1.0);
            if !iv.contains(t) {
                continue;
            }
            if let Ok(pt) = psi.eval_unchecked(t) {
                drifts.push((pt - a).abs());
            }
        }
        let shrinking = drifts.windows(2).all(|w| w[1] <= w[0] + TOL_EQ)
            && drifts.last().is_some_and(|d| *d < 1e-3);
        log.push(HypothesisCheck {
            name: "psi continuous at the base value (proxy, not asserted)".into(),
            passed: shrinking,
            asserted: false,
            detail: format!("|psi(a + eps) - a| along shrinking eps: {drifts:?}"),
        });
    }

    // Contraction: dist(Tx, Ty) <= psi(dist(x, y)) on sampled pairs.
    {
        let mut r = rng::seeded(problem.seed.wrapping_add(1));
        let mut failure: Option<String> = None;
        for _ in 0..problem.samples {
            let x = sp.sample_point(&mut r);
            let y = sp.sample_point(&mut r);
            let lhs = match sp.dist(&problem.map.eval(&x)?, &problem.map.eval(&y)?) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(format!("dist at mapped pair {x:?}, {y:?} failed: {e}"));
                    break;
                }
            };
            let duv = sp.dist(&x, &y)?;
            let rhs = match psi.eval_unchecked(duv) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(format!("psi({duv}) failed: {e}"));
                    break;
                }
            };
            if !leq_with_tol(lhs, rhs, TOL_INEQ) {
                failure = Some(format!(
                    "x = {x:?}, y = {y:?}: dist(Tx, Ty) = {lhs} > psi(dist(x, y)) = {rhs}"
                ));
                break;
            }
        }
        log.push(HypothesisCheck {
            name: "contraction dist(Tx, Ty) <= psi(dist(x, y))".into(),
            passed: failure.is_none(),
            asserted: true,
            detail: failure.unwrap_or_else(|| format!("{} sampled pairs", problem.samples)),
        });
    }

    // (iv) iterated psi drives every level to the base value.
    {
        let mut r = rng::seeded(problem.seed.wrapping_add(2));
        let starts = rng::cover(&mut r, &iv, 8);
        let mut failure: Option<String> = None;
        'outer: for t0 in starts {
            let mut t = t0;
            let mut ok = false;
            for _ in 0..MAX_ITER {
                if (t - a).abs() <= 10.0 * TOL_EQ {
                    ok = true;
                    break;
                }
                match psi.eval_unchecked(t) {
                    Ok(next) => t = next,
                    Err(e) => {
                        failure = Some(format!("iterating from {t0}: psi({t}) failed: {e}"));
                        break 'outer;
                    }
                }
            }
            if !ok {
                failure = Some(format!(
                    "iterating from {t0}: still at {t} after {MAX_ITER} steps"
                ));
                break;
            }
        }
        log.push(HypothesisCheck {
            name: "iterated psi reaches the base value".into(),
            passed: failure.is_none(),
            asserted: true,
            detail: failure.unwrap_or_else(|| "8 start levels".into()),
        });
    }

    // (v) the polygon family applied to the psi-orbit collapses to the
    // base value as the start level approaches it.
    {
        let t_max = iv.sample_hi(rng::UNBOUNDED_SPAN);
        let mut failure: Option<String> = None;
        'v_outer: for i in 2..=8usize {
            let mut last = f64::INFINITY;
            for j in 0..=12 {
                let t = a + 10f64.powi(-j) * (t_max - a);
                let mut orbit = Vec::with_capacity(i);
                let mut cur = t;
                for _ in 0..i {
                    match psi.eval_unchecked(cur) {
                        Ok(next) => {
                            orbit.push(next);
                            cur = next;
                        }
                        Err(e) => {
                            failure = Some(format!("orbit at t = {t}: {e}"));
                            break 'v_outer;
                        }
                    }
                }
                match problem.delta.eval(&orbit) {
                    Ok(d) => last = (d - a).abs(),
                    Err(e) => {
                        failure = Some(format!("delta_{i} at t = {t}: {e}"));
                        break 'v_outer;
                    }
                }
            }
            if !(last < 10.0 * TOL_EQ) {
                failure = Some(format!(
                    "delta_{i} along the psi-orbit stalls at {last} above the base value"
                ));
                break;
            }
        }
        log.push(HypothesisCheck {
            name: "polygon family collapses along the psi-orbit".into(),
            passed: failure.is_none(),
            asserted: true,
            detail: failure.unwrap_or_else(|| "arities 2..=8, 13 shrinking levels".into()),
        });
    }

    let hypotheses_ok = log.iter().filter(|h| h.asserted).all(|h| h.passed);
    if !hypotheses_ok && !problem.force {
        let first = log.iter().find(|h| h.asserted && !h.passed).unwrap();
        return Err(Error::hypothesis(first.name.clone(), first.detail.clone()));
    }

    let (iterates, residuals, converged) = picard(
        sp,
        &problem.map,
        &problem.x0,
        problem.tol_fix,
        problem.max_iter,
    )?;
    let iterations = residuals.len();

    let (fixed_point, fixed_point_residual, uniqueness) = if converged {
        let xstar = iterates.last().unwrap().clone();
        let fp_res = residual(sp, &xstar, &problem.map.eval(&xstar)?)?;

        // Uniqueness probe: restart from fresh domain draws.
        let mut r = rng::seeded(problem.seed.wrapping_add(7));
        let mut starts = vec![problem.x0.clone()];
        while starts.len() < UNIQUENESS_SEEDS {
            starts.push(sp.sample_point(&mut r));
        }
        let mut terminals: Vec<Option<Point>> = Vec::new();
        for s0 in &starts {
            let (tr, _, ok) = picard(sp, &problem.map, s0, problem.tol_fix, problem.max_iter)?;
            terminals.push(if ok { Some(tr.last().unwrap().clone()) } else { None });
        }
        let all_converged = terminals.iter().all(|t| t.is_some());
        let mut max_dev: f64 = 0.0;
        if let Some(Some(first)) = terminals.first() {
            for t in terminals.iter().flatten() {
                max_dev = max_dev.max(residual(sp, t, first)?);
            }
        }
        let agreed = all_converged && max_dev <= 10.0 * problem.tol_fix;
        (
            Some(xstar),
            Some(fp_res),
            Some(UniquenessProbe {
                starts,
                terminals,
                all_converged,
                max_deviation: max_dev,
                agreed,
            }),
        )
    } else {
        (None, None, None)
    };

    Ok(FixpointReport {
        space: sp.name.clone(),
        map: problem.map.label().to_string(),
        delta: problem.delta.describe(),
        hypotheses: log,
        hypotheses_ok,
        forced: problem.force && !hypotheses_ok,
        iterates,
        residuals,
        converged,
        iterations,
        fixed_point,
        fixed_point_residual,
        uniqueness,
    })
}

/// Classic contraction preset: `psi(t) = k t` with the plain-sum polygon
/// family. Intended for ordinary metric spaces.
pub fn banach_problem(
    space: OMetricSpace,
    map: PointMap,
    k: f64,
    x0: Point,
) -> Result<FixpointProblem> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::InvalidParam(format!("contraction factor must be in (0, 1), got {k}")));
    }
    let psi = ScalarFn::parse_as(&format!("{k}*t"), "t")?;
    let delta = DeltaFamily::Fold {
        o: BinOpFn::parse("u+v")?,
        strategy: FoldStrategy::BalancedBinary,
    };
    Ok(FixpointProblem::new(space, map, psi, delta, x0))
}

/// Relaxed-triangle contraction preset: `psi(t) = k t` with the block-sum
/// polygon family for constant `s`.
pub fn suzuki_problem(
    space: OMetricSpace,
    map: PointMap,
    k: f64,
    s: f64,
    x0: Point,
) -> Result<FixpointProblem> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::InvalidParam(format!("contraction factor must be in (0, 1), got {k}")));
    }
    let psi = ScalarFn::parse_as(&format!("{k}*t"), "t")?;
    let delta = suzuki_delta_prime(s, k)?;
    Ok(FixpointProblem::new(space, map, psi, delta, x0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::builtin_ref;

    #[test]
    fn dyadic_depth_sequence() {
        let want = [0u32, 1, 2, 2, 3, 3, 3, 3, 4];
        for (i, &w) in want.iter().enumerate() {
            assert_eq!(dyadic_depth(i + 1), w, "n = {}", i + 1);
        }
    }

    #[test]
    fn fold_expansions() {
        let plus = BinOpFn::parse("u+v").unwrap();
        let iv = Interval::new(0.0, 10.0);
        for strategy in [FoldStrategy::LeftFold, FoldStrategy::BalancedBinary] {
            let d = fold_delta(&plus, strategy, &iv, 500, 42).unwrap();
            let v = d.eval(&[1.0, 2.0, 3.0]).unwrap();
            assert!((v - 6.0).abs() < 1e-12);
            assert_eq!(d.eval(&[7.5]).unwrap(), 7.5);
            // Binary case agrees with the operation itself.
            assert!((d.eval(&[2.0, 5.0]).unwrap() - 7.0).abs() < 1e-12);
        }
        // Doubling operation distinguishes the strategies.
        let dbl = BinOpFn::parse("2*(u+v)").unwrap();
        let left = fold_delta(&dbl, FoldStrategy::LeftFold, &iv, 500, 42).unwrap();
        let v = left.eval(&[1.0, 1.0, 1.0]).unwrap();
        // 2(u + 2(v + w)) = 2u + 4v + 4w.
        assert!((v - 10.0).abs() < 1e-12);
        let bal = fold_delta(&dbl, FoldStrategy::BalancedBinary, &iv, 500, 42).unwrap();
        // n = 4: 2(2(a+b) + 2(c+d)) = 4 * 4.
        assert!((bal.eval(&[1.0; 4]).unwrap() - 16.0).abs() < 1e-12);
        // Left fold over-scales the tail: 2+4+8+8.
        assert!((left.eval(&[1.0; 4]).unwrap() - 22.0).abs() < 1e-12);
        // Product operation: delta is the plain product regardless of shape.
        let mul = BinOpFn::parse("u*v").unwrap();
        let iv_pos = Interval::new(1.0, 10.0);
        for strategy in [FoldStrategy::LeftFold, FoldStrategy::BalancedBinary] {
            let d = fold_delta(&mul, strategy, &iv_pos, 500, 42).unwrap();
            assert!((d.eval(&[2.0, 3.0, 4.0]).unwrap() - 24.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fold_refuses_shrinking_operation() {
        // 1/(uv) decreases in each variable.
        let o = BinOpFn::parse("1/(u*v)").unwrap();
        let err = fold_delta(&o, FoldStrategy::LeftFold, &Interval::new(0.1, 1.0), 500, 42)
            .unwrap_err();
        assert!(matches!(err, Error::Hypothesis { .. }));
    }

    #[test]
    fn suzuki_sum_values() {
        assert!(suzuki_delta(0.5).is_err());
        let d = suzuki_delta(2.0).unwrap();
        // f(3) = 2 so the factor is 4.
        assert!((d.eval(&[1.0, 1.0, 1.0]).unwrap() - 12.0).abs() < 1e-12);
        // f(1) = 0: identity.
        assert_eq!(d.eval(&[3.25]).unwrap(), 3.25);
    }

    #[test]
    fn suzuki_prime_block_selection_and_values() {
        // s = 2, k = 0.5: l = 0 gives 2 * 0.5 = 1 (not < 1), l = 1 gives
        // 2 * 0.25 = 0.5 < 1.
        let d = suzuki_delta_prime(2.0, 0.5).unwrap();
        match d {
            DeltaFamily::SuzukiPrime { l, .. } => assert_eq!(l, 1),
            _ => panic!("wrong family"),
        }
        // At the block boundary n = 2^l the bound is s^l * sum.
        assert!((d.eval(&[1.0, 1.0]).unwrap() - 4.0).abs() < 1e-12);
        // n = 3: s^2 (a1 + a2) + s^1 * a3.
        assert!((d.eval(&[1.0, 1.0, 1.0]).unwrap() - 10.0).abs() < 1e-12);
        // n = 4: s^2 (a1 + a2) + s^3 (a3 + a4).
        assert!((d.eval(&[1.0; 4]).unwrap() - 24.0).abs() < 1e-12);

        // s = 1 collapses to plain sums.
        let d = suzuki_delta_prime(1.0, 0.9).unwrap();
        assert!((d.eval(&[1.0, 2.0]).unwrap() - 3.0).abs() < 1e-12);
        assert!((d.eval(&[1.0; 5]).unwrap() - 5.0).abs() < 1e-12);

        assert!(suzuki_delta_prime(2.0, 1.5).is_err());
        assert!(suzuki_delta_prime(0.5, 0.5).is_err());
    }

    #[test]
    fn polygon_bound_for_folds_on_builtins() {
        // dist(x0, xn) <= delta_n(consecutive distances) on sampled tuples.
        for name in ["euclidean-metric", "multiplicative-exp", "log-metric"] {
            let sp = builtin_ref(name).unwrap();
            let delta = DeltaFamily::Fold {
                o: sp.o_fn().clone(),
                strategy: FoldStrategy::BalancedBinary,
            };
            let mut r = rng::seeded(42);
            for n in 2..=6 {
                for _ in 0..200 {
                    let pts: Vec<Point> = (0..=n).map(|_| sp.sample_point(&mut r)).collect();
                    let mut legs = Vec::with_capacity(n);
                    for w in pts.windows(2) {
                        legs.push(sp.dist(&w[0], &w[1]).unwrap());
                    }
                    let bound = delta.eval(&legs).unwrap();
                    let direct = sp.dist(&pts[0], &pts[n]).unwrap();
                    assert!(
                        leq_with_tol(direct, bound, TOL_INEQ),
                        "{name}, n = {n}: {direct} > {bound}"
                    );
                }
            }
        }
    }

    #[test]
    fn suzuki_bounds_hold_on_power_spaces() {
        for p in [1.5, 2.0, 3.0] {
            let sp = builtin_ref(&format!("b-metric-power?p={p}")).unwrap();
            let s = 2f64.powf(p - 1.0).max(1.0);
            let sum_family = suzuki_delta(s).unwrap();
            let block_family = suzuki_delta_prime(s, 0.25).unwrap();
            let mut r = rng::seeded(7);
            for n in 2..=6 {
                for _ in 0..150 {
                    let pts: Vec<Point> = (0..=n).map(|_| sp.sample_point(&mut r)).collect();
                    let mut legs = Vec::with_capacity(n);
                    for w in pts.windows(2) {
                        legs.push(sp.dist(&w[0], &w[1]).unwrap());
                    }
                    let direct = sp.dist(&pts[0], &pts[n]).unwrap();
                    let b1 = sum_family.eval(&legs).unwrap();
                    assert!(
                        leq_with_tol(direct, b1, TOL_INEQ),
                        "p = {p}, n = {n}: {direct} > sum bound {b1}"
                    );
                    let b2 = block_family.eval(&legs).unwrap();
                    assert!(
                        leq_with_tol(direct, b2, TOL_INEQ),
                        "p = {p}, n = {n}: {direct} > block bound {b2}"
                    );
                }
            }
        }
    }

    fn example_halving() -> FixpointProblem {
        let sp = builtin_ref("euclidean-metric").unwrap();
        let delta = DeltaFamily::Fold {
            o: sp.o_fn().clone(),
            strategy: FoldStrategy::BalancedBinary,
        };
        FixpointProblem::new(
            sp,
            PointMap::from_expr("x/2+1").unwrap(),
            ScalarFn::parse_as("t/2", "t").unwrap(),
            delta,
            vec![0.0],
        )
    }

    #[test]
    fn halving_map_converges_to_two() {
        let report = solve(&example_halving()).unwrap();
        assert!(report.hypotheses_ok);
        assert!(report.converged);
        let x = &report.fixed_point.as_ref().unwrap()[0];
        assert!((x - 2.0).abs() <= 1e-8, "fixed point {x}");
        assert!(report.fixed_point_residual.unwrap() <= 1e-8);
        let probe = report.uniqueness.as_ref().unwrap();
        assert!(probe.agreed, "max deviation {}", probe.max_deviation);
        // Residuals shrink along psi: r_{n+1} <= psi(r_n + a) - a.
        for w in report.residuals.windows(2) {
            assert!(leq_with_tol(w[1], 0.5 * w[0], TOL_INEQ));
        }
    }

    #[test]
    fn thirding_map_on_multiplicative_space() {
        let sp = builtin_ref("multiplicative-exp").unwrap();
        let delta = DeltaFamily::Fold {
            o: sp.o_fn().clone(),
            strategy: FoldStrategy::BalancedBinary,
        };
        let problem = FixpointProblem::new(
            sp,
            PointMap::from_expr("x/3").unwrap(),
            ScalarFn::parse_as("t^(1/3)", "t").unwrap(),
            delta,
            vec![5.0],
        );
        let report = solve(&problem).unwrap();
        assert!(report.hypotheses_ok, "{:#?}", report.hypotheses);
        assert!(report.converged);
        // Fixed point 0, certified in the space's own distance.
        let x = report.fixed_point.as_ref().unwrap();
        let d = report_space_residual(&problem, x, &[0.0]);
        assert!(d <= 1e-8, "distance residual {d}");
        assert!(report.uniqueness.as_ref().unwrap().agreed);
    }

    fn report_space_residual(problem: &FixpointProblem, x: &[f64], y: &[f64]) -> f64 {
        (problem.space.dist(x, y).unwrap() - problem.space.a).abs()
    }

    #[test]
    fn quarter_contraction_on_squared_distances() {
        let sp = builtin_ref("b-metric-power?p=2").unwrap();
        let problem = FixpointProblem::new(
            sp,
            PointMap::from_expr("x/2+1").unwrap(),
            ScalarFn::parse_as("t/4", "t").unwrap(),
            suzuki_delta_prime(2.0, 0.25).unwrap(),
            vec![0.0],
        );
        let report = solve(&problem).unwrap();
        assert!(report.hypotheses_ok, "{:#?}", report.hypotheses);
        assert!(report.converged);
        let d = report_space_residual(&problem, report.fixed_point.as_ref().unwrap(), &[2.0]);
        assert!(d <= 1e-8, "distance residual {d}");
        assert!(report.uniqueness.as_ref().unwrap().agreed);
    }

    #[test]
    fn hypothesis_failure_refuses_unless_forced() {
        // psi(t) = t/2 does not dominate an expanding map T(x) = 2x.
        let sp = builtin_ref("euclidean-metric").unwrap();
        let delta = DeltaFamily::Fold {
            o: sp.o_fn().clone(),
            strategy: FoldStrategy::BalancedBinary,
        };
        let mut problem = FixpointProblem::new(
            sp,
            PointMap::from_expr("2*x").unwrap(),
            ScalarFn::parse_as("t/2", "t").unwrap(),
            delta,
            vec![1.0],
        );
        let err = solve(&problem).unwrap_err();
        assert!(matches!(err, Error::Hypothesis { .. }));
        problem.force = true;
        problem.max_iter = 50;
        let report = solve(&problem).unwrap();
        assert!(!report.hypotheses_ok);
        assert!(report.forced);
        assert!(!report.converged);
        assert!(report.fixed_point.is_none());
    }

    #[test]
    fn banach_preset_iteration_bound() {
        let sp = builtin_ref("euclidean-metric").unwrap();
        let k = 0.5;
        let problem = banach_problem(
            sp,
            PointMap::from_expr("x/2+1").unwrap(),
            k,
            vec![0.0],
        )
        .unwrap();
        let report = solve(&problem).unwrap();
        assert!(report.converged);
        let eps0 = report.residuals[0];
        let bound = ((eps0 / problem.tol_fix).ln() / (1.0 / k).ln()).ceil() as usize + 1;
        assert!(
            report.iterations <= bound,
            "{} iterations exceeds {bound}",
            report.iterations
        );
    }

    #[test]
    fn suzuki_preset_solves_squared_halving() {
        let sp = builtin_ref("b-metric-power?p=2").unwrap();
        let problem = suzuki_problem(
            sp,
            PointMap::from_expr("x/2+1").unwrap(),
            0.25,
            2.0,
            vec![0.0],
        )
        .unwrap();
        let report = solve(&problem).unwrap();
        assert!(report.converged);
        let d = report_space_residual(&problem, report.fixed_point.as_ref().unwrap(), &[2.0]);
        assert!(d <= 1e-8);
    }

    #[test]
    fn monotone_residual_chain_on_examples() {
        // residual_{n+1} <= psi(residual_n + a) - a across all examples.
        let halving = example_halving();
        for (problem, name) in [(&halving, "halving")] {
            let report = solve(problem).unwrap();
            let a = problem.space.a;
            for w in report.residuals.windows(2) {
                let cap = problem.psi.eval_unchecked(w[0] + a).unwrap() - a;
                assert!(
                    leq_with_tol(w[1], cap, TOL_INEQ),
                    "{name}: residual {} exceeds psi cap {cap}",
                    w[1]
                );
            }
        }
    }
}
