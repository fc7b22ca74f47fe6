//! Scalar functions `f: R -> R` and binary operations `o: R x R -> R`
//! backed either by parsed expressions or native closures, plus a catalog
//! of common transforms with analytic inverses, numeric inversion by
//! bisection, and sampled monotonicity/commutativity checks.

mod expr;

pub use expr::Expr;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::{approx_eq, rng, TOL_EQ, TOL_INV};

type Native1 = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;
type Native2 = Arc<dyn Fn(f64, f64) -> Result<f64> + Send + Sync>;

#[derive(Clone)]
enum Body1 {
    Ast(Arc<Expr>),
    Native(Native1),
}

/// A scalar function with a printable source, a declared domain, and an
/// optional analytic inverse (catalog entries carry one).
#[derive(Clone)]
pub struct ScalarFn {
    source: String,
    body: Body1,
    domain: Interval,
    inverse: Option<Native1>,
}

impl std::fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarFn")
            .field("source", &self.source)
            .field("domain", &self.domain)
            .field("analytic_inverse", &self.inverse.is_some())
            .finish()
    }
}

impl ScalarFn {
    /// Parse an expression in the single variable `u`.
    pub fn parse(text: &str) -> Result<Self> {
        let ast = expr::parse(text, &["u"])?;
        Ok(ScalarFn {
            source: text.to_string(),
            body: Body1::Ast(Arc::new(ast)),
            domain: Interval::all(),
            inverse: None,
        })
    }

    /// Parse an expression using a custom variable name (`x` for point maps,
    /// `n` for sequence generators).
    pub fn parse_as(text: &str, var: &str) -> Result<Self> {
        let ast = expr::parse(text, &[var])?;
        Ok(ScalarFn {
            source: text.to_string(),
            body: Body1::Ast(Arc::new(ast)),
            domain: Interval::all(),
            inverse: None,
        })
    }

    /// Wrap a native closure.
    pub fn native(
        source: impl Into<String>,
        f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        ScalarFn {
            source: source.into(),
            body: Body1::Native(Arc::new(f)),
            domain: Interval::all(),
            inverse: None,
        }
    }

    pub fn with_domain(mut self, domain: Interval) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_inverse(
        mut self,
        inv: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        self.inverse = Some(Arc::new(inv));
        self
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn has_analytic_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    /// Evaluate, rejecting arguments outside the declared domain.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !self.domain.contains(t) {
            return Err(Error::domain(format!(
                "{t} outside domain {} of `{}`",
                self.domain, self.source
            )));
        }
        self.eval_unchecked(t)
    }

    /// Evaluate wherever the underlying formula is defined, ignoring the
    /// declared domain. Compositions that feed back reflected or negated
    /// values (duals, regenerated triangle operations) use this.
    pub fn eval_unchecked(&self, t: f64) -> Result<f64> {
        match &self.body {
            Body1::Ast(ast) => ast.eval(&[t]),
            Body1::Native(f) => f(t),
        }
    }

    /// Apply the analytic inverse if one is attached.
    pub fn analytic_inverse(&self, y: f64) -> Option<Result<f64>> {
        self.inverse.as_ref().map(|inv| inv(y))
    }
}

#[derive(Clone)]
enum Body2 {
    Ast(Arc<Expr>),
    Native(Native2),
}

/// A binary operation, as used for triangle operations `o(u, v)` and
/// product combiners.
#[derive(Clone)]
pub struct BinOpFn {
    source: String,
    body: Body2,
}

impl std::fmt::Debug for BinOpFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BinOpFn").field("source", &self.source).finish()
    }
}

impl BinOpFn {
    /// Parse an expression in `u` and `v`.
    pub fn parse(text: &str) -> Result<Self> {
        let ast = expr::parse(text, &["u", "v"])?;
        Ok(BinOpFn {
            source: text.to_string(),
            body: Body2::Ast(Arc::new(ast)),
        })
    }

    pub fn native(
        source: impl Into<String>,
        f: impl Fn(f64, f64) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        BinOpFn {
            source: source.into(),
            body: Body2::Native(Arc::new(f)),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, u: f64, v: f64) -> Result<f64> {
        match &self.body {
            Body2::Ast(ast) => ast.eval(&[u, v]),
            Body2::Native(f) => f(u, v),
        }
    }
}

/// Either side of [`parse_expr`]: arity is decided by the variables that
/// actually appear.
#[derive(Debug, Clone)]
pub enum Parsed {
    Unary(ScalarFn),
    Binary(BinOpFn),
}

/// Parse expression text in `u` (and optionally `v`); mentions of `v`
/// produce a binary operation.
pub fn parse_expr(text: &str) -> Result<Parsed> {
    let ast = expr::parse(text, &["u", "v"])?;
    if ast.arity() <= 1 {
        Ok(Parsed::Unary(ScalarFn {
            source: text.to_string(),
            body: Body1::Ast(Arc::new(ast)),
            domain: Interval::all(),
            inverse: None,
        }))
    } else {
        Ok(Parsed::Binary(BinOpFn {
            source: text.to_string(),
            body: Body2::Ast(Arc::new(ast)),
        }))
    }
}

/// Catalog entries. Parametrized names take a suffix: `power:2.5`,
/// `scale:0.25`.
pub const CATALOG_NAMES: &[&str] = &[
    "identity",
    "ln1p",
    "expm1",
    "exp",
    "log",
    "sqrt",
    "square",
    "neg-exp",
    "neg-log",
    "ratio",
    "circle-area",
    "power:<r>",
    "scale:<c>",
];

/// Look up a named function with an analytic inverse attached.
///
/// All entries are strictly monotone on their domain: increasing except
/// `neg-exp` and `neg-log`, which decrease.
pub fn catalog(name: &str) -> Result<ScalarFn> {
    if let Some(r) = name.strip_prefix("power:") {
        let r: f64 = r
            .parse()
            .map_err(|_| Error::InvalidParam(format!("bad exponent in `{name}`")))?;
        if r <= 0.0 || !r.is_finite() {
            return Err(Error::InvalidParam(format!(
                "power exponent must be positive, got {r}"
            )));
        }
        return Ok(ScalarFn::parse(&format!("u^{r}"))?
            .with_domain(Interval::nonneg())
            .with_inverse(move |y| {
                if y < 0.0 {
                    Err(Error::domain(format!("power inverse at negative {y}")))
                } else {
                    Ok(y.powf(1.0 / r))
                }
            }));
    }
    if let Some(c) = name.strip_prefix("scale:") {
        let c: f64 = c
            .parse()
            .map_err(|_| Error::InvalidParam(format!("bad factor in `{name}`")))?;
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::InvalidParam(format!(
                "scale factor must be positive, got {c}"
            )));
        }
        return Ok(ScalarFn::parse(&format!("{c}*u"))?.with_inverse(move |y| Ok(y / c)));
    }
    match name {
        "identity" => Ok(ScalarFn::parse("u")?.with_inverse(Ok)),
        "ln1p" => Ok(ScalarFn::parse("ln(1+u)")?
            .with_domain(Interval::nonneg())
            .with_inverse(|y| Ok(y.exp_m1()))),
        "expm1" => Ok(ScalarFn::parse("exp(u)-1")?
            .with_domain(Interval::nonneg())
            .with_inverse(|y| {
                if y <= -1.0 {
                    Err(Error::domain(format!("expm1 inverse at {y}")))
                } else {
                    Ok(y.ln_1p())
                }
            })),
        "exp" => Ok(ScalarFn::parse("exp(u)")?.with_inverse(|y| {
            if y <= 0.0 {
                Err(Error::domain(format!("exp inverse at non-positive {y}")))
            } else {
                Ok(y.ln())
            }
        })),
        "log" => Ok(ScalarFn::parse("ln(u)")?
            .with_domain(Interval::new(0.0, f64::INFINITY))
            .with_inverse(|y| Ok(y.exp()))),
        "sqrt" => Ok(ScalarFn::parse("sqrt(u)")?
            .with_domain(Interval::nonneg())
            .with_inverse(|y| {
                if y < 0.0 {
                    Err(Error::domain(format!("sqrt inverse at negative {y}")))
                } else {
                    Ok(y * y)
                }
            })),
        "square" => Ok(ScalarFn::parse("u^2")?
            .with_domain(Interval::nonneg())
            .with_inverse(|y| {
                if y < 0.0 {
                    Err(Error::domain(format!("square inverse at negative {y}")))
                } else {
                    Ok(y.sqrt())
                }
            })),
        "neg-exp" => Ok(ScalarFn::parse("exp(-u)")?.with_inverse(|y| {
            if y <= 0.0 {
                Err(Error::domain(format!("neg-exp inverse at non-positive {y}")))
            } else {
                Ok(-y.ln())
            }
        })),
        "neg-log" => Ok(ScalarFn::parse("-ln(u)")?
            .with_domain(Interval::new(0.0, f64::INFINITY))
            .with_inverse(|y| Ok((-y).exp()))),
        "ratio" => Ok(ScalarFn::parse("u/(1+u)")?
            .with_domain(Interval::nonneg())
            .with_inverse(|y| {
                if !(0.0..1.0).contains(&y) {
                    Err(Error::domain(format!("ratio inverse at {y}, range is [0,1)")))
                } else {
                    Ok(y / (1.0 - y))
                }
            })),
        "circle-area" => Ok(ScalarFn::parse("pi/4*u^2")?
            .with_domain(Interval::nonneg())
            .with_inverse(|y| {
                if y < 0.0 {
                    Err(Error::domain(format!("circle-area inverse at negative {y}")))
                } else {
                    Ok((4.0 * y / std::f64::consts::PI).sqrt())
                }
            })),
        _ => Err(Error::UnknownIdent(format!("catalog function `{name}`"))),
    }
}

/// Resolve a function argument: `catalog:<name>` or expression text.
/// Bare catalog names are also accepted when they parse as nothing else.
pub fn resolve_fn(text: &str) -> Result<ScalarFn> {
    if let Some(name) = text.strip_prefix("catalog:") {
        return catalog(name);
    }
    match ScalarFn::parse(text) {
        Ok(f) => Ok(f),
        Err(e) => catalog(text).map_err(|_| e),
    }
}

/// Invert `f` at `y` on `bracket`.
///
/// An attached analytic inverse short-circuits when its result lands in the
/// bracket. Otherwise bisection runs to a residual of `TOL_INV` (at most
/// 200 halvings), after an override check that `f` is monotone across the
/// bracket on a coarse scan.
pub fn invert(f: &ScalarFn, y: f64, bracket: Interval) -> Result<f64> {
    invert_with(f, y, bracket, TOL_INV, 200)
}

pub fn invert_with(
    f: &ScalarFn,
    y: f64,
    bracket: Interval,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let lo = bracket.sample_lo(rng::UNBOUNDED_SPAN * 100.0);
    let hi = bracket.sample_hi(rng::UNBOUNDED_SPAN * 100.0);
    if !(lo < hi) {
        return Err(Error::InvalidParam(format!(
            "degenerate bracket [{lo}, {hi}]"
        )));
    }
    if let Some(res) = f.analytic_inverse(y) {
        let x = res?;
        let slack = 1e-12 * (1.0 + x.abs());
        if x >= lo - slack && x <= hi + slack {
            return Ok(x.clamp(lo, hi));
        }
        let f_lo = f.eval_unchecked(lo)?;
        let f_hi = f.eval_unchecked(hi)?;
        return Err(Error::OutOfRange { y, f_lo: f_lo.min(f_hi), f_hi: f_lo.max(f_hi), lo, hi });
    }

    let f_lo = f.eval(lo)?;
    let f_hi = f.eval(hi)?;
    let increasing = f_hi >= f_lo;

    // Coarse monotonicity scan: bisection on a non-monotone function would
    // silently converge to one arbitrary preimage.
    let scan = 16;
    let mut prev = f_lo;
    for i in 1..=scan {
        let t = lo + (hi - lo) * i as f64 / scan as f64;
        let ft = f.eval(t)?;
        let drift = TOL_EQ * (1.0 + ft.abs().max(prev.abs()));
        if (increasing && ft < prev - drift) || (!increasing && ft > prev + drift) {
            return Err(Error::NotMonotone {
                lo,
                hi,
                u: lo + (hi - lo) * (i - 1) as f64 / scan as f64,
                v: t,
                fu: prev,
                fv: ft,
            });
        }
        prev = ft;
    }

    let (range_lo, range_hi) = if increasing { (f_lo, f_hi) } else { (f_hi, f_lo) };
    let slack = tol * (1.0 + y.abs());
    if y < range_lo - slack || y > range_hi + slack {
        return Err(Error::OutOfRange {
            y,
            f_lo: range_lo,
            f_hi: range_hi,
            lo,
            hi,
        });
    }

    let (mut a, mut b) = (lo, hi);
    let mut mid = 0.5 * (a + b);
    for _ in 0..max_iter {
        mid = 0.5 * (a + b);
        let fm = f.eval(mid)?;
        if (fm - y).abs() <= tol {
            return Ok(mid);
        }
        let go_right = (fm < y) == increasing;
        if go_right {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a) <= f64::EPSILON * (1.0 + mid.abs()) {
            break;
        }
    }
    Ok(mid)
}

/// Direction for monotonicity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Monotonicity {
    NonDecreasing,
    NonIncreasing,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotoneViolation {
    pub u: f64,
    pub v: f64,
    pub fu: f64,
    pub fv: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotoneReport {
    pub direction: Monotonicity,
    pub passed: bool,
    /// First few violating pairs `u < v` with their values.
    pub violations: Vec<MonotoneViolation>,
    /// Points where evaluation failed, with the error text.
    pub eval_errors: Vec<(f64, String)>,
    pub samples: usize,
    pub seed: u64,
}

const REPORT_CAP: usize = 8;

/// Sampled monotonicity check of `f` on `iv`: draws points (interval
/// endpoints included), sorts them, and compares consecutive values.
pub fn check_monotone(
    f: &ScalarFn,
    iv: &Interval,
    direction: Monotonicity,
    samples: usize,
    seed: u64,
) -> MonotoneReport {
    let mut r = rng::seeded(seed);
    let mut pts = rng::cover(&mut r, iv, samples.max(2));
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();

    let mut violations = Vec::new();
    let mut eval_errors = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &t in &pts {
        let ft = match f.eval(t) {
            Ok(x) => x,
            Err(e) => {
                if eval_errors.len() < REPORT_CAP {
                    eval_errors.push((t, e.to_string()));
                }
                continue;
            }
        };
        if let Some((u, fu)) = prev {
            let drift = TOL_EQ * fu.abs().max(ft.abs()).max(1.0);
            let bad = match direction {
                Monotonicity::NonDecreasing => ft < fu - drift,
                Monotonicity::NonIncreasing => ft > fu + drift,
            };
            if bad && violations.len() < REPORT_CAP {
                violations.push(MonotoneViolation { u, v: t, fu, fv: ft });
            }
        }
        prev = Some((t, ft));
    }
    MonotoneReport {
        direction,
        passed: violations.is_empty() && eval_errors.is_empty(),
        violations,
        eval_errors,
        samples,
        seed,
    }
}

/// Witness for a failed commutativity check.
#[derive(Debug, Clone, Serialize)]
pub struct CommutWitness {
    pub u: f64,
    pub v: f64,
    pub ouv: f64,
    pub ovu: f64,
}

/// Sampled commutativity of `o` on `iv x iv`. `Ok(None)` means no witness
/// found.
pub fn check_commutative(
    o: &BinOpFn,
    iv: &Interval,
    samples: usize,
    seed: u64,
) -> Result<Option<CommutWitness>> {
    let mut r = rng::seeded(seed);
    for _ in 0..samples {
        let u = rng::draw(&mut r, iv);
        let v = rng::draw(&mut r, iv);
        let ouv = o.eval(u, v)?;
        let ovu = o.eval(v, u)?;
        if !approx_eq(ouv, ovu, TOL_EQ) {
            return Ok(Some(CommutWitness { u, v, ouv, ovu }));
        }
    }
    Ok(None)
}

/// Witness for a failed per-variable monotonicity check on a binary
/// operation: holding `fixed` in position `1 - var`, the value dropped
/// (or failed to rise, for strict checks) between `lo_arg` and `hi_arg`.
#[derive(Debug, Clone, Serialize)]
pub struct MonotoneEachWitness {
    pub var: usize,
    pub fixed: f64,
    pub lo_arg: f64,
    pub hi_arg: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Sampled check that `o` is monotone (non-decreasing, or strictly
/// increasing when `strict`) in each variable separately on `iv`.
pub fn check_monotone_each(
    o: &BinOpFn,
    iv: &Interval,
    strict: bool,
    samples: usize,
    seed: u64,
) -> Result<Option<MonotoneEachWitness>> {
    for var in 0..2 {
        if let Some(w) = check_monotone_var(o, iv, var, strict, samples, seed)? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// Sampled check that `o` is monotone in variable `var` (0 or 1) alone.
pub fn check_monotone_var(
    o: &BinOpFn,
    iv: &Interval,
    var: usize,
    strict: bool,
    samples: usize,
    seed: u64,
) -> Result<Option<MonotoneEachWitness>> {
    let mut r = rng::seeded(seed);
    let span = iv.sample_hi(rng::UNBOUNDED_SPAN) - iv.sample_lo(rng::UNBOUNDED_SPAN);
    let min_gap = if strict { 1e-6 * span.max(1.0) } else { 0.0 };
    let fixed_pool = rng::cover(&mut r, iv, (samples / 8).max(4));
    for &fixed in &fixed_pool {
        for _ in 0..(samples / fixed_pool.len()).max(4) {
            let mut s = rng::draw(&mut r, iv);
            let mut t = rng::draw(&mut r, iv);
            if s > t {
                std::mem::swap(&mut s, &mut t);
            }
            if t - s < min_gap {
                continue;
            }
            let (f_lo, f_hi) = if var == 0 {
                (o.eval(s, fixed)?, o.eval(t, fixed)?)
            } else {
                (o.eval(fixed, s)?, o.eval(fixed, t)?)
            };
            let drift = TOL_EQ * f_lo.abs().max(f_hi.abs()).max(1.0);
            let bad = if strict {
                f_hi <= f_lo + drift
            } else {
                f_hi < f_lo - drift
            };
            if bad {
                return Ok(Some(MonotoneEachWitness {
                    var,
                    fixed,
                    lo_arg: s,
                    hi_arg: t,
                    f_lo,
                    f_hi,
                }));
            }
        }
    }
    Ok(None)
}
