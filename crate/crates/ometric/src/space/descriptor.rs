//! JSON space descriptors:
//!
//! ```json
//! {
//!   "name": "my-space",
//!   "a": 0.0,
//!   "interval": [0.0, "inf"],
//!   "dist": "abs(u-v)",
//!   "o": "max(u,v)",
//!   "domain": {"kind": "line", "lo": -10, "hi": 10}
//! }
//! ```
//!
//! `dist` and `o` are expressions in `u`, `v`; for `dist` the variables are
//! the two points (line domains only). Either may instead be
//! `builtin:<name>` to borrow that builtin's function. [`resolve_space`]
//! additionally accepts a whole-space builtin reference or a file path.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scalarfn::BinOpFn;

use super::{builtin_ref, DistFn, OMetricSpace, PointDomain};

#[derive(Deserialize)]
struct RawSpace {
    name: Option<String>,
    a: f64,
    interval: (f64, RawEnd),
    dist: String,
    o: String,
    domain: RawDomain,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawEnd {
    Num(f64),
    Word(String),
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawDomain {
    Line { lo: f64, hi: f64 },
    Box { bounds: Vec<(f64, f64)> },
    Finite { points: Vec<Vec<f64>> },
}

/// Parse a JSON space descriptor.
pub fn parse_space_json(text: &str) -> Result<OMetricSpace> {
    let raw: RawSpace =
        serde_json::from_str(text).map_err(|e| Error::Descriptor(e.to_string()))?;
    let hi = match raw.interval.1 {
        RawEnd::Num(x) => x,
        RawEnd::Word(w) if w == "inf" => f64::INFINITY,
        RawEnd::Word(w) => {
            return Err(Error::Descriptor(format!(
                "interval end must be a number or \"inf\", got \"{w}\""
            )))
        }
    };
    let interval = Interval::new(raw.interval.0, hi);
    let domain = match raw.domain {
        RawDomain::Line { lo, hi } => PointDomain::Line { lo, hi },
        RawDomain::Box { bounds } => PointDomain::Box { bounds },
        RawDomain::Finite { points } => PointDomain::Finite { points },
    };

    let dist = if raw.dist.starts_with("builtin:") {
        builtin_ref(&raw.dist)?.dist_fn().clone()
    } else {
        if domain.dim() != 1 {
            return Err(Error::Descriptor(
                "distance expressions apply to 1-dimensional domains only; \
                 use a builtin reference for higher dimensions"
                    .into(),
            ));
        }
        let f = BinOpFn::parse(&raw.dist).map_err(|e| Error::Descriptor(e.to_string()))?;
        DistFn::new(raw.dist.clone(), move |x, y| f.eval(x[0], y[0]))
    };
    let o = if raw.o.starts_with("builtin:") {
        builtin_ref(&raw.o)?.o_fn().clone()
    } else {
        BinOpFn::parse(&raw.o).map_err(|e| Error::Descriptor(e.to_string()))?
    };

    OMetricSpace::new(
        raw.name.unwrap_or_else(|| "custom".into()),
        domain,
        dist,
        o,
        raw.a,
        interval,
    )
}

/// Resolve a space argument: `builtin:<name>?params`, inline JSON
/// (starts with `{`), or a path to a JSON file.
pub fn resolve_space(arg: &str) -> Result<OMetricSpace> {
    let arg = arg.trim();
    if arg.starts_with("builtin:") {
        return builtin_ref(arg);
    }
    if arg.starts_with('{') {
        return parse_space_json(arg);
    }
    let text = std::fs::read_to_string(arg).map_err(|e| {
        Error::Descriptor(format!("cannot read space descriptor `{arg}`: {e}"))
    })?;
    parse_space_json(&text)
}
