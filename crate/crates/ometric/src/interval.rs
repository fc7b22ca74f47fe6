use serde::{Deserialize, Serialize};

/// Closed real interval `[lo, hi]`; `hi` may be `+inf`.
///
/// Open endpoints are not modeled: sampling and comparisons cannot
/// distinguish them, so intervals like `(0, 1]` are stored as `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    /// `[0, +inf)`.
    pub fn nonneg() -> Self {
        Interval {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    /// The whole real line (used for expression functions with no
    /// declared restriction).
    pub fn all() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Upper end used for sampling: `hi` when finite, otherwise `lo + span`.
    pub fn sample_hi(&self, span: f64) -> f64 {
        if self.hi.is_finite() {
            self.hi
        } else {
            self.lo + span
        }
    }

    /// Lower end used for sampling: `lo` when finite, otherwise `hi - span`.
    pub fn sample_lo(&self, span: f64) -> f64 {
        if self.lo.is_finite() {
            self.lo
        } else {
            self.sample_hi(span) - span
        }
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}
