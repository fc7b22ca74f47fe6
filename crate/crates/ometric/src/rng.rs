//! Seeded sampling helpers. Every randomized check in the crate draws from
//! a `ChaCha8Rng` seeded explicitly, so identical seeds give identical
//! reports on every platform.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::interval::Interval;

/// Span used when sampling from an interval that is unbounded on one side.
pub const UNBOUNDED_SPAN: f64 = 10.0;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One uniform draw from the sampling window of `iv`.
pub fn draw(rng: &mut ChaCha8Rng, iv: &Interval) -> f64 {
    let lo = iv.sample_lo(UNBOUNDED_SPAN);
    let hi = iv.sample_hi(UNBOUNDED_SPAN);
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// `n` points covering `iv`: both window endpoints first, then uniform
/// draws. Checks that want boundary witnesses (branch cuts usually sit at
/// interval ends) get them deterministically.
pub fn cover(rng: &mut ChaCha8Rng, iv: &Interval, n: usize) -> Vec<f64> {
    let lo = iv.sample_lo(UNBOUNDED_SPAN);
    let hi = iv.sample_hi(UNBOUNDED_SPAN);
    let mut pts = Vec::with_capacity(n);
    if n > 0 {
        pts.push(lo);
    }
    if n > 1 && hi != lo {
        pts.push(hi);
    }
    while pts.len() < n {
        pts.push(if lo == hi { lo } else { rng.gen_range(lo..=hi) });
    }
    pts
}
