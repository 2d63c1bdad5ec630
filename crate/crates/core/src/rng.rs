//! The single pseudo-random generator used everywhere in the crate.
//!
//! Algorithm: xoshiro256++ (Blackman & Vigna). A 64-bit seed is expanded
//! into the 256-bit state by four successive SplitMix64 outputs:
//!
//! ```text
//! z = (x += 0x9E3779B97F4A7C15)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! out = z ^ (z >> 31)
//! ```
//!
//! Each step of xoshiro256++ returns `rotl(s0 + s3, 23) + s0` and advances the
//! state with the reference update. Uniform indices in `0..n` are drawn by the
//! widening multiply `(next_u64() as u128 * n as u128) >> 64` with no rejection
//! step, so an external reimplementation reproduces index streams exactly.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SeededRng = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> SeededRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Uniform index in `0..n` via multiply-shift. `n` must be nonzero.
pub fn index(rng: &mut SeededRng, n: usize) -> usize {
    debug_assert!(n > 0);
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Uniform float in `[0, 1)` from the top 53 bits of one output.
pub fn unit_f64(rng: &mut SeededRng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform float in `[lo, hi)`.
pub fn uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit_f64(rng)
}

/// Standard normal deviate by Box-Muller (one of the pair is discarded).
pub fn normal(rng: &mut SeededRng) -> f64 {
    let u1 = 1.0 - unit_f64(rng);
    let u2 = unit_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Fisher-Yates shuffle driven by [`index`], from the back of the slice.
pub fn shuffle<T>(rng: &mut SeededRng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = index(rng, i + 1);
        items.swap(i, j);
    }
}

/// Derive an independent stream seed from a base seed and a tag.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut x = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
