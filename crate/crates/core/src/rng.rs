//! Deterministic pseudo-random numbers.
//!
//! Everything random in this crate flows through [`SplitMix64`] so that a run
//! can be reproduced from its seed by any implementation of the same
//! recurrence:
//!
//! ```text
//! state  <- state + 0x9E3779B97F4A7C15            (wrapping)
//! z      <- state
//! z      <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  (wrapping)
//! z      <- (z ^ (z >> 27)) * 0x94D049BB133111EB  (wrapping)
//! output <- z ^ (z >> 31)
//! ```
//!
//! Bounded integers use Lemire's multiply-and-reject method, and a draw of
//! `k` distinct positions out of `m` is the first `k` steps of a Fisher–Yates
//! shuffle of `[0, m)` (step `i` swaps slot `i` with slot
//! `i + below(m - i)`). Per-node streams are seeded with [`mix`].

use std::collections::HashMap;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed from a parent seed and a small tag
/// (child side, trial index, retry nonce).
#[inline]
pub fn mix(seed: u64, tag: u64) -> u64 {
    finalize(seed ^ finalize(tag.wrapping_add(GOLDEN)))
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        finalize(self.state)
    }

    /// Uniform integer in `[0, bound)`. `bound` must be nonzero.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below(0)");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(bound);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`; safe to take the logarithm of.
    #[inline]
    pub fn next_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard exponential variate.
    pub fn exponential(&mut self) -> f64 {
        -self.next_f64_open().ln()
    }

    /// Standard normal variate (Box–Muller, cosine branch only).
    pub fn normal(&mut self) -> f64 {
        let r = (-2.0 * self.next_f64_open().ln()).sqrt();
        r * (std::f64::consts::TAU * self.next_f64()).cos()
    }

    /// `k` distinct positions from `[0, m)` in draw order: the first `k`
    /// steps of a Fisher–Yates shuffle of the identity array. Only touched
    /// slots are materialized, so the cost is `O(k)` regardless of `m`.
    pub fn sample_positions(&mut self, m: usize, k: usize) -> Vec<usize> {
        assert!(k <= m, "cannot draw {k} of {m}");
        let mut swapped: HashMap<usize, usize> = HashMap::with_capacity(2 * k);
        let mut out = Vec::with_capacity(k);
        for i in 0..k {
            let j = i + self.below((m - i) as u64) as usize;
            let at_j = *swapped.get(&j).unwrap_or(&j);
            let at_i = *swapped.get(&i).unwrap_or(&i);
            swapped.insert(j, at_i);
            out.push(at_j);
        }
        out
    }

    /// Like [`sample_positions`](Self::sample_positions), sorted ascending.
    pub fn sample_sorted(&mut self, m: usize, k: usize) -> Vec<usize> {
        let mut v = self.sample_positions(m, k);
        v.sort_unstable();
        v
    }
}
