//! Seeded randomness.
//!
//! Every random decision in the crate is drawn from [`ChaCha8Rng`] seeded via
//! `SeedableRng::seed_from_u64`, and integer draws go through [`below`] (plain
//! rejection sampling on `next_u64`) instead of `rand`'s range helpers, whose
//! algorithms are not part of `rand`'s stability promise. Shuffles are the
//! textbook Fisher-Yates walk from the back of the slice. Together these make a
//! selection reproducible from nothing but the seed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SeedRng = ChaCha8Rng;

/// Builds the crate generator from a 64-bit seed.
pub fn seeded(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent sub-seed from `seed` and a stream label.
///
/// SplitMix64 finalizer over `seed ^ label * golden`; used so that different
/// parts of a run (selection, revalidation draws, per-question emotion) never
/// share a stream.
pub fn derive(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform integer in `0..n`. Panics if `n == 0`.
pub fn below<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    assert!(n > 0, "below(0)");
    let n = n as u64;
    // Largest multiple of n that fits; reject the tail to stay unbiased.
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return (v % n) as usize;
        }
    }
}

/// Uniform real in `[0, 1)` with 53 bits of precision.
pub fn unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T, R: RngCore + ?Sized>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i + 1);
        items.swap(i, j);
    }
}
