//! Type distributions used by the experiments.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::model::TypeProfile;

/// Per-type counts of the five reference distributions of 100 SUs over
/// types `θ = 1..10`.
pub const REFERENCE_COUNTS: [[u32; 10]; 5] = [
    [10, 10, 10, 10, 10, 10, 10, 10, 10, 10],
    [1, 3, 5, 7, 9, 11, 13, 15, 17, 19],
    [19, 17, 15, 13, 11, 9, 7, 5, 3, 1],
    [2, 6, 10, 14, 18, 18, 14, 10, 6, 2],
    [18, 14, 10, 6, 2, 2, 6, 10, 14, 18],
];

/// Evenly spaced ladder `θ^i = i` for `i = 1..=t`.
pub fn integer_ladder(t: usize) -> Vec<f64> {
    (1..=t).map(|i| i as f64).collect()
}

/// Reference distribution `k` (1-based, `1..=5`).
pub fn reference(k: usize) -> Result<TypeProfile> {
    let counts = REFERENCE_COUNTS
        .get(k.wrapping_sub(1))
        .ok_or_else(|| invalid("distribution", format!("reference distributions are 1..=5, got {k}")))?;
    TypeProfile::new(integer_ladder(10), counts.to_vec())
}

/// Multinomial counts: each of `n` SUs draws its type uniformly from `t` types.
pub fn multinomial_counts<R: Rng>(n: u32, t: usize, rng: &mut R) -> Vec<u32> {
    let mut counts = vec![0u32; t];
    for _ in 0..n {
        counts[rng.gen_range(0..t)] += 1;
    }
    counts
}

/// Random distribution of `n` SUs over the integer ladder of `t` types.
pub fn random(n: u32, t: usize, seed: u64) -> Result<TypeProfile> {
    if t == 0 {
        return Err(invalid("types", "need at least one type"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TypeProfile::new(integer_ladder(t), multinomial_counts(n, t, &mut rng))
}

/// `n` independent trial seeds derived from one master seed.
pub fn trial_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen()).collect()
}

/// Sets the committed registration share of every type to `gamma`,
/// rounded to whole SUs per type.
pub fn with_commitment(types: TypeProfile, gamma: f64) -> Result<TypeProfile> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(invalid("gamma", format!("must lie in [0, 1], got {gamma}")));
    }
    let fractions = types
        .counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { (c as f64 * gamma).round() / c as f64 })
        .collect();
    TypeProfile::with_reg_fractions(types.thetas, types.counts, fractions)
}
