use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for sample `index` of a run seeded with `seed`.
///
/// `purpose` separates the streams of different sampling stages that share a
/// user seed, so direction sampling and verification never reuse draws.
pub fn stream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

pub const DIRECTIONS: u64 = 1;
pub const VERIFY: u64 = 2;
pub const REFINE: u64 = 3;
