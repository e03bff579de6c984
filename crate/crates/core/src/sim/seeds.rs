//! Deterministic seed derivation so every unit of work owns an independent
//! random stream regardless of scheduling order.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `parent` with a sequence of tags into a child seed.
pub fn derive_seed(parent: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix(parent), |acc, &t| splitmix(acc ^ splitmix(t)))
}

/// Stream tags.
pub const TAG_SAMPLE: u64 = 0x5A;
pub const TAG_TRAJECTORY: u64 = 0x7A;
pub const TAG_LOS: u64 = 0x105;
pub const TAG_AWGN: u64 = 0xA9;
pub const TAG_INIT: u64 = 0x1417;
pub const TAG_SHUFFLE: u64 = 0x5F1E;
pub const TAG_SPLIT: u64 = 0x5B17;
