use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Every random draw in the crate goes through this generator so that a
/// `(seed, stream)` pair fully determines a run.
pub(crate) fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) mod streams {
    pub const PAIR_SAMPLING: u64 = 1;
    pub const EMBED_INIT: u64 = 2;
    pub const EMBED_TRAIN: u64 = 3;
    pub const INFER: u64 = 4;
    pub const SIMNET_INIT: u64 = 5;
    pub const SIMNET_SHUFFLE: u64 = 6;
    pub const LINEAR: u64 = 7;
    pub const SPLIT: u64 = 8;
    pub const SYNTH: u64 = 9;
    /// Dropout masks use `DROPOUT_BASE + example index`.
    pub const DROPOUT_BASE: u64 = 1 << 32;
}

/// SplitMix64 finalizer, used to derive per-batch seeds.
pub(crate) fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
