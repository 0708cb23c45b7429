//! Stable 64-bit mixing used for ECMP hashing and per-tile seed derivation.
//!
//! The output must not change between releases or platforms: experiment
//! outputs are byte-compared across runs.

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one hash.
pub fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &w| mix64(acc ^ mix64(w)))
}

/// Uniform index in `0..len` from a hash value. `len` must be nonzero.
#[inline]
pub fn pick(hash: u64, len: usize) -> usize {
    // multiply-shift avoids the modulo bias of `hash % len`
    ((hash as u128 * len as u128) >> 64) as usize
}
