//! Reproducible substream derivation.
//!
//! Every random quantity draws from a ChaCha12 stream whose 32-byte key is
//! `LE64(seed) || LE64(domain tag) || LE64(index) || 0^8`. Parallel and
//! serial runs therefore produce identical results: a draw's stream depends
//! only on its logical coordinates, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub(crate) const TAG_CODEBOOK: u64 = 1;
pub(crate) const TAG_MESSAGE: u64 = 2;
pub(crate) const TAG_CHANNEL_NOISE: u64 = 3;
pub(crate) const TAG_SOURCE: u64 = 4;

pub(crate) fn substream(seed: u64, tag: u64, index: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}
