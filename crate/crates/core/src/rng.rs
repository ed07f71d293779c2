//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by the
//! caller's 64-bit seed plus a domain tag, with the 64-bit stream id selecting
//! e.g. the matrix row. Rows can therefore be sampled in any order, on any
//! number of threads, and still produce bit-identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::field::FieldMatrix;

pub type StreamRng = ChaCha8Rng;

/// Domain tags keep streams for different purposes disjoint under one seed.
pub mod domain {
    pub const SOURCE: u64 = 0x5352_4300;
    pub const PAD: u64 = 0x5041_4400;
    pub const SHARE: u64 = 0x5348_5200;
    pub const PERMUTE: u64 = 0x5045_524d;
    pub const LATENCY: u64 = 0x4c41_5400;
    pub const STRAGGLER: u64 = 0x5354_5200;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
    pub const SPLIT_A: u64 = 0x5350_4c41;
    pub const SPLIT_B: u64 = 0x5350_4c42;
}

pub fn stream(seed: u64, domain: u64, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Derive an independent child seed (SplitMix64 finalizer over the inputs).
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(domain.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Map every entry of `input` through `draw`, one stream per row, in parallel.
/// The output does not depend on the number of threads.
pub(crate) fn map_entries<F>(input: &FieldMatrix, seed: u64, domain: u64, draw: F) -> FieldMatrix
where
    F: Fn(&mut StreamRng, u32) -> u32 + Sync,
{
    let cols = input.cols();
    let mut data = vec![0u32; input.data().len()];
    if cols > 0 {
        data.par_chunks_mut(cols).zip(input.data().par_chunks(cols)).enumerate().for_each(|(row, (out, src))| {
            let mut rng = stream(seed, domain, row as u64);
            for (o, &a) in out.iter_mut().zip(src) {
                *o = draw(&mut rng, a);
            }
        });
    }
    FieldMatrix::from_parts_unchecked(input.field().clone(), input.rows(), cols, data)
}
