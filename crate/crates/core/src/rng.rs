//! Seeded random streams.
//!
//! Every stream is ChaCha20 keyed by `sha256("tucker-recover/v1" || seed)`
//! with `seed` as 8 little-endian bytes. Independent seeds for an
//! experiment's trials and purposes come from [`derive_seed`], which hashes
//! the master seed together with length-prefixed labels. Gaussian sensing
//! rows use the ChaCha stream id to address row `i` directly.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// Identifier written to every output file.
pub const PRNG_ALGORITHM: &str = "chacha20-sha256key-v1";

pub type Prng = ChaCha20Rng;

pub fn rng_from_seed(seed: u64) -> Prng {
    let mut h = Sha256::new();
    h.update(b"tucker-recover/v1");
    h.update(seed.to_le_bytes());
    Prng::from_seed(h.finalize().into())
}

/// Seed for `(experiment, trial, purpose)` under `master`.
pub fn derive_seed(master: u64, experiment: &str, trial: u64, purpose: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(b"tucker-recover/derive/v1");
    h.update(master.to_le_bytes());
    h.update((experiment.len() as u64).to_le_bytes());
    h.update(experiment.as_bytes());
    h.update(trial.to_le_bytes());
    h.update((purpose.len() as u64).to_le_bytes());
    h.update(purpose.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map({
            let mut r = rng_from_seed(7);
            move |_| r.next_u64()
        }).collect();
        let mut r = rng_from_seed(7);
        let b: Vec<u64> = (0..4).map(|_| r.next_u64()).collect();
        assert_eq!(a, b);
        assert_ne!(rng_from_seed(8).next_u64(), a[0]);
    }

    #[test]
    fn derived_seeds_separate_labels() {
        let s = derive_seed(1, "phase", 0, "omega");
        assert_eq!(s, derive_seed(1, "phase", 0, "omega"));
        assert_ne!(s, derive_seed(1, "phase", 1, "omega"));
        assert_ne!(s, derive_seed(1, "phase", 0, "truth"));
        assert_ne!(s, derive_seed(2, "phase", 0, "omega"));
        // Length prefixes keep label boundaries unambiguous.
        assert_ne!(derive_seed(1, "ab", 0, "c"), derive_seed(1, "a", 0, "bc"));
    }
}
