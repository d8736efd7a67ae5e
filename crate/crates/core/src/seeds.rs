//! Hierarchical seed derivation.
//!
//! Every random stream in a run is keyed by a path below the master seed,
//! e.g. `master -> trial index -> "shadow" -> (i, j)`. Each step mixes the
//! parent with the key through SplitMix64, so a stream depends only on its
//! path and never on scheduling or on how many other streams were drawn.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_pcg::Pcg64Mcg;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a, used to turn stream labels into keys.
pub fn label_key(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Seed {
    pub fn child(self, key: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(key)))
    }

    pub fn label(self, label: &str) -> Seed {
        self.child(label_key(label))
    }

    pub fn pair(self, a: u64, b: u64) -> Seed {
        self.child(a).child(b)
    }

    /// Seed for trial `index` of a run.
    pub fn trial(master: u64, index: u64) -> Seed {
        Seed(master).label("trial").child(index)
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Cheap-to-seed generator for the many short per-link streams.
    pub fn fast_rng(self) -> Pcg64Mcg {
        Pcg64Mcg::new(((self.0 as u128) << 64) | splitmix64(self.0) as u128 | 1)
    }
}
