//! Deterministic, portable randomness for reproducible corpus operations.
//!
//! Every seeded operation in this crate draws from SplitMix64 (Steele, Lea
//! and Flood's 64-bit generator), chosen because it is trivial to port: any
//! implementation of the update below produces an identical stream on any
//! platform.
//!
//! ```text
//! state += 0x9e3779b97f4a7c15                       (per draw)
//! z = (state ^ (state >> 30)) * 0xbf58476d1ce4e5b9
//! z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//! output = z ^ (z >> 31)
//! ```
//!
//! Independent streams are derived from a master seed and an operation
//! label: [`derive_seed`] hashes the label with FNV-1a 64, XORs the digest
//! into the master seed, and returns the first SplitMix64 output of that
//! state. Shuffles are Fisher-Yates from the high index down, drawing
//! bounded integers by rejection so they are unbiased.

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform draw in `0..n` by rejection.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below(0)");
        // 2^64 mod n; everything at or above it maps uniformly under % n.
        let threshold = n.wrapping_neg() % n;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % n;
            }
        }
    }

    pub fn next_index(&mut self, n: usize) -> usize {
        self.next_below(n as u64) as usize
    }
}

/// FNV-1a 64-bit digest of `label`.
pub fn fnv1a64(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derive the seed of an independent stream from a master seed and an
/// operation label (e.g. `"split"`, `"mix:primary"`, or a document id).
pub fn derive_seed(master: u64, label: &str) -> u64 {
    SplitMix64::new(master ^ fnv1a64(label)).next_u64()
}

/// In-place Fisher-Yates shuffle, iterating from the high index down.
pub fn shuffle<T>(rng: &mut SplitMix64, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = rng.next_index(i + 1);
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_stream() {
        // First outputs for seed 0, cross-checked against the published
        // constants by an independent implementation of the three lines
        // documented above.
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xe220_a839_7b1d_cdaf);
        assert_eq!(rng.next_u64(), 0x6e78_9e6a_a1b9_65f4);
        assert_eq!(rng.next_u64(), 0x06c4_5d18_8009_454f);
    }

    #[test]
    fn derive_seed_depends_on_label_and_master() {
        assert_ne!(derive_seed(42, "split"), derive_seed(42, "mix"));
        assert_ne!(derive_seed(42, "split"), derive_seed(43, "split"));
        assert_eq!(derive_seed(42, "split"), derive_seed(42, "split"));
    }

    #[test]
    fn next_below_stays_in_range() {
        let mut rng = SplitMix64::new(7);
        for n in 1..40u64 {
            for _ in 0..50 {
                assert!(rng.next_below(n) < n);
            }
        }
    }

    #[test]
    fn shuffle_is_a_permutation_and_deterministic() {
        let mut a: Vec<u32> = (0..100).collect();
        let mut b: Vec<u32> = (0..100).collect();
        shuffle(&mut SplitMix64::new(9), &mut a);
        shuffle(&mut SplitMix64::new(9), &mut b);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert_ne!(a, sorted); // astronomically unlikely to be identity
    }
}
