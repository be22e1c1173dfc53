//! Derivation of independent sub-seeds from one global seed.

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the stage named `label`, derived from `global`.
///
/// Stages in use: `"skipgram"`, `"kmeans"`, `"cv"`, `"synth"`.
pub fn derive(global: u64, label: &str) -> u64 {
    // FNV-1a over the label, then mixed with the global seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    mix(global ^ mix(h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_and_distinct() {
        assert_eq!(derive(7, "kmeans"), derive(7, "kmeans"));
        assert_ne!(derive(7, "kmeans"), derive(7, "skipgram"));
        assert_ne!(derive(7, "kmeans"), derive(8, "kmeans"));
    }
}
