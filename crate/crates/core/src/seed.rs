/// Seed for an independent stream derived from a master seed.
///
/// The stream index is spread by the golden-ratio increment, xored into the
/// master seed and passed through the SplitMix64 finalizer. The rule is part
/// of the output contract: changing it changes every generated fixture.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
