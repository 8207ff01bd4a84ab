//! Counter-based random numbers: every draw is a pure function of
//! `(seed, counter)`, so results do not depend on evaluation order or
//! thread count.

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
pub fn hash2(seed: u64, a: u64) -> u64 {
    mix64(mix64(seed) ^ a)
}

#[inline]
pub fn hash3(seed: u64, a: u64, b: u64) -> u64 {
    mix64(hash2(seed, a) ^ b.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Uniform in the open interval (0, 1) from the top 52 bits.
#[inline]
pub fn unit_open(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Standard normal draw for `(seed, counter)`: Box–Muller, cosine branch,
/// with the two uniforms taken from independent hash streams.
#[inline]
pub fn standard_normal(seed: u64, counter: u64) -> f64 {
    let u1 = unit_open(hash3(seed, counter, 0));
    let u2 = unit_open(hash3(seed, counter, 1));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
