//! Portable random streams.
//!
//! Every random draw in the crate goes through a ChaCha8 generator keyed as
//! follows, so that instances and oracle samples can be reproduced bit for bit
//! from any language with a ChaCha implementation:
//!
//! * key: the 64-bit seed in little-endian order in bytes `0..8`, zeros in
//!   bytes `8..32`;
//! * stream id: the 64-bit stream number;
//! * word position: 0.
//!
//! Uniforms take the top 53 bits of one `u64` output; normals use the cosine
//! branch of Box-Muller on two consecutive uniforms.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used for instance geometry.
pub const STREAM_GEOMETRY: u64 = 0;
/// Stream used for mixed-logit utility noise.
pub const STREAM_MMNL_NOISE: u64 = 1;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64, stream_id: u64) -> Stream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream_id);
    rng
}

/// Uniform on `[0, 1)`.
pub fn uniform01(rng: &mut Stream) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform on `[lo, hi)`.
pub fn uniform(rng: &mut Stream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform01(rng)
}

/// Uniform integer in `0..n`. `n` must be positive.
pub fn below(rng: &mut Stream, n: usize) -> usize {
    debug_assert!(n > 0);
    let k = (uniform01(rng) * n as f64) as usize;
    k.min(n - 1)
}

pub fn standard_normal(rng: &mut Stream) -> f64 {
    // 1 - u keeps the log argument in (0, 1].
    let u1 = 1.0 - uniform01(rng);
    let u2 = uniform01(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Uniformly random subset of `0..n` with exactly `k` elements, ascending.
pub fn subset(rng: &mut Stream, n: usize, k: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    // Partial Fisher-Yates.
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let r = i + below(rng, n - i);
        pool.swap(i, r);
    }
    let mut out = pool[..k].to_vec();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream(7, 0).next_u64()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let mut s0 = stream(7, 0);
        let mut s1 = stream(7, 1);
        assert_ne!(s0.next_u64(), s1.next_u64());
    }

    #[test]
    fn uniform_in_range() {
        let mut r = stream(1, 0);
        for _ in 0..10_000 {
            let u = uniform01(&mut r);
            assert!((0.0..1.0).contains(&u));
            assert!(below(&mut r, 3) < 3);
        }
    }

    #[test]
    fn normal_moments_are_plausible() {
        let mut r = stream(11, 5);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| standard_normal(&mut r)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn subset_has_distinct_sorted_members() {
        let mut r = stream(3, 2);
        for k in 0..=6 {
            let s = subset(&mut r, 6, k);
            assert_eq!(s.len(), k);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
