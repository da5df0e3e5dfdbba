//! Counter-based random number generation.
//!
//! Every draw is a pure function of `(seed, stream, counter)`, so replications
//! and sampling channels can be evaluated in any order — or in parallel — and
//! still produce identical results. The mixing function is the SplitMix64
//! finalizer applied to an affine counter walk, which is the seekable form of
//! that generator.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output mixing (Stafford's Mix13 variant).
#[inline]
fn mix(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    z
}

/// A stateless, seekable random source.
///
/// `CounterRng::new(seed, stream)` derives an independent stream; `u64_at(k)`
/// returns the `k`-th draw of that stream without generating the first `k-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = mix(mix(seed ^ 0x6A09_E667_F3BC_C909)
            .wrapping_add(mix(stream.wrapping_mul(GOLDEN) ^ 0xBB67_AE85_84CA_A73B)));
        CounterRng { key }
    }

    /// Derives a sub-stream (e.g. one per replication or sampling channel).
    pub fn substream(&self, sub: u64) -> Self {
        CounterRng { key: mix(self.key.wrapping_add(mix(sub ^ 0x3C6E_F372_FE94_F82B))) }
    }

    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        mix(self.key.wrapping_add(counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform draw in the half-open interval `(0, 1]` (safe under `ln`).
    #[inline]
    pub fn uniform_at(&self, counter: u64) -> f64 {
        let bits = self.u64_at(counter) >> 11;
        (bits as f64 + 1.0) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal draw addressed by `counter` (Box–Muller; consumes the
    /// underlying counters `2k` and `2k+1`).
    #[inline]
    pub fn normal_at(&self, counter: u64) -> f64 {
        let u1 = self.uniform_at(counter << 1);
        let u2 = self.uniform_at((counter << 1) | 1);
        crate::math::sqrt(-2.0 * crate::math::ln(u1)) * crate::math::cos(crate::math::TAU * u2)
    }

    /// Exponential draw with the given rate, addressed by `counter`.
    #[inline]
    pub fn exp_at(&self, counter: u64, rate: f64) -> f64 {
        -crate::math::ln(self.uniform_at(counter)) / rate
    }
}
