//! Splittable counter-based random number generation.
//!
//! Every trajectory owns an independent substream derived from the pair
//! `(master_seed, trajectory_index)`, so ensembles are reproducible regardless
//! of how trajectories are scheduled across workers.
//!
//! Substream derivation (also echoed in run manifests):
//!
//! ```text
//! key_i  = mix64(mix64(master_seed) ^ mix64((i + 1) * GOLDEN))
//! out_k  = mix64(key_i + k * GOLDEN)        k = 0, 1, 2, ...
//! ```
//!
//! where `mix64` is the SplitMix64 finalizer and `GOLDEN = 0x9e3779b97f4a7c15`.
//! Uniforms take the top 53 bits of `out_k`, giving values in `[0, 1)`;
//! gaussians come from Box-Muller applied to two consecutive uniforms.

/// Weyl increment (2^64 / golden ratio), as used by SplitMix64.
pub const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a bijective avalanche mix of a 64-bit word.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Human-readable statement of the substream derivation, for run manifests.
pub const SUBSTREAM_DERIVATION: &str =
    "key_i = mix64(mix64(master_seed) ^ mix64((i+1)*0x9e3779b97f4a7c15)); \
     out_k = mix64(key_i + k*0x9e3779b97f4a7c15); mix64 = SplitMix64 finalizer; \
     uniform = top 53 bits / 2^53; gaussian = Box-Muller on consecutive uniform pairs";

/// Counter-based generator for one trajectory substream.
///
/// Output `k` depends only on `(key, k)`, so the stream can be regenerated
/// from scratch at any time; there is no hidden state beyond the counter.
#[derive(Debug, Clone)]
pub struct TrajectoryRng {
    key: u64,
    counter: u64,
    spare_gaussian: Option<f64>,
    master_seed: u64,
    stream: u64,
}

impl TrajectoryRng {
    /// Substream `stream` of the generator seeded by `master_seed`.
    pub fn substream(master_seed: u64, stream: u64) -> Self {
        let key = mix64(mix64(master_seed) ^ mix64(stream.wrapping_add(1).wrapping_mul(GOLDEN)));
        TrajectoryRng {
            key,
            counter: 0,
            spare_gaussian: None,
            master_seed,
            stream,
        }
    }

    /// The `(master_seed, stream)` pair this substream was derived from.
    pub fn seed_info(&self) -> (u64, u64) {
        (self.master_seed, self.stream)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)));
        self.counter += 1;
        out
    }

    /// Uniform double in `[0, 1)` with 53-bit resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Standard gaussian via Box-Muller; consumes two uniforms per pair.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(g) = self.spare_gaussian.take() {
            return g;
        }
        // 1 - u lies in (0, 1], keeping the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_gaussian = Some(radius * theta.sin());
        radius * theta.cos()
    }
}
