//! Deterministic random streams.
//!
//! Two kinds of stream are used:
//!
//! * [`stream`]: a ChaCha20 generator whose 256-bit seed is the SHA-256
//!   digest of a textual key such as `quadratic/kappa=1e2/d=100/seed=3/basis`.
//!   The key fully determines the sequence on every platform, and different
//!   keys give unrelated streams, so adding a consumer never perturbs the
//!   draws of existing ones.
//! * [`initial_point`]: the shared starting point of every trial. It
//!   reproduces `torch.manual_seed(seed); torch.rand(d) * 4 - 2` on CPU
//!   (MT19937, 24-bit single-precision uniforms), so seed `s` here yields the
//!   same starting point as seed `s` in the PyTorch reference scripts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_mt::Mt;
use sha2::{Digest, Sha256};

/// Deterministic generator for the given stream key.
pub fn stream(key: &str) -> ChaCha20Rng {
    let digest = Sha256::digest(key.as_bytes());
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha20Rng::from_seed(seed)
}

/// Draws `d` values uniformly from `[lo, hi)`.
pub fn uniform_vec(rng: &mut impl Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(lo..hi)).collect()
}

/// Single-precision uniforms in `[0, 1)` as produced by PyTorch's CPU
/// generator: one MT19937 word per value, low 24 bits scaled by `2^-24`.
pub struct TorchUniform {
    mt: Mt,
}

impl TorchUniform {
    pub fn new(seed: u64) -> Self {
        // torch truncates the seed to the 32-bit MT19937 state initialiser
        Self {
            mt: Mt::new(seed as u32),
        }
    }

    pub fn next_f32(&mut self) -> f32 {
        let bits = self.mt.next_u32() & ((1 << 24) - 1);
        bits as f32 * (1.0 / (1u32 << 24) as f32)
    }
}

/// Starting point `θ_i ~ U[-2, 2]` shared by every method at `seed`,
/// computed in single precision like the reference scripts and widened to
/// `f64`.
pub fn initial_point(seed: u64, d: usize) -> Vec<f64> {
    let mut u = TorchUniform::new(seed);
    (0..d).map(|_| (u.next_f32() * 4.0 - 2.0) as f64).collect()
}
