//! Seedable, splittable randomness. Every stochastic component owns its own
//! stream derived from (parent seed, label), so adding a consumer never
//! shifts the draws of another.

use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Deterministic RNG. The same seed yields the same stream on every
/// platform; children derived via [`Rng::split`] depend only on the parent
/// seed and the label, not on how much of the parent stream was consumed.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    stream: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            stream: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent child stream from this stream's seed and a
    /// label. Splitting is a pure function of (seed, label).
    pub fn split(&self, label: u64) -> Rng {
        Rng::new(mix(self.seed, label))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.stream.gen::<u64>()
    }

    /// Uniform draw from [0, 1).
    pub fn unit(&mut self) -> f64 {
        self.stream.gen::<f64>()
    }

    /// Uniform draw from [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform index in [0, n). Panics if n = 0.
    pub fn index(&mut self, n: usize) -> usize {
        self.stream.gen_range(0..n)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.stream.sample(StandardNormal)
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.standard_normal();
        }
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        self.fill_standard_normal(&mut v);
        v
    }
}

/// SplitMix64 finalizer; the standard mixer for deriving seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a seed with a label into a new seed.
pub fn mix(seed: u64, label: u64) -> u64 {
    splitmix64(seed ^ splitmix64(label))
}

/// Stateless uniform draw in [0, 1) from a tuple of inputs. Used where a
/// decision must depend only on (seed, ids), independent of any stream
/// position — e.g. per-vehicle per-step lane-change draws.
pub fn hash_unit(seed: u64, a: u64, b: u64) -> f64 {
    let h = splitmix64(mix(mix(seed, a), b));
    // 53 high bits -> [0, 1)
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
