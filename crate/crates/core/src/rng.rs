//! Seeded random streams and the variate source used by the samplers.
//!
//! A stream is identified by `(seed, stream_id)`. The seed keys a ChaCha8
//! generator and the stream id selects its 64-bit nonce, so streams that
//! share a seed never overlap and can be generated in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Source of the primitive random variates every conditional sampler needs.
///
/// Samplers only ever see this trait, which lets tests substitute fixed
/// variates for the real generator.
pub trait Variates {
    /// Uniform on `[0, 1)`.
    fn uniform(&mut self) -> f64;
    fn standard_normal(&mut self) -> f64;
    /// Gamma with density proportional to `w^(shape-1) exp(-rate w)`.
    fn gamma(&mut self, shape: f64, rate: f64) -> f64;
}

/// Descriptor of one reproducible random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Opens the generator positioned at the start of this stream.
    pub fn open(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        StreamRng { rng }
    }

    /// Same seed, different stream id.
    pub fn with_stream(&self, stream_id: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id,
        }
    }

    /// A family of streams derived from this one: the seed is re-keyed from
    /// `(seed, stream_id, label)`, and callers index members by stream id.
    pub fn derive(&self, label: u64) -> Self {
        let key = splitmix64(splitmix64(self.seed ^ splitmix64(self.stream_id)) ^ label);
        Self {
            seed: key,
            stream_id: 0,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha8-backed variate source.
#[derive(Clone, Debug)]
pub struct StreamRng {
    rng: ChaCha8Rng,
}

impl StreamRng {
    pub fn next_u64(&mut self) -> u64 {
        self.rng.random()
    }
}

impl Variates for StreamRng {
    fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    fn gamma(&mut self, shape: f64, rate: f64) -> f64 {
        match Gamma::new(shape, 1.0 / rate) {
            Ok(dist) => dist.sample(&mut self.rng),
            Err(_) => f64::NAN,
        }
    }
}

/// Deterministic stand-in for a generator: every uniform is `uniform`,
/// every normal is `normal`, and every gamma draw returns its mean.
#[derive(Clone, Copy, Debug)]
pub struct FixedVariates {
    pub uniform: f64,
    pub normal: f64,
}

impl FixedVariates {
    /// Zero noise; the uniform sits at 0 so any coin with positive
    /// probability comes up heads.
    pub fn zero() -> Self {
        Self {
            uniform: 0.0,
            normal: 0.0,
        }
    }
}

impl Variates for FixedVariates {
    fn uniform(&mut self) -> f64 {
        self.uniform
    }

    fn standard_normal(&mut self) -> f64 {
        self.normal
    }

    fn gamma(&mut self, shape: f64, rate: f64) -> f64 {
        shape / rate
    }
}
