//! Seeded randomness and uniform sphere directions.

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::point::norm2;

/// Name of the generator backing [`SeededRng`], echoed into run-log headers.
pub const RNG_ALGORITHM: &str = "xoshiro256++ (SplitMix64 seeding)";
/// Uniform-to-normal transform used for every Gaussian draw.
pub const NORMAL_TRANSFORM: &str = "ziggurat (rand_distr::StandardNormal)";

/// A reproducible random stream: identical seeds give identical draws.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Xoshiro256PlusPlus,
    seed: u64,
    words: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
            seed,
            words: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm_name(&self) -> &'static str {
        RNG_ALGORITHM
    }

    /// Number of 32/64-bit words consumed so far.
    pub fn position(&self) -> u64 {
        self.words
    }

    pub fn normal(&mut self) -> f64 {
        self.sample(StandardNormal)
    }

    /// Uniform draw on the half-open interval `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.gen::<f64>()
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.words += 1;
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.words += 1;
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.words += dest.len().div_ceil(8) as u64;
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// A unit vector `e` in `R^n`, split as `(e_x, e_y)` by the caller's `n_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    e: Vec<f64>,
}

impl Direction {
    /// Wraps an explicit vector, normalizing it. Used to pin directions in tests.
    pub fn from_vec(v: Vec<f64>) -> Result<Self> {
        let norm = norm2(&v);
        if v.is_empty() || !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidDimension(
                "direction must be a finite nonzero vector".into(),
            ));
        }
        Ok(Self {
            e: v.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.e
    }

    pub fn dim(&self) -> usize {
        self.e.len()
    }

    pub fn ex(&self, nx: usize) -> &[f64] {
        &self.e[..nx]
    }

    pub fn ey(&self, nx: usize) -> &[f64] {
        &self.e[nx..]
    }
}

/// Uniform direction on the Euclidean unit sphere in `R^n`: a normalized
/// vector of independent standard normals.
pub fn sample_sphere(rng: &mut SeededRng, n: usize) -> Result<Direction> {
    if n == 0 {
        return Err(Error::InvalidDimension("sphere dimension must be >= 1".into()));
    }
    loop {
        let g: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let norm = norm2(&g);
        if norm > 0.0 && norm.is_finite() {
            return Ok(Direction {
                e: g.into_iter().map(|a| a / norm).collect(),
            });
        }
    }
}
