//! Block vectors `z = (x, y)` shared by every solver.

use crate::error::{Error, Result};

/// A point `z = (x, y)` stored as one contiguous vector with the split index.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPoint {
    data: Vec<f64>,
    nx: usize,
}

impl BlockPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let nx = x.len();
        let mut data = x;
        data.extend(y);
        Self::from_concat(data, nx)
    }

    /// Splits `z` after the first `nx` entries.
    pub fn from_concat(z: Vec<f64>, nx: usize) -> Result<Self> {
        if nx == 0 || z.len() <= nx {
            return Err(Error::InvalidDimension(format!(
                "need n_x >= 1 and n_y >= 1, got n_x = {nx}, n = {}",
                z.len()
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("BlockPoint"));
        }
        Ok(Self { data: z, nx })
    }

    /// The point `self + scale * dir`, without finiteness or domain checks.
    pub fn shifted(&self, dir: &[f64], scale: f64) -> Self {
        debug_assert_eq!(dir.len(), self.data.len());
        let data = self
            .data
            .iter()
            .zip(dir)
            .map(|(z, d)| z + scale * d)
            .collect();
        Self { data, nx: self.nx }
    }

    pub fn x(&self) -> &[f64] {
        &self.data[..self.nx]
    }

    pub fn y(&self) -> &[f64] {
        &self.data[self.nx..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.data.len() - self.nx
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    /// A stable order-dependent checksum of the bit patterns (FNV-1a).
    pub fn checksum(&self) -> u64 {
        fnv1a(self.data.iter().map(|v| v.to_bits()))
    }
}

pub(crate) fn fnv1a(words: impl Iterator<Item = u64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Negates the trailing `ny` entries: `(v_x, v_y) -> (v_x, -v_y)`.
pub fn flip_y(v: &[f64], nx: usize, ny: usize) -> Result<Vec<f64>> {
    if v.len() != nx + ny {
        return Err(Error::InvalidDimension(format!(
            "vector of length {} does not split into {nx} + {ny}",
            v.len()
        )));
    }
    Ok(v.iter()
        .enumerate()
        .map(|(i, &a)| if i < nx { a } else { -a })
        .collect())
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}
