//! Points of C^n, their real coordinates and bounding boxes.
//!
//! Real coordinates are interleaved: `(x1, y1, x2, y2, ...)` with `z_j = x_j + i y_j`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vec<Complex64>;

pub fn to_real(p: &[Complex64]) -> Vec<f64> {
    p.iter().flat_map(|z| [z.re, z.im]).collect()
}

pub fn from_real(x: &[f64]) -> Point {
    x.chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Euclidean Hermitian product `sum a_j conj(b_j)`.
pub fn hdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// Axis-aligned box in the 2n real coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || !lo.len().is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "bounding box needs an even, positive number of intervals (got {} / {})",
                lo.len(),
                hi.len()
            )));
        }
        for (k, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Invalid(format!(
                    "empty or invalid bounding-box interval {k}: [{a}, {b}]"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// Box `[-r, r]` in every real coordinate.
    pub fn symmetric(n: usize, r: f64) -> Self {
        Self {
            lo: vec![-r; 2 * n],
            hi: vec![r; 2 * n],
        }
    }

    /// Number of complex coordinates.
    pub fn n(&self) -> usize {
        self.lo.len() / 2
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    /// Map a point of the unit cube into the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(t, (a, b))| a + t * (b - a))
            .collect()
    }

    /// `g` cell-centred values along coordinate `k`, symmetric about the midpoint so the
    /// midpoint itself is hit exactly when `g` is odd.
    pub fn axis_values(&self, k: usize, g: usize) -> Vec<f64> {
        let (a, b) = (self.lo[k], self.hi[k]);
        let c = 0.5 * (a + b);
        let step = (b - a) / g as f64;
        let half = (g as f64 - 1.0) / 2.0;
        (0..g).map(|i| c + (i as f64 - half) * step).collect()
    }
}

/// Halton sequence with a seeded Cranley-Patterson rotation.
pub struct Halton {
    shift: Vec<f64>,
    index: u64,
}

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

impl Halton {
    pub fn new(dims: usize, seed: u64) -> Self {
        assert!(
            dims <= PRIMES.len(),
            "Halton sequence supports at most 24 dimensions"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            shift: (0..dims).map(|_| rng.gen::<f64>()).collect(),
            index: 1,
        }
    }

    fn radical_inverse(mut i: u64, base: u64) -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        let b = base as f64;
        while i > 0 {
            f /= b;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }
}

impl Iterator for Halton {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let i = self.index;
        self.index += 1;
        Some(
            self.shift
                .iter()
                .zip(PRIMES)
                .map(|(s, p)| (Self::radical_inverse(i, p) + s).fract())
                .collect(),
        )
    }
}
