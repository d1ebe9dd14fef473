//! Portable seeded random stream: xoshiro256** with Box–Muller normals.
//!
//! Seeding expands the 64-bit seed with SplitMix64. Uniforms take the top 53
//! bits of each output. Normals are produced in pairs from two consecutive
//! uniforms `(u₁, u₂)`: first `r·cos(2πu₂)`, then `r·sin(2πu₂)` with
//! `r = √(−2 ln(1 − u₁))`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::linalg::Mat;

#[derive(Clone, Debug)]
pub struct SeededRng {
    inner: Xoshiro256StarStar,
    spare: Option<f64>,
}

impl SeededRng {
    pub const ALGORITHM: &'static str = "xoshiro256**/splitmix64/box-muller";

    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    pub fn uniforms(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.uniform()).collect()
    }

    /// Standard normal matrix, filled in row-major order.
    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> Mat<f64> {
        Mat::from_row_major(rows, cols, self.normals(rows * cols))
    }

    /// Uniform integer in `0..n` by rejection.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Fisher–Yates shuffle, last index first.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
