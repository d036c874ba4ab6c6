//! Images, vectorization, and the background + foreground signal model.
//!
//! An observed image is `x_t = f_t + b`: a static background `b` plus a
//! foreground `f_t` whose components are, independently,
//!
//! * uniform on `[-1, -τ] ∪ [τ, 1]` on the foreground support `F_t`,
//! * zero-mean Gaussian with variance `σ_b²` elsewhere.

mod pgm;
mod scene;

use std::ops::{Deref, DerefMut};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng;
use crate::{Error, Result};

pub use pgm::{read_ground_truth, read_pgm, write_ground_truth, write_pgm, GroundTruthRow};
pub use scene::{
    synthesize_sequence, BackgroundPattern, GroundTruthSequence, ObjectSpec, Rect, SceneConfig, SyntheticSequence,
};

/// A square grayscale image with intensities in `[0, 1]`, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    side: usize,
    pixels: Vec<f64>,
}

impl Frame {
    /// Builds a frame from column-major pixels.
    pub fn new(side: usize, pixels: Vec<f64>) -> Result<Self> {
        if side == 0 {
            return Err(Error::invalid("frame side length must be positive"));
        }
        if pixels.len() != side * side {
            return Err(Error::DimensionMismatch {
                expected: side * side,
                actual: pixels.len(),
            });
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("pixel intensity {bad} outside [0, 1]")));
        }
        Ok(Frame { side, pixels })
    }

    /// Builds a frame from row-major nested rows, `rows[r][c]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let side = rows.len();
        let mut pixels = vec![0.0; side * side];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != side {
                return Err(Error::DimensionMismatch {
                    expected: side,
                    actual: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                pixels[c * side + r] = v;
            }
        }
        Frame::new(side, pixels)
    }

    pub fn constant(side: usize, value: f64) -> Result<Self> {
        Frame::new(side, vec![value; side * side])
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Column-major pixel buffer.
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[col * self.side + row]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }
}

/// A length-`n` real vector; the vectorized form of an `N×N` image, `n = N²`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignalVector(Vec<f64>);

impl SignalVector {
    pub fn new(values: Vec<f64>) -> Self {
        SignalVector(values)
    }

    pub fn zeros(dim: usize) -> Self {
        SignalVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_l1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self − other‖₂`.
    pub fn distance(&self, other: &SignalVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Number of components with `|v| ≥ threshold`.
    pub fn count_at_least(&self, threshold: f64) -> usize {
        self.0.iter().filter(|v| v.abs() >= threshold).count()
    }

    pub fn add(&self, other: &SignalVector) -> SignalVector {
        SignalVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &SignalVector) -> SignalVector {
        SignalVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scaled(&self, c: f64) -> SignalVector {
        SignalVector(self.0.iter().map(|v| c * v).collect())
    }
}

impl Deref for SignalVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for SignalVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for SignalVector {
    fn from(v: Vec<f64>) -> Self {
        SignalVector(v)
    }
}

/// Column-major vectorization of a frame.
pub fn vectorize(frame: &Frame) -> SignalVector {
    SignalVector(frame.pixels.clone())
}

/// Inverse of [`vectorize`]; fails if the vector is not a valid `side×side`
/// image in `[0, 1]`.
pub fn devectorize(signal: &SignalVector, side: usize) -> Result<Frame> {
    Frame::new(side, signal.0.clone())
}

/// Distribution parameters of the foreground model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForegroundModel {
    tau: f64,
    sigma_b_sq: f64,
}

impl ForegroundModel {
    /// Requires `0 < τ < 1` and `0 ≤ σ_b² < τ²`.
    pub fn new(tau: f64, sigma_b_sq: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::invalid(format!("tau = {tau} must lie in (0, 1)")));
        }
        if !(sigma_b_sq >= 0.0 && sigma_b_sq < tau * tau) {
            return Err(Error::invalid(format!(
                "sigma_b_sq = {sigma_b_sq} must lie in [0, tau²)"
            )));
        }
        Ok(ForegroundModel { tau, sigma_b_sq })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sigma_b_sq(&self) -> f64 {
        self.sigma_b_sq
    }

    pub fn sigma_b(&self) -> f64 {
        self.sigma_b_sq.sqrt()
    }

    /// One draw from `U([-1, -τ] ∪ [τ, 1])`.
    pub fn draw_foreground<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let magnitude = self.tau + (1.0 - self.tau) * rng.random::<f64>();
        if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    }

    /// One draw from `N(0, σ_b²)`.
    pub fn draw_background<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.sigma_b() * z
    }
}

/// Draws a foreground vector: uniform-magnitude draws on `support`, Gaussian
/// background residuals everywhere else. Deterministic given `seed`.
pub fn sample_foreground(model: &ForegroundModel, support: &[usize], dim: usize, seed: u64) -> Result<SignalVector> {
    let mut on_support = vec![false; dim];
    for &i in support {
        if i >= dim {
            return Err(Error::IndexOutOfRange { index: i, dim });
        }
        on_support[i] = true;
    }
    let mut rng = rng::rng_for(seed, &[0xF0]);
    let values = on_support
        .iter()
        .map(|&fg| {
            if fg {
                model.draw_foreground(&mut rng)
            } else {
                model.draw_background(&mut rng)
            }
        })
        .collect();
    Ok(SignalVector(values))
}
