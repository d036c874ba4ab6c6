use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::rng::{derive_seed, stream_rng};
use crate::{Error, Result};

const CV_ROWS: u64 = 0xC5;

/// `r × n` Rademacher matrix with entries `±1/√r`.
#[derive(Debug, Clone)]
pub struct CrossValidationMatrix {
    seed: u64,
    matrix: DMatrix<f64>,
}

impl CrossValidationMatrix {
    pub fn new(rows: usize, dim: usize, seed: u64) -> Result<Self> {
        if rows == 0 || dim == 0 {
            return Err(Error::invalid("cross-validation matrix needs r ≥ 1 and n ≥ 1"));
        }
        let v = 1.0 / (rows as f64).sqrt();
        let base = derive_seed(seed, &[CV_ROWS]);
        let mut matrix = DMatrix::zeros(rows, dim);
        for i in 0..rows {
            let mut rng = stream_rng(base, i as u64);
            for j in 0..dim {
                matrix[(i, j)] = if rng.random::<bool>() { v } else { -v };
            }
        }
        Ok(Self { seed, matrix })
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `Ψx`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok((&self.matrix * DVector::from_column_slice(x)).as_slice().to_vec())
    }
}
