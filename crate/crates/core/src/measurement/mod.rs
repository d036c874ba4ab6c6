//! Measurement ensembles, row-subset operators, cross-validation matrices and
//! background calibration.
//!
//! A fixed `n×n` ensemble `Φ` is defined by a seed. The operator used at time
//! `t` keeps its first `M_t` rows and rescales them by `√(n/M_t)`, so that
//! Gaussian entries always have variance `1/M_t`. Rows are regenerated on
//! demand and the full ensemble is never stored.

mod calibration;
mod cv;
mod ensemble;
mod rip;

use num_complex::Complex64;

use crate::{Error, Result};

pub use calibration::{calibrate_background, BackgroundCalibration};
pub use cv::CrossValidationMatrix;
pub use ensemble::{EnsembleKind, MeasurementEnsemble, RowSubsetOperator};
pub use rip::{estimate_rip_ratio, RipEnvelope};

/// Compressive measurements: real for Gaussian ensembles, complex for Fourier.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementVector {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl MeasurementVector {
    pub fn len(&self) -> usize {
        match self {
            MeasurementVector::Real(v) => v.len(),
            MeasurementVector::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, MeasurementVector::Complex(_))
    }

    pub fn norm_sq(&self) -> f64 {
        match self {
            MeasurementVector::Real(v) => v.iter().map(|a| a * a).sum(),
            MeasurementVector::Complex(v) => v.iter().map(|a| a.norm_sqr()).sum(),
        }
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, c: f64) -> MeasurementVector {
        match self {
            MeasurementVector::Real(v) => MeasurementVector::Real(v.iter().map(|a| c * a).collect()),
            MeasurementVector::Complex(v) => MeasurementVector::Complex(v.iter().map(|a| a * c).collect()),
        }
    }

    /// The first `m` entries.
    pub fn prefix(&self, m: usize) -> MeasurementVector {
        match self {
            MeasurementVector::Real(v) => MeasurementVector::Real(v[..m].to_vec()),
            MeasurementVector::Complex(v) => MeasurementVector::Complex(v[..m].to_vec()),
        }
    }

    /// `self − other`; both must have the same kind and length.
    pub fn sub(&self, other: &MeasurementVector) -> Result<MeasurementVector> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        match (self, other) {
            (MeasurementVector::Real(a), MeasurementVector::Real(b)) => {
                Ok(MeasurementVector::Real(a.iter().zip(b).map(|(x, y)| x - y).collect()))
            }
            (MeasurementVector::Complex(a), MeasurementVector::Complex(b)) => Ok(MeasurementVector::Complex(
                a.iter().zip(b).map(|(x, y)| x - y).collect(),
            )),
            _ => Err(Error::invalid("cannot mix real and complex measurements")),
        }
    }

    /// `‖self − other‖₂`.
    pub fn distance(&self, other: &MeasurementVector) -> Result<f64> {
        Ok(self.sub(other)?.norm_l2())
    }
}

/// Smallest `r` with `r ≥ 8 ε⁻² ln(1/(2ρ))`: enough cross-validation rows for
/// accuracy `ε ∈ (0, 1)` at confidence `ρ ∈ (0, 1/2)`.
pub fn cv_row_count(epsilon: f64, rho: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    if !(rho > 0.0 && rho < 0.5) {
        return Err(Error::invalid(format!("rho = {rho} must lie in (0, 1/2)")));
    }
    let bound = 8.0 / (epsilon * epsilon) * (1.0 / (2.0 * rho)).ln();
    Ok((bound.ceil() as usize).max(1))
}
