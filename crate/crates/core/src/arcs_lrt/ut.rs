//! Random-walk track dynamics and unscented propagation of predicted area.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};

use super::warp::{warped_area, AreaMode, TemplateOutline, WarpParams};
use crate::{Error, Result};

/// Sigma-point spread; the state has 4 dimensions and `d + κ = 3`.
const KAPPA: f64 = -1.0;
const STATE_DIM: usize = 4;

/// `p_t = p_{t−1} + η_t`, `η_t ~ N(0, Σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackDynamics {
    covariance: Matrix4<f64>,
    sqrt: Matrix4<f64>,
}

impl TrackDynamics {
    /// Rejects asymmetric or indefinite `Σ`. The square root is the
    /// symmetric one, so singular covariances are fine.
    pub fn new(covariance: Matrix4<f64>) -> Result<Self> {
        let scale = covariance.abs().max().max(f64::MIN_POSITIVE);
        if (covariance - covariance.transpose()).abs().max() > 1e-12 * scale {
            return Err(Error::Factorization("covariance is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(covariance);
        if eig.eigenvalues.iter().any(|&l| l < -1e-12 * scale || !l.is_finite()) {
            return Err(Error::Factorization("covariance is not positive semidefinite".into()));
        }
        let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let sqrt = eig.eigenvectors * Matrix4::from_diagonal(&root) * eig.eigenvectors.transpose();
        Ok(Self { covariance, sqrt })
    }

    pub fn diagonal(d: [f64; 4]) -> Result<Self> {
        Self::new(Matrix4::from_diagonal(&Vector4::from(d)))
    }

    pub fn covariance(&self) -> &Matrix4<f64> {
        &self.covariance
    }

    /// A symmetric `S` with `S·Sᵀ = Σ`.
    pub fn sqrt(&self) -> &Matrix4<f64> {
        &self.sqrt
    }
}

/// Mean and variance of `g(p_{t−1} + η)` for `η ~ N(0, Σ)`, by the unscented
/// transform with `2·4 + 1` sigma points and weights
/// `W₀ = κ/(d+κ)`, `Wᵢ = 1/(2(d+κ))`.
pub fn unscented_transform(
    p_prev: &WarpParams,
    dynamics: &TrackDynamics,
    g: impl Fn(&WarpParams) -> f64,
) -> (f64, f64) {
    let spread = (STATE_DIM as f64 + KAPPA).sqrt();
    let w0 = KAPPA / (STATE_DIM as f64 + KAPPA);
    let wi = 1.0 / (2.0 * (STATE_DIM as f64 + KAPPA));
    let centre = Vector4::from(p_prev.to_array());
    let mut values = Vec::with_capacity(2 * STATE_DIM + 1);
    values.push((w0, g(p_prev)));
    for j in 0..STATE_DIM {
        let offset = dynamics.sqrt().column(j) * spread;
        for point in [centre + offset, centre - offset] {
            values.push((wi, g(&WarpParams::from_array(point.into()))));
        }
    }
    let mean: f64 = values.iter().map(|(w, v)| w * v).sum();
    let var: f64 = values.iter().map(|(w, v)| w * (v - mean) * (v - mean)).sum();
    // a negative centre weight can push the estimate below zero
    (mean, var.max(0.0))
}

/// Predicted sparsity moments for the next frame of one tracked object.
pub fn unscented_moments(
    p_prev: &WarpParams,
    dynamics: &TrackDynamics,
    template: &TemplateOutline,
    factor: usize,
    mode: AreaMode,
) -> (f64, f64) {
    unscented_transform(p_prev, dynamics, |p| warped_area(p, template, factor, mode))
}
