//! Adaptive measurement rate from cross-validation measurements.
//!
//! Each frame, `r` extra Rademacher projections `χ_t = Ψx_t` bound the
//! error of the current `ŝ_t`-term estimate. A maximum-likelihood test over
//! sparsity hypotheses then picks `ŝ_{t+1}`, and the phase diagram turns it
//! into the next measurement count.

mod moments;

use crate::decoder::{truncate, DecodeResult, Decoder, SolverConfig};
use crate::measurement::{cv_row_count, BackgroundCalibration, CrossValidationMatrix, MeasurementVector};
use crate::phase_diagram::{lookup, LookupPolicy, PhaseDiagram};
use crate::signal_model::{ForegroundModel, SignalVector};
use crate::{Error, Result};

pub use moments::{alt_moments, alt_moments_formal, null_moments, select_hypothesis, HypothesisMoments};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub epsilon: f64,
    pub rho: f64,
    pub rows: usize,
    pub model: ForegroundModel,
    pub dim: usize,
}

impl CvConfig {
    /// Uses the minimal row count for `(ε, ρ)`.
    pub fn new(epsilon: f64, rho: f64, model: ForegroundModel, dim: usize) -> Result<Self> {
        Self::with_rows(epsilon, rho, cv_row_count(epsilon, rho)?, model, dim)
    }

    pub fn with_rows(epsilon: f64, rho: f64, rows: usize, model: ForegroundModel, dim: usize) -> Result<Self> {
        let needed = cv_row_count(epsilon, rho)?;
        if rows < needed {
            return Err(Error::invalid(format!(
                "{rows} cross-validation rows are fewer than the {needed} required"
            )));
        }
        if dim == 0 {
            return Err(Error::invalid("ambient dimension must be positive"));
        }
        Ok(Self {
            epsilon,
            rho,
            rows,
            model,
            dim,
        })
    }
}

/// `(1 + ε)² ‖γ − Ψ f̂‖₂²`.
pub fn cv_error_bound(gamma: &[f64], psi: &CrossValidationMatrix, f_hat: &[f64], epsilon: f64) -> Result<f64> {
    let projected = psi.apply(f_hat)?;
    if projected.len() != gamma.len() {
        return Err(Error::DimensionMismatch {
            expected: projected.len(),
            actual: gamma.len(),
        });
    }
    let err: f64 = gamma.iter().zip(&projected).map(|(g, p)| (g - p) * (g - p)).sum();
    Ok((1.0 + epsilon) * (1.0 + epsilon) * err)
}

/// Everything one controller step computed.
#[derive(Debug, Clone)]
pub struct CvStep {
    pub s_hat: usize,
    /// `ξ_t = y_t − β_t`.
    pub xi: MeasurementVector,
    /// `γ_t = χ_t − ζ`.
    pub gamma: Vec<f64>,
    /// The decoder output before truncation.
    pub decoded: DecodeResult,
    pub decode_ok: bool,
    /// `f̂_t^{(ŝ_t)}`.
    pub estimate: SignalVector,
    pub cv_bound: f64,
    pub k_star_star: usize,
    pub s_hat_next: usize,
    pub m_next: usize,
}

/// Measurement count for `ŝ`, clamped to `n` when no grid cell qualifies.
pub(crate) fn rows_for(pd: &PhaseDiagram, s_hat: usize, policy: &LookupPolicy) -> Result<usize> {
    match lookup(pd, s_hat, policy) {
        Ok(m) => Ok(m.min(pd.dim)),
        Err(Error::Unattainable { .. }) => Ok(pd.dim),
        Err(e) => Err(e),
    }
}

/// Decodes, reporting non-convergence through a flag instead of an error.
pub(crate) fn decode_lenient(
    decoder: &Decoder,
    xi: &MeasurementVector,
    solver: &SolverConfig,
) -> Result<(DecodeResult, bool)> {
    match decoder.decode(xi, solver) {
        Ok(r) => Ok((r, true)),
        Err(Error::NotConverged(partial)) => Ok((*partial, false)),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone)]
pub struct CvController {
    pub config: CvConfig,
    pub policy: LookupPolicy,
    pd: PhaseDiagram,
    s_hat: usize,
}

impl CvController {
    pub fn new(config: CvConfig, pd: PhaseDiagram, policy: LookupPolicy, initial_s_hat: usize) -> Result<Self> {
        if pd.dim != config.dim {
            return Err(Error::invalid(format!(
                "phase diagram is for n = {}, controller for n = {}",
                pd.dim, config.dim
            )));
        }
        Ok(Self {
            config,
            policy,
            pd,
            s_hat: initial_s_hat.min(config.dim),
        })
    }

    pub fn s_hat(&self) -> usize {
        self.s_hat
    }

    /// `M_t` for the current estimate.
    pub fn measurement_count(&self) -> Result<usize> {
        rows_for(&self.pd, self.s_hat, &self.policy)
    }

    /// One pass of the controller on frame measurements `y_t = Φ_t x_t` and
    /// `χ_t = Ψ x_t`. `decoder` must wrap the `M_t`-row operator.
    ///
    /// When decoding fails to converge the estimate is kept but the next
    /// sparsity is the fallback `min(2·max(ŝ_t, 1), n)`.
    pub fn step(
        &mut self,
        y: &MeasurementVector,
        chi: &[f64],
        calibration: &BackgroundCalibration,
        decoder: &Decoder,
        psi: &CrossValidationMatrix,
        solver: &SolverConfig,
    ) -> Result<CvStep> {
        let n = self.config.dim;
        let s_hat = self.s_hat;
        let xi = calibration.foreground_measurements(y)?;
        let gamma = calibration.cv_foreground(chi)?;
        let (decoded, decode_ok) = decode_lenient(decoder, &xi, solver)?;
        let estimate = truncate(&decoded.estimate, s_hat);
        let cv_bound = cv_error_bound(&gamma, psi, &estimate, self.config.epsilon)?;
        let moments = HypothesisMoments::new(s_hat, n, self.config.model.sigma_b_sq(), self.config.model.tau())?;
        let k_star_star = select_hypothesis(cv_bound, &moments);
        let s_hat_next = if !decode_ok {
            (2 * s_hat.max(1)).min(n)
        } else if k_star_star == 0 {
            estimate.count_at_least(self.config.model.tau())
        } else {
            k_star_star
        }
        .min(n);
        self.s_hat = s_hat_next;
        let m_next = self.measurement_count()?;
        Ok(CvStep {
            s_hat,
            xi,
            gamma,
            decoded,
            decode_ok,
            estimate,
            cv_bound,
            k_star_star,
            s_hat_next,
            m_next,
        })
    }
}
