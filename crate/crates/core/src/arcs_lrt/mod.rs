//! Adaptive measurement rate from low-resolution object tracks.
//!
//! A co-located camera sees the scene downsampled by `D`. Object tracks on
//! that image predict the foreground area of the next frame; the predicted
//! area's distribution feeds a penalised expected-error cost whose minimiser
//! is the next sparsity estimate.

mod cost;
mod tracker;
mod ut;
mod warp;

use std::f64::consts::SQRT_2;

use crate::arcs_cv::{decode_lenient, rows_for};
use crate::decoder::{DecodeResult, Decoder, SolverConfig};
use crate::measurement::{BackgroundCalibration, MeasurementVector};
use crate::phase_diagram::{LookupPolicy, PhaseDiagram};
use crate::signal_model::{ForegroundModel, SignalVector};
use crate::{Error, Result};

pub use cost::{discretize_pmf, expected_cost, minimize_cost, recovery_constant, CostParams, CostTable, SparsityPmf};
pub use tracker::{blob_track, blob_track_slices, read_tracks, write_tracks, TrackSequence};
pub use ut::{unscented_moments, unscented_transform, TrackDynamics};
pub use warp::{
    downsample, downsample_slice, low_to_high, warp_to_sparsity, warped_area, AreaMode, TemplateOutline, WarpParams,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LrtConfig {
    pub lambda: f64,
    pub factor: usize,
    pub delta: f64,
    pub model: ForegroundModel,
    /// High-resolution side `N`; `n = N²`.
    pub side: usize,
    pub mode: AreaMode,
    pub dynamics: TrackDynamics,
    pub template: TemplateOutline,
}

impl LrtConfig {
    pub fn new(
        lambda: f64,
        factor: usize,
        model: ForegroundModel,
        side: usize,
        dynamics: TrackDynamics,
    ) -> Result<Self> {
        let cfg = Self {
            lambda,
            factor,
            delta: 0.25,
            model,
            side,
            mode: AreaMode::Geometric,
            dynamics,
            template: TemplateOutline::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda = {} must be positive", self.lambda)));
        }
        if self.factor == 0 || self.side == 0 || !self.side.is_multiple_of(self.factor) {
            return Err(Error::invalid(format!(
                "downsampling factor {} must divide the side {}",
                self.factor, self.side
            )));
        }
        if !(self.delta > 0.0 && self.delta < SQRT_2 - 1.0) {
            return Err(Error::invalid(format!(
                "delta = {} must lie in (0, √2 − 1)",
                self.delta
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.side * self.side
    }

    pub fn low_res_side(&self) -> usize {
        self.side / self.factor
    }

    /// `L²`, the side-information overhead per frame.
    pub fn low_res_pixels(&self) -> usize {
        self.low_res_side() * self.low_res_side()
    }

    pub fn cost_params(&self) -> Result<CostParams> {
        Ok(CostParams {
            lambda: self.lambda,
            c0: recovery_constant(self.delta)?,
            tau: self.model.tau(),
            sigma_b: self.model.sigma_b(),
            dim: self.dim(),
        })
    }

    /// Summed unscented moments of next-frame area over all tracked objects.
    pub fn predict(&self, tracks: &[WarpParams]) -> (f64, f64) {
        tracks.iter().fold((0.0, 0.0), |(m, v), p| {
            let (mi, vi) = unscented_moments(p, &self.dynamics, &self.template, self.factor, self.mode);
            (m + mi, v + vi)
        })
    }

    /// `ŝ_{t+1}` from the current tracks.
    pub fn estimate_from_tracks(&self, tracks: &[WarpParams]) -> Result<(usize, f64, f64)> {
        let (mu, var) = self.predict(tracks);
        let q = discretize_pmf(mu, var, self.dim());
        Ok((minimize_cost(&q, self.cost_params()?)?, mu, var))
    }
}

#[derive(Debug, Clone)]
pub struct LrtStep {
    pub s_hat: usize,
    pub xi: MeasurementVector,
    pub decoded: DecodeResult,
    pub decode_ok: bool,
    pub estimate: SignalVector,
    pub tracked: bool,
    /// Predicted sparsity moments; zero when untracked.
    pub mu_pred: f64,
    pub sigma_pred: f64,
    pub s_hat_next: usize,
    pub m_next: usize,
}

#[derive(Debug, Clone)]
pub struct LrtController {
    pub config: LrtConfig,
    pub policy: LookupPolicy,
    pd: PhaseDiagram,
    s_hat: usize,
}

impl LrtController {
    pub fn new(config: LrtConfig, pd: PhaseDiagram, policy: LookupPolicy, initial_s_hat: usize) -> Result<Self> {
        config.validate()?;
        if pd.dim != config.dim() {
            return Err(Error::invalid(format!(
                "phase diagram is for n = {}, controller for n = {}",
                pd.dim,
                config.dim()
            )));
        }
        let n = config.dim();
        Ok(Self {
            config,
            policy,
            pd,
            s_hat: initial_s_hat.min(n),
        })
    }

    pub fn s_hat(&self) -> usize {
        self.s_hat
    }

    /// Compressive measurement count `M_t`, excluding the `L²` overhead.
    pub fn measurement_count(&self) -> Result<usize> {
        rows_for(&self.pd, self.s_hat, &self.policy)
    }

    /// One pass on `y_t = Φ_t x_t` with this frame's tracks, `None` when
    /// the objects could not be tracked. Untracked frames fall back to the
    /// count of decoded entries at or above `τ`.
    pub fn step(
        &mut self,
        y: &MeasurementVector,
        tracks: Option<&[WarpParams]>,
        calibration: &BackgroundCalibration,
        decoder: &Decoder,
        solver: &SolverConfig,
    ) -> Result<LrtStep> {
        let s_hat = self.s_hat;
        let xi = calibration.foreground_measurements(y)?;
        let (decoded, decode_ok) = decode_lenient(decoder, &xi, solver)?;
        let estimate = decoded.estimate.clone();
        let (s_hat_next, mu_pred, var_pred) = match tracks {
            Some(t) => self.config.estimate_from_tracks(t)?,
            None => (estimate.count_at_least(self.config.model.tau()), 0.0, 0.0),
        };
        self.s_hat = s_hat_next.min(self.config.dim());
        let m_next = self.measurement_count()?;
        Ok(LrtStep {
            s_hat,
            xi,
            decoded,
            decode_ok,
            estimate,
            tracked: tracks.is_some(),
            mu_pred,
            sigma_pred: var_pred.sqrt(),
            s_hat_next: self.s_hat,
            m_next,
        })
    }
}
