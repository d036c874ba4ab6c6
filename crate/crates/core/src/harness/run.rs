//! Sequential strategy runs over a dataset.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use super::config::{DatasetSource, ExperimentConfig, Strategy, TrackSource};
use super::dataset::Dataset;
use crate::arcs_cv::{decode_lenient, null_moments, rows_for, CvConfig, CvController};
use crate::arcs_lrt::{blob_track_slices, downsample_slice, LrtConfig, LrtController, TrackDynamics, TrackSequence};
use crate::decoder::{truncate, Decoder};
use crate::measurement::{calibrate_background, BackgroundCalibration, CrossValidationMatrix, MeasurementEnsemble};
use crate::phase_diagram::{LookupPolicy, PhaseDiagram};
use crate::rng::derive_seed;
use crate::signal_model::{synthesize_sequence, SignalVector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FrameStatus {
    Ok,
    NotConverged,
    Failed(String),
}

impl std::fmt::Display for FrameStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FrameStatus::Ok => f.write_str("ok"),
            FrameStatus::NotConverged => f.write_str("not_converged"),
            FrameStatus::Failed(msg) => write!(f, "failed: {}", msg.replace([',', '\n'], ";")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMetrics {
    pub t: usize,
    pub s_true: Option<usize>,
    pub s_hat: usize,
    /// Compressive measurements only.
    pub m_t: usize,
    /// `m_t` plus side-information overhead.
    pub m_total: usize,
    pub l2_error: f64,
    pub iterations: usize,
    pub status: FrameStatus,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvDiagnostics {
    pub t: usize,
    pub s_hat: usize,
    pub cv_bound: f64,
    pub mu0: f64,
    pub k_star_star: usize,
    pub s_hat_next: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrtDiagnostics {
    pub t: usize,
    pub s_true: Option<usize>,
    pub s_hat: usize,
    pub m_total: usize,
    pub mu_pred: f64,
    pub sigma_pred: f64,
    pub l2_error: f64,
    pub tracked: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub strategy: Strategy,
    pub dim: usize,
    /// Side-information measurements added to every frame.
    pub overhead: usize,
    pub metrics: Vec<FrameMetrics>,
    pub cv: Vec<CvDiagnostics>,
    pub lrt: Vec<LrtDiagnostics>,
}

/// Dataset seed derived from the run seed.
pub fn dataset_seed(seed: u64) -> u64 {
    derive_seed(seed, &[0xDA7A])
}

/// Synthesises or loads the configured dataset, applying the frame limit.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let mut dataset = match &cfg.dataset {
        DatasetSource::Synthetic(scene) => {
            let mut scene = scene.clone();
            scene.background_frames = cfg.calibration_frames;
            if let Some(frames) = cfg.frames {
                scene.frames = frames;
            }
            Dataset::from_synthetic(synthesize_sequence(&scene, dataset_seed(cfg.seed))?)
        }
        DatasetSource::Directory(dir) => Dataset::load(dir, cfg.calibration_frames)?,
    };
    if let Some(frames) = cfg.frames {
        dataset.truncate(frames);
    }
    if dataset.is_empty() {
        return Err(Error::invalid("dataset has no frames"));
    }
    Ok(dataset)
}

struct DecoderCache {
    ensemble: MeasurementEnsemble,
    decoders: HashMap<usize, Decoder>,
}

impl DecoderCache {
    fn get(&mut self, rows: usize) -> Result<&Decoder> {
        if !self.decoders.contains_key(&rows) {
            let op = self.ensemble.operator(rows)?;
            self.decoders.insert(rows, Decoder::new(&op)?);
        }
        Ok(&self.decoders[&rows])
    }
}

/// Shared per-run state: ensemble, calibration, lookup policy, references.
struct RunContext<'a> {
    cfg: &'a ExperimentConfig,
    dataset: &'a Dataset,
    policy: LookupPolicy,
    cache: DecoderCache,
    reference: Vec<SignalVector>,
}

fn mean_background(dataset: &Dataset) -> Vec<f64> {
    let mut mean = vec![0.0; dataset.dim()];
    for b in &dataset.background_frames {
        for (m, v) in mean.iter_mut().zip(b.iter()) {
            *m += v;
        }
    }
    let j = dataset.background_frames.len().max(1) as f64;
    mean.iter_mut().for_each(|m| *m /= j);
    mean
}

impl<'a> RunContext<'a> {
    fn new(cfg: &'a ExperimentConfig, dataset: &'a Dataset, pd: &'a PhaseDiagram) -> Result<Self> {
        let n = dataset.dim();
        if pd.dim != n {
            return Err(Error::invalid(format!(
                "phase diagram is for n = {}, dataset frames have n = {n}",
                pd.dim
            )));
        }
        if dataset.background_frames.is_empty() {
            return Err(Error::invalid("dataset has no background-only frames for calibration"));
        }
        let policy = LookupPolicy::new(cfg.tau_d, cfg.m_floor()?)?;
        let ensemble = MeasurementEnsemble::new(cfg.ensemble, n, cfg.ensemble_seed)?;
        let reference = match &dataset.foregrounds {
            Some(f) => f.clone(),
            None => {
                let b = SignalVector::new(mean_background(dataset));
                dataset.frames.iter().map(|x| x.sub(&b)).collect()
            }
        };
        Ok(Self {
            cfg,
            dataset,
            policy,
            cache: DecoderCache {
                ensemble,
                decoders: HashMap::new(),
            },
            reference,
        })
    }

    fn calibration(&self, psi: Option<&CrossValidationMatrix>) -> Result<BackgroundCalibration> {
        let frames = &self.dataset.background_frames;
        let j = self.cfg.calibration_frames.min(frames.len());
        calibrate_background(&frames[..j], &self.cache.ensemble, psi)
    }

    fn s_true(&self, t: usize) -> Option<usize> {
        self.dataset.sparsity.as_ref().map(|s| s[t - 1])
    }

    fn error(&self, t: usize, estimate: &SignalVector) -> f64 {
        self.reference[t - 1].distance(estimate)
    }

    fn failed(&self, t: usize, s_hat: usize, m_t: usize, overhead: usize, e: Error, started: Instant) -> FrameMetrics {
        FrameMetrics {
            t,
            s_true: self.s_true(t),
            s_hat,
            m_t,
            m_total: m_t + overhead,
            l2_error: self.reference[t - 1].norm_l2(),
            iterations: 0,
            status: FrameStatus::Failed(e.to_string()),
            wall_time: started.elapsed(),
        }
    }
}

fn status(ok: bool) -> FrameStatus {
    if ok {
        FrameStatus::Ok
    } else {
        FrameStatus::NotConverged
    }
}

/// Runs with the true sparsity of every frame as the estimate.
pub fn run_oracle(cfg: &ExperimentConfig, dataset: &Dataset, pd: &PhaseDiagram) -> Result<RunOutput> {
    let truth = dataset
        .sparsity
        .as_ref()
        .ok_or_else(|| Error::invalid("the oracle strategy needs ground-truth sparsity"))?;
    let mut ctx = RunContext::new(cfg, dataset, pd)?;
    let calibration = ctx.calibration(None)?;
    let mut metrics = Vec::with_capacity(dataset.len());
    for (i, x) in dataset.frames.iter().enumerate() {
        let t = i + 1;
        let started = Instant::now();
        let s = truth[i];
        let m_t = rows_for(pd, s, &ctx.policy)?;
        let frame = (|| {
            let decoder = ctx.cache.get(m_t)?;
            let y = decoder.operator().apply(x)?;
            let xi = calibration.foreground_measurements(&y)?;
            decode_lenient(decoder, &xi, &cfg.solver)
        })();
        metrics.push(match frame {
            Ok((decoded, ok)) => FrameMetrics {
                t,
                s_true: Some(s),
                s_hat: s,
                m_t,
                m_total: m_t,
                l2_error: ctx.error(t, &truncate(&decoded.estimate, s)),
                iterations: decoded.iterations,
                status: status(ok),
                wall_time: started.elapsed(),
            },
            Err(e) => ctx.failed(t, s, m_t, 0, e, started),
        });
    }
    Ok(RunOutput {
        strategy: Strategy::Oracle,
        dim: dataset.dim(),
        overhead: 0,
        metrics,
        cv: Vec::new(),
        lrt: Vec::new(),
    })
}

fn run_cv(cfg: &ExperimentConfig, dataset: &Dataset, pd: &PhaseDiagram) -> Result<RunOutput> {
    let n = dataset.dim();
    let mut ctx = RunContext::new(cfg, dataset, pd)?;
    let rows = cfg.cv.row_count()?;
    let cv_cfg = CvConfig::with_rows(cfg.cv.epsilon, cfg.cv.rho, rows, cfg.model, n)?;
    let psi = CrossValidationMatrix::new(rows, n, cfg.cv.seed)?;
    let calibration = ctx.calibration(Some(&psi))?;
    let mut controller = CvController::new(cv_cfg, pd.clone(), ctx.policy, cfg.initial_s_hat)?;
    let mut metrics = Vec::with_capacity(dataset.len());
    let mut diagnostics = Vec::with_capacity(dataset.len());
    for (i, x) in dataset.frames.iter().enumerate() {
        let t = i + 1;
        let started = Instant::now();
        let s_hat = controller.s_hat();
        let m_t = controller.measurement_count()?;
        let step = (|| {
            let decoder = ctx.cache.get(m_t)?;
            let y = decoder.operator().apply(x)?;
            let chi = psi.apply(x)?;
            controller.step(&y, &chi, &calibration, decoder, &psi, &cfg.solver)
        })();
        match step {
            Ok(step) => {
                metrics.push(FrameMetrics {
                    t,
                    s_true: ctx.s_true(t),
                    s_hat,
                    m_t,
                    m_total: m_t + rows,
                    l2_error: ctx.error(t, &step.estimate),
                    iterations: step.decoded.iterations,
                    status: status(step.decode_ok),
                    wall_time: started.elapsed(),
                });
                diagnostics.push(CvDiagnostics {
                    t,
                    s_hat,
                    cv_bound: step.cv_bound,
                    mu0: null_moments(s_hat, n, cfg.model.sigma_b_sq())?.0,
                    k_star_star: step.k_star_star,
                    s_hat_next: step.s_hat_next,
                });
            }
            Err(e) => metrics.push(ctx.failed(t, s_hat, m_t, rows, e, started)),
        }
    }
    Ok(RunOutput {
        strategy: Strategy::ArcsCv,
        dim: n,
        overhead: rows,
        metrics,
        cv: diagnostics,
        lrt: Vec::new(),
    })
}

fn lrt_tracks(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<TrackSequence> {
    let factor = cfg.lrt.factor;
    match &cfg.lrt.tracks {
        TrackSource::Manual => dataset
            .manual_tracks(factor)
            .ok_or_else(|| Error::invalid("manual tracks need ground-truth boxes or a tracks.csv")),
        TrackSource::File(path) => crate::arcs_lrt::read_tracks(path, dataset.len()),
        TrackSource::Blob => {
            let low = dataset.side / factor;
            let background = downsample_slice(&mean_background(dataset), dataset.side, factor)?;
            dataset
                .frames
                .iter()
                .map(|x| {
                    let frame = downsample_slice(x, dataset.side, factor)?;
                    Ok(blob_track_slices(&frame, &background, low, cfg.lrt.blob_threshold)?.map(|p| vec![p]))
                })
                .collect()
        }
    }
}

fn run_lrt(cfg: &ExperimentConfig, dataset: &Dataset, pd: &PhaseDiagram) -> Result<RunOutput> {
    let n = dataset.dim();
    let mut ctx = RunContext::new(cfg, dataset, pd)?;
    let calibration = ctx.calibration(None)?;
    let lrt = &cfg.lrt;
    let mut lrt_cfg = LrtConfig::new(
        lrt.lambda,
        lrt.factor,
        cfg.model,
        dataset.side,
        TrackDynamics::diagonal(lrt.sigma)?,
    )?;
    lrt_cfg.mode = lrt.mode;
    lrt_cfg.delta = lrt.delta;
    lrt_cfg.validate()?;
    let overhead = lrt_cfg.low_res_pixels();
    let tracks = lrt_tracks(cfg, dataset)?;
    let mut controller = LrtController::new(lrt_cfg, pd.clone(), ctx.policy, cfg.initial_s_hat)?;
    let mut metrics = Vec::with_capacity(dataset.len());
    let mut diagnostics = Vec::with_capacity(dataset.len());
    for (i, x) in dataset.frames.iter().enumerate() {
        let t = i + 1;
        let started = Instant::now();
        let s_hat = controller.s_hat();
        let m_t = controller.measurement_count()?;
        let step = (|| {
            let decoder = ctx.cache.get(m_t)?;
            let y = decoder.operator().apply(x)?;
            controller.step(&y, tracks[i].as_deref(), &calibration, decoder, &cfg.solver)
        })();
        match step {
            Ok(step) => {
                let m = FrameMetrics {
                    t,
                    s_true: ctx.s_true(t),
                    s_hat,
                    m_t,
                    m_total: m_t + overhead,
                    l2_error: ctx.error(t, &step.estimate),
                    iterations: step.decoded.iterations,
                    status: status(step.decode_ok),
                    wall_time: started.elapsed(),
                };
                diagnostics.push(LrtDiagnostics {
                    t,
                    s_true: m.s_true,
                    s_hat,
                    m_total: m.m_total,
                    mu_pred: step.mu_pred,
                    sigma_pred: step.sigma_pred,
                    l2_error: m.l2_error,
                    tracked: step.tracked,
                });
                metrics.push(m);
            }
            Err(e) => metrics.push(ctx.failed(t, s_hat, m_t, overhead, e, started)),
        }
    }
    Ok(RunOutput {
        strategy: Strategy::ArcsLrt,
        dim: n,
        overhead,
        metrics,
        cv: Vec::new(),
        lrt: diagnostics,
    })
}

/// Runs the configured strategy over every frame in order.
pub fn run_strategy(cfg: &ExperimentConfig, dataset: &Dataset, pd: &PhaseDiagram) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.strategy {
        Strategy::Oracle => run_oracle(cfg, dataset, pd),
        Strategy::ArcsCv => run_cv(cfg, dataset, pd),
        Strategy::ArcsLrt => run_lrt(cfg, dataset, pd),
    }
}
