//! Empirical phase diagrams and the sparsity → measurement-count lookup.
//!
//! A diagram holds the fraction of successful ℓ1 recoveries on a grid of
//! undersampling ratios `M/n` (columns) and sparsity ratios `s/M` (rows).

mod bounds;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::index::sample;

use crate::decoder::{Decoder, SolverConfig};
use crate::measurement::{EnsembleKind, MeasurementEnsemble, MeasurementVector};
use crate::rng::{derive_seed, rng_for};
use crate::signal_model::{sample_foreground, ForegroundModel, SignalVector};
use crate::{svg, Error, Result};

pub use bounds::{max_sparsity_fraction, min_rows_theoretical, success_probability_bound};

const ENSEMBLE_STREAM: u64 = 0xE5;
const TRIAL_STREAM: u64 = 0x7A;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagramConfig {
    pub kind: EnsembleKind,
    pub dim: usize,
    /// Strictly increasing values in `(0, 1]`.
    pub m_over_n: Vec<f64>,
    /// Strictly increasing values in `(0, 1]`.
    pub s_over_m: Vec<f64>,
    pub trials: usize,
    /// Success means `‖f − f̂‖₂ / ‖f‖₂ ≤ tolerance`.
    pub tolerance: f64,
    pub seed: u64,
    /// Foreground threshold of the trial signals.
    pub tau: f64,
    pub solver: SolverConfig,
}

/// `k` evenly spaced points `1/k, 2/k, …, 1`.
pub fn uniform_axis(k: usize) -> Vec<f64> {
    (1..=k).map(|i| i as f64 / k as f64).collect()
}

impl PhaseDiagramConfig {
    /// 16×16 uniform grid, 25 trials per cell, tolerance 1e-3.
    pub fn desk(kind: EnsembleKind, dim: usize, seed: u64) -> Self {
        Self {
            kind,
            dim,
            m_over_n: uniform_axis(16),
            s_over_m: uniform_axis(16),
            trials: 25,
            tolerance: 1e-3,
            seed,
            tau: 0.1,
            solver: SolverConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("at least one trial per cell is required"));
        }
        check_axis("M/n", &self.m_over_n)?;
        check_axis("s/M", &self.s_over_m)?;
        for &m in &self.m_over_n {
            let rows = cell_rows(m, self.dim);
            for &r in &self.s_over_m {
                if rows == 0 || cell_sparsity(r, rows) == 0 {
                    return Err(Error::invalid(format!(
                        "cell (M/n = {m}, s/M = {r}) has M = 0 or s = 0 at n = {}",
                        self.dim
                    )));
                }
            }
        }
        self.solver.validate()
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::invalid(format!("{name} axis is empty")));
    }
    if axis.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
        return Err(Error::invalid(format!("{name} axis values must lie in (0, 1]")));
    }
    if axis.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!("{name} axis must be strictly increasing")));
    }
    Ok(())
}

fn cell_rows(m_over_n: f64, n: usize) -> usize {
    (m_over_n * n as f64).round() as usize
}

fn cell_sparsity(s_over_m: f64, m: usize) -> usize {
    (s_over_m * m as f64).round() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub kind: EnsembleKind,
    pub dim: usize,
    pub m_over_n: Vec<f64>,
    pub s_over_m: Vec<f64>,
    /// `success[i][j]` for column `m_over_n[i]`, row `s_over_m[j]`.
    pub success: Vec<Vec<f64>>,
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub tau: f64,
}

/// `τ_d` and the minimum measurement count returned by [`lookup`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookupPolicy {
    pub tau_d: f64,
    pub m_floor: usize,
}

impl LookupPolicy {
    pub fn new(tau_d: f64, m_floor: usize) -> Result<Self> {
        if !(tau_d > 0.0 && tau_d < 1.0) {
            return Err(Error::invalid(format!("tau_d = {tau_d} must lie in (0, 1)")));
        }
        Ok(Self { tau_d, m_floor })
    }

    /// Floor `max(r, 8)` for a pipeline that spends `r` cross-validation rows.
    pub fn with_cv_rows(tau_d: f64, r: usize) -> Result<Self> {
        Self::new(tau_d, r.max(8))
    }
}

/// Decodes every trial of one `M/n` column. All cells share the column's
/// operator.
fn run_column(cfg: &PhaseDiagramConfig, ensemble: &MeasurementEnsemble, col: usize) -> Result<Vec<f64>> {
    let n = cfg.dim;
    let rows = cell_rows(cfg.m_over_n[col], n);
    let op = ensemble.operator(rows)?;
    let decoder = Decoder::new(&op)?;
    let model = ForegroundModel::new(cfg.tau, 0.0)?;
    let mut signals: Vec<SignalVector> = Vec::new();
    let mut xis: Vec<MeasurementVector> = Vec::new();
    for (row, &ratio) in cfg.s_over_m.iter().enumerate() {
        let s = cell_sparsity(ratio, rows);
        for trial in 0..cfg.trials {
            let coords = [TRIAL_STREAM, col as u64, row as u64, trial as u64];
            let mut rng = rng_for(cfg.seed, &coords);
            let support = sample(&mut rng, n, s).into_vec();
            let f = sample_foreground(&model, &support, n, derive_seed(cfg.seed, &coords))?;
            xis.push(op.apply(&f)?);
            signals.push(f);
        }
    }
    // A feasible iterate with smaller ℓ1 norm than f proves f is not the
    // minimizer, so such trials are stopped and scored as failures.
    let ceilings: Vec<f64> = signals.iter().map(|f| f.norm_l1()).collect();
    let results = decoder.decode_batch_bounded(&xis, &cfg.solver, Some(&ceilings))?;
    let mut success = vec![0.0; cfg.s_over_m.len()];
    for (k, (res, f)) in results.iter().zip(&signals).enumerate() {
        if res.estimate.distance(f) <= cfg.tolerance * f.norm_l2() {
            success[k / cfg.trials] += 1.0;
        }
    }
    success.iter_mut().for_each(|v| *v /= cfg.trials as f64);
    Ok(success)
}

/// Monte Carlo phase diagram. `progress(done, total)` is called after each
/// column.
pub fn generate_with_progress(
    cfg: &PhaseDiagramConfig,
    mut progress: impl FnMut(usize, usize),
) -> Result<PhaseDiagram> {
    cfg.validate()?;
    let ensemble = MeasurementEnsemble::new(cfg.kind, cfg.dim, derive_seed(cfg.seed, &[ENSEMBLE_STREAM]))?;
    let mut success = Vec::with_capacity(cfg.m_over_n.len());
    for col in 0..cfg.m_over_n.len() {
        success.push(run_column(cfg, &ensemble, col)?);
        progress(col + 1, cfg.m_over_n.len());
    }
    Ok(PhaseDiagram {
        kind: cfg.kind,
        dim: cfg.dim,
        m_over_n: cfg.m_over_n.clone(),
        s_over_m: cfg.s_over_m.clone(),
        success,
        trials: cfg.trials,
        tolerance: cfg.tolerance,
        seed: cfg.seed,
        tau: cfg.tau,
    })
}

pub fn generate(cfg: &PhaseDiagramConfig) -> Result<PhaseDiagram> {
    generate_with_progress(cfg, |_, _| {})
}

/// Smallest grid `M` whose cell containing `ŝ/M` (rounded up to the next
/// row) has success at least `τ_d`, floored at `policy.m_floor`.
pub fn lookup(pd: &PhaseDiagram, s_hat: usize, policy: &LookupPolicy) -> Result<usize> {
    if s_hat == 0 {
        return Ok(policy.m_floor);
    }
    for (i, &m) in pd.m_over_n.iter().enumerate() {
        let rows = cell_rows(m, pd.dim);
        if rows == 0 {
            continue;
        }
        let ratio = s_hat as f64 / rows as f64;
        let Some(j) = pd.s_over_m.iter().position(|&r| r >= ratio - 1e-12) else {
            continue;
        };
        if pd.success[i][j] >= policy.tau_d {
            return Ok(rows.max(policy.m_floor));
        }
    }
    Err(Error::Unattainable {
        sparsity: s_hat,
        tau_d: policy.tau_d,
    })
}

impl PhaseDiagram {
    pub fn rows_in_column(&self, col: usize) -> usize {
        cell_rows(self.m_over_n[col], self.dim)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# ensemble = {}", self.kind);
        let _ = writeln!(out, "# n = {}", self.dim);
        let _ = writeln!(out, "# trials = {}", self.trials);
        let _ = writeln!(out, "# tolerance = {}", self.tolerance);
        let _ = writeln!(out, "# seed = {}", self.seed);
        let _ = writeln!(out, "# tau = {}", self.tau);
        out.push_str("m_over_n,s_over_m,success_rate\n");
        for (i, &m) in self.m_over_n.iter().enumerate() {
            for (j, &s) in self.s_over_m.iter().enumerate() {
                let _ = writeln!(out, "{m},{s},{}", self.success[i][j]);
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text).map_err(|(line, msg)| Error::parse(path, line, msg))
    }

    pub fn from_csv(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut meta = std::collections::HashMap::new();
        let mut cells: Vec<(f64, f64, f64)> = Vec::new();
        let mut saw_header = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    meta.insert(k.trim().to_string(), (lineno, v.trim().to_string()));
                }
                continue;
            }
            if !saw_header {
                if line != "m_over_n,s_over_m,success_rate" {
                    return Err((lineno, "expected header m_over_n,s_over_m,success_rate".into()));
                }
                saw_header = true;
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err((lineno, "expected three fields".into()));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| (lineno, format!("bad number {s:?}")))
            };
            cells.push((num(parts[0])?, num(parts[1])?, num(parts[2])?));
        }
        let get = |k: &str| meta.get(k).cloned().ok_or((0, format!("missing header field {k}")));
        let parse_field = |k: &str| -> std::result::Result<f64, (usize, String)> {
            let (l, v) = get(k)?;
            v.parse().map_err(|_| (l, format!("bad value for {k}")))
        };
        let (kl, kind) = get("ensemble")?;
        let kind: EnsembleKind = kind.parse().map_err(|_| (kl, "bad ensemble".to_string()))?;
        let dim = parse_field("n")? as usize;
        let trials = parse_field("trials")? as usize;
        let tolerance = parse_field("tolerance")?;
        let (sl, seed) = get("seed")?;
        let seed: u64 = seed.parse().map_err(|_| (sl, "bad seed".to_string()))?;
        let tau = meta
            .get("tau")
            .map_or(Ok(0.1), |(l, v)| v.parse().map_err(|_| (*l, "bad tau".to_string())))?;

        let mut m_over_n: Vec<f64> = Vec::new();
        let mut s_over_m: Vec<f64> = Vec::new();
        for &(m, s, _) in &cells {
            if !m_over_n.contains(&m) {
                m_over_n.push(m);
            }
            if !s_over_m.contains(&s) {
                s_over_m.push(s);
            }
        }
        m_over_n.sort_by(f64::total_cmp);
        s_over_m.sort_by(f64::total_cmp);
        if cells.len() != m_over_n.len() * s_over_m.len() {
            return Err((0, "grid is not rectangular".into()));
        }
        let mut success = vec![vec![f64::NAN; s_over_m.len()]; m_over_n.len()];
        for &(m, s, v) in &cells {
            let i = m_over_n.iter().position(|&x| x == m).unwrap();
            let j = s_over_m.iter().position(|&x| x == s).unwrap();
            if !(0.0..=1.0).contains(&v) {
                return Err((0, format!("success rate {v} outside [0, 1]")));
            }
            success[i][j] = v;
        }
        if success.iter().flatten().any(|v| v.is_nan()) {
            return Err((0, "duplicate grid cell".into()));
        }
        Ok(Self {
            kind,
            dim,
            m_over_n,
            s_over_m,
            success,
            trials,
            tolerance,
            seed,
            tau,
        })
    }

    /// Heatmap of success rates over `(M/n, s/M)`.
    pub fn to_svg(&self) -> String {
        svg::heatmap(
            &format!("{} ensemble, n = {}, {} trials/cell", self.kind, self.dim, self.trials),
            "M/n",
            "s/M",
            &self.m_over_n,
            &self.s_over_m,
            &self.success,
        )
    }
}
