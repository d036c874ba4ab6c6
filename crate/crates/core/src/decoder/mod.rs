//! ℓ1 decoding (basis pursuit), truncation and best `s`-term errors.
//!
//! `min ‖z‖₁ subject to Φ_t z = ξ` is solved by an alternating-direction
//! iteration. One half-step projects onto the affine feasible set and the
//! other soft-thresholds. The projection uses the
//! operator's structure: a thin QR of `Φ_tᵀ` for Gaussian operators, the FFT
//! for Fourier ones. Several right-hand sides sharing an operator are solved
//! together so the Gaussian projections become matrix–matrix products.

mod projector;
mod sparse;

use nalgebra::DMatrix;

use crate::measurement::{MeasurementVector, RowSubsetOperator};
use crate::signal_model::SignalVector;
use crate::{Error, Result};
use projector::{Projector, Targets};

pub use sparse::{sparse_approx_error, truncate};

/// Soft threshold `1/ρ` as a fraction of `‖x₀‖_∞`. Tying it to the data
/// makes the iteration equivariant under scaling of `ξ`.
const THRESHOLD: f64 = 0.5;
const TINY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Bound on `‖Φ_t z − ξ‖₂ / max(‖ξ‖₂, 1e-12)`.
    pub feasibility_tol: f64,
    pub max_iterations: usize,
    /// Stop once both the splitting gap and the per-iteration change fall
    /// below this fraction of the iterate norm.
    pub convergence_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-6,
            max_iterations: 5000,
            convergence_tol: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.feasibility_tol > 0.0 && self.convergence_tol > 0.0 && self.max_iterations > 0) {
            return Err(Error::invalid("solver tolerances and iteration cap must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub estimate: SignalVector,
    pub iterations: usize,
    pub feasibility_residual: f64,
    pub objective: f64,
    pub converged: bool,
}

/// Reusable decoder for one operator. Building it factors the operator once.
pub struct Decoder {
    op: RowSubsetOperator,
    projector: Projector,
}

impl Decoder {
    pub fn new(op: &RowSubsetOperator) -> Result<Self> {
        Ok(Self {
            op: op.clone(),
            projector: Projector::new(op)?,
        })
    }

    pub fn operator(&self) -> &RowSubsetOperator {
        &self.op
    }

    /// Decodes one measurement vector. Non-convergence is an error carrying
    /// the partial result.
    pub fn decode(&self, xi: &MeasurementVector, cfg: &SolverConfig) -> Result<DecodeResult> {
        let result = self.decode_batch(std::slice::from_ref(xi), cfg)?.remove(0);
        if result.converged {
            Ok(result)
        } else {
            Err(Error::NotConverged(Box::new(result)))
        }
    }

    /// Decodes several measurement vectors; each result reports its own
    /// convergence.
    pub fn decode_batch(&self, xis: &[MeasurementVector], cfg: &SolverConfig) -> Result<Vec<DecodeResult>> {
        self.decode_batch_bounded(xis, cfg, None)
    }

    /// As [`Decoder::decode_batch`], but column `c` stops as soon as a
    /// feasible iterate has `‖z‖₁ < l1_ceiling[c]`. With the ceiling set to
    /// `‖f‖₁` for a known generating signal `f`, that event certifies that
    /// `f` is not the ℓ1 minimizer. Such columns are reported unconverged.
    pub fn decode_batch_bounded(
        &self,
        xis: &[MeasurementVector],
        cfg: &SolverConfig,
        l1_ceiling: Option<&[f64]>,
    ) -> Result<Vec<DecodeResult>> {
        cfg.validate()?;
        for xi in xis {
            if xi.len() != self.op.rows() {
                return Err(Error::DimensionMismatch {
                    expected: self.op.rows(),
                    actual: xi.len(),
                });
            }
        }
        let targets: Vec<Targets> = xis.iter().map(|xi| self.projector.targets(xi)).collect::<Result<_>>()?;
        let n = self.op.dim();
        let count = xis.len();

        let mut estimates = vec![vec![0.0; n]; count];
        let mut iterations = vec![0usize; count];
        let mut converged = vec![false; count];

        // Per-column state for the columns still iterating.
        let mut active: Vec<usize> = Vec::new();
        let mut threshold: Vec<f64> = Vec::new();
        for (c, t) in targets.iter().enumerate() {
            let x0 = t.offset();
            let peak = x0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if peak == 0.0 {
                converged[c] = true;
            } else {
                active.push(c);
                threshold.push(THRESHOLD * peak);
            }
        }
        let mut z = DMatrix::from_fn(n, active.len(), |i, j| targets[active[j]].offset()[i]);
        let mut u = DMatrix::zeros(n, active.len());
        let mut v = DMatrix::zeros(n, active.len());

        let mut iter = 0;
        while !active.is_empty() && iter < cfg.max_iterations {
            iter += 1;
            v.copy_from(&z);
            v -= &u;
            self.projector.project(&mut v, &targets, &active);
            let x = &v;

            let mut done = Vec::new();
            let mut certified = Vec::new();
            for j in 0..active.len() {
                let thr = threshold[j];
                let (mut gap, mut step, mut xn, mut zn, mut xl1) = (0.0, 0.0, 0.0, 0.0, 0.0);
                let xc = x.column(j);
                let mut zc = z.column_mut(j);
                let mut uc = u.column_mut(j);
                for i in 0..n {
                    let xi = xc[i];
                    let zi = zc[i];
                    let w = xi + uc[i];
                    let znew = if w > thr {
                        w - thr
                    } else if w < -thr {
                        w + thr
                    } else {
                        0.0
                    };
                    gap += (xi - znew) * (xi - znew);
                    step += (znew - zi) * (znew - zi);
                    xn += xi * xi;
                    xl1 += xi.abs();
                    zn += znew * znew;
                    zc[i] = znew;
                    uc[i] = w - znew;
                }
                let scale = xn.max(zn).sqrt().max(TINY);
                let (gap, step) = (gap.sqrt() / scale, step.sqrt() / scale);
                if gap <= cfg.convergence_tol && step <= cfg.convergence_tol {
                    done.push(j);
                    continue;
                }
                if l1_ceiling.is_some_and(|ceiling| xl1 < ceiling[active[j]]) {
                    certified.push(j);
                }
            }
            let last = iter == cfg.max_iterations;
            if last || !done.is_empty() || !certified.is_empty() {
                let mut finished = vec![false; active.len()];
                for (j, flag) in finished.iter_mut().enumerate() {
                    let is_done = done.contains(&j);
                    if last || is_done || certified.contains(&j) {
                        let c = active[j];
                        estimates[c] = x.column(j).iter().copied().collect();
                        iterations[c] = iter;
                        converged[c] = is_done;
                        *flag = true;
                    }
                }
                let keep: Vec<usize> = (0..active.len()).filter(|&j| !finished[j]).collect();
                z = z.select_columns(&keep);
                u = u.select_columns(&keep);
                v = DMatrix::zeros(n, keep.len());
                threshold = keep.iter().map(|&j| threshold[j]).collect();
                active = keep.iter().map(|&j| active[j]).collect();
            }
        }

        xis.iter()
            .zip(estimates)
            .zip(iterations.into_iter().zip(converged))
            .map(|((xi, est), (iterations, converged))| {
                let residual = self.op.apply_slice(&est)?.distance(xi)?;
                let feasibility_residual = residual / xi.norm_l2().max(1e-12);
                let estimate = SignalVector::new(est);
                Ok(DecodeResult {
                    objective: estimate.norm_l1(),
                    estimate,
                    iterations,
                    feasibility_residual,
                    converged: converged && feasibility_residual <= cfg.feasibility_tol,
                })
            })
            .collect()
    }
}

/// `Δ(ξ, Φ_t)`: one-shot decode.
pub fn decode(xi: &MeasurementVector, op: &RowSubsetOperator, cfg: &SolverConfig) -> Result<DecodeResult> {
    Decoder::new(op)?.decode(xi, cfg)
}
