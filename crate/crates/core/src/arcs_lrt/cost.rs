//! Sparsity pmf and the penalised expected-error cost over `ŝ`.

use std::f64::consts::{FRAC_2_PI, SQRT_2};

use argmin::core::{CostFunction, Executor};
use argmin::solver::brent::BrentOpt;

use crate::{Error, Result};

/// A pmf on `{0, …, n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityPmf {
    probs: Vec<f64>,
}

impl SparsityPmf {
    /// Normalises nonnegative weights on `{0, …, weights.len() − 1}`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("pmf weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("pmf weights sum to zero"));
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn point_mass(k: usize, n: usize) -> Self {
        let mut probs = vec![0.0; n + 1];
        probs[k.min(n)] = 1.0;
        Self { probs }
    }

    /// Largest supported value `n`.
    pub fn max_value(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, q)| k as f64 * q).sum()
    }
}

/// Normal density sampled at `k = 0..n` and renormalised; a point mass at
/// `round(μ)` (clamped) when `σ² = 0` or the density vanishes on the grid.
pub fn discretize_pmf(mu: f64, sigma_sq: f64, n: usize) -> SparsityPmf {
    let fallback = || SparsityPmf::point_mass(mu.round().clamp(0.0, n as f64) as usize, n);
    if !(sigma_sq > 0.0) || !mu.is_finite() || !sigma_sq.is_finite() {
        return fallback();
    }
    let exponent = |k: usize| -(k as f64 - mu) * (k as f64 - mu) / (2.0 * sigma_sq);
    let peak = (0..=n).map(exponent).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = (0..=n).map(|k| (exponent(k) - peak).exp()).collect();
    SparsityPmf::from_weights(weights).unwrap_or_else(|_| fallback())
}

/// `C₀ = (2 − (2 − √2)δ) / (1 − (1 − √2)δ)` for `δ ∈ [0, √2 − 1)`.
pub fn recovery_constant(delta: f64) -> Result<f64> {
    if !(0.0..SQRT_2 - 1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta = {delta} must lie in [0, √2 − 1)")));
    }
    Ok((2.0 - (2.0 - SQRT_2) * delta) / (1.0 - (1.0 - SQRT_2) * delta))
}

/// Parameters of the penalised cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub lambda: f64,
    pub c0: f64,
    pub tau: f64,
    pub sigma_b: f64,
    pub dim: usize,
}

/// Expected cost for every integer candidate, evaluated from prefix sums of
/// `q` so a full table costs `O(n)`.
#[derive(Debug, Clone)]
pub struct CostTable {
    params: CostParams,
    /// `Σ_{k ≤ j} q(k)`.
    mass: Vec<f64>,
    /// `Σ_{k ≤ j} k q(k)`.
    first: Vec<f64>,
}

impl CostTable {
    pub fn new(q: &SparsityPmf, params: CostParams) -> Result<Self> {
        if q.max_value() != params.dim {
            return Err(Error::DimensionMismatch {
                expected: params.dim + 1,
                actual: q.probs().len(),
            });
        }
        let mut mass = Vec::with_capacity(q.probs().len());
        let mut first = Vec::with_capacity(q.probs().len());
        let (mut m, mut f) = (0.0, 0.0);
        for (k, &p) in q.probs().iter().enumerate() {
            m += p;
            f += k as f64 * p;
            mass.push(m);
            first.push(f);
        }
        Ok(Self { params, mass, first })
    }

    /// `(𝒥₀, 𝒥₁)` at integer `ŝ`.
    pub fn error_terms(&self, s_hat: usize) -> (f64, f64) {
        let n = self.params.dim;
        let s = s_hat.min(n);
        let c = FRAC_2_PI.sqrt() * self.params.sigma_b;
        let head = self.mass[s];
        let tail_mass = (self.mass[n] - head).max(0.0);
        let tail_first = (self.first[n] - self.first[s]).max(0.0);
        let j0 = c * (n - s) as f64 * head;
        let j1 = (1.0 + self.params.tau) / 2.0 * (tail_first - s as f64 * tail_mass)
            + c * (n as f64 * tail_mass - tail_first);
        (j0, j1)
    }

    /// `(C₀/√ŝ)(𝒥₀ + 𝒥₁) + λŝ` for `1 ≤ ŝ ≤ n`.
    pub fn cost(&self, s_hat: usize) -> f64 {
        let (j0, j1) = self.error_terms(s_hat);
        self.params.c0 / (s_hat as f64).sqrt() * (j0 + j1) + self.params.lambda * s_hat as f64
    }

    /// Piecewise-linear interpolation of the integer costs.
    fn relaxed(&self, x: f64) -> f64 {
        let x = x.clamp(1.0, self.params.dim as f64);
        let lo = x.floor() as usize;
        let frac = x - lo as f64;
        if frac == 0.0 {
            self.cost(lo)
        } else {
            (1.0 - frac) * self.cost(lo) + frac * self.cost(lo + 1)
        }
    }
}

pub fn expected_cost(s_candidate: usize, q: &SparsityPmf, params: CostParams) -> Result<f64> {
    if s_candidate == 0 || s_candidate > params.dim {
        return Err(Error::invalid(format!(
            "candidate sparsity {s_candidate} outside [1, {}]",
            params.dim
        )));
    }
    Ok(CostTable::new(q, params)?.cost(s_candidate))
}

impl CostFunction for &CostTable {
    type Param = f64;
    type Output = f64;

    fn cost(&self, x: &f64) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.relaxed(*x))
    }
}

/// Bounded Brent search (golden section with parabolic steps) over the
/// continuous relaxation on `[1, n]`, then the best integer within ±2 of the
/// continuous minimiser.
pub fn minimize_cost(q: &SparsityPmf, params: CostParams) -> Result<usize> {
    let table = CostTable::new(q, params)?;
    let n = params.dim;
    if n == 1 {
        return Ok(1);
    }
    let solver = BrentOpt::new(1.0, n as f64).set_tolerance(f64::EPSILON.sqrt(), 1e-6);
    let x = Executor::new(&table, solver)
        .configure(|state| state.max_iters(500))
        .run()
        .ok()
        .and_then(|res| res.state().best_param)
        .unwrap_or(1.0);
    let centre = x.round() as i64;
    let best = (centre - 2..=centre + 2)
        .filter(|&k| k >= 1 && k <= n as i64)
        .map(|k| k as usize)
        .map(|k| (k, table.cost(k)))
        .fold(
            (0usize, f64::INFINITY),
            |acc, (k, c)| if c < acc.1 { (k, c) } else { acc },
        );
    Ok(best.0)
}
