//! Moments of the best `ŝ`-term error `e_ŝ(f)₂²` under each sparsity
//! hypothesis, and the resulting decision rule.

use crate::{Error, Result};

/// `(μ₀, σ₀²) = ((n − ŝ)σ_b², 2(n − ŝ)σ_b⁴)`: every foreground pixel is
/// captured and the `n − ŝ` neglected entries are background.
pub fn null_moments(s_hat: usize, n: usize, sigma_b_sq: f64) -> Result<(f64, f64)> {
    if s_hat > n {
        return Err(Error::invalid(format!("s_hat = {s_hat} exceeds n = {n}")));
    }
    let rest = (n - s_hat) as f64;
    Ok((rest * sigma_b_sq, 2.0 * rest * (sigma_b_sq * sigma_b_sq)))
}

fn alt_moments_unchecked(k: usize, s_hat: usize, n: usize, sigma_b_sq: f64, tau: f64) -> (f64, f64) {
    let d = k as f64 - s_hat as f64;
    let m = (n - k) as f64;
    let a = tau * tau + tau + 1.0;
    let b = tau.powi(4) + tau.powi(3) + tau * tau + tau + 1.0;
    let s4 = sigma_b_sq * sigma_b_sq;
    let mu = m * sigma_b_sq + d * a / 3.0;
    // E[e⁴] − μ² with the cross terms cancelled analytically
    let var = d * (b / 5.0 - a * a / 9.0) + 2.0 * m * s4;
    (mu, var)
}

/// `(μ_k, σ_k²)` when the true sparsity is `k > ŝ`: `k − ŝ` foreground and
/// `n − k` background entries are neglected.
pub fn alt_moments(k: usize, s_hat: usize, n: usize, sigma_b_sq: f64, tau: f64) -> Result<(f64, f64)> {
    if k <= s_hat || k > n {
        return Err(Error::invalid(format!(
            "hypothesis k = {k} must satisfy s_hat = {s_hat} < k ≤ n = {n}"
        )));
    }
    Ok(alt_moments_unchecked(k, s_hat, n, sigma_b_sq, tau))
}

/// Formal evaluation of the alternative-hypothesis expressions at any
/// `k ≥ ŝ`, including the boundary `k = ŝ`.
pub fn alt_moments_formal(k: usize, s_hat: usize, n: usize, sigma_b_sq: f64, tau: f64) -> (f64, f64) {
    alt_moments_unchecked(k, s_hat, n, sigma_b_sq, tau)
}

/// Moment table for one `ŝ`: the null hypothesis and `k = ŝ+1, …, n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisMoments {
    pub s_hat: usize,
    pub n: usize,
    pub mu0: f64,
    pub sigma0_sq: f64,
    /// `alt[i]` holds `(μ_k, σ_k²)` for `k = ŝ + 1 + i`.
    pub alt: Vec<(f64, f64)>,
}

impl HypothesisMoments {
    pub fn new(s_hat: usize, n: usize, sigma_b_sq: f64, tau: f64) -> Result<Self> {
        let (mu0, sigma0_sq) = null_moments(s_hat, n, sigma_b_sq)?;
        let alt = (s_hat + 1..=n)
            .map(|k| alt_moments_unchecked(k, s_hat, n, sigma_b_sq, tau))
            .collect();
        Ok(Self {
            s_hat,
            n,
            mu0,
            sigma0_sq,
            alt,
        })
    }

    /// Hypothesis index for `alt[i]`.
    pub fn k_of(&self, i: usize) -> usize {
        self.s_hat + 1 + i
    }
}

/// Normal log-density; `None` for degenerate variances except at the mean.
fn log_density(x: f64, mu: f64, var: f64) -> Option<f64> {
    if var > 0.0 {
        Some(-0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mu) * (x - mu) / (2.0 * var))
    } else if x == mu {
        Some(f64::INFINITY)
    } else {
        None
    }
}

/// `k**`: 0 when `bound < μ₀`, otherwise the maximum-likelihood hypothesis
/// under `q_k ≈ N(μ_k, σ_k²)` with equal priors. Ties go to the smaller `k`.
pub fn select_hypothesis(bound: f64, moments: &HypothesisMoments) -> usize {
    if bound < moments.mu0 {
        return 0;
    }
    let mut best_k = 0;
    let mut best = log_density(bound, moments.mu0, moments.sigma0_sq).unwrap_or(f64::NEG_INFINITY);
    for (i, &(mu, var)) in moments.alt.iter().enumerate() {
        if let Some(ld) = log_density(bound, mu, var) {
            if ld > best {
                best = ld;
                best_k = moments.k_of(i);
            }
        }
    }
    best_k
}
