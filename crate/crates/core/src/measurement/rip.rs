use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use super::RowSubsetOperator;
use crate::rng::rng_for;
use crate::{Error, Result};

/// Observed range of `‖Φ_t f‖² / ‖f‖²` over random `s`-sparse vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipEnvelope {
    pub min: f64,
    pub max: f64,
}

impl RipEnvelope {
    /// Monte Carlo lower bound on the restricted isometry constant of order s.
    pub fn delta_lower_bound(&self) -> f64 {
        (1.0 - self.min).max(self.max - 1.0).max(0.0)
    }
}

pub fn estimate_rip_ratio(op: &RowSubsetOperator, s: usize, trials: usize, seed: u64) -> Result<RipEnvelope> {
    let n = op.dim();
    if s == 0 || s > n {
        return Err(Error::invalid(format!("sparsity {s} outside 1..={n}")));
    }
    let mut rng = rng_for(seed, &[0x919]);
    let mut env = RipEnvelope {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };
    let mut f = vec![0.0; n];
    for _ in 0..trials.max(1) {
        f.iter_mut().for_each(|v| *v = 0.0);
        for i in sample(&mut rng, n, s) {
            f[i] = rng.sample(StandardNormal);
        }
        let norm: f64 = f.iter().map(|v| v * v).sum();
        if norm == 0.0 {
            continue;
        }
        let ratio = op.apply_slice(&f)?.norm_sq() / norm;
        env.min = env.min.min(ratio);
        env.max = env.max.max(ratio);
    }
    Ok(env)
}
