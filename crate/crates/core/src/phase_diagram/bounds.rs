//! Sufficient-condition bounds for Gaussian ensembles.

use crate::{Error, Result};

/// `c₀(x) = x²/4 − x³/6`.
fn c0(x: f64) -> f64 {
    x * x / 4.0 - x * x * x / 6.0
}

/// `(δ²/16)(1 − δ/3)`, which equals `c₀(δ/2)`.
fn rate(delta: f64) -> f64 {
    delta * delta / 16.0 * (1.0 - delta / 3.0)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta = {delta} must lie in (0, 1)")));
    }
    Ok(())
}

/// Lower bound on the probability that an `M × n` Gaussian matrix has
/// restricted isometry constant `δ` of order `s`:
/// `1 − 2 exp(−c₀(δ/2) M + s (ln(e n/s) + ln(12/δ)))`.
///
/// The raw value is returned; it is negative (vacuous) for small `M`.
pub fn success_probability_bound(delta: f64, m: usize, s: usize, n: usize) -> Result<f64> {
    check_delta(delta)?;
    if s == 0 {
        return Err(Error::invalid("sparsity must be at least 1"));
    }
    let s_f = s as f64;
    let exponent =
        -c0(delta / 2.0) * m as f64 + s_f * ((std::f64::consts::E * n as f64 / s_f).ln() + (12.0 / delta).ln());
    Ok(1.0 - 2.0 * exponent.exp())
}

/// Smallest `M` for which [`success_probability_bound`] reaches `τ_g`.
pub fn min_rows_theoretical(delta: f64, s: usize, n: usize, tau_g: f64) -> Result<usize> {
    check_delta(delta)?;
    if !(tau_g > 0.0 && tau_g < 1.0) {
        return Err(Error::invalid(format!("tau_g = {tau_g} must lie in (0, 1)")));
    }
    if s == 0 {
        return Err(Error::invalid("sparsity must be at least 1"));
    }
    let s_f = s as f64;
    let numerator = s_f * (1.0 + (n as f64 / s_f).ln() + (12.0 / delta).ln()) + (2.0 / (1.0 - tau_g)).ln();
    Ok((numerator / rate(delta)).ceil() as usize)
}

/// Largest `s/n` compatible with an order-`2s` guarantee at constant `δ`
/// when `M ≤ n`, using only the `s`-independent term of the `n/s` bound.
pub fn max_sparsity_fraction(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let term = (1.0 + (12.0 / delta).ln()) / rate(delta);
    Ok(1.0 / (2.0 * term))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_tends_to_one_and_is_vacuous_without_rows() {
        assert!(success_probability_bound(0.3, 1_000_000_000, 10, 1024).unwrap() > 1.0 - 1e-12);
        assert!(success_probability_bound(0.3, 0, 10, 1024).unwrap() <= -1.0);
    }

    #[test]
    fn rows_grow_with_sparsity_and_shrink_with_delta() {
        let base = min_rows_theoretical(0.25, 10, 1024, 0.9).unwrap();
        assert!(min_rows_theoretical(0.25, 11, 1024, 0.9).unwrap() > base);
        assert!(min_rows_theoretical(0.2, 10, 1024, 0.9).unwrap() > base);
    }

    #[test]
    fn closure_at_reference_point() {
        let m = min_rows_theoretical(0.25, 10, 1024, 0.9).unwrap();
        assert!(success_probability_bound(0.25, m, 10, 1024).unwrap() >= 0.9);
        assert!(success_probability_bound(0.25, m - 1, 10, 1024).unwrap() < 0.9);
    }

    #[test]
    fn sparsity_fraction_values() {
        let f = max_sparsity_fraction(2f64.sqrt() - 1.0).unwrap();
        assert!((f - 0.0011).abs() <= 0.0002, "{f}");
        // direct evaluation at δ = 1/4: (1/64)(11/12) / (2(1 + ln 48))
        let d = 0.25f64;
        let expect = (d * d / 16.0 * (1.0 - d / 3.0)) / (2.0 * (1.0 + 48f64.ln()));
        assert!((max_sparsity_fraction(0.25).unwrap() - expect).abs() < 1e-15);
        assert!(max_sparsity_fraction(0.6).unwrap() > f);
        assert!(max_sparsity_fraction(1.0).is_err());
    }
}
