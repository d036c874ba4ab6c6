use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use super::MeasurementVector;
use crate::rng::{derive_seed, rng_for, stream_rng};
use crate::signal_model::SignalVector;
use crate::{Error, Result};

const GAUSSIAN_ROWS: u64 = 0x6A55;
const FOURIER_ORDER: u64 = 0xF0F7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnsembleKind {
    Gaussian,
    Fourier,
}

impl EnsembleKind {
    pub fn code(self) -> u32 {
        match self {
            EnsembleKind::Gaussian => 0,
            EnsembleKind::Fourier => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(EnsembleKind::Gaussian),
            1 => Some(EnsembleKind::Fourier),
            _ => None,
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleKind::Gaussian => "gaussian",
            EnsembleKind::Fourier => "fourier",
        })
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(EnsembleKind::Gaussian),
            "fourier" | "fourier_permuted" => Ok(EnsembleKind::Fourier),
            other => Err(Error::invalid(format!("unknown ensemble kind {other:?}"))),
        }
    }
}

struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

struct Inner {
    kind: EnsembleKind,
    dim: usize,
    seed: u64,
    /// Fourier only: ensemble row `i` is DFT row `order[i]`.
    order: Vec<usize>,
    fft: Option<FftPair>,
}

/// A seeded `n×n` ensemble. Cheap to clone.
#[derive(Clone)]
pub struct MeasurementEnsemble {
    inner: Arc<Inner>,
}

impl fmt::Debug for MeasurementEnsemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasurementEnsemble")
            .field("kind", &self.inner.kind)
            .field("dim", &self.inner.dim)
            .field("seed", &self.inner.seed)
            .finish()
    }
}

impl MeasurementEnsemble {
    pub fn new(kind: EnsembleKind, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("ensemble dimension must be positive"));
        }
        let (order, fft) = match kind {
            EnsembleKind::Gaussian => (Vec::new(), None),
            EnsembleKind::Fourier => {
                let mut order: Vec<usize> = (0..dim).collect();
                order.shuffle(&mut rng_for(seed, &[FOURIER_ORDER]));
                let mut planner = FftPlanner::new();
                let pair = FftPair {
                    forward: planner.plan_fft_forward(dim),
                    inverse: planner.plan_fft_inverse(dim),
                };
                (order, Some(pair))
            }
        };
        Ok(Self {
            inner: Arc::new(Inner {
                kind,
                dim,
                seed,
                order,
                fft,
            }),
        })
    }

    pub fn gaussian(dim: usize, seed: u64) -> Result<Self> {
        Self::new(EnsembleKind::Gaussian, dim, seed)
    }

    pub fn fourier(dim: usize, seed: u64) -> Result<Self> {
        Self::new(EnsembleKind::Fourier, dim, seed)
    }

    pub fn kind(&self) -> EnsembleKind {
        self.inner.kind
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn seed(&self) -> u64 {
        self.inner.seed
    }

    /// Fourier row permutation (empty for Gaussian ensembles).
    pub fn row_permutation(&self) -> &[usize] {
        &self.inner.order
    }

    fn check_row(&self, row: usize) -> Result<()> {
        if row >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index: row,
                dim: self.dim(),
            });
        }
        Ok(())
    }

    /// Gaussian ensemble row `row` with entries `N(0, 1/n)`, regenerated from
    /// its own stream.
    pub fn gaussian_row(&self, row: usize) -> Result<Vec<f64>> {
        if self.kind() != EnsembleKind::Gaussian {
            return Err(Error::invalid("gaussian_row on a Fourier ensemble"));
        }
        self.check_row(row)?;
        let n = self.dim();
        let scale = 1.0 / (n as f64).sqrt();
        let mut rng = stream_rng(derive_seed(self.seed(), &[GAUSSIAN_ROWS]), row as u64);
        Ok((0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
    }

    /// Fourier ensemble row `row`: the unitary DFT row `e^{-2πi kj/n}/√n` with
    /// `k` the permuted frequency.
    pub fn fourier_row(&self, row: usize) -> Result<Vec<Complex64>> {
        if self.kind() != EnsembleKind::Fourier {
            return Err(Error::invalid("fourier_row on a Gaussian ensemble"));
        }
        self.check_row(row)?;
        let n = self.dim();
        let k = self.inner.order[row];
        let scale = 1.0 / (n as f64).sqrt();
        Ok((0..n)
            .map(|j| {
                let angle = -2.0 * std::f64::consts::PI * ((k * j) % n) as f64 / n as f64;
                Complex64::from_polar(scale, angle)
            })
            .collect())
    }

    /// Unitary DFT of a real vector.
    pub(crate) fn dft(&self, x: &[f64]) -> Vec<Complex64> {
        let fft = self.inner.fft.as_ref().expect("Fourier ensemble");
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.forward.process(&mut buf);
        let scale = 1.0 / (self.dim() as f64).sqrt();
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Real part of the unitary inverse DFT.
    pub(crate) fn idft_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        let fft = self.inner.fft.as_ref().expect("Fourier ensemble");
        fft.inverse.process(&mut spectrum);
        let scale = 1.0 / (self.dim() as f64).sqrt();
        spectrum.iter().map(|c| c.re * scale).collect()
    }

    /// `Φx` through all `n` ensemble rows, unscaled.
    pub fn measure_full(&self, x: &[f64]) -> Result<MeasurementVector> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: x.len(),
            });
        }
        match self.kind() {
            EnsembleKind::Gaussian => {
                let mut out = Vec::with_capacity(n);
                for row in 0..n {
                    let r = self.gaussian_row(row)?;
                    out.push(r.iter().zip(x).map(|(a, b)| a * b).sum());
                }
                Ok(MeasurementVector::Real(out))
            }
            EnsembleKind::Fourier => {
                let spectrum = self.dft(x);
                Ok(MeasurementVector::Complex(
                    self.inner.order.iter().map(|&k| spectrum[k]).collect(),
                ))
            }
        }
    }

    /// The rescaled operator `Φ_t` built from the first `rows` ensemble rows.
    pub fn operator(&self, rows: usize) -> Result<RowSubsetOperator> {
        RowSubsetOperator::new(self.clone(), rows)
    }
}

/// First `M_t` rows of an ensemble, scaled by `√(n/M_t)`.
#[derive(Debug, Clone)]
pub struct RowSubsetOperator {
    ensemble: MeasurementEnsemble,
    rows: usize,
    scale: f64,
    /// Gaussian only: the scaled `M_t × n` block.
    dense: Option<Arc<DMatrix<f64>>>,
}

impl RowSubsetOperator {
    pub fn new(ensemble: MeasurementEnsemble, rows: usize) -> Result<Self> {
        let n = ensemble.dim();
        if rows == 0 || rows > n {
            return Err(Error::invalid(format!("row count {rows} outside 1..={n}")));
        }
        let scale = (n as f64 / rows as f64).sqrt();
        let dense = match ensemble.kind() {
            EnsembleKind::Gaussian => {
                let mut m = DMatrix::zeros(rows, n);
                for i in 0..rows {
                    let row = ensemble.gaussian_row(i)?;
                    for (j, v) in row.into_iter().enumerate() {
                        m[(i, j)] = scale * v;
                    }
                }
                Some(Arc::new(m))
            }
            EnsembleKind::Fourier => None,
        };
        Ok(Self {
            ensemble,
            rows,
            scale,
            dense,
        })
    }

    pub fn ensemble(&self) -> &MeasurementEnsemble {
        &self.ensemble
    }

    pub fn kind(&self) -> EnsembleKind {
        self.ensemble.kind()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.ensemble.dim()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Number of real constraints: `M_t` for Gaussian, `2 M_t` for Fourier.
    pub fn real_rows(&self) -> usize {
        match self.kind() {
            EnsembleKind::Gaussian => self.rows,
            EnsembleKind::Fourier => 2 * self.rows,
        }
    }

    /// Gaussian only: the scaled matrix.
    pub fn matrix(&self) -> Option<&DMatrix<f64>> {
        self.dense.as_deref()
    }

    /// Fourier only: the DFT frequencies of the selected rows.
    pub fn frequencies(&self) -> Option<&[usize]> {
        match self.kind() {
            EnsembleKind::Fourier => Some(&self.ensemble.row_permutation()[..self.rows]),
            EnsembleKind::Gaussian => None,
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }

    /// `Φ_t x`.
    pub fn apply(&self, x: &SignalVector) -> Result<MeasurementVector> {
        self.apply_slice(x)
    }

    pub fn apply_slice(&self, x: &[f64]) -> Result<MeasurementVector> {
        self.check_dim(x.len())?;
        match &self.dense {
            Some(m) => {
                let y = &**m * DVector::from_column_slice(x);
                Ok(MeasurementVector::Real(y.as_slice().to_vec()))
            }
            None => {
                let spectrum = self.ensemble.dft(x);
                let freqs = self.frequencies().expect("Fourier operator");
                Ok(MeasurementVector::Complex(
                    freqs.iter().map(|&k| spectrum[k] * self.scale).collect(),
                ))
            }
        }
    }

    /// First `M_t` rows of `Φ` applied without the rescale.
    pub fn apply_unscaled(&self, x: &[f64]) -> Result<MeasurementVector> {
        Ok(self.apply_slice(x)?.scaled(1.0 / self.scale))
    }

    /// Adjoint of the real-stacked map: `Φ_tᵀ y` for Gaussian, `Re(Φ_tᴴ y)`
    /// for Fourier.
    pub fn adjoint(&self, y: &MeasurementVector) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                actual: y.len(),
            });
        }
        match (y, &self.dense) {
            (MeasurementVector::Real(v), Some(m)) => {
                let out = m.tr_mul(&DVector::from_column_slice(v));
                Ok(out.as_slice().to_vec())
            }
            (MeasurementVector::Complex(v), None) => {
                let mut spectrum = vec![Complex64::new(0.0, 0.0); self.dim()];
                let freqs = self.frequencies().expect("Fourier operator");
                for (&k, &c) in freqs.iter().zip(v) {
                    spectrum[k] += c * self.scale;
                }
                Ok(self.ensemble.idft_real(spectrum))
            }
            _ => Err(Error::invalid("measurement kind does not match the operator")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_for(seed, &[]);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn real(y: MeasurementVector) -> Vec<f64> {
        match y {
            MeasurementVector::Real(v) => v,
            _ => panic!("expected real"),
        }
    }

    fn complex(y: MeasurementVector) -> Vec<Complex64> {
        match y {
            MeasurementVector::Complex(v) => v,
            _ => panic!("expected complex"),
        }
    }

    #[test]
    fn rows_regenerate_bit_identically() {
        let e = MeasurementEnsemble::gaussian(50, 9).unwrap();
        assert_eq!(e.gaussian_row(17).unwrap(), e.gaussian_row(17).unwrap());
        let again = MeasurementEnsemble::gaussian(50, 9).unwrap();
        assert_eq!(e.gaussian_row(17).unwrap(), again.gaussian_row(17).unwrap());
        assert_ne!(e.gaussian_row(17).unwrap(), e.gaussian_row(18).unwrap());
        let f1 = MeasurementEnsemble::fourier(50, 9).unwrap();
        let f2 = MeasurementEnsemble::fourier(50, 9).unwrap();
        assert_eq!(f1.row_permutation(), f2.row_permutation());
    }

    #[test]
    fn gaussian_entries_have_variance_one_over_n() {
        let n = 400;
        let e = MeasurementEnsemble::gaussian(n, 2).unwrap();
        let mut sum = 0.0;
        let mut sq = 0.0;
        let mut count = 0.0;
        for row in 0..n {
            for v in e.gaussian_row(row).unwrap() {
                sum += v;
                sq += v * v;
                count += 1.0;
            }
        }
        let mean = sum / count;
        let var = sq / count - mean * mean;
        assert!((var * n as f64 - 1.0).abs() < 0.01, "var·n = {}", var * n as f64);
    }

    #[test]
    fn full_gaussian_operator_matches_full_measurement() {
        let n = 40;
        let e = MeasurementEnsemble::gaussian(n, 5).unwrap();
        let op = e.operator(n).unwrap();
        assert_eq!(op.scale(), 1.0);
        let x = random_vec(n, 1);
        let a = real(op.apply_slice(&x).unwrap());
        let b = real(e.measure_full(&x).unwrap());
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        for e in [
            MeasurementEnsemble::gaussian(30, 1).unwrap(),
            MeasurementEnsemble::fourier(30, 1).unwrap(),
        ] {
            let op = e.operator(10).unwrap();
            assert_eq!(op.apply_slice(&[0.0; 30]).unwrap().norm_l2(), 0.0);
        }
    }

    #[test]
    fn fourier_fast_path_matches_dense_rows() {
        for &n in &[64usize, 100, 256] {
            let e = MeasurementEnsemble::fourier(n, 11).unwrap();
            let m = n / 3;
            let op = e.operator(m).unwrap();
            let x = random_vec(n, n as u64);
            let fast = complex(op.apply_slice(&x).unwrap());
            let mut err = 0.0;
            let mut norm = 0.0;
            for (i, f) in fast.iter().enumerate() {
                let row = e.fourier_row(i).unwrap();
                let dense: Complex64 = row.iter().zip(&x).map(|(a, b)| a * b).sum::<Complex64>() * op.scale();
                err += (f - dense).norm_sqr();
                norm += dense.norm_sqr();
            }
            assert!((err / norm).sqrt() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn scale_law_and_nesting() {
        let n = 60;
        for e in [
            MeasurementEnsemble::gaussian(n, 3).unwrap(),
            MeasurementEnsemble::fourier(n, 3).unwrap(),
        ] {
            let x = random_vec(n, 4);
            let small = e.operator(15).unwrap();
            let large = e.operator(40).unwrap();
            let ys = small.apply_slice(&x).unwrap();
            let us = small.apply_unscaled(&x).unwrap();
            let ratio = ys.norm_l2() / us.norm_l2();
            assert!((ratio - (n as f64 / 15.0).sqrt()).abs() < 1e-12);
            let ul = large.apply_unscaled(&x).unwrap();
            assert!(ul.prefix(15).distance(&us).unwrap() < 1e-12);
        }
    }

    #[test]
    fn adjoint_satisfies_inner_product_identity() {
        let n = 48;
        for e in [
            MeasurementEnsemble::gaussian(n, 8).unwrap(),
            MeasurementEnsemble::fourier(n, 8).unwrap(),
        ] {
            let op = e.operator(20).unwrap();
            let x = random_vec(n, 5);
            let ax = op.apply_slice(&x).unwrap();
            let w = random_vec(2 * 20, 6);
            let y = match e.kind() {
                EnsembleKind::Gaussian => MeasurementVector::Real(w[..20].to_vec()),
                EnsembleKind::Fourier => {
                    MeasurementVector::Complex((0..20).map(|i| Complex64::new(w[i], w[20 + i])).collect())
                }
            };
            let lhs: f64 = match (&ax, &y) {
                (MeasurementVector::Real(a), MeasurementVector::Real(b)) => a.iter().zip(b).map(|(p, q)| p * q).sum(),
                (MeasurementVector::Complex(a), MeasurementVector::Complex(b)) => {
                    a.iter().zip(b).map(|(p, q)| p.re * q.re + p.im * q.im).sum()
                }
                _ => unreachable!(),
            };
            let aty = op.adjoint(&y).unwrap();
            let rhs: f64 = aty.iter().zip(&x).map(|(p, q)| p * q).sum();
            assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        let e = MeasurementEnsemble::gaussian(10, 1).unwrap();
        assert!(e.operator(0).is_err());
        assert!(e.operator(11).is_err());
        let op = e.operator(5).unwrap();
        assert!(matches!(
            op.apply_slice(&[0.0; 9]),
            Err(Error::DimensionMismatch {
                expected: 10,
                actual: 9
            })
        ));
        assert!(e.gaussian_row(10).is_err());
        assert!("hadamard".parse::<EnsembleKind>().is_err());
        assert_eq!("Fourier".parse::<EnsembleKind>().unwrap(), EnsembleKind::Fourier);
    }
}
