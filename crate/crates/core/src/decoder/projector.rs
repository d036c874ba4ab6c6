//! Euclidean projection onto the affine feasible set `{z : Φ_t z = ξ}`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::measurement::{MeasurementEnsemble, MeasurementVector, RowSubsetOperator};
use crate::{Error, Result};

pub(crate) enum Projector {
    /// `Π(v) = v − Q(Qᵀv) + x₀`, with `Φ_tᵀ = QR`.
    RowSpace { q: DMatrix<f64>, r: DMatrix<f64> },
    /// Same map with `I − QQᵀ` formed explicitly; cheaper once `M_t > n/2`.
    Dense {
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        p: DMatrix<f64>,
    },
    /// Real signals have conjugate-symmetric spectra, so constraining
    /// frequency `k` also fixes `n − k`. The projection overwrites those
    /// frequencies of `v`'s spectrum with their targets.
    Fourier {
        ensemble: MeasurementEnsemble,
        freqs: Vec<usize>,
        scale: f64,
    },
}

/// Targets of one right-hand side, in the form the projector consumes.
pub(crate) enum Targets {
    /// `x₀`, the least-norm feasible point.
    Offset(Vec<f64>),
    /// Target spectrum with a mask of constrained frequencies.
    Spectrum {
        values: Vec<Complex64>,
        mask: Vec<bool>,
        offset: Vec<f64>,
    },
}

impl Targets {
    pub fn offset(&self) -> &[f64] {
        match self {
            Targets::Offset(x) => x,
            Targets::Spectrum { offset, .. } => offset,
        }
    }
}

impl Projector {
    pub fn new(op: &RowSubsetOperator) -> Result<Self> {
        if let Some(a) = op.matrix() {
            let qr = a.transpose().qr();
            let q = qr.q();
            let r = qr.r();
            let floor = r.diagonal().abs().max() * 1e-13;
            if r.diagonal().iter().any(|d| d.abs() <= floor) {
                return Err(Error::Factorization("operator rows are rank deficient".into()));
            }
            let n = op.dim();
            if 2 * op.rows() > n {
                let mut p = DMatrix::identity(n, n);
                p.gemm(-1.0, &q, &q.transpose(), 1.0);
                Ok(Projector::Dense { q, r, p })
            } else {
                Ok(Projector::RowSpace { q, r })
            }
        } else {
            Ok(Projector::Fourier {
                ensemble: op.ensemble().clone(),
                freqs: op.frequencies().expect("Fourier operator").to_vec(),
                scale: op.scale(),
            })
        }
    }

    pub fn targets(&self, xi: &MeasurementVector) -> Result<Targets> {
        match (self, xi) {
            (Projector::RowSpace { q, r } | Projector::Dense { q, r, .. }, MeasurementVector::Real(b)) => {
                // Rᵀw = b, x₀ = Qw
                let rt = r.transpose();
                let w = rt
                    .solve_lower_triangular(&nalgebra::DVector::from_column_slice(b))
                    .ok_or_else(|| Error::Factorization("singular triangular factor".into()))?;
                Ok(Targets::Offset((q * w).as_slice().to_vec()))
            }
            (Projector::Fourier { ensemble, freqs, scale }, MeasurementVector::Complex(y)) => {
                let n = ensemble.dim();
                let mut sum = vec![Complex64::new(0.0, 0.0); n];
                let mut count = vec![0u32; n];
                for (&k, &v) in freqs.iter().zip(y) {
                    let t = v / *scale;
                    let k2 = (n - k) % n;
                    sum[k] += t;
                    count[k] += 1;
                    sum[k2] += t.conj();
                    count[k2] += 1;
                }
                let mask: Vec<bool> = count.iter().map(|&c| c > 0).collect();
                let values: Vec<Complex64> = sum
                    .iter()
                    .zip(&count)
                    .map(|(s, &c)| if c > 0 { s / f64::from(c) } else { *s })
                    .collect();
                let offset = ensemble.idft_real(values.clone());
                Ok(Targets::Spectrum { values, mask, offset })
            }
            _ => Err(Error::invalid("measurement kind does not match the operator")),
        }
    }

    /// Projects every column of `v` in place; column `j` uses `targets[cols[j]]`.
    pub fn project(&self, v: &mut DMatrix<f64>, targets: &[Targets], cols: &[usize]) {
        match self {
            Projector::RowSpace { q, .. } => {
                let w = q.tr_mul(v);
                v.gemm(-1.0, q, &w, 1.0);
                add_offsets(v, targets, cols);
            }
            Projector::Dense { p, .. } => {
                let mut out = p * &*v;
                add_offsets(&mut out, targets, cols);
                *v = out;
            }
            Projector::Fourier { ensemble, .. } => {
                for (j, &c) in cols.iter().enumerate() {
                    let Targets::Spectrum { values, mask, .. } = &targets[c] else {
                        unreachable!("Fourier targets");
                    };
                    let mut col = v.column_mut(j);
                    let mut spectrum = ensemble.dft(col.as_slice());
                    for k in 0..spectrum.len() {
                        if mask[k] {
                            spectrum[k] = values[k];
                        }
                    }
                    col.copy_from_slice(&ensemble.idft_real(spectrum));
                }
            }
        }
    }
}

fn add_offsets(v: &mut DMatrix<f64>, targets: &[Targets], cols: &[usize]) {
    for (j, &c) in cols.iter().enumerate() {
        let mut col = v.column_mut(j);
        for (a, b) in col.iter_mut().zip(targets[c].offset()) {
            *a += b;
        }
    }
}
