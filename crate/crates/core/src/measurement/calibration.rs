use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::{CrossValidationMatrix, EnsembleKind, MeasurementEnsemble, MeasurementVector};
use crate::signal_model::{vectorize, Frame, SignalVector};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"ARCSCAL\0";
const VERSION: u32 = 1;

/// Background measurements through the full ensemble (`β`, unscaled) and
/// through the cross-validation matrix (`ζ`).
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundCalibration {
    pub kind: EnsembleKind,
    pub dim: usize,
    pub ensemble_seed: u64,
    /// Zero when no cross-validation matrix was used.
    pub cv_seed: u64,
    pub frame_count: usize,
    pub beta: MeasurementVector,
    pub zeta: Vec<f64>,
}

fn mean_frame(frames: &[SignalVector], dim: usize) -> Result<Vec<f64>> {
    if frames.is_empty() {
        return Err(Error::invalid("calibration needs at least one background frame"));
    }
    let mut mean = vec![0.0; dim];
    for f in frames {
        if f.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: f.dim(),
            });
        }
        for (m, v) in mean.iter_mut().zip(f.iter()) {
            *m += v;
        }
    }
    let j = frames.len() as f64;
    mean.iter_mut().for_each(|m| *m /= j);
    Ok(mean)
}

/// Averages background-only frames through the full ensemble and `Ψ`.
///
/// Both maps are linear, so the mean of the measurements is computed as the
/// measurement of the mean frame.
pub fn calibrate_background(
    frames: &[SignalVector],
    ensemble: &MeasurementEnsemble,
    cv: Option<&CrossValidationMatrix>,
) -> Result<BackgroundCalibration> {
    let mean = mean_frame(frames, ensemble.dim())?;
    let beta = ensemble.measure_full(&mean)?;
    let zeta = match cv {
        Some(cv) => cv.apply(&mean)?,
        None => Vec::new(),
    };
    Ok(BackgroundCalibration {
        kind: ensemble.kind(),
        dim: ensemble.dim(),
        ensemble_seed: ensemble.seed(),
        cv_seed: cv.map_or(0, |c| c.seed()),
        frame_count: frames.len(),
        beta,
        zeta,
    })
}

impl BackgroundCalibration {
    pub fn from_frames(
        frames: &[Frame],
        ensemble: &MeasurementEnsemble,
        cv: Option<&CrossValidationMatrix>,
    ) -> Result<Self> {
        let vectors: Vec<SignalVector> = frames.iter().map(vectorize).collect();
        calibrate_background(&vectors, ensemble, cv)
    }

    pub fn cv_rows(&self) -> usize {
        self.zeta.len()
    }

    /// `β_t`: the first `rows` entries of `β` rescaled by `√(n/rows)`.
    pub fn beta_t(&self, rows: usize) -> Result<MeasurementVector> {
        if rows == 0 || rows > self.beta.len() {
            return Err(Error::invalid(format!("M_t = {rows} outside 1..={}", self.beta.len())));
        }
        Ok(self.beta.prefix(rows).scaled((self.dim as f64 / rows as f64).sqrt()))
    }

    /// `ξ_t = y_t − β_t`.
    pub fn foreground_measurements(&self, y: &MeasurementVector) -> Result<MeasurementVector> {
        y.sub(&self.beta_t(y.len())?)
    }

    /// `γ_t = χ_t − ζ`.
    pub fn cv_foreground(&self, chi: &[f64]) -> Result<Vec<f64>> {
        if chi.len() != self.zeta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.zeta.len(),
                actual: chi.len(),
            });
        }
        Ok(chi.iter().zip(&self.zeta).map(|(a, b)| a - b).collect())
    }

    pub fn check_compatible(&self, ensemble: &MeasurementEnsemble, cv: Option<&CrossValidationMatrix>) -> Result<()> {
        if self.kind != ensemble.kind() || self.dim != ensemble.dim() || self.ensemble_seed != ensemble.seed() {
            return Err(Error::invalid("calibration was made with a different ensemble"));
        }
        if let Some(cv) = cv {
            if cv.rows() != self.cv_rows() || cv.seed() != self.cv_seed || cv.dim() != self.dim {
                return Err(Error::invalid(
                    "calibration was made with a different cross-validation matrix",
                ));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.kind.code().to_le_bytes());
        for v in [
            self.dim as u64,
            self.zeta.len() as u64,
            self.ensemble_seed,
            self.cv_seed,
            self.frame_count as u64,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        match &self.beta {
            MeasurementVector::Real(b) => b.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
            MeasurementVector::Complex(b) => b.iter().for_each(|c| {
                out.extend_from_slice(&c.re.to_le_bytes());
                out.extend_from_slice(&c.im.to_le_bytes());
            }),
        }
        self.zeta.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
        out
    }

    pub fn from_bytes(data: &[u8]) -> std::result::Result<Self, String> {
        let mut cursor = Reader { data, pos: 0 };
        if cursor.take(8)? != MAGIC {
            return Err("not a calibration file".into());
        }
        let version = cursor.u32()?;
        if version != VERSION {
            return Err(format!("unsupported calibration version {version}"));
        }
        let kind = EnsembleKind::from_code(cursor.u32()?).ok_or("unknown ensemble kind")?;
        let dim = cursor.u64()? as usize;
        let r = cursor.u64()? as usize;
        let ensemble_seed = cursor.u64()?;
        let cv_seed = cursor.u64()?;
        let frame_count = cursor.u64()? as usize;
        let beta = match kind {
            EnsembleKind::Gaussian => {
                MeasurementVector::Real((0..dim).map(|_| cursor.f64()).collect::<Result<_, _>>()?)
            }
            EnsembleKind::Fourier => MeasurementVector::Complex(
                (0..dim)
                    .map(|_| Ok(Complex64::new(cursor.f64()?, cursor.f64()?)))
                    .collect::<Result<_, String>>()?,
            ),
        };
        let zeta = (0..r).map(|_| cursor.f64()).collect::<Result<_, _>>()?;
        if cursor.pos != data.len() {
            return Err("trailing bytes after calibration payload".into());
        }
        Ok(Self {
            kind,
            dim,
            ensemble_seed,
            cv_seed,
            frame_count,
            beta,
            zeta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&data).map_err(|msg| Error::parse(path, 0, msg))
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, k: usize) -> std::result::Result<&[u8], String> {
        let end = self.pos + k;
        let s = self.data.get(self.pos..end).ok_or("truncated calibration file")?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
