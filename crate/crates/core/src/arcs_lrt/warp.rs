//! Block downsampling, zero-skew affine tracks, and the track-to-sparsity map.

use crate::signal_model::Frame;
use crate::{Error, Result};

/// Zero-skew affine warp from template to low-resolution coordinates:
/// `(x, y) ↦ (p1·x + p3, p2·y + p4)`. Units are low-resolution pixels;
/// `x` runs along columns and `y` along rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpParams {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
}

impl WarpParams {
    pub fn new(p1: f64, p2: f64, p3: f64, p4: f64) -> Self {
        Self { p1, p2, p3, p4 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.p1, self.p2, self.p3, self.p4]
    }

    pub fn from_array(p: [f64; 4]) -> Self {
        Self::new(p[0], p[1], p[2], p[3])
    }

    pub fn is_valid(&self) -> bool {
        self.p1 > 0.0 && self.p2 > 0.0 && self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Corners of the object template, in an order that traces its outline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateOutline {
    corners: [(f64, f64); 4],
}

impl Default for TemplateOutline {
    fn default() -> Self {
        Self {
            corners: [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
        }
    }
}

impl TemplateOutline {
    pub fn new(corners: [(f64, f64); 4]) -> Result<Self> {
        let t = Self { corners };
        if t.shoelace_sum() == 0.0 || !t.shoelace_sum().is_finite() {
            return Err(Error::invalid("template outline encloses no area"));
        }
        Ok(t)
    }

    pub fn corners(&self) -> &[(f64, f64); 4] {
        &self.corners
    }

    /// `Σᵢ (tᵢˣ tᵢ₊₁ʸ − tᵢʸ tᵢ₊₁ˣ)`, twice the signed area.
    pub fn shoelace_sum(&self) -> f64 {
        (0..4)
            .map(|i| {
                let (x0, y0) = self.corners[i];
                let (x1, y1) = self.corners[(i + 1) % 4];
                x0 * y1 - y0 * x1
            })
            .sum()
    }
}

/// How the warp's linear part scales template area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AreaMode {
    /// Determinant of the warp's linear part, `p1·p2`.
    #[default]
    Geometric,
    /// The cross term `p1·p4 − p2·p3`.
    Literal,
}

impl std::fmt::Display for AreaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AreaMode::Geometric => "geometric",
            AreaMode::Literal => "literal",
        })
    }
}

impl std::str::FromStr for AreaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(AreaMode::Geometric),
            "literal" => Ok(AreaMode::Literal),
            other => Err(Error::invalid(format!("unknown area mode {other:?}"))),
        }
    }
}

/// High-resolution area of the warped template, before rounding up.
pub fn warped_area(p: &WarpParams, template: &TemplateOutline, factor: usize, mode: AreaMode) -> f64 {
    let det = match mode {
        AreaMode::Geometric => p.p1 * p.p2,
        AreaMode::Literal => p.p1 * p.p4 - p.p2 * p.p3,
    };
    let d2 = (factor * factor) as f64;
    (d2 * det / 2.0 * template.shoelace_sum()).abs()
}

/// Predicted foreground sparsity of a track: the warped area rounded up,
/// never below 1.
pub fn warp_to_sparsity(p: &WarpParams, template: &TemplateOutline, factor: usize, mode: AreaMode) -> usize {
    let area = warped_area(p, template, factor, mode);
    // keep exact integers from drifting to the next value
    let guarded = area - 1e-9 * area.max(1.0);
    (guarded.ceil() as usize).max(1)
}

/// High-resolution pixel-centre coordinate of a low-resolution pixel centre
/// (1-based): `t_X = D·t_Z − (D − 1)/2`.
pub fn low_to_high(coord: f64, factor: usize) -> f64 {
    let d = factor as f64;
    d * coord - (d - 1.0) / 2.0
}

/// Block means over `D×D` tiles of a column-major `side × side` image.
pub fn downsample_slice(pixels: &[f64], side: usize, factor: usize) -> Result<Vec<f64>> {
    if factor == 0 || !side.is_multiple_of(factor) {
        return Err(Error::invalid(format!(
            "downsampling factor {factor} does not divide side {side}"
        )));
    }
    if pixels.len() != side * side {
        return Err(Error::DimensionMismatch {
            expected: side * side,
            actual: pixels.len(),
        });
    }
    let low = side / factor;
    let mut out = vec![0.0; low * low];
    let inv = 1.0 / (factor * factor) as f64;
    for lc in 0..low {
        for lr in 0..low {
            let mut sum = 0.0;
            for c in lc * factor..(lc + 1) * factor {
                let col = &pixels[c * side..(c + 1) * side];
                sum += col[lr * factor..(lr + 1) * factor].iter().sum::<f64>();
            }
            out[lc * low + lr] = sum * inv;
        }
    }
    Ok(out)
}

pub fn downsample(frame: &Frame, factor: usize) -> Result<Frame> {
    let pixels = downsample_slice(frame.pixels(), frame.side(), factor)?;
    Frame::new(frame.side() / factor, pixels)
}
