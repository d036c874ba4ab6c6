//! Binary PGM frames and the ground-truth CSV.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::Frame;
use crate::{Error, Result};

/// Writes an 8-bit binary PGM (`P5`, maxval 255). Intensities are rounded to
/// the nearest of the 256 levels.
pub fn write_pgm(path: &Path, frame: &Frame) -> Result<()> {
    let side = frame.side();
    let mut buf = format!("P5\n{side} {side}\n255\n").into_bytes();
    buf.reserve(side * side);
    for r in 0..side {
        for c in 0..side {
            buf.push((frame.get(r, c) * 255.0).round() as u8);
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn next_token<'a>(data: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &data[start..*pos])
}

/// Reads a square binary PGM with maxval 255, scaling intensities to `[0, 1]`.
pub fn read_pgm(path: &Path) -> Result<Frame> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::parse(path, 1, msg);
    let mut pos = 0;
    if next_token(&data, &mut pos) != Some(b"P5") {
        return Err(bad("missing P5 magic"));
    }
    let mut number = |what: &str| -> Result<usize> {
        next_token(&data, &mut pos)
            .and_then(|t| std::str::from_utf8(t).ok())
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(&format!("bad {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    if width != height {
        return Err(bad("frames must be square"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let raster = data
        .get(pos..pos + width * height)
        .ok_or_else(|| bad("truncated raster"))?;
    let side = width;
    let mut pixels = vec![0.0; side * side];
    for r in 0..side {
        for c in 0..side {
            pixels[c * side + r] = f64::from(raster[r * side + c]) / 255.0;
        }
    }
    Frame::new(side, pixels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundTruthRow {
    pub t: usize,
    pub s_true: usize,
    pub visible: bool,
}

/// Writes `t,s_true,visible` rows.
pub fn write_ground_truth(path: &Path, rows: &[GroundTruthRow]) -> Result<()> {
    let mut out = String::from("t,s_true,visible\n");
    for row in rows {
        out.push_str(&format!("{},{},{}\n", row.t, row.s_true, u8::from(row.visible)));
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruthRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad integer {s:?}")))
        };
        if fields.len() != 3 {
            return Err(Error::parse(path, i + 1, "expected t,s_true,visible"));
        }
        rows.push(GroundTruthRow {
            t: parse(fields[0])?,
            s_true: parse(fields[1])?,
            visible: match fields[2] {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(Error::parse(path, i + 1, format!("bad flag {other:?}"))),
            },
        });
    }
    Ok(rows)
}
