//! Blob tracking on low-resolution frames, and track files.

use std::fs;
use std::path::Path;

use super::warp::WarpParams;
use crate::signal_model::Frame;
use crate::{Error, Result};

/// Largest 8-connected component of `|frame − background| ≥ threshold` as a
/// warp of the unit-square template: `p = (width, height, col, row)` of its
/// bounding box. Images are column-major `side × side`.
pub fn blob_track_slices(frame: &[f64], background: &[f64], side: usize, threshold: f64) -> Result<Option<WarpParams>> {
    if frame.len() != side * side || background.len() != side * side {
        return Err(Error::DimensionMismatch {
            expected: side * side,
            actual: if frame.len() != side * side {
                frame.len()
            } else {
                background.len()
            },
        });
    }
    let mask: Vec<bool> = frame
        .iter()
        .zip(background)
        .map(|(f, b)| (f - b).abs() >= threshold)
        .collect();
    let mut seen = vec![false; mask.len()];
    let mut best: Option<(usize, [usize; 4])> = None;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut area = 0;
        // col_min, col_max, row_min, row_max
        let mut bbox = [usize::MAX, 0, usize::MAX, 0];
        while let Some(i) = stack.pop() {
            area += 1;
            let (c, r) = (i / side, i % side);
            bbox = [bbox[0].min(c), bbox[1].max(c), bbox[2].min(r), bbox[3].max(r)];
            for dc in -1i64..=1 {
                for dr in -1i64..=1 {
                    let (nc, nr) = (c as i64 + dc, r as i64 + dr);
                    if nc < 0 || nr < 0 || nc >= side as i64 || nr >= side as i64 {
                        continue;
                    }
                    let j = nc as usize * side + nr as usize;
                    if mask[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if best.is_none_or(|(a, _)| area > a) {
            best = Some((area, bbox));
        }
    }
    Ok(best
        .map(|(_, [c0, c1, r0, r1])| WarpParams::new((c1 - c0 + 1) as f64, (r1 - r0 + 1) as f64, c0 as f64, r0 as f64)))
}

pub fn blob_track(frame: &Frame, background: &Frame, threshold: f64) -> Result<Option<WarpParams>> {
    if frame.side() != background.side() {
        return Err(Error::DimensionMismatch {
            expected: background.side(),
            actual: frame.side(),
        });
    }
    blob_track_slices(frame.pixels(), background.pixels(), frame.side(), threshold)
}

/// Per-frame tracks: `None` when the frame is untracked, otherwise one warp
/// per object. Index `t − 1` holds frame `t`.
pub type TrackSequence = Vec<Option<Vec<WarpParams>>>;

/// Writes `t,p1,p2,p3,p4` rows, one per object, and `t,none` for untracked
/// frames.
pub fn write_tracks(path: &Path, tracks: &TrackSequence) -> Result<()> {
    let mut out = String::from("t,p1,p2,p3,p4\n");
    for (i, frame) in tracks.iter().enumerate() {
        let t = i + 1;
        match frame {
            None => out.push_str(&format!("{t},none\n")),
            Some(objects) => {
                for p in objects {
                    out.push_str(&format!("{t},{},{},{},{}\n", p.p1, p.p2, p.p3, p.p4));
                }
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a track file for a sequence of `frames` frames. Frames without rows
/// are untracked.
pub fn read_tracks(path: &Path, frames: usize) -> Result<TrackSequence> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut tracks: TrackSequence = vec![None; frames];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with('t')) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |msg: &str| Error::parse(path, i + 1, msg);
        let t: usize = fields[0].parse().map_err(|_| bad("bad frame index"))?;
        if t == 0 || t > frames {
            return Err(bad("frame index out of range"));
        }
        if fields.len() >= 2 && fields[1] == "none" {
            continue;
        }
        if fields.len() != 5 {
            return Err(bad("expected t,p1,p2,p3,p4 or t,none"));
        }
        let mut p = [0.0; 4];
        for (slot, s) in p.iter_mut().zip(&fields[1..]) {
            *slot = s.parse().map_err(|_| bad("bad warp parameter"))?;
        }
        tracks[t - 1]
            .get_or_insert_with(Vec::new)
            .push(WarpParams::from_array(p));
    }
    Ok(tracks)
}
