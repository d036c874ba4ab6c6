//! Frame sequences with optional ground truth, in memory and on disk.
//!
//! On-disk layout:
//!
//! ```text
//! frames/frame_00000.pgm …   background-only frames first, then the sequence
//! manifest.csv               file,background_only
//! ground_truth.csv           t,s_true,visible   (t is 1-based over the sequence)
//! tracks.csv                 t,p1,p2,p3,p4      (low-resolution units)
//! ```

use std::fs;
use std::path::Path;

use crate::arcs_lrt::{read_tracks, write_tracks, TrackSequence, WarpParams};
use crate::signal_model::{
    read_ground_truth, read_pgm, vectorize, write_ground_truth, write_pgm, Frame, GroundTruthRow, Rect, SignalVector,
    SyntheticSequence,
};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub side: usize,
    /// `x_t`; index `t − 1` holds frame `t`.
    pub frames: Vec<SignalVector>,
    pub background_frames: Vec<SignalVector>,
    pub sparsity: Option<Vec<usize>>,
    pub visible: Option<Vec<bool>>,
    /// Exact `f_t`, known for in-memory synthetic sequences only.
    pub foregrounds: Option<Vec<SignalVector>>,
    pub boxes: Option<Vec<Vec<Rect>>>,
    pub tracks: Option<TrackSequence>,
}

/// Axis-aligned boxes as unit-square warps in low-resolution pixel units.
pub fn manual_tracks(boxes: &[Vec<Rect>], visible: &[bool], factor: usize) -> TrackSequence {
    let d = factor as f64;
    boxes
        .iter()
        .zip(visible)
        .map(|(frame, &vis)| {
            (vis && !frame.is_empty()).then(|| {
                frame
                    .iter()
                    .map(|b| {
                        WarpParams::new(
                            b.width as f64 / d,
                            b.height as f64 / d,
                            b.col as f64 / d,
                            b.row as f64 / d,
                        )
                    })
                    .collect()
            })
        })
        .collect()
}

impl Dataset {
    pub fn from_synthetic(seq: SyntheticSequence) -> Self {
        let truth = seq.truth;
        Self {
            side: truth.side,
            frames: seq.observations,
            background_frames: seq.background_frames,
            sparsity: Some(truth.sparsity),
            visible: Some(truth.visible),
            foregrounds: Some(truth.foregrounds),
            boxes: Some(truth.boxes),
            tracks: None,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.side * self.side
    }

    /// Keeps the first `frames` frames.
    pub fn truncate(&mut self, frames: usize) {
        self.frames.truncate(frames);
        if let Some(v) = &mut self.sparsity {
            v.truncate(frames);
        }
        if let Some(v) = &mut self.visible {
            v.truncate(frames);
        }
        if let Some(v) = &mut self.foregrounds {
            v.truncate(frames);
        }
        if let Some(v) = &mut self.boxes {
            v.truncate(frames);
        }
        if let Some(v) = &mut self.tracks {
            v.truncate(frames);
        }
    }

    /// Tracks from a file, or from ground-truth boxes.
    pub fn manual_tracks(&self, factor: usize) -> Option<TrackSequence> {
        if let Some(t) = &self.tracks {
            return Some(t.clone());
        }
        let (boxes, visible) = (self.boxes.as_ref()?, self.visible.as_ref()?);
        Some(manual_tracks(boxes, visible, factor))
    }

    pub fn ground_truth_rows(&self) -> Option<Vec<GroundTruthRow>> {
        let s = self.sparsity.as_ref()?;
        let v = self.visible.as_ref()?;
        Some(
            s.iter()
                .zip(v)
                .enumerate()
                .map(|(i, (&s_true, &visible))| GroundTruthRow {
                    t: i + 1,
                    s_true,
                    visible,
                })
                .collect(),
        )
    }

    /// Writes the directory layout. Frames are clamped to `[0, 1]` and
    /// quantised to 8 bits. Manual tracks are written for `factor`.
    pub fn write(&self, dir: &Path, factor: usize) -> Result<()> {
        let frames_dir = dir.join("frames");
        fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
        let mut manifest = String::from("file,background_only\n");
        let all = self
            .background_frames
            .iter()
            .map(|f| (f, true))
            .chain(self.frames.iter().map(|f| (f, false)));
        for (i, (x, bg)) in all.enumerate() {
            let name = format!("frame_{i:05}.pgm");
            let pixels = x.iter().map(|v| v.clamp(0.0, 1.0)).collect();
            write_pgm(&frames_dir.join(&name), &Frame::new(self.side, pixels)?)?;
            manifest.push_str(&format!("frames/{name},{}\n", u8::from(bg)));
        }
        let path = dir.join("manifest.csv");
        fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
        if let Some(rows) = self.ground_truth_rows() {
            write_ground_truth(&dir.join("ground_truth.csv"), &rows)?;
        }
        if let Some(tracks) = self.manual_tracks(factor) {
            write_tracks(&dir.join("tracks.csv"), &tracks)?;
        }
        Ok(())
    }

    /// Loads a directory; the first `calibration_frames` background-only
    /// frames of the manifest become the calibration set.
    pub fn load(dir: &Path, calibration_frames: usize) -> Result<Self> {
        let path = dir.join("manifest.csv");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut frames = Vec::new();
        let mut background_frames = Vec::new();
        let mut side = None;
        for (i, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (file, flag) = line
                .rsplit_once(',')
                .ok_or_else(|| Error::parse(&path, i + 1, "expected file,background_only"))?;
            let background = match flag.trim() {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(Error::parse(&path, i + 1, format!("bad flag {other:?}"))),
            };
            if background && background_frames.len() >= calibration_frames {
                continue;
            }
            let frame = read_pgm(&dir.join(file.trim()))?;
            if *side.get_or_insert(frame.side()) != frame.side() {
                return Err(Error::parse(&path, i + 1, "frames differ in size"));
            }
            let x = vectorize(&frame);
            if background {
                background_frames.push(x);
            } else {
                frames.push(x);
            }
        }
        let side = side.ok_or_else(|| Error::invalid(format!("{} lists no frames", path.display())))?;
        let truth_path = dir.join("ground_truth.csv");
        let (sparsity, visible) = if truth_path.exists() {
            let rows = read_ground_truth(&truth_path)?;
            if rows.len() != frames.len() || rows.iter().enumerate().any(|(i, r)| r.t != i + 1) {
                return Err(Error::invalid("ground truth rows do not match the frame sequence"));
            }
            (
                Some(rows.iter().map(|r| r.s_true).collect()),
                Some(rows.iter().map(|r| r.visible).collect()),
            )
        } else {
            (None, None)
        };
        let tracks_path = dir.join("tracks.csv");
        let tracks = if tracks_path.exists() {
            Some(read_tracks(&tracks_path, frames.len())?)
        } else {
            None
        };
        Ok(Self {
            side,
            frames,
            background_frames,
            sparsity,
            visible,
            foregrounds: None,
            boxes: None,
            tracks,
        })
    }
}
