//! Experiment configuration: line-oriented `key = value` text with
//! `[section]` headers. `#` starts a comment. Numbers may be written as
//! fractions such as `4/255`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::arcs_lrt::AreaMode;
use crate::decoder::SolverConfig;
use crate::measurement::{cv_row_count, EnsembleKind};
use crate::signal_model::{BackgroundPattern, ForegroundModel, ObjectSpec, SceneConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Oracle,
    ArcsCv,
    ArcsLrt,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Oracle, Strategy::ArcsCv, Strategy::ArcsLrt];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Oracle => "oracle",
            Strategy::ArcsCv => "arcs_cv",
            Strategy::ArcsLrt => "arcs_lrt",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Strategy::Oracle),
            "arcs_cv" | "arcs-cv" | "cv" => Ok(Strategy::ArcsCv),
            "arcs_lrt" | "arcs-lrt" | "lrt" => Ok(Strategy::ArcsLrt),
            other => Err(Error::invalid(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Where low-resolution tracks come from.
#[derive(Debug, Clone, PartialEq)]
pub enum TrackSource {
    /// Ground-truth boxes, only on frames where every object is fully visible.
    Manual,
    /// The blob tracker on the downsampled frame.
    Blob,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synthetic(SceneConfig),
    /// A directory in the layout written by `write_dataset`.
    Directory(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvParams {
    pub epsilon: f64,
    pub rho: f64,
    pub rows: Option<usize>,
    pub seed: u64,
}

impl CvParams {
    pub fn row_count(&self) -> Result<usize> {
        let needed = cv_row_count(self.epsilon, self.rho)?;
        Ok(self.rows.unwrap_or(needed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrtParams {
    pub lambda: f64,
    pub factor: usize,
    pub sigma: [f64; 4],
    pub mode: AreaMode,
    pub delta: f64,
    pub tracks: TrackSource,
    pub blob_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub strategy: Strategy,
    pub seed: u64,
    /// Overrides the dataset length when set.
    pub frames: Option<usize>,
    pub initial_s_hat: usize,
    pub phase_diagram: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub dataset: DatasetSource,
    /// Background-only frames used for calibration.
    pub calibration_frames: usize,
    pub model: ForegroundModel,
    pub ensemble: EnsembleKind,
    pub ensemble_seed: u64,
    pub tau_d: f64,
    /// Defaults to `max(r, 8)`.
    pub m_floor: Option<usize>,
    pub solver: SolverConfig,
    pub cv: CvParams,
    pub lrt: LrtParams,
}

/// Default synthetic scene: a 32×32 gradient with a single 8×5 object.
pub fn default_scene() -> SceneConfig {
    SceneConfig {
        side: 32,
        frames: 20,
        background_frames: 30,
        model: ForegroundModel::new(0.1, (1.0f64 / 255.0).powi(2)).expect("valid model"),
        background: BackgroundPattern::Gradient { low: 0.2, high: 0.6 },
        repeat: false,
        objects: vec![ObjectSpec::fixed(10, 12, 8, 5)],
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::ArcsCv,
            seed: 1,
            frames: None,
            initial_s_hat: 0,
            phase_diagram: None,
            out: None,
            dataset: DatasetSource::Synthetic(default_scene()),
            calibration_frames: 30,
            model: ForegroundModel::new(0.1, (4.0f64 / 255.0).powi(2)).expect("valid model"),
            ensemble: EnsembleKind::Gaussian,
            ensemble_seed: 11,
            tau_d: 0.9,
            m_floor: None,
            solver: SolverConfig {
                convergence_tol: 1e-4,
                ..SolverConfig::default()
            },
            cv: CvParams {
                epsilon: 0.5,
                rho: 0.1,
                rows: None,
                seed: 12,
            },
            lrt: LrtParams {
                lambda: 0.1,
                factor: 2,
                sigma: [1.0, 1.0, 3.0, 3.0],
                mode: AreaMode::Geometric,
                delta: 0.25,
                tracks: TrackSource::Manual,
                blob_threshold: 0.05,
            },
        }
    }
}

/// Parsed `key = value` text. Keys outside any section live under `""`.
#[derive(Debug, Clone, Default)]
pub struct KeyValueDocument {
    entries: BTreeMap<(String, String), Vec<(usize, String)>>,
}

impl KeyValueDocument {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut doc = Self::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(path, i + 1, "unterminated section header"))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "expected key = value"))?;
            doc.entries
                .entry((section.clone(), key.trim().to_string()))
                .or_default()
                .push((i + 1, value.trim().to_string()));
        }
        Ok(doc)
    }

    fn keys(&self) -> impl Iterator<Item = (&str, &str, usize)> {
        self.entries.iter().map(|((s, k), v)| (s.as_str(), k.as_str(), v[0].0))
    }

    fn get(&self, section: &str, key: &str) -> Option<&(usize, String)> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .and_then(|v| v.last())
    }

    fn all(&self, section: &str, key: &str) -> &[(usize, String)] {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Parses `3`, `0.25`, `1e-3` or a fraction `4/255`.
pub fn parse_number(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            (b != 0.0).then_some(a / b)
        }
        None => s.parse().ok(),
    }
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    (
        "",
        &["strategy", "seed", "frames", "initial_s_hat", "phase_diagram", "out"],
    ),
    ("dataset", &["source", "path", "calibration_frames"]),
    ("scene", &["side", "noise", "background", "repeat", "object"]),
    ("model", &["tau", "sigma_b", "sigma_b_sq"]),
    ("measurement", &["ensemble", "ensemble_seed", "tau_d", "m_floor"]),
    ("solver", &["convergence_tol", "max_iterations", "feasibility_tol"]),
    ("cv", &["epsilon", "rho", "rows", "seed"]),
    (
        "lrt",
        &[
            "lambda",
            "downsample",
            "sigma",
            "mode",
            "delta",
            "tracks",
            "blob_threshold",
        ],
    ),
];

struct Reader<'a> {
    doc: &'a KeyValueDocument,
    path: &'a Path,
}

impl Reader<'_> {
    fn err(&self, line: usize, msg: String) -> Error {
        Error::parse(self.path, line, msg)
    }

    fn parsed<T>(&self, section: &str, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        match self.doc.get(section, key) {
            None => Ok(None),
            Some((line, v)) => f(v)
                .map(Some)
                .ok_or_else(|| self.err(*line, format!("bad value {v:?} for {key}"))),
        }
    }

    fn number(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.parsed(section, key, parse_number)
    }

    fn integer<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        self.parsed(section, key, |s| s.parse().ok())
    }

    fn text(&self, section: &str, key: &str) -> Option<&str> {
        self.doc.get(section, key).map(|(_, v)| v.as_str())
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

fn parse_background(s: &str) -> Option<BackgroundPattern> {
    let words: Vec<&str> = s.split_whitespace().collect();
    match words.as_slice() {
        ["constant", v] => Some(BackgroundPattern::Constant(parse_number(v)?)),
        ["gradient", lo, hi] => Some(BackgroundPattern::Gradient {
            low: parse_number(lo)?,
            high: parse_number(hi)?,
        }),
        _ => None,
    }
}

/// `x y width height [vx vy [first last]]`.
fn parse_object(s: &str) -> Option<ObjectSpec> {
    let w: Vec<f64> = s.split_whitespace().map(parse_number).collect::<Option<_>>()?;
    if !matches!(w.len(), 4 | 6 | 8) || w[2] < 1.0 || w[3] < 1.0 {
        return None;
    }
    let mut obj = ObjectSpec::fixed(0, 0, w[2] as usize, w[3] as usize);
    obj.x = w[0];
    obj.y = w[1];
    if w.len() >= 6 {
        obj.vx = w[4];
        obj.vy = w[5];
    }
    if w.len() == 8 {
        obj.first = w[6] as usize;
        obj.last = w[7] as usize;
    }
    Some(obj)
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses config text over the defaults. `path` is only used in errors
    /// and to resolve relative file references.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let doc = KeyValueDocument::parse(text, path)?;
        for (section, key, line) in doc.keys() {
            let known = KNOWN_KEYS
                .iter()
                .find(|(s, _)| *s == section)
                .is_some_and(|(_, keys)| keys.contains(&key));
            if !known {
                let name = if section.is_empty() {
                    key.to_string()
                } else {
                    format!("[{section}] {key}")
                };
                return Err(Error::parse(path, line, format!("unknown key {name}")));
            }
        }
        let r = Reader { doc: &doc, path };
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &str| base.join(p);
        let mut cfg = Self::default();

        if let Some(s) = r.text("", "strategy") {
            cfg.strategy = s.parse()?;
        }
        cfg.seed = r.integer("", "seed")?.unwrap_or(cfg.seed);
        cfg.frames = r.integer("", "frames")?.or(cfg.frames);
        cfg.initial_s_hat = r.integer("", "initial_s_hat")?.unwrap_or(cfg.initial_s_hat);
        cfg.phase_diagram = r.text("", "phase_diagram").map(resolve);
        cfg.out = r.text("", "out").map(resolve);

        cfg.calibration_frames = r
            .integer("dataset", "calibration_frames")?
            .unwrap_or(cfg.calibration_frames);
        match r.text("dataset", "source").unwrap_or("synthetic") {
            "synthetic" => {
                let mut scene = default_scene();
                scene.side = r.integer("scene", "side")?.unwrap_or(scene.side);
                if let Some(noise) = r.number("scene", "noise")? {
                    scene.model = ForegroundModel::new(scene.model.tau(), noise * noise)?;
                }
                scene.background = r
                    .parsed("scene", "background", parse_background)?
                    .unwrap_or(scene.background);
                scene.repeat = r.parsed("scene", "repeat", parse_bool)?.unwrap_or(scene.repeat);
                let objects = doc.all("scene", "object");
                if !objects.is_empty() {
                    scene.objects = objects
                        .iter()
                        .map(|(line, v)| parse_object(v).ok_or_else(|| r.err(*line, format!("bad object {v:?}"))))
                        .collect::<Result<_>>()?;
                }
                cfg.dataset = DatasetSource::Synthetic(scene);
            }
            "directory" => {
                let p = r
                    .text("dataset", "path")
                    .ok_or_else(|| Error::invalid("[dataset] source = directory needs a path"))?;
                cfg.dataset = DatasetSource::Directory(resolve(p));
            }
            other => return Err(Error::invalid(format!("unknown dataset source {other:?}"))),
        }

        let tau = r.number("model", "tau")?.unwrap_or(cfg.model.tau());
        let sb2 = match (r.number("model", "sigma_b")?, r.number("model", "sigma_b_sq")?) {
            (Some(_), Some(_)) => return Err(Error::invalid("give either sigma_b or sigma_b_sq, not both")),
            (Some(s), None) => s * s,
            (None, Some(v)) => v,
            (None, None) => cfg.model.sigma_b_sq(),
        };
        cfg.model = ForegroundModel::new(tau, sb2)?;

        if let Some(s) = r.text("measurement", "ensemble") {
            cfg.ensemble = s.parse()?;
        }
        cfg.ensemble_seed = r.integer("measurement", "ensemble_seed")?.unwrap_or(cfg.ensemble_seed);
        cfg.tau_d = r.number("measurement", "tau_d")?.unwrap_or(cfg.tau_d);
        cfg.m_floor = r.integer("measurement", "m_floor")?.or(cfg.m_floor);

        let s = &mut cfg.solver;
        s.convergence_tol = r.number("solver", "convergence_tol")?.unwrap_or(s.convergence_tol);
        s.max_iterations = r.integer("solver", "max_iterations")?.unwrap_or(s.max_iterations);
        s.feasibility_tol = r.number("solver", "feasibility_tol")?.unwrap_or(s.feasibility_tol);

        let c = &mut cfg.cv;
        c.epsilon = r.number("cv", "epsilon")?.unwrap_or(c.epsilon);
        c.rho = r.number("cv", "rho")?.unwrap_or(c.rho);
        c.rows = r.integer("cv", "rows")?.or(c.rows);
        c.seed = r.integer("cv", "seed")?.unwrap_or(c.seed);

        let l = &mut cfg.lrt;
        l.lambda = r.number("lrt", "lambda")?.unwrap_or(l.lambda);
        l.factor = r.integer("lrt", "downsample")?.unwrap_or(l.factor);
        l.delta = r.number("lrt", "delta")?.unwrap_or(l.delta);
        l.blob_threshold = r.number("lrt", "blob_threshold")?.unwrap_or(l.blob_threshold);
        if let Some(sigma) = r.parsed("lrt", "sigma", |s| {
            let v: Vec<f64> = s.split_whitespace().map(parse_number).collect::<Option<_>>()?;
            <[f64; 4]>::try_from(v).ok()
        })? {
            l.sigma = sigma;
        }
        if let Some(m) = r.text("lrt", "mode") {
            l.mode = m.parse()?;
        }
        if let Some(t) = r.text("lrt", "tracks") {
            l.tracks = match t {
                "manual" => TrackSource::Manual,
                "blob" => TrackSource::Blob,
                file => TrackSource::File(resolve(file)),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the shared groups and the active strategy's parameter group.
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if !(self.tau_d > 0.0 && self.tau_d <= 1.0) {
            return Err(Error::invalid(format!("tau_d = {} must lie in (0, 1]", self.tau_d)));
        }
        if self.calibration_frames == 0 {
            return Err(Error::invalid("calibration needs at least one background frame"));
        }
        if let DatasetSource::Synthetic(scene) = &self.dataset {
            scene.validate()?;
        }
        // the lookup floor depends on r for every strategy
        let r = self.cv.row_count()?;
        match self.strategy {
            Strategy::Oracle => {}
            Strategy::ArcsCv => {
                if r < cv_row_count(self.cv.epsilon, self.cv.rho)? {
                    return Err(Error::invalid(format!(
                        "{r} cross-validation rows are too few for epsilon = {}, rho = {}",
                        self.cv.epsilon, self.cv.rho
                    )));
                }
            }
            Strategy::ArcsLrt => {
                let l = &self.lrt;
                if !(l.lambda > 0.0) {
                    return Err(Error::invalid("lambda must be positive"));
                }
                if l.factor == 0 || self.side_hint().is_some_and(|side| side % l.factor != 0) {
                    return Err(Error::invalid(format!(
                        "downsampling factor {} must divide the frame side",
                        l.factor
                    )));
                }
                if l.sigma.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::invalid("track noise variances must be nonnegative"));
                }
                if !(l.blob_threshold > 0.0) {
                    return Err(Error::invalid("blob threshold must be positive"));
                }
            }
        }
        Ok(())
    }

    fn side_hint(&self) -> Option<usize> {
        match &self.dataset {
            DatasetSource::Synthetic(scene) => Some(scene.side),
            DatasetSource::Directory(_) => None,
        }
    }

    pub fn m_floor(&self) -> Result<usize> {
        Ok(self.m_floor.unwrap_or(self.cv.row_count()?.max(8)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(text, Path::new("/cfg/exp.conf"))
    }

    #[test]
    fn defaults_without_keys() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.m_floor().unwrap(), 52);
    }

    #[test]
    fn sections_and_overrides() {
        let cfg = parse(
            "strategy = arcs_lrt # comment\nseed = 9\nphase_diagram = pd.csv\n\
             [model]\nsigma_b = 4/255\n\
             [scene]\nside = 16\nnoise = 0\nobject = 1 2 3 4\nobject = 5 5 2 2 1 0 3 9\n\
             [lrt]\nlambda = 0.2\nsigma = 1 1 2 2\ntracks = blob\n",
        )
        .unwrap();
        assert_eq!(cfg.strategy, Strategy::ArcsLrt);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.phase_diagram, Some(PathBuf::from("/cfg/pd.csv")));
        assert!((cfg.model.sigma_b_sq() - (4.0f64 / 255.0).powi(2)).abs() < 1e-18);
        let DatasetSource::Synthetic(scene) = &cfg.dataset else {
            panic!()
        };
        assert_eq!(scene.side, 16);
        assert_eq!(scene.objects.len(), 2);
        assert_eq!(
            (scene.objects[1].vx, scene.objects[1].first, scene.objects[1].last),
            (1.0, 3, 9)
        );
        assert_eq!(cfg.lrt.sigma, [1.0, 1.0, 2.0, 2.0]);
        assert_eq!(cfg.lrt.tracks, TrackSource::Blob);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse("bogus = 1").is_err());
        assert!(parse("[cv]\nepsilon = x").is_err());
        assert!(parse("[cv\n").is_err());
        assert!(parse("strategy = magic").is_err());
        assert!(parse("[cv]\nrows = 10\nstrategy = arcs_cv").is_err());
        assert!(parse("strategy = arcs_cv\n[cv]\nrows = 10").is_err());
        assert!(parse("strategy = arcs_lrt\n[lrt]\ndownsample = 3").is_err());
        assert!(parse("strategy = arcs_lrt\n[lrt]\nlambda = 0").is_err());
        // parameter groups of inactive strategies are not checked
        assert!(parse("strategy = oracle\n[lrt]\nlambda = 0").is_ok());
    }

    #[test]
    fn fractions() {
        assert_eq!(parse_number("4/255"), Some(4.0 / 255.0));
        assert_eq!(parse_number("1e-3"), Some(1e-3));
        assert_eq!(parse_number("1/0"), None);
    }
}
