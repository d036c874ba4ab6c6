//! CSV and SVG output for finished runs.
//!
//! Wall-clock times go to `timing.txt` only, so every CSV is a pure function
//! of the configuration and seeds.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use super::run::{FrameMetrics, FrameStatus, RunOutput};
use crate::svg::{line_chart, LineSeries};
use crate::{Error, Result};

pub const METRICS_HEADER: &str = "t,s_true,s_hat,m_t,m_total,l2_error,iterations,status";
pub const SUMMARY_HEADER: &str =
    "strategy,n,frames,mean_s_true,mean_s_hat,mean_m_t,mean_m_total,mean_measurement_rate,mean_l2_error";

/// Column averages of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub strategy: String,
    pub dim: usize,
    pub frames: usize,
    pub mean_s_true: Option<f64>,
    pub mean_s_hat: f64,
    pub mean_m_t: f64,
    pub mean_m_total: f64,
    pub mean_l2_error: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

impl Summary {
    pub fn of(strategy: &str, dim: usize, metrics: &[FrameMetrics]) -> Self {
        let all_truth = metrics.iter().all(|m| m.s_true.is_some());
        Self {
            strategy: strategy.to_string(),
            dim,
            frames: metrics.len(),
            mean_s_true: all_truth.then(|| mean(metrics.iter().map(|m| m.s_true.unwrap_or(0) as f64))),
            mean_s_hat: mean(metrics.iter().map(|m| m.s_hat as f64)),
            mean_m_t: mean(metrics.iter().map(|m| m.m_t as f64)),
            mean_m_total: mean(metrics.iter().map(|m| m.m_total as f64)),
            mean_l2_error: mean(metrics.iter().map(|m| m.l2_error)),
        }
    }

    pub fn measurement_rate(&self) -> f64 {
        self.mean_m_total / self.dim as f64
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.strategy,
            self.dim,
            self.frames,
            self.mean_s_true.map(|v| v.to_string()).unwrap_or_default(),
            self.mean_s_hat,
            self.mean_m_t,
            self.mean_m_total,
            self.measurement_rate(),
            self.mean_l2_error
        )
    }
}

impl RunOutput {
    pub fn summary(&self) -> Summary {
        Summary::of(&self.strategy.to_string(), self.dim, &self.metrics)
    }
}

pub fn metrics_csv(metrics: &[FrameMetrics]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for m in metrics {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            m.t,
            m.s_true.map(|s| s.to_string()).unwrap_or_default(),
            m.s_hat,
            m.m_t,
            m.m_total,
            m.l2_error,
            m.iterations,
            m.status
        );
    }
    out
}

pub fn summary_csv(summaries: &[Summary]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for s in summaries {
        out.push_str(&s.csv_row());
        out.push('\n');
    }
    out
}

fn diagnostics_csv(run: &RunOutput) -> Option<(&'static str, String)> {
    if !run.cv.is_empty() {
        let mut out = String::from("t,s_hat,cv_bound,mu0,k_star_star,s_hat_next\n");
        for d in &run.cv {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                d.t, d.s_hat, d.cv_bound, d.mu0, d.k_star_star, d.s_hat_next
            );
        }
        return Some(("cv_diagnostics.csv", out));
    }
    if !run.lrt.is_empty() {
        let mut out = String::from("t,s_true,s_hat,M_total,mu_pred,sigma_pred,l2_error\n");
        for d in &run.lrt {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                d.t,
                d.s_true.map(|s| s.to_string()).unwrap_or_default(),
                d.s_hat,
                d.m_total,
                d.mu_pred,
                d.sigma_pred,
                d.l2_error
            );
        }
        return Some(("lrt_diagnostics.csv", out));
    }
    None
}

/// One labelled metrics sequence, as rendered in the charts.
pub struct LabelledMetrics<'a> {
    pub label: &'a str,
    pub metrics: &'a [FrameMetrics],
}

fn series(label: String, metrics: &[FrameMetrics], f: impl Fn(&FrameMetrics) -> Option<f64>) -> LineSeries {
    LineSeries {
        label,
        points: metrics.iter().filter_map(|m| f(m).map(|v| (m.t as f64, v))).collect(),
    }
}

/// `(file name, svg)` for the sparsity, measurement, and error charts.
pub fn charts(runs: &[LabelledMetrics<'_>]) -> Vec<(&'static str, String)> {
    let mut sparsity: Vec<LineSeries> = Vec::new();
    if let Some(first) = runs.first() {
        if first.metrics.iter().any(|m| m.s_true.is_some()) {
            sparsity.push(series("true s".into(), first.metrics, |m| m.s_true.map(|s| s as f64)));
        }
    }
    sparsity.extend(
        runs.iter()
            .map(|r| series(format!("{} estimate", r.label), r.metrics, |m| Some(m.s_hat as f64))),
    );
    let measurements: Vec<LineSeries> = runs
        .iter()
        .map(|r| series(r.label.to_string(), r.metrics, |m| Some(m.m_total as f64)))
        .collect();
    let errors: Vec<LineSeries> = runs
        .iter()
        .map(|r| series(r.label.to_string(), r.metrics, |m| Some(m.l2_error)))
        .collect();
    vec![
        (
            "sparsity.svg",
            line_chart("Foreground sparsity", "frame", "pixels", &sparsity),
        ),
        (
            "measurements.svg",
            line_chart(
                "Measurements per frame",
                "frame",
                "measurements (incl. side information)",
                &measurements,
            ),
        ),
        (
            "error.svg",
            line_chart("Foreground reconstruction error", "frame", "l2 error", &errors),
        ),
    ]
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes one run's CSVs, charts, and timing into `dir`.
pub fn emit_report(run: &RunOutput, dir: &Path) -> Result<()> {
    if run.metrics.is_empty() {
        return Err(Error::invalid("nothing to report: no frames were processed"));
    }
    ensure_dir(dir)?;
    write(dir.join("metrics.csv"), &metrics_csv(&run.metrics))?;
    write(dir.join("summary.csv"), &summary_csv(&[run.summary()]))?;
    if let Some((name, csv)) = diagnostics_csv(run) {
        write(dir.join(name), &csv)?;
    }
    let label = run.strategy.to_string();
    for (name, svg) in charts(&[LabelledMetrics {
        label: &label,
        metrics: &run.metrics,
    }]) {
        write(dir.join(name), &svg)?;
    }
    let mut timing = String::new();
    for m in &run.metrics {
        let _ = writeln!(timing, "{} {:.6}", m.t, m.wall_time.as_secs_f64());
    }
    write(dir.join("timing.txt"), &timing)
}

/// Overlaid charts and a combined summary for several runs.
pub fn emit_comparison(runs: &[(Summary, Vec<FrameMetrics>)], dir: &Path) -> Result<()> {
    if runs.is_empty() || runs.iter().any(|(_, m)| m.is_empty()) {
        return Err(Error::invalid("nothing to report: a run has no frames"));
    }
    ensure_dir(dir)?;
    let summaries: Vec<Summary> = runs.iter().map(|(s, _)| s.clone()).collect();
    write(dir.join("summary.csv"), &summary_csv(&summaries))?;
    let labelled: Vec<LabelledMetrics<'_>> = runs
        .iter()
        .map(|(s, m)| LabelledMetrics {
            label: &s.strategy,
            metrics: m,
        })
        .collect();
    for (name, svg) in charts(&labelled) {
        write(dir.join(name), &svg)?;
    }
    Ok(())
}

fn parse_status(s: &str) -> FrameStatus {
    match s {
        "ok" => FrameStatus::Ok,
        "not_converged" => FrameStatus::NotConverged,
        other => FrameStatus::Failed(other.trim_start_matches("failed: ").to_string()),
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<FrameMetrics>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(METRICS_HEADER) {
        return Err(Error::parse(path, 1, "unexpected metrics header"));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::parse(path, line_no, "expected 8 columns"));
        }
        let bad = |c: &str| Error::parse(path, line_no, format!("bad {c}"));
        out.push(FrameMetrics {
            t: f[0].parse().map_err(|_| bad("t"))?,
            s_true: if f[1].is_empty() {
                None
            } else {
                Some(f[1].parse().map_err(|_| bad("s_true"))?)
            },
            s_hat: f[2].parse().map_err(|_| bad("s_hat"))?,
            m_t: f[3].parse().map_err(|_| bad("m_t"))?,
            m_total: f[4].parse().map_err(|_| bad("m_total"))?,
            l2_error: f[5].parse().map_err(|_| bad("l2_error"))?,
            iterations: f[6].parse().map_err(|_| bad("iterations"))?,
            status: parse_status(f[7]),
            wall_time: Duration::ZERO,
        });
    }
    Ok(out)
}

/// Reads `metrics.csv` and the first row of `summary.csv` from a run
/// directory.
pub fn read_run(dir: &Path) -> Result<(Summary, Vec<FrameMetrics>)> {
    let metrics = read_metrics(&dir.join("metrics.csv"))?;
    let path = dir.join("summary.csv");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let row = text
        .lines()
        .nth(1)
        .ok_or_else(|| Error::parse(&path, 2, "missing summary row"))?;
    let f: Vec<&str> = row.split(',').collect();
    let dim = f
        .get(1)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::parse(&path, 2, "bad n"))?;
    Ok((Summary::of(f[0], dim, &metrics), metrics))
}
