use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use arcs::harness::{
    emit_comparison, emit_report, load_dataset, read_run, run_strategy, DatasetSource, ExperimentConfig, Strategy,
};
use arcs::measurement::{calibrate_background, CrossValidationMatrix, EnsembleKind, MeasurementEnsemble};
use arcs::phase_diagram::{
    generate_with_progress, lookup, uniform_axis, LookupPolicy, PhaseDiagram, PhaseDiagramConfig,
};
use arcs::Error;

#[derive(Parser)]
#[command(
    name = "arcs",
    version,
    about = "Adaptive-rate compressive sensing for sparse video foregrounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, query or render an empirical phase diagram.
    #[command(subcommand)]
    PhaseDiagram(PhaseDiagramCommand),
    /// Write a synthetic dataset directory.
    Synth(SynthArgs),
    /// Compute the background calibration for a dataset.
    Calibrate(CalibrateArgs),
    /// Run one strategy over a dataset and write its report.
    Run(RunArgs),
    /// Compare finished runs.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum PhaseDiagramCommand {
    /// Estimate decoding success over an (M/n, s/M) grid.
    Generate(GenerateArgs),
    /// Print the measurement count for a sparsity.
    Query(QueryArgs),
    /// Draw a diagram as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = "gaussian")]
    ensemble: EnsembleKind,
    /// Signal dimension n.
    #[arg(long, default_value_t = 1024)]
    dim: usize,
    /// Points per axis.
    #[arg(long, default_value_t = 16)]
    grid: usize,
    #[arg(long, default_value_t = 25)]
    trials: usize,
    #[arg(long, default_value_t = 1e-3)]
    tolerance: f64,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    /// Phase diagram CSV.
    #[arg(long)]
    pd: PathBuf,
    /// Sparsity to look up.
    #[arg(long)]
    sparsity: usize,
    #[arg(long, default_value_t = 0.9)]
    tau_d: f64,
    #[arg(long, default_value_t = 8)]
    m_floor: usize,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    pd: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    phase_diagram: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Config whose [scene] section describes the sequence; defaults otherwise.
    config: Option<PathBuf>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Downsampling factor of the written tracks.
    #[arg(long, default_value_t = 2)]
    downsample: usize,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run output directories.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CliResult = std::result::Result<(), Failure>;

fn load_config(path: &Path) -> std::result::Result<ExperimentConfig, Failure> {
    ExperimentConfig::from_file(path).map_err(|e| match e {
        Error::Io { .. } => Failure::Runtime(e),
        other => Failure::Usage(other.to_string()),
    })
}

fn phase_diagram(cmd: PhaseDiagramCommand) -> CliResult {
    match cmd {
        PhaseDiagramCommand::Generate(a) => {
            let mut cfg = PhaseDiagramConfig::desk(a.ensemble, a.dim, a.seed);
            cfg.m_over_n = uniform_axis(a.grid);
            cfg.s_over_m = uniform_axis(a.grid);
            cfg.trials = a.trials;
            cfg.tolerance = a.tolerance;
            let pd = generate_with_progress(&cfg, |done, total| eprintln!("column {done}/{total}"))?;
            pd.save(&a.out)?;
        }
        PhaseDiagramCommand::Query(a) => {
            let pd = PhaseDiagram::load(&a.pd)?;
            let policy = LookupPolicy::new(a.tau_d, a.m_floor).map_err(|e| Failure::Usage(e.to_string()))?;
            println!("{}", lookup(&pd, a.sparsity, &policy)?);
        }
        PhaseDiagramCommand::Render(a) => {
            let pd = PhaseDiagram::load(&a.pd)?;
            std::fs::write(&a.out, pd.to_svg()).map_err(|e| Error::io(&a.out, e))?;
        }
    }
    Ok(())
}

fn synth(a: SynthArgs) -> CliResult {
    let mut cfg = match &a.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if !matches!(cfg.dataset, DatasetSource::Synthetic(_)) {
        return Err(Failure::Usage("synth needs a synthetic [dataset] source".into()));
    }
    if a.downsample == 0 {
        return Err(Failure::Usage("--downsample must be positive".into()));
    }
    cfg.frames = a.frames.or(cfg.frames);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    let dataset = load_dataset(&cfg)?;
    dataset.write(&a.out, a.downsample)?;
    eprintln!("wrote {} frames to {}", dataset.len(), a.out.display());
    Ok(())
}

fn calibrate(a: CalibrateArgs) -> CliResult {
    let mut cfg = load_config(&a.config)?;
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    let rows = cfg.cv.row_count().map_err(|e| Failure::Usage(e.to_string()))?;
    let dataset = load_dataset(&cfg)?;
    let ensemble = MeasurementEnsemble::new(cfg.ensemble, dataset.dim(), cfg.ensemble_seed)?;
    let psi = CrossValidationMatrix::new(rows, dataset.dim(), cfg.cv.seed)?;
    let j = cfg.calibration_frames.min(dataset.background_frames.len());
    if j == 0 {
        return Err(Failure::Runtime(Error::invalid(
            "dataset has no background-only frames",
        )));
    }
    let cal = calibrate_background(&dataset.background_frames[..j], &ensemble, Some(&psi))?;
    cal.save(&a.out)?;
    eprintln!("calibrated from {j} frames, {rows} cross-validation rows");
    Ok(())
}

fn run(a: RunArgs) -> CliResult {
    let mut cfg = load_config(&a.config)?;
    let o = a.overrides;
    cfg.strategy = o.strategy.unwrap_or(cfg.strategy);
    cfg.frames = o.frames.or(cfg.frames);
    cfg.seed = o.seed.unwrap_or(cfg.seed);
    cfg.phase_diagram = o.phase_diagram.or(cfg.phase_diagram);
    cfg.out = a.out.or(cfg.out);
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let pd_path = cfg
        .phase_diagram
        .clone()
        .ok_or_else(|| Failure::Usage("no phase diagram given (phase_diagram key or --phase-diagram)".into()))?;
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Failure::Usage("no output directory given (out key or --out)".into()))?;
    let pd = PhaseDiagram::load(&pd_path)?;
    let dataset = load_dataset(&cfg)?;
    let result = run_strategy(&cfg, &dataset, &pd)?;
    emit_report(&result, &out)?;
    let s = result.summary();
    println!(
        "{}: {} frames, mean M_total {:.1} ({:.4} of n), mean l2 error {:.4}",
        s.strategy,
        s.frames,
        s.mean_m_total,
        s.measurement_rate(),
        s.mean_l2_error
    );
    Ok(())
}

fn report(a: ReportArgs) -> CliResult {
    let runs = a.runs.iter().map(|d| read_run(d)).collect::<arcs::Result<Vec<_>>>()?;
    emit_comparison(&runs, &a.out)?;
    for (s, _) in &runs {
        println!(
            "{}: mean M_total {:.1}, mean l2 error {:.4}",
            s.strategy, s.mean_m_total, s.mean_l2_error
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::PhaseDiagram(cmd) => phase_diagram(cmd),
        Command::Synth(a) => synth(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
