use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use tapkin_core::cycles::{detect_cycles, import_cycles, read_cycle_file, write_cycles, CycleSet};
use tapkin_core::features::extract_features_with;
use tapkin_core::signal::write_distance;
use tapkin_core::synthlab::Preset;

use crate::accuracy;
use crate::error::{CliError, CliResult};
use crate::featuredoc::{FeatureDocument, FeatureTable};
use crate::inputs::{load, Processed};
use crate::output::{emit, write_atomic};
use crate::reliability;
use crate::settings::{parse_t_test, Settings};
use crate::synth::{self, Cohort, SynthOptions};

#[derive(Debug, Parser)]
#[command(name = "tapkin", version, about = "Finger-tapping kinematics from hand-landmark time series")]
pub struct Cli {
    /// Key/value settings file; flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Suppress informational output on stdout.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance signal (CSV) from a landmark, annotation or distance file.
    Distance(DistanceArgs),
    /// Peaks and valleys of a recording (CSV).
    Cycles(CyclesArgs),
    /// Feature document, or a feature table with --table.
    Features(FeaturesArgs),
    /// Truth-vs-estimate R² report for a manifest of recordings.
    Accuracy(AccuracyArgs),
    /// Per-feature ICC(2,1) between two feature tables.
    Reliability(ReliabilityArgs),
    /// Synthetic dataset with truth, on-device and degraded recordings.
    Synth(SynthArgs),
    /// Recompute the summary of an accuracy report.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Smoothing window in samples (odd).
    #[arg(long, value_name = "N")]
    pub smooth_window: Option<usize>,
    /// Smoothing polynomial order.
    #[arg(long, value_name = "N")]
    pub poly_order: Option<usize>,
    /// Output sampling rate; defaults to the nominal or median input rate.
    #[arg(long, value_name = "HZ")]
    pub resample_fps: Option<f64>,
    /// Keep raw distance units.
    #[arg(long)]
    pub no_normalize: bool,
    /// Collapse repeated frames before resampling.
    #[arg(long)]
    pub dedupe: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DetectArgs {
    /// Minimum peak prominence, normalized units.
    #[arg(long, value_name = "X")]
    pub min_prominence: Option<f64>,
    /// Minimum peak spacing as a fraction of the dominant period.
    #[arg(long, value_name = "X")]
    pub min_separation: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct StatsArgs {
    /// Significance level, also used to gate the t-test on normality.
    #[arg(long, value_name = "P")]
    pub alpha: Option<f64>,
    /// welch or pooled.
    #[arg(long, value_name = "VARIANT")]
    pub t_test: Option<String>,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    pub input: PathBuf,
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct CyclesArgs {
    pub input: PathBuf,
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub detect: DetectArgs,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// `auto` to detect cycles, or a cycle CSV of manual annotations.
    #[arg(long, default_value = "auto", value_name = "auto|FILE")]
    pub cycles: String,
    /// Emit one CSV row per input instead of a document.
    #[arg(long)]
    pub table: bool,
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Amplitude from the following (default) or preceding valley.
    #[arg(long, value_name = "following|preceding")]
    pub amplitude_pairing: Option<String>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub detect: DetectArgs,
}

#[derive(Debug, Args)]
pub struct AccuracyArgs {
    /// CSV with columns truth_path,estimate_path,condition,subject,hand.
    pub manifest: PathBuf,
    /// Directory for report.csv, summary.txt and plots.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Also write scatter.svg and one overlay per recording.
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub stats: StatsArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// report.csv written by `accuracy`.
    pub report: PathBuf,
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Also redraw the speed scatter plot.
    #[arg(long, value_name = "FILE")]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub stats: StatsArgs,
}

#[derive(Debug, Args)]
pub struct ReliabilityArgs {
    pub truth: PathBuf,
    pub estimate: PathBuf,
    /// Columns identifying a target within a group.
    #[arg(long, value_delimiter = ',', default_value = "subject,hand")]
    pub keys: Vec<String>,
    /// Columns splitting the tables into separately analysed groups.
    #[arg(long, value_delimiter = ',')]
    pub group_by: Vec<String>,
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub subjects: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Degradation applied to the second estimate set.
    #[arg(long, default_value = "zoom-like", value_parser = parse_preset)]
    pub preset: Preset,
    /// default or oracle.
    #[arg(long, default_value = "default", value_parser = clap::value_parser!(String))]
    pub cohort: String,
    #[arg(long)]
    pub n_cycles: Option<usize>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub detect: DetectArgs,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse::<Preset>().map_err(|e| e.to_string())
}

impl PipelineArgs {
    fn apply(&self, s: &mut Settings) {
        if let Some(w) = self.smooth_window {
            s.pipeline.smooth_window = Some(w);
        }
        if let Some(p) = self.poly_order {
            s.pipeline.poly_order = p;
        }
        if let Some(fs) = self.resample_fps {
            s.pipeline.resample_fps = Some(fs);
        }
        if self.no_normalize {
            s.pipeline.normalize = false;
        }
        if self.dedupe {
            s.pipeline.dedupe = true;
        }
    }
}

impl DetectArgs {
    fn apply(&self, s: &mut Settings) {
        if let Some(p) = self.min_prominence {
            s.detect.min_prominence = p;
        }
        if let Some(f) = self.min_separation {
            s.detect.min_separation_fraction = f;
        }
    }
}

impl StatsArgs {
    fn apply(&self, s: &mut Settings) -> CliResult<()> {
        if let Some(a) = self.alpha {
            s.alpha = a;
        }
        if let Some(v) = &self.t_test {
            s.t_test = parse_t_test(v).map_err(CliError::input)?;
        }
        Ok(())
    }
}

fn settings(config: Option<&Path>, apply: impl FnOnce(&mut Settings) -> CliResult<()>) -> CliResult<Settings> {
    let mut s = match config {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    apply(&mut s)?;
    s.validate()?;
    Ok(s)
}

fn features_of(path: &Path, p: &Processed, cycles: &CycleSet, settings: &Settings) -> CliResult<FeatureDocument> {
    let features = extract_features_with(&p.signal, &p.derivatives, cycles, &settings.features).map_err(|e| CliError::at(path, e))?;
    Ok(FeatureDocument {
        features,
        source: cycles.source().into(),
        meta: p.meta.clone(),
    })
}

fn detect(path: &Path, p: &Processed, settings: &Settings) -> CliResult<CycleSet> {
    detect_cycles(&p.signal, &settings.detect).map_err(|e| CliError::at(path, e))
}

fn cmd_distance(args: &DistanceArgs, config: Option<&Path>) -> CliResult<()> {
    let s = settings(config, |s| {
        args.pipeline.apply(s);
        Ok(())
    })?;
    let p = load(&args.input, &s)?;
    let mut out = Vec::new();
    write_distance(&p.signal, p.meta.as_ref(), &mut out).map_err(|e| CliError::Internal(e.to_string()))?;
    emit(args.output.as_deref(), &out)
}

fn cmd_cycles(args: &CyclesArgs, config: Option<&Path>) -> CliResult<()> {
    let s = settings(config, |s| {
        args.pipeline.apply(s);
        args.detect.apply(s);
        Ok(())
    })?;
    let p = load(&args.input, &s)?;
    let cycles = detect(&args.input, &p, &s)?;
    let mut out = Vec::new();
    write_cycles(&cycles, &mut out).map_err(|e| CliError::Internal(e.to_string()))?;
    emit(args.output.as_deref(), &out)
}

fn cmd_features(args: &FeaturesArgs, config: Option<&Path>) -> CliResult<()> {
    let s = settings(config, |s| {
        args.pipeline.apply(s);
        args.detect.apply(s);
        if let Some(v) = &args.amplitude_pairing {
            s.set("amplitude_pairing", v).map_err(CliError::input)?;
        }
        Ok(())
    })?;
    let manual = match args.cycles.as_str() {
        "auto" => None,
        path => {
            if args.inputs.len() > 1 {
                return Err(CliError::input("--cycles FILE applies to a single input"));
            }
            let path = PathBuf::from(path);
            let records = read_cycle_file(&path).map_err(|e| CliError::at(&path, e))?;
            Some((path, records))
        }
    };
    if args.inputs.len() > 1 && !args.table {
        return Err(CliError::input("several inputs need --table"));
    }
    let mut docs = Vec::new();
    for input in &args.inputs {
        let p = load(input, &s)?;
        let cycles = match &manual {
            None => detect(input, &p, &s)?,
            Some((path, records)) => {
                let ann: Vec<_> = records.iter().map(|r| (r.t, r.kind)).collect();
                import_cycles(&p.signal, &ann).map_err(|e| CliError::at(path, e))?
            }
        };
        let stem = input
            .file_name()
            .map(|n| n.to_string_lossy().split('.').next().unwrap_or_default().to_string())
            .unwrap_or_default();
        docs.push((stem, features_of(input, &p, &cycles, &s)?));
    }
    let bytes = if args.table {
        FeatureTable::from_documents(&docs).render()?
    } else {
        docs[0].1.render().into_bytes()
    };
    emit(args.output.as_deref(), &bytes)
}

fn cmd_accuracy(args: &AccuracyArgs, config: Option<&Path>, quiet: bool) -> CliResult<()> {
    let s = settings(config, |s| {
        args.pipeline.apply(s);
        args.stats.apply(s)
    })?;
    let entries = accuracy::read_manifest(&args.manifest)?;
    let evaluated = accuracy::evaluate(&entries, &s)?;
    let rows: Vec<_> = evaluated.iter().map(|e| e.row.clone()).collect();
    let summary = accuracy::summarize(&rows, s.alpha, s.t_test)?.render();
    write_atomic(&args.out.join("report.csv"), &accuracy::render_report(&rows)?)?;
    write_atomic(&args.out.join("summary.txt"), summary.as_bytes())?;
    if args.svg {
        write_atomic(&args.out.join("scatter.svg"), accuracy::scatter_svg(&rows).as_bytes())?;
        for (i, e) in evaluated.iter().enumerate() {
            let name = format!("{}.svg", accuracy::file_stem(i, &e.row.recording));
            write_atomic(&args.out.join("overlays").join(name), accuracy::overlay_svg(e).as_bytes())?;
        }
    }
    if quiet {
        return Ok(());
    }
    emit(None, summary.as_bytes())
}

fn cmd_report(args: &ReportArgs, config: Option<&Path>) -> CliResult<()> {
    let s = settings(config, |s| args.stats.apply(s))?;
    let rows = accuracy::read_report(&args.report)?;
    let summary = accuracy::summarize(&rows, s.alpha, s.t_test)?.render();
    if let Some(svg) = &args.svg {
        write_atomic(svg, accuracy::scatter_svg(&rows).as_bytes())?;
    }
    emit(args.output.as_deref(), summary.as_bytes())
}

fn read_table(path: &Path) -> CliResult<FeatureTable> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    FeatureTable::parse(&bytes, &path.display().to_string())
}

fn cmd_reliability(args: &ReliabilityArgs, config: Option<&Path>) -> CliResult<()> {
    let s = settings(config, |_| Ok(()))?;
    let truth = read_table(&args.truth)?;
    let estimate = read_table(&args.estimate)?;
    let rows = reliability::compute(&truth, &estimate, &args.keys, &args.group_by, &s.thresholds)?;
    emit(args.output.as_deref(), &reliability::render(&rows)?)
}

fn cmd_synth(args: &SynthArgs, config: Option<&Path>, quiet: bool) -> CliResult<()> {
    let s = settings(config, |s| {
        args.pipeline.apply(s);
        args.detect.apply(s);
        Ok(())
    })?;
    let opts = SynthOptions {
        out: args.out.clone(),
        subjects: args.subjects,
        seed: args.seed,
        preset: args.preset,
        cohort: args.cohort.parse::<Cohort>().map_err(CliError::input)?,
        n_cycles: args.n_cycles,
    };
    let manifest = synth::build(&opts, &s)?;
    if quiet {
        return Ok(());
    }
    emit(None, format!("{}\n", manifest.display()).as_bytes())
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Distance(a) => cmd_distance(a, config),
        Command::Cycles(a) => cmd_cycles(a, config),
        Command::Features(a) => cmd_features(a, config),
        Command::Accuracy(a) => cmd_accuracy(a, config, cli.quiet),
        Command::Reliability(a) => cmd_reliability(a, config),
        Command::Synth(a) => cmd_synth(a, config, cli.quiet),
        Command::Report(a) => cmd_report(a, config),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("tapkin: {e}");
            e.exit_code()
        }
    }
}
