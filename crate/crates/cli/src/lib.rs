//! The `arbor` command line: layout, metrics, hierarchy extraction, SVG
//! export and a small static server for the map viewer.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use arbor_core::io::{read_graph, Format, GraphInput, IoError, MapDocument};
use arbor_core::metrics::MetricsReport;
use arbor_core::mlst::LengthMode;
use arbor_core::pipeline::{build_hierarchy, run_pipeline_observed, InitKind, Mode, PipelineConfig, PipelineError};
use arbor_core::svg::{export_svg, SvgError};
use arbor_core::EngineError;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub mod serve;

/// Environment variable that overrides `--threads`.
pub const THREADS_ENV: &str = "ARBOR_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
/// The layout was produced but violates a hard constraint, or the final
/// iteration could not remove every overlap.
pub const EXIT_CONSTRAINT: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Svg(#[from] SvgError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {error}")]
    Write { path: String, error: std::io::Error },
    #[error("invalid config file {path}: {message}")]
    Config { path: String, message: String },
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "arbor", version, about = "Crossing-free, overlap-free layouts for large labeled trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lay out a tree or graph and write a map document.
    Layout(LayoutArgs),
    /// Recompute metrics for a map document.
    Metrics(MetricsArgs),
    /// Extract the multi-level tree hierarchy without laying it out.
    Mlst(MlstArgs),
    /// Render one level of a map document as SVG.
    ExportSvg(SvgArgs),
    /// Serve a map document and the viewer's static files over HTTP.
    Serve(ServeArgs),
    /// Print the effective configuration as JSON.
    Config(ConfigArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Tsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    EdgeLength,
    Compact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rt,
    Prt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LengthArg {
    Uniform,
    Linear,
    Given,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Graph file (JSON, or the node file of a TSV pair).
    pub input: PathBuf,
    /// Edge file for TSV input.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Treat edge weights as similarities and use their reciprocals.
    #[arg(long)]
    pub reciprocal: bool,
}

impl InputArgs {
    pub fn read(&self) -> Result<GraphInput, CliError> {
        let format = match self.format {
            Some(FormatArg::Json) => Format::Json,
            Some(FormatArg::Tsv) => Format::Tsv,
            None if self.edges.is_some() => Format::Tsv,
            None => Format::from_path(&self.input),
        };
        let graph = read_graph(&self.input, format, self.edges.as_deref())?;
        Ok(if self.reciprocal { graph.reciprocal() } else { graph })
    }
}

/// Layout settings. Flags override the config file, which overrides defaults.
#[derive(Debug, Default, Args)]
pub struct TuningArgs {
    /// JSON config file with any subset of the settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Force-directed iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Nodes per parallel batch.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Repulsion samples per node in parallel mode.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of hierarchy levels.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long, value_enum)]
    pub edge_lengths: Option<LengthArg>,
    /// Shortest desired edge length.
    #[arg(long)]
    pub l_min: Option<f64>,
    /// Length added per level above the bottom one.
    #[arg(long)]
    pub l_add: Option<f64>,
    /// External id of the layout root.
    #[arg(long)]
    pub root: Option<u64>,
    /// Final-iteration samples per node.
    #[arg(long)]
    pub final_steps: Option<usize>,
    /// Final-iteration sample square, as a fraction of the drawing area.
    #[arg(long)]
    pub final_size: Option<f64>,
    /// Use one random scalar for both axes of a final-iteration offset.
    #[arg(long)]
    pub final_scalar_offset: bool,
}

impl TuningArgs {
    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Config { path: path.display().to_string(), message: e.to_string() })?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config { path: path.display().to_string(), message: e.to_string() })?
            }
            None => PipelineConfig::default(),
        };
        if let Some(init) = self.init {
            c.init = match init {
                InitArg::EdgeLength => InitKind::EdgeLength,
                InitArg::Compact => InitKind::Compact,
            };
        }
        if let Some(mode) = self.mode {
            c.mode = match mode {
                ModeArg::Rt => Mode::Rt,
                ModeArg::Prt => Mode::Prt,
            };
        }
        if let Some(l) = self.edge_lengths {
            c.edge_lengths = match l {
                LengthArg::Uniform => LengthMode::Uniform,
                LengthArg::Linear => LengthMode::Linear,
                LengthArg::Given => LengthMode::Given,
            };
        }
        macro_rules! set {
            ($flag:ident => $($field:ident).+) => {
                if let Some(v) = self.$flag {
                    c.$($field).+ = v;
                }
            };
        }
        set!(iters => params.iterations);
        set!(batch => params.batch);
        set!(samples => params.repulsion_samples);
        set!(seed => params.seed);
        set!(final_steps => params.final_steps);
        set!(final_size => params.final_size_fraction);
        set!(l_min => l_min);
        if self.final_scalar_offset {
            c.params.final_scalar_offset = true;
        }
        if self.levels.is_some() {
            c.levels = self.levels;
        }
        if self.l_add.is_some() {
            c.l_add = self.l_add;
        }
        if self.root.is_some() {
            c.root = self.root;
        }
        c.params.validate().map_err(PipelineError::from)?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct LayoutArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Worker threads for parallel mode (overridden by ARBOR_THREADS).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Map document output; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write the metrics as a one-row CSV.
    #[arg(long)]
    pub metrics_csv: Option<PathBuf>,
    /// Print one JSON object per iteration to stderr.
    #[arg(short, long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Map document.
    pub map: PathBuf,
    /// Print CSV instead of JSON.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct MlstArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SvgArgs {
    pub map: PathBuf,
    /// Deepest level to draw.
    #[arg(long)]
    pub level: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    pub map: PathBuf,
    /// Directory with the viewer bundle.
    #[arg(long)]
    pub assets: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[command(flatten)]
    pub tuning: TuningArgs,
}

/// Thread count: `ARBOR_THREADS` if set and valid, else the flag.
pub fn thread_count(flag: Option<usize>, env: Option<&str>) -> Option<usize> {
    env.and_then(|v| v.trim().parse().ok()).filter(|&n: &usize| n > 0).or(flag)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|error| CliError::Write { path: p.display().to_string(), error }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|error| CliError::Write { path: "stdout".into(), error })
        }
    }
}

fn read_document(path: &Path) -> Result<MapDocument, CliError> {
    let text = fs::read_to_string(path).map_err(|error| IoError::Read { path: path.display().to_string(), error })?;
    let doc = MapDocument::from_json(&text)?;
    doc.validate()?;
    Ok(doc)
}

/// Metrics recomputed from the document itself.
pub fn document_metrics(doc: &MapDocument) -> Result<MetricsReport, CliError> {
    let tree = doc.tree().map_err(IoError::from)?;
    let geometry = doc.geometry().map_err(IoError::from)?;
    MetricsReport::evaluate(&doc.layout(), &tree, &geometry, &doc.lengths())
        .map_err(|e| CliError::Pipeline(PipelineError::Metrics(e)))
}

fn layout(args: &LayoutArgs) -> Result<i32, CliError> {
    let config = args.tuning.resolve()?;
    let input = args.input.read()?;
    let env = std::env::var(THREADS_ENV).ok();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(args.threads, env.as_deref()) {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    let mut log = |stats: &arbor_core::engine::IterationStats| {
        eprintln!("{}", serde_json::to_string(stats).expect("stats serialize"));
    };
    let observer: Option<&mut (dyn FnMut(&arbor_core::engine::IterationStats) + Send)> =
        if args.verbose { Some(&mut log) } else { None };
    let out = match pool.install(|| run_pipeline_observed(input, &config, observer)) {
        Ok(out) => out,
        Err(PipelineError::Engine(e @ EngineError::OverlapsRemain { .. })) => {
            eprintln!("arbor: {e}");
            return Ok(EXIT_CONSTRAINT);
        }
        Err(e) => return Err(e.into()),
    };
    write_output(args.output.as_deref(), &out.document.to_json())?;
    if let Some(path) = &args.metrics_csv {
        write_output(Some(path), &out.metrics.to_csv())?;
    }
    if args.verbose {
        eprintln!("{}", serde_json::to_string(&out.metrics).expect("metrics serialize"));
    }
    Ok(if out.metrics.crossings == 0 && out.metrics.overlaps == 0 { EXIT_OK } else { EXIT_CONSTRAINT })
}

fn metrics(args: &MetricsArgs) -> Result<i32, CliError> {
    let doc = read_document(&args.map)?;
    let m = document_metrics(&doc)?;
    let text = if args.csv { m.to_csv() } else { serde_json::to_string_pretty(&m).expect("metrics serialize") + "\n" };
    write_output(None, &text)?;
    Ok(if m.crossings == 0 && m.overlaps == 0 { EXIT_OK } else { EXIT_CONSTRAINT })
}

fn mlst(args: &MlstArgs) -> Result<i32, CliError> {
    let config = args.tuning.resolve()?;
    let mlt = build_hierarchy(args.input.read()?, &config)?;
    let tree = &mlt.tree;
    let json = serde_json::json!({
        "level_count": mlt.level_count,
        "nodes": (0..tree.len()).map(|v| serde_json::json!({
            "id": tree.external_id(v),
            "label": tree.label(v),
            "weight": tree.weight(v),
            "level": mlt.node_level[v],
        })).collect::<Vec<_>>(),
        "edges": tree.edges().iter().enumerate().map(|(e, edge)| serde_json::json!({
            "source": tree.external_id(edge.a),
            "target": tree.external_id(edge.b),
            "level": mlt.edge_level[e],
            "desired_length": mlt.desired_length.get(e),
        })).collect::<Vec<_>>(),
    });
    write_output(args.output.as_deref(), &(serde_json::to_string_pretty(&json).expect("json") + "\n"))?;
    Ok(EXIT_OK)
}

pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Layout(args) => layout(&args),
        Command::Metrics(args) => metrics(&args),
        Command::Mlst(args) => mlst(&args),
        Command::ExportSvg(args) => {
            let doc = read_document(&args.map)?;
            write_output(args.output.as_deref(), &export_svg(&doc, args.level)?)?;
            Ok(EXIT_OK)
        }
        Command::Serve(args) => {
            let doc = read_document(&args.map)?;
            serve::serve_blocking(doc, args.assets, &args.addr).map_err(CliError::Serve)?;
            Ok(EXIT_OK)
        }
        Command::Config(args) => {
            let config = args.tuning.resolve()?;
            write_output(None, &(serde_json::to_string_pretty(&config).expect("config serializes") + "\n"))?;
            Ok(EXIT_OK)
        }
    }
}
