//! The `hlsqor` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use crate::dataset::{synthetic_generate, Dataset, DatasetError};
use crate::eval::{
    default_sweep_freqs, evaluate, frequency_sweep, learning_curve, learning_curve_csv, mape,
    model_comparison, predictions, r_squared, sweep_csv, sweep_table, EvalError,
};
use crate::features::{
    extract_design, features_from_csv, features_to_csv, importance_report, ExtractError,
    FeatureError, FeatureSource, FeatureVector,
};
use crate::graph::{build_callgraph, build_cdfg};
use crate::ir::parse_module;
use crate::model::{resolve_hyperparams, train, Hyperparams, ModelError, ModelKind, Target, TrainedModel};
use crate::source::SourceError;

/// Seed used when neither `--seed` nor a config file sets one.
pub const DEFAULT_SEED: u64 = 2021;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "hlsqor",
    version,
    about = "Predict post-route clock period, latency and LUTs of HLS designs from source and LLVM IR",
    after_help = "Exit status: 0 on success, 2 on a data error, 64 on a usage error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract the 69 features (+ frequency) of one design as a feature CSV row
    Extract(ExtractArgs),
    /// Train one model for one target on a dataset CSV
    Train(TrainArgs),
    /// Predict with one or more models on a feature or dataset CSV
    Predict(PredictArgs),
    /// Evaluate models, draw a learning curve, or compare model kinds
    Eval(EvalArgs),
    /// Predict every target across a list of target frequencies
    Sweep(SweepArgs),
    /// Gain-based feature importance of a tree model
    Importance(ImportanceArgs),
    /// Generate a synthetic labeled dataset
    SynthData(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Gbt,
    Rf,
    Mlp,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Gbt => ModelKind::GradientBoost,
            KindArg::Rf => ModelKind::RandomForest,
            KindArg::Mlp => ModelKind::Perceptron,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TargetArg {
    Cp,
    Latency,
    Lut,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Cp => Target::ClockPeriod,
            TargetArg::Latency => Target::Latency,
            TargetArg::Lut => Target::Luts,
        }
    }
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// HLS C/C++ source file (source features are 0 without it)
    #[arg(long)]
    source: Option<PathBuf>,
    /// LLVM IR text file
    #[arg(long)]
    ir: PathBuf,
    /// Top-level function name
    #[arg(long)]
    top: String,
    /// Target clock frequency in MHz
    #[arg(long = "freq-mhz")]
    freq_mhz: f64,
    /// Write the feature CSV here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write Graphviz DOT of the top CDFG and the callgraph
    #[arg(long = "dump-graph", value_name = "PATH")]
    dump_graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainingOptions {
    /// Random seed [default: 2021]
    #[arg(long)]
    seed: Option<u64>,
    /// Hyperparameter override, e.g. --param n_trees=300 (repeatable)
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// TOML file with `seed` and per-kind [gbt]/[rf]/[mlp] hyperparameter tables
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Dataset CSV
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, value_enum)]
    target: TargetArg,
    #[command(flatten)]
    training: TrainingOptions,
    /// Model file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model file (repeatable)
    #[arg(long = "model", required = true)]
    models: Vec<PathBuf>,
    /// Feature CSV (as written by `extract`) or dataset CSV
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Dataset CSV
    #[arg(long)]
    dataset: PathBuf,
    /// Model files to score on the dataset (repeatable)
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    /// Learning-curve training fractions, comma separated
    #[arg(long, value_delimiter = ',', conflicts_with = "models")]
    fractions: Vec<f64>,
    /// Model kind for the learning curve
    #[arg(long, value_enum, default_value = "gbt")]
    kind: KindArg,
    /// Targets for the learning curve or comparison [default: all]
    #[arg(long, value_enum)]
    target: Vec<TargetArg>,
    #[command(flatten)]
    training: TrainingOptions,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// One model per target (repeatable)
    #[arg(long = "model", required = true)]
    models: Vec<PathBuf>,
    /// Feature or dataset CSV holding the base design
    #[arg(long)]
    features: PathBuf,
    /// Row of the features file to sweep (0-based)
    #[arg(long, default_value_t = 0)]
    row: usize,
    /// Frequencies in MHz, comma separated [default: 100,125,150,175,200,225,300,500]
    #[arg(long = "freq-mhz", value_delimiter = ',')]
    freq_mhz: Vec<f64>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ImportanceArgs {
    /// Tree model file (gbt or rf)
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Number of variants
    #[arg(long, default_value_t = 400)]
    n: usize,
    /// Random seed [default: 2021]
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplicative label noise level
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}
data_error!(DatasetError, EvalError, FeatureError, ModelError);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn in_file<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(in_file(path)),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn load_model(path: &Path) -> Result<TrainedModel, CliError> {
    TrainedModel::from_json(&read(path)?).map_err(in_file(path))
}

/// Feature rows from a feature CSV or, failing that, a dataset CSV.
fn load_features(path: &Path) -> Result<Vec<FeatureVector>, CliError> {
    let text = read(path)?;
    if text.starts_with("design,") {
        let ds = Dataset::from_csv_str(&text).map_err(in_file(path))?;
        return Ok(ds.records.into_iter().map(|r| r.features).collect());
    }
    features_from_csv(&text).map_err(in_file(path))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    #[serde(default)]
    gbt: Hyperparams,
    #[serde(default)]
    rf: Hyperparams,
    #[serde(default)]
    mlp: Hyperparams,
}

struct Training {
    seed: u64,
    hyperparams: BTreeMap<ModelKind, Hyperparams>,
}

/// Config file values overlaid by command-line flags.
fn training_setup(opts: &TrainingOptions, kind: Option<ModelKind>) -> Result<Training, CliError> {
    let config = match &opts.config {
        Some(path) => toml::from_str::<ConfigFile>(&read(path)?).map_err(in_file(path))?,
        None => ConfigFile::default(),
    };
    let mut hyperparams = BTreeMap::from([
        (ModelKind::GradientBoost, config.gbt),
        (ModelKind::RandomForest, config.rf),
        (ModelKind::Perceptron, config.mlp),
    ]);
    if !opts.params.is_empty() {
        let kind = kind.ok_or_else(|| CliError::Usage("--param needs a single --kind".into()))?;
        hyperparams.get_mut(&kind).expect("all kinds present").extend(opts.params.iter().cloned());
    }
    for (k, hp) in &hyperparams {
        resolve_hyperparams(*k, hp).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(Training {
        seed: opts.seed.or(config.seed).unwrap_or(DEFAULT_SEED),
        hyperparams,
    })
}

fn cmd_extract(a: &ExtractArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let source = a.source.as_deref().map(read).transpose()?;
    let ir = read(&a.ir)?;
    let extraction = extract_design(source.as_deref(), &ir, &a.top, a.freq_mhz).map_err(|e| match e {
        ExtractError::Source(SourceError::MalformedPragma { line, message }) => CliError::Data(format!(
            "{}:{line}: malformed pragma: {message}",
            a.source.as_deref().unwrap_or(Path::new("-")).display()
        )),
        ExtractError::Ir(e) => CliError::Data(format!("{}:{e}", a.ir.display())),
        ExtractError::Feature(FeatureError::BadFrequency(f)) => {
            CliError::Usage(format!("--freq-mhz must be positive, got {f}"))
        }
        other => CliError::Data(other.to_string()),
    })?;
    for w in &extraction.warnings {
        match &a.source {
            Some(p) if w.line > 0 => writeln!(stderr, "{}:{w}", p.display())?,
            _ => writeln!(stderr, "warning: {}", w.message)?,
        }
    }
    let counts: Vec<String> = FeatureSource::ALL
        .iter()
        .map(|s| format!("{}={}", s.name(), s.slot_range().len()))
        .collect();
    writeln!(
        stderr,
        "slots: {} total={} (+1 frequency input)",
        counts.join(" "),
        extraction.features.slots.len()
    )?;
    if let Some(path) = &a.dump_graph {
        let module = parse_module(&ir).map_err(in_file(&a.ir))?;
        let top = module.function(&a.top).expect("top resolved during extraction");
        let cdfg = build_cdfg(top).map_err(|e| CliError::Data(e.to_string()))?;
        let dot = format!("{}\n{}", cdfg.to_dot(&a.top), build_callgraph(&module).to_dot());
        std::fs::write(path, dot).map_err(in_file(path))?;
    }
    emit(a.out.as_deref(), &features_to_csv(&[extraction.features]), stdout)
}

fn cmd_train(a: &TrainArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let kind = ModelKind::from(a.kind);
    let target = Target::from(a.target);
    let setup = training_setup(&a.training, Some(kind))?;
    let data = Dataset::load_csv(&a.dataset).map_err(in_file(&a.dataset))?;
    let model = train(kind, &data, target, &setup.hyperparams[&kind], setup.seed)?;
    std::fs::write(&a.out, model.to_json()).map_err(in_file(&a.out))?;
    let (actual, predicted) = predictions(&model, &data)?;
    let fit_r2 = r_squared(&actual, &predicted).map_or("NA".to_string(), |r| format!("{r:.4}"));
    writeln!(
        stdout,
        "trained {kind} for {target} on {} rows (seed {}): train MAPE {:.4}%, R^2 {fit_r2}",
        actual.len(),
        setup.seed,
        mape(&actual, &predicted)?
    )?;
    Ok(())
}

fn cmd_predict(a: &PredictArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let models = a.models.iter().map(|p| load_model(p)).collect::<Result<Vec<_>, _>>()?;
    let rows = load_features(&a.features)?;
    let mut out = String::from("row");
    for m in &models {
        out.push_str(&format!(",{}_{}", m.kind, m.target));
    }
    out.push('\n');
    for (i, x) in rows.iter().enumerate() {
        out.push_str(&i.to_string());
        for m in &models {
            out.push_str(&format!(",{}", m.predict(x)?));
        }
        out.push('\n');
    }
    emit(a.out.as_deref(), &out, stdout)
}

fn cmd_eval(a: &EvalArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let data = Dataset::load_csv(&a.dataset).map_err(in_file(&a.dataset))?;
    let targets: Vec<Target> = if a.target.is_empty() {
        Target::ALL.to_vec()
    } else {
        a.target.iter().map(|&t| t.into()).collect()
    };
    let csv = matches!(a.format, Format::Csv);
    let text = if !a.models.is_empty() {
        let models = a.models.iter().map(|p| load_model(p)).collect::<Result<Vec<_>, _>>()?;
        let report = evaluate(&models, &data)?;
        if csv {
            report.to_csv()
        } else {
            report.to_table()
        }
    } else if !a.fractions.is_empty() {
        let kind = ModelKind::from(a.kind);
        let setup = training_setup(&a.training, Some(kind))?;
        let mut text = String::new();
        for target in targets {
            let points = learning_curve(&data, kind, target, &a.fractions, &setup.hyperparams[&kind], setup.seed)?;
            if a.target.len() != 1 {
                text.push_str(&format!("# {kind} {target}\n"));
            }
            text.push_str(&learning_curve_csv(&points));
        }
        text
    } else {
        let setup = training_setup(&a.training, None)?;
        let table = model_comparison(&data, &targets, &setup.hyperparams, setup.seed)?;
        if csv {
            table.to_csv()
        } else {
            table.to_table()
        }
    };
    emit(a.out.as_deref(), &text, stdout)
}

fn cmd_sweep(a: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let models = a.models.iter().map(|p| load_model(p)).collect::<Result<Vec<_>, _>>()?;
    let rows = load_features(&a.features)?;
    let base = rows.get(a.row).ok_or_else(|| {
        CliError::Usage(format!("--row {} is out of range ({} rows)", a.row, rows.len()))
    })?;
    let freqs = if a.freq_mhz.is_empty() {
        default_sweep_freqs()
    } else {
        a.freq_mhz.clone()
    };
    if let Some(f) = freqs.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return Err(CliError::Usage(format!("--freq-mhz must be positive, got {f}")));
    }
    let sweep = frequency_sweep(&models, base, &freqs)?;
    let text = match a.format {
        Format::Csv => sweep_csv(&sweep),
        Format::Table => sweep_table(&sweep),
    };
    emit(a.out.as_deref(), &text, stdout)
}

fn cmd_importance(a: &ImportanceArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    emit(a.out.as_deref(), &importance_report(&model)?.to_csv(), stdout)
}

fn cmd_synth(a: &SynthArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    if !(a.noise >= 0.0 && a.noise < 1.0) {
        return Err(CliError::Usage(format!("--noise must be in [0, 1), got {}", a.noise)));
    }
    let data = synthetic_generate(a.n, a.seed.unwrap_or(DEFAULT_SEED), a.noise);
    emit(a.out.as_deref(), &data.to_csv_string(), stdout)
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match &cli.command {
        Command::Extract(a) => cmd_extract(a, stdout, stderr),
        Command::Train(a) => cmd_train(a, stdout),
        Command::Predict(a) => cmd_predict(a, stdout),
        Command::Eval(a) => cmd_eval(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
        Command::Importance(a) => cmd_importance(a, stdout),
        Command::SynthData(a) => cmd_synth(a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code()
        }
    }
}

/// Full help text of every subcommand, in order.
pub fn help_text() -> String {
    use clap::CommandFactory;
    let mut cmd = Cli::command();
    let mut out = cmd.render_long_help().to_string();
    for sub in cmd.get_subcommands_mut() {
        out.push_str(&format!("\n=== {} ===\n", sub.get_name()));
        out.push_str(&sub.render_long_help().to_string());
    }
    out
}
