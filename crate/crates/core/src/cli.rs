//! `rfbias` command-line front end.
//!
//! Each stage of the workflow is its own subcommand and communicates only
//! through files: CSV for data and predictions, JSON for models and reports.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::correction::{apply_correction, fit_all_families, fit_correction, select_family, CorrectionFamily, CorrectionModel};
use crate::data::{generate_synthetic, load_csv, load_csv_with_schema, split_dataset, Dataset, SplitSpec, SyntheticSpec};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, line_residuals};
use crate::forest::{default_mtry, predict_batch, train_forest, ForestModel, ForestParams};
use crate::model_io::{
    load_correction, load_forest, reports_to_csv, reports_to_json, save_correction, save_forest, NamedReport,
};
use crate::pure_forest::{train_pure_forest, PureForestParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rfbias", version, about = "Random-forest regression with bias correction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic linear-target dataset as CSV.
    Synth(SynthArgs),
    /// Partition a CSV into train/validation/test CSVs.
    Split(SplitArgs),
    /// Train a forest and write the model file.
    Train(TrainArgs),
    /// Predict a CSV with a trained model.
    Predict(PredictArgs),
    /// Fit a correction map on training or validation predictions.
    FitCorrection(FitCorrectionArgs),
    /// Apply a correction map to a predictions CSV.
    ApplyCorrection(ApplyCorrectionArgs),
    /// Score every prediction column of a predictions CSV.
    Evaluate(EvaluateArgs),
    /// Export truth, raw and corrected predictions with residuals, sorted by raw prediction.
    PlotData(PlotDataArgs),
    /// Run split, train, predict, fit-correction, apply-correction, evaluate and plot-data in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone)]
struct Coeffs(Vec<f64>);

fn parse_coeffs(s: &str) -> std::result::Result<Coeffs, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(Coeffs)
}

#[derive(Debug, Args, Clone)]
struct SynthSpecArgs {
    /// Comma-separated feature coefficients.
    #[arg(long, value_parser = parse_coeffs, default_value = "2,3,4,5,6,7,8,9")]
    coeffs: Coeffs,
    /// Hidden standard-normal terms added to the target.
    #[arg(long, default_value_t = 0)]
    noise_terms: usize,
    #[arg(long, default_value_t = 50_000)]
    n: usize,
}

impl SynthSpecArgs {
    fn spec(&self) -> SyntheticSpec {
        SyntheticSpec::new(self.coeffs.0.clone(), self.noise_terms, self.n)
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    spec: SynthSpecArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Clone)]
struct SplitFlags {
    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,
    #[arg(long, default_value_t = 0.0)]
    validation_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    test_frac: f64,
}

impl SplitFlags {
    fn spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_frac,
            validation_fraction: self.validation_frac,
            test_fraction: self.test_frac,
            seed,
        }
    }
}

#[derive(Debug, Args, Clone)]
struct InputArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "target")]
    target: String,
    /// Comma-separated columns to one-hot encode.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    split: SplitFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving train.csv, validation.csv (when non-empty) and test.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ForestKind {
    Standard,
    Pure,
}

#[derive(Debug, Args, Clone)]
struct ForestFlags {
    #[arg(long, value_enum, default_value_t = ForestKind::Standard)]
    forest: ForestKind,
    #[arg(long, default_value_t = 500)]
    ntree: usize,
    /// Candidate features per split (default: max(1, features/3)).
    #[arg(long)]
    mtry: Option<usize>,
    /// Minimum rows in either child of a split.
    #[arg(long, default_value_t = 5)]
    nodesize: usize,
    #[arg(long)]
    max_terminal_nodes: Option<usize>,
    /// Train every tree on all rows instead of a bootstrap sample.
    #[arg(long)]
    no_bootstrap: bool,
    /// Minimum rows per leaf for purely random forests.
    #[arg(long, default_value_t = 5)]
    leaf_min: usize,
    /// Worker threads for training and prediction (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl ForestFlags {
    fn train(&self, data: &Dataset, seed: u64) -> Result<ForestModel> {
        match self.forest {
            ForestKind::Standard => {
                let params = ForestParams {
                    ntree: self.ntree,
                    mtry: self.mtry.unwrap_or_else(|| default_mtry(data.n_features())),
                    nodesize: self.nodesize,
                    max_terminal_nodes: self.max_terminal_nodes,
                    bootstrap: !self.no_bootstrap,
                    seed,
                };
                params.validate(data.n_features())?;
                train_forest(data, &params)
            }
            ForestKind::Pure => {
                let params = PureForestParams {
                    ntree: self.ntree,
                    leaf_min: self.leaf_min,
                    seed,
                };
                params.validate()?;
                train_pure_forest(data, &params)
            }
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    forest: ForestFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Truth column (default: the model's target name); omitted from output when absent.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitOn {
    Train,
    Validation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyChoice {
    Linear,
    Logit,
    Sinh,
    Tan,
    /// Lowest SSE among all families.
    Auto,
}

impl FamilyChoice {
    fn family(self) -> Option<CorrectionFamily> {
        match self {
            FamilyChoice::Linear => Some(CorrectionFamily::Linear),
            FamilyChoice::Logit => Some(CorrectionFamily::Logit),
            FamilyChoice::Sinh => Some(CorrectionFamily::Sinh),
            FamilyChoice::Tan => Some(CorrectionFamily::Tan),
            FamilyChoice::Auto => None,
        }
    }
}

#[derive(Debug, Args)]
struct FitCorrectionArgs {
    #[arg(long)]
    model: PathBuf,
    /// Training partition CSV.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Validation partition CSV.
    #[arg(long)]
    validation: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FitOn::Train)]
    fit_on: FitOn,
    #[arg(long, value_enum, default_value_t = FamilyChoice::Logit)]
    family: FamilyChoice,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ApplyCorrectionArgs {
    #[arg(long)]
    correction: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    /// Name of the added column.
    #[arg(long, default_value = "corrected")]
    column: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    /// JSON document.
    Text,
    Csv,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Debug, Args)]
struct PlotDataArgs {
    #[arg(long)]
    predictions: PathBuf,
    /// Column holding corrected predictions.
    #[arg(long, default_value = "corrected")]
    corrected: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Input CSV; without it a synthetic dataset is generated.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "target")]
    target: String,
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    #[command(flatten)]
    synth: SynthSpecArgs,
    #[command(flatten)]
    split: SplitFlags,
    #[command(flatten)]
    forest: ForestFlags,
    #[arg(long, value_enum, default_value_t = FamilyChoice::Logit)]
    family: FamilyChoice,
    #[arg(long, value_enum, default_value_t = FitOn::Train)]
    fit_on: FitOn,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
    #[arg(long)]
    out_dir: PathBuf,
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match run(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(0) => Err(Error::validation("threads", "must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::validation("threads", e.to_string()))?
            .install(f),
        None => f(),
    }
}

fn run(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Synth(a) => {
            let d = generate_synthetic(&a.spec.spec(), a.seed)?;
            d.write_csv(&a.out)?;
            writeln!(out, "wrote {} rows x {} features to {}", d.n_rows(), d.n_features(), a.out.display())?;
        }
        Command::Split(a) => {
            let data = load_input(&a.input, err)?;
            let spec = a.split.spec(a.seed);
            write_split(&data, &spec, &a.out_dir, out)?;
        }
        Command::Train(a) => {
            let data = load_input(&a.input, err)?;
            let model = with_threads(a.forest.threads, || a.forest.train(&data, a.seed))?;
            save_forest(&model, &a.out)?;
            writeln!(
                out,
                "trained {} forest: {} trees on {} rows x {} features -> {}",
                model.params.family_name(),
                model.trees.len(),
                data.n_rows(),
                data.n_features(),
                a.out.display()
            )?;
        }
        Command::Predict(a) => {
            let model = load_forest(&a.model)?;
            let target = a.target.clone().unwrap_or_else(|| model.target_name.clone());
            let (load, has_truth) = load_csv_with_schema(&a.data, &model.feature_names, Some(&target))?;
            warn_dropped(err, &a.data, load.dropped_rows);
            let preds = with_threads(a.threads, || predict_batch(&model, &load.dataset))?;
            let truth = has_truth.then(|| load.dataset.target());
            write_predictions(&a.out, truth, &preds)?;
            writeln!(out, "wrote {} predictions to {}", preds.len(), a.out.display())?;
        }
        Command::FitCorrection(a) => {
            let model = load_forest(&a.model)?;
            let path = fitting_path(a.fit_on, a.train.as_deref(), a.validation.as_deref())?;
            let data = load_labelled(&model, path, err)?;
            if data.is_empty() {
                return Err(empty_fitting_partition(a.fit_on));
            }
            let preds = with_threads(a.threads, || predict_batch(&model, &data))?;
            let chosen = fit_and_report(&preds, data.target(), a.family, out)?;
            save_correction(&chosen, &a.out)?;
            writeln!(out, "saved {} correction to {}", chosen.family, a.out.display())?;
        }
        Command::ApplyCorrection(a) => {
            let correction = load_correction(&a.correction)?;
            let mut table = PredictionTable::read(&a.predictions)?;
            let raw = table.column("raw")?.to_vec();
            table.set_column(&a.column, apply_correction(&correction, &raw));
            table.write(&a.out)?;
            writeln!(out, "wrote column `{}` to {}", a.column, a.out.display())?;
        }
        Command::Evaluate(a) => {
            let table = PredictionTable::read(&a.predictions)?;
            let reports = evaluate_table(&table)?;
            let label = a
                .predictions
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            print_reports(out, &label, &reports)?;
            if let Some(path) = &a.out {
                write_reports(path, &reports, a.format)?;
            }
        }
        Command::PlotData(a) => {
            let table = PredictionTable::read(&a.predictions)?;
            write_plot_data(&table, &a.corrected, &a.out)?;
            writeln!(out, "wrote plot data to {}", a.out.display())?;
        }
        Command::Pipeline(a) => pipeline(a, out, err)?,
    }
    Ok(())
}

fn warn_dropped(err: &mut dyn Write, path: &Path, dropped: usize) {
    if dropped > 0 {
        let _ = writeln!(err, "warning: {}: dropped {dropped} row(s) with missing or unparseable cells", path.display());
    }
}

fn load_input(input: &InputArgs, err: &mut dyn Write) -> Result<Dataset> {
    let load = load_csv(&input.data, &input.target, &input.categorical)?;
    warn_dropped(err, &input.data, load.dropped_rows);
    Ok(load.dataset)
}

fn load_labelled(model: &ForestModel, path: &Path, err: &mut dyn Write) -> Result<Dataset> {
    let (load, has_truth) = load_csv_with_schema(path, &model.feature_names, Some(&model.target_name))?;
    if !has_truth {
        return Err(Error::MissingColumn {
            column: model.target_name.clone(),
            path: path.to_path_buf(),
        });
    }
    warn_dropped(err, path, load.dropped_rows);
    Ok(load.dataset)
}

fn empty_fitting_partition(fit_on: FitOn) -> Error {
    match fit_on {
        FitOn::Train => Error::EmptyPartition("train"),
        FitOn::Validation => Error::EmptyPartition("validation"),
    }
}

fn fitting_path<'a>(fit_on: FitOn, train: Option<&'a Path>, validation: Option<&'a Path>) -> Result<&'a Path> {
    match fit_on {
        FitOn::Train => train.ok_or_else(|| Error::validation("train", "--fit-on train needs --train")),
        FitOn::Validation => validation.ok_or_else(|| {
            Error::validation("validation", "--fit-on validation needs a validation partition (--validation)")
        }),
    }
}

/// Fits every family, prints their SSEs and returns the requested one.
fn fit_and_report(preds: &[f64], truths: &[f64], choice: FamilyChoice, out: &mut dyn Write) -> Result<CorrectionModel> {
    let fits = fit_all_families(preds, truths)?;
    writeln!(out, "{:<8} {:>16} {:>8}", "family", "sse", "warning")?;
    for (family, fit) in CorrectionFamily::ALL.iter().zip(&fits) {
        match fit {
            Ok(m) => writeln!(out, "{:<8} {:>16.6} {:>8}", family.as_str(), m.fit_sse, m.warning)?,
            Err(e) => writeln!(out, "{:<8} failed: {e}", family.as_str())?,
        }
    }
    match choice.family() {
        Some(f) => fit_correction(preds, truths, f),
        None => select_family(preds, truths).map(|(_, m)| m),
    }
}

fn write_split(data: &Dataset, spec: &SplitSpec, dir: &Path, out: &mut dyn Write) -> Result<[Option<PathBuf>; 3]> {
    let parts = split_dataset(data, spec)?;
    fs::create_dir_all(dir)?;
    let mut paths = [None, None, None];
    for (slot, (name, part)) in [("train", &parts.train), ("validation", &parts.validation), ("test", &parts.test)]
        .into_iter()
        .enumerate()
    {
        if part.is_empty() {
            continue;
        }
        let path = dir.join(format!("{name}.csv"));
        part.write_csv(&path)?;
        writeln!(out, "{name}: {} rows -> {}", part.n_rows(), path.display())?;
        paths[slot] = Some(path);
    }
    Ok(paths)
}

fn write_predictions(path: &Path, truth: Option<&[f64]>, preds: &[f64]) -> Result<()> {
    let mut table = PredictionTable {
        columns: vec![("row".into(), (0..preds.len()).map(|i| i as f64).collect())],
    };
    if let Some(t) = truth {
        table.columns.push(("truth".into(), t.to_vec()));
    }
    table.columns.push(("raw".into(), preds.to_vec()));
    table.write(path)
}

/// Column-oriented view of a predictions CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    pub columns: Vec<(String, Vec<f64>)>,
}

impl PredictionTable {
    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let mut reader = csv::Reader::from_path(path)?;
        let names: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut columns: Vec<(String, Vec<f64>)> = names.into_iter().map(|n| (n, Vec::new())).collect();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec?;
            for (j, (name, col)) in columns.iter_mut().enumerate() {
                let cell = rec.get(j).unwrap_or("").trim();
                let v: f64 = cell.parse().map_err(|_| {
                    Error::Schema(format!("{}: row {line}, column `{name}`: `{cell}` is not a number", path.display()))
                })?;
                col.push(v);
            }
        }
        Ok(Self { columns })
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
            .ok_or_else(|| Error::Schema(format!("predictions have no `{name}` column")))
    }

    pub fn set_column(&mut self, name: &str, values: Vec<f64>) {
        match self.columns.iter_mut().find(|(n, _)| n == name) {
            Some((_, col)) => *col = values,
            None => self.columns.push((name.to_string(), values)),
        }
    }

    /// Columns other than `row` and `truth`.
    pub fn prediction_columns(&self) -> impl Iterator<Item = &(String, Vec<f64>)> {
        self.columns.iter().filter(|(n, _)| n != "row" && n != "truth")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(self.columns.iter().map(|(n, _)| n.as_str()))?;
        let n = self.columns.first().map_or(0, |(_, c)| c.len());
        for i in 0..n {
            w.write_record(self.columns.iter().map(|(name, c)| {
                if name == "row" {
                    (c[i] as u64).to_string()
                } else {
                    c[i].to_string()
                }
            }))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn evaluate_table(table: &PredictionTable) -> Result<Vec<NamedReport>> {
    let truth = table.column("truth")?;
    table
        .prediction_columns()
        .map(|(name, values)| {
            Ok(NamedReport {
                column: name.clone(),
                report: evaluate(values, truth)?,
            })
        })
        .collect()
}

fn print_reports(out: &mut dyn Write, label: &str, reports: &[NamedReport]) -> Result<()> {
    // Headline row: one MSE per prediction column, raw first.
    let mut header = format!("{:<20}", "dataset");
    let mut row = format!("{:<20}", label);
    for r in reports {
        let title = if r.column == "raw" {
            "original MSE".to_string()
        } else {
            format!("{} MSE", r.column)
        };
        let width = title.len().max(14);
        header.push_str(&format!(" {title:>width$}"));
        row.push_str(&format!(" {:>width$.6}", r.report.mse));
    }
    writeln!(out, "{header}\n{row}\n")?;
    writeln!(
        out,
        "{:<20} {:>10} {:>10} {:>8} {:>12} {:>10}",
        "column", "slope", "intercept", "runs", "runs p", "coverage"
    )?;
    for r in reports {
        let (runs, p) = match &r.report.runs_test {
            Some(t) => (t.runs.to_string(), format!("{:.4e}", t.p_one_tailed)),
            None => ("-".into(), "-".into()),
        };
        writeln!(
            out,
            "{:<20} {:>10.4} {:>10.4} {:>8} {:>12} {:>10.4}",
            r.column,
            r.report.slope,
            r.report.intercept,
            runs,
            p,
            r.report.range_coverage()
        )?;
    }
    Ok(())
}

fn write_reports(path: &Path, reports: &[NamedReport], format: ReportFormat) -> Result<()> {
    let text = match format {
        ReportFormat::Text => reports_to_json(reports)?,
        ReportFormat::Csv => reports_to_csv(reports)?,
    };
    fs::write(path, text)?;
    Ok(())
}

fn write_plot_data(table: &PredictionTable, corrected: &str, path: &Path) -> Result<()> {
    let truth = table.column("truth")?;
    let raw = table.column("raw")?;
    let corr = table.column(corrected)?;
    let res_raw = line_residuals(raw, truth)?;
    let res_corr = line_residuals(corr, truth)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["truth", "raw", "corrected", "residual_raw", "residual_corrected"])?;
    for i in crate::evaluation::order_by_prediction(raw) {
        w.write_record([truth[i], raw[i], corr[i], res_raw[i], res_corr[i]].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn pipeline(a: PipelineArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    fs::create_dir_all(&a.out_dir)?;
    let data = match &a.data {
        Some(path) => {
            let input = InputArgs {
                data: path.clone(),
                target: a.target.clone(),
                categorical: a.categorical.clone(),
            };
            load_input(&input, err)?
        }
        None => {
            let d = generate_synthetic(&a.synth.spec(), a.seed)?;
            d.write_csv(&a.out_dir.join("data.csv"))?;
            d
        }
    };
    let spec = a.split.spec(a.seed);
    let parts = split_dataset(&data, &spec)?;
    write_split(&data, &spec, &a.out_dir, out)?;
    let fit_data = match a.fit_on {
        FitOn::Train => &parts.train,
        FitOn::Validation => &parts.validation,
    };
    if fit_data.is_empty() {
        return Err(empty_fitting_partition(a.fit_on));
    }

    let (model, fit_preds, raw) = with_threads(a.forest.threads, || -> Result<_> {
        let model = a.forest.train(&parts.train, a.seed)?;
        let fit_preds = predict_batch(&model, fit_data)?;
        let raw = predict_batch(&model, &parts.test)?;
        Ok((model, fit_preds, raw))
    })?;
    save_forest(&model, &a.out_dir.join("model.json"))?;
    writeln!(out, "trained {} forest with {} trees", model.params.family_name(), model.trees.len())?;

    let chosen = fit_and_report(&fit_preds, fit_data.target(), a.family, out)?;
    let linear = fit_correction(&fit_preds, fit_data.target(), CorrectionFamily::Linear)?;
    save_correction(&linear, &a.out_dir.join("correction_linear.json"))?;
    let chosen_col = format!("corrected_{}", chosen.family);
    save_correction(&chosen, &a.out_dir.join(format!("correction_{}.json", chosen.family)))?;

    let mut table = PredictionTable {
        columns: vec![
            ("row".into(), (0..raw.len()).map(|i| i as f64).collect()),
            ("truth".into(), parts.test.target().to_vec()),
            ("raw".into(), raw.clone()),
        ],
    };
    table.set_column("corrected_linear", apply_correction(&linear, &raw));
    table.set_column(&chosen_col, apply_correction(&chosen, &raw));
    table.write(&a.out_dir.join("predictions.csv"))?;

    let reports = evaluate_table(&table)?;
    writeln!(out)?;
    print_reports(out, "test", &reports)?;
    let ext = match a.format {
        ReportFormat::Text => "json",
        ReportFormat::Csv => "csv",
    };
    write_reports(&a.out_dir.join(format!("report.{ext}")), &reports, a.format)?;
    write_plot_data(&table, &chosen_col, &a.out_dir.join("plot.csv"))?;
    Ok(())
}
