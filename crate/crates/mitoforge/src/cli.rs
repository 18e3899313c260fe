use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use mitoforge_core::ensemble::{ensemble_predict, evaluate, fit_greedy, PredictionMatrix, DEFAULT_ITERATIONS};
use mitoforge_core::fda::{fda_transfer, FdaParams, DEFAULT_BETA};
use mitoforge_core::fisheye::{fisheye, FisheyeParams};
use mitoforge_core::imaging::ImageBuffer;
use mitoforge_core::lora::{gradcheck, history_csv, train_toy, Matrix, ToyClassifier, TokenDataset, TrainConfig, GRADCHECK_STEP};
use mitoforge_core::pipeline::{
    augment_item, split_manifest, validate_manifest, weighted_sample_indices, GroupWeights, Provenance, TargetPool,
};
use mitoforge_core::rng::{index_from_bits, mix, Stream};
use rayon::prelude::*;

use crate::error::{exit, invalid, CliError, Result};
use crate::formats::{self, SampleRow};
use crate::png::{load_png, save_png};
use crate::report::report_table;
use crate::targets::DirPool;

/// Gradient checks fail above this relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Parser)]
#[command(name = "mitoforge", version, about = "Augmentation, adaptation and ensembling for mitosis classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the augmentation chain over every manifest record.
    Augment(AugmentArgs),
    /// Apply the radial fisheye warp to one image.
    Fisheye(FisheyeArgs),
    /// Fourier domain adaptation of one or more images.
    Fda(FdaArgs),
    /// Draw record ids with replacement using per-group weights.
    Sample(SampleArgs),
    /// Split the primary group into train and validation.
    Split(SplitArgs),
    /// Toy LoRA attention model.
    #[command(subcommand)]
    Lora(LoraCommand),
    /// Balanced-accuracy ensemble selection.
    #[command(subcommand)]
    Ensemble(EnsembleCommand),
    /// Balanced accuracy of a predictions file, optionally per domain.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// AugmentConfig JSON; a relative `target_dir` resolves against its directory.
    #[arg(long)]
    pub config: PathBuf,
    /// Manifest CSV; relative image paths resolve against its directory.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Run seed; replaces the config's `seed`.
    #[arg(long)]
    pub seed: u64,
    /// Provenance log, one JSON object per item in manifest order.
    #[arg(long)]
    pub provenance: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub workers: u16,
}

#[derive(Debug, Args)]
pub struct FisheyeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub k: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FdaArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub source: Vec<PathBuf>,
    #[arg(long, conflicts_with = "target_dir", required_unless_present = "target_dir")]
    pub target: Option<PathBuf>,
    /// Pick each source's target from this directory's PNG files.
    #[arg(long, requires = "seed")]
    pub target_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    /// Output file; requires a single source.
    #[arg(long, conflicts_with = "out_dir", required_unless_present = "out_dir")]
    pub out: Option<PathBuf>,
    /// Output directory; outputs keep their source file names.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Weights for primary_train, external_a, external_b.
    #[arg(long, default_value = "1,0.15,0.15")]
    pub weights: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    pub ratio: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Reserved: split each source dataset separately. Not supported.
    #[arg(long)]
    pub split_per_source: bool,
}

#[derive(Debug, Subcommand)]
pub enum LoraCommand {
    /// Compare analytic gradients with central finite differences.
    Gradcheck(GradcheckArgs),
    /// Train the toy classifier on separable synthetic tokens.
    DemoTrain(DemoTrainArgs),
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub heads: usize,
    #[arg(long, default_value_t = 2)]
    pub rank: usize,
    #[arg(long, default_value_t = 4)]
    pub batch: usize,
    #[arg(long, default_value_t = 4)]
    pub tokens: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DemoTrainArgs {
    /// Per-epoch history CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub heads: usize,
    #[arg(long, default_value_t = 2)]
    pub rank: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    /// Epochs without improvement before stopping; 0 disables early stopping.
    #[arg(long, default_value_t = 0)]
    pub patience: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
}

#[derive(Debug, Subcommand)]
pub enum EnsembleCommand {
    /// Greedy forward selection with replacement on a labeled fit set.
    Fit(FitArgs),
    /// Blend prediction files with fitted weights.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// One predictions CSV per model; models are named by file stem.
    #[arg(long, num_args = 1.., required = true)]
    pub preds: Vec<PathBuf>,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub preds: Vec<PathBuf>,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub preds: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub by_domain: bool,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => exit::OK,
                _ => exit::INVALID,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Augment(a) => augment(a),
        Command::Fisheye(a) => {
            let img = load_png(&a.input)?;
            save_png(&fisheye(&img, FisheyeParams::new(a.k))?, &a.out)
        }
        Command::Fda(a) => fda(a),
        Command::Sample(a) => sample(a),
        Command::Split(a) => split(a),
        Command::Lora(LoraCommand::Gradcheck(a)) => lora_gradcheck(a),
        Command::Lora(LoraCommand::DemoTrain(a)) => lora_demo_train(a),
        Command::Ensemble(EnsembleCommand::Fit(a)) => ensemble_fit(a),
        Command::Ensemble(EnsembleCommand::Predict(a)) => ensemble_predict_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
    }
}

fn base_dir(file: &Path) -> PathBuf {
    file.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Output file name for a record id; rejects ids that would escape the directory.
fn output_name(id: &str) -> Result<String> {
    if id.is_empty() || id == "." || id == ".." || id.contains(['/', '\\']) {
        return Err(invalid!("record id {id:?} is not usable as a file name"));
    }
    Ok(format!("{id}.png"))
}

fn augment(a: AugmentArgs) -> Result<()> {
    let mut cfg = formats::read_config(&a.config)?;
    cfg.seed = a.seed;
    cfg.validate()?;
    let records = formats::read_manifest(&a.manifest)?;
    validate_manifest(&records, usize::MAX)?;
    let names = records.iter().map(|r| output_name(&r.id)).collect::<Result<Vec<_>>>()?;

    let pool = match &cfg.target_dir {
        Some(dir) => DirPool::open(&base_dir(&a.config).join(dir))?,
        None => DirPool::empty(),
    };
    if cfg.fda_probability > 0.0 && pool.is_empty() {
        return Err(invalid!("fda_probability is {} but no target images were found", cfg.fda_probability));
    }
    create_dir(&a.out_dir)?;

    let images = base_dir(&a.manifest);
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(a.workers as usize)
        .build()
        .map_err(|e| invalid!("cannot start worker pool: {e}"))?;
    let results: Vec<Result<Provenance>> = threads.install(|| {
        records
            .par_iter()
            .zip(names.par_iter())
            .enumerate()
            .map(|(i, (r, name))| {
                let img = load_png(&images.join(&r.path))?;
                let (out, prov) = augment_item(&img, &r.id, &cfg, i as u64, &pool)?;
                save_png(&out, &a.out_dir.join(name))?;
                Ok(prov)
            })
            .collect()
    });
    let log = results.into_iter().collect::<Result<Vec<_>>>()?;
    if let Some(path) = &a.provenance {
        formats::write_provenance(path, &log)?;
    }
    let fda_count = log.iter().filter(|p| p.fda_applied).count();
    eprintln!("augmented {} images ({fda_count} with FDA) into {}", log.len(), a.out_dir.display());
    Ok(())
}

fn fda(a: FdaArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.beta) {
        return Err(invalid!("--beta must lie in [0, 1]"));
    }
    if a.out.is_some() && a.source.len() != 1 {
        return Err(invalid!("--out takes a single --source; use --out-dir for several"));
    }
    let fixed = a.target.as_deref().map(load_png).transpose()?;
    let pool = a.target_dir.as_deref().map(DirPool::open).transpose()?;
    if let Some(pool) = &pool {
        if pool.is_empty() {
            return Err(invalid!("no PNG files in target directory"));
        }
    }
    if let Some(dir) = &a.out_dir {
        create_dir(dir)?;
    }
    for (i, source) in a.source.iter().enumerate() {
        let img = load_png(source)?;
        let target: ImageBuffer = match (&fixed, &pool) {
            (Some(t), _) => t.clone(),
            (None, Some(pool)) => {
                let seed = a.seed.expect("clap requires --seed with --target-dir");
                let pick = index_from_bits(mix(seed, i as u64), pool.len());
                eprintln!("{} <- {}", source.display(), pool.name(pick));
                pool.load(pick)?
            }
            (None, None) => unreachable!("clap requires a target"),
        };
        let out = fda_transfer(&img, &FdaParams { beta: a.beta, target })?;
        let path = match (&a.out, &a.out_dir) {
            (Some(out), _) => out.clone(),
            (None, Some(dir)) => {
                let name = source.file_name().ok_or_else(|| invalid!("{} has no file name", source.display()))?;
                dir.join(name)
            }
            (None, None) => unreachable!("clap requires an output"),
        };
        save_png(&out, &path)?;
    }
    Ok(())
}

fn parse_weights(text: &str) -> Result<GroupWeights> {
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| invalid!("bad weight {v:?} in --weights")))
        .collect::<Result<Vec<_>>>()?;
    let values: [f64; 3] = values
        .try_into()
        .map_err(|v: Vec<f64>| invalid!("--weights needs 3 values, got {}", v.len()))?;
    Ok(GroupWeights::new(values)?)
}

fn sample(a: SampleArgs) -> Result<()> {
    let weights = parse_weights(&a.weights)?;
    let records = formats::read_manifest(&a.manifest)?;
    let picks = weighted_sample_indices(&records, &weights, a.n, a.seed)?;
    let rows: Vec<SampleRow> = picks
        .into_iter()
        .enumerate()
        .map(|(draw, index)| SampleRow {
            draw,
            index,
            id: records[index].id.clone(),
        })
        .collect();
    formats::write_samples(&a.out, &rows)
}

fn split(a: SplitArgs) -> Result<()> {
    if a.split_per_source {
        return Err(invalid!("--split-per-source is reserved and not supported"));
    }
    let records = formats::read_manifest(&a.manifest)?;
    validate_manifest(&records, usize::MAX)?;
    let (train, val) = split_manifest(&records, a.ratio, a.seed)?;
    let split_of: std::collections::HashMap<&str, _> =
        train.iter().chain(&val).map(|r| (r.id.as_str(), r.split)).collect();
    let out: Vec<_> = records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.split = split_of[r.id.as_str()];
            r
        })
        .collect();
    formats::write_manifest(&a.out, &out)?;
    eprintln!("{} train, {} val", train.len(), val.len());
    Ok(())
}

/// Random model with every trainable value nonzero, plus a random batch.
pub fn gradcheck_instance(
    d: usize,
    heads: usize,
    rank: usize,
    batch: usize,
    tokens: usize,
    seed: u64,
) -> Result<(ToyClassifier, Vec<Matrix>, Vec<usize>)> {
    if batch == 0 || tokens == 0 {
        return Err(invalid!("batch and tokens must be at least 1"));
    }
    let mut model = ToyClassifier::random(d, heads, rank, 2, seed)?;
    model.randomize_trainable(0.3, mix(seed, 1));
    let mut s = Stream::new(mix(seed, 2));
    let xs = (0..batch).map(|_| Matrix::from_fn(tokens, d, |_, _| s.normal(0.0, 1.0))).collect();
    let ys = (0..batch).map(|i| i % 2).collect();
    Ok((model, xs, ys))
}

fn lora_gradcheck(a: GradcheckArgs) -> Result<()> {
    let (model, xs, ys) = gradcheck_instance(a.d, a.heads, a.rank, a.batch, a.tokens, a.seed)?;
    let report = gradcheck(&model, &xs, &ys, GRADCHECK_STEP)?;
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    if report.max_relative_error < GRADCHECK_TOLERANCE {
        Ok(())
    } else {
        Err(CliError::Gradcheck(report.max_relative_error, GRADCHECK_TOLERANCE))
    }
}

fn lora_demo_train(a: DemoTrainArgs) -> Result<()> {
    let model = ToyClassifier::random(a.d, a.heads, a.rank, 2, a.seed)?;
    let train = TokenDataset::separable(200, 4, a.d, 2.0, 0.1, mix(a.seed, 1));
    let val = TokenDataset::separable(100, 4, a.d, 2.0, 0.1, mix(a.seed, 2));
    let cfg = TrainConfig {
        lr: a.lr,
        epochs: a.epochs,
        patience: a.patience,
        seed: mix(a.seed, 3),
        ..TrainConfig::default()
    };
    let outcome = train_toy(&model, &train, &val, &cfg)?;
    std::fs::write(&a.out, history_csv(&outcome.history)).map_err(|e| CliError::io(&a.out, e))?;
    eprintln!(
        "best validation balanced accuracy {:.3} at epoch {}",
        outcome.best_val_balanced_accuracy, outcome.best_epoch
    );
    Ok(())
}

fn read_all_predictions(paths: &[PathBuf]) -> Result<Vec<PredictionMatrix>> {
    let preds = paths.iter().map(|p| formats::read_predictions(p)).collect::<Result<Vec<_>>>()?;
    for (i, p) in preds.iter().enumerate() {
        if preds[..i].iter().any(|q| q.model_name() == p.model_name()) {
            return Err(invalid!("two prediction files share the model name {:?}", p.model_name()));
        }
    }
    Ok(preds)
}

fn ensemble_fit(a: FitArgs) -> Result<()> {
    let preds = read_all_predictions(&a.preds)?;
    let truth = formats::read_labels(&a.labels, preds[0].classes())?;
    let fit = fit_greedy(&preds, &truth, a.iterations)?;
    formats::write_json(&a.out, &fit)?;
    eprintln!("fit balanced accuracy {:.3}", fit.fit_balanced_accuracy * 100.0);
    Ok(())
}

fn ensemble_predict_cmd(a: PredictArgs) -> Result<()> {
    let preds = read_all_predictions(&a.preds)?;
    let weights = formats::read_weights(&a.weights)?.ensemble_weights()?;
    // Line the files up with the weight order by model name.
    let mut ordered = Vec::with_capacity(weights.model_names.len());
    for name in &weights.model_names {
        let p = preds
            .iter()
            .find(|p| p.model_name() == name)
            .ok_or_else(|| invalid!("no predictions file for model {name:?}"))?;
        ordered.push(p.clone());
    }
    if ordered.len() != preds.len() {
        return Err(invalid!("{} prediction files for {} weighted models", preds.len(), ordered.len()));
    }
    let blended = ensemble_predict(&ordered, &weights)?;
    formats::write_predictions(&a.out, &blended)
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let pred = formats::read_predictions(&a.preds)?;
    let truth = formats::read_labels(&a.labels, pred.classes())?;
    let report = evaluate(&pred, &truth, a.by_domain)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print!("{}", report_table(&report));
    }
    Ok(())
}
