use std::fs::{self, File};
use std::io::{self, BufReader, Read};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cubescore_core::artifact::ModelArtifact;
use cubescore_core::dataset::{read_jsonl, write_jsonl};
use cubescore_core::error::ArtifactError;
use cubescore_core::eval::{
    evaluate, kfold_cv, knn_baseline, run_ablation_with_progress, train_model_with_progress, CvReport, EpochStats,
    Example, Metrics, PreparedSplit,
};
use cubescore_core::features::{batch_extract, compute_std_length, FeatureRecord};
use cubescore_core::stats::{correlations_csv, distribution_table, score_correlations, Grouping};
use cubescore_core::synth::{generate_dataset, SynthConfig};
use cubescore_core::{split_dataset, Dataset, FeatureSet, NormalizationSpec, Split, TrajectorySample};
use serde::Serialize;
use thiserror::Error;

use crate::cli::*;
use crate::scoring::{ErrorBody, Scorer};
use crate::server;

pub const SPLIT_RATIOS: (f64, f64, f64) = (0.8, 0.1, 0.1);

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input data or arguments; exit code 1.
    #[error("{0}")]
    Validation(String),
    /// A file could not be read or written; exit code 2.
    #[error("{0}")]
    Io(String),
    /// A JSON error object already destined for stdout; exit code 1.
    #[error("{}", .0.message)]
    Json(ErrorBody),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Json(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    fn invalid(e: impl ToString) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ArtifactError> for CliError {
    fn from(e: ArtifactError) -> Self {
        match e {
            ArtifactError::Io(io) => CliError::Io(format!("model: {io}")),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn read_samples(path: &Path) -> Result<Vec<TrajectorySample>, CliError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    read_jsonl(BufReader::new(file))
        .map_err(|e| io_error(path, e))?
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn load_model(path: &Path) -> Result<Scorer, CliError> {
    Scorer::load(path).map_err(|e| match e {
        ArtifactError::Io(io) => io_error(path, io),
        other => CliError::Validation(format!("{}: {other}", path.display())),
    })
}

/// Labeled dataset with the stratified 8:1:1 assignment.
fn split(path: &Path, seed: u64) -> Result<Dataset, CliError> {
    let data = Dataset::new(read_samples(path)?).map_err(CliError::invalid)?;
    split_dataset(data, SPLIT_RATIOS, seed).map_err(CliError::invalid)
}

fn progress(quiet: bool, label: String) -> impl FnMut(&EpochStats) {
    move |e: &EpochStats| {
        if quiet {
            return;
        }
        let val = match e.val_acc {
            Some(a) => format!(" val_acc {a:.3}"),
            None => String::new(),
        };
        eprintln!(
            "{label}epoch {:>3} loss {:.4} acc {:.3}{val} ({:.1}s)",
            e.epoch, e.train_loss, e.train_acc, e.seconds
        );
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Extract(a) => extract(&a),
        Command::Train(a) => train(&a),
        Command::Eval(a) => eval(&a),
        Command::Ablate(a) => ablate(&a),
        Command::Score(a) => score(&a),
        Command::Synth(a) => synth(&a),
        Command::Stats(a) => stats(&a),
        Command::Serve(a) => serve(&a),
    }
}

pub fn extract(args: &ExtractArgs) -> Result<(), CliError> {
    let samples = read_samples(&args.input)?;
    let spec = match &args.model {
        Some(path) => load_model(path)?.artifact().normalization,
        None => {
            let l_std = match args.l_std {
                Some(n) if n < 2 => return Err(CliError::Validation("--l-std must be at least 2".into())),
                Some(n) => n,
                None => compute_std_length(&samples).map_err(CliError::invalid)?,
            };
            NormalizationSpec {
                l_std,
                feature_set: args.feature_set,
                normalize_xy: args.normalize_xy,
            }
        }
    };
    let extracted = batch_extract(&samples, &spec).map_err(CliError::invalid)?;
    let mut out = String::new();
    for e in &extracted {
        out.push_str(&serde_json::to_string(&FeatureRecord::from(e)).expect("records serialize"));
        out.push('\n');
    }
    write_file(&args.output, out)
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    seed: u64,
    split_seed: u64,
    feature_set: FeatureSet,
    l_std: usize,
    model_version: String,
    n_train: usize,
    n_validate: usize,
    n_test: usize,
    final_train_accuracy: Option<f64>,
    validation: Option<Metrics>,
    test: Option<Metrics>,
    cv: Option<CvReport>,
}

fn eval_if_any(model: &cubescore_core::eval::Classifier, set: &[Example]) -> Result<Option<Metrics>, CliError> {
    if set.is_empty() {
        return Ok(None);
    }
    evaluate(model, set).map(Some).map_err(CliError::invalid)
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let split_seed = args.split.split_seed.unwrap_or(args.seed);
    let dataset = split(&args.data, split_seed)?;
    let prepared = PreparedSplit::from_dataset(&dataset, args.split.normalize_xy).map_err(CliError::invalid)?;
    let (train_set, val_set, test_set) = prepared.select(args.feature_set);
    let config = args.model.config(args.seed);

    let (model, mut report) =
        train_model_with_progress(&train_set, &val_set, &config, progress(args.quiet, String::new()))
            .map_err(CliError::invalid)?;
    let test = eval_if_any(&model, &test_set)?;
    report.test_metrics = test.clone();

    let cv = match args.cv {
        Some(k) => {
            let pool: Vec<Example> = train_set.iter().chain(&val_set).cloned().collect();
            if !args.quiet {
                eprintln!("cross-validation: {k} folds over {} samples", pool.len());
            }
            Some(kfold_cv(&pool, &config, k).map_err(CliError::invalid)?)
        }
        None => None,
    };

    let artifact = ModelArtifact::new(&model, prepared.spec(args.feature_set));
    let summary = TrainSummary {
        seed: args.seed,
        split_seed,
        feature_set: args.feature_set,
        l_std: prepared.l_std,
        model_version: artifact.model_version(),
        n_train: train_set.len(),
        n_validate: val_set.len(),
        n_test: test_set.len(),
        final_train_accuracy: report.final_train_accuracy(),
        validation: eval_if_any(&model, &val_set)?,
        test,
        cv: cv.clone(),
    };

    write_file(&args.out.join("model.json"), artifact.to_json())?;
    write_file(&args.out.join("train_report.csv"), report.to_csv())?;
    write_file(&args.out.join("metrics.json"), to_json(&summary))?;
    if let Some(cv) = &cv {
        write_file(&args.out.join("cv.csv"), cv.to_csv())?;
    }
    if !args.quiet {
        if let Some(m) = &summary.test {
            eprintln!("test accuracy {:.4} ({} samples)", m.accuracy, summary.n_test);
        }
        if let Some(cv) = &cv {
            eprintln!("cv accuracy {:.4} ± {:.4}", cv.accuracy.mean, cv.accuracy.std);
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvalSummary {
    model_version: String,
    subset: String,
    n: usize,
    metrics: Metrics,
    knn: Option<Metrics>,
}

fn examples(samples: &[&TrajectorySample], spec: &NormalizationSpec) -> Result<Vec<Example>, CliError> {
    let extracted = batch_extract(samples.iter().copied(), spec).map_err(CliError::invalid)?;
    extracted
        .into_iter()
        .map(|e| {
            let label = e
                .label
                .ok_or_else(|| CliError::Validation(format!("sample `{}` has no label", e.id)))?;
            Ok(Example { matrix: e.matrix, label })
        })
        .collect()
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let scorer = load_model(&args.model)?;
    let spec = scorer.artifact().normalization;
    let (dataset, subset_name) = match (args.subset, args.split_seed) {
        (Subset::All, _) => {
            let d = Dataset::new(read_samples(&args.data)?).map_err(CliError::invalid)?;
            (d, "all")
        }
        (_, None) => return Err(CliError::Validation("--split-seed is required unless --subset all".into())),
        (s, Some(seed)) => (
            split(&args.data, seed)?,
            match s {
                Subset::Train => "train",
                Subset::Validate => "validate",
                _ => "test",
            },
        ),
    };
    let chosen: Vec<&TrajectorySample> = match args.subset {
        Subset::All => dataset.samples().iter().collect(),
        Subset::Train => dataset.subset(Split::Train),
        Subset::Validate => dataset.subset(Split::Validate),
        Subset::Test => dataset.subset(Split::Test),
    };
    let eval_set = examples(&chosen, &spec)?;
    let metrics = evaluate(&scorer.artifact().classifier(), &eval_set).map_err(CliError::invalid)?;
    let knn = match args.knn {
        None => None,
        Some(_) if args.subset == Subset::All => {
            return Err(CliError::Validation("--knn needs a split; pass --split-seed and a subset".into()))
        }
        Some(k) => {
            let train_set = examples(&dataset.subset(Split::Train), &spec)?;
            Some(knn_baseline(&train_set, &eval_set, k).map_err(CliError::invalid)?)
        }
    };
    let summary = EvalSummary {
        model_version: scorer.model_version().to_string(),
        subset: subset_name.into(),
        n: eval_set.len(),
        metrics,
        knn,
    };
    let text = to_json(&summary);
    match &args.output {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn ablate(args: &AblateArgs) -> Result<(), CliError> {
    let dataset = split(&args.data, args.split.split_seed.unwrap_or(args.seed))?;
    let config = args.model.config(args.seed);
    let quiet = args.quiet;
    let report = run_ablation_with_progress(&dataset, &config, args.split.normalize_xy, |row| {
        if !quiet {
            eprintln!(
                "{} {}: accuracy {:.4}",
                row.feature_set,
                row.architecture(),
                row.metrics.accuracy
            );
        }
    })
    .map_err(CliError::invalid)?;
    write_file(&args.output, report.to_csv())?;
    if let Some(path) = &args.table {
        write_file(path, report.to_table())?;
    }
    Ok(())
}

pub fn score(args: &ScoreArgs) -> Result<(), CliError> {
    let scorer = load_model(&args.model)?;
    let text = match args.input.as_deref() {
        None => read_stdin()?,
        Some(p) if p == Path::new("-") => read_stdin()?,
        Some(p) => fs::read_to_string(p).map_err(|e| io_error(p, e))?,
    };
    let response = scorer.score_json(&text).map_err(CliError::Json)?;
    println!("{}", serde_json::to_string(&response).expect("responses serialize"));
    Ok(())
}

fn read_stdin() -> Result<String, CliError> {
    let mut s = String::new();
    io::stdin()
        .read_to_string(&mut s)
        .map_err(|e| CliError::Io(format!("stdin: {e}")))?;
    Ok(s)
}

pub fn synth_config(args: &SynthArgs) -> Result<SynthConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
        None if args.noiseless => SynthConfig::noiseless(args.seed, 100),
        None => SynthConfig::default(),
    };
    config.seed = args.seed;
    if let Some(n) = args.per_class {
        config.samples_per_class = n;
        config.class_counts = None;
    }
    if let Some(total) = args.total {
        config.class_counts = Some(cubescore_core::synth::proportional_counts(total));
    }
    if args.no_meta {
        config.with_meta = false;
    }
    config.validate().map_err(CliError::Validation)?;
    Ok(config)
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let config = synth_config(args)?;
    let dataset = generate_dataset(&config);
    let mut buf = Vec::new();
    write_jsonl(&mut buf, dataset.samples()).expect("writing to memory cannot fail");
    write_file(&args.output, buf)
}

pub fn stats(args: &StatsArgs) -> Result<(), CliError> {
    let samples = read_samples(&args.data)?;
    for grouping in Grouping::ALL {
        let table = distribution_table(&samples, grouping).map_err(CliError::invalid)?;
        write_file(&args.out.join(format!("distribution_{}.csv", grouping.name())), table.to_csv())?;
    }
    let rows = score_correlations(&samples).map_err(CliError::invalid)?;
    write_file(&args.out.join("correlations.csv"), correlations_csv(&rows))
}

pub fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let scorer = Arc::new(load_model(&args.model)?);
    let cors = server::cors_layer(&args.cors_origins).map_err(CliError::Validation)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    runtime
        .block_on(server::serve(scorer, args.bind, cors))
        .map_err(|e| CliError::Io(format!("{}: {e}", args.bind)))
}

/// Paths written by `train` into its output directory.
pub fn train_outputs(dir: &Path) -> [PathBuf; 3] {
    [dir.join("model.json"), dir.join("train_report.csv"), dir.join("metrics.json")]
}
