use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use ukm_core::data::{self, EncodedSample, KnowledgeLevel, RawSample, PREDEFINED_TRAIN_ROWS};
use ukm_core::metrics;
use ukm_core::pipeline::{self, ModelFile, PipelineError, ProtocolSummary, SplitSpec, TrainSummary, TrainTrace};
use ukm_core::published::{ConsistencyCheck, Published};

use crate::config::RunConfig;
use crate::{CliError, SplitArgs};

fn load_raw(path: &Path) -> Result<Vec<RawSample>, CliError> {
    data::load_dataset(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn encode(raw: &[RawSample], encoding: &data::Encoding) -> Result<Vec<EncodedSample>, CliError> {
    encoding.apply(raw).map_err(|e| CliError::from(PipelineError::from(e)))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<ModelFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Format(format!("cannot read {}: {e}", path.display())))?;
    ModelFile::from_json(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

/// Applies split flags on top of the split a model was trained with.
fn resolve_split(base: &SplitSpec, args: &SplitArgs) -> Result<SplitSpec, CliError> {
    let (base_ratio, base_seed, base_rows, base_k, base_fold) = match *base {
        SplitSpec::Ratio { ratio, seed } => (ratio, seed, PREDEFINED_TRAIN_ROWS, 5, 0),
        SplitSpec::Predefined { train_rows } => (0.8, 0, train_rows, 5, 0),
        SplitSpec::Kfold { k, fold, seed } => (0.8, seed, PREDEFINED_TRAIN_ROWS, k, fold),
    };
    let mode = match (&args.split, base) {
        (Some(m), _) => m.as_str(),
        (None, SplitSpec::Ratio { .. }) => "ratio",
        (None, SplitSpec::Predefined { .. }) => "predefined",
        (None, SplitSpec::Kfold { .. }) => "kfold",
    };
    let seed = args.seed.unwrap_or(base_seed);
    match mode {
        "ratio" => Ok(SplitSpec::Ratio {
            ratio: args.ratio.unwrap_or(base_ratio),
            seed,
        }),
        "predefined" => Ok(SplitSpec::Predefined {
            train_rows: args.train_rows.unwrap_or(base_rows),
        }),
        "kfold" => Ok(SplitSpec::Kfold {
            k: args.folds.unwrap_or(base_k),
            fold: args.fold.unwrap_or(base_fold),
            seed,
        }),
        other => Err(CliError::Config(format!("unknown split mode {other:?}"))),
    }
}

#[derive(Serialize)]
struct TraceFile<'a> {
    summary: &'a TrainSummary,
    trace: &'a TrainTrace,
}

pub fn train(
    config: Option<&Path>,
    overrides: &[String],
    dataset: Option<PathBuf>,
    out_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(config, overrides)?;
    if dataset.is_some() {
        cfg.dataset = dataset;
    }
    if out_dir.is_some() {
        cfg.out_dir = out_dir;
    }
    let spec = cfg.experiment()?;
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let raw = load_raw(cfg.dataset()?)?;
    let samples = encode(&raw, &spec.encoding)?;

    let outcome = pipeline::train(&spec, &samples)?;
    let trace = TraceFile {
        summary: &outcome.summary,
        trace: &outcome.trace,
    };
    let mut trace_json = serde_json::to_string_pretty(&trace).expect("trace serializes");
    trace_json.push('\n');
    write_file(&out_dir.join("model.json"), &outcome.model.to_json())?;
    write_file(&out_dir.join("trace.json"), &trace_json)?;

    let s = &outcome.summary;
    println!("model:          {}", out_dir.join("model.json").display());
    println!("train samples:  {}", s.train_size);
    println!("test samples:   {}", s.test_size);
    println!("train RMSE:     {:.6}", s.train_rmse);
    println!("test RMSE:      {:.6}", s.test_rmse);
    println!("train accuracy: {:.4}", s.train_accuracy);
    println!("test accuracy:  {:.4}", s.test_accuracy);
    Ok(())
}

fn test_split(model: &ModelFile, dataset: &Path, split: &SplitArgs) -> Result<Vec<EncodedSample>, CliError> {
    let spec = resolve_split(&model.experiment.split, split)?;
    let raw = load_raw(dataset)?;
    let samples = encode(&raw, &model.experiment.encoding)?;
    Ok(spec.apply(&samples)?.test)
}

pub fn evaluate(model_path: &Path, dataset: &Path, split: &SplitArgs, out: Option<&Path>) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let test = test_split(&model, dataset, split)?;
    let report = pipeline::evaluate(&model.classifier, &test)?;
    match out {
        Some(path) => write_file(path, &report.to_json()),
        None => {
            print!("{}", report.to_json());
            Ok(())
        }
    }
}

pub fn roc(model_path: &Path, dataset: &Path, class: usize, out: &Path, split: &SplitArgs) -> Result<(), CliError> {
    if class >= data::NUM_CLASSES {
        return Err(CliError::Config(format!("class must be 0..{}, got {class}", data::NUM_CLASSES - 1)));
    }
    let model = load_model(model_path)?;
    let test = test_split(&model, dataset, split)?;
    let (scores, labels) = pipeline::class_scores(&model.classifier, &test, class)?;
    let curve = metrics::roc_curve(&scores, &labels)
        .map_err(|e| CliError::Data(format!("class {class} on this test split: {e}")))?;
    write_file(out, &curve.to_csv())?;
    println!("AUC class {class}: {}", metrics::auc(&curve));
    Ok(())
}

#[derive(Serialize)]
struct ComputedRow {
    method: String,
    config: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<ProtocolSummary>,
}

#[derive(Serialize)]
struct Comparison {
    test_size: usize,
    computed: Vec<ComputedRow>,
    published: Vec<PublishedEntry>,
}

#[derive(Serialize)]
struct PublishedEntry {
    family: String,
    citation: String,
    #[serde(flatten)]
    check: ConsistencyCheck,
}

fn run_config(path: &Path, overrides: &[String], dataset: Option<&Path>, run_dir: &Path) -> Result<ProtocolSummary, CliError> {
    let mut cfg = RunConfig::load(Some(path), overrides)?;
    if let Some(d) = dataset {
        cfg.dataset = Some(d.to_path_buf());
    }
    let spec = cfg.experiment()?;
    let raw = load_raw(cfg.dataset()?)?;
    let samples = encode(&raw, &spec.encoding)?;
    let summary = pipeline::run_protocol(&spec, &samples)?;
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    write_file(&run_dir.join("summary.json"), &json)?;
    Ok(summary)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn compare(
    configs: &[PathBuf],
    overrides: &[String],
    published_path: &Path,
    dataset: Option<PathBuf>,
    out_dir: &Path,
    test_size: usize,
) -> Result<(), CliError> {
    let published = Published::load(published_path)
        .map_err(|e| CliError::Config(format!("published constants {}: {e}", published_path.display())))?;
    if test_size == 0 {
        return Err(CliError::Config("test_size must be positive".into()));
    }

    let labels: Vec<String> = configs
        .iter()
        .map(|p| {
            RunConfig::load(Some(p), overrides)
                .map(|c| c.label())
                .unwrap_or_else(|_| p.file_stem().map_or("config".into(), |s| s.to_string_lossy().into_owned()))
        })
        .collect();
    let results: Vec<Result<ProtocolSummary, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .zip(&labels)
            .enumerate()
            .map(|(i, (path, label))| {
                let run_dir = out_dir.join(format!("{i:02}-{}", sanitize(label)));
                let dataset = dataset.as_deref();
                scope.spawn(move || run_config(path, overrides, dataset, &run_dir))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
    });

    let computed: Vec<ComputedRow> = configs
        .iter()
        .zip(labels)
        .zip(results)
        .map(|((path, method), r)| match r {
            Ok(summary) => ComputedRow {
                method,
                config: path.display().to_string(),
                status: "ok",
                error: None,
                result: Some(summary),
            },
            Err(e) => ComputedRow {
                method,
                config: path.display().to_string(),
                status: "failed",
                error: Some(e.to_string()),
                result: None,
            },
        })
        .collect();
    let published_rows: Vec<PublishedEntry> = published
        .comparison
        .iter()
        .zip(published.consistency(test_size))
        .map(|(row, check)| PublishedEntry {
            family: row.family.clone(),
            citation: row.citation.clone(),
            check,
        })
        .collect();
    let comparison = Comparison {
        test_size,
        computed,
        published: published_rows,
    };

    let mut json = serde_json::to_string_pretty(&comparison).expect("comparison serializes");
    json.push('\n');
    let text = render_comparison(&comparison);
    write_file(&out_dir.join("comparison.json"), &json)?;
    write_file(&out_dir.join("comparison.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn render_comparison(c: &Comparison) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<24} {:<10} {:>8} {:>8}  note", "method", "source", "MWCS", "CAP");
    for row in &c.computed {
        match &row.result {
            Some(r) => {
                let _ = writeln!(
                    out,
                    "{:<24} {:<10} {:>8.2} {:>8.2}  {} run(s), mean CAP {:.2}, max CAP {:.2}",
                    row.method,
                    "computed",
                    r.mwcs,
                    r.cap,
                    r.runs.len(),
                    r.mean_cap,
                    r.max_cap
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "{:<24} {:<10} {:>8} {:>8}  FAILED: {}",
                    row.method,
                    "computed",
                    "-",
                    "-",
                    row.error.as_deref().unwrap_or("")
                );
            }
        }
    }
    for p in &c.published {
        let note = if p.check.consistent {
            format!("consistent with {} test samples", c.test_size)
        } else {
            format!(
                "INCONSISTENT with {} test samples (implies {:.2})",
                c.test_size, p.check.implied_cap
            )
        };
        let _ = writeln!(
            out,
            "{:<24} {:<10} {:>8} {:>8}  {}",
            p.check.method, "published", p.check.mwcs, p.check.printed_cap, note
        );
    }
    out
}

pub fn dataset_stats(dataset: &Path, published: Option<&Path>) -> Result<(), CliError> {
    let raw = load_raw(dataset)?;
    let mut counts = [0usize; data::NUM_CLASSES];
    for s in &raw {
        counts[s.uns.index()] += 1;
    }
    println!("samples: {}", raw.len());
    for level in KnowledgeLevel::ALL {
        println!("{:<9} {}", level.name(), counts[level.index()]);
    }
    if let Some(path) = published {
        let p = Published::load(path)
            .map_err(|e| CliError::Config(format!("published constants {}: {e}", path.display())))?;
        let reported = p.class_distribution.as_array();
        println!(
            "published distribution: {:?} (sums to {}; reported sample count {})",
            reported,
            reported.iter().sum::<usize>(),
            p.reported_sample_count
        );
        if reported != counts {
            println!("note: file counts differ from the published distribution");
        }
    }
    Ok(())
}
