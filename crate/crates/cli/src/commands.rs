//! The `filter`, `evaluate`, and `plot` commands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use drivevqa_core::detection::{ClassVocabulary, FilterConfig};
use drivevqa_core::dump::{dump_to_bytes, load_detection_dump};
use drivevqa_core::filter::{
    apply_filter, driving_whitelist, load_whitelist, DEFAULT_DETECTION_THRESHOLD,
};
use drivevqa_core::ingest::{CameraChannel, Corpus};
use drivevqa_core::mock::MockBackend;
use drivevqa_core::overlap::{compare_features, grade_answer, FeatureComparison, SynonymTable};
use drivevqa_core::pipeline::{run_pipeline, Backend, PipelineResult, Question, Variant};
use drivevqa_core::scoring::{evaluate_run, AggregateCell, EmbeddingProvider, HashEmbedding};

use crate::{CliError, CORPUS_ENV};

/// Filter a detection dump through a class whitelist and threshold.
#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Input detection dump (ROIF binary).
    #[arg(long)]
    pub dump: PathBuf,
    /// Output path for the filtered dump; a `<out>.trace.json` sidecar
    /// records which rows survived.
    #[arg(long)]
    pub out: PathBuf,
    /// Whitelist file (one class name per line, `#` comments). Defaults to
    /// the built-in driving whitelist intersected with the dump vocabulary.
    #[arg(long)]
    pub whitelist: Option<PathBuf>,
    /// Detection threshold in [0,1]; kept rows score at or above it.
    #[arg(long)]
    pub threshold: Option<f32>,
}

/// Run pipeline variants over a corpus, score them, and emit reports.
#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Corpus root containing manifest.jsonl, human_answers.jsonl, and
    /// ratings.csv. Falls back to the DRIVEVQA_CORPUS environment variable.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Output directory for results, similarity rows, aggregates, feature
    /// comparisons, and the summary.
    #[arg(long)]
    pub out: PathBuf,
    /// Run configuration file (JSON with the same keys as the flags);
    /// explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Whitelist file; defaults to the built-in driving whitelist.
    #[arg(long)]
    pub whitelist: Option<PathBuf>,
    /// Detection threshold in [0,1].
    #[arg(long)]
    pub threshold: Option<f32>,
    /// Backend name; `mock` is built in.
    #[arg(long)]
    pub backend: Option<String>,
    /// Seed for every random stream in the run.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated embedding providers (`hash` or `hash:<label>`).
    #[arg(long)]
    pub providers: Option<String>,
    /// Comma-separated pipeline variants to run (`pretrained,filtered`).
    #[arg(long)]
    pub variants: Option<String>,
    /// Synonym table for answer grading; defaults to the built-in table.
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    /// Worker threads for pipeline runs; output is identical at any count.
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Render grouped bar charts from an aggregates file.
#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Aggregates JSON written by `evaluate`.
    #[arg(long)]
    pub aggregates: PathBuf,
    /// Output directory for mae.svg, rmse.svg, and pearson.svg.
    #[arg(long)]
    pub out: PathBuf,
}

/// The resolved configuration of one evaluation run. Serializable so a run
/// can be pinned in a file and reproduced exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub whitelist: Option<PathBuf>,
    pub threshold: f32,
    pub backend: String,
    pub seed: u64,
    pub providers: Vec<String>,
    pub variants: Vec<String>,
    pub synonyms: Option<PathBuf>,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            whitelist: None,
            threshold: DEFAULT_DETECTION_THRESHOLD,
            backend: "mock".to_string(),
            seed: 0,
            providers: vec!["hash".to_string()],
            variants: Variant::ALL.iter().map(|v| v.to_string()).collect(),
            synonyms: None,
            workers: 1,
        }
    }
}

impl RunConfig {
    /// Merge precedence: defaults, then the config file, then explicit flags.
    pub fn resolve(args: &EvaluateArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(corpus) = &args.corpus {
            cfg.corpus = Some(corpus.clone());
        }
        if let Some(whitelist) = &args.whitelist {
            cfg.whitelist = Some(whitelist.clone());
        }
        if let Some(threshold) = args.threshold {
            cfg.threshold = threshold;
        }
        if let Some(backend) = &args.backend {
            cfg.backend = backend.clone();
        }
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        if let Some(providers) = &args.providers {
            cfg.providers = providers.split(',').map(|s| s.trim().to_string()).collect();
        }
        if let Some(variants) = &args.variants {
            cfg.variants = variants.split(',').map(|s| s.trim().to_string()).collect();
        }
        if let Some(synonyms) = &args.synonyms {
            cfg.synonyms = Some(synonyms.clone());
        }
        if let Some(workers) = args.workers {
            cfg.workers = workers;
        }
        Ok(cfg)
    }

    fn corpus_root(&self) -> Result<PathBuf, CliError> {
        if let Some(corpus) = &self.corpus {
            return Ok(corpus.clone());
        }
        match std::env::var_os(CORPUS_ENV) {
            Some(root) if !root.is_empty() => Ok(PathBuf::from(root)),
            _ => Err(CliError::invalid(format!(
                "no corpus root: pass --corpus or set {CORPUS_ENV}"
            ))),
        }
    }

    fn parsed_variants(&self) -> Result<Vec<Variant>, CliError> {
        let mut variants = Vec::new();
        for raw in &self.variants {
            let variant: Variant = raw
                .parse()
                .map_err(|_| CliError::invalid(format!("unknown variant `{raw}`")))?;
            if !variants.contains(&variant) {
                variants.push(variant);
            }
        }
        if variants.is_empty() {
            return Err(CliError::invalid("at least one variant must be selected"));
        }
        variants.sort();
        Ok(variants)
    }
}

/// Resolve a backend by name. `mock` is the only built-in; real-model
/// adapters register here.
pub fn resolve_backend(name: &str, seed: u64) -> Result<Box<dyn Backend>, CliError> {
    match name {
        "mock" => Ok(Box::new(MockBackend::new(seed))),
        other => Err(CliError::invalid(format!(
            "unknown backend `{other}` (known: mock)"
        ))),
    }
}

/// Resolve embedding providers from `hash` / `hash:<label>` specs.
pub fn resolve_providers(specs: &[String]) -> Result<Vec<Box<dyn EmbeddingProvider>>, CliError> {
    if specs.is_empty() {
        return Err(CliError::invalid("at least one provider must be selected"));
    }
    let mut providers: Vec<Box<dyn EmbeddingProvider>> = Vec::with_capacity(specs.len());
    for spec in specs {
        let provider = if spec == "hash" {
            HashEmbedding::default_provider()
        } else if let Some(label) = spec.strip_prefix("hash:") {
            let salt = drivevqa_core::hashing::fnv1a64(label.as_bytes());
            HashEmbedding::new(spec.clone(), HashEmbedding::DEFAULT_DIM, salt)
        } else {
            return Err(CliError::invalid(format!(
                "unknown embedding provider `{spec}` (known: hash, hash:<label>)"
            )));
        };
        if providers.iter().any(|p| p.name() == provider.name()) {
            return Err(CliError::invalid(format!("duplicate provider `{spec}`")));
        }
        providers.push(Box::new(provider));
    }
    Ok(providers)
}

fn bind_whitelist(
    whitelist: Option<&Path>,
    threshold: f32,
    vocab: &ClassVocabulary,
) -> Result<FilterConfig, CliError> {
    match whitelist {
        Some(path) => {
            let names = load_whitelist(path)?;
            if names.is_empty() {
                return Err(CliError::invalid(format!(
                    "whitelist {} has no class names",
                    path.display()
                )));
            }
            // Strict bind: apply_filter fails fast on unknown names, so
            // surface them here with the file context.
            for name in &names {
                if vocab.index_of(name).is_none() {
                    return Err(CliError::invalid(format!(
                        "unknown whitelist class `{name}` in {}",
                        path.display()
                    )));
                }
            }
            Ok(FilterConfig::new(names, threshold)?)
        }
        None => {
            let (cfg, warnings) = driving_whitelist(vocab)?;
            for warning in warnings {
                eprintln!("warning: {warning}");
            }
            Ok(FilterConfig::new(
                cfg.whitelist.iter().cloned().collect::<Vec<_>>(),
                threshold,
            )?)
        }
    }
}

/// `filter`: prune a dump, write the filtered dump plus a trace sidecar,
/// and report kept/dropped counts on stdout.
pub fn cmd_filter(args: &FilterArgs) -> Result<(), CliError> {
    let (dets, vocab) = load_detection_dump(&args.dump)?;
    let threshold = args.threshold.unwrap_or(DEFAULT_DETECTION_THRESHOLD);
    let cfg = bind_whitelist(args.whitelist.as_deref(), threshold, &vocab)?;
    let (filtered, trace) = apply_filter(&dets, &cfg, &vocab)?;

    // Render everything before writing anything.
    let dump_bytes = dump_to_bytes(&filtered, &vocab)?;
    let trace_json = serde_json::to_string_pretty(&trace)
        .map_err(|e| CliError::invalid(format!("serializing trace: {e}")))?;

    std::fs::write(&args.out, dump_bytes)
        .map_err(|e| CliError::io(format!("writing {}: {e}", args.out.display())))?;
    let trace_path = PathBuf::from(format!("{}.trace.json", args.out.display()));
    std::fs::write(&trace_path, trace_json + "\n")
        .map_err(|e| CliError::io(format!("writing {}: {e}", trace_path.display())))?;

    println!("kept {} of {}", trace.output_count, trace.input_count);
    Ok(())
}

/// Aggregates file schema shared by `evaluate` (writer) and `plot` (reader).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregatesFile {
    pub cells: Vec<AggregateCell>,
}

#[derive(Debug, Clone, Serialize)]
struct ResultLine<'a> {
    sample_id: &'a str,
    camera: CameraChannel,
    result: &'a PipelineResult,
}

#[derive(Debug, Default, Clone, Serialize)]
struct GradeCounts {
    correct: usize,
    partially_correct: usize,
    wrong: usize,
}

#[derive(Debug, Serialize)]
struct Summary {
    backend: String,
    seed: u64,
    threshold: f32,
    providers: Vec<String>,
    variants: Vec<String>,
    questions: usize,
    grade_counts: BTreeMap<String, GradeCounts>,
}

struct Task {
    sample_id: String,
    camera: CameraChannel,
    image_ref: String,
    question: Question,
    variant: Variant,
}

struct TaskOutput {
    sample_id: String,
    camera: CameraChannel,
    result: PipelineResult,
}

fn run_tasks(
    tasks: &[Task],
    backend: &dyn Backend,
    filter_cfg: &FilterConfig,
    workers: usize,
) -> Result<Vec<TaskOutput>, CliError> {
    let run_one = |task: &Task| -> Result<TaskOutput, CliError> {
        let result = run_pipeline(
            &task.image_ref,
            &task.question,
            task.variant,
            backend,
            Some(filter_cfg),
        )?;
        Ok(TaskOutput {
            sample_id: task.sample_id.clone(),
            camera: task.camera,
            result,
        })
    };

    let workers = if backend.serial() { 1 } else { workers.max(1) };
    let mut outputs = if workers == 1 || tasks.len() <= 1 {
        tasks.iter().map(run_one).collect::<Result<Vec<_>, _>>()?
    } else {
        let chunk_size = tasks.len().div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = tasks
                .chunks(chunk_size)
                .map(|chunk| {
                    scope.spawn(move || chunk.iter().map(run_one).collect::<Result<Vec<_>, _>>())
                })
                .collect();
            let mut all = Vec::with_capacity(tasks.len());
            for handle in handles {
                all.extend(handle.join().expect("worker panicked")?);
            }
            Ok::<_, CliError>(all)
        })?
    };
    // Buffered and sorted, so worker count is observationally invisible.
    outputs.sort_by(|a, b| {
        (&a.sample_id, &a.result.question_id, a.result.variant).cmp(&(
            &b.sample_id,
            &b.result.question_id,
            b.result.variant,
        ))
    });
    Ok(outputs)
}

/// `evaluate`: run the selected variants over every (sample, question)
/// pair, score against human references, compare feature sets, and write
/// the full report tree. Nothing is written until every stage succeeds.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    let corpus_root = cfg.corpus_root()?;
    let variants = cfg.parsed_variants()?;
    if cfg.workers == 0 {
        return Err(CliError::invalid("--workers must be at least 1"));
    }

    let corpus = Corpus::load(&corpus_root)?;
    for warning in &corpus.warnings {
        eprintln!("warning: {warning}");
    }
    let problems = corpus.validate_for_scoring(&variants);
    if !problems.is_empty() {
        for problem in &problems {
            eprintln!("error: {problem}");
        }
        return Err(CliError::invalid(format!(
            "corpus failed validation with {} problem(s)",
            problems.len()
        )));
    }

    let backend = resolve_backend(&cfg.backend, cfg.seed)?;
    let filter_cfg = bind_whitelist(
        cfg.whitelist.as_deref(),
        cfg.threshold,
        backend.vocabulary(),
    )?;
    let providers = resolve_providers(&cfg.providers)?;
    let synonyms = match &cfg.synonyms {
        Some(path) => SynonymTable::load(path)?,
        None => SynonymTable::builtin(),
    };

    let mut entries = corpus.manifest.entries.clone();
    entries.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    let mut tasks = Vec::new();
    for entry in &entries {
        for question_id in &entry.question_ids {
            let question = corpus.manifest.questions[question_id].clone();
            for &variant in &variants {
                tasks.push(Task {
                    sample_id: entry.sample_id.clone(),
                    camera: entry.camera,
                    image_ref: entry.image_ref.clone(),
                    question: question.clone(),
                    variant,
                });
            }
        }
    }
    let outputs = run_tasks(&tasks, backend.as_ref(), &filter_cfg, cfg.workers)?;

    let results: Vec<PipelineResult> = outputs.iter().map(|o| o.result.clone()).collect();
    let report = evaluate_run(&results, &corpus.human_answers, &providers, &corpus.ratings)?;

    // Feature comparison needs both model feature sets.
    let comparisons: Vec<FeatureComparison> = if variants.contains(&Variant::Pretrained)
        && variants.contains(&Variant::Filtered)
    {
        let mut by_question: BTreeMap<&str, (Option<&PipelineResult>, Option<&PipelineResult>)> =
            BTreeMap::new();
        for result in &results {
            let slot = by_question.entry(&result.question_id).or_default();
            match result.variant {
                Variant::Pretrained => slot.0 = Some(result),
                Variant::Filtered => slot.1 = Some(result),
            }
        }
        by_question
            .iter()
            .map(|(question_id, (pretrained, filtered))| {
                let human = corpus
                    .human_record(question_id)
                    .expect("validated above")
                    .observed_features();
                compare_features(
                    question_id.to_string(),
                    human,
                    pretrained
                        .expect("both variants ran")
                        .observed_features
                        .clone(),
                    filtered
                        .expect("both variants ran")
                        .observed_features
                        .clone(),
                )
            })
            .collect()
    } else {
        eprintln!("note: feature comparison needs both variants; skipping");
        Vec::new()
    };

    let mut grade_counts: BTreeMap<String, GradeCounts> = BTreeMap::new();
    for result in &results {
        let consensus = &corpus
            .human_record(&result.question_id)
            .expect("validated above")
            .consensus_answer;
        let counts = grade_counts.entry(result.variant.to_string()).or_default();
        match grade_answer(&result.answer, consensus, &synonyms) {
            drivevqa_core::overlap::CorrectnessGrade::Correct => counts.correct += 1,
            drivevqa_core::overlap::CorrectnessGrade::PartiallyCorrect => {
                counts.partially_correct += 1
            }
            drivevqa_core::overlap::CorrectnessGrade::Wrong => counts.wrong += 1,
        }
    }

    // Render every output before writing any of them.
    let mut results_jsonl = String::new();
    for output in &outputs {
        let line = ResultLine {
            sample_id: &output.sample_id,
            camera: output.camera,
            result: &output.result,
        };
        results_jsonl
            .push_str(&serde_json::to_string(&line).map_err(|e| CliError::invalid(e.to_string()))?);
        results_jsonl.push('\n');
    }

    let mut rows_csv = String::from("question_id,variant,provider,auto_score,human_score\n");
    for row in &report.rows {
        let _ = writeln!(
            rows_csv,
            "{},{},{},{},{}",
            row.question_id, row.variant, row.provider, row.auto_score, row.human_score
        );
    }

    let aggregates_json = serde_json::to_string_pretty(&AggregatesFile {
        cells: report.aggregates.clone(),
    })
    .map_err(|e| CliError::invalid(e.to_string()))?
        + "\n";

    let mut features_csv = String::from(
        "question_id,jaccard_pretrained,jaccard_filtered,precision_pretrained,recall_pretrained,precision_filtered,recall_filtered,human_features,pretrained_features,filtered_features\n",
    );
    for cmp in &comparisons {
        let join = |s: &std::collections::BTreeSet<String>| {
            s.iter().cloned().collect::<Vec<_>>().join("|")
        };
        let _ = writeln!(
            features_csv,
            "{},{},{},{},{},{},{},{},{},{}",
            cmp.question_id,
            cmp.jaccard_pretrained,
            cmp.jaccard_filtered,
            cmp.precision_pretrained,
            cmp.recall_pretrained,
            cmp.precision_filtered,
            cmp.recall_filtered,
            join(&cmp.human_features),
            join(&cmp.pretrained_features),
            join(&cmp.filtered_features),
        );
    }

    let summary = Summary {
        backend: cfg.backend.clone(),
        seed: cfg.seed,
        threshold: cfg.threshold,
        providers: providers.iter().map(|p| p.name().to_string()).collect(),
        variants: variants.iter().map(|v| v.to_string()).collect(),
        questions: corpus.manifest.questions.len(),
        grade_counts,
    };
    let summary_json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::invalid(e.to_string()))?
        + "\n";

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::io(format!("creating {}: {e}", args.out.display())))?;
    let write = |name: &str, contents: &str| -> Result<(), CliError> {
        let path = args.out.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::io(format!("writing {}: {e}", path.display())))
    };
    write("results.jsonl", &results_jsonl)?;
    write("similarity_rows.csv", &rows_csv)?;
    write("aggregates.json", &aggregates_json)?;
    write("feature_comparison.csv", &features_csv)?;
    write("summary.json", &summary_json)?;

    println!(
        "evaluated {} questions x {} variant(s) with {} provider(s); reports in {}",
        summary.questions,
        variants.len(),
        providers.len(),
        args.out.display()
    );
    Ok(())
}

/// `plot`: one grouped bar chart per metric from an aggregates file.
pub fn cmd_plot(args: &PlotArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.aggregates)
        .map_err(|e| CliError::io(format!("reading {}: {e}", args.aggregates.display())))?;
    let file: AggregatesFile = serde_json::from_str(&text)
        .map_err(|e| CliError::invalid(format!("{}: {e}", args.aggregates.display())))?;
    if file.cells.is_empty() {
        return Err(CliError::invalid(format!(
            "{}: aggregates file has no cells",
            args.aggregates.display()
        )));
    }

    let charts: Vec<(&str, String)> = crate::plot::Metric::ALL
        .iter()
        .map(|metric| {
            (
                metric.file_name(),
                crate::plot::render_chart(*metric, &file.cells),
            )
        })
        .collect();

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::io(format!("creating {}: {e}", args.out.display())))?;
    for (name, svg) in &charts {
        let path = args.out.join(name);
        std::fs::write(&path, svg)
            .map_err(|e| CliError::io(format!("writing {}: {e}", path.display())))?;
    }
    println!("wrote {} charts to {}", charts.len(), args.out.display());
    Ok(())
}
