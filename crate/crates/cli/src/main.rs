use std::collections::BTreeMap;
use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use medcourse_core::clock::SystemClock;
use medcourse_core::config::Config;
use medcourse_core::corpus::load_corpus;
use medcourse_core::evalkit::{
    aggregate, iaa_summary, merge, pair_annotations, render_results_table, render_validation_table, resolve,
    AnnotationRecord, FinalValues, Resolution,
};
use medcourse_core::exam::{filter_questions, parse_exam_json, parse_exam_quiz_html, render_exam_json, ExamFile};
use medcourse_core::genpipe::{Pipeline, PromptTemplates, QuestionReport};
use medcourse_core::rerank::{RerankMode, RerankOptions, RerankVariant};
use medcourse_core::retrieval::{Analyzer, AnalyzerConfig, SearchEngine, SynonymDict};
use medcourse_core::scheduler::{simulate, Policy, RetentionThreshold};
use medcourse_core::Execution;
use medcourse_service::runtime::read_json_dir;
use medcourse_service::{assemble_course, AppState, DataDir, Runtime};

#[derive(Parser)]
#[command(name = "medcourse", version, about = "Build, evaluate and serve exam-based review courses")]
struct Cli {
    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Html,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an exam file and write canonical exam JSON.
    Ingest {
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a search index over a JSONL corpus.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        synonyms: PathBuf,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Strip diacritics before indexing.
        #[arg(long)]
        fold_diacritics: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Query an index; prints rank, doc_id and score as TSV.
    Retrieve {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 200)]
        k: usize,
    },
    /// Run the comment pipeline for every kept question.
    Generate {
        /// Canonical exam JSON file or a directory of them.
        #[arg(long)]
        exams: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        mode: Option<RerankVariant>,
        /// Provider and scorer configuration (TOML). Mock provider when omitted.
        #[arg(long)]
        provider: Option<PathBuf>,
        /// Directory holding rephrase.<v>.txt and comment.<v>.txt.
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long, default_value = "v1")]
        template_version: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate annotation scores into a results table.
    Evaluate {
        #[arg(long)]
        reports: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        annotations: Vec<PathBuf>,
        #[arg(long)]
        resolutions: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Agreement between two annotators, with resolved final scores.
    Iaa {
        #[arg(long, num_args = 2, required = true)]
        annotations: Vec<PathBuf>,
        #[arg(long)]
        resolutions: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay one item under a fixed grading policy and print the trace.
    ScheduleSim {
        /// know, unsure, dontknow, mixed, or a comma list such as know,know,unsure
        #[arg(long)]
        policy: Policy,
        #[arg(long)]
        days: u32,
        #[arg(long, default_value_t = 0.9)]
        r_target: f64,
    },
    /// Assemble a course from exams and their reports.
    Course {
        #[arg(long)]
        exams: PathBuf,
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API over a data directory.
    Serve {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Write a snapshot every N events.
        #[arg(long, default_value_t = 500)]
        snapshot_every: u64,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Ingest { format, input, out } => ingest(format, &input, &out),
        Command::Index {
            corpus,
            synonyms,
            stopwords,
            fold_diacritics,
            out,
        } => index(&corpus, &synonyms, stopwords.as_deref(), fold_diacritics, &out, exec),
        Command::Retrieve { index, query, k } => retrieve(&index, &query, k),
        Command::Generate {
            exams,
            index,
            mode,
            provider,
            templates,
            template_version,
            out,
        } => {
            let templates = match templates {
                Some(dir) => PromptTemplates::load(dir, &template_version)?,
                None => PromptTemplates::default(),
            };
            generate(&exams, &index, mode, provider.as_deref(), &templates, &out, exec)
        }
        Command::Evaluate {
            reports,
            annotations,
            resolutions,
            out,
        } => evaluate(&reports, &annotations, resolutions.as_deref(), &out),
        Command::Iaa {
            annotations,
            resolutions,
            out,
        } => iaa(&annotations[0], &annotations[1], resolutions.as_deref(), &out),
        Command::ScheduleSim { policy, days, r_target } => {
            let threshold = RetentionThreshold::new(r_target)?;
            println!("day\tgrade\tR\tinterval_days\tease\treps");
            for row in simulate(&policy, days, threshold) {
                println!("{row}");
            }
            Ok(())
        }
        Command::Course { exams, reports, id, out } => course(&exams, &reports, &id, &out),
        Command::Serve {
            data,
            port,
            bind,
            snapshot_every,
        } => {
            let runtime = Runtime::open(DataDir::new(data), snapshot_every)?;
            let state = AppState::new(runtime, Arc::new(SystemClock));
            tokio::runtime::Runtime::new()?.block_on(medcourse_service::serve(state, SocketAddr::new(bind, port)))?;
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn ingest(format: Format, input: &Path, out: &Path) -> Result<()> {
    let bytes = fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let exam = match format {
        Format::Json => parse_exam_json(&bytes),
        Format::Html => parse_exam_quiz_html(&bytes),
    }
    .with_context(|| format!("parsing {}", input.display()))?;
    write(out, &render_exam_json(&exam))?;
    let filtered = filter_questions(exam.clone());
    log::info!(
        "{}: {} questions, {} usable, {} to be filtered",
        exam.exam_id,
        exam.questions.len(),
        filtered.kept.len(),
        filtered.dropped.len()
    );
    Ok(())
}

fn index(
    corpus: &Path,
    synonyms: &Path,
    stopwords: Option<&Path>,
    fold_diacritics: bool,
    out: &Path,
    exec: Execution,
) -> Result<()> {
    let store = load_corpus(corpus).with_context(|| format!("loading {}", corpus.display()))?;
    let mut cfg = AnalyzerConfig {
        preserve_diacritics: !fold_diacritics,
        ..AnalyzerConfig::default()
    };
    if let Some(p) = stopwords {
        cfg = cfg.with_stopwords_text(&read(p)?);
    }
    cfg.synonyms = SynonymDict::parse(&read(synonyms)?, &Analyzer::new(cfg.clone()));
    let n = store.len();
    let classes = cfg.synonyms.len();
    let engine = SearchEngine::build(store, cfg, exec);
    engine.save(out)?;
    log::info!("indexed {n} documents, {} terms, {classes} synonym classes", engine.index().terms().count());
    Ok(())
}

fn retrieve(index: &Path, query: &str, k: usize) -> Result<()> {
    let engine = SearchEngine::load(index).with_context(|| format!("loading {}", index.display()))?;
    for (rank, hit) in engine.search_text(query, k).iter().enumerate() {
        println!("{}\t{}\t{:.6}", rank + 1, hit.doc_id, hit.score);
    }
    Ok(())
}

/// A single exam file, or every `*.json` exam in a directory.
fn load_exams(path: &Path) -> Result<Vec<ExamFile>> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    files
        .iter()
        .map(|f| {
            let bytes = fs::read(f).with_context(|| format!("reading {}", f.display()))?;
            parse_exam_json(&bytes).with_context(|| format!("parsing {}", f.display()))
        })
        .collect()
}

fn generate(
    exams: &Path,
    index: &Path,
    mode: Option<RerankVariant>,
    provider_cfg: Option<&Path>,
    templates: &PromptTemplates,
    out: &Path,
    exec: Execution,
) -> Result<()> {
    let cfg = match provider_cfg {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let mut rerank_mode = RerankMode::from(mode.unwrap_or(cfg.rerank_mode));
    if let Some(cap) = cfg.rerank_cap {
        rerank_mode = rerank_mode.with_cap(cap);
    }
    let engine = SearchEngine::load(index).with_context(|| format!("loading {}", index.display()))?;
    let provider = cfg.build_provider(engine.analyzer());
    let scorer = cfg.build_scorer(engine.analyzer());
    let clock = SystemClock;
    let pipeline = Pipeline {
        engine: &engine,
        mode: rerank_mode,
        scorer: &*scorer,
        provider: &*provider,
        params: cfg.gen_params(),
        templates,
        clock: &clock,
        rerank_options: RerankOptions {
            exec,
            ..RerankOptions::default()
        },
    };

    let mut questions = Vec::new();
    for exam in load_exams(exams)? {
        let filtered = filter_questions(exam);
        for (q, reason) in &filtered.dropped {
            log::info!("{}: skipped ({reason:?})", q.id());
        }
        questions.extend(filtered.kept);
    }
    fs::create_dir_all(out)?;
    let results = pipeline.run_batch(&questions, exec, cfg.workers.max(1));
    let mut failed = 0;
    for (q, result) in questions.iter().zip(results) {
        match result {
            Ok(report) => write(
                &out.join(format!("{}.json", report.question_id())),
                &serde_json::to_string_pretty(&report)?,
            )?,
            Err(e) => {
                failed += 1;
                log::error!("{}: {} stage failed: {e}", q.id(), e.stage());
            }
        }
    }
    log::info!("{} reports written, {failed} failed", questions.len() - failed);
    if failed > 0 {
        bail!("{failed} of {} questions failed", questions.len());
    }
    Ok(())
}

fn load_annotations(paths: &[PathBuf]) -> Result<Vec<AnnotationRecord>> {
    let mut out = Vec::new();
    for p in paths {
        let recs = AnnotationRecord::parse_jsonl(&read(p)?).map_err(anyhow::Error::msg)
            .with_context(|| format!("parsing {}", p.display()))?;
        out.extend(recs);
    }
    Ok(out)
}

fn load_resolutions(path: Option<&Path>) -> Result<BTreeMap<String, Resolution>> {
    let Some(p) = path else {
        return Ok(BTreeMap::new());
    };
    let list = Resolution::parse_jsonl(&read(p)?)
        .map_err(anyhow::Error::msg)
        .with_context(|| format!("parsing {}", p.display()))?;
    let mut out = BTreeMap::new();
    for r in list {
        if out.contains_key(&r.question_id) {
            bail!("two resolutions for {}", r.question_id);
        }
        out.insert(r.question_id.clone(), r);
    }
    Ok(out)
}

/// Final values for one dual annotation. A resolution, when present, must
/// settle every discrepancy; otherwise unresolved fields are left out.
fn final_values(
    report: Option<&QuestionReport>,
    a: &AnnotationRecord,
    b: &AnnotationRecord,
    resolution: Option<&Resolution>,
) -> Result<FinalValues> {
    let record = match resolution {
        Some(r) => resolve(report, a, b, r)?,
        None => merge(a, b, None)?,
    };
    if !record.unresolved.is_empty() {
        let fields: Vec<String> = record.unresolved.iter().map(|f| f.to_string()).collect();
        log::warn!("{}: unresolved discrepancies left out: {}", a.question_id, fields.join(", "));
    }
    Ok(record.final_values())
}

fn evaluate(reports_dir: &Path, annotation_files: &[PathBuf], resolutions: Option<&Path>, out: &Path) -> Result<()> {
    let reports: Vec<QuestionReport> = read_json_dir(reports_dir)?;
    if reports.is_empty() {
        bail!("no reports in {}", reports_dir.display());
    }
    let by_id: BTreeMap<String, &QuestionReport> = reports.iter().map(|r| (r.question_id(), r)).collect();
    let variant = reports[0].rerank_mode.variant;
    if reports.iter().any(|r| r.rerank_mode.variant != variant) {
        bail!("{} mixes rerank modes; evaluate one configuration per directory", reports_dir.display());
    }
    let resolutions = load_resolutions(resolutions)?;

    let mut by_q: BTreeMap<String, Vec<AnnotationRecord>> = BTreeMap::new();
    for r in load_annotations(annotation_files)? {
        if !by_id.contains_key(&r.question_id) {
            log::warn!("{}/{}: no report for this question, skipped", r.question_id, r.annotator_id);
            continue;
        }
        by_q.entry(r.question_id.clone()).or_default().push(r);
    }
    let mut finals = Vec::new();
    let mut single = 0;
    for (qid, mut recs) in by_q {
        recs.sort_by(|x, y| x.annotator_id.cmp(&y.annotator_id));
        match recs.as_slice() {
            [one] => {
                one.validate()?;
                single += 1;
                finals.push(FinalValues::from_record(one));
            }
            [a, b] => finals.push(final_values(by_id.get(&qid).copied(), a, b, resolutions.get(&qid))?),
            more => bail!("{qid}: {} annotations, expected one or two", more.len()),
        }
    }
    let table = aggregate(&finals)?;
    let label = match variant {
        RerankVariant::Base => "Base",
        RerankVariant::Refined => "Refined",
    };
    let mut md = render_results_table(&[(label, &table)]);
    md.push_str(&format!(
        "\n{} questions annotated ({} by a single annotator) out of {} reports. PIAA pairs enter as their average.\n",
        finals.len(),
        single,
        reports.len()
    ));
    write(out, &md)
}

fn iaa(a: &Path, b: &Path, resolutions: Option<&Path>, out: &Path) -> Result<()> {
    let ra = load_annotations(&[a.to_path_buf()])?;
    let rb = load_annotations(&[b.to_path_buf()])?;
    let pairs = pair_annotations(&ra, &rb)?;
    let resolutions = load_resolutions(resolutions)?;
    let summary = iaa_summary(&pairs)?;
    let finals = pairs
        .iter()
        .map(|(x, y)| final_values(None, x, y, resolutions.get(&x.question_id)))
        .collect::<Result<Vec<_>>>()?;
    let table = aggregate(&finals)?;
    write(out, &render_validation_table(&table, &summary))
}

fn course(exams: &Path, reports_dir: &Path, id: &str, out: &Path) -> Result<()> {
    let exams = load_exams(exams)?;
    let reports: Vec<QuestionReport> = read_json_dir(reports_dir)?;
    let course = assemble_course(id, &exams, &reports)?;
    log::info!("course {id}: {} items", course.item_ids.len());
    write(out, &serde_json::to_string_pretty(&course)?)
}
