//! Command-line front end. Every stage reads the files written by earlier
//! stages under the output directory and writes only its own outputs.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{ConfigError, WorkbenchConfig};
use crate::evaluation::{self, GatingMode};
use crate::harvest::{self, graph, report, AuditPolicy, HarvestPolicy, PageRankParams};
use crate::responses::{self, ColumnMap, SurveyId};
use crate::robustness::{self, Embedder, HashingEmbedder, OllamaEmbedder};
use crate::topics::mock::KeywordLlm;
use crate::topics::{run_pipeline, LlmClient, OllamaClient, RunArchive};
use crate::transport::{HttpTransport, RecordingTransport, ReplayTransport, Transport};

pub const DEFAULT_CONFIG: &str = "linkstudy.toml";
pub const DEFAULT_UI_BUNDLE: &str = "eval_form_ui/dist/eval-form.js";

#[derive(Debug, Parser)]
#[command(name = "linkstudy", version, about = "Registry link audit, survey topic modeling and topic evaluation workbench")]
pub struct Cli {
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Config file (defaults to ./linkstudy.toml when present).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Serve registry requests from recorded fixtures.
    #[arg(long, global = true, value_name = "DIR", conflicts_with = "record")]
    pub replay: Option<PathBuf>,
    /// Record registry responses as fixtures while fetching.
    #[arg(long, global = true, value_name = "DIR")]
    pub record: Option<PathBuf>,
    /// Seed for sampling and model requests; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated top-percentile cut-offs for `report`.
    #[arg(long, global = true, value_delimiter = ',', value_name = "P,...")]
    pub percentiles: Option<Vec<f64>>,
    /// Parallel registry requests.
    #[arg(long, global = true, value_name = "N")]
    pub concurrency: Option<usize>,
    /// Offline mode for model-backed stages: keyword heuristic instead of the
    /// LLM server, hashing embedder instead of the embedding endpoint.
    #[arg(long, global = true)]
    pub mock: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch the package index, metadata and FUNDING.yml manifests.
    Harvest {
        /// Skip FUNDING.yml retrieval.
        #[arg(long)]
        no_funding: bool,
    },
    /// Check liveness of every harvested link.
    Audit,
    /// Build the dependency graph and compute PageRank.
    Rank {
        #[arg(long, default_value_t = 0.85)]
        damping: f64,
        #[arg(long, default_value_t = 1e-10)]
        epsilon: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
    },
    /// Summarize link coverage, link rot and donation platforms.
    Report,
    /// Draw a seeded sample of maintainer contact addresses.
    Sample {
        #[arg(short, long)]
        n: usize,
    },
    /// Load survey answers from CSV and normalize placeholders.
    Ingest {
        /// Ingest this file instead of the configured ones.
        #[arg(long, requires = "survey")]
        csv: Option<PathBuf>,
        #[arg(long)]
        survey: Option<SurveyId>,
    },
    /// Run the topic-modeling pipeline and archive each run.
    Model {
        #[arg(long)]
        survey: SurveyId,
        #[arg(long, default_value_t = 1)]
        runs: usize,
    },
    /// Compare topics across archived runs.
    Robustness {
        #[arg(long)]
        survey: SurveyId,
        #[arg(long, value_name = "ID")]
        embed_model: Option<String>,
    },
    /// Generate the offline rating form for one archived run.
    Evalform {
        #[arg(long, value_name = "RUN_ID")]
        run: String,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Compiled form UI script.
        #[arg(long, value_name = "FILE")]
        ui_bundle: Option<PathBuf>,
    },
    /// Aggregate rater exports into quality proportions and agreement.
    Evalreport {
        #[arg(long, value_name = "DIR")]
        ratings: PathBuf,
        /// Form the ratings answer; located through the run archive if omitted.
        #[arg(long, value_name = "FILE")]
        form: Option<PathBuf>,
        /// Count answers hidden by gating as "no" in the agreement statistics.
        #[arg(long)]
        treat_gated_as_no: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Harvest { .. } => "harvest",
            Command::Audit => "audit",
            Command::Rank { .. } => "rank",
            Command::Report => "report",
            Command::Sample { .. } => "sample",
            Command::Ingest { .. } => "ingest",
            Command::Model { .. } => "model",
            Command::Robustness { .. } => "robustness",
            Command::Evalform { .. } => "evalform",
            Command::Evalreport { .. } => "evalreport",
        }
    }
}

/// Locations of stage outputs under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn packages(&self) -> PathBuf {
        self.root.join("snapshot/packages.jsonl")
    }
    pub fn links(&self) -> PathBuf {
        self.root.join("snapshot/links.jsonl")
    }
    pub fn harvest_stats(&self) -> PathBuf {
        self.root.join("snapshot/harvest_stats.json")
    }
    pub fn audited_links(&self) -> PathBuf {
        self.root.join("snapshot/links.audited.jsonl")
    }
    pub fn audit_stats(&self) -> PathBuf {
        self.root.join("snapshot/audit_stats.json")
    }
    pub fn pagerank(&self) -> PathBuf {
        self.root.join("rank/pagerank.json")
    }
    pub fn ecosystem_report(&self, ext: &str) -> PathBuf {
        self.root.join(format!("report/ecosystem.{ext}"))
    }
    pub fn participants(&self) -> PathBuf {
        self.root.join("sample/participants.txt")
    }
    pub fn responses(&self) -> PathBuf {
        self.root.join("responses/responses.jsonl")
    }
    pub fn response_stats(&self, ext: &str) -> PathBuf {
        self.root.join(format!("responses/stats.{ext}"))
    }
    pub fn runs(&self) -> PathBuf {
        self.root.join("runs")
    }
    pub fn robustness(&self, survey: SurveyId, ext: &str) -> PathBuf {
        self.root.join(format!("reports/robustness-{survey}.{ext}"))
    }
    pub fn quality(&self, survey: SurveyId, ext: &str) -> PathBuf {
        self.root.join(format!("reports/quality-{survey}.{ext}"))
    }
}

struct Stage {
    config: WorkbenchConfig,
    layout: Layout,
    mock: bool,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, &text)
}

fn require(path: &Path, stage: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        bail!("{} not found; run `linkstudy {stage}` first", path.display())
    }
}

fn load_config(cli: &Cli) -> Result<WorkbenchConfig> {
    let g = &cli.global;
    let mut config = match &g.config {
        Some(path) => WorkbenchConfig::load(path)?,
        None if Path::new(DEFAULT_CONFIG).is_file() => WorkbenchConfig::load(Path::new(DEFAULT_CONFIG))?,
        None => {
            let mut c = WorkbenchConfig::default();
            c.apply_env(std::env::var(crate::config::LLM_URL_ENV).ok());
            c
        }
    };
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    if let Some(dir) = &g.replay {
        config.registry.replay_dir = Some(dir.clone());
        config.registry.record_dir = None;
    }
    if let Some(dir) = &g.record {
        config.registry.record_dir = Some(dir.clone());
        config.registry.replay_dir = None;
    }
    if let Some(seed) = g.seed {
        config.seed = Some(seed);
    }
    if let Some(p) = &g.percentiles {
        config.registry.percentiles = p.clone();
    }
    if let Some(n) = g.concurrency {
        config.registry.concurrency = n;
    }
    config.validate()?;
    Ok(config)
}

fn transport(config: &WorkbenchConfig) -> Result<Box<dyn Transport>> {
    let r = &config.registry;
    if let Some(dir) = &r.replay_dir {
        let t = ReplayTransport::from_dir(dir)?;
        log::info!("replaying {} recorded responses from {}", t.len(), dir.display());
        return Ok(Box::new(t));
    }
    let http = HttpTransport::new(
        Duration::from_secs(r.timeout_secs),
        Duration::from_millis(r.min_host_interval_ms),
    )?;
    Ok(match &r.record_dir {
        Some(dir) => Box::new(RecordingTransport::new(http, dir)?),
        None => Box::new(http),
    })
}

fn cmd_harvest(ctx: &Stage, no_funding: bool) -> Result<()> {
    let r = &ctx.config.registry;
    let t = transport(&ctx.config)?;
    let policy = HarvestPolicy {
        concurrency: r.concurrency,
        retry: r.retry_policy(),
        max_redirects: r.max_redirects,
        funding_branches: r.funding_branches.clone(),
        fetch_funding: r.fetch_funding && !no_funding,
    };
    let snapshot = harvest::harvest(&*t, &r.base_url, &policy)?;
    harvest::write_packages(&ctx.layout.packages(), &snapshot.packages)?;
    harvest::write_links(&ctx.layout.links(), &snapshot.links)?;
    write_json(&ctx.layout.harvest_stats(), &snapshot.stats)?;
    let s = &snapshot.stats;
    println!(
        "harvested {} packages ({} ok, {} absent, {} malformed, {} failed), {} links, {} FUNDING.yml manifests",
        s.index_count, s.ok, s.absent, s.malformed, s.fetch_failed, snapshot.links.len(), s.funding_manifests_found
    );
    Ok(())
}

fn cmd_audit(ctx: &Stage) -> Result<()> {
    require(&ctx.layout.links(), "harvest")?;
    let links = harvest::read_links(&ctx.layout.links())?;
    let r = &ctx.config.registry;
    let t = transport(&ctx.config)?;
    let policy = AuditPolicy {
        concurrency: r.concurrency,
        timeout: Duration::from_secs(r.timeout_secs),
        retry: r.retry_policy(),
        max_redirects: r.max_redirects,
    };
    let (audited, stats) = harvest::audit_liveness(&*t, &links, &policy);
    harvest::write_links(&ctx.layout.audited_links(), &audited)?;
    write_json(&ctx.layout.audit_stats(), &stats)?;
    println!(
        "audited {} links: {} reachable, {} not found, {} unreachable",
        audited.len(),
        stats.reachable,
        stats.not_found,
        stats.unreachable
    );
    Ok(())
}

#[derive(Serialize, serde::Deserialize)]
struct RankOutput {
    params: PageRankParams,
    iterations: usize,
    converged: bool,
    final_delta: f64,
    graph: graph::DependencyGraph,
}

fn compute_rank(packages: &[harvest::PackageRecord], params: PageRankParams) -> Result<RankOutput> {
    let mut g = harvest::build_dependency_graph(packages);
    let outcome = harvest::pagerank(&g, params)?;
    if !outcome.converged {
        log::warn!(
            "PageRank stopped after {} iterations without converging (delta {:e})",
            outcome.iterations,
            outcome.final_delta
        );
    }
    g.pagerank = outcome.scores;
    Ok(RankOutput {
        params,
        iterations: outcome.iterations,
        converged: outcome.converged,
        final_delta: outcome.final_delta,
        graph: g,
    })
}

fn cmd_rank(ctx: &Stage, params: PageRankParams) -> Result<()> {
    require(&ctx.layout.packages(), "harvest")?;
    let packages = harvest::read_packages(&ctx.layout.packages())?;
    let out = compute_rank(&packages, params)?;
    write_json(&ctx.layout.pagerank(), &out)?;
    println!(
        "ranked {} nodes ({} stubs, {} edges) in {} iterations",
        out.graph.nodes.len(),
        out.graph.stubs.len(),
        out.graph.edges.len(),
        out.iterations
    );
    for (name, score) in graph::ranking(&out.graph.pagerank).into_iter().take(10) {
        println!("  {score:.6}  {name}");
    }
    Ok(())
}

fn cmd_report(ctx: &Stage) -> Result<()> {
    let l = &ctx.layout;
    require(&l.packages(), "harvest")?;
    let packages = harvest::read_packages(&l.packages())?;
    let links = if l.audited_links().exists() {
        harvest::read_links(&l.audited_links())?
    } else {
        require(&l.links(), "harvest")?;
        log::warn!("links have not been audited; link-rot shares will be absent");
        harvest::read_links(&l.links())?
    };
    let scores = if l.pagerank().exists() {
        let text = std::fs::read_to_string(l.pagerank())?;
        let rank: RankOutput = serde_json::from_str(&text).context("reading PageRank output")?;
        rank.graph.pagerank
    } else {
        compute_rank(&packages, PageRankParams::default())?.graph.pagerank
    };
    let rep = harvest::ecosystem_report(&packages, &links, &scores, &ctx.config.registry.percentiles);
    let text = report::render_text(&rep);
    write_json(&l.ecosystem_report("json"), &rep)?;
    write_file(&l.ecosystem_report("txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_sample(ctx: &Stage, n: usize) -> Result<()> {
    let seed = ctx.config.require_seed()?;
    require(&ctx.layout.packages(), "harvest")?;
    let packages = harvest::read_packages(&ctx.layout.packages())?;
    let sample = harvest::sample_participants(&packages, n, seed)?;
    let mut text = sample.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    write_file(&ctx.layout.participants(), &text)?;
    println!("sampled {} addresses with seed {seed} into {}", sample.len(), ctx.layout.participants().display());
    Ok(())
}

#[derive(Serialize)]
struct IngestSummary {
    files: Vec<(String, SurveyId, responses::IngestStats)>,
    questions: Vec<responses::QuestionStats>,
}

fn cmd_ingest(ctx: &Stage, csv: Option<PathBuf>, survey: Option<SurveyId>) -> Result<()> {
    let files: Vec<(PathBuf, SurveyId)> = match (csv, survey) {
        (Some(path), Some(s)) => vec![(path, s)],
        _ => ctx.config.responses.iter().map(|f| (f.csv.clone(), f.survey)).collect(),
    };
    if files.is_empty() {
        return Err(ConfigError::Invalid {
            field: "responses".into(),
            message: "no response files configured; add [[responses]] or pass --csv and --survey".into(),
        }
        .into());
    }
    let denylist = ctx.config.denylist();
    let mut all = Vec::new();
    let mut summary = IngestSummary { files: Vec::new(), questions: Vec::new() };
    for (path, survey) in files {
        let columns = ctx
            .config
            .questions
            .iter()
            .filter(|q| q.survey == survey)
            .map(|q| (q.id.clone(), q.column.clone().unwrap_or_else(|| q.id.clone())))
            .collect::<std::collections::BTreeMap<_, _>>();
        if columns.is_empty() {
            return Err(ConfigError::Invalid {
                field: "questions".into(),
                message: format!("no questions configured for survey {survey}"),
            }
            .into());
        }
        let map = ColumnMap { survey_id: survey, columns };
        let (rs, stats) = responses::ingest_csv(&path, &map, &denylist)?;
        if stats.malformed_rows > 0 {
            eprintln!("warning: {}: skipped {} malformed rows", path.display(), stats.malformed_rows);
        }
        summary.files.push((path.display().to_string(), survey, stats));
        all.extend(rs);
    }
    summary.questions = responses::question_stats(&all);
    responses::write_store(&ctx.layout.responses(), &all)?;
    let text = responses::render_stats(&summary.questions);
    write_json(&ctx.layout.response_stats("json"), &summary)?;
    write_file(&ctx.layout.response_stats("txt"), &text)?;
    println!("ingested {} responses", all.len());
    print!("{text}");
    Ok(())
}

fn llm_client(ctx: &Stage) -> Result<Box<dyn LlmClient>> {
    if ctx.mock || ctx.config.llm.mock {
        return Ok(Box::new(KeywordLlm::default()));
    }
    Ok(Box::new(OllamaClient::new(
        &ctx.config.llm.base_url,
        Duration::from_secs(ctx.config.llm.timeout_secs),
    )?))
}

fn cmd_model(ctx: &Stage, survey: SurveyId, runs: usize) -> Result<()> {
    let engine = ctx.config.engine_config()?;
    require(&ctx.layout.responses(), "ingest")?;
    let responses: Vec<_> = responses::read_store(&ctx.layout.responses())?
        .into_iter()
        .filter(|r| r.survey_id == survey)
        .collect();
    let questions = ctx.config.questions_for(survey);
    if questions.is_empty() {
        return Err(ConfigError::Invalid {
            field: "questions".into(),
            message: format!("no questions configured for survey {survey}"),
        }
        .into());
    }
    let client = llm_client(ctx)?;
    let archive = RunArchive::new(ctx.layout.runs());
    let mut incomplete = Vec::new();
    for i in 1..=runs {
        let record = run_pipeline(&*client, survey, &responses, &questions, &engine);
        let path = archive.append(&record)?;
        let topics: usize = record.questions.iter().map(|q| q.merged.topics.len()).sum();
        println!("run {i}/{runs}: {} ({} topics) -> {}", record.run_id, topics, path.display());
        for q in record.questions.iter().filter(|q| !q.is_completed()) {
            incomplete.push(format!("{}/{}", record.run_id, q.question_id));
        }
    }
    if !incomplete.is_empty() {
        bail!("runs archived with failed questions: {}", incomplete.join(", "));
    }
    Ok(())
}

fn embedder(ctx: &Stage, model: Option<String>) -> Result<Box<dyn Embedder>> {
    if ctx.mock || ctx.config.embedding.mock {
        return Ok(Box::new(HashingEmbedder::default()));
    }
    let model = model.unwrap_or_else(|| ctx.config.embedding.model.clone());
    Ok(Box::new(OllamaEmbedder::new(
        ctx.config.embedding_base_url(),
        &model,
        Duration::from_secs(ctx.config.llm.timeout_secs),
    )?))
}

fn cmd_robustness(ctx: &Stage, survey: SurveyId, embed_model: Option<String>) -> Result<()> {
    let runs = RunArchive::new(ctx.layout.runs()).for_survey(survey)?;
    let e = embedder(ctx, embed_model)?;
    let rep = robustness::robustness_report(&runs, survey, &*e)?;
    let text = robustness::render_text(&rep);
    write_json(&ctx.layout.robustness(survey, "json"), &rep)?;
    write_file(&ctx.layout.robustness(survey, "txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_evalform(ctx: &Stage, run_id: &str, out: &Path, ui_bundle: Option<PathBuf>) -> Result<()> {
    let run = RunArchive::new(ctx.layout.runs()).load(run_id)?;
    let bundle_path = ui_bundle
        .or_else(|| ctx.config.evaluation.ui_bundle.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_UI_BUNDLE));
    let bundle = evaluation::load_ui_bundle(&bundle_path)?;
    let form = evaluation::generate_form(&run, &bundle)?;
    write_file(out, &form.html)?;
    println!(
        "wrote {} ({} topics, form {})",
        out.display(),
        form.payload.topic_count(),
        form.payload.form_hash
    );
    Ok(())
}

fn find_form(ctx: &Stage, hash: &str) -> Result<evaluation::FormPayload> {
    for run in RunArchive::new(ctx.layout.runs()).load_all()? {
        if let Ok(payload) = evaluation::build_payload(&run) {
            if payload.form_hash == hash {
                log::info!("ratings answer the form of run {}", run.run_id);
                return Ok(payload);
            }
        }
    }
    bail!("no archived run produces form {hash}; pass --form with the generated HTML")
}

fn cmd_evalreport(ctx: &Stage, ratings: &Path, form: Option<PathBuf>, treat_as_no: bool) -> Result<()> {
    let loaded = evaluation::load_bundles(ratings)?;
    if loaded.is_empty() {
        bail!("no rating bundles (*.json) in {}", ratings.display());
    }
    let payload = match form {
        Some(path) => {
            let html = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            evaluation::extract_payload(&html)?
        }
        None => {
            let hashes = evaluation::ratings::form_hashes(&loaded);
            match hashes.len() {
                0 => bail!("none of the files in {} is a rating bundle", ratings.display()),
                1 => find_form(ctx, hashes.keys().next().expect("one hash"))?,
                _ => return Err(evaluation::QualityError::MixedForms(hashes.into_keys().collect()).into()),
            }
        }
    };
    let mode = if treat_as_no { GatingMode::TreatAsNo } else { GatingMode::Missing };
    let rep = evaluation::aggregate_loaded(&loaded, &payload, mode)?;
    for r in &rep.rejected {
        eprintln!("warning: rejected {}: {}", r.source, r.diagnostics.join("; "));
    }
    let text = evaluation::quality::render_text(&rep);
    write_json(&ctx.layout.quality(rep.survey_id, "json"), &rep)?;
    write_file(&ctx.layout.quality(rep.survey_id, "txt"), &text)?;
    print!("{text}");
    Ok(())
}

/// Runs a parsed command.
pub fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli)?;
    let ctx = Stage {
        layout: Layout { root: config.out_dir.clone() },
        mock: cli.global.mock,
        config,
    };
    let started = Instant::now();
    match cli.command {
        Command::Harvest { no_funding } => cmd_harvest(&ctx, no_funding),
        Command::Audit => cmd_audit(&ctx),
        Command::Rank { damping, epsilon, max_iter } => {
            cmd_rank(&ctx, PageRankParams { damping, epsilon, max_iter })
        }
        Command::Report => cmd_report(&ctx),
        Command::Sample { n } => cmd_sample(&ctx, n),
        Command::Ingest { csv, survey } => cmd_ingest(&ctx, csv, survey),
        Command::Model { survey, runs } => cmd_model(&ctx, survey, runs),
        Command::Robustness { survey, embed_model } => cmd_robustness(&ctx, survey, embed_model),
        Command::Evalform { run, out, ui_bundle } => cmd_evalform(&ctx, &run, &out, ui_bundle),
        Command::Evalreport { ratings, form, treat_gated_as_no } => {
            cmd_evalreport(&ctx, &ratings, form, treat_gated_as_no)
        }
    }?;
    log::info!("done in {:.2?}", started.elapsed());
    Ok(())
}

/// One-line JSON description of a failure.
pub fn error_json(command: &str, err: &anyhow::Error) -> serde_json::Value {
    let mut value = serde_json::json!({
        "error": format!("{err:#}"),
        "command": command,
    });
    if let Some(ConfigError::Invalid { field, .. }) = err.downcast_ref::<ConfigError>() {
        value["field"] = serde_json::json!(field);
    }
    value
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("LINKSTUDY_LOG")
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 on success, 2 for usage errors, 1 for failures.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.global.verbose);
    let command = cli.command.name();
    match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            let line = error_json(command, &err);
            let mut stderr = std::io::stderr().lock();
            let _ = writeln!(stderr, "{line}");
            1
        }
    }
}
