//! The `psychoprobe` command line: collect, parse, score, analyze, mixture,
//! report, and `pipeline` chaining the offline stages.

pub mod config;
pub mod error;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use psychoprobe_collector::{self as collector, Adapter, CollectorOptions, Endpoint, RetryPolicy, SessionPlan};
use psychoprobe_core::parser::{parse_transcript, ParsedRecord};
use psychoprobe_core::provenance::Provenance;
use psychoprobe_core::questionnaire::QuestionnaireBank;
use psychoprobe_core::report::{self, AnalysisReport, MixtureReport};
use psychoprobe_core::scoring::{self, CaseRecord};
use psychoprobe_core::transcript::{self, RawTranscript};
use psychoprobe_core::jsonl;
use rayon::prelude::*;
use url::Url;

pub use config::PipelineConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "psychoprobe", version, about = "Multilingual TIPI probing of language models")]
pub struct Cli {
    /// Pipeline configuration (JSON); flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: logical CPU count).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// -v for progress, -vv for debug output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Administer the questionnaire to a model endpoint (network; key from PSYCHOPROBE_API_KEY).
    Collect(CollectArgs),
    /// Extract ratings from transcripts and apply the exclusion rules.
    Parse(ParseArgs),
    /// Score valid parsed responses into a cases CSV.
    Score(ScoreArgs),
    /// Descriptives, normality, correlations, ANOVA and regression.
    Analyze(AnalyzeArgs),
    /// Gaussian mixture sweep with WAIC model selection.
    Mixture(MixtureArgs),
    /// Sample and token tables; re-renders figures from existing stats.
    Report(ReportArgs),
    /// parse, score, analyze, mixture and report in one run.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct CollectArgs {
    #[arg(long)]
    pub language: String,
    #[arg(long)]
    pub n: Option<usize>,
    /// Questionnaire bank; defaults to `<banks>/<language>.json`.
    #[arg(long)]
    pub bank: Option<PathBuf>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// `completions` or `chat`.
    #[arg(long)]
    pub adapter: Option<String>,
    #[arg(long)]
    pub interval_ms: Option<u64>,
    #[arg(long)]
    pub in_flight: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// A transcript JSONL file or a directory of them.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Bank used for every transcript.
    #[arg(long, conflicts_with = "banks")]
    pub bank: Option<PathBuf>,
    /// Directory of `<language>.json` banks.
    #[arg(long)]
    pub banks: Option<PathBuf>,
    /// Valid responses.
    #[arg(long)]
    pub out: PathBuf,
    /// Excluded responses; defaults to `<out>` with a `.rejects.jsonl` suffix.
    #[arg(long)]
    pub rejects: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Bank providing the item-to-factor keying (default: built-in English).
    #[arg(long)]
    pub bank: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub cases: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub mc_draws: Option<usize>,
    /// `scott`, `silverman` or a number.
    #[arg(long)]
    pub bandwidth: Option<String>,
    /// Reference language of the regression.
    #[arg(long)]
    pub base: Option<String>,
}

#[derive(Debug, Args)]
pub struct MixtureArgs {
    #[arg(long)]
    pub cases: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Start component means at data quantiles instead of the fixed 2, 4, 6.
    #[arg(long)]
    pub recentre: bool,
    /// Fit factor scores only.
    #[arg(long)]
    pub no_distances: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub transcripts: Option<PathBuf>,
    /// Parsed (valid) responses, as written by `parse`.
    #[arg(long)]
    pub parsed: Option<PathBuf>,
    #[arg(long)]
    pub banks: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub transcripts: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub banks: Option<PathBuf>,
    #[arg(long)]
    pub skip_mixture: bool,
    /// Collect fresh transcripts for every configured language first (network).
    #[arg(long)]
    pub collect: bool,
    #[arg(long, requires = "collect")]
    pub endpoint: Option<String>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    apply_overrides(&mut cfg, &cli.command);
    cfg.validate()?;
    if let Some(n) = cfg.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::debug!("worker pool already initialised: {e}");
        }
    }
    match cli.command {
        Command::Collect(a) => collect(&cfg, &a),
        Command::Parse(a) => {
            let banks = BankSource::new(a.bank.as_deref(), a.banks.as_deref().unwrap_or(&cfg.paths.banks))?;
            let rejects = a.rejects.clone().unwrap_or_else(|| rejects_path(&a.out));
            parse(&cfg, &a.input, &banks, &a.out, &rejects).map(|_| ())
        }
        Command::Score(a) => {
            let structure = match &a.bank {
                Some(p) => QuestionnaireBank::from_path(p)?,
                None => QuestionnaireBank::english(),
            };
            let input = a.input.as_deref().unwrap_or(&cfg.paths.parsed);
            let out = a.out.as_deref().unwrap_or(&cfg.paths.cases);
            score(&cfg, input, &structure, out).map(|_| ())
        }
        Command::Analyze(a) => {
            let cases = scoring::read_csv(a.cases.as_deref().unwrap_or(&cfg.paths.cases))?;
            analyze(&cfg, &cases, a.out.as_deref().unwrap_or(&cfg.paths.report)).map(|_| ())
        }
        Command::Mixture(a) => {
            let cases = scoring::read_csv(a.cases.as_deref().unwrap_or(&cfg.paths.cases))?;
            mixture(&cfg, &cases, a.out.as_deref().unwrap_or(&cfg.paths.report))
        }
        Command::Report(a) => report_cmd(&cfg, &a),
        Command::Pipeline(a) => pipeline(&cfg, &a),
    }
}

fn apply_overrides(cfg: &mut PipelineConfig, command: &Command) {
    match command {
        Command::Collect(a) => {
            if let Some(n) = a.n {
                cfg.collection.n_requests = n;
            }
            if let Some(e) = &a.endpoint {
                cfg.collection.endpoint = Some(e.clone());
            }
            if let Some(ad) = &a.adapter {
                cfg.collection.adapter = ad.clone();
            }
            if let Some(ms) = a.interval_ms {
                cfg.collection.min_interval_ms = ms;
            }
            if let Some(k) = a.in_flight {
                cfg.collection.max_in_flight = k;
            }
        }
        Command::Analyze(a) => {
            let s = &mut cfg.statistics;
            if let Some(v) = a.alpha {
                s.alpha = v;
            }
            if let Some(v) = a.mc_draws {
                s.mc_draws = v;
            }
            if let Some(v) = &a.bandwidth {
                s.bandwidth = v.clone();
            }
            if let Some(v) = &a.base {
                s.base_language = v.clone();
            }
        }
        Command::Mixture(a) => {
            let m = &mut cfg.mixture;
            if let Some(v) = a.chains {
                m.chains = v;
            }
            if let Some(v) = a.draws {
                m.draws = v;
            }
            if let Some(v) = a.warmup {
                m.warmup = v;
            }
            m.recentre_init |= a.recentre;
            if a.no_distances {
                m.distances = false;
            }
        }
        Command::Pipeline(a) => {
            if let Some(e) = &a.endpoint {
                cfg.collection.endpoint = Some(e.clone());
            }
        }
        Command::Parse(_) | Command::Score(_) | Command::Report(_) => {}
    }
}

/// Per-language banks from a directory, or one bank for everything.
struct BankSource {
    fixed: Option<QuestionnaireBank>,
    dir: PathBuf,
}

impl BankSource {
    fn new(file: Option<&Path>, dir: &Path) -> Result<Self, CliError> {
        let fixed = file.map(QuestionnaireBank::from_path).transpose()?;
        Ok(BankSource {
            fixed,
            dir: dir.to_path_buf(),
        })
    }

    fn get(&self, language: &str) -> Result<QuestionnaireBank, CliError> {
        if let Some(b) = &self.fixed {
            return Ok(b.clone());
        }
        let path = self.dir.join(format!("{language}.json"));
        if path.is_file() {
            return Ok(QuestionnaireBank::from_path(&path)?);
        }
        if language != "en" {
            log::warn!("no bank at {}; using the built-in English bank for {language}", path.display());
        }
        Ok(QuestionnaireBank::english())
    }

    fn load_all(&self, languages: &BTreeSet<String>) -> Result<BTreeMap<String, QuestionnaireBank>, CliError> {
        languages.iter().map(|l| Ok((l.clone(), self.get(l)?))).collect()
    }
}

fn rejects_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.rejects.jsonl"))
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".provenance.json");
    path.with_file_name(name)
}

/// JSONL files cannot carry a header, so their provenance goes next to them.
fn write_with_sidecar<T: serde::Serialize>(records: &[T], path: &Path, prov: &Provenance) -> Result<(), CliError> {
    jsonl::write(records, path)?;
    let side = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(prov).expect("provenance serializes");
    text.push('\n');
    std::fs::write(&side, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", side.display())))
}

/// Transcripts from one JSONL file or every `*.jsonl` in a directory, in file-name order.
fn load_transcripts(path: &Path) -> Result<Vec<RawTranscript>, CliError> {
    if !path.is_dir() {
        return Ok(transcript::load(path)?);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| CliError::Io(format!("cannot list {}: {e}", path.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Validation(format!("no .jsonl transcripts in {}", path.display())));
    }
    let mut all = Vec::new();
    for f in files {
        all.extend(transcript::load(&f)?);
    }
    Ok(all)
}

fn collect(cfg: &PipelineConfig, a: &CollectArgs) -> Result<(), CliError> {
    let bank = match &a.bank {
        Some(p) => QuestionnaireBank::from_path(p)?,
        None => BankSource::new(None, &cfg.paths.banks)?.get(&a.language)?,
    };
    let transcripts = collect_language(cfg, &a.language, &bank)?;
    write_with_sidecar(&transcripts, &a.out, &cfg.provenance())?;
    println!("{} transcripts written to {}", transcripts.len(), a.out.display());
    Ok(())
}

fn collect_language(cfg: &PipelineConfig, language: &str, bank: &QuestionnaireBank) -> Result<Vec<RawTranscript>, CliError> {
    let c = &cfg.collection;
    let url = c
        .endpoint
        .as_deref()
        .ok_or_else(|| CliError::Validation("collect needs an endpoint (--endpoint or collection.endpoint)".into()))?;
    let url = Url::parse(url).map_err(|e| CliError::Validation(format!("invalid endpoint {url:?}: {e}")))?;
    let adapter = Adapter::from_name(&c.adapter)
        .ok_or_else(|| CliError::Validation(format!("unknown adapter {:?}; use completions or chat", c.adapter)))?;
    let endpoint = Endpoint::from_env(url);
    if !endpoint.has_credential() {
        log::warn!("{} is not set; sending requests without credentials", collector::API_KEY_VAR);
    }
    let options = CollectorOptions {
        min_interval: Duration::from_millis(c.min_interval_ms),
        max_in_flight: c.max_in_flight.max(1),
        retry: RetryPolicy {
            max_retries: c.max_retries,
            base_delay: Duration::from_millis(c.base_delay_ms),
            max_delay: Duration::from_millis(c.max_delay_ms),
        },
        adapter,
        ..CollectorOptions::default()
    };
    let plan = SessionPlan::new(language, c.n_requests, cfg.seed)?;
    let collection = collector::administer_blocking(&plan, bank, &cfg.sampling, &endpoint, &options)?;
    Ok(collection.transcripts)
}

fn parse(
    cfg: &PipelineConfig,
    input: &Path,
    banks: &BankSource,
    out: &Path,
    rejects: &Path,
) -> Result<(Vec<RawTranscript>, Vec<ParsedRecord>), CliError> {
    let transcripts = load_transcripts(input)?;
    let languages: BTreeSet<String> = transcripts.iter().map(|t| t.language.clone()).collect();
    let bank_map = banks.load_all(&languages)?;
    let records: Vec<ParsedRecord> = transcripts
        .par_iter()
        .map(|t| parse_transcript(t, &bank_map[&t.language]))
        .collect();
    let (valid, invalid): (Vec<ParsedRecord>, Vec<ParsedRecord>) = records.into_iter().partition(|r| r.verdict.valid);
    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    for r in &invalid {
        *reasons.entry(format!("{:?}", r.verdict.reason)).or_default() += 1;
    }
    for (reason, n) in &reasons {
        log::info!("excluded {n} as {reason}");
    }
    let prov = cfg.provenance();
    write_with_sidecar(&valid, out, &prov)?;
    write_with_sidecar(&invalid, rejects, &prov)?;
    println!(
        "{} transcripts: {} valid, {} excluded ({})",
        transcripts.len(),
        valid.len(),
        invalid.len(),
        rejects.display()
    );
    Ok((transcripts, valid))
}

fn score_records(records: &[ParsedRecord], structure: &QuestionnaireBank) -> Result<Vec<CaseRecord>, CliError> {
    let cases: Vec<CaseRecord> = records
        .iter()
        .filter_map(|r| match scoring::score_case(&r.response, structure, &r.language, r.source_id) {
            Ok(c) => Some(c),
            Err(e) => {
                log::info!("{} not scored: {e}", r.source_id);
                None
            }
        })
        .collect();
    if cases.is_empty() {
        return Err(CliError::Validation("no valid cases".into()));
    }
    Ok(cases)
}

fn score(cfg: &PipelineConfig, input: &Path, structure: &QuestionnaireBank, out: &Path) -> Result<Vec<CaseRecord>, CliError> {
    let records: Vec<ParsedRecord> = jsonl::read(input)?;
    let cases = score_records(&records, structure)?;
    write_cases(cfg, &cases, out)?;
    println!("{} cases written to {}", cases.len(), out.display());
    Ok(cases)
}

fn write_cases(cfg: &PipelineConfig, cases: &[CaseRecord], out: &Path) -> Result<(), CliError> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    scoring::write_csv_with_comment(cases, &cfg.provenance().csv_comment(), out)?;
    Ok(())
}

fn analyze(cfg: &PipelineConfig, cases: &[CaseRecord], out: &Path) -> Result<AnalysisReport, CliError> {
    let report = report::analyze(cases, &cfg.analysis_options()?)?;
    let files = report::emit_analysis(&report, &cfg.provenance(), out)?;
    println!("analysis of {} cases: {} files in {}", cases.len(), files.len(), out.display());
    Ok(report)
}

fn mixture(cfg: &PipelineConfig, cases: &[CaseRecord], out: &Path) -> Result<(), CliError> {
    if cases.is_empty() {
        return Err(CliError::Validation("no valid cases".into()));
    }
    let report = report::mixture_sweep(cases, &cfg.mixture_options());
    for c in &report.classification {
        println!(
            "{}: best K = 1/2/3 in {}/{}/{} series, {} unresolved",
            c.kind, c.best_k[0], c.best_k[1], c.best_k[2], c.unresolved
        );
    }
    let files = report::emit_mixture(&report, &cfg.provenance(), out)?;
    println!("mixture sweep: {} series, {} files in {}", report.series.len(), files.len(), out.display());
    Ok(())
}

fn text_tables(
    cfg: &PipelineConfig,
    transcripts: &[RawTranscript],
    parsed: &[ParsedRecord],
    banks: &BankSource,
    out: &Path,
) -> Result<usize, CliError> {
    let prov = cfg.provenance();
    let languages: BTreeSet<String> = transcripts.iter().map(|t| t.language.clone()).collect();
    let languages: Vec<String> = languages.into_iter().collect();
    report::emit_sample_table(&languages, transcripts, parsed, &prov, out)?;
    let present: BTreeSet<String> = parsed.iter().map(|p| p.language.clone()).collect();
    let bank_map = banks.load_all(&present)?;
    let files = report::emit_token_tables(
        parsed,
        &QuestionnaireBank::english(),
        &bank_map,
        cfg.statistics.overlap_top_n,
        &prov,
        out,
    )?;
    Ok(files.len() + 1)
}

fn report_cmd(cfg: &PipelineConfig, a: &ReportArgs) -> Result<(), CliError> {
    let out = a.out.as_deref().unwrap_or(&cfg.paths.report);
    let mut written = 0;
    let analysis = out.join("stats").join("analysis.json");
    if analysis.is_file() {
        let doc = report::read_json::<AnalysisReport>(&analysis)?;
        written += report::emit_figures(&doc.data, &doc.provenance, out)?.len();
    }
    let mix = out.join("stats").join("mixture.json");
    if mix.is_file() {
        let doc = report::read_json::<MixtureReport>(&mix)?;
        written += report::emit_mixture_figures(&doc.data, &doc.provenance, out)?.len();
    }
    match (&a.transcripts, &a.parsed) {
        (Some(t), Some(p)) => {
            let transcripts = load_transcripts(t)?;
            let parsed: Vec<ParsedRecord> = jsonl::read(p)?;
            let banks = BankSource::new(None, a.banks.as_deref().unwrap_or(&cfg.paths.banks))?;
            written += text_tables(cfg, &transcripts, &parsed, &banks, out)?;
        }
        (None, None) => {}
        _ => return Err(CliError::Validation("--transcripts and --parsed go together".into())),
    }
    if written == 0 {
        return Err(CliError::Validation(format!(
            "nothing to report in {}: run analyze first or pass --transcripts and --parsed",
            out.display()
        )));
    }
    println!("{written} report files in {}", out.display());
    Ok(())
}

fn pipeline(cfg: &PipelineConfig, a: &PipelineArgs) -> Result<(), CliError> {
    let transcripts_dir = a.transcripts.as_deref().unwrap_or(&cfg.paths.transcripts);
    let out = a.out.as_deref().unwrap_or(&cfg.paths.report);
    let banks = BankSource::new(None, a.banks.as_deref().unwrap_or(&cfg.paths.banks))?;
    if a.collect {
        let prov = cfg.provenance();
        for language in &cfg.languages {
            let transcripts = collect_language(cfg, language, &banks.get(language)?)?;
            write_with_sidecar(&transcripts, &transcripts_dir.join(format!("{language}.jsonl")), &prov)?;
        }
    } else if !transcripts_dir.exists() {
        return Err(CliError::Io(format!(
            "transcripts not found at {}; pass --transcripts (collection runs only with --collect)",
            transcripts_dir.display()
        )));
    }
    let data = out.join("data");
    let parsed_path = data.join("parsed.jsonl");
    let (transcripts, parsed) = parse(cfg, transcripts_dir, &banks, &parsed_path, &data.join("parsed.rejects.jsonl"))?;
    let cases = score_records(&parsed, &QuestionnaireBank::english())?;
    write_cases(cfg, &cases, &data.join("cases.csv"))?;
    println!("{} cases scored", cases.len());
    analyze(cfg, &cases, out)?;
    if !a.skip_mixture {
        mixture(cfg, &cases, out)?;
    }
    text_tables(cfg, &transcripts, &parsed, &banks, out)?;
    Ok(())
}
