//! `ragbench`: build indices, analyze corpora, run experiments and render
//! reports.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tracing::info;
use tracing_subscriber::EnvFilter;

use ragbench_core::corpus::{chunk_corpus, generate_random_words, Corpus, DEFAULT_CHUNK_SIZE, DEFAULT_RANDOM_WORD_LENGTH};
use ragbench_core::experiment::{build_condition_index, CorpusSource, ExperimentConfig, FixedClock, Runner};
use ragbench_core::extract::{parse_regression_corpus, run_regression, RuleSet, DEFAULT_REGRESSION_CORPUS};
use ragbench_core::relevance::{render_relevance_csv, RelevanceReport, TermSet, WordVectorTable};
use ragbench_core::report::report_experiment;
use ragbench_core::sparse::{ChunkIndex, DEFAULT_TOP_K};
use ragbench_core::stats::DEFAULT_ALPHA;

#[derive(Parser)]
#[command(name = "ragbench", version, about = "Retrieval-augmented MCQ benchmarking harness")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the number of questions answered concurrently.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Log raw request and response bodies.
    #[arg(long, global = true)]
    log_raw: bool,
    /// More log output (-v debug, -vv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chunk a corpus and persist its TF-IDF index.
    Index(IndexArgs),
    /// Retrieve the top chunks of a saved index for a query.
    Query(QueryArgs),
    /// Term overlap, readability and embedding proximity per corpus (CSV).
    Analyze(AnalyzeArgs),
    /// Run (or resume) the experiment described by --config.
    Run(RunArgs),
    /// Accuracy tables and statistics for a finished run.
    Report(ReportArgs),
    /// Check the answer extractor against a labelled corpus.
    ExtractTest(ExtractTestArgs),
    /// Generate a random-word corpus.
    RandomWords(RandomWordsArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// Corpus text file. Without it, every corpus in --config is indexed.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Corpus name (defaults to the file stem).
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    chunk_size: Option<usize>,
    /// Index file for --corpus, or output directory in config mode.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(short, default_value_t = DEFAULT_TOP_K)]
    k: usize,
    query: String,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// `name=path` pairs; defaults to the config's corpora.
    #[arg(long = "corpus")]
    corpora: Vec<String>,
    /// Term set, one term per line.
    #[arg(long)]
    terms: Option<PathBuf>,
    /// Word vectors in plain-text format.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Stamp every record with this fixed time, for byte-reproducible runs.
    #[arg(long)]
    timestamp: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory for the report files (defaults to the run's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
}

#[derive(Args)]
struct ExtractTestArgs {
    /// Labelled JSON Lines corpus (defaults to the built-in one).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Rules file: `priority<TAB>rule_id<TAB>pattern` per line.
    #[arg(long)]
    rules: Option<PathBuf>,
}

#[derive(Args)]
struct RandomWordsArgs {
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = DEFAULT_RANDOM_WORD_LENGTH)]
    mean_length: f64,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn init_logging(verbose: u8, log_raw: bool) {
    let base = match verbose {
        0 => "warn,ragbench_core=info,ragbench=info",
        1 => "info,ragbench_core=debug,ragbench=debug",
        _ => "debug,ragbench_core=trace,ragbench=trace",
    };
    let mut filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(base));
    if log_raw {
        filter = filter.add_directive("ragbench::raw=info".parse().expect("static directive"));
    }
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

impl Cli {
    fn load_config(&self) -> Result<ExperimentConfig> {
        let path = self.config.as_ref().context("--config is required for this command")?;
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(p) = self.parallelism {
            cfg.parallelism = p;
        }
        cfg.log_raw |= self.log_raw;
        Ok(cfg)
    }
}

fn write_output(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_index(cli: &Cli, args: &IndexArgs) -> Result<()> {
    if let Some(path) = &args.corpus {
        let name = match &args.name {
            Some(n) => n.clone(),
            None => path
                .file_stem()
                .and_then(|s| s.to_str())
                .context("cannot derive a corpus name; pass --name")?
                .to_string(),
        };
        let corpus = CorpusSource::File(path.clone()).load(&name)?;
        let chunks = chunk_corpus(&corpus, args.chunk_size.unwrap_or(DEFAULT_CHUNK_SIZE))?;
        let index = ChunkIndex::build(chunks)?;
        index.save(&args.out)?;
        println!(
            "{}: {} chunks, {} terms -> {}",
            name,
            index.len(),
            index.model().vocabulary_size(),
            args.out.display()
        );
        return Ok(());
    }
    let cfg = cli.load_config()?;
    std::fs::create_dir_all(&args.out)?;
    let chunk_size = args.chunk_size.unwrap_or(cfg.chunk_size);
    for cond in cfg.conditions().iter().filter(|c| !c.is_baseline()) {
        let index = build_condition_index(cond, chunk_size)?.expect("non-baseline condition");
        let path = args.out.join(format!("{}.idx", cond.name));
        index.save(&path)?;
        println!("{}: {} chunks -> {}", cond.name, index.len(), path.display());
    }
    Ok(())
}

fn cmd_query(args: &QueryArgs) -> Result<()> {
    let index = ChunkIndex::load(&args.index)?;
    let r = index.retrieve(&args.query, args.k)?;
    for (id, score) in r.chunk_ids.iter().zip(&r.scores) {
        let text = &index.chunks()[*id].text;
        let preview: String = text.chars().take(80).collect();
        println!("{id}\t{score:.6}\t{preview}");
    }
    Ok(())
}

fn cmd_analyze(cli: &Cli, args: &AnalyzeArgs) -> Result<()> {
    let cfg = match &cli.config {
        Some(_) => Some(cli.load_config()?),
        None => None,
    };
    let mut corpora: Vec<Corpus> = Vec::new();
    for spec in &args.corpora {
        let (name, path) = spec
            .split_once('=')
            .with_context(|| format!("--corpus expects name=path, got {spec:?}"))?;
        corpora.push(CorpusSource::File(path.into()).load(name)?);
    }
    if corpora.is_empty() {
        let cfg = cfg.as_ref().context("pass --corpus name=path or --config")?;
        for (name, src) in &cfg.corpora {
            corpora.push(src.load(name)?);
        }
    }
    let terms_path = args
        .terms
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.term_set_path.clone()))
        .context("no term set: pass --terms or set term_set_path")?;
    let terms = TermSet::load(&terms_path)?;
    let table = match args.embeddings.clone().or_else(|| cfg.as_ref().and_then(|c| c.embeddings_path.clone())) {
        Some(p) => {
            info!(path = %p.display(), "loading word vectors");
            Some(WordVectorTable::load(&p)?)
        }
        None => None,
    };
    let reports = corpora
        .iter()
        .map(|c| RelevanceReport::compute(c, &terms, table.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    write_output(args.out.as_deref(), &render_relevance_csv(&reports))
}

fn cmd_run(cli: &Cli, args: &RunArgs) -> Result<()> {
    let cfg = cli.load_config()?;
    let mut runner = Runner::from_config(cfg)?;
    if let Some(ts) = &args.timestamp {
        runner = runner.with_clock(Arc::new(FixedClock(ts.clone())));
    }
    let art = runner.run()?;
    println!(
        "{}: {} record files written, {} already complete",
        art.output_dir.display(),
        art.generated.len(),
        art.skipped.len()
    );
    Ok(())
}

fn cmd_report(cli: &Cli, args: &ReportArgs) -> Result<()> {
    let cfg = cli.load_config()?;
    let report = report_experiment(&cfg, args.out.as_deref(), args.alpha)?;
    print!(
        "{}",
        ragbench_core::stats::render_table(&report.overall, ragbench_core::stats::TableFormat::Markdown)
    );
    Ok(())
}

fn cmd_extract_test(args: &ExtractTestArgs) -> Result<bool> {
    let rules = match &args.rules {
        Some(p) => RuleSet::load(p)?,
        None => RuleSet::default_set(),
    };
    let src = match &args.corpus {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => DEFAULT_REGRESSION_CORPUS.to_string(),
    };
    let cases = parse_regression_corpus(&src)?;
    let summary = run_regression(&rules, &cases);
    for f in &summary.failures {
        println!("FAIL expected {}, got {} for {:?}", f.expected, f.got, f.output);
    }
    println!("{}/{} cases extracted correctly", summary.passed, summary.total);
    Ok(summary.all_passed())
}

fn cmd_random_words(cli: &Cli, args: &RandomWordsArgs) -> Result<()> {
    let corpus = generate_random_words(args.count, cli.seed.unwrap_or(0), args.mean_length)?;
    let mut text = corpus.text;
    text.push('\n');
    write_output(args.out.as_deref(), &text)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Index(a) => cmd_index(cli, a)?,
        Command::Query(a) => cmd_query(a)?,
        Command::Analyze(a) => cmd_analyze(cli, a)?,
        Command::Run(a) => cmd_run(cli, a)?,
        Command::Report(a) => cmd_report(cli, a)?,
        Command::ExtractTest(a) => return cmd_extract_test(a),
        Command::RandomWords(a) => cmd_random_words(cli, a)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose, cli.log_raw);
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_follow_subcommand() {
        let cli = Cli::try_parse_from(["ragbench", "run", "--config", "x.toml", "--seed", "3", "--parallelism", "2", "--log-raw"]).unwrap();
        assert_eq!(cli.seed, Some(3));
        assert_eq!(cli.parallelism, Some(2));
        assert!(cli.log_raw);
        assert!(matches!(cli.command, Command::Run(_)));
    }

}
