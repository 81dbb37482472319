//! Command-line front end.
//!
//! Exit codes: 0 success, 1 data error, 2 configuration or usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::ToolkitConfig;
use crate::corpus::{self, Corpus, DenoisePair, SummaryPair, SummaryRecord};
use crate::hypergraph::{self, slug};
use crate::noise;
use crate::preprocess::{self, build_qr_text};
use crate::rouge::{score_corpus_with, ScoreReport};

pub const CONFIG_ENV: &str = "HYPERSUMM_CONFIG";

#[derive(Parser, Debug)]
#[command(name = "hypersumm", version, about = "Dialogue corpus preprocessing, corruption, scoring and hypertext export")]
struct Cli {
    /// Toolkit config file (TOML); defaults apply when absent
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    /// Worker threads for per-dialogue work
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Io {
    /// Input turn-record file (falls back to paths.input)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file or directory (falls back to paths.output)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a turn-record file and rewrite it canonically
    Ingest(Io),
    /// Translate and clean; write the corpus plus one Q/R text per interview
    Preprocess(Io),
    /// Generate denoising pairs
    Corrupt {
        #[command(flatten)]
        io: Io,
        /// Overrides noise.seed
        #[arg(long)]
        seed: Option<u64>,
        /// Pairs generated per dialogue
        #[arg(long, default_value_t = 1)]
        replicas: u32,
    },
    /// ROUGE-score candidate summaries against references
    Score {
        /// Candidate summary records
        #[arg(long)]
        candidates: PathBuf,
        /// Reference summary records
        #[arg(long)]
        references: PathBuf,
        /// Where to write the JSON score report
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build the hypertext graph and static site
    Graph {
        #[command(flatten)]
        io: Io,
        /// Summary records to link into the graph (falls back to paths.summaries)
        #[arg(long)]
        summaries: Option<PathBuf>,
    },
    /// ingest, preprocess, corrupt and graph in one run
    Pipeline {
        #[command(flatten)]
        io: Io,
        /// Summary records to link into the graph (falls back to paths.summaries)
        #[arg(long)]
        summaries: Option<PathBuf>,
        /// Overrides noise.seed
        #[arg(long)]
        seed: Option<u64>,
        /// Pairs generated per dialogue
        #[arg(long, default_value_t = 1)]
        replicas: u32,
    },
    /// Print the default configuration
    PrintConfig,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0:#}")]
    Data(anyhow::Error),
    #[error("{0:#}")]
    Config(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

fn data(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Data(e.into())
}

fn config_err(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Config(e.into())
}

type Result<T, E = CliError> = std::result::Result<T, E>;

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(data)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))
            .map_err(data)?;
    }
    fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(data)
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

struct Ctx<'a> {
    cfg: ToolkitConfig,
    jobs: usize,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn say(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", line.as_ref());
    }

    fn pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(config_err)?;
        Ok(pool.install(f))
    }

    fn input(&self, io: &Io) -> Result<PathBuf> {
        io.input
            .clone()
            .or_else(|| self.cfg.paths.input.clone())
            .ok_or_else(|| config_err(anyhow!("no input given (use --input or paths.input)")))
    }

    fn output(&self, io: &Io) -> Result<PathBuf> {
        io.output
            .clone()
            .or_else(|| self.cfg.paths.output.clone())
            .ok_or_else(|| config_err(anyhow!("no output given (use --output or paths.output)")))
    }

    fn summaries(&self, flag: &Option<PathBuf>) -> Option<PathBuf> {
        flag.clone().or_else(|| self.cfg.paths.summaries.clone())
    }
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    corpus::parse_corpus(&read(path)?)
        .with_context(|| format!("{}", path.display()))
        .map_err(data)
}

fn load_summaries(path: &Path) -> Result<Vec<SummaryRecord>> {
    corpus::parse_summaries(&read(path)?)
        .with_context(|| format!("{}", path.display()))
        .map_err(data)
}

fn ingest(ctx: &mut Ctx, input: &Path, output: &Path) -> Result<Corpus> {
    if same_file(input, output) {
        return Err(config_err(anyhow!("output would overwrite the input {}", input.display())));
    }
    let corpus = load_corpus(input)?;
    write(output, &corpus::serialize_corpus(&corpus))?;
    ctx.say(format!(
        "{}, {}",
        plural(corpus.len(), "dialogue"),
        plural(corpus.turn_count(), "turn")
    ));
    Ok(corpus)
}

fn preprocess(ctx: &mut Ctx, corpus: &Corpus, out_dir: &Path) -> Result<Corpus> {
    let translator = ctx.cfg.translate.translator();
    let (cleaned, dropped) = ctx
        .pool(|| {
            preprocess::preprocess_corpus(
                corpus,
                translator.as_ref(),
                &ctx.cfg.translate.target_lang,
                &ctx.cfg.clean,
            )
        })?
        .map_err(data)?;
    write(&out_dir.join("corpus.jsonl"), &corpus::serialize_corpus(&cleaned))?;
    let qr_dir = out_dir.join("qr");
    for dialogue in cleaned.dialogues() {
        let mut text = build_qr_text(dialogue);
        text.push('\n');
        write(&qr_dir.join(format!("{}.txt", slug(&dialogue.interview_id))), &text)?;
    }
    ctx.say(format!(
        "{}, {}, {} dropped, {}",
        plural(cleaned.len(), "dialogue"),
        plural(cleaned.turn_count(), "turn"),
        plural(dropped, "empty turn"),
        plural(cleaned.len(), "Q/R file")
    ));
    Ok(cleaned)
}

fn corrupt(ctx: &mut Ctx, corpus: &Corpus, output: &Path, seed: Option<u64>, replicas: u32) -> Result<()> {
    if replicas == 0 {
        return Err(config_err(anyhow!("--replicas must be at least 1")));
    }
    let mut cfg = ctx.cfg.noise.clone();
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let dialogues: Vec<_> = corpus.dialogues().collect();
    let pairs: Vec<Vec<DenoisePair>> = ctx
        .pool(|| {
            dialogues
                .par_iter()
                .map(|d| (0..replicas).map(|r| noise::denoise_replica(d, &cfg, r)).collect())
                .collect::<std::result::Result<_, _>>()
        })?
        .map_err(data)?;
    let pairs: Vec<DenoisePair> = pairs.into_iter().flatten().collect();
    write(output, &corpus::serialize_denoise_pairs(&pairs))?;
    ctx.say(format!(
        "{} from {} (seed {})",
        plural(pairs.len(), "pair"),
        plural(dialogues.len(), "dialogue"),
        cfg.seed
    ));
    Ok(())
}

fn graph(ctx: &mut Ctx, corpus: &Corpus, summaries: Option<&Path>, out_dir: &Path) -> Result<()> {
    let records = match summaries {
        Some(p) => load_summaries(p)?,
        None => Vec::new(),
    };
    let pairs = SummaryPair::from_records(corpus, &records).map_err(data)?;
    let g = hypergraph::build_graph(corpus, &pairs, &ctx.cfg.lexicon, ctx.cfg.graph.segment_size).map_err(data)?;
    write(&out_dir.join("graph.jsonl"), &hypergraph::export_graph_record(&g))?;
    let manifest = hypergraph::export_html(&g, &out_dir.join("site")).map_err(data)?;
    ctx.say(format!(
        "{}, {}, {}",
        plural(g.nodes().len(), "node"),
        plural(g.edges().len(), "edge"),
        plural(manifest.len(), "page")
    ));
    Ok(())
}

fn score(ctx: &mut Ctx, candidates: &Path, references: &Path, output: Option<&Path>) -> Result<ScoreReport> {
    let cands = load_summaries(candidates)?;
    let refs = load_summaries(references)?;
    let ref_by_id: std::collections::BTreeMap<&str, &str> =
        refs.iter().map(|r| (r.dialogue_id.as_str(), r.summary.as_str())).collect();
    let cand_ids: std::collections::BTreeSet<&str> = cands.iter().map(|c| c.dialogue_id.as_str()).collect();
    let mut unmatched: Vec<&str> = cand_ids
        .iter()
        .filter(|id| !ref_by_id.contains_key(*id))
        .chain(ref_by_id.keys().filter(|id| !cand_ids.contains(*id)))
        .copied()
        .collect();
    unmatched.sort_unstable();
    if !unmatched.is_empty() {
        return Err(data(anyhow!("unmatched dialogue ids: {}", unmatched.join(", "))));
    }
    let mut pairs: Vec<(&str, &str, &str)> = cands
        .iter()
        .map(|c| (c.dialogue_id.as_str(), c.summary.as_str(), ref_by_id[c.dialogue_id.as_str()]))
        .collect();
    pairs.sort_unstable();
    let pairs: Vec<(&str, &str)> = pairs.into_iter().map(|(_, c, r)| (c, r)).collect();
    let report = score_corpus_with(&pairs, &ctx.cfg.rouge.ns, ctx.cfg.rouge.multi_reference).map_err(data)?;

    ctx.say(format!("{:<10}{:>8}{:>8}{:>8}", "metric", "R", "P", "F"));
    for (name, s) in &report.metrics {
        ctx.say(format!(
            "{:<10}{:>8.1}{:>8.1}{:>8.1}",
            name,
            s.recall * 100.0,
            s.precision * 100.0,
            s.f1 * 100.0
        ));
    }
    ctx.say(format!("{} scored", plural(report.pairs, "pair")));
    if let Some(path) = output {
        let mut json = serde_json::to_string(&report).map_err(data)?;
        json.push('\n');
        write(path, &json)?;
    }
    Ok(report)
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    if let Command::PrintConfig = cli.command {
        let _ = write!(out, "{}", ToolkitConfig::default_toml());
        return Ok(());
    }
    if cli.jobs == 0 {
        return Err(config_err(anyhow!("--jobs must be at least 1")));
    }
    let cfg = match &cli.config {
        Some(path) => ToolkitConfig::load(path).map_err(config_err)?,
        None => ToolkitConfig::default(),
    };
    let mut ctx = Ctx { cfg, jobs: cli.jobs, out };

    match cli.command {
        Command::PrintConfig => unreachable!(),
        Command::Ingest(io) => {
            let (input, output) = (ctx.input(&io)?, ctx.output(&io)?);
            ingest(&mut ctx, &input, &output)?;
        }
        Command::Preprocess(io) => {
            let (input, output) = (ctx.input(&io)?, ctx.output(&io)?);
            let corpus = load_corpus(&input)?;
            preprocess(&mut ctx, &corpus, &output)?;
        }
        Command::Corrupt { io, seed, replicas } => {
            let (input, output) = (ctx.input(&io)?, ctx.output(&io)?);
            if same_file(&input, &output) {
                return Err(config_err(anyhow!("output would overwrite the input {}", input.display())));
            }
            let corpus = load_corpus(&input)?;
            corrupt(&mut ctx, &corpus, &output, seed, replicas)?;
        }
        Command::Score {
            candidates,
            references,
            output,
        } => {
            score(&mut ctx, &candidates, &references, output.as_deref())?;
        }
        Command::Graph { io, summaries } => {
            let (input, output) = (ctx.input(&io)?, ctx.output(&io)?);
            let summaries = ctx.summaries(&summaries);
            let corpus = load_corpus(&input)?;
            graph(&mut ctx, &corpus, summaries.as_deref(), &output)?;
        }
        Command::Pipeline {
            io,
            summaries,
            seed,
            replicas,
        } => {
            let (input, out_dir) = (ctx.input(&io)?, ctx.output(&io)?);
            let summaries = ctx.summaries(&summaries);
            ctx.say("[ingest]");
            let corpus = ingest(&mut ctx, &input, &out_dir.join("ingested.jsonl"))?;
            ctx.say("[preprocess]");
            let cleaned = preprocess(&mut ctx, &corpus, &out_dir.join("preprocessed"))?;
            ctx.say("[corrupt]");
            corrupt(&mut ctx, &cleaned, &out_dir.join("denoise.jsonl"), seed, replicas)?;
            ctx.say("[graph]");
            graph(&mut ctx, &cleaned, summaries.as_deref(), &out_dir.join("graph"))?;
        }
    }
    Ok(())
}

/// Runs the CLI with explicit arguments and output streams; returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
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
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
