//! Command-line surface. `main.rs` only forwards to [`main_with_args`].

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::Config;
use crate::error::Error;
use crate::kb::Iri;
use crate::mentions::Document;
use crate::pipeline::{build_index_from_config, Classifier, StageError};
use crate::selection::TopicResult;
use crate::Index;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ontotopics",
    version,
    about = "Ontology-backed topic classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an index from knowledge base files.
    BuildIndex(BuildIndexArgs),
    /// Classify a JSONL corpus against an index.
    Classify(ClassifyArgs),
    /// Print the cached neighborhood and parents of one entity.
    ExpandDebug(ExpandDebugArgs),
}

#[derive(Debug, Args)]
pub struct BuildIndexArgs {
    /// Triple files; defaults to the paths listed in the config.
    #[arg(long, num_args = 1..)]
    pub kb: Vec<PathBuf>,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Replace an existing index at `--out`.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Disable coherence boosts.
    #[arg(long)]
    pub no_coherence: bool,
    /// Classification settings to use instead of the ones stored in the index.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpandDebugArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub entity: String,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    fn usage(error: anyhow::Error) -> Self {
        Failure {
            code: EXIT_USAGE,
            error,
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::Pipeline(_) => EXIT_INTERNAL,
        _ => EXIT_DATA,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            error: e.into(),
        }
    }
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        Failure {
            code: exit_code(&e.error),
            error: e.into(),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Error::Io {
        path: path.to_owned(),
        source: e,
    }
    .into()
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    match run(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {:#}", f.error);
            f.code
        }
    }
}

pub fn run(command: Command, stdout: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::BuildIndex(a) => cmd_build_index(&a, stdout),
        Command::Classify(a) => cmd_classify(&a, stdout),
        Command::ExpandDebug(a) => cmd_expand_debug(&a, stdout),
    }
}

fn is_nonempty_dir(path: &Path) -> bool {
    fs::read_dir(path).is_ok_and(|mut d| d.next().is_some())
}

pub fn cmd_build_index(args: &BuildIndexArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let mut config = Config::from_path(&args.config)?;
    if !args.kb.is_empty() {
        config.kb.paths = args.kb.clone();
    }
    if args.out.exists() {
        if !is_nonempty_dir(&args.out) && args.out.is_dir() {
            // empty directory: fine to build into
        } else if !args.force {
            return Err(Failure::usage(anyhow::anyhow!(
                "{} already exists; pass --force to replace it",
                args.out.display()
            )));
        } else if !args.out.join("manifest.json").is_file() {
            return Err(Failure::usage(anyhow::anyhow!(
                "{} exists and is not an index directory; refusing to replace it",
                args.out.display()
            )));
        }
    }
    let parent = match args.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| io_failure(&parent, e))?;
    let staging = tempfile::Builder::new()
        .prefix(".ontotopics-build-")
        .tempdir_in(&parent)
        .map_err(|e| io_failure(&parent, e))?;
    let report = build_index_from_config(&config, staging.path())?;
    if args.out.exists() {
        fs::remove_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    }
    let staged = staging.keep();
    fs::rename(&staged, &args.out).map_err(|e| io_failure(&args.out, e))?;

    let out = |stdout: &mut dyn Write, line: String| {
        writeln!(stdout, "{line}")
            .context("writing to stdout")
            .map_err(|error| Failure {
                code: EXIT_INTERNAL,
                error,
            })
    };
    for (stage, elapsed, summary) in &report.stages {
        out(
            stdout,
            format!(
                "{stage:<10} {:>9.3} ms  {summary}",
                elapsed.as_secs_f64() * 1e3
            ),
        )?;
    }
    out(
        stdout,
        format!(
            "wrote {} records to {}",
            report.manifest.record_count,
            args.out.display()
        ),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct DocumentOutput<'a> {
    id: &'a str,
    topics: &'a [TopicResult],
}

fn classify_line(classifier: &Classifier, number: usize, line: &str) -> String {
    let doc: Document = match serde_json::from_str(line) {
        Ok(d) => d,
        Err(e) => {
            return json!({ "line": number, "error": format!("malformed document: {e}") })
                .to_string()
        }
    };
    match classifier.classify_document(&doc) {
        Ok(topics) => serde_json::to_string(&DocumentOutput {
            id: &doc.id,
            topics: &topics,
        })
        .expect("topic output serializes"),
        Err(e) => json!({ "line": number, "id": doc.id, "error": e.to_string() }).to_string(),
    }
}

pub fn cmd_classify(args: &ClassifyArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    if args.jobs == 0 {
        return Err(Failure::usage(anyhow::anyhow!("--jobs must be at least 1")));
    }
    let config = match &args.config {
        Some(p) => Some(Config::from_path(p)?),
        None => None,
    };
    let mut classifier = Classifier::open(&args.index, config.as_ref())?;
    if args.no_coherence {
        classifier.set_coherence(false);
    }

    let file = fs::File::open(&args.corpus).map_err(|e| io_failure(&args.corpus, e))?;
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_failure(&args.corpus, e))?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Failure {
            code: EXIT_INTERNAL,
            error: e.into(),
        })?;
    // collect keeps input order whatever the worker count
    let results: Vec<String> = pool.install(|| {
        lines
            .par_iter()
            .map(|(n, line)| classify_line(&classifier, *n, line))
            .collect()
    });

    let out = fs::File::create(&args.out).map_err(|e| io_failure(&args.out, e))?;
    let mut w = BufWriter::new(out);
    for r in &results {
        w.write_all(r.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| io_failure(&args.out, e))?;
    }
    w.flush().map_err(|e| io_failure(&args.out, e))?;
    let errors = results.iter().filter(|r| r.contains("\"error\"")).count();
    writeln!(
        stdout,
        "classified {} documents ({errors} errors) into {}",
        results.len(),
        args.out.display()
    )
    .map_err(|e| io_failure(Path::new("<stdout>"), e))?;
    Ok(())
}

pub fn cmd_expand_debug(args: &ExpandDebugArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let index = Index::open(&args.index)?;
    let iri = Iri::new(args.entity.clone())?;
    let record = index.record(&iri).ok_or_else(|| Failure {
        code: EXIT_DATA,
        error: anyhow::anyhow!("{iri} is not in the index"),
    })?;
    let mut text = format!("entity\t{}\t{}\n", record.uri, record.label());
    for (e, d) in record.neighborhood() {
        text.push_str(&format!("neighbor\t{e}\t{d}\n"));
    }
    for (q, w) in record.parents() {
        text.push_str(&format!("parent\t{q}\t{w}\n"));
    }
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| io_failure(Path::new("<stdout>"), e))
}
