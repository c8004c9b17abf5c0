//! `zrc` command-line front end.
//!
//! Each subcommand builds a [`MetricReport`]. Without `--output` the report
//! goes to stdout and the summary table to stderr; with it the report is
//! written to the file and the summary printed on stdout.
//!
//! Exit codes: 0 success, 2 success with metric warnings, 1 input or
//! evaluation error, 64 usage error.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::abx::{self, AbxConfig, Mode};
use crate::bitrate;
use crate::corpus::{self, GoldCorpus};
use crate::dissim::{DissimKind, Normalization};
use crate::error::{read_to_string, Error, Result};
use crate::lmeval::{self, Pooling};
use crate::report::{self, Format, MetricReport};
use crate::synth::{self, ToyLanguageSpec};
use crate::tde;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_WARNINGS: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "zrc",
    version,
    about = "Zero-resource speech evaluation toolkit"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Worker threads [default: available cores]
    #[arg(long, global = true, env = "ZRC_JOBS", value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,
    /// Render fraction-valued scores as percentages
    #[arg(long, global = true)]
    pub percent: bool,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Write the report here instead of stdout
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Within,
    Across,
    Both,
}

impl ModeArg {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::Within => vec![Mode::Within],
            ModeArg::Across => vec![Mode::Across],
            ModeArg::Both => vec![Mode::Within, Mode::Across],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ContrastTask {
    Lexical,
    Syntactic,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimal-pair ABX error rates of frame features
    Abx {
        /// Gold corpus directory
        #[arg(long)]
        corpus: PathBuf,
        /// Directory of <utterance>.txt feature files
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = DissimKind::Angular)]
        dissim: DissimKind,
        /// DTW cost normalization
        #[arg(long, value_enum, default_value_t = Normalization::PathLength)]
        norm: Normalization,
        /// Phones never used in items (comma separated)
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<String>,
        /// Evaluate this item file instead of mining the corpus
        #[arg(long)]
        items: Option<PathBuf>,
        /// Save the mined item list
        #[arg(long)]
        write_items: Option<PathBuf>,
    },
    /// Spoken term discovery scores of a class file
    Tde {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        classes: PathBuf,
    },
    /// Entropy bitrate of discrete units
    Bitrate {
        /// Directory of <utterance>.txt unit files
        units: PathBuf,
        /// Per-utterance durations (`utt seconds`)
        durations: Option<PathBuf>,
        /// Gold corpus used for durations missing from the metadata file
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Contrastive accuracy over minimal pairs
    Lex {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, value_enum, default_value_t = ContrastTask::Lexical)]
        task: ContrastTask,
    },
    /// Semantic similarity correlation of word embeddings
    Simi {
        /// Similarity judgments (`word1 word2 score dataset`)
        #[arg(long)]
        gold: PathBuf,
        /// Directory of <word>#<k>.txt embedding files
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, value_enum, default_value_t = Pooling::Mean)]
        pool: Pooling,
    },
    /// Generate a synthetic corpus and submission
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Every metric whose inputs are present in a submission directory
    All {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        submission: PathBuf,
        #[arg(long, value_enum, default_value_t = DissimKind::Angular)]
        dissim: DissimKind,
        #[arg(long, value_enum, default_value_t = Pooling::Mean)]
        pool: Pooling,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let jobs = cli
        .common
        .jobs
        .map(usize::from)
        .unwrap_or_else(default_jobs);
    let result = crate::with_jobs(jobs, || execute(&cli));
    match result {
        Ok(Some(report)) => match deliver(&report, &cli.common) {
            Ok(()) if report.warnings.is_empty() => EXIT_OK,
            Ok(()) => EXIT_WARNINGS,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_ERROR
            }
        },
        Ok(None) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn deliver(report: &MetricReport, common: &CommonArgs) -> Result<()> {
    let format = match common.format {
        OutputFormat::Json => Format::Json,
        OutputFormat::Csv => Format::Csv,
    };
    let text = report.emit(format, common.percent);
    let summary = report.summary_table(common.percent);
    match &common.output {
        Some(path) => {
            std::fs::write(path, text).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            print!("{summary}");
        }
        None => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(text.as_bytes());
            let _ = out.flush();
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::ErrorKind::NotFound.into(),
        })
    }
}

fn digest(report: &mut MetricReport, name: &str, path: &Path) -> Result<()> {
    report
        .inputs
        .insert(name.to_string(), report::digest_path(path)?);
    Ok(())
}

/// Runs the parsed command; `None` for commands without a report.
pub fn execute(cli: &Cli) -> Result<Option<MetricReport>> {
    let report = match &cli.command {
        Command::Abx {
            corpus,
            features,
            mode,
            dissim,
            norm,
            exclude,
            items,
            write_items,
        } => {
            for p in [corpus, features] {
                require(p)?;
            }
            let gold = GoldCorpus::load_dir(corpus)?;
            let exclude: BTreeSet<String> = exclude.iter().cloned().collect();
            let items = match items {
                Some(path) => abx::read_item_file(path)?,
                None => abx::extract_items(&gold, &exclude),
            };
            if let Some(path) = write_items {
                std::fs::write(path, abx::format_item_file(&items)).map_err(|source| {
                    Error::Io {
                        path: path.clone(),
                        source,
                    }
                })?;
            }
            let mut r = abx_report(&gold, features, &items, &mode.modes(), *dissim, *norm)?;
            digest(&mut r, "corpus", corpus)?;
            digest(&mut r, "features", features)?;
            r
        }
        Command::Tde { corpus, classes } => {
            for p in [corpus, classes] {
                require(p)?;
            }
            let gold = GoldCorpus::load_dir(corpus)?;
            let mut r = tde_report(&tde::run_tde_file(classes, &gold)?)?;
            digest(&mut r, "corpus", corpus)?;
            digest(&mut r, "classes", classes)?;
            r
        }
        Command::Bitrate {
            units,
            durations,
            corpus,
        } => {
            require(units)?;
            let mut r = bitrate_report(units, durations.as_deref(), corpus.as_deref())?;
            digest(&mut r, "units", units)?;
            if let Some(d) = durations {
                digest(&mut r, "durations", d)?;
            }
            if let Some(c) = corpus {
                digest(&mut r, "corpus", c)?;
            }
            r
        }
        Command::Lex {
            pairs,
            scores,
            task,
        } => {
            for p in [pairs, scores] {
                require(p)?;
            }
            let mut r = contrast_report(pairs, scores, *task)?;
            digest(&mut r, "pairs", pairs)?;
            digest(&mut r, "scores", scores)?;
            r
        }
        Command::Simi {
            gold,
            embeddings,
            pool,
        } => {
            for p in [gold, embeddings] {
                require(p)?;
            }
            let mut r = simi_report(gold, embeddings, *pool)?;
            digest(&mut r, "similarity", gold)?;
            digest(&mut r, "embeddings", embeddings)?;
            r
        }
        Command::Synth { spec, out } => {
            let spec =
                ToyLanguageSpec::from_json(&read_to_string(spec)?).map_err(|e| e.in_file(spec))?;
            synth::generate(&spec)?.write(out)?;
            println!("wrote synthetic corpus to {}", out.display());
            return Ok(None);
        }
        Command::All {
            corpus,
            submission,
            dissim,
            pool,
        } => evaluate_all(corpus, submission, *dissim, *pool)?,
    };
    let mut stamped = MetricReport::new();
    stamped.absorb(report)?;
    Ok(Some(stamped))
}

/// ABX rows for each mode: `abx.<mode>` plus cell and item counts.
pub fn abx_report(
    gold: &GoldCorpus,
    features: &Path,
    items: &[abx::TriphoneItem],
    modes: &[Mode],
    kind: DissimKind,
    norm: Normalization,
) -> Result<MetricReport> {
    let ids: BTreeSet<&str> = items.iter().map(|i| i.utterance.as_str()).collect();
    for id in &ids {
        if gold.get(id).is_none() {
            return Err(Error::UnknownUtterance(id.to_string()));
        }
    }
    let feats = corpus::load_feature_dir(features, ids)?;
    let mut r = MetricReport::default();
    r.insert("abx", "n_items", items.len() as f64)?;
    for &mode in modes {
        let config = AbxConfig {
            mode,
            kind,
            norm,
            exclude: BTreeSet::new(),
        };
        let res = abx::score_items(items, &feats, &config)?;
        let m = mode.name();
        r.insert("abx", m, res.error_rate)?;
        r.insert("abx", &format!("n_cells_{m}"), res.cells as f64)?;
        r.insert(
            "abx",
            &format!("n_skipped_cells_{m}"),
            res.skipped_cells as f64,
        )?;
        r.insert(
            "abx",
            &format!("n_dropped_items_{m}"),
            res.dropped_items as f64,
        )?;
        for w in res.warnings {
            r.warn(format!("abx {m}: {w}"));
        }
    }
    Ok(r)
}

pub fn tde_report(t: &tde::TdeReport) -> Result<MetricReport> {
    let mut r = MetricReport::default();
    r.insert("tde", "ned", t.ned)?;
    r.insert("tde", "coverage", t.coverage)?;
    for (name, prf) in [
        ("grouping", t.grouping),
        ("type", t.types),
        ("token", t.token),
        ("boundary", t.boundary),
    ] {
        r.insert("tde", &format!("{name}_precision"), prf.precision)?;
        r.insert("tde", &format!("{name}_recall"), prf.recall)?;
        r.insert("tde", &format!("{name}_fscore"), prf.fscore)?;
    }
    let c = &t.counts;
    for (name, v) in [
        ("n_clusters", c.clusters as f64),
        ("n_fragments", c.fragments as f64),
        ("n_empty_fragments", c.empty_fragments as f64),
        ("n_ned_pairs", c.ned_pairs as f64),
        ("n_cluster_pairs", c.cluster_pairs as f64),
        ("n_gold_pairs", c.gold_pairs as f64),
        ("n_discoverable_phones", c.discoverable_phones as f64),
    ] {
        r.insert("tde", name, v)?;
    }
    for w in &t.warnings {
        r.warn(format!("tde: {w}"));
    }
    Ok(r)
}

pub fn bitrate_report(
    units: &Path,
    durations: Option<&Path>,
    corpus: Option<&Path>,
) -> Result<MetricReport> {
    let durations = match durations {
        Some(p) => corpus::parse_durations(&read_to_string(p)?).map_err(|e| e.in_file(p))?,
        None => Default::default(),
    };
    let gold = corpus.map(GoldCorpus::load_dir).transpose()?;
    let seqs = bitrate::load_units(units, &durations, gold.as_ref())?;
    let b = bitrate::bitrate(&seqs)?;
    let mut r = MetricReport::default();
    r.insert("bitrate", "bitrate", b.bits_per_second)?;
    r.insert("bitrate", "entropy", b.entropy)?;
    r.insert("bitrate", "n_tokens", b.tokens as f64)?;
    r.insert("bitrate", "n_types", b.types as f64)?;
    r.insert("bitrate", "duration", b.duration)?;
    Ok(r)
}

pub fn contrast_report(pairs: &Path, scores: &Path, task: ContrastTask) -> Result<MetricReport> {
    let p = lmeval::read_pair_file(pairs)?;
    let s = corpus::read_score_table(scores)?;
    let acc = lmeval::contrastive_accuracy(&p, &s)?;
    let (task, metric) = match task {
        ContrastTask::Lexical => ("lexical", "swuggy"),
        ContrastTask::Syntactic => ("syntactic", "sblimp"),
    };
    let mut r = MetricReport::default();
    r.insert(task, metric, acc)?;
    r.insert(task, "n_pairs", p.len() as f64)?;
    Ok(r)
}

pub fn simi_report(gold: &Path, embeddings: &Path, pool: Pooling) -> Result<MetricReport> {
    let records = lmeval::read_similarity_file(gold)?;
    let tokens = lmeval::group_word_tokens(corpus::load_all_features(embeddings)?);
    let s = lmeval::ssimi(&records, &tokens, pool)?;
    let mut r = MetricReport::default();
    for (name, d) in &s.per_dataset {
        r.insert("semantic", name, 100.0 * d.rho)?;
        r.insert("semantic", &format!("n_pairs_{name}"), d.pairs as f64)?;
    }
    r.insert("semantic", "weighted", s.weighted)?;
    for w in s.warnings {
        r.warn(format!("semantic: {w}"));
    }
    Ok(r)
}

/// Scores every task whose inputs exist.
///
/// Looks for `features/`, `classes.txt`, `units/`, `lexical_scores.txt`,
/// `syntactic_scores.txt` and `semantic/` under `submission`, with the
/// matching gold files (`lexical_pairs.txt`, `syntactic_pairs.txt`,
/// `similarity.txt`, `durations.txt`) under `corpus_dir`.
pub fn evaluate_all(
    corpus_dir: &Path,
    submission: &Path,
    kind: DissimKind,
    pool: Pooling,
) -> Result<MetricReport> {
    require(corpus_dir)?;
    require(submission)?;
    let gold = GoldCorpus::load_dir(corpus_dir)?;
    let mut parts = Vec::new();
    let mut inputs = MetricReport::default();
    digest(&mut inputs, "corpus", corpus_dir)?;

    let features = submission.join("features");
    if features.is_dir() {
        let items = abx::extract_items(&gold, &BTreeSet::new());
        parts.push(abx_report(
            &gold,
            &features,
            &items,
            &ModeArg::Both.modes(),
            kind,
            Normalization::PathLength,
        )?);
        digest(&mut inputs, "features", &features)?;
    }
    let classes = submission.join("classes.txt");
    if classes.is_file() {
        parts.push(tde_report(&tde::run_tde_file(&classes, &gold)?)?);
        digest(&mut inputs, "classes", &classes)?;
    }
    let units = submission.join("units");
    if units.is_dir() {
        let durations = gold.durations();
        let seqs = bitrate::load_units(&units, &durations, Some(&gold))?;
        let b = bitrate::bitrate(&seqs)?;
        let mut r = MetricReport::default();
        r.insert("bitrate", "bitrate", b.bits_per_second)?;
        r.insert("bitrate", "entropy", b.entropy)?;
        r.insert("bitrate", "n_tokens", b.tokens as f64)?;
        r.insert("bitrate", "n_types", b.types as f64)?;
        r.insert("bitrate", "duration", b.duration)?;
        parts.push(r);
        digest(&mut inputs, "units", &units)?;
    }
    for (task, pairs, scores) in [
        (
            ContrastTask::Lexical,
            "lexical_pairs.txt",
            "lexical_scores.txt",
        ),
        (
            ContrastTask::Syntactic,
            "syntactic_pairs.txt",
            "syntactic_scores.txt",
        ),
    ] {
        let (p, s) = (corpus_dir.join(pairs), submission.join(scores));
        if p.is_file() && s.is_file() {
            parts.push(contrast_report(&p, &s, task)?);
            digest(&mut inputs, pairs.trim_end_matches(".txt"), &p)?;
            digest(&mut inputs, scores.trim_end_matches(".txt"), &s)?;
        }
    }
    let (sim, emb) = (
        corpus_dir.join("similarity.txt"),
        submission.join("semantic"),
    );
    if sim.is_file() && emb.is_dir() {
        parts.push(simi_report(&sim, &emb, pool)?);
        digest(&mut inputs, "similarity", &sim)?;
        digest(&mut inputs, "semantic", &emb)?;
    }
    if parts.is_empty() {
        inputs.warn(format!(
            "no evaluable inputs found in {}",
            submission.display()
        ));
    }
    parts.push(inputs);
    report::merge(parts)
}
