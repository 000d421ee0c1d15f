//! `tokscope` subcommands.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use tokscope_core::charset::{special_char_proportion, REFERENCE_COUNTS};
use tokscope_core::coldstart::{apply_temperature, entropy, MetricsReport};
use tokscope_core::compare::{cells_delta, quantization_sweep, ComparisonRow, DEFAULT_STP_THRESHOLD};
use tokscope_core::keywords::{coverage, keyword_ranks, MatchMode};
use tokscope_core::vocab::Vocabulary;

use crate::compare::run_comparison;
use crate::error::{Error, Result};
use crate::io::{load_distribution, load_manifest, load_vocabulary, sha256_hex, validate_dump, Datasets, VocabFormat};
use crate::published::{self, BUNDLED};
use crate::render::{render, Format};
use crate::report::{
    CharsetReport, ColdstartReport, ComparisonReport, CoverageReport, InputDigest, Metadata, Payload, RanksReport,
    ReportDocument, Settings, VocabCoverage,
};

#[derive(Debug, Parser)]
#[command(name = "tokscope", version, about = "Programming-language reports for BPE tokenizer vocabularies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Args)]
pub struct Options {
    #[arg(long, global = true, value_enum, default_value_t = Format::Markdown)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Omit the timestamp so identical inputs give identical output.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Bare)]
    pub match_mode: ModeArg,
    /// Symbol set file, one character per line (`\t`, `\n` allowed).
    #[arg(long, global = true)]
    pub symbols: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 3, value_parser = positive)]
    pub top_k: usize,
    /// Rescale dense distributions before computing metrics.
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    #[arg(long, global = true, default_value_t = DEFAULT_STP_THRESHOLD)]
    pub stp_threshold: f64,
    /// Keyword and word-list directory; overrides TOKSCOPE_DATA_DIR.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = VocabFormat::Auto)]
    pub vocab_format: VocabFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Only the bare keyword string counts.
    Bare,
    /// The space-prefixed form counts as well.
    Prefixed,
}

impl From<ModeArg> for MatchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Bare => MatchMode::BareOnly,
            ModeArg::Prefixed => MatchMode::BareOrPrefixed,
        }
    }
}

fn positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Args)]
pub struct Source {
    #[arg(long, required_unless_present = "published", conflicts_with = "published")]
    pub manifest: Option<PathBuf>,
    /// Use the bundled published rows instead of a manifest.
    #[arg(long)]
    pub published: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Keyword coverage per language.
    Coverage {
        #[arg(long, required = true)]
        vocab: Vec<PathBuf>,
    },
    /// Vocabulary ranks of every keyword.
    Ranks {
        #[arg(long, required = true)]
        vocab: Vec<PathBuf>,
    },
    /// Share of tokens containing programming symbols.
    Charset {
        #[arg(long, required = true)]
        vocab: Vec<PathBuf>,
    },
    /// Cold-start metrics for one dump.
    Coldstart {
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        dump: PathBuf,
    },
    /// Comparison table over a manifest or the published rows.
    Compare {
        #[command(flatten)]
        source: Source,
    },
    /// Metric changes between two models.
    Delta {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        base: String,
        #[arg(long)]
        compared: String,
    },
    /// Quantization sweep over one family.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Defaults to the family of the first quantized row.
        #[arg(long)]
        family: Option<String>,
        /// Defaults to the unquantized row, else Q8_0.
        #[arg(long)]
        reference: Option<String>,
    },
    /// Check a cold-start dump and list every violation.
    ValidateDump {
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` and runs the subcommand; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(Outcome { doc, ok }) => {
            let text = render(&doc, cli.options.format);
            if let Err(e) = write_output(cli.options.out.as_deref(), &text) {
                eprintln!("error: {e}");
                return 1;
            }
            if ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

struct Outcome {
    doc: ReportDocument,
    /// False when the report itself records a failure (an invalid dump).
    ok: bool,
}

struct Run<'a> {
    options: &'a Options,
    datasets: Datasets,
}

impl Run<'_> {
    fn settings(&self) -> Settings {
        let d = &self.datasets;
        Settings {
            match_mode: self.options.match_mode.into(),
            symbols: String::from(d.symbols.clone()),
            symbols_source: d.symbols_source.clone(),
            datasets: d.source.clone(),
            natural_words: d.natural_words.len(),
            keywords: d.classifier().keyword_count(),
            top_k: self.options.top_k,
            temperature: self.options.temperature,
            stp_threshold: self.options.stp_threshold,
            rank: "token_id".into(),
            kap_denominator: "keyword_token_ids".into(),
        }
    }

    fn document(&self, payload: Payload, inputs: &[PathBuf]) -> Result<ReportDocument> {
        let mut inputs: Vec<PathBuf> = inputs.to_vec();
        if let Some(p) = &self.options.symbols {
            inputs.push(p.clone());
        }
        let metadata = Metadata::new(&inputs, self.settings(), self.options.deterministic)?;
        Ok(ReportDocument { payload, metadata })
    }

    fn vocabularies(&self, paths: &[PathBuf]) -> Result<Vec<Vocabulary>> {
        paths
            .par_iter()
            .map(|p| load_vocabulary(p, self.options.vocab_format))
            .collect()
    }

    /// Rows from a manifest or the published fixture, plus the files read.
    fn rows(&self, source: &Source) -> Result<(Vec<ComparisonRow>, Vec<PathBuf>, bool)> {
        match &source.manifest {
            Some(path) if !source.published => {
                let manifest = load_manifest(path)?;
                let table = run_comparison(&manifest, &self.datasets, self.options.top_k);
                for e in &table.errors {
                    eprintln!("warning: {}: {}", e.model_id, e.message);
                }
                Ok((table.rows, manifest_inputs(path, &manifest), false))
            }
            _ => Ok((published::bundled().comparison_rows()?, Vec::new(), true)),
        }
    }
}

fn manifest_inputs(path: &Path, manifest: &tokscope_core::compare::ModelManifest) -> Vec<PathBuf> {
    let mut inputs = vec![path.to_path_buf()];
    for e in manifest.entries() {
        for p in std::iter::once(&e.vocab_path).chain(&e.dump_path) {
            let p = PathBuf::from(p);
            if p.is_file() && !inputs.contains(&p) {
                inputs.push(p);
            }
        }
    }
    inputs
}

fn with_published_digest(mut doc: ReportDocument, published: bool) -> ReportDocument {
    if published {
        doc.metadata.inputs.push(InputDigest {
            path: "bundled:published.json".into(),
            sha256: sha256_hex(BUNDLED.as_bytes()),
        });
    }
    doc
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let options = &cli.options;
    let run = Run {
        options,
        datasets: Datasets::load(options.data_dir.as_deref(), options.symbols.as_deref())?,
    };
    let mode: MatchMode = options.match_mode.into();
    let ok = |doc| Ok(Outcome { doc, ok: true });

    match &cli.command {
        Command::Coverage { vocab } => {
            let sets = &run.datasets.keyword_sets;
            let vocabularies = run
                .vocabularies(vocab)?
                .iter()
                .map(|v| VocabCoverage {
                    vocab_name: v.name().into(),
                    tokens: v.size(),
                    decoding: v.decoding(),
                    results: sets.iter().map(|s| coverage(v, s, mode)).collect(),
                    alternate: sets.iter().map(|s| coverage(v, s, mode.other())).collect(),
                })
                .collect();
            let payload = Payload::Coverage(CoverageReport {
                match_mode: mode,
                vocabularies,
            });
            ok(run.document(payload, vocab)?)
        }
        Command::Ranks { vocab } => {
            let vocabularies = run
                .vocabularies(vocab)?
                .iter()
                .map(|v| keyword_ranks(v, &run.datasets.keyword_sets))
                .collect();
            ok(run.document(Payload::Ranks(RanksReport { vocabularies }), vocab)?)
        }
        Command::Charset { vocab } => {
            let symbols = &run.datasets.symbols;
            let results = run
                .vocabularies(vocab)?
                .iter()
                .map(|v| special_char_proportion(v, symbols))
                .collect();
            let payload = Payload::Charset(CharsetReport {
                symbols: String::from(symbols.clone()),
                results,
                reference: REFERENCE_COUNTS.to_vec(),
            });
            ok(run.document(payload, vocab)?)
        }
        Command::Coldstart { vocab: vocab_path, dump } => {
            let vocab = load_vocabulary(vocab_path, options.vocab_format)?;
            let mut dist = load_distribution(dump, &vocab)?;
            if dist.mass_clamped() {
                eprintln!("warning: {}: residual mass within tolerance of zero, clamped", dump.display());
            }
            if let Some(t) = options.temperature {
                dist = apply_temperature(&dist, t)?;
            }
            let index = run.datasets.classifier().index(&vocab);
            let metrics = MetricsReport::compute(&dist, &index, options.top_k)?;
            let payload = Payload::Coldstart(ColdstartReport {
                metrics,
                entropy: dist.is_dense().then(|| entropy(&dist)),
                mass_clamped: dist.mass_clamped(),
                decoding: vocab.decoding(),
            });
            ok(run.document(payload, &[vocab_path.clone(), dump.clone()])?)
        }
        Command::Compare { source } => {
            if source.published {
                let tables = published::bundled().tables.clone();
                let doc = run.document(Payload::Comparison(ComparisonReport::Published { tables }), &[])?;
                return ok(with_published_digest(doc, true));
            }
            let path = source.manifest.as_deref().expect("clap requires --manifest");
            let manifest = load_manifest(path)?;
            let table = run_comparison(&manifest, &run.datasets, options.top_k);
            for e in &table.errors {
                eprintln!("warning: {}: {}", e.model_id, e.message);
            }
            let payload = Payload::Comparison(ComparisonReport::Computed { table });
            ok(run.document(payload, &manifest_inputs(path, &manifest))?)
        }
        Command::Delta { source, base, compared } => {
            let (rows, inputs, published) = run.rows(source)?;
            let cells = |id: &str| {
                rows.iter()
                    .find(|r| r.model_id == id)
                    .ok_or_else(|| Error::Invalid(format!("no row for model {id:?}")))?
                    .cells
                    .as_ref()
                    .ok_or_else(|| Error::Invalid(format!("model {id:?} has no cold-start dump")))
            };
            let report = cells_delta(base, cells(base)?, compared, cells(compared)?);
            let doc = run.document(Payload::Delta(report), &inputs)?;
            ok(with_published_digest(doc, published))
        }
        Command::Sweep {
            source,
            family,
            reference,
        } => {
            let (rows, inputs, published) = run.rows(source)?;
            let family = match family {
                Some(f) => f.clone(),
                None => rows
                    .iter()
                    .find(|r| r.quant_label.is_some())
                    .map(|r| r.family.clone())
                    .ok_or_else(|| Error::Invalid("no quantized rows; pass --family".into()))?,
            };
            let rows: Vec<ComparisonRow> = rows.into_iter().filter(|r| r.family == family).collect();
            let summary = quantization_sweep(&rows, reference.as_deref(), options.stp_threshold)?;
            let doc = run.document(Payload::Sweep(summary), &inputs)?;
            ok(with_published_digest(doc, published))
        }
        Command::ValidateDump { dump, vocab } => {
            let vocabulary = vocab
                .as_deref()
                .map(|p| load_vocabulary(p, options.vocab_format))
                .transpose()?;
            let report = validate_dump(dump, vocabulary.as_ref())?;
            let valid = report.is_valid();
            let inputs: Vec<PathBuf> = std::iter::once(dump.clone()).chain(vocab.clone()).collect();
            let doc = run.document(Payload::Validation(report), &inputs)?;
            Ok(Outcome { doc, ok: valid })
        }
    }
}
