//! Command-line interface.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::synth::{generate_synthetic, SynthSpec};
use crate::corpus::{
    discover_dev_languages, load_labeled_corpus, load_parallel_dev, Manifest, NormUnit,
    ParallelDevCorpus,
};
use crate::error::{Error, Result};
use crate::metrics::{full_report, gini, parse_gold_tsv, EvalOptions, MetricReport};
use crate::tokenizer::{escape, load_model, save_model, unescape, Token, TokenId, TokenizerModel};
use crate::trainer::{
    train_classical, train_no_dev, train_parity, CrTable, ParityConfig, StopStatus, DEFAULT_ALPHA,
};

#[derive(Debug, Parser)]
#[command(name = "parity-bpe", version, about = "Byte-level BPE with parity-aware training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a merge list
    Train(TrainArgs),
    /// Tokenize text line by line
    Encode(CodecArgs),
    /// Turn tokenized lines back into text
    Decode(CodecArgs),
    /// Intrinsic metrics of one model on a parallel dev corpus
    Eval(EvalArgs),
    /// Metrics of several models side by side
    Compare(CompareArgs),
    /// Write a seeded synthetic multilingual corpus
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    Classical,
    Parity,
    NoDev,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// JSON file with defaults for any of these options
    #[arg(long)]
    config: Option<PathBuf>,
    /// Classical BPE on pooled counts
    #[arg(long, group = "mode")]
    classical: bool,
    /// Parity-aware BPE driven by a parallel dev corpus (default)
    #[arg(long, group = "mode")]
    parity: bool,
    /// Parity-aware BPE driven by byte compression of the training shards
    #[arg(long, group = "mode")]
    no_dev: bool,
    /// Training manifest
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Directory of aligned `<lang>.txt` dev files
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Merge budget
    #[arg(long)]
    merges: Option<usize>,
    /// Moving-window length; bare flag means 100
    #[arg(long, num_args = 0..=1, default_missing_value = "100")]
    window: Option<usize>,
    /// Window quota multiplier
    #[arg(long)]
    alpha: Option<f64>,
    /// Share of merges learned from pooled counts first; bare flag means 0.5
    #[arg(long, num_args = 0..=1, default_missing_value = "0.5")]
    hybrid_split: Option<f64>,
    /// Unit for dev compression rates
    #[arg(long)]
    unit: Option<NormUnit>,
    /// Keep at most this many records per language
    #[arg(long)]
    limit_per_language: Option<usize>,
    /// Model output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Merge log (JSONL); defaults next to the model
    #[arg(long)]
    log: Option<PathBuf>,
    /// Run summary (JSON); defaults next to the model
    #[arg(long)]
    summary: Option<PathBuf>,
}

/// Training options as read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainFile {
    mode: Option<TrainMode>,
    corpus: Option<PathBuf>,
    dev: Option<PathBuf>,
    merges: Option<usize>,
    window: Option<usize>,
    alpha: Option<f64>,
    hybrid_split: Option<f64>,
    unit: Option<NormUnit>,
    limit_per_language: Option<usize>,
    out: Option<PathBuf>,
    log: Option<PathBuf>,
    summary: Option<PathBuf>,
}

/// Fully resolved training run, echoed into the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub mode: TrainMode,
    pub corpus: PathBuf,
    pub dev: Option<PathBuf>,
    pub merges: usize,
    pub window: usize,
    pub alpha: f64,
    pub hybrid_split: f64,
    pub unit: NormUnit,
    pub limit_per_language: Option<usize>,
    pub out: PathBuf,
    pub log: PathBuf,
    pub summary: PathBuf,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

impl TrainArgs {
    fn resolve(self) -> Result<TrainRun> {
        let file = match &self.config {
            Some(p) => {
                let raw = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                serde_json::from_str::<TrainFile>(&raw)
                    .map_err(|e| usage(format!("{}: {e}", p.display())))?
            }
            None => TrainFile::default(),
        };
        let flag_mode = if self.classical {
            Some(TrainMode::Classical)
        } else if self.parity {
            Some(TrainMode::Parity)
        } else if self.no_dev {
            Some(TrainMode::NoDev)
        } else {
            None
        };
        let mode = flag_mode.or(file.mode).unwrap_or(TrainMode::Parity);
        let corpus = self
            .corpus
            .or(file.corpus)
            .ok_or_else(|| usage("--corpus is required"))?;
        let merges = self
            .merges
            .or(file.merges)
            .ok_or_else(|| usage("--merges is required"))?;
        let dev = self.dev.or(file.dev);
        let unit = match (mode, self.unit.or(file.unit)) {
            (TrainMode::NoDev, Some(u)) if u != NormUnit::Bytes => {
                return Err(usage("--no-dev measures compression in bytes"))
            }
            (TrainMode::NoDev, _) => NormUnit::Bytes,
            (_, u) => u.unwrap_or(NormUnit::Lines),
        };
        if mode == TrainMode::Parity && dev.is_none() {
            return Err(usage("--parity needs --dev (or use --no-dev)"));
        }
        let hybrid_split = self.hybrid_split.or(file.hybrid_split).unwrap_or(0.0);
        if !(0.0..=1.0).contains(&hybrid_split) {
            return Err(usage(format!("--hybrid-split must be in [0, 1], got {hybrid_split}")));
        }
        let out = self.out.or(file.out).unwrap_or_else(|| PathBuf::from("model.txt"));
        Ok(TrainRun {
            mode,
            log: self
                .log
                .or(file.log)
                .unwrap_or_else(|| out.with_extension("log.jsonl")),
            summary: self
                .summary
                .or(file.summary)
                .unwrap_or_else(|| out.with_extension("summary.json")),
            out,
            corpus,
            dev,
            merges,
            window: self.window.or(file.window).unwrap_or(0),
            alpha: self.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA),
            hybrid_split,
            unit,
            limit_per_language: self.limit_per_language.or(file.limit_per_language),
        })
    }
}

impl TrainRun {
    pub fn parity_config(&self) -> ParityConfig {
        let config = match self.mode {
            TrainMode::Classical => return ParityConfig::classical(self.merges),
            TrainMode::Parity => ParityConfig::new(self.merges),
            TrainMode::NoDev => ParityConfig::new(self.merges).training_as_dev(),
        };
        let mut config = config
            .with_window(self.window, self.alpha)
            .with_hybrid_split(self.hybrid_split);
        if self.mode == TrainMode::Parity {
            config.unit = self.unit;
        }
        config
    }
}

#[derive(Debug, Serialize)]
struct CrRow {
    unit_total: u64,
    token_total: u64,
    cr: f64,
}

#[derive(Debug, Serialize)]
struct CrSummary {
    unit: NormUnit,
    languages: BTreeMap<String, CrRow>,
    /// Gini coefficient of tokens per unit.
    gini: f64,
}

impl CrSummary {
    fn new(table: &CrTable) -> Result<Self> {
        let costs: Vec<f64> = table
            .entries
            .iter()
            .map(|e| e.token_total as f64 / e.unit_total as f64)
            .collect();
        Ok(CrSummary {
            unit: table.unit,
            languages: table
                .entries
                .iter()
                .map(|e| {
                    (
                        e.lang.to_string(),
                        CrRow {
                            unit_total: e.unit_total,
                            token_total: e.token_total,
                            cr: e.cr(),
                        },
                    )
                })
                .collect(),
            gini: gini(&costs)?,
        })
    }
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    config: TrainRun,
    config_sha256: String,
    inputs: BTreeMap<String, String>,
    model_sha256: String,
    merges_learned: usize,
    vocab_size: usize,
    stop: StopStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    dev_cr: Option<CrSummary>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

fn load_dev(dir: &Path) -> Result<ParallelDevCorpus> {
    let langs = discover_dev_languages(dir)?;
    load_parallel_dev(dir, &langs)
}

fn dev_files(dir: &Path, dev: &ParallelDevCorpus) -> Vec<PathBuf> {
    dev.languages()
        .iter()
        .map(|l| dir.join(format!("{l}.txt")))
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let run = args.resolve()?;
    let config = run.parity_config();
    config.validate()?;

    let corpus = load_labeled_corpus(&run.corpus, run.limit_per_language)?;
    let mut inputs = BTreeMap::new();
    inputs.insert(run.corpus.display().to_string(), file_digest(&run.corpus)?);
    let base = run.corpus.parent().unwrap_or_else(|| Path::new("."));
    for entry in Manifest::read(&run.corpus)?.languages {
        let p = base.join(&entry.path);
        inputs.insert(p.display().to_string(), file_digest(&p)?);
    }
    let dev = match (&run.dev, run.mode) {
        (Some(dir), TrainMode::Classical | TrainMode::Parity) => {
            let dev = load_dev(dir)?;
            for p in dev_files(dir, &dev) {
                inputs.insert(p.display().to_string(), file_digest(&p)?);
            }
            Some(dev)
        }
        _ => None,
    };
    if let Some(dev) = &dev {
        for lang in corpus.languages() {
            if !dev.languages().contains(lang) {
                warn!("training language `{lang}` has no dev file and is never selected");
            }
        }
    }

    let training = match run.mode {
        TrainMode::Classical => train_classical(&corpus, run.merges)?,
        TrainMode::Parity => train_parity(&corpus, dev.as_ref(), &config)?,
        TrainMode::NoDev => train_no_dev(&corpus, &config)?,
    };
    let model = &training.model;

    // the incrementally tracked table must match a fresh encode
    let dev_cr = match (&training.cr_table, &dev) {
        (Some(tracked), _) => {
            let fresh = match run.mode {
                TrainMode::NoDev => CrTable::compute_training(&corpus, model)?,
                _ => CrTable::compute_parallel(
                    dev.as_ref().ok_or_else(|| Error::Invariant("dev corpus vanished".into()))?,
                    model,
                    run.unit,
                )?,
            };
            if &fresh != tracked {
                return Err(Error::Invariant(
                    "incremental compression table differs from re-encoding".into(),
                ));
            }
            Some(fresh)
        }
        (None, Some(dev)) => Some(CrTable::compute_parallel(dev, model, run.unit)?),
        (None, None) => None,
    };

    save_model(model, &run.out)?;
    write_file(&run.log, training.log.to_jsonl()?.as_bytes())?;
    let config_sha256 = sha256_hex(serde_json::to_string(&run)?.as_bytes());
    let summary = TrainSummary {
        config_sha256,
        inputs,
        model_sha256: model.digest(),
        merges_learned: model.num_merges(),
        vocab_size: model.vocab_size(),
        stop: training.log.stop,
        dev_cr: dev_cr.as_ref().map(CrSummary::new).transpose()?,
        config: run.clone(),
    };
    write_file(&run.summary, serde_json::to_string_pretty(&summary)?.as_bytes())?;
    if training.log.stop == StopStatus::Exhausted {
        warn!(
            "stopped after {} of {} merges: no pair occurs twice",
            model.num_merges(),
            run.merges
        );
    }
    Ok(())
}

#[derive(Debug, Args)]
struct CodecArgs {
    #[arg(long)]
    model: PathBuf,
    /// Read from this file instead of stdin
    #[arg(long)]
    input: Option<PathBuf>,
    /// Write to this file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Token ids instead of escaped token strings
    #[arg(long)]
    ids: bool,
}

impl CodecArgs {
    fn read_input(&self) -> Result<Vec<u8>> {
        match &self.input {
            Some(p) => fs::read(p).map_err(|e| Error::io(p, e)),
            None => {
                let mut buf = Vec::new();
                io::stdin()
                    .lock()
                    .read_to_end(&mut buf)
                    .map_err(|e| Error::io("<stdin>", e))?;
                Ok(buf)
            }
        }
    }

    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.output {
            Some(p) => Box::new(BufWriter::new(
                fs::File::create(p).map_err(|e| Error::io(p, e))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

/// Lines without their `\n`; a final unterminated line counts as a line.
fn split_lines(input: &[u8]) -> impl Iterator<Item = &[u8]> {
    let body = input.strip_suffix(b"\n").unwrap_or(input);
    let empty = input.is_empty();
    body.split(|&b| b == b'\n').filter(move |_| !empty)
}

/// One output line per input line: space-separated escaped tokens or ids.
pub fn encode_lines(model: &TokenizerModel, input: &[u8], ids: bool) -> Vec<u8> {
    let mut out = Vec::new();
    for line in split_lines(input) {
        let fields: Vec<String> = if ids {
            model.encode_ids(line).iter().map(|i| i.to_string()).collect()
        } else {
            model.encode(line).iter().map(|t| escape(t.as_bytes())).collect()
        };
        out.extend_from_slice(fields.join(" ").as_bytes());
        out.push(b'\n');
    }
    out
}

/// Inverse of [`encode_lines`].
pub fn decode_lines(model: &TokenizerModel, input: &[u8], ids: bool) -> Result<Vec<u8>> {
    let text = std::str::from_utf8(input)
        .map_err(|_| Error::InvalidInput("tokenized input is not UTF-8".into()))?;
    let mut out = Vec::new();
    for line in split_lines(text.as_bytes()) {
        let line = std::str::from_utf8(line).expect("split of valid UTF-8 at ASCII");
        let fields = line.split(' ').filter(|f| !f.is_empty());
        let bytes = if ids {
            let ids = fields
                .map(|f| {
                    f.parse::<TokenId>()
                        .map_err(|_| Error::InvalidInput(format!("bad token id `{f}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            model.decode_ids(&ids)?
        } else {
            let tokens = fields
                .map(|f| unescape(f).map(Token))
                .collect::<Result<Vec<_>>>()?;
            model.decode(&tokens)?
        };
        out.extend_from_slice(&bytes);
        out.push(b'\n');
    }
    Ok(out)
}

fn cmd_encode(args: CodecArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let input = args.read_input()?;
    let mut w = args.writer()?;
    w.write_all(&encode_lines(&model, &input, args.ids))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io("<output>", e))
}

fn cmd_decode(args: CodecArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let input = args.read_input()?;
    let out = decode_lines(&model, &input, args.ids)?;
    let mut w = args.writer()?;
    w.write_all(&out)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io("<output>", e))
}

#[derive(Debug, Args)]
struct MetricArgs {
    /// Directory of aligned `<lang>.txt` dev files
    #[arg(long)]
    dev: PathBuf,
    /// Compression units to report (repeatable; default all)
    #[arg(long = "unit")]
    units: Vec<NormUnit>,
    /// Rényi orders (repeatable; `inf` for min-entropy; default 2.5)
    #[arg(long = "renyi-alpha")]
    renyi_alphas: Vec<f64>,
    /// Gold segmentations, `word<TAB>morph|morph` per line
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Also write a CSV table here
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

impl MetricArgs {
    fn options(&self) -> Result<EvalOptions> {
        let mut opts = EvalOptions::default();
        if !self.units.is_empty() {
            opts.units = self.units.clone();
            opts.units.sort();
            opts.units.dedup();
        }
        if !self.renyi_alphas.is_empty() {
            opts.renyi_alphas = self.renyi_alphas.clone();
        }
        if let Some(p) = &self.gold {
            let raw = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            opts.gold = Some(parse_gold_tsv(&raw)?);
        }
        Ok(opts)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => write_file(p, text.as_bytes()),
            None => {
                let mut out = io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|e| Error::io("<stdout>", e))
            }
        }
    }
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    metrics: MetricArgs,
}

/// Named scalar rows of a report, in display order.
pub fn report_rows(r: &MetricReport) -> Vec<(String, f64)> {
    let g = &r.global;
    let mut rows = vec![
        ("vocab_size".to_string(), r.provenance.vocab_size as f64),
        ("merges".to_string(), r.provenance.merges as f64),
        ("gini".to_string(), g.gini),
        ("cr_spread".to_string(), g.cr_spread),
    ];
    for (unit, cr) in &g.metrics.compression {
        rows.push((format!("cr_{unit}_ratio_of_sums"), cr.ratio_of_sums));
        rows.push((format!("cr_{unit}_mean_of_ratios"), cr.mean_of_ratios));
    }
    rows.push(("fertility".into(), g.metrics.fertility));
    rows.push(("vocab_utilization".into(), g.metrics.vocab_utilization));
    rows.push(("type_token_ratio".into(), g.metrics.type_token_ratio));
    rows.push(("avg_token_rank".into(), g.metrics.avg_token_rank));
    for (a, h) in &g.metrics.renyi_entropy {
        rows.push((format!("renyi_{a}"), *h));
    }
    rows.push(("tokens_per_line".into(), g.metrics.tokens_per_line));
    for (name, v) in [
        ("morph_boundary_p", g.morph_boundary_p),
        ("morph_boundary_r", g.morph_boundary_r),
        ("morph_boundary_f1", g.morph_boundary_f1),
    ] {
        if let Some(v) = v {
            rows.push((name.into(), v));
        }
    }
    for (lang, m) in &r.per_language {
        for (unit, cr) in &m.compression {
            rows.push((format!("{lang}.cr_{unit}"), cr.ratio_of_sums));
        }
        rows.push((format!("{lang}.tokens_per_line"), m.tokens_per_line));
        rows.push((format!("{lang}.fertility"), m.fertility));
        rows.push((format!("{lang}.vocab_utilization"), m.vocab_utilization));
    }
    rows
}

fn eval_csv(r: &MetricReport) -> String {
    let mut out = String::from("metric,value\n");
    for (name, v) in report_rows(r) {
        out.push_str(&format!("{name},{v}\n"));
    }
    out
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let dev = load_dev(&args.metrics.dev)?;
    let report = full_report(&model, &dev, &args.metrics.options()?)?;
    if let Some(p) = &args.metrics.csv {
        write_file(p, eval_csv(&report).as_bytes())?;
    }
    args.metrics
        .emit(&(serde_json::to_string_pretty(&report)? + "\n"))
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Two or more model files
    #[arg(long, num_args = 2.., required = true)]
    models: Vec<PathBuf>,
    #[command(flatten)]
    metrics: MetricArgs,
}

/// Table of `(model name, report)` columns as aligned text and CSV.
pub fn compare_table(columns: &[(String, MetricReport)]) -> (String, String) {
    let rows: Vec<Vec<(String, f64)>> = columns.iter().map(|(_, r)| report_rows(r)).collect();
    let mut names: Vec<String> = Vec::new();
    for r in &rows {
        for (n, _) in r {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    let cell = |col: usize, name: &str| {
        rows[col]
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| format!("{v:.6}"))
            .unwrap_or_else(|| "-".into())
    };
    let mut csv = String::from("metric");
    for (m, _) in columns {
        csv.push(',');
        csv.push_str(m);
    }
    csv.push('\n');

    let w0 = names.iter().map(String::len).max().unwrap_or(6).max(6);
    let widths: Vec<usize> = columns.iter().map(|(m, _)| m.len().max(12)).collect();
    let mut text = format!("{:<w0$}", "metric");
    for ((m, _), w) in columns.iter().zip(&widths) {
        text.push_str(&format!("  {m:>w$}"));
    }
    text.push('\n');
    for name in &names {
        text.push_str(&format!("{name:<w0$}"));
        csv.push_str(name);
        for (c, w) in widths.iter().enumerate() {
            let v = cell(c, name);
            text.push_str(&format!("  {v:>w$}"));
            csv.push(',');
            csv.push_str(&v);
        }
        text.push('\n');
        csv.push('\n');
    }
    (text, csv)
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let dev = load_dev(&args.metrics.dev)?;
    let opts = args.metrics.options()?;
    let mut models = args.models.clone();
    models.sort_by(|a, b| a.file_name().cmp(&b.file_name()).then_with(|| a.cmp(b)));
    let mut columns = Vec::new();
    for path in &models {
        let model = load_model(path)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        columns.push((name, full_report(&model, &dev, &opts)?));
    }
    let sizes: Vec<usize> = columns.iter().map(|(_, r)| r.provenance.vocab_size).collect();
    if sizes.windows(2).any(|w| w[0] != w[1]) {
        warn!("vocabulary sizes differ: {sizes:?}");
    }
    let (text, csv) = compare_table(&columns);
    if let Some(p) = &args.metrics.csv {
        write_file(p, csv.as_bytes())?;
    }
    args.metrics.emit(&text)
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON corpus spec; defaults to the three-language preset
    #[arg(long)]
    spec: Option<PathBuf>,
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let spec = match &args.spec {
        Some(p) => {
            let raw = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&raw).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => SynthSpec::three_languages(),
    };
    let out = generate_synthetic(&spec, args.seed, &args.out)?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{}", serde_json::to_string_pretty(&out.summary)?)
        .map_err(|e| Error::io("<stdout>", e))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 usage error, 2 data error, 3 internal
/// invariant violation.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
