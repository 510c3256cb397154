use crate::config::{self, Resolved};
use crate::grid::{self, CellResult, GridFile, Prepared};
use mtal::checkpoint::Checkpoint;
use mtal::corpus::{
    load_split, osact2022, require_fully_labeled, split_stats, CorpusError, Sample, SplitSchema,
};
use mtal::encoder::HashingEncoder;
use mtal::report::RunReport;
use mtal::textprep::{normalize, EmojiMode, EmojiPolicy};
use mtal::trainer::{prepare, train, TrainConfig, TrainError};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input or config: exit code 2.
    #[error("{0}")]
    Invalid(String),
    /// Failure while running: exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

fn io_err(what: &str, path: &Path, e: io::Error) -> CliError {
    CliError::Runtime(format!("cannot {what} {}: {e}", path.display()))
}

const MAX_LINE_DIAGNOSTICS: usize = 20;

fn corpus_err(e: CorpusError) -> CliError {
    match e {
        CorpusError::Io { .. } => CliError::Runtime(e.to_string()),
        CorpusError::Malformed { path, errors } => {
            let mut msg = format!("{}: {} malformed line(s)", path.display(), errors.len());
            for err in errors.iter().take(MAX_LINE_DIAGNOSTICS) {
                msg.push_str(&format!("\n  {err}"));
            }
            if errors.len() > MAX_LINE_DIAGNOSTICS {
                msg.push_str(&format!(
                    "\n  ... {} more",
                    errors.len() - MAX_LINE_DIAGNOSTICS
                ));
            }
            CliError::Invalid(msg)
        }
        CorpusError::Unlabeled { .. } => CliError::Invalid(e.to_string()),
    }
}

fn train_err(e: TrainError) -> CliError {
    match e {
        TrainError::Config(_)
        | TrainError::EmptyTrain
        | TrainError::NoDevLabels
        | TrainError::UnlabeledTrain { .. }
        | TrainError::MixedDims(..) => CliError::Invalid(e.to_string()),
        TrainError::Diverged { .. } | TrainError::Model(_) => CliError::Runtime(e.to_string()),
    }
}

fn load_config(path: &Path) -> Result<Resolved, CliError> {
    config::load(path).map_err(|e| CliError::Invalid(e.to_string()))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err("create", dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err("write", path, e))
}

// validate -----------------------------------------------------------------

pub struct ValidateArgs {
    pub config: PathBuf,
    pub splits: Vec<(String, PathBuf)>,
    pub expect_osact2022: bool,
}

/// Prints `key=value` statistics for each split to `out`. Fails with exit
/// code 2 on malformed lines or, with `expect_osact2022`, on count mismatches.
pub fn validate(args: &ValidateArgs, out: &mut impl Write) -> Result<(), CliError> {
    if args.splits.is_empty() {
        return Err(CliError::Invalid(
            "nothing to validate: pass --train, --dev and/or --test".into(),
        ));
    }
    let schema = load_config(&args.config)?.schema;
    let mut problems = Vec::new();
    for (name, path) in &args.splits {
        let samples = match load_split(path, &schema) {
            Ok(s) => s,
            Err(e @ CorpusError::Malformed { .. }) => {
                problems.push(corpus_err(e).to_string());
                continue;
            }
            Err(e) => return Err(corpus_err(e)),
        };
        let stats = split_stats(&samples);
        write!(out, "{}", stats.to_key_values(Some(name)))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        if args.expect_osact2022 {
            let expected = match name.as_str() {
                "train" => osact2022::TRAIN,
                "dev" => osact2022::DEV,
                _ => osact2022::TEST,
            };
            for m in stats.mismatches(&expected) {
                problems.push(format!("{name}: {m}"));
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invalid(problems.join("\n")))
    }
}

// train --------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct DataArgs {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

pub struct Splits {
    pub train: Vec<Sample>,
    pub dev: Vec<Sample>,
    pub test: Vec<Sample>,
}

fn load_splits(resolved: &Resolved, data: &DataArgs) -> Result<Splits, CliError> {
    let pick = |flag: &Option<PathBuf>, cfg: &Option<PathBuf>, name: &str| {
        flag.clone().or_else(|| cfg.clone()).ok_or_else(|| {
            CliError::Invalid(format!("no {name} split: pass --{name} or set data.{name}"))
        })
    };
    let paths = [
        pick(&data.train, &resolved.data.train, "train")?,
        pick(&data.dev, &resolved.data.dev, "dev")?,
        pick(&data.test, &resolved.data.test, "test")?,
    ];
    let load = |p: &PathBuf, schema: &SplitSchema| load_split(p, schema).map_err(corpus_err);
    let train = load(&paths[0], &resolved.schema)?;
    require_fully_labeled("train", &train).map_err(corpus_err)?;
    let dev = load(&paths[1], &resolved.schema)?;
    let test = load(&paths[2], &resolved.schema)?;
    Ok(Splits { train, dev, test })
}

fn encode(splits: &Splits, cfg: &TrainConfig) -> Result<Prepared, CliError> {
    let encoder =
        HashingEncoder::new(cfg.encoder.clone()).map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(Prepared {
        train: prepare(&splits.train, &cfg.emoji, &encoder),
        dev: prepare(&splits.dev, &cfg.emoji, &encoder),
        test: prepare(&splits.test, &cfg.emoji, &encoder),
    })
}

#[derive(Debug, Serialize)]
struct Timing {
    wall_clock_seconds: f64,
    epochs: usize,
}

pub struct TrainArgs {
    pub config: PathBuf,
    pub data: DataArgs,
    pub out: PathBuf,
    pub seed_override: Option<u64>,
}

/// Trains one model. Writes `report.json`, `model.ckpt` and `timing.json`
/// into the output directory and returns the report.
pub fn train_cmd(args: &TrainArgs) -> Result<RunReport, CliError> {
    let mut resolved = load_config(&args.config)?;
    if let Some(seed) = args.seed_override {
        resolved.train.seed = seed;
    }
    let splits = load_splits(&resolved, &args.data)?;
    let started = Instant::now();
    let data = encode(&splits, &resolved.train)?;
    let outcome = train(&resolved.train, &data.train, &data.dev, &data.test).map_err(train_err)?;
    let seconds = started.elapsed().as_secs_f64();

    let report = outcome.report;
    write_file(&args.out.join("report.json"), report.to_json().as_bytes())?;
    let ckpt = Checkpoint {
        config_hash: report.config_hash.clone(),
        state: outcome.model,
    };
    let path = args.out.join("model.ckpt");
    let file = fs::File::create(&path).map_err(|e| io_err("create", &path, e))?;
    let mut w = BufWriter::new(file);
    ckpt.write(&mut w)
        .and_then(|_| w.flush().map_err(Into::into))
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    write_timing(&args.out.join("timing.json"), seconds, report.epochs.len())?;
    Ok(report)
}

fn write_timing(path: &Path, seconds: f64, epochs: usize) -> Result<(), CliError> {
    let timing = Timing {
        wall_clock_seconds: seconds,
        epochs,
    };
    let mut json = serde_json::to_string_pretty(&timing).expect("timing is serializable");
    json.push('\n');
    write_file(path, json.as_bytes())
}

// grid ---------------------------------------------------------------------

pub struct GridArgs {
    pub config: PathBuf,
    pub grid: PathBuf,
    pub data: DataArgs,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub seed_override: Option<u64>,
}

pub struct GridSummary {
    pub results: Vec<CellResult>,
}

impl GridSummary {
    pub fn failed(&self) -> usize {
        self.results.iter().filter(|r| r.outcome.is_err()).count()
    }
}

/// Runs every cell and writes `cells/<label>/report.json` (plus
/// `timing.json`) per successful cell, `summary.tsv` and `summary.md`.
/// Failing cells are recorded and the rest still run.
pub fn grid_cmd(args: &GridArgs) -> Result<GridSummary, CliError> {
    let mut resolved = load_config(&args.config)?;
    if let Some(seed) = args.seed_override {
        resolved.train.seed = seed;
    }
    let text = fs::read_to_string(&args.grid).map_err(|e| io_err("read", &args.grid, e))?;
    let grid_file = GridFile::parse(&text)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", args.grid.display())))?;
    let axes = grid_file.axes(&resolved.train).map_err(|es| {
        CliError::Invalid(format!(
            "invalid grid {}:\n  - {}",
            args.grid.display(),
            es.join("\n  - ")
        ))
    })?;
    let default_weight = resolved.train.emoji.default_weight;
    let cells = grid::enumerate(
        &axes,
        &resolved.train,
        &resolved.lexicon_source,
        default_weight,
    );
    let splits = load_splits(&resolved, &args.data)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    // Encode once per emoji mode; every other axis leaves features unchanged.
    let mut prepared: BTreeMap<String, Prepared> = BTreeMap::new();
    for cell in &cells {
        let Ok(cfg) = &cell.config else { continue };
        let key = grid::emoji_name(cell.emoji_mode).to_string();
        if let std::collections::btree_map::Entry::Vacant(slot) = prepared.entry(key) {
            slot.insert(pool.install(|| encode(&splits, cfg))?);
        }
    }

    let results: Vec<CellResult> = pool.install(|| {
        cells
            .into_par_iter()
            .map(|cell| {
                let started = Instant::now();
                let outcome = cell.config.clone().and_then(|cfg| {
                    let data = &prepared[grid::emoji_name(cell.emoji_mode)];
                    train(&cfg, &data.train, &data.dev, &data.test)
                        .map(|o| o.report)
                        .map_err(|e| e.to_string())
                });
                CellResult {
                    cell,
                    outcome,
                    seconds: started.elapsed().as_secs_f64(),
                }
            })
            .collect()
    });

    for r in &results {
        if let Ok(rep) = &r.outcome {
            let dir = args.out.join("cells").join(r.cell.label());
            write_file(&dir.join("report.json"), rep.to_json().as_bytes())?;
            write_timing(&dir.join("timing.json"), r.seconds, rep.epochs.len())?;
        }
    }
    write_file(
        &args.out.join("summary.tsv"),
        grid::summary_tsv(&results).as_bytes(),
    )?;
    write_file(
        &args.out.join("summary.md"),
        grid::summary_markdown(&results, &axes).as_bytes(),
    )?;
    Ok(GridSummary { results })
}

// preprocess ---------------------------------------------------------------

pub struct PreprocessArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    pub config: Option<PathBuf>,
    pub emoji: Option<EmojiMode>,
    pub lexicon: Option<PathBuf>,
    /// Zero-based tab-separated field holding the text; whole line if unset.
    pub text_column: Option<usize>,
}

/// Writes one cleaned line per input line. Emoji weights other than 1 are
/// rendered as `token|weight`.
pub fn preprocess(args: &PreprocessArgs) -> Result<usize, CliError> {
    let base_policy = match &args.config {
        Some(p) => Some(load_config(p)?),
        None => None,
    };
    let policy = match (args.emoji, &args.lexicon, base_policy) {
        (None, None, Some(r)) => r.train.emoji,
        (mode, lexicon, base) => {
            let mode = mode
                .or(base.as_ref().map(|r| r.train.emoji.mode))
                .unwrap_or(EmojiMode::Weighted);
            let source = match lexicon {
                Some(p) => config::LexiconSource::File(p.clone()),
                None => base.map_or(config::LexiconSource::Bundled, |r| r.lexicon_source),
            };
            config::emoji_policy(mode, &source, 1.0).map_err(CliError::Invalid)?
        }
    };
    preprocess_with(args, &policy)
}

fn preprocess_with(args: &PreprocessArgs, policy: &EmojiPolicy) -> Result<usize, CliError> {
    let input = fs::File::open(&args.input).map_err(|e| io_err("open", &args.input, e))?;
    if let Some(dir) = args.output.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err("create", dir, e))?;
    }
    let output = fs::File::create(&args.output).map_err(|e| io_err("create", &args.output, e))?;
    let mut w = BufWriter::new(output);
    let mut n = 0;
    for line in io::BufReader::new(input).lines() {
        let line = line.map_err(|e| io_err("read", &args.input, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let text = match args.text_column {
            Some(c) => line.split('\t').nth(c).unwrap_or(""),
            None => line,
        };
        writeln!(w, "{}", normalize(text, policy).render_weighted())
            .map_err(|e| io_err("write", &args.output, e))?;
        n += 1;
    }
    w.flush().map_err(|e| io_err("write", &args.output, e))?;
    Ok(n)
}
