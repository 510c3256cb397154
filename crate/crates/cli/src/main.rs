use clap::{Args, Parser, Subcommand, ValueEnum};
use mtal::textprep::EmojiMode;
use mtal_cli::commands::{
    self, CliError, DataArgs, GridArgs, PreprocessArgs, TrainArgs, ValidateArgs,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Multi-task active learning for offensive-speech detection.
///
/// Exit codes: 0 success, 1 runtime failure, 2 invalid input or config.
#[derive(Parser)]
#[command(name = "mtal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check corpus files and print per-split label statistics.
    Validate {
        /// Config providing the column layout and label spellings.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        data: DataFlags,
        /// Also compare counts with the published OSACT2022 split sizes.
        #[arg(long)]
        expect_osact2022: bool,
    },
    /// Train one model and write report.json, model.ckpt and timing.json.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        data: DataFlags,
        #[arg(long)]
        out: PathBuf,
        /// Replace the config's seed.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Run every cell of an experiment grid and write per-cell reports plus summaries.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[command(flatten)]
        data: DataFlags,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: one per core).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Clean a file of tweets, one per line.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Take the emoji policy from this config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        emoji: Option<EmojiArg>,
        /// Emoji weight lexicon (TSV: emoji, weight) for the weighted policy.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Read text from this zero-based tab-separated column instead of the whole line.
        #[arg(long)]
        text_column: Option<usize>,
    },
}

#[derive(Args)]
struct DataFlags {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
}

impl From<DataFlags> for DataArgs {
    fn from(d: DataFlags) -> Self {
        DataArgs {
            train: d.train,
            dev: d.dev,
            test: d.test,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EmojiArg {
    Strip,
    Keep,
    Weighted,
}

impl From<EmojiArg> for EmojiMode {
    fn from(e: EmojiArg) -> Self {
        match e {
            EmojiArg::Strip => EmojiMode::Strip,
            EmojiArg::Keep => EmojiMode::Keep,
            EmojiArg::Weighted => EmojiMode::Weighted,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate {
            config,
            data,
            expect_osact2022,
        } => {
            let splits = [
                ("train", data.train),
                ("dev", data.dev),
                ("test", data.test),
            ]
            .into_iter()
            .filter_map(|(n, p)| p.map(|p| (n.to_string(), p)))
            .collect();
            let args = ValidateArgs {
                config,
                splits,
                expect_osact2022,
            };
            commands::validate(&args, &mut std::io::stdout().lock())
        }
        Command::Train {
            config,
            data,
            out,
            seed_override,
        } => {
            let report = commands::train_cmd(&TrainArgs {
                config,
                data: data.into(),
                out: out.clone(),
                seed_override,
            })?;
            let f1 = report
                .test_offensive_macro_f1()
                .map_or_else(|| "NA".to_string(), |f| format!("{f:.4}"));
            println!(
                "epochs={} best_epoch={} best_dev_offensive_macro_f1={:.4} test_offensive_macro_f1={f1} cumulative_selected={} out={}",
                report.epochs.len(),
                report.best_epoch,
                report.best_dev_offensive_macro_f1,
                report.cumulative_selected,
                out.display()
            );
            Ok(())
        }
        Command::Grid {
            config,
            grid,
            data,
            out,
            jobs,
            seed_override,
        } => {
            let summary = commands::grid_cmd(&GridArgs {
                config,
                grid,
                data: data.into(),
                out: out.clone(),
                jobs,
                seed_override,
            })?;
            for r in &summary.results {
                match &r.outcome {
                    Ok(rep) => println!(
                        "{} ok test_offensive_macro_f1={}",
                        r.cell.label(),
                        rep.test_offensive_macro_f1()
                            .map_or_else(|| "NA".to_string(), |f| format!("{f:.4}"))
                    ),
                    Err(e) => eprintln!("{} failed: {e}", r.cell.label()),
                }
            }
            let failed = summary.failed();
            println!(
                "cells={} failed={failed} summary={}",
                summary.results.len(),
                out.join("summary.tsv").display()
            );
            if failed > 0 {
                Err(CliError::Runtime(format!("{failed} grid cell(s) failed")))
            } else {
                Ok(())
            }
        }
        Command::Preprocess {
            input,
            output,
            config,
            emoji,
            lexicon,
            text_column,
        } => {
            commands::preprocess(&PreprocessArgs {
                input,
                output,
                config,
                emoji: emoji.map(Into::into),
                lexicon,
                text_column,
            })?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
