//! Experiment grids: the cross product of a few config axes over one base
//! config.
//!
//! ```toml
//! schema_version = 1
//! loss_modes = ["equal", "static", "dynamic"]
//! uncertainty_modes = ["none", "equal", "weighted", "dynamic"]
//! emoji_modes = ["strip", "keep", "weighted"]
//! k_selected = [10, 20, 30, 40, "all"]
//! static_loss_weights = [{ offensive = 0.7, violent = 0.15, vulgar = 0.15 }]
//! ```
//!
//! An omitted axis takes the base config's value. Cells are numbered in
//! nested order: loss mode outermost, then uncertainty mode, emoji mode, k,
//! and static weights innermost.

use crate::config::{emoji_policy, LexiconSource};
use mtal::acquisition::UncertaintyMode;
use mtal::model::Example;
use mtal::report::RunReport;
use mtal::textprep::EmojiMode;
use mtal::trainer::{LossMode, SelectionSize, TrainConfig};
use mtal::TaskTriple;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const GRID_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub schema_version: u32,
    pub loss_modes: Option<Vec<LossMode>>,
    pub uncertainty_modes: Option<Vec<UncertaintyMode>>,
    pub emoji_modes: Option<Vec<EmojiMode>>,
    pub k_selected: Option<Vec<SelectionSize>>,
    pub static_loss_weights: Option<Vec<TaskTriple<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axes {
    pub loss_modes: Vec<LossMode>,
    pub uncertainty_modes: Vec<UncertaintyMode>,
    pub emoji_modes: Vec<EmojiMode>,
    pub k_selected: Vec<SelectionSize>,
    pub static_loss_weights: Vec<TaskTriple<f64>>,
}

impl GridFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Fills omitted axes from `base`; explicitly empty axes are errors.
    pub fn axes(self, base: &TrainConfig) -> Result<Axes, Vec<String>> {
        let mut errors = Vec::new();
        if self.schema_version != GRID_SCHEMA_VERSION {
            errors.push(format!(
                "schema_version {} is not supported (expected {GRID_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        fn axis<T>(name: &str, v: Option<Vec<T>>, default: T, errors: &mut Vec<String>) -> Vec<T> {
            match v {
                None => vec![default],
                Some(v) if v.is_empty() => {
                    errors.push(format!("axis {name} is empty"));
                    v
                }
                Some(v) => v,
            }
        }
        let axes = Axes {
            loss_modes: axis("loss_modes", self.loss_modes, base.loss_mode, &mut errors),
            uncertainty_modes: axis(
                "uncertainty_modes",
                self.uncertainty_modes,
                base.uncertainty_mode,
                &mut errors,
            ),
            emoji_modes: axis(
                "emoji_modes",
                self.emoji_modes,
                base.emoji.mode,
                &mut errors,
            ),
            k_selected: axis("k_selected", self.k_selected, base.k_selected, &mut errors),
            static_loss_weights: axis(
                "static_loss_weights",
                self.static_loss_weights,
                base.static_loss_weights,
                &mut errors,
            ),
        };
        if errors.is_empty() {
            Ok(axes)
        } else {
            Err(errors)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub loss_mode: LossMode,
    pub uncertainty_mode: UncertaintyMode,
    pub emoji_mode: EmojiMode,
    pub k_selected: SelectionSize,
    pub static_loss_weights: TaskTriple<f64>,
    /// Resolved config, or why it could not be built.
    pub config: Result<TrainConfig, String>,
}

pub fn emoji_name(mode: EmojiMode) -> &'static str {
    match mode {
        EmojiMode::Strip => "strip",
        EmojiMode::Keep => "keep",
        EmojiMode::Weighted => "weighted",
    }
}

fn weights_label(w: &TaskTriple<f64>) -> String {
    format!("{}-{}-{}", w.offensive, w.violent, w.vulgar)
}

impl Cell {
    /// File-system friendly name, unique within a grid.
    pub fn label(&self) -> String {
        format!(
            "{:03}-{}-{}-{}-k{}-w{}",
            self.index,
            self.loss_mode.name(),
            self.uncertainty_mode.name(),
            emoji_name(self.emoji_mode),
            self.k_selected,
            weights_label(&self.static_loss_weights)
        )
    }
}

/// All cells in their fixed order.
pub fn enumerate(
    axes: &Axes,
    base: &TrainConfig,
    lexicon: &LexiconSource,
    default_emoji_weight: f64,
) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &loss_mode in &axes.loss_modes {
        for &uncertainty_mode in &axes.uncertainty_modes {
            for &emoji_mode in &axes.emoji_modes {
                for &k_selected in &axes.k_selected {
                    for &static_loss_weights in &axes.static_loss_weights {
                        let config = build(
                            base,
                            loss_mode,
                            uncertainty_mode,
                            emoji_mode,
                            k_selected,
                            static_loss_weights,
                            lexicon,
                            default_emoji_weight,
                        );
                        cells.push(Cell {
                            index: cells.len(),
                            loss_mode,
                            uncertainty_mode,
                            emoji_mode,
                            k_selected,
                            static_loss_weights,
                            config,
                        });
                    }
                }
            }
        }
    }
    cells
}

#[allow(clippy::too_many_arguments)]
fn build(
    base: &TrainConfig,
    loss_mode: LossMode,
    uncertainty_mode: UncertaintyMode,
    emoji_mode: EmojiMode,
    k_selected: SelectionSize,
    static_loss_weights: TaskTriple<f64>,
    lexicon: &LexiconSource,
    default_emoji_weight: f64,
) -> Result<TrainConfig, String> {
    let emoji = if emoji_mode == base.emoji.mode {
        base.emoji.clone()
    } else {
        emoji_policy(emoji_mode, lexicon, default_emoji_weight)?
    };
    let cfg = TrainConfig {
        loss_mode,
        uncertainty_mode,
        k_selected,
        static_loss_weights,
        emoji,
        ..base.clone()
    };
    cfg.validate().map_err(|e| e.join("; "))?;
    Ok(cfg)
}

/// Encoded splits for one emoji mode.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Vec<Example>,
    pub dev: Vec<Example>,
    pub test: Vec<Example>,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub outcome: Result<RunReport, String>,
    pub seconds: f64,
}

fn f1(rep: &RunReport, task: mtal::Task) -> String {
    rep.test[task]
        .as_ref()
        .map_or_else(|| "NA".to_string(), |m| m.macro_f1.to_string())
}

pub const SUMMARY_COLUMNS: &[&str] = &[
    "cell",
    "loss_mode",
    "uncertainty_mode",
    "emoji",
    "k_selected",
    "static_loss_weights",
    "status",
    "epochs",
    "best_epoch",
    "best_dev_offensive_macro_f1",
    "test_offensive_macro_f1",
    "test_violent_macro_f1",
    "test_vulgar_macro_f1",
    "cumulative_selected",
    "config_hash",
];

/// Tab-separated summary, one row per cell. Metric values are printed with
/// full round-trip precision, so they equal the per-cell reports exactly.
pub fn summary_tsv(results: &[CellResult]) -> String {
    let mut out = SUMMARY_COLUMNS.join("\t");
    out.push('\n');
    for r in results {
        let c = &r.cell;
        let mut row = vec![
            c.label(),
            c.loss_mode.name().to_string(),
            c.uncertainty_mode.name().to_string(),
            emoji_name(c.emoji_mode).to_string(),
            c.k_selected.to_string(),
            weights_label(&c.static_loss_weights),
        ];
        match &r.outcome {
            Ok(rep) => row.extend([
                "ok".to_string(),
                rep.epochs.len().to_string(),
                rep.best_epoch.to_string(),
                rep.best_dev_offensive_macro_f1.to_string(),
                f1(rep, mtal::Task::Offensive),
                f1(rep, mtal::Task::Violent),
                f1(rep, mtal::Task::Vulgar),
                rep.cumulative_selected.to_string(),
                rep.config_hash.clone(),
            ]),
            Err(e) => {
                row.push(format!("failed: {}", e.replace(['\t', '\n'], " ")));
                row.extend(std::iter::repeat_n(
                    "NA".to_string(),
                    SUMMARY_COLUMNS.len() - 7,
                ));
            }
        }
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

/// Markdown tables of test offensive macro F1 (in percent): one table per
/// emoji mode, k and static-weight combination, loss modes as rows and
/// uncertainty modes as columns.
pub fn summary_markdown(results: &[CellResult], axes: &Axes) -> String {
    let mut groups: BTreeMap<usize, Vec<&CellResult>> = BTreeMap::new();
    let per_group = axes.emoji_modes.len() * axes.k_selected.len() * axes.static_loss_weights.len();
    for r in results {
        groups.entry(r.cell.index % per_group).or_default().push(r);
    }
    let failed = results.iter().filter(|r| r.outcome.is_err()).count();
    let mut out = String::from("# Grid summary\n\n");
    let _ = writeln!(
        out,
        "{} cells, {} failed. Values are test offensive macro F1 (%); see summary.tsv for exact values.\n",
        results.len(),
        failed
    );
    for cells in groups.values() {
        let head = &cells[0].cell;
        let _ = writeln!(
            out,
            "## emoji={}, k={}, static weights={}\n",
            emoji_name(head.emoji_mode),
            head.k_selected,
            weights_label(&head.static_loss_weights)
        );
        out.push_str("| loss \\ uncertainty |");
        for m in &axes.uncertainty_modes {
            let _ = write!(out, " {} |", m.name());
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(axes.uncertainty_modes.len()));
        out.push('\n');
        for lm in &axes.loss_modes {
            let _ = write!(out, "| {} |", lm.name());
            for um in &axes.uncertainty_modes {
                let value = cells
                    .iter()
                    .filter(|r| r.cell.loss_mode == *lm && r.cell.uncertainty_mode == *um)
                    .map(|r| match &r.outcome {
                        Ok(rep) => rep
                            .test_offensive_macro_f1()
                            .map_or_else(|| "NA".to_string(), |f| format!("{:.2}", 100.0 * f)),
                        Err(_) => "FAILED".to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(" / ");
                let _ = write!(out, " {value} |");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
