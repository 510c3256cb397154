//! Experiment config files.
//!
//! Configs are TOML. Every section except `[corpus]` is optional and every
//! key inside a section falls back to the built-in default; unknown keys are
//! errors. Relative paths resolve against the config file's directory.
//!
//! ```toml
//! schema_version = 1
//!
//! [corpus]
//! has_header = false
//! columns = { id = 0, text = 1, offensive = 2, hate = 3, vulgar = 4, violent = 5 }
//! # optional label spellings, matched case-insensitively
//! labels.offensive = { positive = "OFF", negative = "NOT_OFF" }
//!
//! [data]                      # optional; --train/--dev/--test override
//! train = "data/train.tsv"
//! dev = "data/dev.tsv"
//! test = "data/test.tsv"
//!
//! [train]
//! batch_size = 64
//! k_selected = 10             # or "all"
//! uncertainty_mode = "equal"  # none | equal | weighted | dynamic
//! loss_mode = "dynamic"       # equal | static | dynamic
//! static_loss_weights = { offensive = 0.7, violent = 0.15, vulgar = 0.15 }
//! patience = 3
//! min_improvement = 1e-6
//! max_epochs = 20
//! seed = 42
//! lr = 0.01
//! hidden = 64
//!
//! [uncertainty]
//! weights = { offensive = 2.0, violent = 1.0, vulgar = 1.0 }
//! dynamic = { t_min = 0.75, w_min = 0.5, w_max = 2.0, initial_offensive = 2.0, violent_coeff = 0.6666666666666666, vulgar_coeff = 0.5 }
//!
//! [adam]
//! beta1 = 0.9
//! beta2 = 0.999
//! epsilon = 1e-8
//! weight_decay = 0.01
//!
//! [encoder]
//! dim = 262144                # power of two
//! word_orders = [1, 2]
//! char_orders = [3, 4]
//! hash_seed = 0
//!
//! [emoji]
//! mode = "weighted"           # strip | keep | weighted
//! lexicon = "emoji_lexicon.tsv"  # omit for the bundled lexicon
//! default_weight = 1.0
//! ```

use mtal::acquisition::{DynamicWeightConfig, UncertaintyMode, UncertaintyWeights};
use mtal::corpus::{default_label_tokens, ColumnMapping, LabelTokens, SplitSchema};
use mtal::encoder::EncoderConfig;
use mtal::model::AdamConfig;
use mtal::textprep::{default_lexicon, load_lexicon, EmojiMode, EmojiPolicy};
use mtal::trainer::{LossMode, SelectionSize, TrainConfig};
use mtal::TaskTriple;
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub corpus: CorpusSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub uncertainty: UncertaintySection,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub emoji: EmojiSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub columns: ColumnMapping,
    #[serde(default)]
    pub has_header: bool,
    #[serde(default)]
    pub labels: LabelsSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelsSection {
    pub offensive: Option<LabelTokens>,
    pub violent: Option<LabelTokens>,
    pub vulgar: Option<LabelTokens>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub batch_size: Option<usize>,
    pub k_selected: Option<SelectionSize>,
    pub uncertainty_mode: Option<UncertaintyMode>,
    pub loss_mode: Option<LossMode>,
    pub static_loss_weights: Option<TaskTriple<f64>>,
    pub patience: Option<usize>,
    pub min_improvement: Option<f64>,
    pub max_epochs: Option<usize>,
    pub seed: Option<u64>,
    pub lr: Option<f64>,
    pub hidden: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySection {
    pub weights: Option<TaskTriple<f64>>,
    #[serde(default)]
    pub dynamic: DynamicWeightConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmojiSection {
    pub mode: EmojiMode,
    pub lexicon: Option<PathBuf>,
    pub default_weight: f64,
}

impl Default for EmojiSection {
    fn default() -> Self {
        Self {
            mode: EmojiMode::Weighted,
            lexicon: None,
            default_weight: 1.0,
        }
    }
}

/// A config file after defaults, path resolution and validation.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub train: TrainConfig,
    pub schema: SplitSchema,
    pub data: DataSection,
    /// Lexicon used when a grid switches a run to weighted emojis.
    pub lexicon_source: LexiconSource,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LexiconSource {
    Bundled,
    File(PathBuf),
}

/// Problems found while loading a config, all reported together.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors {
    pub path: PathBuf,
    pub errors: Vec<String>,
}

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config {}:", self.path.display())?;
        for e in &self.errors {
            write!(f, "\n  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Builds an emoji policy for `mode`, reading the lexicon if needed.
pub fn emoji_policy(
    mode: EmojiMode,
    source: &LexiconSource,
    default_weight: f64,
) -> Result<EmojiPolicy, String> {
    match mode {
        EmojiMode::Strip => Ok(EmojiPolicy::strip()),
        EmojiMode::Keep => Ok(EmojiPolicy::keep()),
        EmojiMode::Weighted => {
            let lexicon = match source {
                LexiconSource::Bundled => default_lexicon(),
                LexiconSource::File(p) => load_lexicon(p).map_err(|e| e.to_string())?,
            };
            EmojiPolicy::weighted(lexicon, default_weight).map_err(|e| e.to_string())
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Applies defaults and validates. `base` is the directory relative paths
    /// are resolved against.
    pub fn resolve(self, base: &Path) -> Result<Resolved, Vec<String>> {
        let mut errors = Vec::new();
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            errors.push(format!(
                "schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            ));
        }

        let defaults = default_label_tokens();
        let labels = TaskTriple::new(
            self.corpus.labels.offensive.unwrap_or(defaults.offensive),
            self.corpus.labels.violent.unwrap_or(defaults.violent),
            self.corpus.labels.vulgar.unwrap_or(defaults.vulgar),
        );
        let schema = SplitSchema {
            columns: self.corpus.columns,
            has_header: self.corpus.has_header,
            labels,
        };

        let lexicon_source = match &self.emoji.lexicon {
            Some(p) => LexiconSource::File(resolve_path(base, p)),
            None => LexiconSource::Bundled,
        };
        let emoji = match emoji_policy(self.emoji.mode, &lexicon_source, self.emoji.default_weight)
        {
            Ok(p) => p,
            Err(e) => {
                errors.push(format!("emoji: {e}"));
                EmojiPolicy::strip()
            }
        };

        let uncertainty_weights = match self.uncertainty.weights.map(UncertaintyWeights::new) {
            None => UncertaintyWeights::default(),
            Some(Ok(w)) => w,
            Some(Err(e)) => {
                errors.push(format!("uncertainty.weights: {e}"));
                UncertaintyWeights::default()
            }
        };

        let d = TrainConfig::default();
        let t = self.train;
        let train = TrainConfig {
            batch_size: t.batch_size.unwrap_or(d.batch_size),
            k_selected: t.k_selected.unwrap_or(d.k_selected),
            uncertainty_mode: t.uncertainty_mode.unwrap_or(d.uncertainty_mode),
            loss_mode: t.loss_mode.unwrap_or(d.loss_mode),
            static_loss_weights: t.static_loss_weights.unwrap_or(d.static_loss_weights),
            uncertainty_weights,
            dynamic: self.uncertainty.dynamic,
            patience: t.patience.unwrap_or(d.patience),
            min_improvement: t.min_improvement.unwrap_or(d.min_improvement),
            max_epochs: t.max_epochs.unwrap_or(d.max_epochs),
            seed: t.seed.unwrap_or(d.seed),
            lr: t.lr.unwrap_or(d.lr),
            hidden: t.hidden.unwrap_or(d.hidden),
            adam: self.adam,
            emoji,
            encoder: self.encoder,
        };
        if let Err(es) = train.validate() {
            errors.extend(es);
        }

        let data = DataSection {
            train: self.data.train.map(|p| resolve_path(base, &p)),
            dev: self.data.dev.map(|p| resolve_path(base, &p)),
            test: self.data.test.map(|p| resolve_path(base, &p)),
        };

        if errors.is_empty() {
            Ok(Resolved {
                train,
                schema,
                data,
                lexicon_source,
            })
        } else {
            Err(errors)
        }
    }
}

/// Reads, parses and resolves a config file.
pub fn load(path: &Path) -> Result<Resolved, ConfigErrors> {
    let fail = |errors| ConfigErrors {
        path: path.to_path_buf(),
        errors,
    };
    let text = std::fs::read_to_string(path).map_err(|e| fail(vec![e.to_string()]))?;
    let file = ConfigFile::parse(&text).map_err(|e| fail(vec![e]))?;
    let base = path.parent().unwrap_or(Path::new("."));
    file.resolve(base).map_err(fail)
}
