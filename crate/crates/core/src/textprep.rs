//! Tweet normalization and emoji handling.
//!
//! The cleaning steps run in this order:
//!
//! 1. URLs (`http://`, `https://`, `www.`, `t.co/`) and `@mentions` are removed.
//! 2. Runs of whitespace collapse to a single space.
//! 3. ASCII and Arabic-Indic digits are removed.
//! 4. `#` and `_` become spaces, splitting hashtags and snake-joined words.
//! 5. Runs of three or more identical characters condense to one.
//! 6. Arabic diacritics (U+064B..=U+0652) and tatweel (U+0640) are removed.
//! 7. Emoji grapheme clusters are separated from neighbouring text by spaces.
//!
//! Later steps can expose input for earlier ones (removing a digit may reveal
//! a URL, removing diacritics may create a run, separating an emoji may put a
//! word boundary in front of a URL), so the sequence is repeated until the
//! text stops changing.
//!
//! The cleaned text is split on whitespace into tokens, and the
//! [`EmojiPolicy`] decides whether emoji tokens are dropped, kept, or kept
//! with a weight.

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::LazyLock;
use thiserror::Error;
use unicode_properties::emoji::{is_regional_indicator, UnicodeEmoji};
use unicode_segmentation::UnicodeSegmentation;

static URL_OR_MENTION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:https?://|www\.|t\.co/)\S*|@\w+").expect("static pattern")
});

const TATWEEL: char = '\u{0640}';
const VARIATION_SELECTOR_16: char = '\u{FE0F}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmojiMode {
    Strip,
    Keep,
    Weighted,
}

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("emoji weight for {key:?} must be positive and finite, got {weight}")]
    BadWeight { key: String, weight: f64 },
    #[error("lexicon key {0:?} is not a single emoji")]
    NotEmoji(String),
    #[error("lexicon line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("cannot read lexicon {path}: {msg}")]
    Io { path: String, msg: String },
}

/// How emoji tokens are treated after cleaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmojiPolicy {
    pub mode: EmojiMode,
    /// Emoji (without U+FE0F) to weight multiplier. Only consulted in weighted mode.
    pub lexicon: BTreeMap<String, f64>,
    /// Weight for emojis missing from the lexicon in weighted mode.
    pub default_weight: f64,
}

impl EmojiPolicy {
    pub fn strip() -> Self {
        Self {
            mode: EmojiMode::Strip,
            lexicon: BTreeMap::new(),
            default_weight: 1.0,
        }
    }

    pub fn keep() -> Self {
        Self {
            mode: EmojiMode::Keep,
            ..Self::strip()
        }
    }

    pub fn weighted(
        lexicon: BTreeMap<String, f64>,
        default_weight: f64,
    ) -> Result<Self, PolicyError> {
        let lexicon = lexicon
            .into_iter()
            .map(|(k, w)| (lexicon_key(&k), w))
            .collect();
        let policy = Self {
            mode: EmojiMode::Weighted,
            lexicon,
            default_weight,
        };
        policy.validate()?;
        Ok(policy)
    }

    /// Weighted mode with the bundled seed lexicon and default weight 1.0.
    pub fn weighted_default() -> Self {
        Self::weighted(default_lexicon(), 1.0).expect("bundled lexicon is valid")
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        check_weight("<default>", self.default_weight)?;
        for (key, &weight) in &self.lexicon {
            if !is_single_emoji(key) {
                return Err(PolicyError::NotEmoji(key.clone()));
            }
            check_weight(key, weight)?;
        }
        Ok(())
    }

    fn weight_of(&self, emoji: &str) -> f64 {
        match self.mode {
            EmojiMode::Weighted => self
                .lexicon
                .get(&lexicon_key(emoji))
                .copied()
                .unwrap_or(self.default_weight),
            _ => 1.0,
        }
    }
}

fn check_weight(key: &str, weight: f64) -> Result<(), PolicyError> {
    if weight.is_finite() && weight > 0.0 {
        Ok(())
    } else {
        Err(PolicyError::BadWeight {
            key: key.to_string(),
            weight,
        })
    }
}

fn lexicon_key(emoji: &str) -> String {
    emoji
        .chars()
        .filter(|&c| c != VARIATION_SELECTOR_16)
        .collect()
}

/// Parses `emoji<TAB>weight` lines; `#` starts a comment line.
pub fn parse_lexicon(text: &str) -> Result<BTreeMap<String, f64>, PolicyError> {
    let mut lexicon = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = |msg: &str| PolicyError::Syntax {
            line: idx + 1,
            msg: msg.to_string(),
        };
        let (emoji, weight) = line
            .split_once('\t')
            .ok_or_else(|| syntax("expected <emoji><TAB><weight>"))?;
        let emoji = emoji.trim();
        let weight: f64 = weight
            .trim()
            .parse()
            .map_err(|_| syntax("weight is not a number"))?;
        if !is_single_emoji(emoji) {
            return Err(PolicyError::NotEmoji(emoji.to_string()));
        }
        check_weight(emoji, weight)?;
        lexicon.insert(lexicon_key(emoji), weight);
    }
    Ok(lexicon)
}

pub fn load_lexicon(path: &Path) -> Result<BTreeMap<String, f64>, PolicyError> {
    let text = fs::read_to_string(path).map_err(|e| PolicyError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_lexicon(&text)
}

pub const DEFAULT_LEXICON_TSV: &str = include_str!("../config/emoji_lexicon.tsv");

pub fn default_lexicon() -> BTreeMap<String, f64> {
    parse_lexicon(DEFAULT_LEXICON_TSV).expect("bundled lexicon parses")
}

/// A cleaned token and its feature weight (1.0 except weighted emojis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleanText {
    pub tokens: Vec<Token>,
}

impl CleanText {
    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Tokens joined with single spaces.
    pub fn render(&self) -> String {
        self.texts().join(" ")
    }

    /// Like [`render`](Self::render), but tokens whose weight is not 1 are
    /// written as `token|weight`.
    pub fn render_weighted(&self) -> String {
        self.tokens
            .iter()
            .map(|t| {
                if t.weight == 1.0 {
                    t.text.clone()
                } else {
                    format!("{}|{:?}", t.text, t.weight)
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// True for a grapheme cluster that renders as an emoji.
///
/// A cluster counts as emoji when its first scalar has `Emoji=Yes` without
/// being an `Emoji_Component` (which excludes digits, `#`, `*` and skin-tone
/// modifiers), or is a regional indicator (flags).
pub fn is_emoji_grapheme(grapheme: &str) -> bool {
    grapheme
        .chars()
        .next()
        .is_some_and(|c| (c.is_emoji_char() && !c.is_emoji_component()) || is_regional_indicator(c))
}

fn is_single_emoji(s: &str) -> bool {
    let mut graphemes = s.graphemes(true);
    matches!((graphemes.next(), graphemes.next()), (Some(g), None) if is_emoji_grapheme(g))
}

fn is_removed_digit(c: char) -> bool {
    c.is_ascii_digit() || ('\u{0660}'..='\u{0669}').contains(&c)
}

fn is_arabic_diacritic(c: char) -> bool {
    ('\u{064B}'..='\u{0652}').contains(&c)
}

fn clean_pass(text: &str) -> String {
    let without_links = URL_OR_MENTION.replace_all(text, " ");

    let mut collapsed = String::with_capacity(without_links.len());
    let mut in_space = false;
    for c in without_links.chars() {
        if c.is_whitespace() {
            if !in_space {
                collapsed.push(' ');
            }
            in_space = true;
        } else {
            collapsed.push(c);
            in_space = false;
        }
    }

    let split: String = collapsed
        .chars()
        .filter(|&c| !is_removed_digit(c))
        .map(|c| if c == '#' || c == '_' { ' ' } else { c })
        .collect();

    let mut condensed = String::with_capacity(split.len());
    let chars: Vec<char> = split.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let run = chars[i..].iter().take_while(|&&d| d == c).count();
        let keep = if run >= 3 { 1 } else { run };
        condensed.extend(std::iter::repeat_n(c, keep));
        i += run;
    }

    let plain: String = condensed
        .chars()
        .filter(|&c| c != TATWEEL && !is_arabic_diacritic(c))
        .collect();

    isolate_emojis(&plain)
}

fn isolate_emojis(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut after_emoji = false;
    for g in text.graphemes(true) {
        let space = g.chars().all(char::is_whitespace);
        let emoji = is_emoji_grapheme(g);
        if (emoji || after_emoji)
            && !space
            && !out.is_empty()
            && !out.ends_with(char::is_whitespace)
        {
            out.push(' ');
        }
        out.push_str(g);
        after_emoji = emoji;
    }
    out
}

/// Applies the cleaning steps (everything except emoji handling and
/// tokenization) until a fixed point.
pub fn clean(raw: &str) -> String {
    let mut current = raw.to_string();
    loop {
        let next = clean_pass(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Splits cleaned text on whitespace and isolates emoji clusters as tokens.
fn tokenize(cleaned: &str) -> Vec<(String, bool)> {
    let mut out = Vec::new();
    for piece in cleaned.split_whitespace() {
        let mut pending = String::new();
        for g in piece.graphemes(true) {
            if is_emoji_grapheme(g) {
                if !pending.is_empty() {
                    out.push((std::mem::take(&mut pending), false));
                }
                out.push((g.to_string(), true));
            } else {
                pending.push_str(g);
            }
        }
        if !pending.is_empty() {
            out.push((pending, false));
        }
    }
    out
}

pub fn normalize(raw: &str, policy: &EmojiPolicy) -> CleanText {
    let tokens = tokenize(&clean(raw))
        .into_iter()
        .filter_map(|(text, emoji)| {
            if !emoji {
                return Some(Token { text, weight: 1.0 });
            }
            match policy.mode {
                EmojiMode::Strip => None,
                EmojiMode::Keep | EmojiMode::Weighted => {
                    let weight = policy.weight_of(&text);
                    Some(Token { text, weight })
                }
            }
        })
        .collect();
    CleanText { tokens }
}

/// Whether normalizing the rendered output reproduces the output.
pub fn is_idempotent(raw: &str, policy: &EmojiPolicy) -> bool {
    let once = normalize(raw, policy);
    normalize(&once.render(), policy) == once
}
