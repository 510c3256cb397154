//! Generated three-task corpora for tests and demos.
//!
//! Tweets are strings of pseudo-Arabic filler words. Offensive tweets carry at
//! least one offensive marker word; violent and vulgar tweets (always
//! offensive) also carry a marker of their own, so every task is separable
//! from the text alone. Mentions, URLs, digits, diacritics, elongations and
//! emojis are sprinkled in to exercise the cleaning pipeline.
//!
//! The default vocabulary is small so that, even after hashing into 1024
//! buckets, marker n-grams rarely share a bucket with filler n-grams and the
//! tasks stay separable in feature space.

use crate::corpus::Sample;
use crate::seed;
use crate::task::TaskTriple;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub samples: usize,
    /// Probability that a tweet is offensive.
    pub offensive_rate: f64,
    /// Probability that an offensive tweet is also violent.
    pub violent_rate: f64,
    /// Probability that an offensive tweet is also vulgar.
    pub vulgar_rate: f64,
    pub filler_words: (usize, usize),
    /// Distinct filler words and offensive marker words.
    pub vocab_sizes: (usize, usize),
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            offensive_rate: 0.5,
            violent_rate: 0.2,
            vulgar_rate: 0.25,
            filler_words: (3, 8),
            vocab_sizes: (20, 4),
            seed,
        }
    }
}

struct Vocab {
    filler: Vec<String>,
    offensive: Vec<String>,
    violent: Vec<String>,
    vulgar: Vec<String>,
}

// Letters only: no tatweel, no diacritics, so words survive cleaning intact.
const LETTERS: &[char] = &[
    'ا', 'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ',
    'ف', 'ق', 'ك', 'ل', 'م', 'ن', 'ه', 'و', 'ي',
];

fn word(rng: &mut ChaCha8Rng, len: usize) -> String {
    let mut w = String::new();
    let mut prev = None;
    while w.chars().count() < len {
        let c = *LETTERS.choose(rng).expect("non-empty");
        if Some(c) != prev {
            w.push(c);
            prev = Some(c);
        }
    }
    w
}

impl Vocab {
    fn new(rng: &mut ChaCha8Rng, (filler, offensive): (usize, usize)) -> Self {
        let mut seen = std::collections::BTreeSet::new();
        let mut take = |n: usize, rng: &mut ChaCha8Rng| -> Vec<String> {
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let len = rng.random_range(4..=7);
                let w = word(rng, len);
                if seen.insert(w.clone()) {
                    out.push(w);
                }
            }
            out
        };
        Self {
            filler: take(filler, rng),
            offensive: take(offensive, rng),
            violent: take(6, rng),
            vulgar: take(6, rng),
        }
    }
}

const NOISE_EMOJIS: &[&str] = &["😂", "🌹", "❤️", "🇸🇦", "😡", "👍🏽"];

/// Deterministic corpus for `spec`; ids are `syn-<n>`.
pub fn generate(spec: &SyntheticSpec) -> Vec<Sample> {
    let mut rng = seed::stream(spec.seed, "synthetic");
    let vocab = Vocab::new(&mut rng, spec.vocab_sizes);
    (0..spec.samples)
        .map(|n| {
            let offensive = rng.random_bool(spec.offensive_rate);
            let violent = offensive && rng.random_bool(spec.violent_rate);
            let vulgar = offensive && rng.random_bool(spec.vulgar_rate);

            let (lo, hi) = spec.filler_words;
            let mut words: Vec<String> = (0..rng.random_range(lo..=hi))
                .map(|_| vocab.filler.choose(&mut rng).expect("non-empty").clone())
                .collect();
            let mut insert = |w: &String, rng: &mut ChaCha8Rng| {
                let at = rng.random_range(0..=words.len());
                words.insert(at, w.clone());
            };
            if offensive {
                insert(
                    vocab.offensive.choose(&mut rng).expect("non-empty"),
                    &mut rng,
                );
            }
            if violent {
                insert(vocab.violent.choose(&mut rng).expect("non-empty"), &mut rng);
            }
            if vulgar {
                insert(vocab.vulgar.choose(&mut rng).expect("non-empty"), &mut rng);
            }

            let mut text = String::new();
            if rng.random_bool(0.3) {
                let _ = write!(text, "@user{} ", rng.random_range(0..1000));
            }
            for (i, w) in words.iter().enumerate() {
                if i > 0 {
                    text.push(' ');
                }
                match rng.random_range(0..20) {
                    0 => {
                        // elongated with tatweel and a diacritic
                        let mut cs = w.chars();
                        let first = cs.next().expect("non-empty word");
                        let _ = write!(text, "{first}\u{0640}\u{064E}{}", cs.as_str());
                    }
                    1 => {
                        let _ = write!(text, "#{w}");
                    }
                    2 => {
                        let _ = write!(text, "{w}{}", rng.random_range(0..100));
                    }
                    _ => text.push_str(w),
                }
            }
            if rng.random_bool(0.2) {
                let _ = write!(
                    text,
                    " {}",
                    NOISE_EMOJIS.choose(&mut rng).expect("non-empty")
                );
            }
            if rng.random_bool(0.2) {
                let _ = write!(text, " https://t.co/x{}", rng.random_range(0..10_000));
            }
            Sample {
                id: format!("syn-{n}"),
                raw_text: text,
                labels: TaskTriple::new(Some(offensive), Some(violent), Some(vulgar)),
            }
        })
        .collect()
}

/// Tab-separated rendering in the six-column layout
/// `id, text, offensive, hate, vulgar, violent`.
pub fn to_tsv(samples: &[Sample]) -> String {
    let label = |l: Option<bool>, pos: &str, neg: &str| match l {
        Some(true) => pos.to_string(),
        Some(false) => neg.to_string(),
        None => String::new(),
    };
    let mut out = String::new();
    for s in samples {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\tNOT_HS\t{}\t{}",
            s.id,
            s.raw_text,
            label(s.labels.offensive, "OFF", "NOT_OFF"),
            label(s.labels.vulgar, "VLG", "NOT_VLG"),
            label(s.labels.violent, "V", "NOT_V"),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_split, ColumnMapping, SplitSchema};

    #[test]
    fn deterministic_and_labeled() {
        let spec = SyntheticSpec::new(200, 1);
        let a = generate(&spec);
        assert_eq!(a, generate(&spec));
        assert_ne!(a, generate(&SyntheticSpec::new(200, 2)));
        assert!(a.iter().all(Sample::is_fully_labeled));
        for s in &a {
            if s.labels.violent == Some(true) || s.labels.vulgar == Some(true) {
                assert_eq!(s.labels.offensive, Some(true));
            }
        }
        let off = a
            .iter()
            .filter(|s| s.labels.offensive == Some(true))
            .count();
        assert!((70..130).contains(&off), "{off}");
    }

    #[test]
    fn tsv_round_trips() {
        let a = generate(&SyntheticSpec::new(50, 3));
        let schema = SplitSchema::new(ColumnMapping {
            id: 0,
            text: 1,
            offensive: 2,
            hate: Some(3),
            vulgar: Some(4),
            violent: Some(5),
        });
        let b = parse_split(std::io::Cursor::new(to_tsv(&a)), &schema).unwrap();
        assert_eq!(a, b);
    }
}
