//! Acceptance suite: one line per criterion, non-zero exit on any failure.
//!
//! Criterion 11 needs the real corpus; point `MTAL_OSACT2022_DIR` at a
//! directory holding `train.tsv`, `dev.tsv` and `test.tsv` (six columns: id,
//! text, offensive, hate, vulgar, violent; the test file may stop after the
//! offensive column). Without it the criterion reports SKIP.

use mtal::acquisition::{
    binary_entropy, combine_dynamic, combine_equal, combine_weighted, dynamic_offensive_weight,
    select_top_k, DynamicWeightConfig, UncertaintyMode, UncertaintyWeights,
};
use mtal::corpus::{load_split, osact2022, split_stats, ColumnMapping, Sample, SplitSchema};
use mtal::encoder::{EncoderConfig, FeatureVector, HashingEncoder};
use mtal::metrics::{macro_f1, ConfusionCounts};
use mtal::model::{loss_and_gradients, Example, ParamId, Params};
use mtal::synthetic::{generate, SyntheticSpec};
use mtal::textprep::{clean, is_idempotent, normalize, EmojiPolicy};
use mtal::trainer::{prepare, train, LossMode, SelectionSize, TrainConfig};
use mtal::{Task, TaskTriple};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {elapsed:.2?}, limit {limit:?}")
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// 1 ------------------------------------------------------------------------

fn entropy_suite() -> Check {
    let t0 = Instant::now();
    let ln2 = std::f64::consts::LN_2;
    ensure((binary_entropy(0.5) - ln2).abs() <= 1e-12, || {
        format!("H(0.5) = {}", binary_entropy(0.5))
    })?;
    let mut r = rng(1);
    for _ in 0..1000 {
        let p: f64 = r.random();
        let (a, b) = (binary_entropy(p), binary_entropy(1.0 - p));
        ensure((a - b).abs() <= 1e-12, || {
            format!("H({p}) = {a} but H(1-p) = {b}")
        })?;
    }
    let grid: Vec<f64> = (1..10_000).map(|i| i as f64 * 0.5 / 10_000.0).collect();
    for w in grid.windows(2) {
        ensure(binary_entropy(w[0]) < binary_entropy(w[1]), || {
            format!("not increasing between {} and {}", w[0], w[1])
        })?;
    }
    within(t0.elapsed(), Duration::from_secs(1))?;
    Ok("ln 2 pinned, 1000 symmetric draws, 9999-point monotone grid".into())
}

// 2 ------------------------------------------------------------------------

fn random_entropies(r: &mut ChaCha8Rng) -> TaskTriple<f64> {
    TaskTriple::from_fn(|_| binary_entropy(r.random()))
}

fn combiner_reductions() -> Check {
    let t0 = Instant::now();
    let mut r = rng(2);
    let ones = UncertaintyWeights::new(TaskTriple::splat(1.0)).unwrap();
    for _ in 0..1000 {
        let h = random_entropies(&mut r);
        ensure(combine_weighted(h, ones) == combine_equal(h), || {
            format!("unit weights disagree with equal combiner at {h:?}")
        })?;
        let w = TaskTriple::from_fn(|_| r.random_range(0.01..5.0));
        let c: f64 = r.random_range(0.01..100.0);
        let base = combine_weighted(h, UncertaintyWeights::new(w).unwrap());
        let scaled = combine_weighted(h, UncertaintyWeights::new(w.map(|x| x * c)).unwrap());
        ensure((base - scaled).abs() <= 1e-12 * base.abs().max(1.0), || {
            format!("scaling weights by {c} moved {base} to {scaled}")
        })?;
    }
    let dcfg = DynamicWeightConfig::default();
    for _ in 0..100 {
        let batch: Vec<TaskTriple<f64>> = (0..64).map(|_| random_entropies(&mut r)).collect();
        let w_off: f64 = r.random_range(0.5..2.0);
        let k = r.random_range(1..=64);
        let top = |w: f64| {
            let scores: Vec<f64> = batch
                .iter()
                .map(|&h| combine_dynamic(h, w, &dcfg))
                .collect();
            let mut s = select_top_k(&scores, k);
            s.sort_unstable();
            s
        };
        let reference = top(w_off);
        for c in [0.25, 0.5, 2.0, 3.7, 11.0] {
            ensure(top(w_off * c) == reference, || {
                format!("top-{k} changed when w_off scaled by {c}")
            })?;
        }
    }
    within(t0.elapsed(), Duration::from_secs(1))?;
    Ok("unit weights exact on 1000 triples, scale invariance, 100 dynamic top-k batches".into())
}

// 3 ------------------------------------------------------------------------

fn dynamic_weight_pins() -> Check {
    let cfg = DynamicWeightConfig::default();
    for (f1, want) in [(0.0, 1.75), (0.70, 1.05), (0.75, 1.0), (0.90, 0.85)] {
        let got = dynamic_offensive_weight(f1, &cfg);
        ensure((got - want).abs() <= 1e-12, || {
            format!("w_off({f1}) = {got}, want {want}")
        })?;
    }
    let eps = 1e-12;
    let left = dynamic_offensive_weight(0.75 - eps, &cfg);
    let right = dynamic_offensive_weight(0.75, &cfg);
    ensure((left - right).abs() <= 1e-9, || {
        format!("jump at 0.75: {left} vs {right}")
    })?;
    let mut prev = f64::INFINITY;
    for i in 0..=10_000 {
        let w = dynamic_offensive_weight(i as f64 / 10_000.0, &cfg);
        ensure(w <= prev, || {
            format!("increase at f1 = {}", i as f64 / 10_000.0)
        })?;
        prev = w;
    }
    Ok("4 pinned values, continuous at 0.75, non-increasing on 10001 points".into())
}

// 4 ------------------------------------------------------------------------

fn random_param(r: &mut ChaCha8Rng, dim: usize, hidden: usize) -> ParamId {
    let task = *Task::ALL.choose(r).unwrap();
    match r.random_range(0..10) {
        0..=5 => ParamId::SharedWeight {
            row: r.random_range(0..dim),
            col: r.random_range(0..hidden),
        },
        6 => ParamId::SharedBias(r.random_range(0..hidden)),
        7 | 8 => ParamId::HeadWeight(task, r.random_range(0..hidden)),
        _ => ParamId::HeadBias(task),
    }
}

fn random_label(r: &mut ChaCha8Rng) -> Option<bool> {
    if r.random_bool(0.15) {
        None
    } else {
        Some(r.random_bool(0.5))
    }
}

fn gradient_oracle() -> Check {
    let t0 = Instant::now();
    let (dim, hidden, step) = (32, 4, 1e-4);
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for model in 0..10 {
        let mut params = Params::glorot(dim, hidden, &mut r);
        for b in params.shared_bias.iter_mut() {
            *b = r.random_range(-0.3..0.3);
        }
        for task in Task::ALL {
            params.heads[task].bias = r.random_range(-0.5..0.5);
        }
        let examples: Vec<Example> = (0..8)
            .map(|_| Example {
                features: FeatureVector::from_dense(
                    &(0..dim)
                        .map(|_| r.random_range(-1.0..1.0))
                        .collect::<Vec<_>>(),
                ),
                labels: TaskTriple::from_fn(|_| random_label(&mut r)),
            })
            .collect();
        let batch: Vec<&Example> = examples.iter().collect();
        let weights = TaskTriple::from_fn(|_| r.random_range(0.1..1.0));
        let analytic = loss_and_gradients(&params, &batch, weights).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let id = random_param(&mut r, dim, hidden);
            let mut probe = params.clone();
            let orig = probe.get(id);
            *probe.get_mut(id) = orig + step;
            let up = loss_and_gradients(&probe, &batch, weights).unwrap().total;
            *probe.get_mut(id) = orig - step;
            let down = loss_and_gradients(&probe, &batch, weights).unwrap().total;
            let numeric = (up - down) / (2.0 * step);
            let a = analytic.gradients.get(id);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            ensure(rel < 1e-4, || {
                format!(
                    "model {model}, {id:?}: analytic {a:e}, numeric {numeric:e}, rel err {rel:e}"
                )
            })?;
        }
    }
    within(t0.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "200 parameters over 10 models, worst rel err {worst:.1e}"
    ))
}

// 5 ------------------------------------------------------------------------

fn selection_oracle() -> Check {
    let t0 = Instant::now();
    let mut r = rng(5);
    for case in 0..1000 {
        let n = r.random_range(0..=80);
        let discrete = r.random_bool(0.5);
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if discrete {
                    r.random_range(0..4) as f64 * 0.25
                } else {
                    r.random()
                }
            })
            .collect();
        let k = r.random_range(0..=n + 2);
        let mut brute: Vec<usize> = (0..n).collect();
        brute.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
        brute.truncate(k);
        let got = select_top_k(&scores, k);
        ensure(got == brute, || {
            format!("case {case}: k={k} got {got:?}, want {brute:?}")
        })?;
    }
    within(t0.elapsed(), Duration::from_secs(1))?;
    Ok("1000 vectors, half with heavy ties".into())
}

// 6 ------------------------------------------------------------------------

fn oracle_macro_f1(pred: &[bool], gold: &[bool]) -> f64 {
    let class_f1 = |c: bool| {
        let tp = pred
            .iter()
            .zip(gold)
            .filter(|&(&p, &y)| p == c && y == c)
            .count();
        let fp = pred
            .iter()
            .zip(gold)
            .filter(|&(&p, &y)| p == c && y != c)
            .count();
        let fne = pred
            .iter()
            .zip(gold)
            .filter(|&(&p, &y)| p != c && y == c)
            .count();
        if tp + fp + fne == 0 {
            return 1.0;
        }
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fne == 0 {
            0.0
        } else {
            tp as f64 / (tp + fne) as f64
        };
        if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    };
    (class_f1(true) + class_f1(false)) / 2.0
}

fn macro_f1_oracle() -> Check {
    let t0 = Instant::now();
    let mut r = rng(6);
    for case in 0..1000 {
        let n = r.random_range(1..=60);
        let bias: f64 = r.random();
        let gold: Vec<bool> = (0..n).map(|_| r.random_bool(bias)).collect();
        let pred: Vec<bool> = (0..n).map(|_| r.random_bool(bias)).collect();
        let got = macro_f1(&pred, &gold).map_err(|e| e.to_string())?;
        let want = oracle_macro_f1(&pred, &gold);
        ensure(got == want, || format!("case {case}: {got} != {want}"))?;
    }
    let pinned = ConfusionCounts {
        tp: 2,
        fp: 1,
        fn_: 1,
        tn: 6,
    }
    .macro_f1();
    ensure((pinned - 16.0 / 21.0).abs() <= 1e-12, || {
        format!("pinned case gave {pinned}")
    })?;
    within(t0.elapsed(), Duration::from_secs(1))?;
    Ok("1000 vectors exact, tp=2 fp=1 fn=1 tn=6 gives 16/21".into())
}

// shared training fixtures -------------------------------------------------

struct Splits {
    train: Vec<Example>,
    dev: Vec<Example>,
    test: Vec<Example>,
}

fn synthetic_splits(n_train: usize, n_dev: usize, n_test: usize, seed: u64, dim: usize) -> Splits {
    let samples = generate(&SyntheticSpec::new(n_train + n_dev + n_test, seed));
    let encoder = HashingEncoder::new(EncoderConfig {
        dim,
        ..EncoderConfig::default()
    })
    .unwrap();
    let policy = EmojiPolicy::weighted_default();
    let all = prepare(&samples, &policy, &encoder);
    let (train, rest) = all.split_at(n_train);
    let (dev, test) = rest.split_at(n_dev);
    Splits {
        train: train.to_vec(),
        dev: dev.to_vec(),
        test: test.to_vec(),
    }
}

fn small_config(dim: usize) -> TrainConfig {
    TrainConfig {
        encoder: EncoderConfig {
            dim,
            ..EncoderConfig::default()
        },
        ..TrainConfig::default()
    }
}

// 7 ------------------------------------------------------------------------

fn table3_bookkeeping() -> Check {
    let t0 = Instant::now();
    let data = synthetic_splits(8_557, 500, 200, 7, 1024);
    let base = small_config(1024);
    let cases = [
        (
            "k=10, 4 epochs",
            SelectionSize::Top(10),
            UncertaintyMode::Equal,
            4,
            5_360,
        ),
        (
            "k=All, 1 epoch",
            SelectionSize::All,
            UncertaintyMode::Equal,
            1,
            8_557,
        ),
        (
            "k=30, 1 epoch",
            SelectionSize::Top(30),
            UncertaintyMode::Equal,
            1,
            4_020,
        ),
        (
            "none, 1 epoch",
            SelectionSize::Top(10),
            UncertaintyMode::None,
            1,
            8_557,
        ),
    ];
    let mut seen = Vec::new();
    for (label, k, mode, epochs, want) in cases {
        let cfg = TrainConfig {
            k_selected: k,
            uncertainty_mode: mode,
            max_epochs: epochs,
            patience: epochs,
            ..base.clone()
        };
        let out = train(&cfg, &data.train, &data.dev, &data.test).map_err(|e| e.to_string())?;
        let rep = &out.report;
        ensure(rep.epochs.len() == epochs, || {
            format!("{label}: ran {} epochs", rep.epochs.len())
        })?;
        ensure(rep.cumulative_selected == want, || {
            format!("{label}: cumulative {} != {want}", rep.cumulative_selected)
        })?;
        let summed: usize = rep.epochs.iter().map(|e| e.selected).sum();
        ensure(summed == want, || {
            format!("{label}: epoch counts sum to {summed}")
        })?;
        seen.push(format!("{label} -> {}", rep.cumulative_selected));
    }
    within(t0.elapsed(), Duration::from_secs(120))?;
    Ok(seen.join(", "))
}

// 8 ------------------------------------------------------------------------

fn synthetic_convergence() -> Check {
    let t0 = Instant::now();
    let data = synthetic_splits(2_000, 500, 500, 8, 1024);
    let base = small_config(1024);
    let mut problems = Vec::new();
    let mut summary = Vec::new();
    let mut min_f1 = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    let mut max_gap: f64 = 0.0;
    for loss_mode in LossMode::ALL {
        let run = |mode: UncertaintyMode, k: SelectionSize| {
            let cfg = TrainConfig {
                loss_mode,
                uncertainty_mode: mode,
                k_selected: k,
                ..base.clone()
            };
            train(&cfg, &data.train, &data.dev, &data.test).map(|o| o.report)
        };
        let full = run(UncertaintyMode::None, SelectionSize::All).map_err(|e| e.to_string())?;
        let full_f1 = full.test_offensive_macro_f1().unwrap();
        for mode in UncertaintyMode::ALL {
            let rep = if mode == UncertaintyMode::None {
                full.clone()
            } else {
                run(mode, SelectionSize::Top(10)).map_err(|e| e.to_string())?
            };
            let cell = format!("{}/{}", loss_mode.name(), mode.name());
            let dev = rep.best_dev_offensive_macro_f1;
            min_f1 = min_f1.min(dev);
            if dev < 0.95 {
                problems.push(format!("{cell}: dev offensive macro F1 {dev:.4} < 0.95"));
            }
            if mode != UncertaintyMode::None {
                let ratio = rep.cumulative_selected as f64 / full.cumulative_selected as f64;
                let gap = (rep.test_offensive_macro_f1().unwrap() - full_f1).abs();
                max_ratio = max_ratio.max(ratio);
                max_gap = max_gap.max(gap);
                if ratio >= 0.25 {
                    problems.push(format!(
                        "{cell}: k=10 used {} samples, {:.1}% of k=All's {}",
                        rep.cumulative_selected,
                        100.0 * ratio,
                        full.cumulative_selected
                    ));
                }
                if gap > 0.03 {
                    problems.push(format!("{cell}: test F1 gap {gap:.4} to k=All"));
                }
            }
            summary.push(format!("{cell}={dev:.3}/{}ep", rep.epochs.len()));
        }
    }
    if !problems.is_empty() {
        return Err(format!("{} [{}]", problems.join("; "), summary.join(" ")));
    }
    within(t0.elapsed(), Duration::from_secs(300))?;
    Ok(format!(
        "12 cells, min dev F1 {min_f1:.4}, max sample ratio {:.1}%, max F1 gap {max_gap:.4}",
        100.0 * max_ratio
    ))
}

// 9 ------------------------------------------------------------------------

fn determinism() -> Check {
    let data = synthetic_splits(600, 200, 200, 9, 1024);
    let base = TrainConfig {
        max_epochs: 5,
        ..small_config(1024)
    };
    let mut checked = 0;
    for (loss_mode, mode, k) in [
        (
            LossMode::Dynamic,
            UncertaintyMode::Equal,
            SelectionSize::Top(10),
        ),
        (
            LossMode::Dynamic,
            UncertaintyMode::Dynamic,
            SelectionSize::Top(20),
        ),
        (
            LossMode::Static,
            UncertaintyMode::Weighted,
            SelectionSize::Top(30),
        ),
        (LossMode::Equal, UncertaintyMode::None, SelectionSize::All),
    ] {
        let cfg = TrainConfig {
            loss_mode,
            uncertainty_mode: mode,
            k_selected: k,
            ..base.clone()
        };
        let a = train(&cfg, &data.train, &data.dev, &data.test).map_err(|e| e.to_string())?;
        let b = train(&cfg, &data.train, &data.dev, &data.test).map_err(|e| e.to_string())?;
        ensure(a.report.to_json() == b.report.to_json(), || {
            format!("{}/{} reports differ", loss_mode.name(), mode.name())
        })?;
        ensure(a.selections == b.selections, || {
            "selected index sequences differ".into()
        })?;
        checked += 1;
    }
    Ok(format!(
        "{checked} configs, byte-identical reports and selections"
    ))
}

// 10 -----------------------------------------------------------------------

const GOLDEN: &[(&str, &str)] = &[
    ("@user مرحبا", "مرحبا"),
    ("مرحبا https://t.co/abc", "مرحبا"),
    ("زوروا www.example.com الان", "زوروا الان"),
    ("HTTP://EXAMPLE.COM/x نص", "نص"),
    ("t.co/xyz كلام", "كلام"),
    ("@a_b @c نص", "نص"),
    ("@user https://t.co/x", ""),
    ("نص   مع\tمسافات\n", "نص مع مسافات"),
    ("عام 2022 جميل", "عام جميل"),
    ("رقم ٣٤٥ هنا", "رقم هنا"),
    ("abc123def", "abcdef"),
    ("١٢٣", ""),
    ("#السعودية_اليوم", "السعودية اليوم"),
    ("#tag", "tag"),
    ("snake_case_word", "snake case word"),
    ("#_#", ""),
    ("هههههه", "ه"),
    ("ههه", "ه"),
    ("هه", "هه"),
    ("cooool", "col"),
    ("!!!", "!"),
    (
        "\u{0645}\u{064E}\u{0631}\u{0652}\u{062D}\u{064E}\u{0628}\u{064B}\u{0627}",
        "مرحبا",
    ),
    ("جميـــل", "جميل"),
    ("كـتـاب", "كتاب"),
    ("ه\u{064E}ه\u{064E}ه", "ه"),
    ("h1ttp://x.com a", "a"),
    ("رائع😂", "رائع 😂"),
    ("😡😡😡", "😡"),
    ("🇸🇦نص", "🇸🇦 نص"),
    ("👍🏽", "👍🏽"),
    ("", ""),
    ("@user #عاجل: 3 قتلى!!! https://t.co/a", "عاجل: قتلى!"),
];

const GOLDEN_STRIP: &[(&str, &str)] = &[
    ("رائع 😂 جدا", "رائع جدا"),
    ("😡🤬", ""),
    ("🇸🇦 نص 👍🏽", "نص"),
];

const GOLDEN_WEIGHTED: &[(&str, &str)] = &[
    ("غاضب 😡", "غاضب 😡|2.0"),
    ("😂 ههههه", "😂 ه"),
    ("❤️", "❤️"),
    ("🤬🤬", "🤬|2.0 🤬|2.0"),
];

const POOLS: &[(u32, u32)] = &[
    (0x20, 0x7E),
    (0x0621, 0x064A),
    (0x064B, 0x0652),
    (0x0640, 0x0640),
    (0x0660, 0x0669),
    (0x1F600, 0x1F64F),
    (0x1F1E6, 0x1F1FF),
    (0x1F3FB, 0x1F3FF),
    (0xFE0F, 0xFE0F),
    (0x200D, 0x200D),
    (0x00A0, 0x024F),
    (0x4E00, 0x4E20),
];

fn random_text(r: &mut ChaCha8Rng) -> String {
    let len = r.random_range(0..40);
    let mut s = String::new();
    for _ in 0..len {
        match r.random_range(0..12) {
            0 => s.push_str(
                ["http://", "www.", "t.co/", "@", "#", "_", " ", "\t"]
                    .choose(r)
                    .unwrap(),
            ),
            1 => {
                let c = char::from_u32(r.random_range(0x0621..=0x064A)).unwrap();
                for _ in 0..r.random_range(2..5) {
                    s.push(c);
                }
            }
            _ => {
                let &(lo, hi) = POOLS.choose(r).unwrap();
                s.push(char::from_u32(r.random_range(lo..=hi)).unwrap());
            }
        }
    }
    s
}

fn preprocessing_golden() -> Check {
    let t0 = Instant::now();
    let keep = EmojiPolicy::keep();
    let strip = EmojiPolicy::strip();
    let weighted = EmojiPolicy::weighted_default();
    for (raw, want) in GOLDEN {
        let got = normalize(raw, &keep).render();
        ensure(got == *want, || {
            format!("{raw:?}: got {got:?}, want {want:?}")
        })?;
    }
    for (raw, want) in GOLDEN_STRIP {
        let got = normalize(raw, &strip).render();
        ensure(got == *want, || {
            format!("strip {raw:?}: got {got:?}, want {want:?}")
        })?;
    }
    for (raw, want) in GOLDEN_WEIGHTED {
        let got = normalize(raw, &weighted).render_weighted();
        ensure(got == *want, || {
            format!("weighted {raw:?}: got {got:?}, want {want:?}")
        })?;
    }
    let mut r = rng(10);
    for _ in 0..1000 {
        let raw = random_text(&mut r);
        let once = clean(&raw);
        ensure(clean(&once) == once, || {
            format!("clean not idempotent on {raw:?}")
        })?;
        for policy in [&keep, &strip, &weighted] {
            ensure(is_idempotent(&raw, policy), || {
                format!("{:?} normalization not idempotent on {raw:?}", policy.mode)
            })?;
        }
    }
    within(t0.elapsed(), Duration::from_secs(1))?;
    let pairs = GOLDEN.len() + GOLDEN_STRIP.len() + GOLDEN_WEIGHTED.len();
    Ok(format!(
        "{pairs} golden pairs, idempotent on 1000 random strings"
    ))
}

// 11 -----------------------------------------------------------------------

fn osact_schema(path: &Path) -> Result<SplitSchema, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let width = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .map_or(6, |l| l.split('\t').count());
    let full = width >= 6;
    Ok(SplitSchema::new(ColumnMapping {
        id: 0,
        text: 1,
        offensive: 2,
        hate: full.then_some(3),
        vulgar: full.then_some(4),
        violent: full.then_some(5),
    }))
}

fn osact_counts(dir: PathBuf) -> Check {
    let mut report = Vec::new();
    for (name, expected) in [
        ("train", osact2022::TRAIN),
        ("dev", osact2022::DEV),
        ("test", osact2022::TEST),
    ] {
        let path = dir.join(format!("{name}.tsv"));
        let samples: Vec<Sample> =
            load_split(&path, &osact_schema(&path)?).map_err(|e| e.to_string())?;
        let stats = split_stats(&samples);
        let bad = stats.mismatches(&expected);
        ensure(bad.is_empty(), || format!("{name}: {}", bad.join("; ")))?;
        report.push(format!("{name} {}", stats.total));
    }
    Ok(report.join(", "))
}

type Criterion = Box<dyn Fn() -> Outcome>;

fn main() -> ExitCode {
    let criteria: Vec<(&str, Criterion)> = vec![
        ("entropy unit suite", Box::new(|| wrap(entropy_suite()))),
        (
            "combiner reductions",
            Box::new(|| wrap(combiner_reductions())),
        ),
        (
            "dynamic offensive weight pins",
            Box::new(|| wrap(dynamic_weight_pins())),
        ),
        ("gradient oracle", Box::new(|| wrap(gradient_oracle()))),
        ("selection oracle", Box::new(|| wrap(selection_oracle()))),
        ("macro F1 oracle", Box::new(|| wrap(macro_f1_oracle()))),
        (
            "cumulative selection bookkeeping",
            Box::new(|| wrap(table3_bookkeeping())),
        ),
        (
            "synthetic convergence",
            Box::new(|| wrap(synthetic_convergence())),
        ),
        ("determinism", Box::new(|| wrap(determinism()))),
        (
            "preprocessing golden suite",
            Box::new(|| wrap(preprocessing_golden())),
        ),
        (
            "OSACT2022 corpus counts",
            Box::new(|| match std::env::var_os("MTAL_OSACT2022_DIR") {
                Some(dir) => wrap(osact_counts(PathBuf::from(dir))),
                None => Outcome::Skip("MTAL_OSACT2022_DIR not set".into()),
            }),
        ),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let id = n + 1;
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| *f == id.to_string() || name.contains(f.as_str()))
        {
            continue;
        }
        let t0 = Instant::now();
        let outcome = check();
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Outcome::Pass(d) => println!("criterion {id:>2} PASS  {name} ({secs:.2}s): {d}"),
            Outcome::Skip(d) => println!("criterion {id:>2} SKIP  {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name} ({secs:.2}s): {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn wrap(c: Check) -> Outcome {
    match c {
        Ok(d) => Outcome::Pass(d),
        Err(d) => Outcome::Fail(d),
    }
}
