//! Tab-separated corpus ingestion (OSACT2022 layout) and split statistics.
//!
//! Each record carries an id, the raw tweet text and the task labels. The hate
//! column, when mapped, must be present but is never stored. Vulgar and violent
//! labels may be absent (test split), in which case the sample carries an
//! unlabeled marker for those tasks.

use crate::task::{Task, TaskTriple};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Per-task label; `None` marks an unlabeled task.
pub type Labels = TaskTriple<Option<bool>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub raw_text: String,
    pub labels: Labels,
}

impl Sample {
    pub fn is_fully_labeled(&self) -> bool {
        self.labels.values().iter().all(|l| l.is_some())
    }
}

/// Zero-based column positions. Vulgar and violent columns are optional.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    pub id: usize,
    pub text: usize,
    pub offensive: usize,
    #[serde(default)]
    pub hate: Option<usize>,
    #[serde(default)]
    pub vulgar: Option<usize>,
    #[serde(default)]
    pub violent: Option<usize>,
}

impl ColumnMapping {
    /// Number of fields every record must carry.
    pub fn width(&self) -> usize {
        [
            Some(self.id),
            Some(self.text),
            Some(self.offensive),
            self.hate,
            self.vulgar,
            self.violent,
        ]
        .into_iter()
        .flatten()
        .max()
        .unwrap_or(0)
            + 1
    }

    fn label_column(&self, task: Task) -> Option<usize> {
        match task {
            Task::Offensive => Some(self.offensive),
            Task::Violent => self.violent,
            Task::Vulgar => self.vulgar,
        }
    }
}

/// Positive/negative label spellings for one task. Matching ignores ASCII case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelTokens {
    pub positive: String,
    pub negative: String,
}

impl LabelTokens {
    pub fn new(positive: &str, negative: &str) -> Self {
        Self {
            positive: positive.to_string(),
            negative: negative.to_string(),
        }
    }

    fn parse(&self, token: &str) -> Option<bool> {
        if token.eq_ignore_ascii_case(&self.positive) {
            Some(true)
        } else if token.eq_ignore_ascii_case(&self.negative) {
            Some(false)
        } else {
            None
        }
    }
}

pub fn default_label_tokens() -> TaskTriple<LabelTokens> {
    TaskTriple::new(
        LabelTokens::new("OFF", "NOT_OFF"),
        LabelTokens::new("V", "NOT_V"),
        LabelTokens::new("VLG", "NOT_VLG"),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSchema {
    pub columns: ColumnMapping,
    pub has_header: bool,
    pub labels: TaskTriple<LabelTokens>,
}

impl SplitSchema {
    pub fn new(columns: ColumnMapping) -> Self {
        Self {
            columns,
            has_header: false,
            labels: default_label_tokens(),
        }
    }

    pub fn with_header(mut self, has_header: bool) -> Self {
        self.has_header = has_header;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineErrorKind {
    ColumnCount { expected: usize, found: usize },
    UnknownLabel { task: Task, token: String },
    MissingLabel { task: Task },
    EmptyText,
}

/// A malformed record, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub kind: LineErrorKind,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: ", self.line)?;
        match &self.kind {
            LineErrorKind::ColumnCount { expected, found } => {
                write!(
                    f,
                    "expected {expected} tab-separated columns, found {found}"
                )
            }
            LineErrorKind::UnknownLabel { task, token } => {
                write!(f, "unrecognized {task} label {token:?}")
            }
            LineErrorKind::MissingLabel { task } => write!(f, "missing {task} label"),
            LineErrorKind::EmptyText => f.write_str("empty text"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {} malformed line(s); first: {}", .errors.len(), .errors[0])]
    Malformed {
        path: PathBuf,
        errors: Vec<LineError>,
    },
    #[error("{split} split: {count} sample(s) lack a {task} label")]
    Unlabeled {
        split: String,
        task: Task,
        count: usize,
    },
}

/// Reads one split from disk. Samples are returned in file order.
pub fn load_split(path: &Path, schema: &SplitSchema) -> Result<Vec<Sample>, CorpusError> {
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_split(BufReader::new(file), schema).map_err(|e| match e {
        ParseFailure::Io(source) => CorpusError::Io {
            path: path.to_path_buf(),
            source,
        },
        ParseFailure::Lines(errors) => CorpusError::Malformed {
            path: path.to_path_buf(),
            errors,
        },
    })
}

#[derive(Debug)]
pub enum ParseFailure {
    Io(io::Error),
    Lines(Vec<LineError>),
}

/// Parses tab-separated records. All malformed lines are collected before failing.
pub fn parse_split(
    reader: impl BufRead,
    schema: &SplitSchema,
) -> Result<Vec<Sample>, ParseFailure> {
    let width = schema.columns.width();
    let mut samples = Vec::new();
    let mut errors = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(ParseFailure::Io)?;
        let lineno = idx + 1;
        if idx == 0 && schema.has_header {
            continue;
        }
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let line = if idx == 0 {
            line.strip_prefix('\u{feff}').unwrap_or(line)
        } else {
            line
        };
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(line, schema, width) {
            Ok(sample) => samples.push(sample),
            Err(kind) => errors.push(LineError { line: lineno, kind }),
        }
    }

    if errors.is_empty() {
        Ok(samples)
    } else {
        Err(ParseFailure::Lines(errors))
    }
}

fn parse_record(line: &str, schema: &SplitSchema, width: usize) -> Result<Sample, LineErrorKind> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != width {
        return Err(LineErrorKind::ColumnCount {
            expected: width,
            found: fields.len(),
        });
    }
    let cols = &schema.columns;
    let raw_text = fields[cols.text].trim();
    if raw_text.is_empty() {
        return Err(LineErrorKind::EmptyText);
    }

    let mut labels = Labels::default();
    for task in Task::ALL {
        let Some(col) = cols.label_column(task) else {
            continue;
        };
        let token = fields[col].trim();
        if token.is_empty() || token == "-" {
            if task == Task::Offensive {
                return Err(LineErrorKind::MissingLabel { task });
            }
            continue;
        }
        match schema.labels[task].parse(token) {
            Some(value) => labels[task] = Some(value),
            None => {
                return Err(LineErrorKind::UnknownLabel {
                    task,
                    token: token.to_string(),
                })
            }
        }
    }

    Ok(Sample {
        id: fields[cols.id].trim().to_string(),
        raw_text: raw_text.to_string(),
        labels,
    })
}

/// Fails if any sample lacks one of the three labels (train/dev requirement).
pub fn require_fully_labeled(split: &str, samples: &[Sample]) -> Result<(), CorpusError> {
    for task in Task::ALL {
        let count = samples.iter().filter(|s| s.labels[task].is_none()).count();
        if count > 0 {
            return Err(CorpusError::Unlabeled {
                split: split.to_string(),
                task,
                count,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskCounts {
    pub positive: usize,
    pub negative: usize,
    pub unlabeled: usize,
}

impl TaskCounts {
    pub fn labeled(&self) -> usize {
        self.positive + self.negative
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub total: usize,
    pub tasks: TaskTriple<TaskCounts>,
}

pub fn split_stats(samples: &[Sample]) -> SplitStats {
    let mut stats = SplitStats {
        total: samples.len(),
        ..SplitStats::default()
    };
    for sample in samples {
        for task in Task::ALL {
            let counts = &mut stats.tasks[task];
            match sample.labels[task] {
                Some(true) => counts.positive += 1,
                Some(false) => counts.negative += 1,
                None => counts.unlabeled += 1,
            }
        }
    }
    stats
}

impl SplitStats {
    /// Renders `key=value` lines: `total`, then `<task>.positive`,
    /// `<task>.negative`, `<task>.unlabeled` for each task, with an optional
    /// `<prefix>.` on every key.
    pub fn to_key_values(&self, prefix: Option<&str>) -> String {
        let p = prefix.map(|p| format!("{p}.")).unwrap_or_default();
        let mut out = format!("{p}total={}\n", self.total);
        for (task, c) in self.tasks.iter() {
            out.push_str(&format!("{p}{task}.positive={}\n", c.positive));
            out.push_str(&format!("{p}{task}.negative={}\n", c.negative));
            out.push_str(&format!("{p}{task}.unlabeled={}\n", c.unlabeled));
        }
        out
    }

    /// Lists every disagreement with `expected`. Tasks with no expected
    /// counts are not compared.
    pub fn mismatches(&self, expected: &ExpectedStats) -> Vec<String> {
        let mut out = Vec::new();
        if self.total != expected.total {
            out.push(format!(
                "total: expected {}, found {}",
                expected.total, self.total
            ));
        }
        for task in Task::ALL {
            if let Some((pos, neg)) = expected.tasks[task] {
                let c = self.tasks[task];
                if (c.positive, c.negative) != (pos, neg) {
                    out.push(format!(
                        "{task}: expected {pos}/{neg} positive/negative, found {}/{}",
                        c.positive, c.negative
                    ));
                }
            }
        }
        out
    }
}

/// Reference counts for one split; `None` means the task is not checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpectedStats {
    pub total: usize,
    pub tasks: TaskTriple<Option<(usize, usize)>>,
}

/// Published OSACT2022 split sizes.
pub mod osact2022 {
    use super::ExpectedStats;
    use crate::task::TaskTriple;

    pub const TRAIN: ExpectedStats = ExpectedStats {
        total: 8_557,
        tasks: TaskTriple::new(Some((3_066, 5_491)), Some((60, 8_497)), Some((132, 8_425))),
    };
    pub const DEV: ExpectedStats = ExpectedStats {
        total: 1_266,
        tasks: TaskTriple::new(Some((403, 863)), Some((6, 1_260)), Some((16, 1_250))),
    };
    pub const TEST: ExpectedStats = ExpectedStats {
        total: 2_541,
        tasks: TaskTriple::new(Some((887, 1_654)), None, None),
    };
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn schema() -> SplitSchema {
        SplitSchema::new(ColumnMapping {
            id: 0,
            text: 1,
            offensive: 2,
            hate: Some(3),
            vulgar: Some(4),
            violent: Some(5),
        })
    }

    fn parse(text: &str) -> Result<Vec<Sample>, ParseFailure> {
        parse_split(Cursor::new(text), &schema())
    }

    #[test]
    fn three_line_file_maps_labels() {
        let data = "1\tنص اول\tOFF\tHS1\tNOT_VLG\tNOT_V\n\
                    2\tنص ثان\tNOT_OFF\tNOT_HS\tVLG\tNOT_V\r\n\
                    3\tنص ثالث\tOFF\tNOT_HS\tNOT_VLG\tV\n";
        let samples = parse(data).unwrap();
        assert_eq!(samples.len(), 3);
        assert_eq!(
            samples[0].labels,
            TaskTriple::new(Some(true), Some(false), Some(false))
        );
        assert_eq!(
            samples[1].labels,
            TaskTriple::new(Some(false), Some(false), Some(true))
        );
        assert_eq!(
            samples[2].labels,
            TaskTriple::new(Some(true), Some(true), Some(false))
        );
        assert_eq!(samples[1].raw_text, "نص ثان");
        assert!(samples.iter().all(Sample::is_fully_labeled));
    }

    #[test]
    fn empty_input_is_empty_split() {
        assert!(parse("").unwrap().is_empty());
        assert_eq!(split_stats(&[]), SplitStats::default());
    }

    #[test]
    fn errors_name_every_bad_line() {
        let data = "1\tok\tOFF\tNOT_HS\tNOT_VLG\tNOT_V\n\
                    2\tshort\tOFF\n\
                    3\tbad\tMAYBE\tNOT_HS\tNOT_VLG\tNOT_V\n\
                    4\t  \tOFF\tNOT_HS\tNOT_VLG\tNOT_V\n";
        let Err(ParseFailure::Lines(errors)) = parse(data) else {
            panic!("expected line errors");
        };
        assert_eq!(errors.len(), 3);
        assert_eq!(errors[0].line, 2);
        assert_eq!(
            errors[0].kind,
            LineErrorKind::ColumnCount {
                expected: 6,
                found: 3
            }
        );
        assert_eq!(errors[1].line, 3);
        assert!(matches!(
            errors[1].kind,
            LineErrorKind::UnknownLabel {
                task: Task::Offensive,
                ..
            }
        ));
        assert_eq!(
            errors[2],
            LineError {
                line: 4,
                kind: LineErrorKind::EmptyText
            }
        );
        assert!(errors[1].to_string().starts_with("line 3:"));
    }

    #[test]
    fn label_tokens_ignore_case_and_are_configurable() {
        let mut s = schema();
        s.labels.violent = LabelTokens::new("VIO", "NOT_VIO");
        let samples = parse_split(Cursor::new("1\tx\toff\tHS\tnot_vlg\tVio\n"), &s).unwrap();
        assert_eq!(
            samples[0].labels,
            TaskTriple::new(Some(true), Some(true), Some(false))
        );
    }

    #[test]
    fn test_split_without_auxiliary_labels() {
        let s = SplitSchema::new(ColumnMapping {
            id: 0,
            text: 1,
            offensive: 2,
            hate: None,
            vulgar: None,
            violent: None,
        })
        .with_header(true);
        let samples = parse_split(Cursor::new("id\ttext\tlabel\n7\tx\tNOT_OFF\n"), &s).unwrap();
        assert_eq!(samples[0].labels, TaskTriple::new(Some(false), None, None));
        assert!(require_fully_labeled("test", &samples).is_err());
        let stats = split_stats(&samples);
        assert_eq!(stats.tasks.vulgar.unlabeled, 1);
        assert_eq!(stats.tasks.offensive.labeled(), 1);
    }

    #[test]
    fn dash_marks_unlabeled_auxiliary_task() {
        let samples = parse("1\tx\tOFF\tHS\t-\t\n").unwrap();
        assert_eq!(samples[0].labels, TaskTriple::new(Some(true), None, None));
        assert!(matches!(
            parse("1\tx\t-\tHS\tVLG\tV\n"),
            Err(ParseFailure::Lines(e)) if e[0].kind == LineErrorKind::MissingLabel { task: Task::Offensive }
        ));
    }

    #[test]
    fn stats_hand_count() {
        let mk = |off: bool| Sample {
            id: String::new(),
            raw_text: "x".into(),
            labels: TaskTriple::new(Some(off), Some(false), Some(false)),
        };
        let samples = vec![mk(true), mk(false), mk(true), mk(false)];
        let stats = split_stats(&samples);
        assert_eq!(stats.total, 4);
        assert_eq!(
            (
                stats.tasks.offensive.positive,
                stats.tasks.offensive.negative
            ),
            (2, 2)
        );
        assert_eq!(stats.tasks.vulgar.negative, 4);
        let kv = stats.to_key_values(Some("train"));
        assert!(kv.starts_with("train.total=4\n"));
        assert!(kv.contains("train.offensive.positive=2\n"));
        assert_eq!(kv.lines().count(), 10);
    }

    #[test]
    fn expected_stats_comparison() {
        let stats = SplitStats {
            total: 1_266,
            tasks: TaskTriple::new(
                TaskCounts {
                    positive: 403,
                    negative: 863,
                    unlabeled: 0,
                },
                TaskCounts {
                    positive: 6,
                    negative: 1_260,
                    unlabeled: 0,
                },
                TaskCounts {
                    positive: 15,
                    negative: 1_251,
                    unlabeled: 0,
                },
            ),
        };
        let diff = stats.mismatches(&osact2022::DEV);
        assert_eq!(diff.len(), 1);
        assert!(diff[0].starts_with("vulgar"));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_split(Path::new("/nonexistent/split.tsv"), &schema()).unwrap_err();
        assert!(matches!(err, CorpusError::Io { .. }));
    }
}
