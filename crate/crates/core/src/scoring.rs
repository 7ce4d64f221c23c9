//! Big Five factor scores and per-factor consistency distances, plus grouped
//! descriptive statistics over scored cases.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use crate::parser::{classify_validity, ParsedResponse, ValidityReason};
use crate::questionnaire::{Factor, QuestionnaireBank};

pub const SCALE_MIN: i32 = 1;
pub const SCALE_MAX: i32 = 7;

/// Group key used when cases are pooled across languages.
pub const ALL_GROUP: &str = "ALL";

pub const CSV_HEADER: &str = "source_id,language,O,C,E,A,ES,dist_O,dist_C,dist_E,dist_A,dist_ES,mean_dist";

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("rating {0} is outside the 1..7 scale")]
    OutOfScale(i32),
    #[error("response is not scoreable: {0:?}")]
    InvalidInput(ValidityReason),
    #[error("group {0} has no cases")]
    EmptyGroup(String),
    #[error("scored-cases csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub fn reverse_recode(r: i32) -> Result<i32, ScoringError> {
    if !(SCALE_MIN..=SCALE_MAX).contains(&r) {
        return Err(ScoringError::OutOfScale(r));
    }
    Ok(8 - r)
}

/// Score and distance for one factor from its raw normal and reversed ratings.
pub fn score_pair(normal: i32, reversed: i32) -> Result<(f64, u8), ScoringError> {
    if !(SCALE_MIN..=SCALE_MAX).contains(&normal) {
        return Err(ScoringError::OutOfScale(normal));
    }
    let recoded = reverse_recode(reversed)?;
    let score = f64::from(normal + recoded) / 2.0;
    let distance = (normal - recoded).unsigned_abs() as u8;
    Ok((score, distance))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub source_id: Uuid,
    pub language: String,
    /// Indexed by [`Factor::position`].
    pub factor_scores: [f64; 5],
    pub distances: [u8; 5],
    pub mean_distance: f64,
}

impl CaseRecord {
    pub fn score(&self, factor: Factor) -> f64 {
        self.factor_scores[factor.position()]
    }

    pub fn distance(&self, factor: Factor) -> u8 {
        self.distances[factor.position()]
    }

    /// Sum of the five distances, on 0..=30.
    pub fn distance_sum(&self) -> u32 {
        self.distances.iter().map(|&d| u32::from(d)).sum()
    }

    pub fn to_csv_row(&self) -> String {
        let mut row = format!("{},{}", self.source_id, self.language);
        for s in self.factor_scores {
            let _ = write!(row, ",{s}");
        }
        for d in self.distances {
            let _ = write!(row, ",{d}");
        }
        let _ = write!(row, ",{}", self.mean_distance);
        row
    }
}

pub fn score_case(
    resp: &ParsedResponse,
    bank: &QuestionnaireBank,
    language: &str,
    source_id: Uuid,
) -> Result<CaseRecord, ScoringError> {
    let verdict = classify_validity(resp);
    if !verdict.valid {
        return Err(ScoringError::InvalidInput(verdict.reason));
    }
    let ratings = resp
        .complete_ratings()
        .ok_or(ScoringError::InvalidInput(ValidityReason::IncompleteItems))?;
    let mut factor_scores = [0.0; 5];
    let mut distances = [0u8; 5];
    for factor in Factor::ALL {
        let pair = bank.pair(factor);
        let normal = ratings[usize::from(pair.normal) - 1];
        let reversed = ratings[usize::from(pair.reversed) - 1];
        let (score, distance) = score_pair(normal, reversed)?;
        factor_scores[factor.position()] = score;
        distances[factor.position()] = distance;
    }
    let mean_distance = distances.iter().map(|&d| f64::from(d)).sum::<f64>() / 5.0;
    Ok(CaseRecord {
        source_id,
        language: language.to_string(),
        factor_scores,
        distances,
        mean_distance,
    })
}

pub fn write_csv(cases: &[CaseRecord], path: impl AsRef<Path>) -> Result<(), ScoringError> {
    write_csv_with_comment(cases, "", path)
}

/// As [`write_csv`], prefixed by `comment` (lines starting with `#`), which
/// [`parse_csv`] skips.
pub fn write_csv_with_comment(cases: &[CaseRecord], comment: &str, path: impl AsRef<Path>) -> Result<(), ScoringError> {
    let path = path.as_ref();
    let io = |source| ScoringError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut out = comment.to_string();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for case in cases {
        out.push_str(&case.to_csv_row());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(io)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<CaseRecord>, ScoringError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScoringError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(&text)
}

/// Parses the cases table. Lines starting with `#` are comments.
pub fn parse_csv(text: &str) -> Result<Vec<CaseRecord>, ScoringError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#'));
    match lines.next() {
        Some((_, header)) if header.trim() == CSV_HEADER => {}
        _ => {
            return Err(ScoringError::Csv {
                line: 1,
                message: format!("expected header `{CSV_HEADER}`"),
            })
        }
    }
    let mut cases = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| ScoringError::Csv { line: i + 1, message };
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 13 {
            return Err(err(format!("expected 13 fields, found {}", fields.len())));
        }
        let source_id = Uuid::parse_str(fields[0]).map_err(|e| err(e.to_string()))?;
        let mut factor_scores = [0.0; 5];
        for (slot, f) in factor_scores.iter_mut().zip(&fields[2..7]) {
            *slot = f.parse().map_err(|_| err(format!("bad score `{f}`")))?;
        }
        let mut distances = [0u8; 5];
        for (slot, f) in distances.iter_mut().zip(&fields[7..12]) {
            *slot = f.parse().map_err(|_| err(format!("bad distance `{f}`")))?;
        }
        let mean_distance = fields[12].parse().map_err(|_| err(format!("bad mean distance `{}`", fields[12])))?;
        cases.push(CaseRecord {
            source_id,
            language: fields[1].to_string(),
            factor_scores,
            distances,
            mean_distance,
        });
    }
    Ok(cases)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    Score(Factor),
    Distance(Factor),
    /// All five factor scores of every case stacked into one series.
    Big5Pooled,
    /// All five distances of every case stacked into one series.
    DistancePooled,
    /// Per-case sum of the five distances.
    DistanceSum,
    MeanDistance,
}

impl Measure {
    pub fn all() -> Vec<Measure> {
        let mut out: Vec<Measure> = Factor::ALL.iter().map(|&f| Measure::Score(f)).collect();
        out.extend(Factor::ALL.iter().map(|&f| Measure::Distance(f)));
        out.extend([
            Measure::Big5Pooled,
            Measure::DistancePooled,
            Measure::DistanceSum,
            Measure::MeanDistance,
        ]);
        out
    }

    pub fn label(self) -> String {
        match self {
            Measure::Score(f) => f.code().to_string(),
            Measure::Distance(f) => format!("dist_{}", f.code()),
            Measure::Big5Pooled => "big5_pooled".into(),
            Measure::DistancePooled => "dist_pooled".into(),
            Measure::DistanceSum => "dist_sum".into(),
            Measure::MeanDistance => "mean_dist".into(),
        }
    }

    pub fn values(self, cases: &[CaseRecord]) -> Vec<f64> {
        match self {
            Measure::Score(f) => cases.iter().map(|c| c.score(f)).collect(),
            Measure::Distance(f) => cases.iter().map(|c| f64::from(c.distance(f))).collect(),
            Measure::Big5Pooled => cases.iter().flat_map(|c| c.factor_scores).collect(),
            Measure::DistancePooled => cases.iter().flat_map(|c| c.distances.map(f64::from)).collect(),
            Measure::DistanceSum => cases.iter().map(|c| f64::from(c.distance_sum())).collect(),
            Measure::MeanDistance => cases.iter().map(|c| c.mean_distance).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Language,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl MeasureSummary {
    /// `None` for an empty series. The sd of a single value is 0.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(MeasureSummary { n, mean, sd, min, max })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveSummary {
    pub group: String,
    /// Keyed by [`Measure::label`].
    pub measures: BTreeMap<String, MeasureSummary>,
}

/// Groups cases by language, in sorted language order.
pub fn group_by_language(cases: &[CaseRecord]) -> BTreeMap<String, Vec<CaseRecord>> {
    let mut groups: BTreeMap<String, Vec<CaseRecord>> = BTreeMap::new();
    for case in cases {
        groups.entry(case.language.clone()).or_default().push(case.clone());
    }
    groups
}

pub fn descriptives(cases: &[CaseRecord], group_by: GroupBy) -> Result<Vec<DescriptiveSummary>, ScoringError> {
    let groups = match group_by {
        GroupBy::All => {
            let mut g = BTreeMap::new();
            g.insert(ALL_GROUP.to_string(), cases.to_vec());
            g
        }
        GroupBy::Language => group_by_language(cases),
    };
    if groups.is_empty() {
        return Err(ScoringError::EmptyGroup(ALL_GROUP.into()));
    }
    let mut out = Vec::with_capacity(groups.len());
    for (group, members) in groups {
        let mut measures = BTreeMap::new();
        for m in Measure::all() {
            let summary = MeasureSummary::of(&m.values(&members)).ok_or_else(|| ScoringError::EmptyGroup(group.clone()))?;
            measures.insert(m.label(), summary);
        }
        out.push(DescriptiveSummary { group, measures });
    }
    Ok(out)
}
