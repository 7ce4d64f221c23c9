//! Assembles the statistics battery over a scored dataset and writes the
//! result as CSV tables, JSON fragments and SVG figures under
//! `tables/`, `stats/` and `figures/`.

mod emit;
mod figures;
mod sample;
pub mod svg;
mod sweep;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provenance::derive_seed;
use crate::questionnaire::Factor;
use crate::scoring::{group_by_language, CaseRecord, DescriptiveSummary, Measure, MeasureSummary, ALL_GROUP};
use crate::stats::anova::{anova_oneway, levene, tukey_hsd, AnovaResult, LeveneCenter, LeveneResult, TukeyResult};
use crate::stats::correlation::{pearson_matrix, CorrelationMatrix};
use crate::stats::descriptive::{boxplot, BoxplotStats};
use crate::stats::kde::{kde, BandwidthRule, DensityEstimate};
use crate::stats::normality::{ppcc_threshold, ppcc_with_threshold, shapiro_wilk, NormalityResult, PPCC_MIN_N};
use crate::stats::ols::{ols_dummy, OlsResult};
use crate::stats::{mean, StatsError};

pub use emit::{emit_analysis, emit_figures, emit_mixture, emit_mixture_figures, read_json, StatsDocument};
pub use sample::{emit_sample_table, emit_token_tables, sample_table, SampleRow};
pub use sweep::{mixture_sweep, ClassificationCounts, MixtureOptions, MixtureReport, SeriesFits, SweepFit};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no cases to analyse")]
    NoCases,
    #[error("I/O failure at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl ReportError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ReportError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    pub alpha: f64,
    pub bandwidth: BandwidthRule<f64>,
    pub grid_size: usize,
    /// Monte Carlo draws for the plot-correlation null distribution.
    pub mc_draws: usize,
    pub seed: u64,
    /// Reference language of the dummy regression.
    pub base_language: String,
    pub levene_center: LeveneCenter,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            alpha: 0.05,
            bandwidth: BandwidthRule::Scott,
            grid_size: 256,
            mc_draws: 20_000,
            seed: 0,
            base_language: "en".into(),
            levene_center: LeveneCenter::Median,
        }
    }
}

/// Per-measure results inside one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub measure: String,
    pub summary: Option<MeasureSummary>,
    pub normality: Option<NormalityResult<f64>>,
    pub density: Option<DensityEstimate<f64>>,
    pub boxplot: Option<BoxplotStats<f64>>,
    /// Test name to error message, for tests that could not be run.
    pub errors: BTreeMap<String, String>,
}

/// One language, or all languages pooled under [`ALL_GROUP`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub group: String,
    pub n: usize,
    pub descriptives: DescriptiveSummary,
    pub correlation: Option<CorrelationMatrix<f64>>,
    pub measures: Vec<MeasureReport>,
    pub errors: BTreeMap<String, String>,
}

impl GroupReport {
    pub fn measure(&self, label: &str) -> Option<&MeasureReport> {
        self.measures.iter().find(|m| m.measure == label)
    }
}

/// Between-language comparison of one per-case measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub measure: String,
    pub anova: Option<AnovaResult<f64>>,
    pub levene: Option<LeveneResult<f64>>,
    pub tukey: Option<TukeyResult<f64>>,
    pub ols: Option<OlsResult<f64>>,
    /// Normality of the residuals around the language means.
    pub residual_normality: Option<NormalityResult<f64>>,
    pub errors: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub options: AnalysisOptions,
    pub languages: Vec<String>,
    /// Languages in sorted order, then [`ALL_GROUP`].
    pub groups: Vec<GroupReport>,
    pub series: Vec<SeriesReport>,
}

impl AnalysisReport {
    pub fn group(&self, name: &str) -> Option<&GroupReport> {
        self.groups.iter().find(|g| g.group == name)
    }

    pub fn series(&self, label: &str) -> Option<&SeriesReport> {
        self.series.iter().find(|s| s.measure == label)
    }
}

/// Measures compared between languages: one value per case.
pub fn comparison_measures() -> Vec<Measure> {
    let mut out: Vec<Measure> = Factor::ALL.iter().map(|&f| Measure::Score(f)).collect();
    out.extend(Factor::ALL.iter().map(|&f| Measure::Distance(f)));
    out.extend([Measure::MeanDistance, Measure::DistanceSum]);
    out
}

/// Plot-correlation thresholds keyed by sample size, shared across series so
/// each size is simulated once.
struct ThresholdCache(BTreeMap<usize, Result<(f64, f64), StatsError>>);

impl ThresholdCache {
    fn build(sizes: BTreeSet<usize>, opts: &AnalysisOptions) -> Self {
        let entries = sizes
            .into_iter()
            .filter(|&n| n >= PPCC_MIN_N)
            .map(|n| {
                let seed = ppcc_seed(opts.seed, n);
                (n, ppcc_threshold(n, opts.alpha, opts.mc_draws, seed))
            })
            .collect();
        ThresholdCache(entries)
    }

    fn normality(&self, values: &[f64], opts: &AnalysisOptions) -> Result<NormalityResult<f64>, StatsError> {
        let sw = shapiro_wilk(values)?;
        let n = values.len();
        let ppcc = match self.0.get(&n) {
            Some(Ok(t)) => Some(ppcc_with_threshold(values, opts.alpha, opts.mc_draws, ppcc_seed(opts.seed, n), *t)?),
            Some(Err(e)) => return Err(e.clone()),
            None => None,
        };
        Ok(NormalityResult {
            n,
            w: sw.w,
            p: sw.p,
            alpha: opts.alpha,
            normal_rejected: sw.p < opts.alpha,
            ppcc,
        })
    }
}

fn ppcc_seed(master: u64, n: usize) -> u64 {
    derive_seed(master, &["ppcc", &n.to_string()])
}

fn residuals(values: &[f64], labels: &[&str]) -> Vec<f64> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (v, l) in values.iter().zip(labels) {
        groups.entry(l).or_default().push(*v);
    }
    let means: BTreeMap<&str, f64> = groups.iter().map(|(l, v)| (*l, mean(v))).collect();
    values.iter().zip(labels).map(|(v, l)| v - means[l]).collect()
}

fn record<T, E: std::fmt::Display>(errors: &mut BTreeMap<String, String>, test: &str, r: Result<T, E>) -> Option<T> {
    r.map_err(|e| {
        errors.insert(test.to_string(), e.to_string());
    })
    .ok()
}

fn group_report(group: &str, cases: &[CaseRecord], opts: &AnalysisOptions, cache: &ThresholdCache) -> GroupReport {
    let mut errors = BTreeMap::new();
    let correlation = record(&mut errors, "correlation", pearson_matrix(cases));
    let measures: Vec<MeasureReport> = Measure::all()
        .into_par_iter()
        .map(|m| {
            let values = m.values(cases);
            let mut errors = BTreeMap::new();
            let normality = record(&mut errors, "normality", cache.normality(&values, opts));
            let density = record(&mut errors, "kde", kde(&values, opts.bandwidth, opts.grid_size));
            let boxplot = record(&mut errors, "boxplot", boxplot(&values));
            MeasureReport {
                measure: m.label(),
                summary: MeasureSummary::of(&values),
                normality,
                density,
                boxplot,
                errors,
            }
        })
        .collect();
    let descriptives = DescriptiveSummary {
        group: group.to_string(),
        measures: measures
            .iter()
            .filter_map(|m| m.summary.map(|s| (m.measure.clone(), s)))
            .collect(),
    };
    GroupReport {
        group: group.to_string(),
        n: cases.len(),
        descriptives,
        correlation,
        measures,
        errors,
    }
}

fn series_report(m: Measure, cases: &[CaseRecord], opts: &AnalysisOptions, cache: &ThresholdCache) -> SeriesReport {
    let values = m.values(cases);
    let labels: Vec<&str> = cases.iter().map(|c| c.language.as_str()).collect();
    let mut errors = BTreeMap::new();
    let anova = record(&mut errors, "anova", anova_oneway(&values, &labels));
    let levene = record(&mut errors, "levene", levene(&values, &labels, opts.levene_center));
    let tukey = record(&mut errors, "tukey", tukey_hsd(&values, &labels));
    let ols = record(&mut errors, "ols", ols_dummy(&values, &labels, &opts.base_language));
    let residual_normality = record(&mut errors, "residual_normality", cache.normality(&residuals(&values, &labels), opts));
    SeriesReport {
        measure: m.label(),
        anova,
        levene,
        tukey,
        ols,
        residual_normality,
        errors,
    }
}

/// Runs every group-level and between-language analysis. Output order is fixed
/// (sorted languages, then the pooled group; measures in [`Measure::all`] order).
pub fn analyze(cases: &[CaseRecord], opts: &AnalysisOptions) -> Result<AnalysisReport, ReportError> {
    if cases.is_empty() {
        return Err(ReportError::NoCases);
    }
    let mut groups: Vec<(String, Vec<CaseRecord>)> = group_by_language(cases).into_iter().collect();
    let languages: Vec<String> = groups.iter().map(|(l, _)| l.clone()).collect();
    groups.push((ALL_GROUP.to_string(), cases.to_vec()));

    let mut sizes = BTreeSet::new();
    for (_, members) in &groups {
        sizes.insert(members.len());
        sizes.insert(members.len() * Factor::ALL.len());
    }
    let cache = ThresholdCache::build(sizes, opts);

    let group_reports: Vec<GroupReport> = groups
        .par_iter()
        .map(|(name, members)| group_report(name, members, opts, &cache))
        .collect();
    let series: Vec<SeriesReport> = comparison_measures()
        .into_par_iter()
        .map(|m| series_report(m, cases, opts, &cache))
        .collect();
    Ok(AnalysisReport {
        options: opts.clone(),
        languages,
        groups: group_reports,
        series,
    })
}
