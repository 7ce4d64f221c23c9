//! Pipeline configuration: one JSON file, every field optional.

use std::path::{Path, PathBuf};

use psychoprobe_core::provenance::Provenance;
use psychoprobe_core::report::{AnalysisOptions, MixtureOptions};
use psychoprobe_core::stats::anova::LeveneCenter;
use psychoprobe_core::stats::kde::BandwidthRule;
use psychoprobe_core::transcript::SamplingConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Directory of `<language>.json` banks.
    pub banks: PathBuf,
    /// Directory of `*.jsonl` transcript files, or a single file.
    pub transcripts: PathBuf,
    pub parsed: PathBuf,
    pub cases: PathBuf,
    pub report: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            banks: "banks".into(),
            transcripts: "transcripts".into(),
            parsed: "parsed/parsed.jsonl".into(),
            cases: "cases/cases.csv".into(),
            report: "report".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatisticsConfig {
    pub alpha: f64,
    /// `scott`, `silverman`, or a positive number used as the bandwidth.
    pub bandwidth: String,
    pub mc_draws: usize,
    pub grid_size: usize,
    pub base_language: String,
    /// `median` (Brown-Forsythe) or `mean`.
    pub levene_center: String,
    /// Tokens compared with the item wording per factor.
    pub overlap_top_n: usize,
}

impl Default for StatisticsConfig {
    fn default() -> Self {
        let a = AnalysisOptions::default();
        StatisticsConfig {
            alpha: a.alpha,
            bandwidth: "scott".into(),
            mc_draws: a.mc_draws,
            grid_size: a.grid_size,
            base_language: a.base_language,
            levene_center: "median".into(),
            overlap_top_n: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureConfig {
    pub chains: usize,
    pub draws: usize,
    pub warmup: usize,
    pub recentre_init: bool,
    pub distances: bool,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        let m = MixtureOptions::default();
        MixtureConfig {
            chains: m.chains,
            draws: m.draws,
            warmup: m.warmup,
            recentre_init: m.recentre_init,
            distances: m.distances,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectionConfig {
    pub endpoint: Option<String>,
    /// `completions` or `chat`.
    pub adapter: String,
    pub n_requests: usize,
    pub min_interval_ms: u64,
    pub max_in_flight: usize,
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for CollectionConfig {
    fn default() -> Self {
        CollectionConfig {
            endpoint: None,
            adapter: "completions".into(),
            n_requests: 100,
            min_interval_ms: 1000,
            max_in_flight: 2,
            max_retries: 5,
            base_delay_ms: 2000,
            max_delay_ms: 60_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub languages: Vec<String>,
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub paths: Paths,
    pub sampling: SamplingConfig,
    pub statistics: StatisticsConfig,
    pub mixture: MixtureConfig,
    pub collection: CollectionConfig,
    /// Worker threads; defaults to the logical CPU count.
    pub workers: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            languages: ["bg", "ca", "de", "en", "es", "fr", "ja", "ko", "ru", "zh"].map(String::from).to_vec(),
            seed: 20230101,
            paths: Paths::default(),
            sampling: SamplingConfig::default(),
            statistics: StatisticsConfig::default(),
            mixture: MixtureConfig::default(),
            collection: CollectionConfig::default(),
            workers: None,
        }
    }
}

/// The result-affecting part of the configuration, hashed into provenance.
/// Paths and thread counts are left out so moving the output does not change it.
#[derive(Serialize)]
struct Fingerprint<'a> {
    languages: &'a [String],
    seed: u64,
    sampling: &'a SamplingConfig,
    statistics: &'a StatisticsConfig,
    mixture: &'a MixtureConfig,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        let s = &self.statistics;
        if !(s.alpha > 0.0 && s.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", s.alpha));
        }
        if s.mc_draws == 0 || s.grid_size < 2 {
            return bad("mc_draws must be positive and grid_size at least 2".into());
        }
        self.bandwidth_rule()?;
        self.levene_center()?;
        let m = &self.mixture;
        if m.chains < 2 || m.draws == 0 {
            return bad(format!("mixture needs at least 2 chains and 1 draw, got {} and {}", m.chains, m.draws));
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        self.sampling.validate().map_err(CliError::Validation)
    }

    pub fn bandwidth_rule(&self) -> Result<BandwidthRule<f64>, CliError> {
        match self.statistics.bandwidth.as_str() {
            "scott" => Ok(BandwidthRule::Scott),
            "silverman" => Ok(BandwidthRule::Silverman),
            other => match other.parse::<f64>() {
                Ok(h) if h > 0.0 && h.is_finite() => Ok(BandwidthRule::Manual(h)),
                _ => Err(CliError::Validation(format!(
                    "bandwidth must be scott, silverman or a positive number, got {other:?}"
                ))),
            },
        }
    }

    fn levene_center(&self) -> Result<LeveneCenter, CliError> {
        match self.statistics.levene_center.as_str() {
            "median" => Ok(LeveneCenter::Median),
            "mean" => Ok(LeveneCenter::Mean),
            other => Err(CliError::Validation(format!("levene_center must be median or mean, got {other:?}"))),
        }
    }

    pub fn analysis_options(&self) -> Result<AnalysisOptions, CliError> {
        Ok(AnalysisOptions {
            alpha: self.statistics.alpha,
            bandwidth: self.bandwidth_rule()?,
            grid_size: self.statistics.grid_size,
            mc_draws: self.statistics.mc_draws,
            seed: self.seed,
            base_language: self.statistics.base_language.clone(),
            levene_center: self.levene_center()?,
        })
    }

    pub fn mixture_options(&self) -> MixtureOptions {
        MixtureOptions {
            chains: self.mixture.chains,
            draws: self.mixture.draws,
            warmup: self.mixture.warmup,
            seed: self.seed,
            recentre_init: self.mixture.recentre_init,
            distances: self.mixture.distances,
        }
    }

    pub fn provenance(&self) -> Provenance {
        let fp = Fingerprint {
            languages: &self.languages,
            seed: self.seed,
            sampling: &self.sampling,
            statistics: &self.statistics,
            mixture: &self.mixture,
        };
        let json = serde_json::to_string(&fp).expect("config serializes");
        Provenance::new(&json, self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c: PipelineConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, PipelineConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn alpha_is_checked() {
        let mut c = PipelineConfig::default();
        c.statistics.alpha = 1.0;
        assert!(matches!(c.validate(), Err(CliError::Validation(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"sed": 1}"#).is_err());
    }

    #[test]
    fn bandwidth_settings() {
        let mut c = PipelineConfig::default();
        c.statistics.bandwidth = "0.4".into();
        assert_eq!(c.bandwidth_rule().unwrap(), BandwidthRule::Manual(0.4));
        c.statistics.bandwidth = "wide".into();
        assert!(c.bandwidth_rule().is_err());
    }

    #[test]
    fn provenance_ignores_paths() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.paths.report = "elsewhere".into();
        b.workers = Some(3);
        assert_eq!(a.provenance(), b.provenance());
        b.seed += 1;
        assert_ne!(a.provenance().config_sha256, b.provenance().config_sha256);
    }
}
