//! Administering a ten-item personality questionnaire to text-generation models
//! and analysing the replies: reply parsing, Big Five scoring, a classical
//! statistics battery, Bayesian Gaussian mixtures with WAIC model selection,
//! explanation word counts and deterministic report artifacts.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below name the double-precision instantiations used by the pipeline.

pub mod jsonl;
pub mod mixture;
pub mod parser;
pub mod provenance;
pub mod questionnaire;
mod real;
pub mod report;
pub mod scoring;
pub mod stats;
pub mod textstats;
pub mod transcript;

pub use real::Real;

pub type AnovaResult64 = stats::anova::AnovaResult<f64>;
pub type LeveneResult64 = stats::anova::LeveneResult<f64>;
pub type TukeyResult64 = stats::anova::TukeyResult<f64>;
pub type CorrelationMatrix64 = stats::correlation::CorrelationMatrix<f64>;
pub type DensityEstimate64 = stats::kde::DensityEstimate<f64>;
pub type NormalityResult64 = stats::normality::NormalityResult<f64>;
pub type PpccResult64 = stats::normality::PpccResult<f64>;
pub type OlsResult64 = stats::ols::OlsResult<f64>;
pub type MixtureFit64 = mixture::MixtureFit<f64>;
pub type MixturePrior64 = mixture::MixturePrior<f64>;
pub type MixtureInit64 = mixture::MixtureInit<f64>;
pub type MixtureDensity64 = mixture::MixtureDensity<f64>;
pub type WaicScore64 = mixture::WaicScore<f64>;
pub type SelectionRow64 = mixture::SelectionRow<f64>;
