//! The language × factor × measure × K mixture sweep and its WAIC selection table.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mixture::{select, waic, Candidate, SelectionRow};
use crate::mixture::{fit, posterior_density, FitSummary, MixtureDensity, MixtureInit, MixturePrior, SamplerConfig, MAX_COMPONENTS};
use crate::provenance::derive_seed;
use crate::questionnaire::Factor;
use crate::scoring::{group_by_language, CaseRecord, Measure};

const DENSITY_GRID: usize = 241;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixtureOptions {
    pub chains: usize,
    pub draws: usize,
    pub warmup: usize,
    pub seed: u64,
    /// Start components at data quantiles instead of the fixed defaults.
    pub recentre_init: bool,
    /// Include the per-factor distance series next to the factor scores.
    pub distances: bool,
}

impl Default for MixtureOptions {
    fn default() -> Self {
        let s = SamplerConfig::default();
        MixtureOptions {
            chains: s.chains,
            draws: s.draws,
            warmup: s.warmup,
            seed: 0,
            recentre_init: false,
            distances: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFit {
    pub k: usize,
    pub summary: Option<FitSummary<f64>>,
    /// Posterior-mean density, for converged fits.
    pub density: Option<MixtureDensity<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFits {
    pub language: String,
    pub measure: String,
    pub n: usize,
    pub fits: Vec<SweepFit>,
    pub selection: Option<SelectionRow<f64>>,
    pub error: Option<String>,
}

impl SeriesFits {
    pub fn best(&self) -> Option<&SweepFit> {
        let k = self.selection.as_ref()?.best_k;
        self.fits.iter().find(|f| f.k == k)
    }
}

/// How often each K won, per measure kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationCounts {
    /// `"score"` or `"distance"`.
    pub kind: String,
    /// Index `k - 1` counts series whose best model has `k` components.
    pub best_k: [usize; MAX_COMPONENTS],
    /// Series where no candidate converged.
    pub unresolved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureReport {
    pub options: MixtureOptions,
    pub series: Vec<SeriesFits>,
    pub classification: Vec<ClassificationCounts>,
}

impl MixtureReport {
    pub fn counts(&self, kind: &str) -> Option<&ClassificationCounts> {
        self.classification.iter().find(|c| c.kind == kind)
    }
}

fn kind(measure: Measure) -> &'static str {
    match measure {
        Measure::Distance(_) => "distance",
        _ => "score",
    }
}

fn fit_one(values: &[f64], k: usize, language: &str, measure: &str, opts: &MixtureOptions) -> SweepFit {
    let config = SamplerConfig {
        chains: opts.chains,
        draws: opts.draws,
        warmup: opts.warmup,
        seed: derive_seed(opts.seed, &[language, measure, &k.to_string()]),
    };
    let init = if opts.recentre_init {
        MixtureInit::recentred(values, k)
    } else {
        MixtureInit::standard(values, k)
    };
    let result = MixturePrior::from_data(values, k).and_then(|prior| fit(values, k, &prior, &init, &config));
    let fitted = match result {
        Ok(f) => f,
        Err(e) => {
            return SweepFit {
                k,
                summary: None,
                density: None,
                error: Some(e.to_string()),
            }
        }
    };
    let (w, error) = match waic(&fitted, values) {
        Ok(w) => (Some(w), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let grid: Vec<f64> = (0..DENSITY_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (DENSITY_GRID - 1) as f64)
        .collect();
    SweepFit {
        k,
        summary: Some(fitted.summary(w)),
        density: posterior_density(&fitted, &grid).ok(),
        error,
    }
}

/// Fits K = 1..=3 to every (language, factor, measure) series and selects by WAIC.
/// Each fit gets a seed derived from the master seed and its series label, so
/// results do not depend on scheduling.
pub fn mixture_sweep(cases: &[CaseRecord], opts: &MixtureOptions) -> MixtureReport {
    let mut series_defs: Vec<(String, Measure, Vec<f64>)> = Vec::new();
    for (language, members) in group_by_language(cases) {
        for &f in &Factor::ALL {
            series_defs.push((language.clone(), Measure::Score(f), Measure::Score(f).values(&members)));
            if opts.distances {
                series_defs.push((language.clone(), Measure::Distance(f), Measure::Distance(f).values(&members)));
            }
        }
    }
    let jobs: Vec<(usize, usize)> = (0..series_defs.len())
        .flat_map(|s| (1..=MAX_COMPONENTS).map(move |k| (s, k)))
        .collect();
    let fits: Vec<SweepFit> = jobs
        .par_iter()
        .map(|&(s, k)| {
            let (language, measure, values) = &series_defs[s];
            fit_one(values, k, language, &measure.label(), opts)
        })
        .collect();

    let mut counts: BTreeMap<&str, ClassificationCounts> = BTreeMap::new();
    let mut series = Vec::with_capacity(series_defs.len());
    for ((language, measure, values), fits) in series_defs.iter().zip(fits.chunks(MAX_COMPONENTS)) {
        let label = measure.label();
        let candidates: Vec<Candidate<f64>> = fits
            .iter()
            .filter_map(|f| {
                let s = f.summary.as_ref()?;
                Some(Candidate {
                    k: f.k,
                    waic: s.waic.as_ref()?.waic,
                    converged: s.converged,
                })
            })
            .collect();
        let entry = counts.entry(kind(*measure)).or_insert_with(|| ClassificationCounts {
            kind: kind(*measure).to_string(),
            best_k: [0; MAX_COMPONENTS],
            unresolved: 0,
        });
        let (selection, error) = match select(language, &label, &candidates) {
            Ok(row) => {
                entry.best_k[row.best_k - 1] += 1;
                (Some(row), None)
            }
            Err(e) => {
                entry.unresolved += 1;
                (None, Some(e.to_string()))
            }
        };
        series.push(SeriesFits {
            language: language.clone(),
            measure: label,
            n: values.len(),
            fits: fits.to_vec(),
            selection,
            error,
        });
    }
    let mut classification: Vec<ClassificationCounts> = counts.into_values().collect();
    classification.sort_by_key(|c| if c.kind == "score" { 0 } else { 1 });
    MixtureReport {
        options: opts.clone(),
        series,
        classification,
    }
}
