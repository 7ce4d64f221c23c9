//! WAIC on the deviance scale and lowest-WAIC model selection.

use serde::{Deserialize, Serialize};

use super::{log_sum_exp, MixtureError, MixtureFit};
use crate::Real;

pub const MIN_DRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WaicScore<T: Real> {
    pub lppd: T,
    pub p_waic: T,
    /// `-2 (lppd - p_waic)`; lower is better.
    pub waic: T,
}

impl<T: Real> WaicScore<T> {
    pub fn new(lppd: T, p_waic: T) -> Self {
        WaicScore {
            lppd,
            p_waic,
            waic: -T::lit(2.0) * (lppd - p_waic),
        }
    }
}

pub fn waic<T: Real>(fit: &MixtureFit<T>, values: &[T]) -> Result<WaicScore<T>, MixtureError> {
    let s = fit.total_draws();
    if s < MIN_DRAWS {
        return Err(MixtureError::InsufficientDraws(s));
    }
    let sf = T::from_count(s);
    let mut lppd = T::zero();
    let mut p_waic = T::zero();
    let mut ll = vec![T::zero(); s];
    for &y in values {
        for (slot, d) in ll.iter_mut().zip(fit.all_draws()) {
            *slot = d.log_density(y);
        }
        lppd = lppd + log_sum_exp(&ll) - sf.ln();
        // shifted by the first draw so identical draws give exactly zero
        let shift = ll[0];
        let m = ll.iter().map(|&v| v - shift).sum::<T>() / sf;
        let var = ll.iter().map(|&v| (v - shift - m) * (v - shift - m)).sum::<T>() / (sf - T::one());
        p_waic = p_waic + var;
    }
    Ok(WaicScore::new(lppd, p_waic))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Candidate<T: Real> {
    pub k: usize,
    pub waic: T,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SelectionRow<T: Real> {
    pub language: String,
    pub measure: String,
    pub best_k: usize,
    pub candidates: Vec<Candidate<T>>,
}

/// Lowest WAIC among converged candidates; ties go to the smaller K.
pub fn select<T: Real>(language: &str, measure: &str, candidates: &[Candidate<T>]) -> Result<SelectionRow<T>, MixtureError> {
    let mut best: Option<&Candidate<T>> = None;
    let mut ordered: Vec<&Candidate<T>> = candidates.iter().collect();
    ordered.sort_by_key(|c| c.k);
    for c in ordered.into_iter().filter(|c| c.converged && c.waic.is_finite()) {
        if best.is_none_or(|b| c.waic < b.waic) {
            best = Some(c);
        }
    }
    let best = best.ok_or(MixtureError::NothingConverged)?;
    let mut candidates = candidates.to_vec();
    candidates.sort_by_key(|c| c.k);
    Ok(SelectionRow {
        language: language.to_string(),
        measure: measure.to_string(),
        best_k: best.k,
        candidates,
    })
}
