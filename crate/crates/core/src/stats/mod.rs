//! Classical statistics: descriptives, correlations, kernel density estimates,
//! one-way ANOVA with effect sizes, Levene and Tukey HSD, normality tests and
//! dummy-coded least squares.

pub mod anova;
pub mod correlation;
pub mod descriptive;
pub mod kde;
pub mod normality;
pub mod ols;
pub mod special;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::Real;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatsError {
    #[error("sample size {n} outside supported range {min}..={max}")]
    SampleSizeOutOfRange { n: usize, min: usize, max: usize },
    #[error("sample size {n} below minimum {min}")]
    SampleTooSmall { n: usize, min: usize },
    #[error("{0} has zero variance")]
    DegenerateVariance(String),
    #[error("data are degenerate: {0}")]
    DegenerateData(String),
    #[error("groups are degenerate: {0}")]
    DegenerateGroups(String),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("base level `{0}` not present")]
    MissingBaseLevel(String),
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("values and labels differ in length ({values} vs {labels})")]
    LengthMismatch { values: usize, labels: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Sorted copy of `values`, rejecting NaN and infinities.
pub fn sorted<T: Real>(values: &[T]) -> Result<Vec<T>, StatsError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut out = values.to_vec();
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    Ok(out)
}

pub fn mean<T: Real>(values: &[T]) -> T {
    values.iter().copied().sum::<T>() / T::from_count(values.len())
}

/// Sample variance with the n - 1 denominator. Zero for fewer than two values.
pub fn variance<T: Real>(values: &[T]) -> T {
    if values.len() < 2 {
        return T::zero();
    }
    let m = mean(values);
    values.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / T::from_count(values.len() - 1)
}

pub fn std_dev<T: Real>(values: &[T]) -> T {
    variance(values).sqrt()
}

/// Splits parallel `values`/`labels` into groups keyed by label, in label order.
pub fn group_values<T: Real, S: AsRef<str>>(
    values: &[T],
    labels: &[S],
) -> Result<BTreeMap<String, Vec<T>>, StatsError> {
    if values.len() != labels.len() {
        return Err(StatsError::LengthMismatch {
            values: values.len(),
            labels: labels.len(),
        });
    }
    let mut groups: BTreeMap<String, Vec<T>> = BTreeMap::new();
    for (&v, l) in values.iter().zip(labels) {
        groups.entry(l.as_ref().to_string()).or_default().push(v);
    }
    Ok(groups)
}
