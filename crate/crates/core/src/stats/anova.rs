//! One-way ANOVA with eta and omega squared, Levene's variance-homogeneity test
//! and Tukey HSD pairwise comparisons.

use serde::{Deserialize, Serialize};

use super::special::{f_sf, studentized_range_cdf};
use super::{group_values, mean, StatsError};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AnovaResult<T: Real> {
    pub f: T,
    pub p: T,
    pub df_between: usize,
    pub df_within: usize,
    pub ss_between: T,
    pub ss_within: T,
    pub ss_total: T,
    pub eta_sq: T,
    /// Omega squared, clamped below at 0.
    pub omega_sq: T,
    pub omega_sq_raw: T,
}

fn check_groups<T: Real>(groups: &[Vec<T>]) -> Result<(), StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::DegenerateGroups(format!("{} group(s), need at least 2", groups.len())));
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(StatsError::DegenerateGroups(format!("a group has {} value(s), need at least 2", g.len())));
    }
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

pub fn anova_groups<T: Real>(groups: &[Vec<T>]) -> Result<AnovaResult<T>, StatsError> {
    check_groups(groups)?;
    let all: Vec<T> = groups.iter().flatten().copied().collect();
    let grand = mean(&all);
    let mut ss_between = T::zero();
    let mut ss_within = T::zero();
    for g in groups {
        let m = mean(g);
        ss_between = ss_between + T::from_count(g.len()) * (m - grand) * (m - grand);
        ss_within = ss_within + g.iter().map(|&v| (v - m) * (v - m)).sum::<T>();
    }
    let ss_total = ss_between + ss_within;
    let df_between = groups.len() - 1;
    let df_within = all.len() - groups.len();
    let ms_within = ss_within / T::from_count(df_within);
    if !(ms_within > T::zero()) {
        return Err(StatsError::DegenerateGroups("pooled within-group variance is zero".into()));
    }
    let ms_between = ss_between / T::from_count(df_between);
    let f = ms_between / ms_within;
    let p = f_sf(f, T::from_count(df_between), T::from_count(df_within));
    let omega_sq_raw = (ss_between - T::from_count(df_between) * ms_within) / (ss_total + ms_within);
    Ok(AnovaResult {
        f,
        p,
        df_between,
        df_within,
        ss_between,
        ss_within,
        ss_total,
        eta_sq: ss_between / ss_total,
        omega_sq: omega_sq_raw.max(T::zero()),
        omega_sq_raw,
    })
}

/// ANOVA of `values` grouped by the parallel `labels`.
pub fn anova_oneway<T: Real, S: AsRef<str>>(values: &[T], labels: &[S]) -> Result<AnovaResult<T>, StatsError> {
    let groups: Vec<Vec<T>> = group_values(values, labels)?.into_values().collect();
    anova_groups(&groups)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeveneCenter {
    Mean,
    /// Brown-Forsythe variant.
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LeveneResult<T: Real> {
    pub statistic: T,
    pub p: T,
    pub df_between: usize,
    pub df_within: usize,
    pub center: LeveneCenter,
}

pub fn levene_groups<T: Real>(groups: &[Vec<T>], center: LeveneCenter) -> Result<LeveneResult<T>, StatsError> {
    check_groups(groups)?;
    let deviations: Vec<Vec<T>> = groups
        .iter()
        .map(|g| {
            let c = match center {
                LeveneCenter::Mean => mean(g),
                LeveneCenter::Median => super::descriptive::quantile_sorted(&super::sorted(g).expect("checked finite"), T::lit(0.5)),
            };
            g.iter().map(|&v| (v - c).abs()).collect()
        })
        .collect();
    let all_equal = {
        let first = deviations[0][0];
        deviations.iter().flatten().all(|&d| d == first)
    };
    if all_equal {
        // Identical spread everywhere: no evidence of heterogeneity at all.
        return Ok(LeveneResult {
            statistic: T::zero(),
            p: T::one(),
            df_between: groups.len() - 1,
            df_within: groups.iter().map(Vec::len).sum::<usize>() - groups.len(),
            center,
        });
    }
    let a = anova_groups(&deviations)?;
    Ok(LeveneResult {
        statistic: a.f,
        p: a.p,
        df_between: a.df_between,
        df_within: a.df_within,
        center,
    })
}

pub fn levene<T: Real, S: AsRef<str>>(values: &[T], labels: &[S], center: LeveneCenter) -> Result<LeveneResult<T>, StatsError> {
    let groups: Vec<Vec<T>> = group_values(values, labels)?.into_values().collect();
    levene_groups(&groups, center)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TukeyComparison<T: Real> {
    pub a: String,
    pub b: String,
    /// mean(b) - mean(a)
    pub diff: T,
    pub q: T,
    pub p: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TukeyResult<T: Real> {
    /// The choice of Tukey HSD as post-hoc test is an assumption, not a reported method.
    pub extrapolated: bool,
    pub df_within: usize,
    pub comparisons: Vec<TukeyComparison<T>>,
}

pub fn tukey_hsd<T: Real, S: AsRef<str>>(values: &[T], labels: &[S]) -> Result<TukeyResult<T>, StatsError> {
    let grouped = group_values(values, labels)?;
    let names: Vec<String> = grouped.keys().cloned().collect();
    let groups: Vec<Vec<T>> = grouped.into_values().collect();
    let a = anova_groups(&groups)?;
    let ms_within = a.ss_within / T::from_count(a.df_within);
    let df = T::from_count(a.df_within);
    let k = groups.len();
    let means: Vec<T> = groups.iter().map(|g| mean(g)).collect();
    let mut comparisons = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            let diff = means[j] - means[i];
            let inv = T::one() / T::from_count(groups[i].len()) + T::one() / T::from_count(groups[j].len());
            let se = (ms_within * T::lit(0.5) * inv).sqrt();
            let q = diff.abs() / se;
            let p = (T::one() - studentized_range_cdf(q, k, df)).max(T::zero()).min(T::one());
            comparisons.push(TukeyComparison {
                a: names[i].clone(),
                b: names[j].clone(),
                diff,
                q,
                p,
            });
        }
    }
    Ok(TukeyResult {
        extrapolated: true,
        df_within: a.df_within,
        comparisons,
    })
}
