//! Pearson product-moment correlations between the five factor scores.

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::questionnaire::Factor;
use crate::scoring::CaseRecord;
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CorrelationMatrix<T: Real> {
    pub labels: Vec<String>,
    pub n: usize,
    pub r: Vec<Vec<T>>,
}

impl<T: Real> CorrelationMatrix<T> {
    pub fn get(&self, a: Factor, b: Factor) -> T {
        self.r[a.position()][b.position()]
    }

    pub fn to_csv(&self, decimals: usize) -> String {
        let mut out = format!("factor,{}\n", self.labels.join(","));
        for (label, row) in self.labels.iter().zip(&self.r) {
            out.push_str(label);
            for v in row {
                out.push_str(&format!(",{:.*}", decimals, v.to_f64_lossy()));
            }
            out.push('\n');
        }
        out
    }
}

/// Pearson r of two equally long series. `None` if either is constant.
pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Option<T> {
    assert_eq!(x.len(), y.len(), "pearson needs paired series");
    let mx = super::mean(x);
    let my = super::mean(y);
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return None;
    }
    let r = sxy / (sxx * syy).sqrt();
    Some(r.max(-T::one()).min(T::one()))
}

/// Correlation matrix of named columns.
pub fn pearson_columns<T: Real>(labels: &[String], columns: &[Vec<T>]) -> Result<CorrelationMatrix<T>, StatsError> {
    let n = columns.first().map_or(0, Vec::len);
    if n < 3 {
        return Err(StatsError::SampleTooSmall { n, min: 3 });
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(StatsError::InvalidArgument("columns differ in length".into()));
    }
    if columns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let k = columns.len();
    let mut r = vec![vec![T::one(); k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let v = pearson(&columns[i], &columns[j]).ok_or_else(|| {
                let constant = if super::variance(&columns[i]) > T::zero() { j } else { i };
                StatsError::DegenerateVariance(labels[constant].clone())
            })?;
            r[i][j] = v;
            r[j][i] = v;
        }
    }
    if k == 1 && super::variance(&columns[0]) <= T::zero() {
        return Err(StatsError::DegenerateVariance(labels[0].clone()));
    }
    Ok(CorrelationMatrix {
        labels: labels.to_vec(),
        n,
        r,
    })
}

pub fn pearson_matrix(cases: &[CaseRecord]) -> Result<CorrelationMatrix<f64>, StatsError> {
    let labels: Vec<String> = Factor::ALL.iter().map(|f| f.code().to_string()).collect();
    let columns: Vec<Vec<f64>> = Factor::ALL
        .iter()
        .map(|&f| cases.iter().map(|c| c.score(f)).collect())
        .collect();
    pearson_columns(&labels, &columns)
}
