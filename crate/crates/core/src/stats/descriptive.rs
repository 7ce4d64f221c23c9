//! Quantiles and box-plot summaries.

use serde::{Deserialize, Serialize};

use super::{sorted, StatsError};
use crate::Real;

/// Linearly interpolated quantile of already sorted data (the "type 7" rule).
pub fn quantile_sorted<T: Real>(sorted: &[T], p: T) -> T {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = T::from_count(sorted.len() - 1) * p.max(T::zero()).min(T::one());
    let lo = h.floor();
    let i = lo.to_usize().unwrap_or(0);
    if i + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[i] + (h - lo) * (sorted[i + 1] - sorted[i])
}

pub fn quantile<T: Real>(values: &[T], p: T) -> Result<T, StatsError> {
    if values.is_empty() {
        return Err(StatsError::SampleTooSmall { n: 0, min: 1 });
    }
    Ok(quantile_sorted(&sorted(values)?, p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoxplotStats<T: Real> {
    pub n: usize,
    pub min: T,
    pub q1: T,
    pub median: T,
    pub q3: T,
    pub max: T,
    /// Most extreme observations within 1.5 IQR of the quartiles.
    pub lower_whisker: T,
    pub upper_whisker: T,
    pub outliers: Vec<T>,
}

pub fn boxplot<T: Real>(values: &[T]) -> Result<BoxplotStats<T>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::SampleTooSmall { n: 0, min: 1 });
    }
    let s = sorted(values)?;
    let q1 = quantile_sorted(&s, T::lit(0.25));
    let median = quantile_sorted(&s, T::lit(0.5));
    let q3 = quantile_sorted(&s, T::lit(0.75));
    let reach = T::lit(1.5) * (q3 - q1);
    let (lo_fence, hi_fence) = (q1 - reach, q3 + reach);
    let inside: Vec<T> = s.iter().copied().filter(|&v| v >= lo_fence && v <= hi_fence).collect();
    Ok(BoxplotStats {
        n: s.len(),
        min: s[0],
        q1,
        median,
        q3,
        max: s[s.len() - 1],
        lower_whisker: inside.first().copied().unwrap_or(q1),
        upper_whisker: inside.last().copied().unwrap_or(q3),
        outliers: s.iter().copied().filter(|&v| v < lo_fence || v > hi_fence).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantiles_match_linear_rule() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(quantile(&v, 0.25).unwrap(), 1.75);
        assert_abs_diff_eq!(quantile(&v, 0.5).unwrap(), 2.5);
        assert_abs_diff_eq!(quantile(&v, 1.0).unwrap(), 4.0);
        assert_abs_diff_eq!(quantile(&[5.0f32], 0.3).unwrap(), 5.0);
    }

    #[test]
    fn boxplot_flags_outliers() {
        let b = boxplot(&[1.0, 2.0, 2.0, 3.0, 3.0, 3.0, 4.0, 20.0]).unwrap();
        assert_eq!(b.outliers, vec![20.0]);
        assert_eq!(b.upper_whisker, 4.0);
        assert_eq!(b.lower_whisker, 1.0);
        assert_eq!(b.max, 20.0);
        assert!(boxplot::<f64>(&[]).is_err());
    }
}
