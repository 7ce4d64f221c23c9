//! Gaussian kernel density estimation.

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::Real;

/// Grid padding beyond the data range, in bandwidths.
pub const GRID_PAD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub enum BandwidthRule<T: Real> {
    /// sd * n^(-1/5)
    Scott,
    /// sd * (3n/4)^(-1/5)
    Silverman,
    Manual(T),
}

impl<T: Real> BandwidthRule<T> {
    pub fn name(&self) -> &'static str {
        match self {
            BandwidthRule::Scott => "scott",
            BandwidthRule::Silverman => "silverman",
            BandwidthRule::Manual(_) => "manual",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DensityEstimate<T: Real> {
    pub grid: Vec<T>,
    pub density: Vec<T>,
    pub bandwidth: T,
    pub rule: BandwidthRule<T>,
}

impl<T: Real> DensityEstimate<T> {
    /// Trapezoidal integral of the density over the grid.
    pub fn integral(&self) -> T {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) * T::lit(0.5))
            .sum()
    }
}

pub fn bandwidth<T: Real>(values: &[T], rule: BandwidthRule<T>) -> Result<T, StatsError> {
    let n = T::from_count(values.len());
    let h = match rule {
        BandwidthRule::Manual(h) => h,
        BandwidthRule::Scott | BandwidthRule::Silverman => {
            if values.len() < 2 {
                return Err(StatsError::SampleTooSmall { n: values.len(), min: 2 });
            }
            let sd = super::std_dev(values);
            if sd <= T::zero() {
                return Err(StatsError::DegenerateData("all values identical".into()));
            }
            let fifth = T::lit(-0.2);
            match rule {
                BandwidthRule::Scott => sd * n.powf(fifth),
                _ => sd * (n * T::lit(0.75)).powf(fifth),
            }
        }
    };
    if !(h > T::zero() && h.is_finite()) {
        return Err(StatsError::InvalidArgument(format!("bandwidth must be positive, got {h}")));
    }
    Ok(h)
}

/// Density at each point for kernel width `h`.
pub fn evaluate<T: Real>(values: &[T], h: T, points: &[T]) -> Vec<T> {
    let norm = T::one() / (T::from_count(values.len()) * h * (T::TAU()).sqrt());
    let half = T::lit(0.5);
    points
        .iter()
        .map(|&x| {
            let s: T = values
                .iter()
                .map(|&v| {
                    let z = (x - v) / h;
                    (-half * z * z).exp()
                })
                .sum();
            s * norm
        })
        .collect()
}

/// Estimate on `grid_size` evenly spaced points from min - 4h to max + 4h.
pub fn kde<T: Real>(values: &[T], rule: BandwidthRule<T>, grid_size: usize) -> Result<DensityEstimate<T>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::SampleTooSmall { n: 0, min: 1 });
    }
    if grid_size < 2 {
        return Err(StatsError::InvalidArgument("grid needs at least two points".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let h = bandwidth(values, rule)?;
    let lo = values.iter().copied().fold(T::infinity(), T::min) - T::lit(GRID_PAD) * h;
    let hi = values.iter().copied().fold(T::neg_infinity(), T::max) + T::lit(GRID_PAD) * h;
    let step = (hi - lo) / T::from_count(grid_size - 1);
    let grid: Vec<T> = (0..grid_size).map(|i| lo + step * T::from_count(i)).collect();
    let density = evaluate(values, h, &grid);
    Ok(DensityEstimate {
        grid,
        density,
        bandwidth: h,
        rule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const X: [f64; 5] = [1.0, 2.0, 2.5, 4.0, 7.0];

    #[test]
    fn matches_reference_bandwidths_and_densities() {
        // scipy.stats.gaussian_kde
        let h = bandwidth(&X, BandwidthRule::Scott).unwrap();
        assert_abs_diff_eq!(h, 1.6920151615160268, epsilon = 1e-12);
        let d = evaluate(&X, h, &[0.0, 2.0, 5.0]);
        for (a, b) in d.iter().zip([0.08177224, 0.1559453, 0.09155586]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-7);
        }
        let h = bandwidth(&X, BandwidthRule::Silverman).unwrap();
        assert_abs_diff_eq!(h, 1.7922227984938326, epsilon = 1e-12);
        let d = evaluate(&X, h, &[0.0, 2.0, 5.0]);
        for (a, b) in d.iter().zip([0.08252537, 0.15023524, 0.09347138]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-7);
        }
    }

    #[test]
    fn single_point_is_gaussian_bump() {
        let h = 0.7;
        let est = kde(&[3.0], BandwidthRule::Manual(h), 101).unwrap();
        for (x, d) in est.grid.iter().zip(&est.density) {
            let z: f64 = (x - 3.0) / h;
            let expected = (-0.5 * z * z).exp() / (h * std::f64::consts::TAU.sqrt());
            assert_abs_diff_eq!(*d, expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn integrates_to_one() {
        let est = kde(&X, BandwidthRule::Scott, 512).unwrap();
        assert!((est.integral() - 1.0).abs() < 0.01);
        assert!(est.density.iter().all(|&d| d >= 0.0));
        let est32 = kde(&[1.0f32, 2.0, 2.5, 4.0, 7.0], BandwidthRule::Silverman, 512).unwrap();
        assert!((est32.integral() - 1.0).abs() < 0.01);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(kde(&[2.0, 2.0, 2.0], BandwidthRule::Scott, 10), Err(StatsError::DegenerateData(_))));
        assert!(kde(&[2.0, 2.0], BandwidthRule::Manual(0.5), 10).is_ok());
        assert!(kde(&[2.0, 3.0], BandwidthRule::Manual(0.0), 10).is_err());
    }
}
