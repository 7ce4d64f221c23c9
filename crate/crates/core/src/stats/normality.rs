//! Shapiro-Wilk (Royston's AS R94 approximation) and the probability plot
//! correlation coefficient with a Monte Carlo null threshold.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::descriptive::quantile_sorted;
use super::special::{normal_quantile, normal_sf};
use super::{sorted, StatsError};
use crate::Real;

pub const SW_MIN_N: usize = 3;
pub const SW_MAX_N: usize = 5000;
pub const PPCC_MIN_N: usize = 10;

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly<T: Real>(c: &[f64], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &ci| acc * x + T::lit(ci))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ShapiroWilk<T: Real> {
    pub w: T,
    pub p: T,
}

/// Half-sample Shapiro-Wilk coefficients a_1 >= a_2 >= ... (largest first).
fn sw_coefficients<T: Real>(n: usize) -> Vec<T> {
    let nn2 = n / 2;
    if n == 3 {
        return vec![T::FRAC_1_SQRT_2()];
    }
    let an25 = T::from_count(n) + T::lit(0.25);
    let m: Vec<T> = (1..=nn2)
        .map(|i| -normal_quantile((T::from_count(i) - T::lit(0.375)) / an25))
        .collect();
    let summ2 = T::lit(2.0) * m.iter().map(|&v| v * v).sum::<T>();
    let ssumm2 = summ2.sqrt();
    let rsn = T::one() / T::from_count(n).sqrt();
    let a1 = m[0] / ssumm2 + poly(&C1, rsn);
    let mut a = vec![T::zero(); nn2];
    a[0] = a1;
    let two = T::lit(2.0);
    let (start, fac) = if n > 5 {
        let a2 = m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        let fac = ((summ2 - two * m[0] * m[0] - two * m[1] * m[1]) / (T::one() - two * a1 * a1 - two * a2 * a2)).sqrt();
        (2, fac)
    } else {
        let fac = ((summ2 - two * m[0] * m[0]) / (T::one() - two * a1 * a1)).sqrt();
        (1, fac)
    };
    for i in start..nn2 {
        a[i] = m[i] / fac;
    }
    a
}

pub fn shapiro_wilk<T: Real>(values: &[T]) -> Result<ShapiroWilk<T>, StatsError> {
    let n = values.len();
    if !(SW_MIN_N..=SW_MAX_N).contains(&n) {
        return Err(StatsError::SampleSizeOutOfRange {
            n,
            min: SW_MIN_N,
            max: SW_MAX_N,
        });
    }
    let x = sorted(values)?;
    let range = x[n - 1] - x[0];
    if !(range > T::zero()) {
        return Err(StatsError::DegenerateData("all values identical".into()));
    }
    let x: Vec<T> = x.iter().map(|&v| (v - x[0]) / range).collect();
    let a = sw_coefficients::<T>(n);
    let mean = super::mean(&x);
    let ss = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
    let num = a
        .iter()
        .enumerate()
        .map(|(i, &ai)| ai * (x[n - 1 - i] - x[i]))
        .sum::<T>();
    let w = (num * num / ss).min(T::one());
    let w1 = T::one() - w;

    if n == 3 {
        let pi6 = T::lit(6.0) / T::PI();
        let stqr = T::PI() / T::lit(3.0);
        let p = (pi6 * (w.sqrt().asin() - stqr)).max(T::zero()).min(T::one());
        return Ok(ShapiroWilk { w, p });
    }
    let an = T::from_count(n);
    let mut y = w1.ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return Ok(ShapiroWilk { w, p: T::lit(1e-99) });
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (poly(&C5, xx), poly(&C6, xx).exp())
    };
    let p = normal_sf((y - m) / s).max(T::zero()).min(T::one());
    Ok(ShapiroWilk { w, p })
}

/// Blom plotting-position normal quantiles for a sample of size `n`.
pub fn blom_quantiles<T: Real>(n: usize) -> Vec<T> {
    let denom = T::from_count(n) + T::lit(0.25);
    (1..=n)
        .map(|i| normal_quantile((T::from_count(i) - T::lit(0.375)) / denom))
        .collect()
}

/// Correlation between sorted data and the theoretical quantiles `m`.
fn ppcc_sorted<T: Real>(x: &[T], m: &[T]) -> T {
    super::correlation::pearson(x, m).unwrap_or(T::zero())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PpccResult<T: Real> {
    pub n: usize,
    pub r: T,
    pub r2: T,
    pub alpha: T,
    pub mc_draws: usize,
    pub seed: u64,
    /// alpha-quantile of the null distribution of r.
    pub threshold_r: T,
    /// alpha-quantile of the null distribution of r squared.
    pub threshold_r2: T,
    pub rejected: bool,
}

/// Null distribution of the probability plot correlation for samples of size `n`.
/// Draw `d` uses its own ChaCha stream, so the result does not depend on thread count.
pub fn ppcc_null_r<T: Real>(n: usize, mc_draws: usize, seed: u64) -> Vec<T> {
    let m = blom_quantiles::<T>(n);
    let mut r: Vec<T> = (0..mc_draws)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n),
            |buf, d| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(d as u64);
                buf.clear();
                buf.extend((0..n).map(|_| T::sample_standard_normal(&mut rng)));
                buf.sort_by(|a, b| a.partial_cmp(b).expect("normal draws are finite"));
                ppcc_sorted(buf, &m)
            },
        )
        .collect();
    r.sort_by(|a, b| a.partial_cmp(b).expect("correlations are finite"));
    r
}

/// `(threshold_r, threshold_r2)` at level `alpha`.
pub fn ppcc_threshold<T: Real>(n: usize, alpha: T, mc_draws: usize, seed: u64) -> Result<(T, T), StatsError> {
    if n < PPCC_MIN_N {
        return Err(StatsError::SampleTooSmall { n, min: PPCC_MIN_N });
    }
    if mc_draws == 0 || !(alpha > T::zero() && alpha < T::one()) {
        return Err(StatsError::InvalidArgument("need mc_draws > 0 and 0 < alpha < 1".into()));
    }
    let r = ppcc_null_r::<T>(n, mc_draws, seed);
    let r2: Vec<T> = r.iter().map(|&v| v * v).collect();
    Ok((quantile_sorted(&r, alpha), quantile_sorted(&r2, alpha)))
}

pub fn ppcc<T: Real>(values: &[T], alpha: T, mc_draws: usize, seed: u64) -> Result<PpccResult<T>, StatsError> {
    let n = values.len();
    if n < PPCC_MIN_N {
        return Err(StatsError::SampleTooSmall { n, min: PPCC_MIN_N });
    }
    let thresholds = ppcc_threshold(n, alpha, mc_draws, seed)?;
    ppcc_with_threshold(values, alpha, mc_draws, seed, thresholds)
}

/// As [`ppcc`], with `(threshold_r, threshold_r2)` already computed for this
/// sample size by [`ppcc_threshold`] with the same alpha, draws and seed.
pub fn ppcc_with_threshold<T: Real>(
    values: &[T],
    alpha: T,
    mc_draws: usize,
    seed: u64,
    (threshold_r, threshold_r2): (T, T),
) -> Result<PpccResult<T>, StatsError> {
    let n = values.len();
    if n < PPCC_MIN_N {
        return Err(StatsError::SampleTooSmall { n, min: PPCC_MIN_N });
    }
    let x = sorted(values)?;
    let r = ppcc_sorted(&x, &blom_quantiles::<T>(n));
    Ok(PpccResult {
        n,
        r,
        r2: r * r,
        alpha,
        mc_draws,
        seed,
        threshold_r,
        threshold_r2,
        rejected: r < threshold_r,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NormalityResult<T: Real> {
    pub n: usize,
    pub w: T,
    pub p: T,
    pub alpha: T,
    /// Shapiro-Wilk p below alpha.
    pub normal_rejected: bool,
    /// Absent for samples too small for the plot correlation.
    pub ppcc: Option<PpccResult<T>>,
}

pub fn normality<T: Real>(values: &[T], alpha: T, mc_draws: usize, seed: u64) -> Result<NormalityResult<T>, StatsError> {
    let sw = shapiro_wilk(values)?;
    let ppcc = if values.len() >= PPCC_MIN_N {
        Some(ppcc(values, alpha, mc_draws, seed)?)
    } else {
        None
    };
    Ok(NormalityResult {
        n: values.len(),
        w: sw.w,
        p: sw.p,
        alpha,
        normal_rejected: sw.p < alpha,
        ppcc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    // scipy.stats.shapiro
    const FIXTURES: [(&[f64], f64, f64); 6] = [
        (&[2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 4.0, 3.9, 6.2], 0.9560292178870787, 0.7398229616615948),
        (
            &[0.5, 0.7, 0.8, 1.0, 1.1, 1.1, 1.3, 1.6, 1.8, 2.0, 2.4, 2.9, 3.3, 4.1, 5.0, 6.2, 7.7, 9.5, 12.0, 15.1],
            0.7946928741034686,
            0.0007208072805410299,
        ),
        (
            &[
                4.0, 4.5, 5.0, 5.5, 5.0, 6.0, 6.5, 7.0, 5.0, 4.5, 3.0, 5.5, 6.0, 6.0, 5.5, 4.0, 7.0, 6.5, 5.0, 5.5, 2.5, 6.0, 5.0, 4.5,
                5.5, 6.0, 7.0, 3.5, 5.0, 6.5,
            ],
            0.9554655517649776,
            0.23621616442528176,
        ),
        (&[1.0, 2.0, 4.0], 0.9642857142857142, 0.6368868450289689),
        (&[1.0, 2.5, 2.0, 7.0], 0.8352461848273042, 0.18189789480378632),
        (&[3.2, 1.1, 4.8, 2.2, 2.9], 0.9839229282261938, 0.9544506513616459),
    ];

    #[test]
    fn shapiro_wilk_matches_reference() {
        for (x, w, p) in FIXTURES {
            let r = shapiro_wilk(x).unwrap();
            assert_abs_diff_eq!(r.w, w, epsilon = 1e-6);
            assert_abs_diff_eq!(r.p, p, epsilon = 1e-4);
        }
    }

    #[test]
    fn shapiro_wilk_f32() {
        let x: Vec<f32> = FIXTURES[0].0.iter().map(|&v| v as f32).collect();
        let r = shapiro_wilk(&x).unwrap();
        assert!((r.w - 0.956_029_2).abs() < 1e-4);
    }

    #[test]
    fn shapiro_wilk_size_limits() {
        assert!(matches!(shapiro_wilk(&[1.0, 2.0]), Err(StatsError::SampleSizeOutOfRange { n: 2, .. })));
        assert!(shapiro_wilk(&vec![1.0; 5001]).is_err());
        assert!(matches!(shapiro_wilk(&[2.0; 5]), Err(StatsError::DegenerateData(_))));
    }

    #[test]
    fn exact_quantiles_have_unit_ppcc() {
        let q = blom_quantiles::<f64>(50);
        let r = ppcc(&q, 0.05, 200, 1).unwrap();
        assert_relative_eq!(r.r2, 1.0, epsilon = 1e-12);
        assert!(!r.rejected);
        assert!(matches!(ppcc(&[1.0; 9], 0.05, 10, 1), Err(StatsError::SampleTooSmall { .. })));
    }

    #[test]
    fn threshold_is_deterministic() {
        let a = ppcc_threshold::<f64>(30, 0.05, 500, 9).unwrap();
        let b = ppcc_threshold::<f64>(30, 0.05, 500, 9).unwrap();
        assert_eq!(a, b);
        assert_relative_eq!(a.1, a.0 * a.0, max_relative = 1e-6);
    }
}
