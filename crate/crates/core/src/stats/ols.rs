//! Ordinary least squares with dummy-coded group membership.

use serde::{Deserialize, Serialize};

use super::special::t_two_sided;
use super::{group_values, StatsError};
use crate::Real;

pub const INTERCEPT: &str = "Intercept";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OlsTerm<T: Real> {
    pub name: String,
    pub coef: T,
    pub se: T,
    pub t: T,
    pub p: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OlsResult<T: Real> {
    pub terms: Vec<OlsTerm<T>>,
    pub r_squared: T,
    pub n: usize,
    pub df_resid: usize,
    pub base_level: String,
}

impl<T: Real> OlsResult<T> {
    pub fn term(&self, name: &str) -> Option<&OlsTerm<T>> {
        self.terms.iter().find(|t| t.name == name)
    }
}

/// In-place Cholesky factor of a symmetric positive-definite matrix (lower triangle).
fn cholesky<T: Real>(a: &mut [Vec<T>]) -> Result<(), StatsError> {
    let k = a.len();
    let scale = (0..k).map(|i| a[i][i].abs()).fold(T::zero(), T::max);
    let tol = scale * T::epsilon() * T::from_count(k.max(1)) * T::lit(16.0);
    for j in 0..k {
        let mut d = a[j][j];
        for p in 0..j {
            d = d - a[j][p] * a[j][p];
        }
        if !(d > tol) {
            return Err(StatsError::RankDeficient);
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in (j + 1)..k {
            let mut s = a[i][j];
            for p in 0..j {
                s = s - a[i][p] * a[j][p];
            }
            a[i][j] = s / d;
        }
    }
    Ok(())
}

/// Inverse of `X'X` from its Cholesky factor.
fn cholesky_inverse<T: Real>(l: &[Vec<T>]) -> Vec<Vec<T>> {
    let k = l.len();
    let mut inv = vec![vec![T::zero(); k]; k];
    for col in 0..k {
        // solve L y = e_col, then L' x = y
        let mut y = vec![T::zero(); k];
        for i in 0..k {
            let mut s = if i == col { T::one() } else { T::zero() };
            for p in 0..i {
                s = s - l[i][p] * y[p];
            }
            y[i] = s / l[i][i];
        }
        for i in (0..k).rev() {
            let mut s = y[i];
            for p in (i + 1)..k {
                s = s - l[p][i] * inv[p][col];
            }
            inv[i][col] = s / l[i][i];
        }
    }
    inv
}

/// Least squares fit of `y` on the columns of the row-major design `x`.
pub fn ols<T: Real>(x: &[Vec<T>], y: &[T], names: &[String], base_level: &str) -> Result<OlsResult<T>, StatsError> {
    let n = y.len();
    let k = names.len();
    if x.len() != n || x.iter().any(|row| row.len() != k) {
        return Err(StatsError::InvalidArgument("design does not match response".into()));
    }
    if y.iter().chain(x.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    if n <= k {
        return Err(StatsError::RankDeficient);
    }
    let mut xtx = vec![vec![T::zero(); k]; k];
    let mut xty = vec![T::zero(); k];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..k {
            xty[i] = xty[i] + row[i] * yi;
            for j in 0..=i {
                xtx[i][j] = xtx[i][j] + row[i] * row[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            xtx[j][i] = xtx[i][j];
        }
    }
    cholesky(&mut xtx)?;
    let inv = cholesky_inverse(&xtx);
    let beta: Vec<T> = (0..k).map(|i| (0..k).map(|j| inv[i][j] * xty[j]).sum()).collect();

    let ybar = super::mean(y);
    let mut ss_res = T::zero();
    let mut ss_tot = T::zero();
    for (row, &yi) in x.iter().zip(y) {
        let fitted: T = row.iter().zip(&beta).map(|(&a, &b)| a * b).sum();
        ss_res = ss_res + (yi - fitted) * (yi - fitted);
        ss_tot = ss_tot + (yi - ybar) * (yi - ybar);
    }
    let df_resid = n - k;
    let sigma2 = ss_res / T::from_count(df_resid);
    let df = T::from_count(df_resid);
    let terms = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let se = (sigma2 * inv[i][i]).sqrt();
            let t = if se > T::zero() { beta[i] / se } else { T::zero() };
            let p = if se > T::zero() { t_two_sided(t, df) } else { T::one() };
            OlsTerm {
                name: name.clone(),
                coef: beta[i],
                se,
                t,
                p,
            }
        })
        .collect();
    let r_squared = if ss_tot > T::zero() {
        (T::one() - ss_res / ss_tot).max(T::zero())
    } else {
        T::zero()
    };
    Ok(OlsResult {
        terms,
        r_squared,
        n,
        df_resid,
        base_level: base_level.to_string(),
    })
}

/// Regresses `values` on an intercept plus one dummy per non-base level of `labels`.
/// Dummy terms are named after their level, in sorted level order.
pub fn ols_dummy<T: Real, S: AsRef<str>>(values: &[T], labels: &[S], base: &str) -> Result<OlsResult<T>, StatsError> {
    let groups = group_values(values, labels)?;
    if !groups.contains_key(base) {
        return Err(StatsError::MissingBaseLevel(base.to_string()));
    }
    let levels: Vec<&String> = groups.keys().filter(|l| l.as_str() != base).collect();
    let mut names = vec![INTERCEPT.to_string()];
    names.extend(levels.iter().map(|l| l.to_string()));
    let x: Vec<Vec<T>> = labels
        .iter()
        .map(|l| {
            let mut row = vec![T::zero(); names.len()];
            row[0] = T::one();
            if let Some(pos) = levels.iter().position(|lv| lv.as_str() == l.as_ref()) {
                row[pos + 1] = T::one();
            }
            row
        })
        .collect();
    ols(&x, values, &names, base)
}
