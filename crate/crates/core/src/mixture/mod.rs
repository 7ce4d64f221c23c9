//! Bayesian univariate Gaussian mixtures (K = 1, 2, 3) fitted by
//! Metropolis-within-Gibbs, with WAIC model selection, posterior membership
//! probabilities and posterior-mean densities.
//!
//! Model: `y_i ~ sum_k w_k Normal(mu_k, sigma_k)`, `mu_k ~ Normal(mu_loc, mu_scale)`,
//! `sigma_k ~ HalfNormal(sigma_scale)`, `w ~ Dirichlet(concentration)`.
//!
//! Each sweep draws the latent assignments, then the weights, then each mean from
//! its conjugate conditional, then a few random-walk Metropolis steps on each
//! log sd. Stored draws are relabelled so the means are non-decreasing.

pub mod diagnostics;
mod waic;

pub use waic::{select, waic, Candidate, SelectionRow, WaicScore};

use std::sync::atomic::{AtomicBool, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::descriptive::quantile_sorted;
use crate::Real;

pub const MIN_VALUES: usize = 10;
pub const MAX_COMPONENTS: usize = 3;
pub const RHAT_LIMIT: f64 = 1.05;
pub const ESS_LIMIT: f64 = 100.0;

const SIGMA_STEPS: usize = 3;
const TARGET_ACCEPT: f64 = 0.44;
const ADAPT_BATCH: usize = 50;

static INIT_WARNED: AtomicBool = AtomicBool::new(false);
/// Lower bound on component sds, as a fraction of the prior sd scale. On
/// lattice-valued data a component can otherwise collapse onto a single value
/// and its sd underflow.
pub const SD_FLOOR_FRACTION: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum MixtureError {
    #[error("need at least {MIN_VALUES} values, got {0}")]
    TooFewValues(usize),
    #[error("component count {0} not in 1..=3")]
    InvalidComponents(usize),
    #[error("need at least 2 chains, got {0}")]
    TooFewChains(usize),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("initial means have length {got}, expected {expected}")]
    InvalidInit { got: usize, expected: usize },
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("fit did not converge")]
    NonConvergence,
    #[error("need at least 100 posterior draws, got {0}")]
    InsufficientDraws(usize),
    #[error("no candidate model converged")]
    NothingConverged,
}

fn sample_mean_sd<T: Real>(values: &[T]) -> (T, T) {
    (crate::stats::mean(values), crate::stats::std_dev(values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MixturePrior<T: Real> {
    pub mu_loc: T,
    pub mu_scale: T,
    pub sigma_scale: T,
    pub weight_concentration: Vec<T>,
}

impl<T: Real> MixturePrior<T> {
    /// Location at the sample mean, both scales at the sample sd, flat Dirichlet.
    pub fn from_data(values: &[T], k: usize) -> Result<Self, MixtureError> {
        let (m, sd) = sample_mean_sd(values);
        let prior = MixturePrior {
            mu_loc: m,
            mu_scale: sd,
            sigma_scale: sd,
            weight_concentration: vec![T::one(); k],
        };
        prior.validate(k)?;
        Ok(prior)
    }

    pub fn validate(&self, k: usize) -> Result<(), MixtureError> {
        let positive = |x: T| x > T::zero() && x.is_finite();
        if !positive(self.mu_scale) || !positive(self.sigma_scale) || !self.mu_loc.is_finite() {
            return Err(MixtureError::InvalidPrior(format!(
                "scales must be positive and finite (mu_scale {}, sigma_scale {})",
                self.mu_scale, self.sigma_scale
            )));
        }
        if self.weight_concentration.len() != k || !self.weight_concentration.iter().all(|&a| positive(a)) {
            return Err(MixtureError::InvalidPrior(format!(
                "need {k} positive weight concentrations"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MixtureInit<T: Real> {
    pub component_means: Vec<T>,
}

impl<T: Real> MixtureInit<T> {
    /// `[mean]`, `[-4, 4]` or `[2, 4, 6]`. Logs a warning when a starting mean
    /// lies outside the data range.
    pub fn standard(values: &[T], k: usize) -> Self {
        let component_means = match k {
            1 => vec![crate::stats::mean(values)],
            2 => vec![T::lit(-4.0), T::lit(4.0)],
            _ => vec![T::lit(2.0), T::lit(4.0), T::lit(6.0)],
        };
        let lo = values.iter().copied().fold(T::infinity(), T::min);
        let hi = values.iter().copied().fold(T::neg_infinity(), T::max);
        if component_means.iter().any(|&m| m < lo || m > hi) && !INIT_WARNED.swap(true, Ordering::Relaxed) {
            log::warn!(
                "initial component means {component_means:?} fall outside the data range [{lo}, {hi}]; \
                 use recentred initial values to start inside the data (warned once)"
            );
        }
        MixtureInit { component_means }
    }

    /// Means at evenly spaced sample quantiles, always inside the data range.
    pub fn recentred(values: &[T], k: usize) -> Self {
        let mut s = values.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        let component_means = (1..=k)
            .map(|j| quantile_sorted(&s, T::from_count(j) / T::from_count(k + 1)))
            .collect();
        MixtureInit { component_means }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    pub draws: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 4,
            draws: 2000,
            warmup: 1000,
            seed: 0,
        }
    }
}

/// One posterior draw, components ordered by mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Draw<T: Real> {
    pub weights: Vec<T>,
    pub means: Vec<T>,
    pub sds: Vec<T>,
}

impl<T: Real> Draw<T> {
    fn relabelled(mut self) -> Self {
        let mut order: Vec<usize> = (0..self.means.len()).collect();
        order.sort_by(|&a, &b| self.means[a].partial_cmp(&self.means[b]).expect("finite means"));
        self.weights = order.iter().map(|&i| self.weights[i]).collect();
        self.sds = order.iter().map(|&i| self.sds[i]).collect();
        self.means = order.iter().map(|&i| self.means[i]).collect();
        self
    }

    /// Log density of the mixture at `y`.
    pub fn log_density(&self, y: T) -> T {
        let terms: Vec<T> = (0..self.means.len())
            .map(|k| self.weights[k].ln() + log_normal_pdf(y, self.means[k], self.sds[k]))
            .collect();
        log_sum_exp(&terms)
    }
}

pub(crate) fn log_normal_pdf<T: Real>(y: T, mu: T, sd: T) -> T {
    let z = (y - mu) / sd;
    -T::lit(0.5) * z * z - sd.ln() - T::lit(0.5) * T::TAU().ln()
}

pub(crate) fn log_sum_exp<T: Real>(x: &[T]) -> T {
    let m = x.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    m + x.iter().map(|&v| (v - m).exp()).sum::<T>().ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ParamDiagnostic<T: Real> {
    pub name: String,
    /// `None` for a parameter that is constant across all draws.
    pub rhat: Option<T>,
    pub ess: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MixtureFit<T: Real> {
    pub k: usize,
    pub prior: MixturePrior<T>,
    pub init: MixtureInit<T>,
    pub config: SamplerConfig,
    /// `draws[chain][iteration]`, post-warmup.
    pub draws: Vec<Vec<Draw<T>>>,
    pub diagnostics: Vec<ParamDiagnostic<T>>,
    /// Mean Metropolis acceptance rate of the log-sd updates per chain.
    pub sigma_acceptance: Vec<T>,
    pub converged: bool,
}

/// Per-chain RNG: the master seed with the chain index as stream number.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

fn sample_categorical<T: Real, R: Rng + ?Sized>(log_p: &[T], rng: &mut R) -> usize {
    let m = log_p.iter().copied().fold(T::neg_infinity(), T::max);
    let p: Vec<T> = log_p.iter().map(|&l| (l - m).exp()).collect();
    let total: T = p.iter().copied().sum();
    let mut u = T::sample_open01(rng) * total;
    for (k, &pk) in p.iter().enumerate() {
        if u < pk {
            return k;
        }
        u = u - pk;
    }
    p.len() - 1
}

fn sample_dirichlet<T: Real, R: Rng + ?Sized>(alpha: &[T], rng: &mut R) -> Vec<T> {
    let g: Vec<T> = alpha
        .iter()
        .map(|&a| T::sample_gamma(a, rng).max(T::min_positive_value()))
        .collect();
    let total: T = g.iter().copied().sum();
    g.into_iter().map(|x| x / total).collect()
}

struct ChainOutput<T: Real> {
    draws: Vec<Draw<T>>,
    acceptance: T,
}

fn run_chain<T: Real>(
    values: &[T],
    prior: &MixturePrior<T>,
    init: &MixtureInit<T>,
    config: &SamplerConfig,
    chain: usize,
) -> ChainOutput<T> {
    let k = init.component_means.len();
    let n = values.len();
    let mut rng = chain_rng(config.seed, chain);
    let half = T::lit(0.5);

    let mut means = init.component_means.clone();
    let mut sds = vec![prior.sigma_scale; k];
    let mut weights = vec![T::one() / T::from_count(k); k];
    let mut z = vec![0usize; n];
    let mut log_step = vec![T::zero(); k];
    let mut batch_accepts = vec![0usize; k];
    let mut accepted = 0usize;
    let mut proposed = 0usize;

    let prior_prec = T::one() / (prior.mu_scale * prior.mu_scale);
    let sigma_scale_sq = prior.sigma_scale * prior.sigma_scale;
    let log_floor = (prior.sigma_scale * T::lit(SD_FLOOR_FRACTION)).ln();
    let total = config.warmup + config.draws;
    let mut draws = Vec::with_capacity(config.draws);
    let mut log_p = vec![T::zero(); k];

    for iter in 0..total {
        if iter == config.warmup {
            accepted = 0;
            proposed = 0;
        }

        // assignments
        let mut counts = vec![0usize; k];
        if k > 1 {
            let log_w: Vec<T> = weights.iter().map(|w| w.ln()).collect();
            let log_sd: Vec<T> = sds.iter().map(|s| s.ln()).collect();
            for (zi, &y) in z.iter_mut().zip(values) {
                for j in 0..k {
                    let d = (y - means[j]) / sds[j];
                    log_p[j] = log_w[j] - log_sd[j] - half * d * d;
                }
                *zi = sample_categorical(&log_p, &mut rng);
                counts[*zi] += 1;
            }
        } else {
            counts[0] = n;
        }

        // weights
        if k > 1 {
            let alpha: Vec<T> = (0..k)
                .map(|j| prior.weight_concentration[j] + T::from_count(counts[j]))
                .collect();
            weights = sample_dirichlet(&alpha, &mut rng);
        }

        // means, conjugate given sds
        let mut sums = vec![T::zero(); k];
        for (&zi, &y) in z.iter().zip(values) {
            sums[zi] = sums[zi] + y;
        }
        for j in 0..k {
            let like_prec = T::from_count(counts[j]) / (sds[j] * sds[j]);
            let prec = prior_prec + like_prec;
            let loc = (prior.mu_loc * prior_prec + sums[j] / (sds[j] * sds[j])) / prec;
            means[j] = loc + T::sample_standard_normal(&mut rng) / prec.sqrt();
        }

        // sds, random-walk Metropolis on log scale
        let mut ss = vec![T::zero(); k];
        for (&zi, &y) in z.iter().zip(values) {
            let d = y - means[zi];
            ss[zi] = ss[zi] + d * d;
        }
        for j in 0..k {
            let nj = T::from_count(counts[j]);
            // log posterior in u = log sigma, Jacobian included
            let target = |u: T| -> T {
                let s2 = (u + u).exp();
                -nj * u - half * ss[j] / s2 - half * s2 / sigma_scale_sq + u
            };
            let mut u = sds[j].ln();
            let mut current = target(u);
            let step = log_step[j].exp() * T::lit(0.5);
            for _ in 0..SIGMA_STEPS {
                let proposal = u + step * T::sample_standard_normal(&mut rng);
                let candidate = target(proposal);
                proposed += 1;
                if proposal >= log_floor && T::sample_open01(&mut rng).ln() < candidate - current {
                    u = proposal;
                    current = candidate;
                    accepted += 1;
                    batch_accepts[j] += 1;
                }
            }
            sds[j] = u.exp();
        }

        if iter < config.warmup && (iter + 1) % ADAPT_BATCH == 0 {
            let delta = T::lit(1.0 / ((iter + 1) / ADAPT_BATCH) as f64).sqrt().min(T::lit(0.5));
            for j in 0..k {
                let rate = T::from_count(batch_accepts[j]) / T::from_count(ADAPT_BATCH * SIGMA_STEPS);
                if rate > T::lit(TARGET_ACCEPT) {
                    log_step[j] = log_step[j] + delta;
                } else {
                    log_step[j] = log_step[j] - delta;
                }
                batch_accepts[j] = 0;
            }
        }
        if iter >= config.warmup {
            draws.push(
                Draw {
                    weights: weights.clone(),
                    means: means.clone(),
                    sds: sds.clone(),
                }
                .relabelled(),
            );
        }
    }
    ChainOutput {
        draws,
        acceptance: if proposed > 0 {
            T::from_count(accepted) / T::from_count(proposed)
        } else {
            T::zero()
        },
    }
}

/// Parameter names in storage order: weights, means, sds.
pub fn parameter_names(k: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(3 * k);
    for prefix in ["w", "mu", "sigma"] {
        names.extend((1..=k).map(|j| format!("{prefix}{j}")));
    }
    names
}

/// `chains x draws` trace of parameter `p` (index into [`parameter_names`]).
pub fn trace<T: Real>(draws: &[Vec<Draw<T>>], k: usize, p: usize) -> Vec<Vec<T>> {
    draws
        .iter()
        .map(|chain| {
            chain
                .iter()
                .map(|d| match p / k {
                    0 => d.weights[p % k],
                    1 => d.means[p % k],
                    _ => d.sds[p % k],
                })
                .collect()
        })
        .collect()
}

pub fn fit<T: Real>(
    values: &[T],
    k: usize,
    prior: &MixturePrior<T>,
    init: &MixtureInit<T>,
    config: &SamplerConfig,
) -> Result<MixtureFit<T>, MixtureError> {
    if values.len() < MIN_VALUES {
        return Err(MixtureError::TooFewValues(values.len()));
    }
    if !(1..=MAX_COMPONENTS).contains(&k) {
        return Err(MixtureError::InvalidComponents(k));
    }
    if config.chains < 2 {
        return Err(MixtureError::TooFewChains(config.chains));
    }
    if values.iter().any(|v| !v.is_finite()) || init.component_means.iter().any(|v| !v.is_finite()) {
        return Err(MixtureError::NonFinite);
    }
    if init.component_means.len() != k {
        return Err(MixtureError::InvalidInit {
            got: init.component_means.len(),
            expected: k,
        });
    }
    prior.validate(k)?;

    let outputs: Vec<ChainOutput<T>> = (0..config.chains)
        .into_par_iter()
        .map(|c| run_chain(values, prior, init, config, c))
        .collect();
    let sigma_acceptance = outputs.iter().map(|o| o.acceptance).collect();
    let draws: Vec<Vec<Draw<T>>> = outputs.into_iter().map(|o| o.draws).collect();

    let mut diagnostics = Vec::with_capacity(3 * k);
    let mut converged = true;
    for (p, name) in parameter_names(k).into_iter().enumerate() {
        let tr = trace(&draws, k, p);
        let rhat = diagnostics::split_rhat(&tr);
        let ess = diagnostics::effective_sample_size(&tr);
        if let (Some(r), Some(e)) = (rhat, ess) {
            if !(r < T::lit(RHAT_LIMIT) && e > T::lit(ESS_LIMIT)) {
                converged = false;
            }
        } else if !diagnostics::is_constant(&tr) {
            converged = false;
        }
        diagnostics.push(ParamDiagnostic { name, rhat, ess });
    }
    if !converged {
        log::info!("mixture fit with K = {k} did not meet rhat < {RHAT_LIMIT} and ESS > {ESS_LIMIT}");
    }
    Ok(MixtureFit {
        k,
        prior: prior.clone(),
        init: init.clone(),
        config: *config,
        draws,
        diagnostics,
        sigma_acceptance,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ParamSummary<T: Real> {
    pub name: String,
    pub mean: T,
    pub sd: T,
    /// Central 94% interval.
    pub lower_94: T,
    pub upper_94: T,
    pub rhat: Option<T>,
    pub ess: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FitSummary<T: Real> {
    pub k: usize,
    pub converged: bool,
    pub chains: usize,
    pub draws_per_chain: usize,
    pub warmup: usize,
    pub seed: u64,
    pub params: Vec<ParamSummary<T>>,
    pub waic: Option<WaicScore<T>>,
}

impl<T: Real> MixtureFit<T> {
    pub fn total_draws(&self) -> usize {
        self.draws.iter().map(Vec::len).sum()
    }

    pub fn all_draws(&self) -> impl Iterator<Item = &Draw<T>> {
        self.draws.iter().flatten()
    }

    /// Posterior-mean parameters, weights renormalised onto the simplex.
    pub fn posterior_mean(&self) -> Draw<T> {
        let k = self.k;
        let s = T::from_count(self.total_draws());
        let mut out = Draw {
            weights: vec![T::zero(); k],
            means: vec![T::zero(); k],
            sds: vec![T::zero(); k],
        };
        for d in self.all_draws() {
            for j in 0..k {
                out.weights[j] = out.weights[j] + d.weights[j] / s;
                out.means[j] = out.means[j] + d.means[j] / s;
                out.sds[j] = out.sds[j] + d.sds[j] / s;
            }
        }
        let total: T = out.weights.iter().copied().sum();
        out.weights.iter_mut().for_each(|w| *w = *w / total);
        out
    }

    pub fn summary(&self, waic: Option<WaicScore<T>>) -> FitSummary<T> {
        let params = parameter_names(self.k)
            .into_iter()
            .enumerate()
            .map(|(p, name)| {
                let mut v: Vec<T> = trace(&self.draws, self.k, p).into_iter().flatten().collect();
                v.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
                let diag = &self.diagnostics[p];
                ParamSummary {
                    name,
                    mean: crate::stats::mean(&v),
                    sd: crate::stats::std_dev(&v),
                    lower_94: quantile_sorted(&v, T::lit(0.03)),
                    upper_94: quantile_sorted(&v, T::lit(0.97)),
                    rhat: diag.rhat,
                    ess: diag.ess,
                }
            })
            .collect();
        FitSummary {
            k: self.k,
            converged: self.converged,
            chains: self.config.chains,
            draws_per_chain: self.config.draws,
            warmup: self.config.warmup,
            seed: self.config.seed,
            params,
            waic,
        }
    }

    /// CSV of all stored draws: `chain,draw,w1..,mu1..,sigma1..`.
    pub fn draws_csv(&self) -> String {
        let mut out = format!("chain,draw,{}\n", parameter_names(self.k).join(","));
        for (c, chain) in self.draws.iter().enumerate() {
            for (i, d) in chain.iter().enumerate() {
                out.push_str(&format!("{c},{i}"));
                for v in d.weights.iter().chain(&d.means).chain(&d.sds) {
                    out.push_str(&format!(",{v}"));
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Responsibilities at posterior-mean parameters; each row sums to 1.
pub fn membership<T: Real>(fit: &MixtureFit<T>, values: &[T]) -> Result<Vec<Vec<T>>, MixtureError> {
    if !fit.converged {
        return Err(MixtureError::NonConvergence);
    }
    let pm = fit.posterior_mean();
    Ok(values
        .iter()
        .map(|&y| {
            if fit.k == 1 {
                return vec![T::one()];
            }
            let log_p: Vec<T> = (0..fit.k)
                .map(|j| pm.weights[j].ln() + log_normal_pdf(y, pm.means[j], pm.sds[j]))
                .collect();
            let norm = log_sum_exp(&log_p);
            log_p.iter().map(|&l| (l - norm).exp()).collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MixtureDensity<T: Real> {
    pub grid: Vec<T>,
    pub total: Vec<T>,
    /// Weighted component curves, `components[k][i]`.
    pub components: Vec<Vec<T>>,
    pub weights: Vec<T>,
    pub means: Vec<T>,
    pub sds: Vec<T>,
}

/// Mixture density and weighted component curves at posterior-mean parameters.
pub fn posterior_density<T: Real>(fit: &MixtureFit<T>, grid: &[T]) -> Result<MixtureDensity<T>, MixtureError> {
    if !fit.converged {
        return Err(MixtureError::NonConvergence);
    }
    let pm = fit.posterior_mean();
    let components: Vec<Vec<T>> = (0..fit.k)
        .map(|j| {
            grid.iter()
                .map(|&x| pm.weights[j] * log_normal_pdf(x, pm.means[j], pm.sds[j]).exp())
                .collect()
        })
        .collect();
    let total = (0..grid.len())
        .map(|i| components.iter().map(|c| c[i]).sum())
        .collect();
    Ok(MixtureDensity {
        grid: grid.to_vec(),
        total,
        components,
        weights: pm.weights,
        means: pm.means,
        sds: pm.sds,
    })
}
