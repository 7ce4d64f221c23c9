//! Split R-hat and multi-chain effective sample size.

use crate::Real;

fn mean<T: Real>(x: &[T]) -> T {
    x.iter().copied().sum::<T>() / T::from_count(x.len())
}

/// Halves every chain, dropping a trailing odd draw.
fn split<T: Real>(chains: &[Vec<T>]) -> Vec<&[T]> {
    let mut out = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        let half = c.len() / 2;
        out.push(&c[..half]);
        out.push(&c[half..2 * half]);
    }
    out
}

/// Between-chain variance term, mean within-chain variance and the pooled
/// variance estimate `var+` over equally long chains.
fn variance_parts<T: Real>(chains: &[&[T]]) -> (T, T) {
    let n = T::from_count(chains[0].len());
    let m = T::from_count(chains.len());
    let means: Vec<T> = chains.iter().map(|c| mean(c)).collect();
    let grand = mean(&means);
    let b = n / (m - T::one()) * means.iter().map(|&x| (x - grand) * (x - grand)).sum::<T>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, &cm)| c.iter().map(|&x| (x - cm) * (x - cm)).sum::<T>() / (n - T::one()))
        .sum::<T>()
        / m;
    let var_plus = (n - T::one()) / n * w + b / n;
    (w, var_plus)
}

/// True when every draw of every chain is the same value.
pub fn is_constant<T: Real>(chains: &[Vec<T>]) -> bool {
    let Some(&first) = chains.iter().flatten().next() else {
        return true;
    };
    chains.iter().flatten().all(|&x| x == first)
}

/// Split R-hat. `None` for constant parameters or chains shorter than 4 draws.
pub fn split_rhat<T: Real>(chains: &[Vec<T>]) -> Option<T> {
    if chains.is_empty() || chains.iter().any(|c| c.len() < 4) || is_constant(chains) {
        return None;
    }
    let s = split(chains);
    let (w, var_plus) = variance_parts(&s);
    if !(w > T::zero()) {
        return Some(T::infinity());
    }
    Some((var_plus / w).sqrt())
}

fn autocovariance<T: Real>(x: &[T], max_lag: usize) -> Vec<T> {
    let n = x.len();
    let m = mean(x);
    let d: Vec<T> = x.iter().map(|&v| v - m).collect();
    (0..=max_lag.min(n - 1))
        .map(|t| d[..n - t].iter().zip(&d[t..]).map(|(&a, &b)| a * b).sum::<T>() / T::from_count(n))
        .collect()
}

/// Effective sample size over split chains with Geyer's initial monotone sequence.
pub fn effective_sample_size<T: Real>(chains: &[Vec<T>]) -> Option<T> {
    if chains.is_empty() || chains.iter().any(|c| c.len() < 4) || is_constant(chains) {
        return None;
    }
    let s = split(chains);
    let n = s[0].len();
    let m = s.len();
    let (_, var_plus) = variance_parts(&s);
    let total = T::from_count(n * m);
    if !(var_plus > T::zero()) {
        return Some(total);
    }
    let acov: Vec<Vec<T>> = s.iter().map(|c| autocovariance(c, n - 1)).collect();
    let nf = T::from_count(n);
    let mean_var = acov.iter().map(|a| a[0]).sum::<T>() / T::from_count(m) * nf / (nf - T::one());
    let rho = |t: usize| -> T {
        let g = acov.iter().map(|a| a[t]).sum::<T>() / T::from_count(m);
        T::one() - (mean_var - g) / var_plus
    };

    let mut tau = -T::one();
    let mut prev_pair = T::infinity();
    let mut t = 0;
    while t + 1 < n {
        let mut pair = rho(t) + rho(t + 1);
        if pair <= T::zero() {
            break;
        }
        if pair > prev_pair {
            pair = prev_pair;
        }
        tau = tau + T::lit(2.0) * pair;
        prev_pair = pair;
        t += 2;
    }
    let floor = T::one() / total.log10().max(T::one());
    let tau = tau.max(floor);
    Some(total / tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn iid_chains(m: usize, n: usize, offset: f64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        (0..m)
            .map(|j| (0..n).map(|_| f64::sample_standard_normal(&mut rng) + offset * j as f64).collect())
            .collect()
    }

    #[test]
    fn iid_draws_look_converged() {
        let c = iid_chains(4, 1000, 0.0);
        let r = split_rhat(&c).unwrap();
        assert!((r - 1.0).abs() < 0.01, "rhat {r}");
        let ess = effective_sample_size(&c).unwrap();
        assert!(ess > 3000.0 && ess < 5000.0, "ess {ess}");
    }

    #[test]
    fn separated_chains_are_flagged() {
        let c = iid_chains(4, 500, 3.0);
        assert!(split_rhat(&c).unwrap() > 1.5);
    }

    #[test]
    fn autocorrelated_chain_has_low_ess() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                let mut x = 0.0;
                (0..2000)
                    .map(|_| {
                        x = 0.95 * x + f64::sample_standard_normal(&mut rng);
                        x
                    })
                    .collect()
            })
            .collect();
        // AR(1) with phi = 0.95 has ESS close to N (1 - phi) / (1 + phi)
        let ess = effective_sample_size(&chains).unwrap();
        let expected = 8000.0 * 0.05 / 1.95;
        assert!((ess - expected).abs() < 0.5 * expected, "ess {ess}");
    }

    #[test]
    fn constant_parameter_is_skipped() {
        let c = vec![vec![1.0; 10]; 2];
        assert!(split_rhat(&c).is_none());
        assert!(effective_sample_size(&c).is_none());
    }
}
