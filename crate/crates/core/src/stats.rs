//! One-sample Kolmogorov–Smirnov and exact binomial tests.

use statrs::distribution::{Binomial, Discrete};

use crate::error::{Error, Result};
use crate::grid::Distribution;

/// Piecewise-linear CDF built from a density sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCdf {
    start: f64,
    step: f64,
    values: Vec<f64>,
}

impl TabulatedCdf {
    pub fn from_distribution(d: &Distribution) -> Result<Self> {
        let z = d.integral();
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::EmptyDistribution);
        }
        let values = d.cumulative().into_iter().map(|c| (c / z).min(1.0)).collect();
        Ok(Self { start: d.grid_start, step: d.grid_step, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.start) / self.step;
        if t <= 0.0 {
            return 0.0;
        }
        let last = self.values.len() - 1;
        if t >= last as f64 {
            return 1.0;
        }
        let i = t.floor() as usize;
        let f = t - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

/// `sup |F_n - F|` for the empirical CDF of `samples`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (-1)^{k-1} exp(-2k²λ²)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        // series converges slowly here and the value is 1 to double precision
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a one-sample KS statistic `d` from `n` samples, with
/// Stephens' small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let sn = (n as f64).sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let statistic = ks_statistic(samples, cdf);
    KsResult { statistic, p_value: ks_pvalue(statistic, samples.len()) }
}

/// Two-sided exact binomial test of `k` successes in `n` trials against success
/// probability `p`. Outcomes no more likely than the observed one are summed.
pub fn binomial_test(k: u64, n: u64, p: f64) -> Result<f64> {
    if k > n {
        return Err(Error::InvalidParameter(format!("{k} successes in {n} trials")));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let b = Binomial::new(p, n).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let observed = b.pmf(k);
    let cut = observed * (1.0 + 1e-7);
    let total: f64 = (0..=n).map(|i| b.pmf(i)).filter(|&q| q <= cut).sum();
    Ok(total.min(1.0))
}
