//! Time-based feature functions over a single count channel.
//!
//! Conventions: variances are population variances; a feature that is
//! undefined for the input (too short, zero variance where a ratio needs it)
//! is `NaN`. No function returns an infinity.

use alloc::vec::Vec;

use crate::stats::{self, ln, sqrt};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTrend {
    pub slope: f64,
    pub intercept: f64,
    pub r_value: f64,
    pub stderr: f64,
}

/// Ordinary least squares of `x` against `t = 0..n`.
pub fn linear_trend(x: &[f64]) -> LinearTrend {
    let n = x.len();
    if n < 2 {
        return LinearTrend {
            slope: f64::NAN,
            intercept: f64::NAN,
            r_value: f64::NAN,
            stderr: f64::NAN,
        };
    }
    let nf = n as f64;
    let t_mean = (nf - 1.0) / 2.0;
    let x_mean = stats::mean(x);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (t, &v) in x.iter().enumerate() {
        let dt = t as f64 - t_mean;
        let dv = v - x_mean;
        sxx += dt * dt;
        sxy += dt * dv;
        syy += dv * dv;
    }
    if syy == 0.0 {
        return LinearTrend {
            slope: 0.0,
            intercept: x[0],
            r_value: 0.0,
            stderr: 0.0,
        };
    }
    let slope = sxy / sxx;
    let intercept = x_mean - slope * t_mean;
    let r = (sxy / sqrt(sxx * syy)).clamp(-1.0, 1.0);
    let stderr = if n == 2 {
        0.0
    } else {
        sqrt(((1.0 - r * r) * syy / sxx / (nf - 2.0)).max(0.0))
    };
    LinearTrend {
        slope,
        intercept,
        r_value: r,
        stderr,
    }
}

/// Lag-`lag` autocorrelation normalized by the full-series variance.
pub fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    if lag == 0 || lag >= n {
        return f64::NAN;
    }
    let mu = stats::mean(x);
    let var = stats::variance(x);
    if var == 0.0 {
        return 0.0;
    }
    let s: f64 = x[..n - lag]
        .iter()
        .zip(&x[lag..])
        .map(|(a, b)| (a - mu) * (b - mu))
        .sum();
    s / ((n - lag) as f64 * var)
}

/// Complexity estimate: length of the polyline through the series.
pub fn cid_ce(x: &[f64], normalize: bool) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let scaled: Vec<f64>;
    let series = if normalize {
        let mu = stats::mean(x);
        let sd = stats::std(x);
        if sd == 0.0 {
            return 0.0;
        }
        scaled = x.iter().map(|v| (v - mu) / sd).collect();
        &scaled[..]
    } else {
        x
    };
    sqrt(series.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum())
}

pub fn diff(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

const NAN_SUMMARY: Summary = Summary {
    mean: f64::NAN,
    std: f64::NAN,
    min: f64::NAN,
    max: f64::NAN,
};

/// Mean/std/min/max of the `order`-th forward difference.
pub fn derivative_stats(x: &[f64], order: usize) -> Summary {
    if order == 0 || x.len() < order + 1 {
        return NAN_SUMMARY;
    }
    let mut d = diff(x);
    for _ in 1..order {
        d = diff(&d);
    }
    Summary {
        mean: stats::mean(&d),
        std: stats::std(&d),
        min: stats::min(&d),
        max: stats::max(&d),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepFeatures {
    pub final_value: f64,
    pub max_step: f64,
    pub mean_abs_change: f64,
    pub mean_change: f64,
}

pub fn step_features(x: &[f64]) -> StepFeatures {
    let Some(&last) = x.last() else {
        return StepFeatures {
            final_value: f64::NAN,
            max_step: f64::NAN,
            mean_abs_change: f64::NAN,
            mean_change: f64::NAN,
        };
    };
    let d = diff(x);
    let max_step = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let (mean_abs_change, mean_change) = if d.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let m = d.len() as f64;
        (
            d.iter().map(|v| v.abs()).sum::<f64>() / m,
            d.iter().sum::<f64>() / m,
        )
    };
    StepFeatures {
        final_value: last,
        max_step,
        mean_abs_change,
        mean_change,
    }
}

pub fn median(x: &[f64]) -> f64 {
    quantile(x, 0.5)
}

/// Linear interpolation between order statistics at position `(n-1)q`.
pub fn quantile(x: &[f64], q: f64) -> f64 {
    if x.is_empty() || !(0.0..=1.0).contains(&q) {
        return f64::NAN;
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, q)
}

pub(crate) fn quantile_sorted(s: &[f64], q: f64) -> f64 {
    let pos = (s.len() - 1) as f64 * q;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(s.len() - 1);
    let frac = pos - lo as f64;
    s[lo] + (s[hi] - s[lo]) * frac
}

/// Population skewness, needs at least 3 points and nonzero variance.
pub fn skewness(x: &[f64]) -> f64 {
    if x.len() < 3 {
        return f64::NAN;
    }
    let mu = stats::mean(x);
    let m2 = stats::variance(x);
    if m2 == 0.0 {
        return f64::NAN;
    }
    let m3 = x.iter().map(|v| libm::pow(v - mu, 3.0)).sum::<f64>() / x.len() as f64;
    m3 / libm::pow(m2, 1.5)
}

/// Population excess kurtosis, needs at least 4 points and nonzero variance.
pub fn kurtosis(x: &[f64]) -> f64 {
    if x.len() < 4 {
        return f64::NAN;
    }
    let mu = stats::mean(x);
    let m2 = stats::variance(x);
    if m2 == 0.0 {
        return f64::NAN;
    }
    let m4 = x.iter().map(|v| libm::pow(v - mu, 4.0)).sum::<f64>() / x.len() as f64;
    m4 / (m2 * m2) - 3.0
}

pub fn abs_energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn count_above_mean(x: &[f64]) -> f64 {
    let mu = stats::mean(x);
    x.iter().filter(|&&v| v > mu).count() as f64
}

pub fn count_below_mean(x: &[f64]) -> f64 {
    let mu = stats::mean(x);
    x.iter().filter(|&&v| v < mu).count() as f64
}

fn longest_run(x: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    let mut best = 0usize;
    let mut cur = 0usize;
    for &v in x {
        if pred(v) {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best as f64
}

pub fn longest_strike_above_mean(x: &[f64]) -> f64 {
    let mu = stats::mean(x);
    longest_run(x, |v| v > mu)
}

pub fn longest_strike_below_mean(x: &[f64]) -> f64 {
    let mu = stats::mean(x);
    longest_run(x, |v| v < mu)
}

/// Interior points strictly greater than their `support` neighbours on each side.
pub fn number_peaks(x: &[f64], support: usize) -> f64 {
    if support == 0 || x.len() < 2 * support + 1 {
        return 0.0;
    }
    (support..x.len() - support)
        .filter(|&i| (1..=support).all(|j| x[i] > x[i - j] && x[i] > x[i + j]))
        .count() as f64
}

/// Shannon entropy (nats) of an equal-width histogram over `[min, max]`.
pub fn binned_entropy(x: &[f64], bins: usize) -> f64 {
    if x.is_empty() || bins == 0 {
        return f64::NAN;
    }
    let lo = stats::min(x);
    let hi = stats::max(x);
    if hi == lo {
        return 0.0;
    }
    let mut hist = alloc::vec![0usize; bins];
    let width = hi - lo;
    for &v in x {
        let b = ((v - lo) * bins as f64 / width) as usize;
        hist[b.min(bins - 1)] += 1;
    }
    let n = x.len() as f64;
    -hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * ln(p)
        })
        .sum::<f64>()
}

/// Fraction of points farther than `r` standard deviations from the mean.
pub fn ratio_beyond_r_sigma(x: &[f64], r: f64) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let mu = stats::mean(x);
    let sd = stats::std(x);
    x.iter().filter(|&&v| (v - mu).abs() > r * sd).count() as f64 / x.len() as f64
}
