//! Brute-force feature oracle.
//!
//! Counts are integers, so every moment is computed from exact `i128` sums
//! and only the final ratio is rounded. Columns are dispatched by parsing
//! their names, so the oracle never consults the catalog's own entries.

use std::collections::BTreeMap;

use nozzlelog_core::nozzle::{LogRecord, COLS, ROWS};
use nozzlelog_core::{NfcState, NozzleGrid, NozzleLog};
use rand::Rng;

/// First record of every job, in time order.
pub fn first_per_job(log: &NozzleLog) -> Vec<&LogRecord> {
    let mut best: BTreeMap<u64, &LogRecord> = BTreeMap::new();
    for r in log.records() {
        let e = best.entry(r.job_id).or_insert(r);
        if r.t < e.t {
            *e = r;
        }
    }
    let mut v: Vec<&LogRecord> = best.into_values().collect();
    v.sort_by_key(|r| r.t);
    v
}

pub fn count_channels(records: &[&LogRecord]) -> [Vec<i128>; 5] {
    let mut out: [Vec<i128>; 5] = Default::default();
    for r in records {
        for (k, ch) in out.iter_mut().enumerate() {
            let mut c = 0;
            for row in 0..ROWS {
                for col in 0..COLS {
                    if r.grid.get(row, col) as usize == k + 1 {
                        c += 1;
                    }
                }
            }
            ch.push(c);
        }
    }
    out
}

/// Exact decimal `text` as numerator / denominator.
fn decimal(text: &str) -> (i128, i128) {
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    let den = 10i128.pow(frac.len() as u32);
    (format!("{int}{frac}").parse::<i128>().unwrap(), den)
}

struct Sums {
    n: i128,
    s: i128,
    /// `n * Σ x² - (Σ x)²`, which is `n²` times the population variance.
    d2: i128,
}

fn sums(x: &[i128]) -> Sums {
    let n = x.len() as i128;
    let s: i128 = x.iter().sum();
    let q: i128 = x.iter().map(|v| v * v).sum();
    Sums { n, s, d2: n * q - s * s }
}

fn mean(x: &[i128]) -> f64 {
    let t = sums(x);
    t.s as f64 / t.n as f64
}

fn variance(x: &[i128]) -> f64 {
    let t = sums(x);
    t.d2 as f64 / (t.n * t.n) as f64
}

/// Order statistic of rank `k` (0-based) found by counting.
fn kth(x: &[i128], k: usize) -> i128 {
    *x.iter()
        .find(|&&v| {
            let below = x.iter().filter(|&&w| w < v).count();
            let upto = x.iter().filter(|&&w| w <= v).count();
            below <= k && k < upto
        })
        .unwrap()
}

fn quantile(x: &[i128], q: &str) -> f64 {
    let (num, den) = decimal(q);
    let pos_num = (x.len() as i128 - 1) * num;
    let lo = (pos_num / den) as usize;
    let rem = pos_num % den;
    let a = kth(x, lo);
    if rem == 0 {
        return a as f64;
    }
    let b = kth(x, lo + 1);
    a as f64 + (b - a) as f64 * (rem as f64 / den as f64)
}

fn linear_trend(x: &[i128], attr: &str) -> f64 {
    let n = x.len() as i128;
    if n < 2 {
        return f64::NAN;
    }
    let st: i128 = (0..n).sum();
    let stt: i128 = (0..n).map(|t| t * t).sum();
    let sx: i128 = x.iter().sum();
    let sxx: i128 = x.iter().map(|v| v * v).sum();
    let stx: i128 = x.iter().enumerate().map(|(t, v)| t as i128 * v).sum();
    let ctt = n * stt - st * st;
    let ctx = n * stx - st * sx;
    let cxx = n * sxx - sx * sx;
    if cxx == 0 {
        return match attr {
            "intercept" => x[0] as f64,
            _ => 0.0,
        };
    }
    let slope = ctx as f64 / ctt as f64;
    let intercept = (sx as f64 - slope * st as f64) / n as f64;
    match attr {
        "slope" => slope,
        "intercept" => intercept,
        "rvalue" => ctx as f64 / ((ctt as f64) * (cxx as f64)).sqrt(),
        "stderr" => {
            if n == 2 {
                return 0.0;
            }
            let rss: f64 = x
                .iter()
                .enumerate()
                .map(|(t, &v)| {
                    let e = v as f64 - (intercept + slope * t as f64);
                    e * e
                })
                .sum();
            (rss / (n - 2) as f64 / (ctt as f64 / n as f64)).sqrt()
        }
        _ => panic!("unknown trend attribute {attr}"),
    }
}

fn autocorrelation(x: &[i128], lag: usize) -> f64 {
    let n = x.len();
    if lag == 0 || lag >= n {
        return f64::NAN;
    }
    let t = sums(x);
    if t.d2 == 0 {
        return 0.0;
    }
    let m = (n - lag) as i128;
    let p: i128 = (0..n - lag).map(|i| x[i] * x[i + lag]).sum();
    let a: i128 = x[..n - lag].iter().sum();
    let b: i128 = x[lag..].iter().sum();
    let num = t.n * t.n * p - t.n * t.s * (a + b) + m * t.s * t.s;
    num as f64 / (m * t.d2) as f64
}

fn cid_ce(x: &[i128], normalize: bool) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let dd: i128 = (1..x.len()).map(|i| (x[i] - x[i - 1]).pow(2)).sum();
    if !normalize {
        return (dd as f64).sqrt();
    }
    let t = sums(x);
    if t.d2 == 0 {
        return 0.0;
    }
    ((dd * t.n * t.n) as f64 / t.d2 as f64).sqrt()
}

fn binomial(n: usize, k: usize) -> i128 {
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
}

/// `order`-th forward difference by the binomial expansion.
fn forward_difference(x: &[i128], order: usize) -> Vec<i128> {
    (0..x.len().saturating_sub(order))
        .map(|i| {
            (0..=order)
                .map(|j| {
                    let sign = if (order - j).is_multiple_of(2) { 1 } else { -1 };
                    sign * binomial(order, j) * x[i + j]
                })
                .sum()
        })
        .collect()
}

fn derivative(x: &[i128], order: usize, stat: &str) -> f64 {
    if x.len() < order + 1 {
        return f64::NAN;
    }
    let d = forward_difference(x, order);
    match stat {
        "mean" => mean(&d),
        "std" => variance(&d).sqrt(),
        "min" => *d.iter().min().unwrap() as f64,
        "max" => *d.iter().max().unwrap() as f64,
        _ => panic!("unknown derivative stat {stat}"),
    }
}

fn step(x: &[i128], attr: &str) -> f64 {
    let n = x.len();
    let steps = n as i128 - 1;
    match attr {
        "final_value" => x[n - 1] as f64,
        "max_step" => (1..n).map(|i| (x[i] - x[i - 1]).abs()).max().unwrap_or(0) as f64,
        _ if steps == 0 => f64::NAN,
        "mean_abs_change" => (1..n).map(|i| (x[i] - x[i - 1]).abs()).sum::<i128>() as f64 / steps as f64,
        "mean_change" => (x[n - 1] - x[0]) as f64 / steps as f64,
        _ => panic!("unknown step attribute {attr}"),
    }
}

/// Central moment ratio: `Σ D^k` with `D = n x - Σ x`.
fn moment(x: &[i128], k: u32) -> i128 {
    let t = sums(x);
    x.iter().map(|v| (t.n * v - t.s).pow(k)).sum()
}

fn skewness(x: &[i128]) -> f64 {
    if x.len() < 3 || sums(x).d2 == 0 {
        return f64::NAN;
    }
    let d2 = moment(x, 2) as f64;
    moment(x, 3) as f64 * (x.len() as f64).sqrt() / (d2 * d2.sqrt())
}

fn kurtosis(x: &[i128]) -> f64 {
    if x.len() < 4 || sums(x).d2 == 0 {
        return f64::NAN;
    }
    let d2 = moment(x, 2) as f64;
    x.len() as f64 * moment(x, 4) as f64 / (d2 * d2) - 3.0
}

/// Signed comparison of each point with the mean, exactly.
fn vs_mean(x: &[i128]) -> Vec<std::cmp::Ordering> {
    let t = sums(x);
    x.iter().map(|v| (t.n * v).cmp(&t.s)).collect()
}

fn longest(flags: &[bool]) -> f64 {
    let mut best = 0;
    for start in 0..flags.len() {
        let run = flags[start..].iter().take_while(|f| **f).count();
        best = best.max(run);
    }
    best as f64
}

fn number_peaks(x: &[i128], support: usize) -> f64 {
    (0..x.len())
        .filter(|&i| {
            i >= support
                && i + support < x.len()
                && (i - support..=i + support).all(|j| j == i || x[j] < x[i])
        })
        .count() as f64
}

fn binned_entropy(x: &[i128], bins: i128) -> f64 {
    let lo = *x.iter().min().unwrap();
    let hi = *x.iter().max().unwrap();
    if lo == hi {
        return 0.0;
    }
    let mut hist = vec![0usize; bins as usize];
    for v in x {
        hist[((v - lo) * bins / (hi - lo)).min(bins - 1) as usize] += 1;
    }
    let n = x.len() as f64;
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn ratio_beyond(x: &[i128], r: &str) -> f64 {
    let (num, den) = decimal(r);
    let t = sums(x);
    // |n v - S| > r * sqrt(n Q - S^2), squared and scaled by den^2.
    let beyond = x
        .iter()
        .filter(|&&v| (t.n * v - t.s).pow(2) * den * den > num * num * t.d2)
        .count();
    beyond as f64 / x.len() as f64
}

fn series_feature(x: &[i128], name: &str) -> f64 {
    let param = |prefix: &str| name.strip_prefix(prefix);
    if let Some(a) = param("linear_trend__attr_") {
        return linear_trend(x, a);
    }
    if let Some(l) = param("autocorrelation__lag_") {
        return autocorrelation(x, l.parse().unwrap());
    }
    if let Some(b) = param("cid_ce__normalize_") {
        return cid_ce(x, b.parse().unwrap());
    }
    if let Some(rest) = param("derivative__order_") {
        let (order, stat) = rest.split_once("_stat_").unwrap();
        return derivative(x, order.parse().unwrap(), stat);
    }
    if let Some(a) = param("step__attr_") {
        return step(x, a);
    }
    if let Some(q) = param("quantile__q_") {
        return quantile(x, q);
    }
    if let Some(side) = param("count_mean__side_") {
        let want = if side == "above" { std::cmp::Ordering::Greater } else { std::cmp::Ordering::Less };
        return vs_mean(x).iter().filter(|o| **o == want).count() as f64;
    }
    if let Some(side) = param("longest_strike__side_") {
        let want = if side == "above" { std::cmp::Ordering::Greater } else { std::cmp::Ordering::Less };
        let flags: Vec<bool> = vs_mean(x).iter().map(|o| *o == want).collect();
        return longest(&flags);
    }
    if let Some(s) = param("number_peaks__n_") {
        return number_peaks(x, s.parse().unwrap());
    }
    if let Some(b) = param("binned_entropy__bins_") {
        return binned_entropy(x, b.parse().unwrap());
    }
    if let Some(r) = param("ratio_beyond_r_sigma__r_") {
        return ratio_beyond(x, r);
    }
    match name {
        "mean" => mean(x),
        "median" => quantile(x, "0.5"),
        "std" => variance(x).sqrt(),
        "variance" => variance(x),
        "min" => *x.iter().min().unwrap() as f64,
        "max" => *x.iter().max().unwrap() as f64,
        "skewness" => skewness(x),
        "kurtosis" => kurtosis(x),
        "abs_energy" => x.iter().map(|v| v * v).sum::<i128>() as f64,
        _ => panic!("oracle has no definition for `{name}`"),
    }
}

fn spatial_feature(grid: &NozzleGrid, name: &str) -> f64 {
    if let Some(k) = name.strip_prefix("avg_position_nf") {
        let state = k.parse::<usize>().unwrap();
        let cols: Vec<usize> = (0..ROWS)
            .flat_map(|r| (0..COLS).map(move |c| (r, c)))
            .filter(|&(r, c)| grid.get(r, c) as usize == state)
            .map(|(_, c)| c)
            .collect();
        if cols.is_empty() {
            return f64::NAN;
        }
        return cols.iter().sum::<usize>() as f64 / cols.len() as f64;
    }
    assert_eq!(name, "nf4_edge_run", "oracle has no definition for `{name}`");
    let nf4 = |r: usize, c: usize| grid.get(r, c) == NfcState::Nf4;
    (0..ROWS)
        .flat_map(|r| {
            (0..=COLS).filter(move |&len| (0..len).all(|c| nf4(r, c)) || (COLS - len..COLS).all(|c| nf4(r, c)))
        })
        .max()
        .unwrap() as f64
}

/// Oracle values of the columns `names` for one head.
pub fn row(log: &NozzleLog, names: &[String]) -> Vec<f64> {
    let records = first_per_job(log);
    let channels = count_channels(&records);
    let terminal = &records.last().unwrap().grid;
    names
        .iter()
        .map(|name| {
            let (prefix, rest) = name.split_once("__").unwrap();
            if prefix == "spatial" {
                return spatial_feature(terminal, rest);
            }
            let k: usize = prefix.strip_prefix("ch").unwrap().parse().unwrap();
            series_feature(&channels[k - 1], rest)
        })
        .collect()
}

/// Series-level oracle on plain integer input, for worked examples.
pub fn on_series(x: &[i128], name: &str) -> f64 {
    series_feature(x, name)
}

/// Random log with 1 to `max_jobs` jobs of 1 to 3 records each.
///
/// Regimes vary between flat, sparse, dense and churning grids so that
/// zero-variance and tiny inputs are exercised alongside ordinary ones.
pub fn random_log<R: Rng>(rng: &mut R, id: &str, max_jobs: u64) -> NozzleLog {
    let jobs = match rng.gen_range(0..10) {
        0 => rng.gen_range(1..=5),
        _ => rng.gen_range(1..=max_jobs),
    };
    let regime = rng.gen_range(0..4);
    let mut grid = NozzleGrid::empty();
    if regime == 3 {
        for row in 0..ROWS {
            let len = rng.gen_range(0..20);
            for c in 0..len {
                grid.set(row, if rng.gen() { c } else { COLS - 1 - c }, NfcState::Nf4);
            }
        }
    }
    let mut records = Vec::new();
    let mut t = 0;
    for job in 0..jobs {
        let changes = match regime {
            0 => 0,
            1 => rng.gen_range(0..3),
            _ => rng.gen_range(0..25),
        };
        for _ in 0..changes {
            let state = NfcState::ALL[rng.gen_range(0..6)];
            grid.set(rng.gen_range(0..ROWS), rng.gen_range(0..COLS), state);
        }
        for _ in 0..rng.gen_range(1..=3) {
            t += rng.gen_range(1..=3);
            let mut g = grid.clone();
            if rng.gen_bool(0.3) {
                g.set(rng.gen_range(0..ROWS), rng.gen_range(0..COLS), NfcState::Nf5);
            }
            records.push(LogRecord { head_id: id.into(), job_id: job + 1, t, grid: g });
        }
    }
    NozzleLog::new(records).unwrap()
}

/// Agreement up to `tol`, with NaN matching only NaN.
pub fn agrees(a: f64, b: f64, tol: f64) -> bool {
    (a.is_nan() && b.is_nan()) || (a - b).abs() <= tol
}
