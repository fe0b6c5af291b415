//! Feature catalog and extraction.
//!
//! A [`FeatureCatalog`] is an ordered list of feature columns. Time-based
//! families are applied to every selected count channel; spatial functions
//! read the terminal grid. Column names follow `ch<k>__<family>[__<params>]`
//! and `spatial__<name>`, with `k` the 1-based failure state.

pub mod series;
pub mod spatial;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::digest;
use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, Matrix};
use crate::nozzle::{downsample_first_per_job, to_count_series, NfcState, NozzleGrid, NozzleLog, CHANNELS};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrendAttr {
    Slope,
    Intercept,
    RValue,
    Stderr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SummaryStat {
    Mean,
    Std,
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepAttr {
    FinalValue,
    MaxStep,
    MeanAbsChange,
    MeanChange,
}

/// One column-producing function over a single channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    LinearTrend(TrendAttr),
    Autocorrelation { lag: usize },
    CidCe { normalize: bool },
    Derivative { order: usize, stat: SummaryStat },
    Step(StepAttr),
    Mean,
    Median,
    Std,
    Variance,
    Min,
    Max,
    Skewness,
    Kurtosis,
    Quantile { q: f64 },
    AbsEnergy,
    CountMean { above: bool },
    LongestStrike { above: bool },
    NumberPeaks { support: usize },
    BinnedEntropy { bins: usize },
    RatioBeyondRSigma { r: f64 },
}

impl Family {
    fn name(&self) -> String {
        use Family::*;
        let side = |above: bool| if above { "side_above" } else { "side_below" };
        match *self {
            LinearTrend(a) => format!(
                "linear_trend__attr_{}",
                match a {
                    TrendAttr::Slope => "slope",
                    TrendAttr::Intercept => "intercept",
                    TrendAttr::RValue => "rvalue",
                    TrendAttr::Stderr => "stderr",
                }
            ),
            Autocorrelation { lag } => format!("autocorrelation__lag_{lag}"),
            CidCe { normalize } => format!("cid_ce__normalize_{normalize}"),
            Derivative { order, stat } => format!(
                "derivative__order_{order}_stat_{}",
                match stat {
                    SummaryStat::Mean => "mean",
                    SummaryStat::Std => "std",
                    SummaryStat::Min => "min",
                    SummaryStat::Max => "max",
                }
            ),
            Step(a) => format!(
                "step__attr_{}",
                match a {
                    StepAttr::FinalValue => "final_value",
                    StepAttr::MaxStep => "max_step",
                    StepAttr::MeanAbsChange => "mean_abs_change",
                    StepAttr::MeanChange => "mean_change",
                }
            ),
            Mean => "mean".into(),
            Median => "median".into(),
            Std => "std".into(),
            Variance => "variance".into(),
            Min => "min".into(),
            Max => "max".into(),
            Skewness => "skewness".into(),
            Kurtosis => "kurtosis".into(),
            Quantile { q } => format!("quantile__q_{q}"),
            AbsEnergy => "abs_energy".into(),
            CountMean { above } => format!("count_mean__{}", side(above)),
            LongestStrike { above } => format!("longest_strike__{}", side(above)),
            NumberPeaks { support } => format!("number_peaks__n_{support}"),
            BinnedEntropy { bins } => format!("binned_entropy__bins_{bins}"),
            RatioBeyondRSigma { r } => format!("ratio_beyond_r_sigma__r_{r}"),
        }
    }

    /// Evaluates the family on one channel.
    pub fn apply(&self, x: &[f64]) -> f64 {
        use series::*;
        use Family::*;
        match *self {
            LinearTrend(a) => {
                let lt = linear_trend(x);
                match a {
                    TrendAttr::Slope => lt.slope,
                    TrendAttr::Intercept => lt.intercept,
                    TrendAttr::RValue => lt.r_value,
                    TrendAttr::Stderr => lt.stderr,
                }
            }
            Autocorrelation { lag } => autocorrelation(x, lag),
            CidCe { normalize } => cid_ce(x, normalize),
            Derivative { order, stat } => {
                let s = derivative_stats(x, order);
                match stat {
                    SummaryStat::Mean => s.mean,
                    SummaryStat::Std => s.std,
                    SummaryStat::Min => s.min,
                    SummaryStat::Max => s.max,
                }
            }
            Step(a) => {
                let s = step_features(x);
                match a {
                    StepAttr::FinalValue => s.final_value,
                    StepAttr::MaxStep => s.max_step,
                    StepAttr::MeanAbsChange => s.mean_abs_change,
                    StepAttr::MeanChange => s.mean_change,
                }
            }
            Mean => crate::stats::mean(x),
            Median => median(x),
            Std => crate::stats::std(x),
            Variance => crate::stats::variance(x),
            Min if x.is_empty() => f64::NAN,
            Min => crate::stats::min(x),
            Max if x.is_empty() => f64::NAN,
            Max => crate::stats::max(x),
            Skewness => skewness(x),
            Kurtosis => kurtosis(x),
            Quantile { q } => quantile(x, q),
            AbsEnergy => abs_energy(x),
            CountMean { above: true } => count_above_mean(x),
            CountMean { above: false } => count_below_mean(x),
            LongestStrike { above: true } => longest_strike_above_mean(x),
            LongestStrike { above: false } => longest_strike_below_mean(x),
            NumberPeaks { support } => number_peaks(x, support),
            BinnedEntropy { bins } => binned_entropy(x, bins),
            RatioBeyondRSigma { r } => ratio_beyond_r_sigma(x, r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialFeature {
    AvgPosition(NfcState),
    Nf4EdgeRun,
}

impl SpatialFeature {
    fn name(&self) -> String {
        match self {
            SpatialFeature::AvgPosition(s) => format!("spatial__avg_position_nf{}", *s as u8),
            SpatialFeature::Nf4EdgeRun => "spatial__nf4_edge_run".into(),
        }
    }

    pub fn apply(&self, grid: &NozzleGrid) -> f64 {
        match *self {
            SpatialFeature::AvgPosition(s) => spatial::spatial_avg_position(grid, s),
            SpatialFeature::Nf4EdgeRun => spatial::nf4_edge_run(grid),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CatalogEntry {
    /// `channel` is 0-based (0 = NF1).
    Series { channel: usize, family: Family },
    Spatial(SpatialFeature),
}

/// Parameter grids from which a catalog is expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogSpec {
    /// 0-based channels to expand the time-based families over.
    pub channels: Vec<usize>,
    pub autocorrelation_lags: Vec<usize>,
    pub derivative_orders: Vec<usize>,
    pub quantiles: Vec<f64>,
    pub peak_supports: Vec<usize>,
    pub entropy_bins: Vec<usize>,
    pub r_sigmas: Vec<f64>,
    pub spatial: bool,
}

impl Default for CatalogSpec {
    fn default() -> Self {
        CatalogSpec {
            channels: (0..CHANNELS).collect(),
            autocorrelation_lags: alloc::vec![1, 2, 3, 4, 5, 10, 20, 50],
            derivative_orders: alloc::vec![1, 2],
            quantiles: alloc::vec![0.05, 0.25, 0.75, 0.95],
            peak_supports: alloc::vec![1, 3, 5],
            entropy_bins: alloc::vec![5, 10],
            r_sigmas: alloc::vec![1.0, 2.0],
            spatial: true,
        }
    }
}

impl CatalogSpec {
    /// Families applied to each channel, in column order.
    pub fn families(&self) -> Vec<Family> {
        use Family::*;
        let mut f = Vec::new();
        for a in [TrendAttr::Slope, TrendAttr::Intercept, TrendAttr::RValue, TrendAttr::Stderr] {
            f.push(LinearTrend(a));
        }
        f.extend(self.autocorrelation_lags.iter().map(|&lag| Autocorrelation { lag }));
        f.push(CidCe { normalize: false });
        f.push(CidCe { normalize: true });
        for &order in &self.derivative_orders {
            for stat in [SummaryStat::Mean, SummaryStat::Std, SummaryStat::Min, SummaryStat::Max] {
                f.push(Derivative { order, stat });
            }
        }
        for a in [
            StepAttr::FinalValue,
            StepAttr::MaxStep,
            StepAttr::MeanAbsChange,
            StepAttr::MeanChange,
        ] {
            f.push(Step(a));
        }
        f.extend([Mean, Median, Std, Variance, Min, Max, Skewness, Kurtosis]);
        f.extend(self.quantiles.iter().map(|&q| Quantile { q }));
        f.push(AbsEnergy);
        f.push(CountMean { above: true });
        f.push(CountMean { above: false });
        f.push(LongestStrike { above: true });
        f.push(LongestStrike { above: false });
        f.extend(self.peak_supports.iter().map(|&support| NumberPeaks { support }));
        f.extend(self.entropy_bins.iter().map(|&bins| BinnedEntropy { bins }));
        f.extend(self.r_sigmas.iter().map(|&r| RatioBeyondRSigma { r }));
        f
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.iter().any(|&c| c >= CHANNELS) {
            return Err(Error::Config("channel index out of range".into()));
        }
        if self.autocorrelation_lags.contains(&0)
            || self.derivative_orders.contains(&0)
            || self.peak_supports.contains(&0)
            || self.entropy_bins.contains(&0)
        {
            return Err(Error::Config("lags, orders, supports and bins must be positive".into()));
        }
        if self.quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::Config("quantiles must lie in [0, 1]".into()));
        }
        if self.r_sigmas.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Config("r-sigma values must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCatalog {
    entries: Vec<CatalogEntry>,
    names: Vec<String>,
}

impl Default for FeatureCatalog {
    fn default() -> Self {
        FeatureCatalog::from_spec(&CatalogSpec::default()).expect("default catalog is valid")
    }
}

impl FeatureCatalog {
    pub fn from_spec(spec: &CatalogSpec) -> Result<Self> {
        spec.validate()?;
        let families = spec.families();
        let mut entries = Vec::new();
        for &channel in &spec.channels {
            entries.extend(families.iter().map(|&family| CatalogEntry::Series { channel, family }));
        }
        if spec.spatial {
            entries.extend(
                NfcState::FAILED
                    .iter()
                    .map(|&s| CatalogEntry::Spatial(SpatialFeature::AvgPosition(s))),
            );
            entries.push(CatalogEntry::Spatial(SpatialFeature::Nf4EdgeRun));
        }
        Self::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<CatalogEntry>) -> Result<Self> {
        let names: Vec<String> = entries
            .iter()
            .map(|e| match e {
                CatalogEntry::Series { channel, family } => {
                    format!("ch{}__{}", channel + 1, family.name())
                }
                CatalogEntry::Spatial(s) => s.name(),
            })
            .collect();
        let mut sorted: Vec<&String> = names.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate feature column `{}`", w[0])));
        }
        Ok(FeatureCatalog { entries, names })
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn digest(&self) -> String {
        digest::names_digest(&self.names)
    }

    /// Feature vector of one head. Only the first record of each print job
    /// is used, and the terminal grid is the last of those records.
    pub fn extract(&self, log: &NozzleLog) -> Vec<f64> {
        let log = downsample_first_per_job(log.records()).expect("non-empty log");
        let log = &log;
        let counts = to_count_series(log);
        let channels: Vec<Vec<f64>> = (0..CHANNELS).map(|k| counts.channel_f64(k)).collect();
        let terminal = &log.terminal().grid;
        self.entries
            .iter()
            .map(|e| match e {
                CatalogEntry::Series { channel, family } => family.apply(&channels[*channel]),
                CatalogEntry::Spatial(s) => s.apply(terminal),
            })
            .collect()
    }
}

/// Extracts one row per log, in input order.
pub fn extract_matrix(logs: &[NozzleLog], catalog: &FeatureCatalog) -> Result<FeatureMatrix> {
    if logs.is_empty() {
        return Err(Error::EmptyLog);
    }
    let rows = par::map_indexed(logs.len(), |i| catalog.extract(&logs[i]));
    let mut data = Vec::with_capacity(rows.len() * catalog.len());
    for r in rows {
        data.extend(r);
    }
    FeatureMatrix::new(
        logs.iter().map(|l| String::from(l.head_id())).collect(),
        catalog.names().to_vec(),
        Matrix::new(logs.len(), catalog.len(), data)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nozzle::LogRecord;

    fn flat_log(id: &str, n: u64) -> NozzleLog {
        NozzleLog::new(
            (0..n)
                .map(|t| LogRecord {
                    head_id: id.into(),
                    job_id: t,
                    t,
                    grid: NozzleGrid::empty(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn default_catalog_has_256_unique_columns() {
        let cat = FeatureCatalog::default();
        assert_eq!(cat.len(), 256);
        assert_eq!(CatalogSpec::default().families().len(), 50);
        assert!(cat.names().iter().any(|n| n == "spatial__nf4_edge_run"));
        assert!(cat.names().iter().any(|n| n == "ch4__step__attr_max_step"));
        assert_eq!(cat.digest(), FeatureCatalog::default().digest());
    }

    #[test]
    fn constant_zero_series_follows_conventions() {
        let cat = FeatureCatalog::default();
        let m = extract_matrix(&[flat_log("a", 60)], &cat).unwrap();
        for (name, v) in cat.names().iter().zip(m.row(0)) {
            assert!(!v.is_infinite(), "{name}");
            if name.contains("linear_trend")
                || name.contains("autocorrelation")
                || name.contains("cid_ce")
            {
                assert_eq!(*v, 0.0, "{name}");
            }
            if name.contains("skewness") || name.contains("kurtosis") || name.contains("avg_position") {
                assert!(v.is_nan(), "{name}");
            }
        }
    }

    #[test]
    fn short_logs_yield_nan_not_errors() {
        let cat = FeatureCatalog::default();
        let m = extract_matrix(&[flat_log("a", 1)], &cat).unwrap();
        let slope = m.column_index("ch1__linear_trend__attr_slope").unwrap();
        assert!(m.row(0)[slope].is_nan());
    }

    #[test]
    fn head_order_permutes_rows() {
        let cat = FeatureCatalog::default();
        let mut a = flat_log("a", 5).into_records();
        a[4].grid.set(0, 0, NfcState::Nf4);
        let a = NozzleLog::new(a).unwrap();
        let b = flat_log("b", 9);
        let ab = extract_matrix(&[a.clone(), b.clone()], &cat).unwrap();
        let ba = extract_matrix(&[b, a], &cat).unwrap();
        let eq = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits());
        assert!(eq(ab.row(0), ba.row(1)));
        assert!(eq(ab.row(1), ba.row(0)));
    }

    #[test]
    fn custom_spec_changes_width() {
        let spec = CatalogSpec {
            channels: alloc::vec![0],
            autocorrelation_lags: alloc::vec![1],
            spatial: false,
            ..CatalogSpec::default()
        };
        assert_eq!(FeatureCatalog::from_spec(&spec).unwrap().len(), 43);
        let bad = CatalogSpec {
            quantiles: alloc::vec![1.5],
            ..CatalogSpec::default()
        };
        assert!(FeatureCatalog::from_spec(&bad).is_err());
    }
}
