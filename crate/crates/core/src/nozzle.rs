//! Nozzle-log data model.
//!
//! A printhead carries 512 nozzles in four rows of 128. Each log record holds
//! one [`NozzleGrid`] snapshot; a [`NozzleLog`] is the time-ordered sequence of
//! those snapshots for one head. Cells are addressed row-major, row 0 column 0
//! first and row 3 column 127 last.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

pub const ROWS: usize = 4;
pub const COLS: usize = 128;
pub const CELLS: usize = ROWS * COLS;
/// Number of failure states (and count channels).
pub const CHANNELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[repr(u8)]
pub enum NfcState {
    #[default]
    Empty = 0,
    Nf1 = 1,
    Nf2 = 2,
    Nf3 = 3,
    Nf4 = 4,
    Nf5 = 5,
}

impl NfcState {
    pub const ALL: [NfcState; 6] = [
        NfcState::Empty,
        NfcState::Nf1,
        NfcState::Nf2,
        NfcState::Nf3,
        NfcState::Nf4,
        NfcState::Nf5,
    ];
    pub const FAILED: [NfcState; 5] = [
        NfcState::Nf1,
        NfcState::Nf2,
        NfcState::Nf3,
        NfcState::Nf4,
        NfcState::Nf5,
    ];

    /// Channel index 0..5 of a failure state, `None` for `Empty`.
    pub fn channel(self) -> Option<usize> {
        match self {
            NfcState::Empty => None,
            s => Some(s as usize - 1),
        }
    }

    pub fn from_channel(k: usize) -> Option<NfcState> {
        NfcState::FAILED.get(k).copied()
    }

    pub fn is_failed(self) -> bool {
        self != NfcState::Empty
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NozzleGrid {
    cells: [NfcState; CELLS],
}

impl Default for NozzleGrid {
    fn default() -> Self {
        NozzleGrid {
            cells: [NfcState::Empty; CELLS],
        }
    }
}

impl fmt::Debug for NozzleGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..ROWS {
            for c in 0..COLS {
                let ch = match self.get(r, c) {
                    NfcState::Empty => '.',
                    s => (b'0' + s as u8) as char,
                };
                write!(f, "{ch}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl NozzleGrid {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_cells(cells: [NfcState; CELLS]) -> Self {
        NozzleGrid { cells }
    }

    /// Builds a grid from a row-major slice; the slice must hold 512 cells.
    pub fn from_slice(cells: &[NfcState]) -> Result<Self> {
        let cells: [NfcState; CELLS] = cells.try_into().map_err(|_| {
            Error::Schema(alloc::format!("grid has {} cells, expected {CELLS}", cells.len()))
        })?;
        Ok(NozzleGrid { cells })
    }

    pub fn get(&self, row: usize, col: usize) -> NfcState {
        self.cells[row * COLS + col]
    }

    pub fn set(&mut self, row: usize, col: usize, state: NfcState) {
        self.cells[row * COLS + col] = state;
    }

    pub fn cells(&self) -> &[NfcState; CELLS] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [NfcState; CELLS] {
        &mut self.cells
    }

    pub fn row(&self, row: usize) -> &[NfcState] {
        &self.cells[row * COLS..(row + 1) * COLS]
    }

    /// Number of cells in each failure state, indexed by channel.
    pub fn channel_counts(&self) -> [u16; CHANNELS] {
        let mut counts = [0u16; CHANNELS];
        for s in self.cells.iter() {
            if let Some(k) = s.channel() {
                counts[k] += 1;
            }
        }
        counts
    }

    pub fn failed_count(&self) -> usize {
        self.cells.iter().filter(|s| s.is_failed()).count()
    }

    /// Five binary 4×128 planes; plane `k` marks cells in state NF(k+1).
    pub fn channel_view(&self) -> [[[u8; COLS]; ROWS]; CHANNELS] {
        let mut planes = [[[0u8; COLS]; ROWS]; CHANNELS];
        for r in 0..ROWS {
            for c in 0..COLS {
                if let Some(k) = self.get(r, c).channel() {
                    planes[k][r][c] = 1;
                }
            }
        }
        planes
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRecord {
    pub head_id: String,
    pub job_id: u64,
    pub t: u64,
    pub grid: NozzleGrid,
}

/// Time-ordered log of a single printhead. Never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NozzleLog {
    head_id: String,
    records: Vec<LogRecord>,
}

impl NozzleLog {
    pub fn new(records: Vec<LogRecord>) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyLog)?;
        let head_id = first.head_id.clone();
        for pair in records.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(Error::Schema(alloc::format!(
                    "head {head_id}: time-step {} does not follow {}",
                    pair[1].t,
                    pair[0].t
                )));
            }
        }
        if let Some(r) = records.iter().find(|r| r.head_id != head_id) {
            return Err(Error::Schema(alloc::format!(
                "log mixes heads {head_id} and {}",
                r.head_id
            )));
        }
        Ok(NozzleLog { head_id, records })
    }

    pub fn head_id(&self) -> &str {
        &self.head_id
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The last record, whose grid feeds the spatial features.
    pub fn terminal(&self) -> &LogRecord {
        self.records.last().expect("non-empty log")
    }

    pub fn into_records(self) -> Vec<LogRecord> {
        self.records
    }
}

/// Keeps only the earliest record of every print job.
///
/// Output records stay in time order. Applying it twice is the same as once.
pub fn downsample_first_per_job(records: &[LogRecord]) -> Result<NozzleLog> {
    if records.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut first: BTreeMap<u64, usize> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        first
            .entry(r.job_id)
            .and_modify(|j| {
                if r.t < records[*j].t {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let mut kept: Vec<usize> = first.into_values().collect();
    kept.sort_by_key(|&i| (records[i].t, i));
    NozzleLog::new(kept.into_iter().map(|i| records[i].clone()).collect())
}

/// Per-time-step failed-nozzle counts for each of the five failure states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSeries {
    pub head_id: String,
    channels: [Vec<u16>; CHANNELS],
}

impl CountSeries {
    pub fn from_channels(head_id: String, channels: [Vec<u16>; CHANNELS]) -> Result<Self> {
        let n = channels[0].len();
        if n == 0 || channels.iter().any(|c| c.len() != n) {
            return Err(Error::Schema("count channels must share a positive length".into()));
        }
        if channels.iter().flatten().any(|&v| v as usize > CELLS) {
            return Err(Error::Schema("count exceeds nozzle total".into()));
        }
        Ok(CountSeries { head_id, channels })
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, k: usize) -> &[u16] {
        &self.channels[k]
    }

    pub fn channel_f64(&self, k: usize) -> Vec<f64> {
        self.channels[k].iter().map(|&v| v as f64).collect()
    }

    /// Total failed nozzles at each step.
    pub fn total(&self) -> Vec<u16> {
        (0..self.len())
            .map(|t| self.channels.iter().map(|c| c[t]).sum())
            .collect()
    }
}

pub fn to_count_series(log: &NozzleLog) -> CountSeries {
    let mut channels: [Vec<u16>; CHANNELS] = Default::default();
    for ch in channels.iter_mut() {
        ch.reserve(log.len());
    }
    for r in log.records() {
        let counts = r.grid.channel_counts();
        for (ch, v) in channels.iter_mut().zip(counts) {
            ch.push(v);
        }
    }
    CountSeries {
        head_id: log.head_id().into(),
        channels,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Class {
    Pattern1 = 0,
    Pattern2 = 1,
    Pattern3 = 2,
    Pattern4 = 3,
    Pattern5 = 4,
    Other = 5,
}

impl Class {
    pub const COUNT: usize = 6;
    pub const ALL: [Class; 6] = [
        Class::Pattern1,
        Class::Pattern2,
        Class::Pattern3,
        Class::Pattern4,
        Class::Pattern5,
        Class::Other,
    ];
    pub const PATTERNS: [Class; 5] = [
        Class::Pattern1,
        Class::Pattern2,
        Class::Pattern3,
        Class::Pattern4,
        Class::Pattern5,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Class> {
        Class::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Class::Pattern1 => "Pattern1",
            Class::Pattern2 => "Pattern2",
            Class::Pattern3 => "Pattern3",
            Class::Pattern4 => "Pattern4",
            Class::Pattern5 => "Pattern5",
            Class::Other => "Other",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Class {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Class::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Schema(alloc::format!("unknown class `{s}`")))
    }
}

/// Non-empty set of classes. `Other` never shares a set with a pattern.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelSet(u8);

impl LabelSet {
    pub fn single(class: Class) -> Self {
        LabelSet(1 << class.index())
    }

    pub fn from_classes<I: IntoIterator<Item = Class>>(classes: I) -> Result<Self> {
        let bits = classes.into_iter().fold(0u8, |b, c| b | (1 << c.index()));
        Self::from_bits(bits)
    }

    pub fn from_bits(bits: u8) -> Result<Self> {
        let other = 1u8 << Class::Other.index();
        if bits == 0 {
            return Err(Error::Schema("label set is empty".into()));
        }
        if bits >> Class::COUNT != 0 {
            return Err(Error::Schema("label bits out of range".into()));
        }
        if bits & other != 0 && bits != other {
            return Err(Error::Schema("Other cannot be combined with a pattern".into()));
        }
        Ok(LabelSet(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, class: Class) -> bool {
        self.0 & (1 << class.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Classes in canonical order.
    pub fn iter(self) -> impl Iterator<Item = Class> {
        Class::ALL.into_iter().filter(move |c| self.contains(*c))
    }

    /// First class in canonical order.
    pub fn primary(self) -> Class {
        self.iter().next().expect("non-empty label set")
    }
}

impl fmt::Debug for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

/// `Pattern1|Pattern2` style.
impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            f.write_str(c.name())?;
        }
        Ok(())
    }
}

impl FromStr for LabelSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let classes = s
            .split('|')
            .map(str::parse::<Class>)
            .collect::<Result<Vec<_>>>()?;
        LabelSet::from_classes(classes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rec(job: u64, t: u64) -> LogRecord {
        let mut grid = NozzleGrid::empty();
        grid.set(0, (t % 128) as usize, NfcState::Nf1);
        LogRecord {
            head_id: "h".into(),
            job_id: job,
            t,
            grid,
        }
    }

    fn random_grid(rng: &mut ChaCha8Rng) -> NozzleGrid {
        let mut g = NozzleGrid::empty();
        for c in g.cells_mut().iter_mut() {
            if rng.gen_bool(0.2) {
                *c = NfcState::ALL[rng.gen_range(0..6)];
            }
        }
        g
    }

    #[test]
    fn downsample_keeps_first_record_of_each_job() {
        let records = vec![rec(1, 0), rec(1, 1), rec(2, 2)];
        let log = downsample_first_per_job(&records).unwrap();
        let ts: Vec<u64> = log.records().iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0, 2]);

        let single = downsample_first_per_job(&records[..1]).unwrap();
        assert_eq!(single.records(), &records[..1]);

        assert_eq!(downsample_first_per_job(&[]), Err(Error::EmptyLog));
    }

    #[test]
    fn downsample_matches_group_by_min_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // 3 jobs x 100 records, random distinct t values inside each job's window
        let mut records = Vec::new();
        for job in 0..3u64 {
            let mut ts: Vec<u64> = (0..1000).map(|i| job * 10_000 + i).collect();
            for i in (1..ts.len()).rev() {
                ts.swap(i, rng.gen_range(0..=i));
            }
            ts.truncate(100);
            for t in ts {
                records.push(rec(job, t));
            }
        }
        records.sort_by_key(|r| r.t);
        let log = downsample_first_per_job(&records).unwrap();
        assert_eq!(log.len(), 3);
        for job in 0..3u64 {
            let oracle = records
                .iter()
                .filter(|r| r.job_id == job)
                .map(|r| r.t)
                .min()
                .unwrap();
            assert_eq!(log.records()[job as usize].t, oracle);
        }
        // idempotent
        let again = downsample_first_per_job(log.records()).unwrap();
        assert_eq!(again, log);
    }

    #[test]
    fn count_series_counts_each_state() {
        let mut g = NozzleGrid::empty();
        let log = NozzleLog::new(vec![LogRecord {
            head_id: "h".into(),
            job_id: 0,
            t: 0,
            grid: g.clone(),
        }])
        .unwrap();
        let cs = to_count_series(&log);
        assert!((0..5).all(|k| cs.channel(k) == [0]));

        g.set(0, 0, NfcState::Nf1);
        g.set(1, 5, NfcState::Nf1);
        g.set(3, 127, NfcState::Nf1);
        g.set(2, 64, NfcState::Nf5);
        assert_eq!(g.channel_counts(), [3, 0, 0, 0, 1]);
    }

    #[test]
    fn count_series_matches_cell_tally() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let records: Vec<LogRecord> = (0..50)
            .map(|t| LogRecord {
                head_id: "h".into(),
                job_id: t,
                t,
                grid: random_grid(&mut rng),
            })
            .collect();
        let log = NozzleLog::new(records).unwrap();
        let cs = to_count_series(&log);
        assert_eq!(cs.len(), 50);
        for (t, r) in log.records().iter().enumerate() {
            for k in 0..5 {
                let mut tally = 0u16;
                for row in 0..ROWS {
                    for col in 0..COLS {
                        if r.grid.get(row, col) as usize == k + 1 {
                            tally += 1;
                        }
                    }
                }
                assert_eq!(cs.channel(k)[t], tally);
            }
        }
    }

    #[test]
    fn channel_view_is_one_hot() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_grid(&mut rng);
        let planes = g.channel_view();
        let mut total = 0usize;
        for r in 0..ROWS {
            for c in 0..COLS {
                let hot: u8 = (0..5).map(|k| planes[k][r][c]).sum();
                assert!(hot <= 1);
                for k in 0..5 {
                    assert_eq!(planes[k][r][c] == 1, g.get(r, c) as usize == k + 1);
                }
                total += hot as usize;
            }
        }
        assert_eq!(total, g.failed_count());
    }

    #[test]
    fn label_sets_reject_other_with_pattern() {
        let both: LabelSet = "Pattern1|Pattern2".parse().unwrap();
        assert_eq!(both.len(), 2);
        assert_eq!(both.primary(), Class::Pattern1);
        assert_eq!(alloc::format!("{both}"), "Pattern1|Pattern2");
        assert!("Pattern1|Other".parse::<LabelSet>().is_err());
        assert!(LabelSet::from_bits(0).is_err());
    }

    #[test]
    fn log_rejects_non_increasing_time() {
        assert!(NozzleLog::new(vec![rec(1, 3), rec(2, 3)]).is_err());
    }
}
