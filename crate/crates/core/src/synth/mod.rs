//! Deterministic generator for labeled synthetic nozzle logs.
//!
//! A head's underlying failure state is a list of timed cell events laid
//! down by one archetype (or two, for dual-labeled heads). Each step's
//! observed grid is that state plus transient noise toggles; the terminal
//! step carries no noise. Heads whose output misses their archetype
//! signature are redrawn from the next derived seed.

pub mod signature;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nozzle::{Class, LabelSet, LogRecord, NfcState, NozzleGrid, NozzleLog, CELLS, CHANNELS, COLS, ROWS};
use crate::{par, rng};

pub use signature::{observe, Observation};

/// Redraws allowed before a head is reported as ungeneratable.
pub const MAX_ATTEMPTS: u64 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialMode {
    Scattered,
    ContiguousBlock,
    EdgeRun,
    SparseBurst,
    Drift,
    /// Mixture of near-miss shapes used for the `Other` class.
    Atypical,
}

impl SpatialMode {
    pub fn name(self) -> &'static str {
        match self {
            SpatialMode::Scattered => "scattered",
            SpatialMode::ContiguousBlock => "contiguous_block",
            SpatialMode::EdgeRun => "edge_run",
            SpatialMode::SparseBurst => "sparse_burst",
            SpatialMode::Drift => "drift",
            SpatialMode::Atypical => "atypical",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "scattered" => SpatialMode::Scattered,
            "contiguous_block" => SpatialMode::ContiguousBlock,
            "edge_run" => SpatialMode::EdgeRun,
            "sparse_burst" => SpatialMode::SparseBurst,
            "drift" => SpatialMode::Drift,
            "atypical" => SpatialMode::Atypical,
            _ => return Err(Error::Config(format!("unknown spatial mode `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternParams {
    pub pattern: Class,
    /// Inclusive lifetime range in print jobs.
    pub n_steps: (u32, u32),
    /// Fraction of the lifetime at which failures start.
    pub onset: f64,
    /// Inclusive range of the archetype's failed-nozzle count.
    pub intensity: (u32, u32),
    /// Weights over NF1..NF5.
    pub nfc_mix: [f64; CHANNELS],
    pub spatial_mode: SpatialMode,
    /// Per-step noise: up to `floor(noise_rate * 512)` cells are toggled.
    pub noise_rate: f64,
}

impl PatternParams {
    pub fn default_for(pattern: Class) -> Self {
        let (onset, intensity, nfc_mix, spatial_mode, noise_rate) = match pattern {
            Class::Pattern1 => (0.3, (24, 70), [0.5, 0.5, 0.0, 0.0, 0.0], SpatialMode::Scattered, 0.004),
            Class::Pattern2 => (0.4, (34, 70), [0.0, 0.0, 1.0, 0.0, 0.0], SpatialMode::ContiguousBlock, 0.004),
            Class::Pattern3 => (0.9, (3, 15), [0.2; CHANNELS], SpatialMode::SparseBurst, 0.0),
            Class::Pattern4 => (0.3, (12, 40), [0.1, 0.1, 0.1, 0.6, 0.1], SpatialMode::EdgeRun, 0.004),
            Class::Pattern5 => (0.2, (15, 45), [0.075, 0.075, 0.075, 0.075, 0.7], SpatialMode::Drift, 0.002),
            Class::Other => (0.3, (3, 60), [0.2; CHANNELS], SpatialMode::Atypical, 0.004),
        };
        PatternParams {
            pattern,
            n_steps: (60, 200),
            onset,
            intensity,
            nfc_mix,
            spatial_mode,
            noise_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.n_steps;
        if hi == 0 || lo > hi {
            return Err(Error::Config(format!("{}: empty step range {lo}..={hi}", self.pattern)));
        }
        if lo < 10 {
            return Err(Error::Config(format!("{}: lifetimes need at least 10 steps", self.pattern)));
        }
        if !(0.0..=1.0).contains(&self.onset) {
            return Err(Error::Config(format!("{}: onset must lie in [0, 1]", self.pattern)));
        }
        if self.intensity.0 > self.intensity.1 || self.intensity.1 as usize > CELLS {
            return Err(Error::Config(format!("{}: invalid intensity range", self.pattern)));
        }
        let sum: f64 = self.nfc_mix.iter().sum();
        if self.nfc_mix.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "{}: state weights must be non-negative and sum to 1",
                self.pattern
            )));
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return Err(Error::Config(format!("{}: noise rate must lie in [0, 1)", self.pattern)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    /// Heads to generate per label set, in generation order.
    pub class_counts: Vec<(LabelSet, usize)>,
    pub seed: u64,
    pub params: BTreeMap<Class, PatternParams>,
}

impl DatasetSpec {
    /// 411 heads, six of them labeled `Pattern1|Pattern2`.
    pub fn default_with_seed(seed: u64) -> Self {
        let counts = [
            (Class::Pattern1, 121),
            (Class::Pattern2, 69),
            (Class::Pattern3, 30),
            (Class::Pattern4, 26),
            (Class::Pattern5, 23),
            (Class::Other, 136),
        ];
        let mut class_counts: Vec<(LabelSet, usize)> =
            counts.iter().map(|&(c, n)| (LabelSet::single(c), n)).collect();
        class_counts.push((
            LabelSet::from_classes([Class::Pattern1, Class::Pattern2]).expect("valid set"),
            6,
        ));
        DatasetSpec {
            class_counts,
            seed,
            params: Class::ALL.iter().map(|&c| (c, PatternParams::default_for(c))).collect(),
        }
    }

    pub fn n_heads(&self) -> usize {
        self.class_counts.iter().map(|c| c.1).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_counts.is_empty() {
            return Err(Error::Config("no label sets to generate".into()));
        }
        for (labels, n) in &self.class_counts {
            if *n == 0 {
                return Err(Error::Config(format!("count for {labels} must be positive")));
            }
            if labels.contains(Class::Other) && labels.len() > 1 {
                return Err(Error::Config("Other cannot be combined with a pattern".into()));
            }
            for c in labels.iter() {
                self.params
                    .get(&c)
                    .ok_or_else(|| Error::Config(format!("no parameters for {c}")))?
                    .validate()?;
            }
        }
        for (c, p) in &self.params {
            if p.pattern != *c {
                return Err(Error::Config(format!("parameters filed under {c} describe {}", p.pattern)));
            }
        }
        Ok(())
    }

    /// Label set of the head at generation index `idx`.
    pub fn labels_at(&self, mut idx: usize) -> Option<LabelSet> {
        for (l, n) in &self.class_counts {
            if idx < *n {
                return Some(*l);
            }
            idx -= n;
        }
        None
    }
}

/// A generated dataset: logs in generation order plus the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub logs: Vec<NozzleLog>,
    pub manifest: Vec<(String, LabelSet)>,
}

/// One cell in a given failed state over the half-open step range `start..end`.
#[derive(Debug, Clone, Copy)]
struct Event {
    cell: usize,
    state: NfcState,
    start: usize,
    end: usize,
}

fn uniform(r: &mut ChaCha8Rng, range: (u32, u32)) -> usize {
    r.gen_range(range.0..=range.1) as usize
}

fn sample_state(r: &mut ChaCha8Rng, mix: &[f64; CHANNELS]) -> NfcState {
    let u: f64 = r.gen::<f64>() * mix.iter().sum::<f64>();
    let mut acc = 0.0;
    for (k, w) in mix.iter().enumerate() {
        acc += w;
        if u < acc {
            return NfcState::FAILED[k];
        }
    }
    let last = mix.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    NfcState::FAILED[last]
}

fn dominant_state(mix: &[f64; CHANNELS]) -> NfcState {
    let mut best = 0;
    for k in 1..CHANNELS {
        if mix[k] > mix[best] {
            best = k;
        }
    }
    NfcState::FAILED[best]
}

fn any_state(r: &mut ChaCha8Rng) -> NfcState {
    NfcState::FAILED[r.gen_range(0..CHANNELS)]
}

/// Onset step: the configured fraction jittered by up to 5% of the lifetime.
fn onset_step(r: &mut ChaCha8Rng, onset: f64, n: usize) -> usize {
    let jitter = (n as f64 * 0.05) as i64;
    let base = (onset * n as f64) as i64 + r.gen_range(-jitter..=jitter);
    base.clamp(0, n as i64 - 2) as usize
}

/// `k` cells scattered over the whole grid, appearing uniformly in
/// `from..n` and persisting to the end.
fn scattered(r: &mut ChaCha8Rng, k: usize, from: usize, n: usize, state: impl Fn(&mut ChaCha8Rng) -> NfcState) -> Vec<Event> {
    (0..k)
        .map(|_| Event {
            cell: r.gen_range(0..CELLS),
            state: state(r),
            start: r.gen_range(from..n),
            end: n,
        })
        .collect()
}

fn row_run(row: usize, col: usize, len: usize, state: NfcState, start: usize, end: usize) -> Vec<Event> {
    (col..col + len)
        .map(|c| Event {
            cell: row * COLS + c,
            state,
            start,
            end,
        })
        .collect()
}

fn layer(r: &mut ChaCha8Rng, p: &PatternParams, n: usize) -> Vec<Event> {
    let s0 = onset_step(r, p.onset, n);
    match p.spatial_mode {
        SpatialMode::Scattered => {
            let k = uniform(r, p.intensity);
            let mut ev = scattered(r, k, s0, n, |r| sample_state(r, &p.nfc_mix));
            let transient = k / 6;
            for _ in 0..transient {
                let start = r.gen_range(s0..n - 1);
                ev.push(Event {
                    cell: r.gen_range(0..CELLS),
                    state: sample_state(r, &p.nfc_mix),
                    start,
                    end: r.gen_range(start + 1..n),
                });
            }
            ev
        }
        SpatialMode::ContiguousBlock => {
            let len = uniform(r, p.intensity).min(COLS);
            let row = r.gen_range(0..ROWS);
            let col = r.gen_range(0..=COLS - len);
            let jump = r.gen_range(s0.max(1)..n);
            let background = r.gen_range(0..=8);
            let mut ev = scattered(r, background, 0, n, any_state);
            ev.extend(row_run(row, col, len, sample_state(r, &p.nfc_mix), jump, n));
            ev
        }
        SpatialMode::EdgeRun => {
            let len = uniform(r, p.intensity).min(COLS);
            let row = r.gen_range(0..ROWS);
            let from_left = r.gen_bool(0.5);
            let background = r.gen_range(0..=10);
            let mut ev = scattered(r, background, 0, n, |r| sample_state(r, &p.nfc_mix));
            let span = n - 1 - s0;
            let state = dominant_state(&p.nfc_mix);
            for d in 0..len {
                let col = if from_left { d } else { COLS - 1 - d };
                ev.push(Event {
                    cell: row * COLS + col,
                    state,
                    start: s0 + d * span / len,
                    end: n,
                });
            }
            ev
        }
        SpatialMode::SparseBurst => {
            let burst = r.gen_range(signature::tail_start(n)..n);
            let k = uniform(r, p.intensity).max(1);
            let mut ev = scattered(r, k, burst, n, |r| sample_state(r, &p.nfc_mix));
            // The terminal record always shows the burst.
            ev[0].start = n - 1;
            ev
        }
        SpatialMode::Drift => {
            let k = uniform(r, p.intensity);
            let mut ev = scattered(r, k, s0, n, |r| sample_state(r, &p.nfc_mix));
            for _ in 0..k / 5 {
                let start = r.gen_range(s0..n - 1);
                ev.push(Event {
                    cell: r.gen_range(0..CELLS),
                    state: sample_state(r, &p.nfc_mix),
                    start,
                    end: r.gen_range(start + 1..n),
                });
            }
            ev
        }
        SpatialMode::Atypical => atypical(r, p, s0, n),
    }
}

/// Cells `col..col + len` of `row`, failing one after another between
/// `from` and the end of life.
fn growing_run(row: usize, col: usize, len: usize, state: NfcState, from: usize, n: usize) -> Vec<Event> {
    let span = n - 1 - from;
    (0..len)
        .map(|d| Event {
            cell: row * COLS + col + d,
            state,
            start: from + d * span / len,
            end: n,
        })
        .collect()
}

/// Near misses of the pattern archetypes plus plain low-level wear.
fn atypical(r: &mut ChaCha8Rng, p: &PatternParams, s0: usize, n: usize) -> Vec<Event> {
    let k = uniform(r, p.intensity);
    let extra = r.gen_range(0..=5);
    let mut ev = scattered(r, extra, 0, n, any_state);
    match r.gen_range(0..7) {
        // Light wear spread over the lifetime.
        0 => {
            let from = r.gen_range(0..n / 2);
            ev.extend(scattered(r, k.min(15), from, n, any_state));
        }
        // Scattered NF1/NF2 blockages, too few for the scattered archetype.
        1 => {
            let count = r.gen_range(10..20);
            ev.extend(scattered(r, count, s0, n, |r| sample_state(r, &[0.5, 0.5, 0.0, 0.0, 0.0])));
        }
        // A failure episode that recovers before end of life.
        2 => {
            let start = r.gen_range(n / 5..n / 2);
            let stop = r.gen_range(start + 2..n - 3);
            for _ in 0..k.max(20) {
                let a = r.gen_range(start..stop);
                ev.push(Event {
                    cell: r.gen_range(0..CELLS),
                    state: any_state(r),
                    start: a,
                    end: r.gen_range(a + 1..=stop),
                });
            }
        }
        // An NF4 run that is too short at the edge or sits inside the row.
        3 => {
            let row = r.gen_range(0..ROWS);
            if r.gen_bool(0.5) {
                let len = r.gen_range(4..10);
                ev.extend(growing_run(row, 0, len, NfcState::Nf4, s0, n));
            } else {
                let len = r.gen_range(10..=30);
                let col = r.gen_range(4..COLS - len - 4);
                ev.extend(growing_run(row, col, len, NfcState::Nf4, s0, n));
            }
        }
        // A block that appears at once but is shorter than a full block.
        4 => {
            let len = r.gen_range(12..30);
            let row = r.gen_range(0..ROWS);
            let col = r.gen_range(0..=COLS - len);
            let at = r.gen_range(s0.max(1)..n);
            ev.extend(row_run(row, col, len, any_state(r), at, n));
        }
        // A sparse burst that starts before the final tenth of life.
        5 => {
            let tail = signature::tail_start(n);
            let from = r.gen_range(tail * 3 / 4..tail);
            let count = r.gen_range(3..=15);
            let mut burst = scattered(r, count, from, n, any_state);
            burst[0].start = from;
            ev.extend(burst);
        }
        // Broad wear in the channels the scattered archetype does not use.
        _ => {
            let mix = [0.05, 0.05, 0.3, 0.3, 0.3];
            ev.extend(scattered(r, k.max(12), s0, n, |r| sample_state(r, &mix)));
        }
    }
    ev
}

fn toggle_noise(r: &mut ChaCha8Rng, grid: &mut NozzleGrid, slots: usize) {
    for _ in 0..slots {
        if r.gen_bool(0.5) {
            let cell = r.gen_range(0..CELLS);
            let cells = grid.cells_mut();
            cells[cell] = if cells[cell].is_failed() { NfcState::Empty } else { any_state(r) };
        }
    }
}

fn head_id(head_seed: u64) -> String {
    format!("H{:08x}", head_seed >> 32)
}

fn render(r: &mut ChaCha8Rng, id: &str, events: &[Event], n: usize, noise_rate: f64) -> Result<NozzleLog> {
    let slots = (noise_rate * CELLS as f64) as usize;
    let mut records = Vec::with_capacity(2 * n);
    let mut t = 0u64;
    for step in 0..n {
        let mut base = NozzleGrid::empty();
        for e in events.iter().filter(|e| e.start <= step && step < e.end) {
            base.cells_mut()[e.cell] = e.state;
        }
        let terminal = step + 1 == n;
        let extra = if terminal { 0 } else { r.gen_range(0..3) };
        for k in 0..=extra {
            let mut grid = base.clone();
            if !terminal {
                toggle_noise(r, &mut grid, slots * (k + 1));
            }
            records.push(LogRecord {
                head_id: id.into(),
                job_id: step as u64 + 1,
                t,
                grid,
            });
            t += 1 + r.gen_range(0..3);
        }
    }
    NozzleLog::new(records)
}

fn attempt(params: &[&PatternParams], labels: LabelSet, head_seed: u64, attempt: u64) -> Result<Option<NozzleLog>> {
    let mut r = rng::rng_for(rng::derive(head_seed, attempt));
    let primary = params[0];
    let n = uniform(&mut r, primary.n_steps);
    let mut events = Vec::new();
    for p in params {
        events.extend(layer(&mut r, p, n));
    }
    let noise = params.iter().map(|p| p.noise_rate).fold(0.0, f64::max);
    let log = render(&mut r, &head_id(head_seed), &events, n, noise)?;
    Ok(observe(&log).holds_all(labels).then_some(log))
}

/// Generates one head carrying every class of `labels`, using the matching
/// entries of `params`.
pub fn generate_labeled(
    params: &BTreeMap<Class, PatternParams>,
    labels: LabelSet,
    head_seed: u64,
) -> Result<NozzleLog> {
    let layers: Vec<&PatternParams> = labels
        .iter()
        .map(|c| params.get(&c).ok_or_else(|| Error::Config(format!("no parameters for {c}"))))
        .collect::<Result<_>>()?;
    for p in &layers {
        p.validate()?;
    }
    for a in 0..MAX_ATTEMPTS {
        if let Some(log) = attempt(&layers, labels, head_seed, a)? {
            return Ok(log);
        }
    }
    Err(Error::Generation(format!(
        "no head matching the {labels} signature after {MAX_ATTEMPTS} draws (seed {head_seed})"
    )))
}

/// One head of a single archetype.
pub fn generate_head(params: &PatternParams, head_seed: u64) -> Result<(NozzleLog, LabelSet)> {
    let labels = LabelSet::single(params.pattern);
    let map: BTreeMap<Class, PatternParams> = [(params.pattern, params.clone())].into_iter().collect();
    Ok((generate_labeled(&map, labels, head_seed)?, labels))
}

/// Generates every head of `spec`. Head `i` uses seed `derive(spec.seed, i)`.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<GeneratedDataset> {
    spec.validate()?;
    let n = spec.n_heads();
    let heads = par::map_indexed(n, |i| {
        let labels = spec.labels_at(i).expect("index within spec");
        generate_labeled(&spec.params, labels, rng::derive(spec.seed, i as u64)).map(|log| (log, labels))
    });
    let mut logs = Vec::with_capacity(n);
    let mut manifest = Vec::with_capacity(n);
    let mut seen = BTreeMap::new();
    for (i, h) in heads.into_iter().enumerate() {
        let (log, labels) = h?;
        let id = String::from(log.head_id());
        if let Some(j) = seen.insert(id.clone(), i) {
            return Err(Error::Generation(format!("heads {j} and {i} share id {id}")));
        }
        manifest.push((id, labels));
        logs.push(log);
    }
    Ok(GeneratedDataset { logs, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_archetype_meets_its_signature() {
        for c in Class::ALL {
            let p = PatternParams::default_for(c);
            for s in 0..8 {
                let (log, labels) = generate_head(&p, rng::derive(99, s)).unwrap();
                assert_eq!(labels, LabelSet::single(c));
                let obs = observe(&log);
                assert!(obs.holds(c), "{c} seed {s}: {obs:?}");
                let n = obs.n_steps;
                assert!((60..=200).contains(&n));
            }
        }
    }

    #[test]
    fn archetype_examples() {
        let p2 = PatternParams::default_for(Class::Pattern2);
        let p3 = PatternParams::default_for(Class::Pattern3);
        for s in 0..5 {
            let obs = observe(&generate_head(&p2, s).unwrap().0);
            assert!(obs.max_channel_rise >= 30 && obs.terminal_run >= 30);
            let obs = observe(&generate_head(&p3, s).unwrap().0);
            assert!(obs.zero_steps * 10 >= obs.n_steps * 9);
            assert!(obs.first_nonzero.unwrap() >= signature::tail_start(obs.n_steps));
        }
    }

    #[test]
    fn dual_heads_carry_both_signatures() {
        let spec = DatasetSpec::default_with_seed(5);
        let dual = LabelSet::from_classes([Class::Pattern1, Class::Pattern2]).unwrap();
        for s in 0..4 {
            let log = generate_labeled(&spec.params, dual, s).unwrap();
            let obs = observe(&log);
            assert!(obs.holds(Class::Pattern1) && obs.holds(Class::Pattern2));
        }
    }

    #[test]
    fn heads_are_deterministic() {
        let p = PatternParams::default_for(Class::Pattern5);
        assert_eq!(generate_head(&p, 17).unwrap(), generate_head(&p, 17).unwrap());
        assert_ne!(generate_head(&p, 17).unwrap().0, generate_head(&p, 18).unwrap().0);
    }

    #[test]
    fn records_include_repeated_jobs() {
        let p = PatternParams::default_for(Class::Pattern1);
        let (log, _) = generate_head(&p, 3).unwrap();
        let jobs = log.records().last().unwrap().job_id as usize;
        assert!(log.len() > jobs);
        assert!(log.records().windows(2).all(|w| w[0].job_id <= w[1].job_id));
    }

    #[test]
    fn invalid_params_are_config_errors() {
        let mut p = PatternParams::default_for(Class::Pattern1);
        p.n_steps = (0, 0);
        assert!(matches!(generate_head(&p, 1), Err(Error::Config(_))));
        p.n_steps = (80, 70);
        assert!(matches!(generate_head(&p, 1), Err(Error::Config(_))));
        let mut p = PatternParams::default_for(Class::Pattern1);
        p.nfc_mix = [0.5, 0.6, 0.0, 0.0, 0.0];
        assert!(p.validate().is_err());
    }

    #[test]
    fn small_spec_counts() {
        let spec = DatasetSpec {
            class_counts: alloc::vec![(LabelSet::single(Class::Pattern4), 1)],
            seed: 1,
            params: DatasetSpec::default_with_seed(1).params,
        };
        let d = generate_dataset(&spec).unwrap();
        assert_eq!(d.logs.len(), 1);
        assert_eq!(d.manifest[0].1, LabelSet::single(Class::Pattern4));
        assert_eq!(d.manifest[0].0, d.logs[0].head_id());
    }
}
