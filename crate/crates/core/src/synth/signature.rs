//! Archetype signature checks on a generated head, evaluated on the
//! first-record-per-job view that feature extraction also sees.

use alloc::vec::Vec;

use crate::features::series::linear_trend;
use crate::nozzle::{
    downsample_first_per_job, to_count_series, Class, LabelSet, NfcState, NozzleGrid, NozzleLog,
    COLS, ROWS,
};

pub const P1_MIN_FAILED: usize = 20;
pub const P1_MAX_RUN: usize = 5;
pub const P2_MIN_JUMP: i32 = 30;
pub const P2_MIN_RUN: usize = 30;
pub const P4_MIN_EDGE_RUN: usize = 10;
pub const P5_MAX_JUMP: i32 = 5;
pub const P5_TOTAL: (usize, usize) = (10, 60);

/// Measured quantities behind the signature checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub n_steps: usize,
    /// NF1 plus NF2 failures at the terminal step.
    pub scattered_failed: usize,
    /// Longest same-row run of one NF1 or NF2 state at the terminal step.
    pub scattered_run: usize,
    /// Slope of the dominant NF1/NF2 channel over time.
    pub scattered_slope: f64,
    /// Largest single-step rise within any one channel.
    pub max_channel_rise: i32,
    /// Longest same-row run of any single failed state at the terminal step.
    pub terminal_run: usize,
    pub zero_steps: usize,
    /// Index of the first non-zero step, if any.
    pub first_nonzero: Option<usize>,
    pub terminal_total: usize,
    pub nf4_edge_run: usize,
    /// Largest absolute single-step change of the total count.
    pub max_total_jump: i32,
}

/// Longest run of equal, failed cells within one row whose state is in `states`.
pub fn longest_row_run(grid: &NozzleGrid, states: &[NfcState]) -> usize {
    let mut best = 0;
    for r in 0..ROWS {
        let row = grid.row(r);
        let mut run = 0;
        for c in 0..COLS {
            let s = row[c];
            if s.is_failed() && states.contains(&s) {
                run = if c > 0 && row[c - 1] == s { run + 1 } else { 1 };
                best = best.max(run);
            } else {
                run = 0;
            }
        }
    }
    best
}

/// Longest run of `state` that touches the start or the end of a row.
pub fn edge_run(grid: &NozzleGrid, state: NfcState) -> usize {
    (0..ROWS)
        .map(|r| {
            let row = grid.row(r);
            let left = row.iter().take_while(|&&s| s == state).count();
            let right = row.iter().rev().take_while(|&&s| s == state).count();
            left.max(right)
        })
        .max()
        .unwrap_or(0)
}

pub fn observe(log: &NozzleLog) -> Observation {
    let log = downsample_first_per_job(log.records()).expect("non-empty log");
    let series = to_count_series(&log);
    let n = series.len();
    let terminal = &log.terminal().grid;
    let counts = terminal.channel_counts();

    let dominant = if counts[1] > counts[0] { 1 } else { 0 };
    let scattered_slope = linear_trend(&series.channel_f64(dominant)).slope;

    let mut max_channel_rise = 0;
    for k in 0..counts.len() {
        let ch = series.channel(k);
        for w in ch.windows(2) {
            max_channel_rise = max_channel_rise.max(w[1] as i32 - w[0] as i32);
        }
    }
    let total = series.total();
    let max_total_jump = total
        .windows(2)
        .map(|w| (w[1] as i32 - w[0] as i32).abs())
        .max()
        .unwrap_or(0);

    Observation {
        n_steps: n,
        scattered_failed: counts[0] as usize + counts[1] as usize,
        scattered_run: longest_row_run(terminal, &[NfcState::Nf1, NfcState::Nf2]),
        scattered_slope,
        max_channel_rise,
        terminal_run: longest_row_run(terminal, &NfcState::FAILED),
        zero_steps: total.iter().filter(|&&v| v == 0).count(),
        first_nonzero: total.iter().position(|&v| v > 0),
        terminal_total: terminal.failed_count(),
        nf4_edge_run: edge_run(terminal, NfcState::Nf4),
        max_total_jump,
    }
}

/// First index of the trailing tenth of a lifetime of `n` steps.
pub fn tail_start(n: usize) -> usize {
    n - n.div_ceil(10)
}

impl Observation {
    pub fn holds(&self, class: Class) -> bool {
        let n = self.n_steps;
        match class {
            Class::Pattern1 => {
                self.scattered_failed >= P1_MIN_FAILED
                    && self.scattered_run <= P1_MAX_RUN
                    && self.scattered_slope > 0.0
            }
            Class::Pattern2 => self.max_channel_rise >= P2_MIN_JUMP && self.terminal_run >= P2_MIN_RUN,
            Class::Pattern3 => {
                self.terminal_total > 0
                    && self.zero_steps * 10 >= n * 9
                    && self.first_nonzero.is_some_and(|i| i >= tail_start(n))
            }
            Class::Pattern4 => self.nf4_edge_run >= P4_MIN_EDGE_RUN,
            Class::Pattern5 => {
                self.max_total_jump <= P5_MAX_JUMP
                    && (P5_TOTAL.0..=P5_TOTAL.1).contains(&self.terminal_total)
                    && self.first_nonzero.is_some_and(|i| 2 * i < n)
            }
            Class::Other => Class::PATTERNS.iter().all(|&p| !self.holds(p)),
        }
    }

    /// Every class of the set holds.
    pub fn holds_all(&self, labels: LabelSet) -> bool {
        labels.iter().all(|c| self.holds(c))
    }

    pub fn passing(&self) -> Vec<Class> {
        Class::ALL.iter().copied().filter(|&c| self.holds(c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_and_edges() {
        let mut g = NozzleGrid::empty();
        for c in 0..12 {
            g.set(2, c, NfcState::Nf4);
        }
        for c in 40..47 {
            g.set(0, c, NfcState::Nf1);
        }
        g.set(0, 47, NfcState::Nf2);
        assert_eq!(edge_run(&g, NfcState::Nf4), 12);
        assert_eq!(longest_row_run(&g, &[NfcState::Nf1, NfcState::Nf2]), 7);
        assert_eq!(longest_row_run(&g, &NfcState::FAILED), 12);
        g.set(3, COLS - 1, NfcState::Nf4);
        assert_eq!(edge_run(&g, NfcState::Nf4), 12);
    }

    #[test]
    fn tail_of_lifetime() {
        assert_eq!(tail_start(60), 54);
        assert_eq!(tail_start(61), 54);
        assert_eq!(tail_start(200), 180);
    }
}
