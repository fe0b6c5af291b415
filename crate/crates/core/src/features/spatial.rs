//! Features of the terminal nozzle grid.

use crate::nozzle::{NfcState, NozzleGrid, COLS, ROWS};

/// Mean 0-based column index of the cells in state `nfc`; `NaN` when none.
pub fn spatial_avg_position(grid: &NozzleGrid, nfc: NfcState) -> f64 {
    debug_assert!(nfc != NfcState::Empty);
    let mut sum = 0usize;
    let mut n = 0usize;
    for r in 0..ROWS {
        for (c, s) in grid.row(r).iter().enumerate() {
            if *s == nfc {
                sum += c;
                n += 1;
            }
        }
    }
    if n == 0 {
        f64::NAN
    } else {
        sum as f64 / n as f64
    }
}

/// Longest run of NF4 cells touching either end of any row.
pub fn nf4_edge_run(grid: &NozzleGrid) -> f64 {
    let mut best = 0usize;
    for r in 0..ROWS {
        let row = grid.row(r);
        let left = row.iter().take_while(|s| **s == NfcState::Nf4).count();
        let right = row.iter().rev().take_while(|s| **s == NfcState::Nf4).count();
        best = best.max(left).max(right);
    }
    debug_assert!(best <= COLS);
    best as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn avg_position_examples() {
        let mut g = NozzleGrid::empty();
        g.set(0, 10, NfcState::Nf2);
        g.set(2, 20, NfcState::Nf2);
        assert_eq!(spatial_avg_position(&g, NfcState::Nf2), 15.0);
        assert!(spatial_avg_position(&g, NfcState::Nf3).is_nan());
    }

    #[test]
    fn avg_position_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut g = NozzleGrid::empty();
        let mut placed = 0;
        while placed < 30 {
            let (r, c) = (rng.gen_range(0..ROWS), rng.gen_range(0..COLS));
            if g.get(r, c) == NfcState::Empty {
                g.set(r, c, NfcState::Nf1);
                placed += 1;
            }
        }
        let cols: alloc::vec::Vec<f64> = g
            .cells()
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == NfcState::Nf1)
            .map(|(i, _)| (i % COLS) as f64)
            .collect();
        let oracle = cols.iter().sum::<f64>() / cols.len() as f64;
        assert!((spatial_avg_position(&g, NfcState::Nf1) - oracle).abs() < 1e-12);
    }

    #[test]
    fn edge_run_examples() {
        let mut g = NozzleGrid::empty();
        for c in 0..3 {
            g.set(0, c, NfcState::Nf4);
        }
        assert_eq!(nf4_edge_run(&g), 3.0);

        let mut full = NozzleGrid::empty();
        for c in 0..COLS {
            full.set(2, c, NfcState::Nf4);
        }
        assert_eq!(nf4_edge_run(&full), 128.0);

        let mut interior = NozzleGrid::empty();
        for c in 5..10 {
            interior.set(1, c, NfcState::Nf4);
        }
        assert_eq!(nf4_edge_run(&interior), 0.0);
    }
}
