//! Placement of on-chip tiles across SRAM buffer banks.
//!
//! Consecutive words go to consecutive banks, so any `banks` neighbouring
//! words can be read in the same cycle. Filters are spread over banks so
//! each compute column has its own weight port.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net_model::DataType;
use crate::tiling::{buffer_footprint, TilingPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SramGeometry {
    pub banks: u32,
    pub rows_per_bank: u32,
    pub word_bytes: u32,
}

impl Default for SramGeometry {
    /// 64 KB as 8 banks of 8192 one-byte rows.
    fn default() -> Self {
        SramGeometry {
            banks: 8,
            rows_per_bank: 8192,
            word_bytes: 1,
        }
    }
}

impl SramGeometry {
    pub fn capacity_bytes(&self) -> u64 {
        u64::from(self.banks) * u64::from(self.rows_per_bank) * u64::from(self.word_bytes)
    }

    pub fn capacity_words(&self) -> u64 {
        u64::from(self.banks) * u64::from(self.rows_per_bank)
    }

    pub fn validate(&self) -> Result<()> {
        if self.banks == 0 || self.rows_per_bank == 0 || self.word_bytes == 0 {
            return Err(Error::InvalidConfig("SRAM geometry counts must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SramPlacement {
    /// `(bank, row)` of each word.
    pub assignments: Vec<(u32, u32)>,
    pub filter_to_bank: Option<Vec<u32>>,
}

pub fn place_tile(n_words: u64, geom: &SramGeometry) -> Result<SramPlacement> {
    if n_words > geom.capacity_words() {
        return Err(Error::BufferOverflow {
            words: n_words,
            capacity: geom.capacity_words(),
        });
    }
    let banks = u64::from(geom.banks);
    let assignments = (0..n_words).map(|k| ((k % banks) as u32, (k / banks) as u32)).collect();
    Ok(SramPlacement {
        assignments,
        filter_to_bank: None,
    })
}

/// Bank of each filter of a `tj`-filter tile.
pub fn assign_filters(tj: u32, banks: u32) -> Vec<u32> {
    (0..tj).map(|j| j % banks).collect()
}

/// Fraction of bank rows left empty by a tile of `n_words`.
pub fn unused_row_fraction(n_words: u64, geom: &SramGeometry) -> f64 {
    let used = n_words.div_ceil(u64::from(geom.banks)).min(u64::from(geom.rows_per_bank));
    1.0 - used as f64 / f64::from(geom.rows_per_bank)
}

/// Occupancy of one buffer by the largest tile of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BufferUsage {
    pub data: DataType,
    pub tile_bytes: u64,
    pub words: u64,
    pub rows_used: u64,
    pub unused_row_fraction: f64,
}

pub fn buffer_usage(plan: &TilingPlan, geom: &SramGeometry) -> [BufferUsage; 3] {
    let f = buffer_footprint(plan);
    DataType::ALL.map(|data| {
        let bytes = f.of(data);
        let words = bytes.div_ceil(u64::from(geom.word_bytes));
        BufferUsage {
            data,
            tile_bytes: bytes,
            words,
            rows_used: words.div_ceil(u64::from(geom.banks)),
            unused_row_fraction: unused_row_fraction(words, geom),
        }
    })
}

/// Write `word_index,bank,row` rows.
pub fn write_placement_csv<W: Write>(out: W, placement: &SramPlacement) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["word_index", "bank", "row"])?;
    for (k, (bank, row)) in placement.assignments.iter().enumerate() {
        w.write_record([k.to_string(), bank.to_string(), row.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn placement_examples() {
        let g = SramGeometry::default();
        let p = place_tile(16, &g).unwrap();
        assert_eq!(&p.assignments[..8], &(0..8).map(|b| (b, 0)).collect::<Vec<_>>()[..]);
        assert_eq!(p.assignments[8], (0, 1));
        assert_eq!(p.assignments[15], (7, 1));
        assert_eq!(place_tile(1, &g).unwrap().assignments, vec![(0, 0)]);
        assert!(matches!(place_tile(g.capacity_words() + 1, &g), Err(Error::BufferOverflow { .. })));
    }

    #[test]
    fn filter_examples() {
        assert_eq!(assign_filters(8, 8), (0..8).collect::<Vec<_>>());
        assert_eq!(assign_filters(4, 8), vec![0, 1, 2, 3]);
        let f = assign_filters(16, 8);
        for b in 0..8 {
            assert_eq!(f.iter().filter(|&&x| x == b).count(), 2);
        }
    }

    #[test]
    fn unused_rows() {
        let g = SramGeometry::default();
        assert_eq!(unused_row_fraction(0, &g), 1.0);
        assert_eq!(unused_row_fraction(g.capacity_words(), &g), 0.0);
        assert!((unused_row_fraction(g.capacity_words() / 4, &g) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn csv_dump() {
        let p = place_tile(9, &SramGeometry::default()).unwrap();
        let mut out = Vec::new();
        write_placement_csv(&mut out, &p).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().last(), Some("8,0,1"));
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 64, rng_seed: proptest::test_runner::RngSeed::Fixed(5), ..ProptestConfig::default() })]

        #[test]
        fn windows_of_bank_count_hit_every_bank(banks in 1u32..16, rows in 1u32..64, start_frac in 0.0f64..1.0) {
            let g = SramGeometry { banks, rows_per_bank: rows, word_bytes: 2 };
            let p = place_tile(g.capacity_words(), &g).unwrap();
            let seen: std::collections::HashSet<_> = p.assignments.iter().copied().collect();
            prop_assert_eq!(seen.len(), p.assignments.len());
            prop_assert!(p.assignments.iter().all(|&(b, r)| b < banks && r < rows));
            let n = p.assignments.len() - banks as usize;
            let s = (n as f64 * start_frac) as usize;
            let window: std::collections::HashSet<_> = p.assignments[s..s + banks as usize].iter().map(|x| x.0).collect();
            prop_assert_eq!(window.len(), banks as usize);
        }
    }
}
