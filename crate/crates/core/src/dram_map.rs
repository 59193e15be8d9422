//! DRAM geometry, linear-to-physical address policies and per-layer regions.
//!
//! Addresses are handled in *rank words*: one column of every chip of a
//! rank, accessed in lock-step. A linear rank-word index is decoded into
//! `(channel, rank, bank, row, column)` by one of two policies:
//!
//! * [`MappingPolicy::Romanet`] fills the columns of a row, then the same
//!   row of the next bank, then the next row, then ranks and channels.
//! * [`MappingPolicy::Baseline`] fills the columns of a row, then the next
//!   row of the same bank, switching banks only when a bank is full.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::access_model::{block_stats, Mode, TileId};
use crate::error::{Error, Result};
use crate::net_model::DataType;
use crate::tiling::TilingPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DramGeometry {
    pub channels: u32,
    pub ranks_per_channel: u32,
    pub chips_per_rank: u32,
    pub banks_per_chip: u32,
    pub rows_per_bank: u32,
    pub columns_per_row: u32,
    /// Data width of one chip, in bits.
    pub word_bits: u32,
    pub burst_length: u32,
}

impl Default for DramGeometry {
    /// DDR3-1600 2Gb x8, one chip per rank.
    fn default() -> Self {
        DramGeometry {
            channels: 1,
            ranks_per_channel: 1,
            chips_per_rank: 1,
            banks_per_chip: 8,
            rows_per_bank: 32768,
            columns_per_row: 1024,
            word_bits: 8,
            burst_length: 8,
        }
    }
}

impl DramGeometry {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.channels,
            self.ranks_per_channel,
            self.chips_per_rank,
            self.banks_per_chip,
            self.rows_per_bank,
            self.columns_per_row,
            self.word_bits,
        ];
        if dims.contains(&0) {
            return Err(Error::InvalidConfig("DRAM geometry counts must be >= 1".into()));
        }
        if ![1, 4, 8].contains(&self.burst_length) {
            return Err(Error::InvalidConfig(format!(
                "burst length {} not in {{1, 4, 8}}",
                self.burst_length
            )));
        }
        if !self.columns_per_row.is_multiple_of(self.burst_length) {
            return Err(Error::InvalidConfig(
                "columns per row must be a multiple of the burst length".into(),
            ));
        }
        Ok(())
    }

    /// Capacity in rank words.
    pub fn capacity_words(&self) -> u64 {
        u64::from(self.channels)
            * u64::from(self.ranks_per_channel)
            * u64::from(self.banks_per_chip)
            * u64::from(self.rows_per_bank)
            * u64::from(self.columns_per_row)
    }

    /// Bits carried by one rank word.
    pub fn rank_word_bits(&self) -> u64 {
        u64::from(self.chips_per_rank) * u64::from(self.word_bits)
    }

    /// Rank words occupied by `elems` elements of `bits` each.
    pub fn words_for(&self, elems: u64, bits: u32) -> u64 {
        (elems * u64::from(bits)).div_ceil(self.rank_word_bits())
    }

    pub fn align_burst(&self, words: u64) -> u64 {
        words.next_multiple_of(u64::from(self.burst_length))
    }

    pub fn bursts_for(&self, words: u64) -> u64 {
        words.div_ceil(u64::from(self.burst_length))
    }
}

/// Physical coordinates of one rank word. `chip` names the first chip of the
/// lock-step group, so it is always 0 for rank-word traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhysicalAddress {
    pub channel: u32,
    pub rank: u32,
    pub chip: u32,
    pub bank: u32,
    pub row: u32,
    pub column: u32,
}

impl PhysicalAddress {
    pub fn check(&self, geom: &DramGeometry) -> Result<()> {
        let ok = self.channel < geom.channels
            && self.rank < geom.ranks_per_channel
            && self.chip < geom.chips_per_rank
            && self.bank < geom.banks_per_chip
            && self.row < geom.rows_per_bank
            && self.column < geom.columns_per_row;
        if ok {
            Ok(())
        } else {
            Err(Error::AddressOutOfRange(format!("{self:?}")))
        }
    }

    /// Global bank index (channel, rank and bank flattened).
    pub fn bank_slot(&self, geom: &DramGeometry) -> usize {
        ((self.channel * geom.ranks_per_channel + self.rank) * geom.banks_per_chip + self.bank) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingPolicy {
    Romanet,
    Baseline,
}

impl From<Mode> for MappingPolicy {
    fn from(mode: Mode) -> Self {
        match mode {
            Mode::Romanet => MappingPolicy::Romanet,
            Mode::Baseline => MappingPolicy::Baseline,
        }
    }
}

impl MappingPolicy {
    pub fn physical(self, linear: u64, geom: &DramGeometry) -> Result<PhysicalAddress> {
        let mut t = linear;
        let mut digit = |radix: u32| {
            let d = (t % u64::from(radix)) as u32;
            t /= u64::from(radix);
            d
        };
        let column = digit(geom.columns_per_row);
        let (bank, row) = match self {
            MappingPolicy::Romanet => {
                let bank = digit(geom.banks_per_chip);
                (bank, digit(geom.rows_per_bank))
            }
            MappingPolicy::Baseline => {
                let row = digit(geom.rows_per_bank);
                (digit(geom.banks_per_chip), row)
            }
        };
        let rank = digit(geom.ranks_per_channel);
        let channel = digit(geom.channels);
        if t != 0 {
            return Err(Error::AddressOutOfRange(format!(
                "linear word {linear} beyond capacity {}",
                geom.capacity_words()
            )));
        }
        Ok(PhysicalAddress {
            channel,
            rank,
            chip: 0,
            bank,
            row,
            column,
        })
    }
}

/// A contiguous range of linear rank words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub start: u64,
    pub size: u64,
}

impl Region {
    pub fn end(&self) -> u64 {
        self.start + self.size
    }
}

/// Regions and block placement of one layer. Blocks are placed lazily, in
/// first-fetch order, each starting on a burst boundary.
#[derive(Debug, Clone)]
pub struct LayerAllocator {
    pub layer: usize,
    pub policy: MappingPolicy,
    pub geom: DramGeometry,
    regions: [Region; 3],
    cursors: [u64; 3],
    blocks: HashMap<TileId, u64>,
}

fn slot(data: DataType) -> usize {
    match data {
        DataType::Ifm => 0,
        DataType::Wgh => 1,
        DataType::Ofm => 2,
    }
}

impl LayerAllocator {
    pub fn new(layer: usize, policy: MappingPolicy, geom: DramGeometry, regions: [Region; 3]) -> Self {
        LayerAllocator {
            layer,
            policy,
            geom,
            regions,
            cursors: regions.map(|r| r.start),
            blocks: HashMap::new(),
        }
    }

    /// A single layer whose three regions each span `size` words.
    pub fn with_uniform_regions(policy: MappingPolicy, geom: DramGeometry, size: u64) -> Self {
        let regions = [0, 1, 2].map(|k| Region { start: k * size, size });
        Self::new(0, policy, geom, regions)
    }

    pub fn region(&self, data: DataType) -> Region {
        self.regions[slot(data)]
    }

    /// Reserve `words` (rounded up to whole bursts) in the region of `data`.
    pub fn reserve(&mut self, data: DataType, words: u64) -> Result<u64> {
        let s = slot(data);
        let need = self.geom.align_burst(words);
        let remaining = self.regions[s].end() - self.cursors[s];
        if need > remaining {
            return Err(Error::RegionOverflow {
                layer: self.layer,
                data,
                requested: need,
                remaining,
            });
        }
        let base = self.cursors[s];
        self.cursors[s] += need;
        Ok(base)
    }

    /// Base address of a tile's block, placing it on first use.
    pub fn block_base(&mut self, tile: TileId, words: u64) -> Result<u64> {
        if let Some(&base) = self.blocks.get(&tile) {
            return Ok(base);
        }
        let base = self.reserve(tile.data, words)?;
        self.blocks.insert(tile, base);
        Ok(base)
    }

    pub fn physical(&self, linear: u64) -> Result<PhysicalAddress> {
        self.policy.physical(linear, &self.geom)
    }
}

fn map_tile(policy: MappingPolicy, n_words: u64, alloc: &mut LayerAllocator, data: DataType) -> Result<Vec<PhysicalAddress>> {
    let base = alloc.reserve(data, n_words)?;
    (base..base + n_words).map(|w| policy.physical(w, &alloc.geom)).collect()
}

/// Place a tile of `n_words` rank words with the row-first, banks-before-rows order.
pub fn map_tile_romanet(n_words: u64, alloc: &mut LayerAllocator, data: DataType) -> Result<Vec<PhysicalAddress>> {
    map_tile(MappingPolicy::Romanet, n_words, alloc, data)
}

/// Place a tile of `n_words` rank words continuously within one bank.
pub fn map_tile_baseline(n_words: u64, alloc: &mut LayerAllocator, data: DataType) -> Result<Vec<PhysicalAddress>> {
    map_tile(MappingPolicy::Baseline, n_words, alloc, data)
}

/// Per-layer regions for a whole network.
#[derive(Debug, Clone)]
pub struct RegionAllocator {
    pub policy: MappingPolicy,
    pub geom: DramGeometry,
    layers: Vec<LayerAllocator>,
}

impl RegionAllocator {
    pub fn layer(&self, l: usize) -> &LayerAllocator {
        &self.layers[l]
    }

    pub fn layer_mut(&mut self, l: usize) -> &mut LayerAllocator {
        &mut self.layers[l]
    }

    pub fn layers(&self) -> &[LayerAllocator] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<LayerAllocator> {
        self.layers
    }
}

/// Words a layer's blocks of `data` occupy once burst-aligned.
pub fn region_words(plan: &TilingPlan, data: DataType, mode: Mode, geom: &DramGeometry) -> u64 {
    block_stats(plan, data, mode, geom).aligned_words
}

/// Lay out the ifm, wgh and ofm regions of every layer.
///
/// Regions of a layer are row-aligned and disjoint. Each layer starts at
/// address 0 unless `alias_handoff` is set, in which case layer `l`'s ifmap
/// region starts where layer `l - 1`'s ofmap region started.
pub fn allocate_regions(plans: &[TilingPlan], mode: Mode, geom: &DramGeometry, alias_handoff: bool) -> Result<RegionAllocator> {
    geom.validate()?;
    let row = u64::from(geom.columns_per_row);
    let capacity = geom.capacity_words();
    let mut layers = Vec::with_capacity(plans.len());
    let mut prev_ofm_base = 0;
    for (l, plan) in plans.iter().enumerate() {
        let mut cursor = if alias_handoff { prev_ofm_base } else { 0 };
        let mut regions = [Region { start: 0, size: 0 }; 3];
        for data in DataType::ALL {
            let size = region_words(plan, data, mode, geom).next_multiple_of(row);
            regions[slot(data)] = Region { start: cursor, size };
            cursor += size;
        }
        if cursor > capacity {
            return Err(Error::CapacityExceeded {
                layer: l,
                needed: cursor,
                capacity,
            });
        }
        prev_ofm_base = regions[slot(DataType::Ofm)].start;
        layers.push(LayerAllocator::new(l, mode.into(), *geom, regions));
    }
    Ok(RegionAllocator {
        policy: mode.into(),
        geom: *geom,
        layers,
    })
}

/// Write `word_index,channel,rank,chip,bank,row,column` rows.
pub fn write_address_dump<W: Write>(out: W, addrs: &[PhysicalAddress]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["word_index", "channel", "rank", "chip", "bank", "row", "column"])?;
    for (k, a) in addrs.iter().enumerate() {
        w.write_record([
            k.to_string(),
            a.channel.to_string(),
            a.rank.to_string(),
            a.chip.to_string(),
            a.bank.to_string(),
            a.row.to_string(),
            a.column.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fresh(policy: MappingPolicy) -> LayerAllocator {
        LayerAllocator::with_uniform_regions(policy, DramGeometry::default(), 1 << 24)
    }

    fn at(bank: u32, row: u32, column: u32) -> PhysicalAddress {
        PhysicalAddress {
            channel: 0,
            rank: 0,
            chip: 0,
            bank,
            row,
            column,
        }
    }

    #[test]
    fn romanet_moves_to_next_bank_before_next_row() {
        let a = map_tile_romanet(2048, &mut fresh(MappingPolicy::Romanet), DataType::Ifm).unwrap();
        assert_eq!(a[0], at(0, 0, 0));
        assert_eq!(a[1023], at(0, 0, 1023));
        assert_eq!(a[1024], at(1, 0, 0));
        assert_eq!(a[2047], at(1, 0, 1023));

        let a = map_tile_romanet(100, &mut fresh(MappingPolicy::Romanet), DataType::Ifm).unwrap();
        assert!(a.iter().enumerate().all(|(k, x)| *x == at(0, 0, k as u32)));

        let a = map_tile_romanet(9 * 1024, &mut fresh(MappingPolicy::Romanet), DataType::Ifm).unwrap();
        for b in 0..8 {
            assert_eq!(a[b * 1024], at(b as u32, 0, 0));
        }
        assert_eq!(a[8 * 1024], at(0, 1, 0));
    }

    #[test]
    fn baseline_stays_in_one_bank() {
        let a = map_tile_baseline(2048, &mut fresh(MappingPolicy::Baseline), DataType::Ifm).unwrap();
        assert_eq!(a[1023], at(0, 0, 1023));
        assert_eq!(a[1024], at(0, 1, 0));

        let r = map_tile_romanet(100, &mut fresh(MappingPolicy::Romanet), DataType::Ifm).unwrap();
        let b = map_tile_baseline(100, &mut fresh(MappingPolicy::Baseline), DataType::Ifm).unwrap();
        assert_eq!(r, b);

        let mut alloc = fresh(MappingPolicy::Baseline);
        let t1 = map_tile_baseline(1024, &mut alloc, DataType::Wgh).unwrap();
        let t2 = map_tile_baseline(1024, &mut alloc, DataType::Wgh).unwrap();
        assert_eq!((t1[0].bank, t1[0].row), (t2[0].bank, t2[0].row - 1));
    }

    #[test]
    fn region_overflow_is_reported() {
        let mut alloc = LayerAllocator::with_uniform_regions(MappingPolicy::Romanet, DramGeometry::default(), 64);
        assert!(map_tile_romanet(64, &mut alloc, DataType::Ofm).is_ok());
        assert!(matches!(
            map_tile_romanet(1, &mut alloc, DataType::Ofm),
            Err(Error::RegionOverflow { .. })
        ));
    }

    #[test]
    fn capacity_overflow_is_reported() {
        use crate::net_model::LayerShape;
        use crate::tiling::{build_plan, TilingFactors};
        let l = LayerShape::conv("c", 64, 64, 64, 3, 3, 64, 1).unwrap();
        let plan = build_plan(&l, TilingFactors::new(&l, 64, 64, 64, 64)).unwrap();
        let tiny = DramGeometry {
            rows_per_bank: 4,
            ..DramGeometry::default()
        };
        assert!(matches!(
            allocate_regions(std::slice::from_ref(&plan), Mode::Romanet, &tiny, false),
            Err(Error::CapacityExceeded { .. })
        ));
        let alloc = allocate_regions(&[plan.clone(), plan], Mode::Romanet, &DramGeometry::default(), false).unwrap();
        let l0 = alloc.layer(0);
        let spans: Vec<Region> = DataType::ALL.iter().map(|&d| l0.region(d)).collect();
        assert!(spans[0].end() <= spans[1].start && spans[1].end() <= spans[2].start);
    }

    #[test]
    fn out_of_range_linear_word() {
        let g = DramGeometry::default();
        assert!(MappingPolicy::Romanet.physical(g.capacity_words(), &g).is_err());
        assert!(MappingPolicy::Baseline.physical(g.capacity_words() - 1, &g).is_ok());
    }

    #[test]
    fn address_dump_columns() {
        let a = map_tile_romanet(3, &mut fresh(MappingPolicy::Romanet), DataType::Ifm).unwrap();
        let mut out = Vec::new();
        write_address_dump(&mut out, &a).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next(), Some("word_index,channel,rank,chip,bank,row,column"));
        assert_eq!(text.lines().nth(3), Some("2,0,0,0,0,0,2"));
    }

    fn small_geom() -> impl Strategy<Value = DramGeometry> {
        (1u32..3, 1u32..3, 1u32..5, 1u32..6, prop::sample::select(vec![8u32, 16, 32])).prop_map(|(channels, ranks, banks, rows, cols)| {
            DramGeometry {
                channels,
                ranks_per_channel: ranks,
                chips_per_rank: 1,
                banks_per_chip: banks,
                rows_per_bank: rows,
                columns_per_row: cols,
                word_bits: 8,
                burst_length: 8,
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 128, rng_seed: proptest::test_runner::RngSeed::Fixed(11), ..ProptestConfig::default() })]

        #[test]
        fn mapping_is_injective_and_bounded(geom in small_geom(), romanet in any::<bool>()) {
            let policy = if romanet { MappingPolicy::Romanet } else { MappingPolicy::Baseline };
            let mut seen = std::collections::HashSet::new();
            for w in 0..geom.capacity_words() {
                let a = policy.physical(w, &geom).unwrap();
                prop_assert!(a.check(&geom).is_ok());
                prop_assert!(seen.insert(a));
            }
        }

        #[test]
        fn romanet_tile_fills_all_banks_before_reusing_one(words in 1u64..20_000) {
            let a = map_tile_romanet(words, &mut fresh(MappingPolicy::Romanet), DataType::Ifm).unwrap();
            let g = DramGeometry::default();
            let stripe = (g.banks_per_chip * g.columns_per_row) as usize;
            let mut open: HashMap<u32, u32> = HashMap::new();
            for (k, x) in a.iter().enumerate() {
                if let Some(&row) = open.get(&x.bank) {
                    if row != x.row {
                        // a second row of this bank only once a whole row stripe is done
                        prop_assert_eq!(k % stripe, x.bank as usize * g.columns_per_row as usize);
                    }
                }
                open.insert(x.bank, x.row);
            }
        }

        #[test]
        fn baseline_tile_larger_than_row_hits_two_rows(extra in 1u64..5000) {
            let a = map_tile_baseline(1024 + extra, &mut fresh(MappingPolicy::Baseline), DataType::Ifm).unwrap();
            let rows: std::collections::HashSet<_> = a.iter().filter(|x| x.bank == 0).map(|x| x.row).collect();
            prop_assert!(rows.len() >= 2);
        }
    }
}
