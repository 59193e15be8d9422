//! Analytical DRAM access counts for a tiling plan under a loop schedule.
//!
//! A tile stays in its buffer while only loops that do not index it
//! advance, provided those loops are inner to every indexing loop that
//! actually iterates. Counting runs of identical tile ids over the loop nest
//! gives the fetch multiplicity of each data type; for ofmaps the same count
//! is the number of accumulation episodes (one final write plus one spill
//! write and one psum read per interruption).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::dram_map::DramGeometry;
use crate::error::{Error, Result};
use crate::net_model::{DataType, ReusePriorityOrder};
use crate::tiling::{AxisGrid, TilingPlan};
use crate::trace_gen::BurstMode;

/// Which traffic model is in force.
///
/// `Romanet` fetches only the non-halo part of each ifmap tile and maps
/// data with the multi-bank policy. `Baseline` re-fetches whole windows and
/// maps data continuously within a bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Romanet,
    Baseline,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Romanet, Mode::Baseline];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Romanet => "romanet",
            Mode::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tile-index loops: ifmap rows, ifmap columns, filter sets, depth tiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loop {
    H,
    W,
    J,
    I,
}

impl Loop {
    pub const ALL: [Loop; 4] = [Loop::H, Loop::W, Loop::J, Loop::I];

    pub fn symbol(self) -> char {
        match self {
            Loop::H => 'h',
            Loop::W => 'w',
            Loop::J => 'j',
            Loop::I => 'i',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        Loop::ALL.into_iter().find(|l| l.symbol() == c)
    }
}

/// Where a candidate schedule came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleOrigin {
    Priority(ReusePriorityOrder),
    Exhaustive,
    Baseline,
}

impl fmt::Display for ScheduleOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleOrigin::Priority(o) => write!(f, "{o}"),
            ScheduleOrigin::Exhaustive => f.write_str("exhaustive"),
            ScheduleOrigin::Baseline => f.write_str("baseline"),
        }
    }
}

/// A loop nest, outermost first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Schedule {
    pub nest: [Loop; 4],
    pub origin: ScheduleOrigin,
}

impl Schedule {
    pub fn new(nest: [Loop; 4], origin: ScheduleOrigin) -> Result<Self> {
        let mut sorted = nest;
        sorted.sort();
        if sorted != Loop::ALL {
            return Err(Error::InvalidConfig(format!(
                "loop nest must use h, w, j, i exactly once: {nest:?}"
            )));
        }
        Ok(Schedule { nest, origin })
    }

    /// Parse `"h,w,j,i"` (commas optional).
    pub fn parse(text: &str, origin: ScheduleOrigin) -> Result<Self> {
        let loops: Vec<Loop> = text
            .chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| Loop::from_symbol(c.to_ascii_lowercase()))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::InvalidConfig(format!("bad loop nest `{text}`")))?;
        let nest: [Loop; 4] = loops
            .try_into()
            .map_err(|_| Error::InvalidConfig(format!("loop nest `{text}` needs four loops")))?;
        Schedule::new(nest, origin)
    }

    pub fn nest_string(&self) -> String {
        self.nest.iter().map(|l| l.symbol().to_string()).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.nest_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopTrips {
    pub h: u64,
    pub w: u64,
    pub j: u64,
    pub i: u64,
}

impl LoopTrips {
    pub fn of(plan: &TilingPlan) -> Self {
        LoopTrips {
            h: plan.ifm_h.len() as u64,
            w: plan.ifm_w.len() as u64,
            j: plan.filters.len() as u64,
            i: plan.depth.len() as u64,
        }
    }

    pub fn get(&self, l: Loop) -> u64 {
        match l {
            Loop::H => self.h,
            Loop::W => self.w,
            Loop::J => self.j,
            Loop::I => self.i,
        }
    }
}

/// Loops whose index selects a different tile of `data`.
pub fn indexing_loops(data: DataType, depthwise: bool) -> &'static [Loop] {
    match (data, depthwise) {
        (DataType::Ifm, false) => &[Loop::H, Loop::W, Loop::I],
        (DataType::Ifm, true) => &[Loop::H, Loop::W, Loop::J],
        (DataType::Wgh, _) => &[Loop::J, Loop::I],
        (DataType::Ofm, _) => &[Loop::H, Loop::W, Loop::J],
    }
}

/// How many times each tile of `data` is brought on chip.
///
/// Product of the trips of non-indexing loops that sit outside the innermost
/// indexing loop with more than one trip.
pub fn fetch_multiplicity(data: DataType, nest: &[Loop; 4], trips: &LoopTrips, depthwise: bool) -> u64 {
    let idx = indexing_loops(data, depthwise);
    match nest.iter().rposition(|l| idx.contains(l) && trips.get(*l) > 1) {
        None => 1,
        Some(d) => nest[..d].iter().filter(|l| !idx.contains(l)).map(|&l| trips.get(l)).product(),
    }
}

/// Rank words needed to move a tile of `dims` elements at `bits` per element.
pub fn accesses_per_tile(dims: &[u32], bits: u32, geom: &DramGeometry) -> u64 {
    let elems = dims.iter().map(|&d| u64::from(d)).product();
    geom.words_for(elems, bits)
}

/// Psum reads and ofm writes, in words, for `tile_words` total ofm words.
pub fn ofm_traffic(nest: &[Loop; 4], trips: &LoopTrips, tile_words: u64) -> (u64, u64) {
    let episodes = fetch_multiplicity(DataType::Ofm, nest, trips, false);
    ((episodes - 1) * tile_words, episodes * tile_words)
}

/// Identity of one tile: ifm `[h, w, depth]`, wgh `[j, i, 0]`, ofm `[h, w, j]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TileId {
    pub data: DataType,
    pub idx: [u32; 3],
}

impl fmt::Display for TileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}.{}.{}", self.data, self.idx[0], self.idx[1], self.idx[2])
    }
}

/// Per-axis extents of the blocks moved for each data type.
#[derive(Debug, Clone)]
pub struct BlockShapes {
    ifm: [Vec<u32>; 3],
    wgh: [Vec<u32>; 3],
    ofm: [Vec<u32>; 3],
    bits: [u32; 3],
}

fn spatial_extents(grid: &AxisGrid, mode: Mode) -> Vec<u32> {
    match mode {
        Mode::Romanet => grid.fetch_extents(),
        Mode::Baseline => grid.window_lens(),
    }
}

impl BlockShapes {
    pub fn new(plan: &TilingPlan, mode: Mode) -> Self {
        let l = &plan.layer;
        // the filter window folds into the depth axis of a weight block
        let pq = l.p * l.q;
        let wgh_depth = plan.depth.window_lens().iter().map(|d| d * pq).collect();
        BlockShapes {
            ifm: [
                spatial_extents(&plan.ifm_h, mode),
                spatial_extents(&plan.ifm_w, mode),
                plan.ifm_depth().window_lens(),
            ],
            wgh: [plan.filters.window_lens(), wgh_depth, vec![1]],
            ofm: [plan.ofm_m.window_lens(), plan.ofm_n.window_lens(), plan.filters.window_lens()],
            bits: [l.bits.ifm, l.bits.wgh, l.bits.ofm],
        }
    }

    fn axes(&self, data: DataType) -> &[Vec<u32>; 3] {
        match data {
            DataType::Ifm => &self.ifm,
            DataType::Wgh => &self.wgh,
            DataType::Ofm => &self.ofm,
        }
    }

    fn bits(&self, data: DataType) -> u32 {
        self.bits[data as usize]
    }

    /// Number of tiles along each axis.
    pub fn counts(&self, data: DataType) -> [u32; 3] {
        self.axes(data).each_ref().map(|a| a.len() as u32)
    }

    pub fn elems(&self, tile: &TileId) -> u64 {
        let axes = self.axes(tile.data);
        (0..3).map(|k| u64::from(axes[k][tile.idx[k] as usize])).product()
    }

    pub fn words(&self, tile: &TileId, geom: &DramGeometry) -> u64 {
        geom.words_for(self.elems(tile), self.bits(tile.data))
    }

    /// Every tile of `data` in index order.
    pub fn tiles(&self, data: DataType) -> impl Iterator<Item = TileId> {
        let [a, b, c] = self.counts(data);
        (0..a).flat_map(move |x| (0..b).flat_map(move |y| (0..c).map(move |z| TileId { data, idx: [x, y, z] })))
    }
}

/// Sizes of all blocks of one data type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BlockStats {
    pub blocks: u64,
    pub words: u64,
    pub bursts: u64,
    pub aligned_words: u64,
}

fn histogram(v: &[u32]) -> Vec<(u64, u64)> {
    let mut h: BTreeMap<u32, u64> = BTreeMap::new();
    for &x in v {
        *h.entry(x).or_default() += 1;
    }
    h.into_iter().map(|(k, n)| (u64::from(k), n)).collect()
}

fn shape_stats(shapes: &BlockShapes, data: DataType, geom: &DramGeometry) -> BlockStats {
    let [a, b, c] = shapes.axes(data).each_ref().map(|v| histogram(v));
    let bits = shapes.bits(data);
    let mut s = BlockStats::default();
    for &(x, nx) in &a {
        for &(y, ny) in &b {
            for &(z, nz) in &c {
                let n = nx * ny * nz;
                let words = geom.words_for(x * y * z, bits);
                s.blocks += n;
                s.words += n * words;
                s.bursts += n * geom.bursts_for(words);
                s.aligned_words += n * geom.align_burst(words);
            }
        }
    }
    s
}

pub fn block_stats(plan: &TilingPlan, data: DataType, mode: Mode, geom: &DramGeometry) -> BlockStats {
    shape_stats(&BlockShapes::new(plan, mode), data, geom)
}

/// Traffic attributed to one tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileAccess {
    pub tile: TileId,
    /// Words in one transfer of the tile.
    pub words: u64,
    pub reads: u64,
    pub writes: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessCounts {
    pub rd_ifm: u64,
    pub rd_wgh: u64,
    pub rd_ofm: u64,
    pub wr_ofm: u64,
    pub requests_burst: u64,
    pub requests_nonburst: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_tile: Vec<TileAccess>,
}

impl AccessCounts {
    pub fn total(&self) -> u64 {
        self.rd_ifm + self.rd_wgh + self.rd_ofm + self.wr_ofm
    }

    pub fn words(&self, data: DataType) -> u64 {
        match data {
            DataType::Ifm => self.rd_ifm,
            DataType::Wgh => self.rd_wgh,
            DataType::Ofm => self.rd_ofm + self.wr_ofm,
        }
    }

    pub fn requests(&self, burst: BurstMode) -> u64 {
        match burst {
            BurstMode::Burst => self.requests_burst,
            BurstMode::NonBurst => self.requests_nonburst,
        }
    }

    /// The counts a trace generated in `burst` mode would show: the request
    /// count of the other mode is zeroed.
    pub fn for_burst_mode(&self, burst: BurstMode) -> AccessCounts {
        let mut c = self.clone();
        match burst {
            BurstMode::Burst => c.requests_nonburst = 0,
            BurstMode::NonBurst => c.requests_burst = 0,
        }
        c
    }

    /// Same totals without the per-tile breakdown.
    pub fn summary(&self) -> AccessCounts {
        AccessCounts {
            per_tile: Vec::new(),
            ..self.clone()
        }
    }
}

impl Add for &AccessCounts {
    type Output = AccessCounts;

    fn add(self, o: &AccessCounts) -> AccessCounts {
        AccessCounts {
            rd_ifm: self.rd_ifm + o.rd_ifm,
            rd_wgh: self.rd_wgh + o.rd_wgh,
            rd_ofm: self.rd_ofm + o.rd_ofm,
            wr_ofm: self.wr_ofm + o.wr_ofm,
            requests_burst: self.requests_burst + o.requests_burst,
            requests_nonburst: self.requests_nonburst + o.requests_nonburst,
            per_tile: Vec::new(),
        }
    }
}

fn multiplicities(plan: &TilingPlan, schedule: &Schedule) -> [u64; 3] {
    let trips = LoopTrips::of(plan);
    let dw = plan.layer.is_depthwise();
    DataType::ALL.map(|d| fetch_multiplicity(d, &schedule.nest, &trips, dw))
}

fn totals(shapes: &BlockShapes, mult: [u64; 3], geom: &DramGeometry) -> AccessCounts {
    let [mi, mw, e] = mult;
    let si = shape_stats(shapes, DataType::Ifm, geom);
    let sw = shape_stats(shapes, DataType::Wgh, geom);
    let so = shape_stats(shapes, DataType::Ofm, geom);
    let ofm_transfers = 2 * e - 1;
    AccessCounts {
        rd_ifm: mi * si.words,
        rd_wgh: mw * sw.words,
        rd_ofm: (e - 1) * so.words,
        wr_ofm: e * so.words,
        requests_burst: mi * si.bursts + mw * sw.bursts + ofm_transfers * so.bursts,
        requests_nonburst: mi * si.words + mw * sw.words + ofm_transfers * so.words,
        per_tile: Vec::new(),
    }
}

/// Totals only; what the design-space search evaluates.
pub fn layer_cost(plan: &TilingPlan, schedule: &Schedule, geom: &DramGeometry, mode: Mode) -> AccessCounts {
    totals(&BlockShapes::new(plan, mode), multiplicities(plan, schedule), geom)
}

/// Totals plus the per-tile breakdown.
pub fn layer_accesses(plan: &TilingPlan, schedule: &Schedule, geom: &DramGeometry, mode: Mode) -> AccessCounts {
    let shapes = BlockShapes::new(plan, mode);
    let mult = multiplicities(plan, schedule);
    let mut counts = totals(&shapes, mult, geom);
    for (k, data) in DataType::ALL.into_iter().enumerate() {
        for tile in shapes.tiles(data) {
            let words = shapes.words(&tile, geom);
            let (reads, writes) = match data {
                DataType::Ofm => (mult[k] - 1, mult[k]),
                _ => (mult[k], 0),
            };
            counts.per_tile.push(TileAccess {
                tile,
                words,
                reads,
                writes,
            });
        }
    }
    counts
}

/// Network total: the sum over layers.
pub fn network_accesses<'a>(layers: impl IntoIterator<Item = &'a AccessCounts>) -> AccessCounts {
    layers.into_iter().fold(AccessCounts::default(), |acc, c| &acc + c)
}
