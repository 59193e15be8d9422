//! Tile grids for ifmaps, weights and ofmaps.
//!
//! Spatial ifmap axes are cut into overlapping windows. Adjacent windows
//! share a halo of `max(P - str, 0)` elements so that the ofmap tiles they
//! produce abut exactly. Every window after the first only needs its
//! non-halo part fetched; those fetch extents partition the axis:
//!
//! ```text
//! last = full - base - n_int * (base - halo)
//! ```
//!
//! Depth and filter-set axes are plain partitions (no halo).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net_model::{output_dims, DataType, LayerShape};

/// Tiling factors of one layer. `tp`/`tq` always equal the filter size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TilingFactors {
    pub th: u32,
    pub tw: u32,
    pub ti: u32,
    pub tj: u32,
    pub tp: u32,
    pub tq: u32,
}

impl TilingFactors {
    pub fn new(layer: &LayerShape, th: u32, tw: u32, ti: u32, tj: u32) -> Self {
        TilingFactors {
            th,
            tw,
            ti,
            tj,
            tp: layer.p,
            tq: layer.q,
        }
    }

    pub fn validate(&self, layer: &LayerShape) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTiling(format!("{}: {msg}", layer.name)));
        if self.tp != layer.p || self.tq != layer.q {
            return bad(format!("Tp/Tq must equal P/Q ({}x{})", layer.p, layer.q));
        }
        if !(layer.p..=layer.h).contains(&self.th) {
            return bad(format!("Th={} outside [{}, {}]", self.th, layer.p, layer.h));
        }
        if !(layer.q..=layer.w).contains(&self.tw) {
            return bad(format!("Tw={} outside [{}, {}]", self.tw, layer.q, layer.w));
        }
        if !(1..=layer.filter_depth()).contains(&self.ti) {
            return bad(format!("Ti={} outside [1, {}]", self.ti, layer.filter_depth()));
        }
        if !(1..=layer.j).contains(&self.tj) {
            return bad(format!("Tj={} outside [1, {}]", self.tj, layer.j));
        }
        Ok(())
    }
}

/// A one-dimensional tile grid: ordered windows `(start, len)` over `[0, full)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisGrid {
    pub full: u32,
    pub base: u32,
    pub halo: u32,
    windows: Vec<(u32, u32)>,
}

impl AxisGrid {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn windows(&self) -> &[(u32, u32)] {
        &self.windows
    }

    /// Full window length of tile `k` (what the buffer holds).
    pub fn window_len(&self, k: usize) -> u32 {
        self.windows[k].1
    }

    pub fn window_lens(&self) -> Vec<u32> {
        self.windows.iter().map(|w| w.1).collect()
    }

    pub fn max_window(&self) -> u32 {
        self.windows.iter().map(|w| w.1).max().unwrap_or(0)
    }

    /// Elements of tile `k` not shared with tile `k - 1`.
    pub fn fetch_extent(&self, k: usize) -> u32 {
        if k == 0 {
            return self.windows[0].1;
        }
        let (prev_start, prev_len) = self.windows[k - 1];
        let (start, len) = self.windows[k];
        let shared = (prev_start + prev_len).saturating_sub(start).min(len);
        len - shared
    }

    pub fn fetch_extents(&self) -> Vec<u32> {
        (0..self.len()).map(|k| self.fetch_extent(k)).collect()
    }

    /// Distance between the starts of consecutive windows.
    pub fn advance(&self) -> u32 {
        self.base - self.halo
    }

    /// Number of intermediate tiles (neither first nor the remainder tile).
    pub fn n_intermediate(&self) -> usize {
        let has_remainder = self.last_remainder().is_some();
        self.len().saturating_sub(1 + usize::from(has_remainder))
    }

    /// The fetch extent of the last tile when it differs from a full advance.
    pub fn last_remainder(&self) -> Option<u32> {
        if self.len() < 2 {
            return None;
        }
        let last = self.fetch_extent(self.len() - 1);
        (last != self.advance() || self.window_len(self.len() - 1) != self.base).then_some(last)
    }

    /// Merge a trailing window shorter than `min_len` into its predecessor.
    fn merge_short_last(&mut self, min_len: u32) {
        if self.windows.len() >= 2 && self.windows.last().is_some_and(|w| w.1 < min_len) {
            self.windows.pop();
            let prev = self.windows.last_mut().expect("at least one window left");
            prev.1 = self.full - prev.0;
        }
    }
}

/// Overlapping windows along a spatial ifmap axis.
pub fn ifm_axis_grid(full: u32, base: u32, halo: u32) -> Result<AxisGrid> {
    if base == 0 || base > full {
        return Err(Error::InvalidTiling(format!("tile length {base} must lie in [1, {full}]")));
    }
    if halo >= base {
        return Err(Error::InvalidTiling(format!(
            "halo {halo} must be smaller than the tile length {base}"
        )));
    }
    let advance = base - halo;
    let n_int = (full - base) / advance;
    let remainder = full - base - n_int * advance;
    let mut windows: Vec<(u32, u32)> = (0..=n_int).map(|k| (k * advance, base)).collect();
    if remainder > 0 {
        let start = (n_int + 1) * advance;
        windows.push((start, full - start));
    }
    Ok(AxisGrid { full, base, halo, windows })
}

/// Plain partition of a depth or filter-set axis.
pub fn depth_axis_grid(full: u32, base: u32) -> Result<AxisGrid> {
    if base == 0 || base > full {
        return Err(Error::InvalidTiling(format!("tile depth {base} must lie in [1, {full}]")));
    }
    let mut windows: Vec<(u32, u32)> = (0..full / base).map(|k| (k * base, base)).collect();
    if !full.is_multiple_of(base) {
        windows.push((full - full % base, full % base));
    }
    Ok(AxisGrid {
        full,
        base,
        halo: 0,
        windows,
    })
}

/// Ofmap tile height/width produced by an `th x tw` ifmap window.
pub fn ofm_tile_dims(th: u32, tw: u32, layer: &LayerShape) -> (u32, u32) {
    let s = layer.stride;
    ((th + 1 - layer.p).div_ceil(s), (tw + 1 - layer.q).div_ceil(s))
}

/// Complete tiling of one layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingPlan {
    pub layer: LayerShape,
    pub factors: TilingFactors,
    /// ifmap windows along H and W.
    pub ifm_h: AxisGrid,
    pub ifm_w: AxisGrid,
    /// Per-filter input-depth tiles (shared by ifmaps and weights).
    pub depth: AxisGrid,
    /// Filter-set tiles (weights and ofmap channels).
    pub filters: AxisGrid,
    /// Ofmap row / column tiles.
    pub ofm_m: AxisGrid,
    pub ofm_n: AxisGrid,
}

/// Window length that exactly produces the requested ofmap rows, and the halo.
fn spatial_window(full: u32, t: u32, filter: u32, stride: u32, outputs: u32) -> (u32, u32) {
    let tm = (t + 1 - filter).div_ceil(stride);
    if tm >= outputs {
        return (full, 0);
    }
    let base = if filter >= stride {
        (tm - 1) * stride + filter
    } else {
        tm * stride
    };
    (base.min(full), filter.saturating_sub(stride))
}

fn spatial_grid(full: u32, t: u32, filter: u32, stride: u32, outputs: u32) -> Result<(AxisGrid, AxisGrid)> {
    let (base, halo) = spatial_window(full, t, filter, stride, outputs);
    let mut ifm = ifm_axis_grid(full, base, halo)?;
    ifm.merge_short_last(filter);
    let ofm_lens: Vec<u32> = ifm.windows().iter().map(|&(_, len)| (len + 1 - filter).div_ceil(stride)).collect();
    let tm = ofm_lens[0];
    let mut start = 0;
    let mut windows = Vec::with_capacity(ofm_lens.len());
    for len in ofm_lens {
        windows.push((start, len));
        start += len;
    }
    if start != outputs {
        return Err(Error::InvalidTiling(format!("ofmap tiles cover {start} of {outputs} outputs")));
    }
    let ofm = AxisGrid {
        full: outputs,
        base: tm,
        halo: 0,
        windows,
    };
    Ok((ifm, ofm))
}

pub fn build_plan(layer: &LayerShape, factors: TilingFactors) -> Result<TilingPlan> {
    factors.validate(layer)?;
    let (m, n) = output_dims(layer);
    let (ifm_h, ofm_m) = spatial_grid(layer.h, factors.th, layer.p, layer.stride, m)?;
    let (ifm_w, ofm_n) = spatial_grid(layer.w, factors.tw, layer.q, layer.stride, n)?;
    let depth = depth_axis_grid(layer.filter_depth(), factors.ti)?;
    let filters = depth_axis_grid(layer.j, factors.tj)?;
    Ok(TilingPlan {
        layer: layer.clone(),
        factors,
        ifm_h,
        ifm_w,
        depth,
        filters,
        ofm_m,
        ofm_n,
    })
}

impl TilingPlan {
    /// The grid indexing ifmap channels: depth tiles, or filter sets for depthwise layers.
    pub fn ifm_depth(&self) -> &AxisGrid {
        if self.layer.is_depthwise() {
            &self.filters
        } else {
            &self.depth
        }
    }

    /// Largest tile of each data type, in elements.
    pub fn max_tile_elems(&self, data: DataType) -> u64 {
        let l = &self.layer;
        match data {
            DataType::Ifm => {
                u64::from(self.ifm_h.max_window()) * u64::from(self.ifm_w.max_window()) * u64::from(self.ifm_depth().max_window())
            }
            DataType::Wgh => u64::from(l.p) * u64::from(l.q) * u64::from(self.depth.max_window()) * u64::from(self.filters.max_window()),
            DataType::Ofm => u64::from(self.ofm_m.max_window()) * u64::from(self.ofm_n.max_window()) * u64::from(self.filters.max_window()),
        }
    }
}

/// On-chip bytes needed by the largest tile of each data type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferFootprint {
    pub ifm: u64,
    pub wgh: u64,
    pub ofm: u64,
}

impl BufferFootprint {
    pub fn of(&self, data: DataType) -> u64 {
        match data {
            DataType::Ifm => self.ifm,
            DataType::Wgh => self.wgh,
            DataType::Ofm => self.ofm,
        }
    }
}

pub fn buffer_footprint(plan: &TilingPlan) -> BufferFootprint {
    let bytes = |d: DataType| (plan.max_tile_elems(d) * u64::from(plan.layer.bits.of(d))).div_ceil(8);
    BufferFootprint {
        ifm: bytes(DataType::Ifm),
        wgh: bytes(DataType::Wgh),
        ofm: bytes(DataType::Ofm),
    }
}
