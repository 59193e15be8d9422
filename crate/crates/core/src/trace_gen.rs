//! DRAM request traces: generation from a loop nest, counting, and a text format.
//!
//! The generator walks the schedule outermost to innermost and, at each
//! iteration, emits in order: the write-back of the ofmap tile being left,
//! the ifmap fetch, the weight fetch, and the psum read of the ofmap tile
//! being entered. The resident ofmap tile is written once more at the end.
//!
//! Text format, one request per line:
//!
//! ```text
//! op channel rank chip bank row column burst tag [payload]
//! R 0 0 0 1 0 1016 8 0/ifm/0.1.0
//! W 0 0 0 3 2 8 8 0/ofm/1.1.0 5
//! ```
//!
//! `op` is `R` or `W`, `burst` is the number of words transferred, `tag` is
//! `layer/data/a.b.c`, and the optional `payload` (useful words) is present
//! only when it is smaller than `burst`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::access_model::{AccessCounts, BlockShapes, LoopTrips, Mode, Schedule, TileAccess, TileId};
use crate::dram_map::{LayerAllocator, PhysicalAddress};
use crate::error::{Error, Result};
use crate::net_model::DataType;
use crate::tiling::TilingPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BurstMode {
    Burst,
    NonBurst,
}

impl BurstMode {
    pub const ALL: [BurstMode; 2] = [BurstMode::Burst, BurstMode::NonBurst];

    pub fn as_str(self) -> &'static str {
        match self {
            BurstMode::Burst => "burst",
            BurstMode::NonBurst => "nonburst",
        }
    }
}

impl fmt::Display for BurstMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DramRequest {
    pub op: Op,
    pub addr: PhysicalAddress,
    /// Words transferred on the bus: 1, or the burst length.
    pub burst_words: u32,
    /// Words of tile data in the transfer.
    pub payload_words: u32,
    pub layer: u32,
    pub tile: TileId,
}

/// Consumer of a request stream.
pub trait TraceSink {
    fn push(&mut self, req: &DramRequest) -> Result<()>;
}

impl<S: TraceSink + ?Sized> TraceSink for &mut S {
    fn push(&mut self, req: &DramRequest) -> Result<()> {
        (**self).push(req)
    }
}

impl TraceSink for Vec<DramRequest> {
    fn push(&mut self, req: &DramRequest) -> Result<()> {
        Vec::push(self, *req);
        Ok(())
    }
}

impl<A: TraceSink, B: TraceSink> TraceSink for (A, B) {
    fn push(&mut self, req: &DramRequest) -> Result<()> {
        self.0.push(req)?;
        self.1.push(req)
    }
}

/// A fully materialised trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestTrace {
    pub mode: BurstMode,
    pub requests: Vec<DramRequest>,
}

impl TraceSink for RequestTrace {
    fn push(&mut self, req: &DramRequest) -> Result<()> {
        self.requests.push(*req);
        Ok(())
    }
}

struct Emitter<'a, S: TraceSink> {
    layer: u32,
    burst: BurstMode,
    shapes: &'a BlockShapes,
    alloc: &'a mut LayerAllocator,
    sink: &'a mut S,
}

impl<S: TraceSink> Emitter<'_, S> {
    fn transfer(&mut self, op: Op, tile: TileId) -> Result<()> {
        let geom = self.alloc.geom;
        let words = self.shapes.words(&tile, &geom);
        let base = self.alloc.block_base(tile, words)?;
        let step = match self.burst {
            BurstMode::Burst => u64::from(geom.burst_length),
            BurstMode::NonBurst => 1,
        };
        let mut off = 0;
        while off < words {
            let req = DramRequest {
                op,
                addr: self.alloc.physical(base + off)?,
                burst_words: step as u32,
                payload_words: step.min(words - off) as u32,
                layer: self.layer,
                tile,
            };
            self.sink.push(&req)?;
            off += step;
        }
        Ok(())
    }
}

/// Stream the requests of one layer into `sink`.
pub fn generate_layer_trace<S: TraceSink>(
    plan: &TilingPlan,
    schedule: &Schedule,
    mode: Mode,
    burst: BurstMode,
    alloc: &mut LayerAllocator,
    sink: &mut S,
) -> Result<()> {
    let shapes = BlockShapes::new(plan, mode);
    let trips = LoopTrips::of(plan);
    let dw = plan.layer.is_depthwise();
    let nest = schedule.nest;
    let limits = nest.map(|l| trips.get(l) as u32);
    let mut em = Emitter {
        layer: alloc.layer as u32,
        burst,
        shapes: &shapes,
        alloc,
        sink,
    };

    let mut ifm_res: Option<TileId> = None;
    let mut wgh_res: Option<TileId> = None;
    let mut ofm_res: Option<TileId> = None;
    let mut spilled: HashSet<TileId> = HashSet::new();
    let mut pos = [0u32; 4];
    loop {
        let mut at = [0u32; 4];
        for (k, l) in nest.iter().enumerate() {
            at[*l as usize] = pos[k];
        }
        let [h, w, j, i] = at;
        let ifm = TileId {
            data: DataType::Ifm,
            idx: [h, w, if dw { j } else { i }],
        };
        let wgh = TileId {
            data: DataType::Wgh,
            idx: [j, i, 0],
        };
        let ofm = TileId {
            data: DataType::Ofm,
            idx: [h, w, j],
        };
        let ofm_changed = ofm_res != Some(ofm);
        if ofm_changed {
            if let Some(old) = ofm_res {
                em.transfer(Op::Write, old)?;
                spilled.insert(old);
            }
        }
        if ifm_res != Some(ifm) {
            em.transfer(Op::Read, ifm)?;
            ifm_res = Some(ifm);
        }
        if wgh_res != Some(wgh) {
            em.transfer(Op::Read, wgh)?;
            wgh_res = Some(wgh);
        }
        if ofm_changed {
            if spilled.contains(&ofm) {
                em.transfer(Op::Read, ofm)?;
            }
            ofm_res = Some(ofm);
        }

        // odometer over the nest, innermost loop fastest
        let mut k = 4;
        loop {
            if k == 0 {
                if let Some(last) = ofm_res {
                    em.transfer(Op::Write, last)?;
                }
                return Ok(());
            }
            k -= 1;
            pos[k] += 1;
            if pos[k] < limits[k] {
                break;
            }
            pos[k] = 0;
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct TileTally {
    rd_words: u64,
    wr_words: u64,
    reads: u64,
    writes: u64,
}

/// Tallies words and requests of a request stream.
#[derive(Debug, Clone, Default)]
pub struct TraceCounter {
    counts: AccessCounts,
    tiles: HashMap<(u32, TileId), TileTally>,
    /// The transfer in progress: op, layer, tile and words so far.
    current: Option<(Op, u32, TileId, u64)>,
}

impl TraceSink for TraceCounter {
    fn push(&mut self, r: &DramRequest) -> Result<()> {
        let w = u64::from(r.payload_words);
        let c = &mut self.counts;
        match (r.op, r.tile.data) {
            (Op::Read, DataType::Ifm) => c.rd_ifm += w,
            (Op::Read, DataType::Wgh) => c.rd_wgh += w,
            (Op::Read, DataType::Ofm) => c.rd_ofm += w,
            (Op::Write, _) => c.wr_ofm += w,
        }
        if r.burst_words > 1 {
            c.requests_burst += 1;
        } else {
            c.requests_nonburst += 1;
        }
        match &mut self.current {
            Some((op, layer, tile, words)) if (*op, *layer, *tile) == (r.op, r.layer, r.tile) => *words += w,
            _ => {
                self.flush();
                self.current = Some((r.op, r.layer, r.tile, w));
            }
        }
        Ok(())
    }
}

impl TraceCounter {
    pub fn new() -> Self {
        Self::default()
    }

    fn flush(&mut self) {
        if let Some((op, layer, tile, words)) = self.current.take() {
            let t = self.tiles.entry((layer, tile)).or_default();
            match op {
                Op::Read => {
                    t.rd_words += words;
                    t.reads += 1;
                }
                Op::Write => {
                    t.wr_words += words;
                    t.writes += 1;
                }
            }
        }
    }

    /// Totals, with the per-tile breakdown sorted by (layer, tile).
    pub fn finish(mut self) -> AccessCounts {
        self.flush();
        let mut tiles: Vec<_> = self.tiles.into_iter().collect();
        tiles.sort_by_key(|(k, _)| *k);
        let per_tile = tiles
            .into_iter()
            .map(|((_, tile), t)| {
                let transfers = t.reads + t.writes;
                TileAccess {
                    tile,
                    words: (t.rd_words + t.wr_words) / transfers.max(1),
                    reads: t.reads,
                    writes: t.writes,
                }
            })
            .collect();
        AccessCounts { per_tile, ..self.counts }
    }
}

/// Count a materialised trace. Burst requests are tallied as burst requests,
/// single-word requests as non-burst ones.
pub fn count_trace(trace: &[DramRequest]) -> AccessCounts {
    let mut c = TraceCounter::new();
    for r in trace {
        c.push(r).expect("counting cannot fail");
    }
    c.finish()
}

/// Writes requests in the text format.
pub struct TextTraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TextTraceWriter<W> {
    pub fn new(out: W) -> Self {
        TextTraceWriter { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> TraceSink for TextTraceWriter<W> {
    fn push(&mut self, r: &DramRequest) -> Result<()> {
        let a = &r.addr;
        let op = match r.op {
            Op::Read => 'R',
            Op::Write => 'W',
        };
        write!(
            self.out,
            "{op} {} {} {} {} {} {} {} {}/{}",
            a.channel, a.rank, a.chip, a.bank, a.row, a.column, r.burst_words, r.layer, r.tile
        )?;
        if r.payload_words != r.burst_words {
            write!(self.out, " {}", r.payload_words)?;
        }
        writeln!(self.out)?;
        Ok(())
    }
}

fn parse_tag(tag: &str) -> Option<(u32, TileId)> {
    let mut parts = tag.split('/');
    let layer = parts.next()?.parse().ok()?;
    let data = DataType::parse(parts.next()?)?;
    let idx: Vec<u32> = parts.next()?.split('.').map(|x| x.parse().ok()).collect::<Option<_>>()?;
    if parts.next().is_some() {
        return None;
    }
    Some((
        layer,
        TileId {
            data,
            idx: idx.try_into().ok()?,
        },
    ))
}

pub fn parse_request(line: &str, line_no: usize) -> Result<DramRequest> {
    let bad = |reason: &str| Error::TraceParse {
        line: line_no,
        reason: reason.to_string(),
    };
    let f: Vec<&str> = line.split_whitespace().collect();
    if f.len() != 9 && f.len() != 10 {
        return Err(bad("expected 9 or 10 fields"));
    }
    let op = match f[0] {
        "R" => Op::Read,
        "W" => Op::Write,
        _ => return Err(bad("op must be R or W")),
    };
    let num = |s: &str| s.parse::<u32>().map_err(|_| bad("non-numeric field"));
    let burst_words = num(f[7])?;
    let (layer, tile) = parse_tag(f[8]).ok_or_else(|| bad("malformed tag"))?;
    let payload_words = if f.len() == 10 { num(f[9])? } else { burst_words };
    Ok(DramRequest {
        op,
        addr: PhysicalAddress {
            channel: num(f[1])?,
            rank: num(f[2])?,
            chip: num(f[3])?,
            bank: num(f[4])?,
            row: num(f[5])?,
            column: num(f[6])?,
        },
        burst_words,
        payload_words,
        layer,
        tile,
    })
}

/// Read a text trace, skipping blank lines and `#` comments.
pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<DramRequest>> {
    let mut out = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(parse_request(t, k + 1)?);
    }
    Ok(out)
}
