//! Trace-driven row-buffer simulator: open-row policy, in-order service.
//!
//! Each request is classified against its bank's open row and then timed:
//!
//! * a hit issues its column command as soon as the column bus allows;
//! * a miss (`tRCD`) or conflict (`tRP + tRCD`) first waits for the bank's
//!   previous data transfer, then opens the row;
//! * data follows the column command after `CL` and occupies the bus for
//!   `tBL` cycles per full burst.
//!
//! Requests are served strictly in order, but the controller sees
//! `queue_depth` requests ahead, so row activation in one bank overlaps
//! transfers from other banks. In non-burst mode a column command waits for
//! the previous transfer to finish, so every word pays the full `CL`.

use std::collections::VecDeque;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::dram_map::DramGeometry;
use crate::error::{Error, Result};
use crate::trace_gen::{DramRequest, Op, TraceSink};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DramTiming {
    pub t_rcd: u32,
    pub t_rp: u32,
    pub cl: u32,
    /// Bus cycles of one full burst.
    pub t_bl: u32,
    pub clock_mhz: f64,
    /// Requests visible to the controller at once.
    #[serde(default = "default_queue_depth")]
    pub queue_depth: u32,
}

fn default_queue_depth() -> u32 {
    32
}

impl Default for DramTiming {
    /// DDR3-1600 11-11-11, BL8.
    fn default() -> Self {
        DramTiming {
            t_rcd: 11,
            t_rp: 11,
            cl: 11,
            t_bl: 4,
            clock_mhz: 800.0,
            queue_depth: default_queue_depth(),
        }
    }
}

impl DramTiming {
    pub fn validate(&self) -> Result<()> {
        if [self.t_rcd, self.t_rp, self.cl, self.t_bl, self.queue_depth].contains(&0) || self.clock_mhz <= 0.0 {
            return Err(Error::InvalidConfig("DRAM timing values must be > 0".into()));
        }
        Ok(())
    }

    /// Unloaded latency of a single full burst.
    pub fn latency(&self, outcome: RowOutcome) -> u32 {
        self.overhead(outcome) + self.cl + self.t_bl
    }

    fn overhead(&self, outcome: RowOutcome) -> u32 {
        match outcome {
            RowOutcome::Hit => 0,
            RowOutcome::Miss => self.t_rcd,
            RowOutcome::Conflict => self.t_rp + self.t_rcd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowOutcome {
    Hit,
    Miss,
    Conflict,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BankState {
    pub open_row: Option<u32>,
}

/// Classify an access to `row` and leave the row open.
pub fn classify(row: u32, bank: &mut BankState) -> RowOutcome {
    let outcome = match bank.open_row {
        None => RowOutcome::Miss,
        Some(r) if r == row => RowOutcome::Hit,
        Some(_) => RowOutcome::Conflict,
    };
    bank.open_row = Some(row);
    outcome
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub n_hit: u64,
    pub n_miss: u64,
    pub n_conflict: u64,
    pub n_act: u64,
    pub n_pre: u64,
    pub n_rd: u64,
    pub n_wr: u64,
    /// Words transferred on the bus.
    pub rd_words: u64,
    pub wr_words: u64,
    pub total_cycles: u64,
    /// Bytes of tile data moved.
    pub bytes_moved: u64,
    pub clock_mhz: f64,
}

impl SimStats {
    pub fn requests(&self) -> u64 {
        self.n_rd + self.n_wr
    }

    pub fn conflicts_and_misses(&self) -> u64 {
        self.n_conflict + self.n_miss
    }

    pub fn throughput(&self) -> f64 {
        effective_throughput(self)
    }
}

impl Add for SimStats {
    type Output = SimStats;

    /// Back-to-back execution: cycles add up.
    fn add(self, o: SimStats) -> SimStats {
        SimStats {
            n_hit: self.n_hit + o.n_hit,
            n_miss: self.n_miss + o.n_miss,
            n_conflict: self.n_conflict + o.n_conflict,
            n_act: self.n_act + o.n_act,
            n_pre: self.n_pre + o.n_pre,
            n_rd: self.n_rd + o.n_rd,
            n_wr: self.n_wr + o.n_wr,
            rd_words: self.rd_words + o.rd_words,
            wr_words: self.wr_words + o.wr_words,
            total_cycles: self.total_cycles + o.total_cycles,
            bytes_moved: self.bytes_moved + o.bytes_moved,
            clock_mhz: if self.clock_mhz > 0.0 { self.clock_mhz } else { o.clock_mhz },
        }
    }
}

/// Bytes per second.
pub fn effective_throughput(stats: &SimStats) -> f64 {
    if stats.total_cycles == 0 {
        return 0.0;
    }
    stats.bytes_moved as f64 * stats.clock_mhz * 1e6 / stats.total_cycles as f64
}

/// Streaming simulator; feed it requests through [`TraceSink`].
#[derive(Debug, Clone)]
pub struct Simulator {
    geom: DramGeometry,
    timing: DramTiming,
    banks: Vec<BankState>,
    bank_ready: Vec<u64>,
    bus_free: u64,
    last_col: Option<(u64, u64)>,
    starts: VecDeque<u64>,
    stats: SimStats,
}

impl Simulator {
    pub fn new(geom: DramGeometry, timing: DramTiming) -> Self {
        let slots = (geom.channels * geom.ranks_per_channel * geom.banks_per_chip) as usize;
        Simulator {
            geom,
            timing,
            banks: vec![BankState::default(); slots],
            bank_ready: vec![0; slots],
            bus_free: 0,
            last_col: None,
            starts: VecDeque::with_capacity(timing.queue_depth as usize + 1),
            stats: SimStats {
                clock_mhz: timing.clock_mhz,
                ..SimStats::default()
            },
        }
    }

    /// Open `row` in a bank before any request arrives.
    pub fn preopen(&mut self, bank_slot: usize, row: u32) {
        self.banks[bank_slot].open_row = Some(row);
    }

    pub fn stats(&self) -> &SimStats {
        &self.stats
    }

    pub fn finish(self) -> SimStats {
        self.stats
    }

    fn data_cycles(&self, words: u32) -> u64 {
        let bl = u64::from(self.geom.burst_length);
        (u64::from(self.timing.t_bl) * u64::from(words)).div_ceil(bl).max(1)
    }

    pub fn serve(&mut self, r: &DramRequest) -> Result<RowOutcome> {
        r.addr.check(&self.geom)?;
        let b = r.addr.bank_slot(&self.geom);
        let outcome = classify(r.addr.row, &mut self.banks[b]);
        let t = &self.timing;
        let d = self.data_cycles(r.burst_words);

        let floor = if self.starts.len() >= t.queue_depth as usize {
            self.starts.front().copied().unwrap_or(0)
        } else {
            0
        };
        let col_min = match self.last_col {
            None => 0,
            Some((c, prev_d)) if r.burst_words > 1 => c + prev_d,
            Some(_) => self.bus_free,
        };
        let start = match outcome {
            RowOutcome::Hit => floor,
            _ => floor.max(self.bank_ready[b]),
        };
        let col = (start + u64::from(t.overhead(outcome))).max(col_min);
        let data_start = (col + u64::from(t.cl)).max(self.bus_free);
        let data_end = data_start + d;

        self.bank_ready[b] = data_end;
        self.bus_free = data_end;
        self.last_col = Some((col, d));
        self.starts.push_back(start);
        if self.starts.len() > t.queue_depth as usize {
            self.starts.pop_front();
        }

        let s = &mut self.stats;
        match outcome {
            RowOutcome::Hit => s.n_hit += 1,
            RowOutcome::Miss => {
                s.n_miss += 1;
                s.n_act += 1;
            }
            RowOutcome::Conflict => {
                s.n_conflict += 1;
                s.n_act += 1;
                s.n_pre += 1;
            }
        }
        match r.op {
            Op::Read => {
                s.n_rd += 1;
                s.rd_words += u64::from(r.burst_words);
            }
            Op::Write => {
                s.n_wr += 1;
                s.wr_words += u64::from(r.burst_words);
            }
        }
        s.bytes_moved += u64::from(r.payload_words) * self.geom.rank_word_bits() / 8;
        s.total_cycles = s.total_cycles.max(data_end);
        Ok(outcome)
    }
}

impl TraceSink for Simulator {
    fn push(&mut self, req: &DramRequest) -> Result<()> {
        self.serve(req).map(|_| ())
    }
}

pub fn simulate(trace: &[DramRequest], geom: &DramGeometry, timing: &DramTiming) -> Result<SimStats> {
    let mut sim = Simulator::new(*geom, *timing);
    for r in trace {
        sim.serve(r)?;
    }
    Ok(sim.finish())
}
