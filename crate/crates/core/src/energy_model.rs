//! DRAM access energy from simulator statistics.

use serde::{Deserialize, Serialize};

use crate::dram_sim::{DramTiming, RowOutcome, SimStats};

/// Energy per command (pJ); read/write energy is per transferred word.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub e_act: f64,
    pub e_pre: f64,
    pub e_rd: f64,
    pub e_wr: f64,
    /// Standby energy per bus cycle.
    pub p_stby: f64,
}

/// DDR3-1600 2Gb x8 values from the datasheet currents
/// (IDD0 70 mA, IDD2N 35 mA, IDD3N 45 mA, IDD4R 170 mA, IDD4W 175 mA,
/// VDD 1.5 V, tCK 1.25 ns, tRAS 28, tRP 11, BL8 over 4 cycles).
pub fn default_params() -> EnergyParams {
    EnergyParams {
        e_act: 1312.5,
        e_pre: 721.875,
        e_rd: 117.1875,
        e_wr: 121.875,
        p_stby: 84.375,
    }
}

impl Default for EnergyParams {
    fn default() -> Self {
        default_params()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub act: f64,
    pub pre: f64,
    pub rd: f64,
    pub wr: f64,
    pub stby: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.act + self.pre + self.rd + self.wr + self.stby
    }

    pub fn add(&mut self, o: &EnergyBreakdown) {
        self.act += o.act;
        self.pre += o.pre;
        self.rd += o.rd;
        self.wr += o.wr;
        self.stby += o.stby;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub by_component: EnergyBreakdown,
    pub total: f64,
    pub by_layer: Vec<(String, EnergyBreakdown)>,
}

pub fn breakdown(stats: &SimStats, p: &EnergyParams) -> EnergyBreakdown {
    EnergyBreakdown {
        act: stats.n_act as f64 * p.e_act,
        pre: stats.n_pre as f64 * p.e_pre,
        rd: stats.rd_words as f64 * p.e_rd,
        wr: stats.wr_words as f64 * p.e_wr,
        stby: stats.total_cycles as f64 * p.p_stby,
    }
}

pub fn energy(stats: &SimStats, params: &EnergyParams) -> EnergyReport {
    let by_component = breakdown(stats, params);
    EnergyReport {
        total: by_component.total(),
        by_component,
        by_layer: Vec::new(),
    }
}

/// Energy of a sequence of layers, each with its own statistics.
pub fn network_energy<'a>(layers: impl IntoIterator<Item = (&'a str, &'a SimStats)>, params: &EnergyParams) -> EnergyReport {
    let mut report = EnergyReport::default();
    for (name, stats) in layers {
        let b = breakdown(stats, params);
        report.by_component.add(&b);
        report.by_layer.push((name.to_string(), b));
    }
    report.total = report.by_component.total();
    report
}

/// Energy of one isolated read burst of `words` words with the given row outcome.
pub fn access_energy(outcome: RowOutcome, words: u32, params: &EnergyParams, timing: &DramTiming) -> f64 {
    let (act, pre) = match outcome {
        RowOutcome::Hit => (0.0, 0.0),
        RowOutcome::Miss => (params.e_act, 0.0),
        RowOutcome::Conflict => (params.e_act, params.e_pre),
    };
    act + pre + f64::from(words) * params.e_rd + f64::from(timing.latency(outcome)) * params.p_stby
}
