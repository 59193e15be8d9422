//! End-to-end runs: search, map, trace, simulate and price a network, then
//! write CSV reports.
//!
//! Every CSV row starts with a `config_hash` column, a truncated SHA-256 of
//! the canonical JSON of everything that determined the row.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::access_model::{layer_accesses, AccessCounts, Mode};
use crate::config::HardwareConfig;
use crate::dram_map::allocate_regions;
use crate::dram_sim::{SimStats, Simulator};
use crate::dse::{search_network, BufferSizes, LayerPlanResult, ScheduleMode, SearchConfig, SearchSteps};
use crate::energy_model::{breakdown, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::net_model::NetworkModel;
use crate::tiling::TilingPlan;
use crate::trace_gen::{generate_layer_trace, BurstMode, TextTraceWriter, TraceCounter};

/// Everything needed to run one network through the flow.
#[derive(Debug, Clone, Serialize)]
pub struct Experiment {
    pub network: NetworkModel,
    pub hardware: HardwareConfig,
    pub steps: SearchSteps,
    pub schedule_mode: ScheduleMode,
    /// Place each layer's ifmap where the previous layer wrote its ofmap.
    pub alias_handoff: bool,
}

impl Experiment {
    pub fn new(network: NetworkModel, hardware: HardwareConfig) -> Self {
        Experiment {
            network,
            hardware,
            steps: SearchSteps::default(),
            schedule_mode: ScheduleMode::Priority6,
            alias_handoff: false,
        }
    }

    pub fn search_config(&self, mode: Mode) -> SearchConfig {
        SearchConfig {
            steps: self.steps,
            buffers: self.hardware.buffers,
            geometry: self.hardware.dram,
            schedule_mode: self.schedule_mode,
            ..SearchConfig::new(mode)
        }
    }

    /// Hash of the search inputs for one mode.
    pub fn dse_hash(&self, mode: Mode) -> String {
        config_hash(&(&self.network, &self.hardware, &self.steps, self.schedule_mode, mode))
    }
}

/// Truncated SHA-256 of the JSON encoding of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("hash input serializes");
    let digest = Sha256::digest(&json);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Result of a search, as written to and read back from `plans_<mode>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlansFile {
    pub network: String,
    pub mode: Mode,
    pub config_hash: String,
    pub hardware: HardwareConfig,
    pub layers: Vec<LayerPlanResult>,
}

impl PlansFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn plans(&self) -> Vec<TilingPlan> {
        self.layers.iter().map(|l| l.plan.clone()).collect()
    }
}

pub fn run_dse(exp: &Experiment, mode: Mode) -> Result<PlansFile> {
    let layers = search_network(&exp.network, &exp.search_config(mode))?
        .into_iter()
        .map(|mut r| {
            r.min_accesses = r.min_accesses.summary();
            r
        })
        .collect();
    Ok(PlansFile {
        network: exp.network.name.clone(),
        mode,
        config_hash: exp.dse_hash(mode),
        hardware: exp.hardware,
        layers,
    })
}

/// One simulated layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRun {
    pub index: usize,
    pub name: String,
    /// Counts predicted by the access model.
    pub model: AccessCounts,
    /// Counts tallied from the generated requests.
    pub traced: AccessCounts,
    pub stats: SimStats,
    pub energy: EnergyBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub network: String,
    pub mode: Mode,
    pub burst: BurstMode,
    pub config_hash: String,
    pub layers: Vec<LayerRun>,
}

impl RunResult {
    pub fn accesses(&self) -> AccessCounts {
        self.layers.iter().fold(AccessCounts::default(), |acc, l| &acc + &l.traced)
    }

    pub fn stats(&self) -> SimStats {
        self.layers.iter().fold(SimStats::default(), |acc, l| acc + l.stats)
    }

    pub fn energy(&self) -> EnergyBreakdown {
        let mut total = EnergyBreakdown::default();
        for l in &self.layers {
            total.add(&l.energy);
        }
        total
    }

    /// Layers whose traced counts differ from the model.
    pub fn mismatches(&self) -> Vec<&LayerRun> {
        self.layers.iter().filter(|l| l.model != l.traced).collect()
    }
}

/// Generate and simulate every layer of `plans`, layers in parallel.
pub fn simulate_plans(plans: &PlansFile, burst: BurstMode, alias_handoff: bool) -> Result<RunResult> {
    let hw = &plans.hardware;
    let allocs = allocate_regions(&plans.plans(), plans.mode, &hw.dram, alias_handoff)?.into_layers();
    let layers = plans
        .layers
        .par_iter()
        .zip(allocs.into_par_iter())
        .enumerate()
        .map(|(index, (lp, mut alloc))| {
            let mut sim = Simulator::new(hw.dram, hw.timing);
            let mut counter = TraceCounter::new();
            generate_layer_trace(&lp.plan, &lp.schedule, plans.mode, burst, &mut alloc, &mut (&mut sim, &mut counter))?;
            let stats = sim.finish();
            Ok(LayerRun {
                index,
                name: lp.plan.layer.name.clone(),
                model: layer_accesses(&lp.plan, &lp.schedule, &hw.dram, plans.mode).for_burst_mode(burst),
                traced: counter.finish(),
                energy: breakdown(&stats, &hw.energy),
                stats,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunResult {
        network: plans.network.clone(),
        mode: plans.mode,
        burst,
        config_hash: config_hash(&(&plans.config_hash, burst, alias_handoff)),
        layers,
    })
}

pub fn run_sim(exp: &Experiment, mode: Mode, burst: BurstMode) -> Result<RunResult> {
    simulate_plans(&run_dse(exp, mode)?, burst, exp.alias_handoff)
}

/// Write the text trace of the selected layers (all when `layers` is empty).
pub fn write_trace<W: Write>(plans: &PlansFile, burst: BurstMode, alias_handoff: bool, layers: &[usize], out: W) -> Result<W> {
    let hw = &plans.hardware;
    let allocs = allocate_regions(&plans.plans(), plans.mode, &hw.dram, alias_handoff)?.into_layers();
    let mut writer = TextTraceWriter::new(out);
    for (l, (lp, mut alloc)) in plans.layers.iter().zip(allocs).enumerate() {
        if layers.is_empty() || layers.contains(&l) {
            generate_layer_trace(&lp.plan, &lp.schedule, plans.mode, burst, &mut alloc, &mut writer)?;
        }
    }
    Ok(writer.into_inner())
}

/// Both modes of one network under the same burst mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub romanet: RunResult,
    pub baseline: RunResult,
}

impl Comparison {
    pub fn config_hash(&self) -> String {
        config_hash(&(&self.romanet.config_hash, &self.baseline.config_hash))
    }

    pub fn summary(&self) -> Vec<MetricDelta> {
        let (r, b) = (&self.romanet, &self.baseline);
        let (sr, sb) = (r.stats(), b.stats());
        let metric = |name: &'static str, rv: f64, bv: f64| MetricDelta::new(name, rv, bv, reference_pct(&r.network, name, r.burst));
        vec![
            metric("accesses", r.accesses().total() as f64, b.accesses().total() as f64),
            metric("requests", sr.requests() as f64, sb.requests() as f64),
            metric(
                "conflicts_misses",
                sr.conflicts_and_misses() as f64,
                sb.conflicts_and_misses() as f64,
            ),
            metric("energy_pj", r.energy().total(), b.energy().total()),
            metric("cycles", sr.total_cycles as f64, sb.total_cycles as f64),
            metric("throughput_gbps", sr.throughput() / 1e9, sb.throughput() / 1e9),
        ]
    }

    /// Reduction of a summary metric, romanet against baseline, in percent.
    pub fn reduction_pct(&self, metric: &str) -> f64 {
        self.summary()
            .into_iter()
            .find(|m| m.metric == metric)
            .map(|m| m.reduction_pct)
            .unwrap_or(f64::NAN)
    }

    /// Throughput gain of romanet over baseline, in percent.
    pub fn throughput_gain_pct(&self) -> f64 {
        -self.reduction_pct("throughput_gbps")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub metric: String,
    pub romanet: f64,
    pub baseline: f64,
    /// `100 * (1 - romanet / baseline)`.
    pub reduction_pct: f64,
    pub reference_pct: Option<f64>,
}

impl MetricDelta {
    fn new(metric: &str, romanet: f64, baseline: f64, reference_pct: Option<f64>) -> Self {
        MetricDelta {
            metric: metric.to_string(),
            romanet,
            baseline,
            reduction_pct: reduction(romanet, baseline),
            reference_pct,
        }
    }
}

fn reduction(new: f64, old: f64) -> f64 {
    if old == 0.0 {
        0.0
    } else {
        100.0 * (1.0 - new / old)
    }
}

/// Published reduction for a bundled network, in percent. Throughput is a
/// gain, so its reference is negative.
pub fn reference_pct(network: &str, metric: &str, burst: BurstMode) -> Option<f64> {
    let row = match (network, burst) {
        ("alexnet", BurstMode::Burst) => [12.0, 12.0, 12.0, -10.0],
        ("vgg16", BurstMode::Burst) => [36.0, 35.0, 36.0, -10.0],
        ("mobilenet", BurstMode::Burst) => [45.0, 48.0, 46.0, -10.0],
        ("mobilenet-amc", BurstMode::Burst) => [f64::NAN, f64::NAN, 30.0, f64::NAN],
        (_, BurstMode::NonBurst) => [f64::NAN, f64::NAN, f64::NAN, -1.5],
        _ => return None,
    };
    let v = match metric {
        "accesses" => row[0],
        "conflicts_misses" => row[1],
        "energy_pj" => row[2],
        "throughput_gbps" => row[3],
        _ => f64::NAN,
    };
    (!v.is_nan()).then_some(v)
}

pub fn run_compare(exp: &Experiment, burst: BurstMode) -> Result<Comparison> {
    Ok(Comparison {
        romanet: run_sim(exp, Mode::Romanet, burst)?,
        baseline: run_sim(exp, Mode::Baseline, burst)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Size of each on-chip buffer, in KB.
    Buffer,
    /// Uniform search step.
    Step,
    /// DRAM burst length.
    Bl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config_hash: String,
    pub axis: SweepAxis,
    pub value: u32,
    pub mode: Mode,
    pub burst: BurstMode,
    pub accesses: u64,
    pub requests: u64,
    pub conflicts_misses: u64,
    pub cycles: u64,
    pub energy_pj: f64,
    pub throughput_gbps: f64,
}

/// The experiment with one axis set to `value`.
pub fn sweep_point(exp: &Experiment, axis: SweepAxis, value: u32) -> Result<Experiment> {
    let mut e = exp.clone();
    match axis {
        SweepAxis::Buffer => e.hardware.buffers = BufferSizes::uniform(u64::from(value) * 1024),
        SweepAxis::Step => e.steps = SearchSteps::uniform(value),
        SweepAxis::Bl => {
            e.hardware.dram.burst_length = value;
            e.hardware.timing.t_bl = (value / 2).max(1);
        }
    }
    e.hardware.validate()?;
    Ok(e)
}

/// Run both modes at every value of one axis.
pub fn run_sweep(exp: &Experiment, axis: SweepAxis, values: &[u32], burst: BurstMode) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &value in values {
        let e = sweep_point(exp, axis, value)?;
        for mode in Mode::ALL {
            let run = run_sim(&e, mode, burst)?;
            let s = run.stats();
            rows.push(SweepRow {
                config_hash: run.config_hash.clone(),
                axis,
                value,
                mode,
                burst,
                accesses: run.accesses().total(),
                requests: s.requests(),
                conflicts_misses: s.conflicts_and_misses(),
                cycles: s.total_cycles,
                energy_pj: run.energy().total(),
                throughput_gbps: s.throughput() / 1e9,
            });
        }
    }
    Ok(rows)
}

#[derive(Serialize)]
struct PlanRow<'a> {
    config_hash: &'a str,
    network: &'a str,
    mode: Mode,
    layer: usize,
    name: &'a str,
    th: u32,
    tw: u32,
    ti: u32,
    tj: u32,
    nest: String,
    rd_ifm: u64,
    rd_wgh: u64,
    rd_ofm: u64,
    wr_ofm: u64,
    accesses: u64,
    requests_burst: u64,
    requests_nonburst: u64,
}

pub fn write_plans_csv<W: Write>(out: W, plans: &PlansFile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (layer, r) in plans.layers.iter().enumerate() {
        let f = &r.plan.factors;
        let a = &r.min_accesses;
        w.serialize(PlanRow {
            config_hash: &plans.config_hash,
            network: &plans.network,
            mode: plans.mode,
            layer,
            name: &r.plan.layer.name,
            th: f.th,
            tw: f.tw,
            ti: f.ti,
            tj: f.tj,
            nest: r.schedule.nest_string(),
            rd_ifm: a.rd_ifm,
            rd_wgh: a.rd_wgh,
            rd_ofm: a.rd_ofm,
            wr_ofm: a.wr_ofm,
            accesses: a.total(),
            requests_burst: a.requests_burst,
            requests_nonburst: a.requests_nonburst,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct StatsRow<'a> {
    config_hash: &'a str,
    network: &'a str,
    mode: Mode,
    burst: BurstMode,
    layer: String,
    name: &'a str,
    rd_ifm: u64,
    rd_wgh: u64,
    rd_ofm: u64,
    wr_ofm: u64,
    accesses: u64,
    requests: u64,
    n_hit: u64,
    n_miss: u64,
    n_conflict: u64,
    n_act: u64,
    n_pre: u64,
    n_rd: u64,
    n_wr: u64,
    rd_words: u64,
    wr_words: u64,
    total_cycles: u64,
    bytes_moved: u64,
    throughput_gbps: f64,
    e_act_pj: f64,
    e_pre_pj: f64,
    e_rd_pj: f64,
    e_wr_pj: f64,
    e_stby_pj: f64,
    e_total_pj: f64,
}

fn stats_row<'a>(run: &'a RunResult, layer: String, name: &'a str, a: &AccessCounts, s: &SimStats, e: &EnergyBreakdown) -> StatsRow<'a> {
    StatsRow {
        config_hash: &run.config_hash,
        network: &run.network,
        mode: run.mode,
        burst: run.burst,
        layer,
        name,
        rd_ifm: a.rd_ifm,
        rd_wgh: a.rd_wgh,
        rd_ofm: a.rd_ofm,
        wr_ofm: a.wr_ofm,
        accesses: a.total(),
        requests: s.requests(),
        n_hit: s.n_hit,
        n_miss: s.n_miss,
        n_conflict: s.n_conflict,
        n_act: s.n_act,
        n_pre: s.n_pre,
        n_rd: s.n_rd,
        n_wr: s.n_wr,
        rd_words: s.rd_words,
        wr_words: s.wr_words,
        total_cycles: s.total_cycles,
        bytes_moved: s.bytes_moved,
        throughput_gbps: s.throughput() / 1e9,
        e_act_pj: e.act,
        e_pre_pj: e.pre,
        e_rd_pj: e.rd,
        e_wr_pj: e.wr,
        e_stby_pj: e.stby,
        e_total_pj: e.total(),
    }
}

/// Per-layer rows followed by a `total` row.
pub fn write_stats_csv<W: Write>(out: W, run: &RunResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for l in &run.layers {
        w.serialize(stats_row(run, l.index.to_string(), &l.name, &l.traced, &l.stats, &l.energy))?;
    }
    w.serialize(stats_row(run, "total".into(), "", &run.accesses(), &run.stats(), &run.energy()))?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub config_hash: String,
    pub network: String,
    pub burst: BurstMode,
    pub layer: String,
    pub metric: String,
    pub romanet: f64,
    pub baseline: f64,
    pub reduction_pct: f64,
    pub reference_pct: Option<f64>,
}

/// Per-layer deltas, then the network totals with reference values.
pub fn compare_rows(cmp: &Comparison) -> Vec<CompareRow> {
    let hash = cmp.config_hash();
    let (r, b) = (&cmp.romanet, &cmp.baseline);
    let row = |layer: String, m: MetricDelta| CompareRow {
        config_hash: hash.clone(),
        network: r.network.clone(),
        burst: r.burst,
        layer,
        metric: m.metric,
        romanet: m.romanet,
        baseline: m.baseline,
        reduction_pct: m.reduction_pct,
        reference_pct: m.reference_pct,
    };
    let mut rows = Vec::new();
    for (lr, lb) in r.layers.iter().zip(&b.layers) {
        let deltas = [
            MetricDelta::new("accesses", lr.traced.total() as f64, lb.traced.total() as f64, None),
            MetricDelta::new("requests", lr.stats.requests() as f64, lb.stats.requests() as f64, None),
            MetricDelta::new(
                "conflicts_misses",
                lr.stats.conflicts_and_misses() as f64,
                lb.stats.conflicts_and_misses() as f64,
                None,
            ),
            MetricDelta::new("energy_pj", lr.energy.total(), lb.energy.total(), None),
            MetricDelta::new("throughput_gbps", lr.stats.throughput() / 1e9, lb.stats.throughput() / 1e9, None),
        ];
        for m in deltas {
            rows.push(row(format!("{}:{}", lr.index, lr.name), m));
        }
    }
    for m in cmp.summary() {
        rows.push(row("total".into(), m));
    }
    rows
}

pub fn write_compare_csv<W: Write>(out: W, cmp: &Comparison) -> Result<()> {
    write_rows(out, compare_rows(cmp))
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    write_rows(out, rows)
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Create `dir/name` for buffered writing.
pub fn create_file(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

pub fn compare_file_name(network: &str, burst: BurstMode) -> String {
    format!("compare_{network}_{burst}.csv")
}

/// Files written by [`write_comparison`].
pub fn write_comparison(dir: &Path, cmp: &Comparison) -> Result<Vec<PathBuf>> {
    let net = &cmp.romanet.network;
    let burst = cmp.romanet.burst;
    let mut written = Vec::new();
    for run in [&cmp.romanet, &cmp.baseline] {
        let name = format!("stats_{net}_{}_{burst}.csv", run.mode);
        write_stats_csv(create_file(dir, &name)?, run)?;
        written.push(dir.join(name));
    }
    let name = compare_file_name(net, burst);
    write_compare_csv(create_file(dir, &name)?, cmp)?;
    written.push(dir.join(name));
    Ok(written)
}

/// Summary table over every `compare_*.csv` in `dir`.
pub fn render_report(dir: &Path) -> Result<String> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("compare_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidConfig(format!("no compare_*.csv files in `{}`", dir.display())));
    }
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:<9} {:<17} {:>16} {:>16} {:>10} {:>10}  {}\n",
        "network", "burst", "metric", "romanet", "baseline", "reduction", "reference", "config_hash"
    ));
    for path in files {
        let mut rdr = csv::Reader::from_path(&path)?;
        for row in rdr.deserialize::<CompareRow>() {
            let r = row?;
            if r.layer != "total" {
                continue;
            }
            let reference = r.reference_pct.map_or("-".to_string(), |v| format!("{v:.1}%"));
            out.push_str(&format!(
                "{:<14} {:<9} {:<17} {:>16.3} {:>16.3} {:>9.1}% {:>10}  {}\n",
                r.network,
                r.burst.to_string(),
                r.metric,
                r.romanet,
                r.baseline,
                r.reduction_pct,
                reference,
                r.config_hash
            ));
        }
    }
    Ok(out)
}
