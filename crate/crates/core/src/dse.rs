//! Design-space search over tiling factors and loop schedules.
//!
//! For each candidate schedule, `Th`, `Tw` and `Tj` are swept with the
//! configured steps; `Ti` is then the largest depth fitting both the ifmap
//! and weight buffers, and the ofmap buffer is checked last. The candidate
//! with the fewest DRAM words wins, with later candidates winning ties.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::access_model::{layer_accesses, layer_cost, AccessCounts, Loop, Mode, Schedule, ScheduleOrigin};
use crate::dram_map::DramGeometry;
use crate::error::{Error, Result};
use crate::net_model::{DataType, LayerShape, NetworkModel, ReusePriorityOrder};
use crate::tiling::{buffer_footprint, build_plan, TilingFactors, TilingPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    Priority6,
    Exhaustive24,
}

/// On-chip buffer capacities in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BufferSizes {
    pub ifm: u64,
    pub wgh: u64,
    pub ofm: u64,
}

impl BufferSizes {
    pub const fn uniform(bytes: u64) -> Self {
        BufferSizes {
            ifm: bytes,
            wgh: bytes,
            ofm: bytes,
        }
    }

    pub fn of(&self, data: DataType) -> u64 {
        match data {
            DataType::Ifm => self.ifm,
            DataType::Wgh => self.wgh,
            DataType::Ofm => self.ofm,
        }
    }
}

impl Default for BufferSizes {
    fn default() -> Self {
        BufferSizes::uniform(64 * 1024)
    }
}

/// Search strides. `None` picks `max(1, H/32)` for `Th`/`Tw` and `max(1, J/32)` for `Tj`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SearchSteps {
    pub th: Option<u32>,
    pub tw: Option<u32>,
    pub tj: Option<u32>,
}

impl SearchSteps {
    pub const fn uniform(step: u32) -> Self {
        SearchSteps {
            th: Some(step),
            tw: Some(step),
            tj: Some(step),
        }
    }

    fn resolve(&self, layer: &LayerShape) -> (u32, u32, u32) {
        (
            self.th.unwrap_or((layer.h / 32).max(1)),
            self.tw.unwrap_or((layer.w / 32).max(1)),
            self.tj.unwrap_or((layer.j / 32).max(1)),
        )
    }
}

/// Parses `auto`, a single step `n`, or `th,tw,tj` where each part may be `auto`.
impl std::str::FromStr for SearchSteps {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let part = |p: &str| -> Result<Option<u32>> {
            match p.trim() {
                "auto" => Ok(None),
                n => match n.parse::<u32>() {
                    Ok(v) if v >= 1 => Ok(Some(v)),
                    _ => Err(Error::InvalidConfig(format!("bad search step `{n}`"))),
                },
            }
        };
        let parts: Vec<&str> = s.split(',').collect();
        match parts[..] {
            [one] => {
                let v = part(one)?;
                Ok(SearchSteps { th: v, tw: v, tj: v })
            }
            [th, tw, tj] => Ok(SearchSteps {
                th: part(th)?,
                tw: part(tw)?,
                tj: part(tj)?,
            }),
            _ => Err(Error::InvalidConfig(format!("expected `auto`, `n` or `th,tw,tj`, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SearchConfig {
    pub steps: SearchSteps,
    pub buffers: BufferSizes,
    pub geometry: DramGeometry,
    pub schedule_mode: ScheduleMode,
    pub objective: Mode,
    /// Restrict the search to the largest feasible filter-set size `Tj`.
    #[serde(default)]
    pub max_tj_first: bool,
}

impl SearchConfig {
    pub fn new(objective: Mode) -> Self {
        SearchConfig {
            steps: SearchSteps::default(),
            buffers: BufferSizes::default(),
            geometry: DramGeometry::default(),
            schedule_mode: ScheduleMode::Priority6,
            objective,
            max_tj_first: objective == Mode::Baseline,
        }
    }

    fn validate(&self) -> Result<()> {
        let s = &self.steps;
        if [s.th, s.tw, s.tj].contains(&Some(0)) {
            return Err(Error::InvalidConfig("search steps must be >= 1".into()));
        }
        if [self.buffers.ifm, self.buffers.wgh, self.buffers.ofm].contains(&0) {
            return Err(Error::InvalidConfig("buffer sizes must be > 0".into()));
        }
        self.geometry.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerPlanResult {
    pub min_accesses: AccessCounts,
    pub plan: TilingPlan,
    pub schedule: Schedule,
}

/// Loop nest chosen for each reuse priority order.
pub fn priority_nest(order: ReusePriorityOrder) -> [Loop; 4] {
    use DataType::*;
    use Loop::*;
    match order.0 {
        [Ifm, Wgh, Ofm] => [H, W, I, J],
        [Ifm, Ofm, Wgh] => [H, W, J, I],
        [Wgh, Ifm, Ofm] => [J, I, H, W],
        [Wgh, Ofm, Ifm] => [J, H, W, I],
        [Ofm, Ifm, Wgh] => [H, W, J, I],
        [Ofm, Wgh, Ifm] => [J, H, W, I],
        _ => unreachable!("not a permutation of the three data types"),
    }
}

/// Nests available to the continuous-bank reference flow: weight reuse and ofmap reuse.
pub const BASELINE_NESTS: [[Loop; 4]; 3] = [
    [Loop::J, Loop::I, Loop::H, Loop::W],
    [Loop::J, Loop::H, Loop::W, Loop::I],
    [Loop::H, Loop::W, Loop::J, Loop::I],
];

pub fn candidate_schedules(mode: ScheduleMode, objective: Mode) -> Vec<Schedule> {
    match (mode, objective) {
        (ScheduleMode::Priority6, Mode::Romanet) => ReusePriorityOrder::ALL
            .iter()
            .map(|&o| Schedule {
                nest: priority_nest(o),
                origin: ScheduleOrigin::Priority(o),
            })
            .unique_by(|s| s.nest)
            .collect(),
        (ScheduleMode::Priority6, Mode::Baseline) => BASELINE_NESTS
            .iter()
            .map(|&nest| Schedule {
                nest,
                origin: ScheduleOrigin::Baseline,
            })
            .collect(),
        (ScheduleMode::Exhaustive24, _) => Loop::ALL
            .into_iter()
            .permutations(4)
            .map(|p| Schedule {
                nest: p.try_into().expect("four loops"),
                origin: ScheduleOrigin::Exhaustive,
            })
            .collect(),
    }
}

fn sweep(lo: u32, hi: u32, step: u32) -> Vec<u32> {
    let mut v: Vec<u32> = (lo..=hi).step_by(step as usize).collect();
    if v.last() != Some(&hi) {
        v.push(hi);
    }
    v
}

fn fits(plan: &TilingPlan, buffers: &BufferSizes) -> bool {
    let f = buffer_footprint(plan);
    DataType::ALL.iter().all(|&d| f.of(d) <= buffers.of(d))
}

/// Largest depth tile fitting the ifmap and weight buffers for a given spatial/filter tile.
fn max_ti(plan: &TilingPlan, buffers: &BufferSizes) -> u32 {
    let l = &plan.layer;
    if l.is_depthwise() {
        return 1;
    }
    let ifm_slice = u64::from(plan.ifm_h.max_window()) * u64::from(plan.ifm_w.max_window()) * u64::from(l.bits.ifm);
    let wgh_slice = u64::from(l.p) * u64::from(l.q) * u64::from(plan.factors.tj) * u64::from(l.bits.wgh);
    let by_ifm = buffers.ifm * 8 / ifm_slice;
    let by_wgh = buffers.wgh * 8 / wgh_slice;
    by_ifm.min(by_wgh).min(u64::from(l.i)) as u32
}

fn check_minimal(layer: &LayerShape, buffers: &BufferSizes) -> Result<()> {
    let b = &layer.bits;
    let pq = u64::from(layer.p) * u64::from(layer.q);
    let need = [
        (DataType::Ifm, (pq * u64::from(b.ifm)).div_ceil(8)),
        (DataType::Wgh, (pq * u64::from(b.wgh)).div_ceil(8)),
        (DataType::Ofm, u64::from(b.ofm).div_ceil(8)),
    ];
    for (d, bytes) in need {
        if bytes > buffers.of(d) {
            return Err(Error::Infeasible {
                layer: layer.name.clone(),
                reason: format!("minimal {d} tile needs {bytes} bytes, buffer holds {}", buffers.of(d)),
            });
        }
    }
    Ok(())
}

pub fn search_layer(layer: &LayerShape, cfg: &SearchConfig) -> Result<LayerPlanResult> {
    cfg.validate()?;
    layer.validate()?;
    check_minimal(layer, &cfg.buffers)?;
    let (sh, sw, sj) = cfg.steps.resolve(layer);
    let schedules = candidate_schedules(cfg.schedule_mode, cfg.objective);
    let mut best: Option<(u64, TilingFactors, Schedule)> = None;
    // spatial grids do not depend on the schedule, so feasible tilings are found once
    let mut tilings = Vec::new();
    for th in sweep(layer.p, layer.h, sh) {
        for tw in sweep(layer.q, layer.w, sw) {
            for tj in sweep(1, layer.j, sj) {
                let probe = build_plan(layer, TilingFactors::new(layer, th, tw, 1, tj))?;
                let ti = max_ti(&probe, &cfg.buffers);
                if ti == 0 {
                    continue;
                }
                let plan = build_plan(layer, TilingFactors::new(layer, th, tw, ti, tj))?;
                if fits(&plan, &cfg.buffers) {
                    tilings.push(plan);
                }
            }
        }
    }
    if cfg.max_tj_first {
        let top = tilings.iter().map(|p| p.factors.tj).max();
        tilings.retain(|p| Some(p.factors.tj) == top);
    }
    for schedule in &schedules {
        for plan in &tilings {
            let cost = layer_cost(plan, schedule, &cfg.geometry, cfg.objective).total();
            if best.as_ref().is_none_or(|b| cost <= b.0) {
                best = Some((cost, plan.factors, *schedule));
            }
        }
    }
    let (_, factors, schedule) = best.ok_or_else(|| Error::Infeasible {
        layer: layer.name.clone(),
        reason: "no tiling fits the buffers".into(),
    })?;
    let plan = build_plan(layer, factors)?;
    Ok(LayerPlanResult {
        min_accesses: layer_accesses(&plan, &schedule, &cfg.geometry, cfg.objective),
        plan,
        schedule,
    })
}

/// Independent per-layer searches, run in parallel.
pub fn search_network(network: &NetworkModel, cfg: &SearchConfig) -> Result<Vec<LayerPlanResult>> {
    network.layers.par_iter().map(|l| search_layer(l, cfg)).collect()
}
