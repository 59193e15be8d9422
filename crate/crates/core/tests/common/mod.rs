#![allow(dead_code)]

use std::collections::HashMap;

use itertools::Itertools;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestRunner};

use dramflow::access_model::{layer_accesses, Loop, ScheduleOrigin, TileId};
use dramflow::dram_map::{allocate_regions, DramGeometry};
use dramflow::dram_sim::{simulate, DramTiming, SimStats};
use dramflow::dse::{search_layer, BufferSizes, ScheduleMode, SearchConfig, SearchSteps};
use dramflow::net_model::{output_dims, LayerShape};
use dramflow::tiling::{buffer_footprint, build_plan, TilingFactors, TilingPlan};
use dramflow::trace_gen::{generate_layer_trace, Op, TraceSink};
use dramflow::{BurstMode, DataType, DramRequest, Mode, PhysicalAddress, Schedule};

pub const ALL_LOOPS: [Loop; 4] = [Loop::H, Loop::W, Loop::J, Loop::I];

pub fn all_nests() -> Vec<[Loop; 4]> {
    ALL_LOOPS
        .iter()
        .copied()
        .permutations(4)
        .map(|p| [p[0], p[1], p[2], p[3]])
        .collect()
}

pub fn runner(seed: u64, cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    })
}

/// Small conv or depthwise layer with 8-bit data.
pub fn toy_layer() -> impl Strategy<Value = LayerShape> {
    (3u32..=16, 3u32..=16, 1u32..=8, 1u32..=8, 1u32..=3, 1u32..=3, 1u32..=2, 0u8..4).prop_map(|(h, w, i, j, p, q, s, kind)| {
        let (p, q) = (p.min(h), q.min(w));
        if kind == 0 {
            LayerShape::depthwise("dw", h, w, i, p, q, s).unwrap()
        } else {
            LayerShape::conv("conv", h, w, i, p, q, j, s).unwrap()
        }
    })
}

/// A layer together with tiling factors valid for it.
pub fn toy_plan() -> impl Strategy<Value = TilingPlan> {
    (toy_layer(), any::<(u32, u32, u32, u32)>()).prop_map(|(l, (a, b, c, d))| {
        let th = l.p + a % (l.h - l.p + 1);
        let tw = l.q + b % (l.w - l.q + 1);
        let ti = 1 + c % l.filter_depth();
        let tj = 1 + d % l.j;
        build_plan(&l, TilingFactors::new(&l, th, tw, ti, tj)).unwrap()
    })
}

pub fn nest() -> impl Strategy<Value = [Loop; 4]> {
    (0usize..24).prop_map(|k| all_nests()[k])
}

/// Words and requests of a trace, tallied per direction and data type.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Tally {
    pub words: HashMap<(bool, DataType), u64>,
    pub requests: u64,
}

impl Tally {
    pub fn total(&self) -> u64 {
        self.words.values().sum()
    }

    pub fn get(&self, write: bool, data: DataType) -> u64 {
        self.words.get(&(write, data)).copied().unwrap_or(0)
    }
}

impl TraceSink for Tally {
    fn push(&mut self, r: &DramRequest) -> dramflow::Result<()> {
        *self.words.entry((r.op == Op::Write, r.tile.data)).or_default() += u64::from(r.payload_words);
        self.requests += 1;
        Ok(())
    }
}

pub fn trace_of<S: TraceSink>(plan: &TilingPlan, nest: [Loop; 4], mode: Mode, burst: BurstMode, geom: &DramGeometry, sink: &mut S) {
    let schedule = Schedule {
        nest,
        origin: ScheduleOrigin::Exhaustive,
    };
    let mut regions = allocate_regions(std::slice::from_ref(plan), mode, geom, false).unwrap();
    generate_layer_trace(plan, &schedule, mode, burst, regions.layer_mut(0), sink).unwrap();
}

pub fn collect_trace(plan: &TilingPlan, nest: [Loop; 4], mode: Mode, burst: BurstMode, geom: &DramGeometry) -> Vec<DramRequest> {
    let mut v = Vec::new();
    trace_of(plan, nest, mode, burst, geom, &mut v);
    v
}

fn fits(plan: &TilingPlan, buffers: &BufferSizes) -> bool {
    let f = buffer_footprint(plan);
    f.ifm <= buffers.ifm && f.wgh <= buffers.wgh && f.ofm <= buffers.ofm
}

/// Fewest words over every tiling and loop order, each counted from its trace.
pub fn brute_force_min(layer: &LayerShape, buffers: &BufferSizes, geom: &DramGeometry, mode: Mode) -> Option<u64> {
    let nests = all_nests();
    let mut seen = std::collections::HashSet::new();
    let mut best: Option<u64> = None;
    for th in layer.p..=layer.h {
        for tw in layer.q..=layer.w {
            for ti in 1..=layer.filter_depth() {
                for tj in 1..=layer.j {
                    let Ok(plan) = build_plan(layer, TilingFactors::new(layer, th, tw, ti, tj)) else {
                        continue;
                    };
                    let key = (
                        plan.ifm_h.windows().to_vec(),
                        plan.ifm_w.windows().to_vec(),
                        plan.depth.windows().to_vec(),
                        plan.filters.windows().to_vec(),
                    );
                    if !fits(&plan, buffers) || !seen.insert(key) {
                        continue;
                    }
                    for &n in &nests {
                        let mut t = Tally::default();
                        trace_of(&plan, n, mode, BurstMode::Burst, geom, &mut t);
                        best = Some(best.map_or(t.total(), |b| b.min(t.total())));
                    }
                }
            }
        }
    }
    best
}

/// Buffers just above the smallest feasible tile.
pub fn tight_buffers() -> impl Strategy<Value = (u64, u64, u64)> {
    (0u64..80, 0u64..60, 0u64..48)
}

pub fn buffers_for(layer: &LayerShape, extra: (u64, u64, u64)) -> BufferSizes {
    let window = u64::from(layer.p.max(layer.stride) * layer.q.max(layer.stride));
    BufferSizes {
        ifm: window + extra.0,
        wgh: u64::from(layer.p * layer.q) + extra.1,
        ofm: 1 + extra.2,
    }
}

pub fn exhaustive_config(mode: Mode, buffers: BufferSizes) -> SearchConfig {
    SearchConfig {
        steps: SearchSteps::uniform(1),
        buffers,
        schedule_mode: ScheduleMode::Exhaustive24,
        max_tj_first: false,
        ..SearchConfig::new(mode)
    }
}

pub fn request(write: bool, bank: u32, row: u32, column: u32, words: u32) -> DramRequest {
    DramRequest {
        op: if write { Op::Write } else { Op::Read },
        addr: PhysicalAddress {
            channel: 0,
            rank: 0,
            chip: 0,
            bank,
            row,
            column,
        },
        burst_words: words,
        payload_words: words,
        layer: 0,
        tile: TileId {
            data: DataType::Ifm,
            idx: [0, 0, 0],
        },
    }
}

pub fn random_requests() -> impl Strategy<Value = Vec<DramRequest>> {
    let one = (0u32..4, 0u32..6, 0u32..128, any::<bool>(), prop_oneof![Just(1u32), Just(8u32)]);
    proptest::collection::vec(one, 1..200).prop_map(|v| {
        v.into_iter()
            .map(|(bank, row, col, write, words)| request(write, bank, row, col / words * words, words))
            .collect()
    })
}

pub fn small_dram() -> DramGeometry {
    DramGeometry {
        banks_per_chip: 4,
        rows_per_bank: 64,
        columns_per_row: 128,
        ..DramGeometry::default()
    }
}

// Property bodies shared by the property suite and the acceptance gate.

/// Output windows partition the ofmap, depth and filter windows partition
/// their axes, and the non-halo ifmap extents partition the rows the
/// windows touch.
pub fn prop_tiling_coverage(plan: &TilingPlan) -> Result<(), TestCaseError> {
    let l = &plan.layer;
    let (m, n) = output_dims(l);
    prop_assert_eq!(plan.ofm_m.window_lens().iter().sum::<u32>(), m);
    prop_assert_eq!(plan.ofm_n.window_lens().iter().sum::<u32>(), n);
    prop_assert_eq!(plan.depth.window_lens().iter().sum::<u32>(), l.filter_depth());
    prop_assert_eq!(plan.filters.window_lens().iter().sum::<u32>(), l.j);
    let used = [(m - 1) * l.stride + l.p, (n - 1) * l.stride + l.q];
    for (g, used) in [&plan.ifm_h, &plan.ifm_w].into_iter().zip(used) {
        let end = g.windows().last().map(|w| w.0 + w.1).unwrap();
        prop_assert_eq!(g.windows()[0].0, 0);
        prop_assert_eq!(g.fetch_extents().iter().sum::<u32>(), end);
        prop_assert!(used <= end && end <= g.full);
    }
    Ok(())
}

/// No DRAM location is shared by two different tiles.
pub fn prop_mapping_injective(plan: &TilingPlan, nest: [Loop; 4], mode: Mode) -> Result<(), TestCaseError> {
    let geom = DramGeometry::default();
    let mut owner: HashMap<PhysicalAddress, TileId> = HashMap::new();
    for r in collect_trace(plan, nest, mode, BurstMode::NonBurst, &geom) {
        prop_assert!(r.addr.check(&geom).is_ok());
        let prev = *owner.entry(r.addr).or_insert(r.tile);
        prop_assert_eq!(prev, r.tile, "address {:?} shared", r.addr);
    }
    Ok(())
}

/// Search over every tiling the grid admits, without the largest-`Tj` rule.
fn unrestricted(mode: Mode) -> SearchConfig {
    SearchConfig {
        max_tj_first: false,
        ..SearchConfig::new(mode)
    }
}

/// Words moved by the best plan, or `None` when nothing fits.
pub fn best_words(layer: &LayerShape, cfg: &SearchConfig) -> Option<u64> {
    search_layer(layer, cfg).ok().map(|r| r.min_accesses.total())
}

/// `a` is at least as good as `b`, with infeasible counting as worst.
fn no_worse(a: Option<u64>, b: Option<u64>) -> bool {
    match (a, b) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(x), Some(y)) => x <= y,
    }
}

/// Larger buffers never raise the minimum.
pub fn prop_dse_buffer_monotone(layer: &LayerShape, extra: (u64, u64, u64), grow: u64) -> Result<(), TestCaseError> {
    let small = buffers_for(layer, extra);
    let big = BufferSizes {
        ifm: small.ifm + grow,
        wgh: small.wgh + grow,
        ofm: small.ofm + grow,
    };
    for mode in Mode::ALL {
        let a = best_words(
            layer,
            &SearchConfig {
                buffers: small,
                ..unrestricted(mode)
            },
        );
        let b = best_words(
            layer,
            &SearchConfig {
                buffers: big,
                ..unrestricted(mode)
            },
        );
        prop_assert!(no_worse(b, a), "{} {:?} {:?}", mode, b, a);
    }
    Ok(())
}

/// A coarser step searches a subset of the finer step's grid.
pub fn prop_dse_step_monotone(layer: &LayerShape, extra: (u64, u64, u64), step: u32, k: u32) -> Result<(), TestCaseError> {
    let buffers = buffers_for(layer, extra);
    for mode in Mode::ALL {
        let cfg = |s: u32| SearchConfig {
            buffers,
            steps: SearchSteps::uniform(s),
            ..unrestricted(mode)
        };
        let fine = best_words(layer, &cfg(step));
        let coarse = best_words(layer, &cfg(step * k));
        prop_assert!(no_worse(fine, coarse), "{} {:?} {:?}", mode, fine, coarse);
    }
    Ok(())
}

/// Replays agree, and the command identities and bus floor hold.
pub fn prop_simulator(trace: &[DramRequest]) -> Result<(), TestCaseError> {
    let geom = small_dram();
    let timing = DramTiming::default();
    let a = simulate(trace, &geom, &timing).unwrap();
    let b = simulate(trace, &geom, &timing).unwrap();
    prop_assert_eq!(&a, &b);
    check_identities(&a)?;
    let floor: u64 = trace
        .iter()
        .map(|r| {
            (u64::from(timing.t_bl) * u64::from(r.payload_words))
                .div_ceil(u64::from(geom.burst_length))
                .max(1)
        })
        .sum();
    prop_assert!(a.total_cycles >= floor);
    Ok(())
}

pub fn check_identities(s: &SimStats) -> Result<(), TestCaseError> {
    prop_assert_eq!(s.n_act, s.n_miss + s.n_conflict);
    prop_assert_eq!(s.n_pre, s.n_conflict);
    prop_assert_eq!(s.n_rd + s.n_wr, s.n_hit + s.n_miss + s.n_conflict);
    Ok(())
}

/// The access model and the generated trace agree, tile by tile.
pub fn prop_model_matches_trace(plan: &TilingPlan, nest: [Loop; 4], mode: Mode, burst: BurstMode) -> Result<(), TestCaseError> {
    let geom = DramGeometry::default();
    let trace = collect_trace(plan, nest, mode, burst, &geom);
    let schedule = Schedule {
        nest,
        origin: ScheduleOrigin::Exhaustive,
    };
    let model = layer_accesses(plan, &schedule, &geom, mode).for_burst_mode(burst);
    prop_assert_eq!(&dramflow::count_trace(&trace), &model);
    let mut t = Tally::default();
    for r in &trace {
        t.push(r).unwrap();
    }
    prop_assert_eq!(t.get(false, DataType::Ifm), model.rd_ifm);
    prop_assert_eq!(t.get(false, DataType::Wgh), model.rd_wgh);
    prop_assert_eq!(t.get(false, DataType::Ofm), model.rd_ofm);
    prop_assert_eq!(t.get(true, DataType::Ofm), model.wr_ofm);
    prop_assert_eq!(t.requests, model.requests(burst));
    Ok(())
}
