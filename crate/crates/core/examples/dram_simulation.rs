//! Row-buffer outcomes and cycle counts for a few hand-built request streams.

use dramflow::access_model::TileId;
use dramflow::dram_sim::Simulator;
use dramflow::trace_gen::Op;
use dramflow::{simulate, DataType, DramGeometry, DramRequest, DramTiming, PhysicalAddress};

fn read(bank: u32, row: u32, column: u32) -> DramRequest {
    DramRequest {
        op: Op::Read,
        addr: PhysicalAddress {
            channel: 0,
            rank: 0,
            chip: 0,
            bank,
            row,
            column,
        },
        burst_words: 8,
        payload_words: 8,
        layer: 0,
        tile: TileId {
            data: DataType::Ifm,
            idx: [0, 0, 0],
        },
    }
}

fn main() -> dramflow::Result<()> {
    let geom = DramGeometry::default();
    let timing = DramTiming::default();

    let mut sim = Simulator::new(geom, timing);
    for r in [read(0, 5, 0), read(0, 5, 8), read(0, 9, 0), read(1, 5, 0)] {
        let outcome = sim.serve(&r)?;
        println!("bank {} row {:>2}: {outcome:?}", r.addr.bank, r.addr.row);
    }

    let same_row: Vec<_> = (0..64).map(|k| read(0, 3, 8 * k)).collect();
    let striped: Vec<_> = (0..64).map(|k| read(k % 8, 0, 8 * (k / 8))).collect();
    let thrash: Vec<_> = (0..64).map(|k| read(0, k % 2, 0)).collect();
    for (name, trace) in [("one row", same_row), ("striped", striped), ("thrash", thrash)] {
        let s = simulate(&trace, &geom, &timing)?;
        println!(
            "{name:<8} {:>5} cycles  hit/miss/conflict {}/{}/{}  {:.2} GB/s",
            s.total_cycles,
            s.n_hit,
            s.n_miss,
            s.n_conflict,
            s.throughput() / 1e9
        );
    }
    Ok(())
}
