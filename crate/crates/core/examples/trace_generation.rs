//! Generate the request trace of a small layer, print it, and check the
//! tallies against the analytical counts.

use dramflow::access_model::layer_accesses;
use dramflow::dram_map::allocate_regions;
use dramflow::trace_gen::{generate_layer_trace, TextTraceWriter};
use dramflow::{count_trace, search_layer, BurstMode, Mode, NetworkModel, SearchConfig};

fn main() -> dramflow::Result<()> {
    let net = NetworkModel::bundled("toy")?;
    let mode = Mode::Romanet;
    let cfg = SearchConfig::new(mode);
    let best = search_layer(&net.layers[0], &cfg)?;
    println!("schedule {} factors {:?}", best.schedule, best.plan.factors);

    let mut regions = allocate_regions(std::slice::from_ref(&best.plan), mode, &cfg.geometry, false)?;
    let mut trace = Vec::new();
    generate_layer_trace(&best.plan, &best.schedule, mode, BurstMode::Burst, regions.layer_mut(0), &mut trace)?;

    let mut text = TextTraceWriter::new(std::io::stdout().lock());
    for r in &trace {
        dramflow::TraceSink::push(&mut text, r)?;
    }

    let counted = count_trace(&trace);
    let model = layer_accesses(&best.plan, &best.schedule, &cfg.geometry, mode).for_burst_mode(BurstMode::Burst);
    println!(
        "{} requests, {} words, model agrees: {}",
        trace.len(),
        counted.total(),
        counted == model
    );
    Ok(())
}
