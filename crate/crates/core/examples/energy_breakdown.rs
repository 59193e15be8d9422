//! Per-layer DRAM energy split into activate, precharge, read, write and
//! standby for a full simulated run.
//!
//! ```text
//! cargo run --release --example energy_breakdown -- mobilenet baseline
//! ```

use dramflow::pipeline::{run_sim, Experiment};
use dramflow::{BurstMode, HardwareConfig, Mode, NetworkModel};

fn main() -> dramflow::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "alexnet".into());
    let mode = match args.next().as_deref() {
        Some("baseline") => Mode::Baseline,
        _ => Mode::Romanet,
    };
    let exp = Experiment::new(NetworkModel::bundled(&name)?, HardwareConfig::bundled());
    let run = run_sim(&exp, mode, BurstMode::Burst)?;

    println!(
        "{:<10} {:>10} {:>10} {:>10} {:>10} {:>10}   (uJ)",
        "layer", "act", "pre", "rd", "wr", "stby"
    );
    let row = |name: &str, e: &dramflow::energy_model::EnergyBreakdown| {
        println!(
            "{name:<10} {:>10.1} {:>10.1} {:>10.1} {:>10.1} {:>10.1}",
            e.act / 1e6,
            e.pre / 1e6,
            e.rd / 1e6,
            e.wr / 1e6,
            e.stby / 1e6
        )
    };
    for l in &run.layers {
        row(&l.name, &l.energy);
    }
    row("total", &run.energy());
    Ok(())
}
