//! Minimum DRAM words as the on-chip buffers grow.

use dramflow::pipeline::{run_dse, sweep_point, Experiment, SweepAxis};
use dramflow::{HardwareConfig, Mode, NetworkModel};

fn main() -> dramflow::Result<()> {
    let exp = Experiment::new(NetworkModel::bundled("alexnet")?, HardwareConfig::bundled());
    println!("{:>6} {:>12} {:>12}", "KB", "romanet", "baseline");
    for kb in [16, 32, 64, 128, 256] {
        let e = sweep_point(&exp, SweepAxis::Buffer, kb)?;
        let words = |mode| -> dramflow::Result<u64> { Ok(run_dse(&e, mode)?.layers.iter().map(|l| l.min_accesses.total()).sum()) };
        println!("{kb:>6} {:>12} {:>12}", words(Mode::Romanet)?, words(Mode::Baseline)?);
    }
    Ok(())
}
