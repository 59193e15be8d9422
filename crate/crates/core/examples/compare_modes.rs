//! Full comparison of both modes on one network, written as CSV files.
//!
//! ```text
//! cargo run --release --example compare_modes -- vgg16 out
//! ```

use std::path::PathBuf;

use dramflow::pipeline::{run_compare, write_comparison, Experiment};
use dramflow::{BurstMode, HardwareConfig, NetworkModel};

fn main() -> dramflow::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "alexnet".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out".into()));

    let exp = Experiment::new(NetworkModel::bundled(&name)?, HardwareConfig::bundled());
    for burst in BurstMode::ALL {
        let cmp = run_compare(&exp, burst)?;
        println!("{name}, {burst}:");
        for m in cmp.summary() {
            println!(
                "  {:<17} {:>16.2} {:>16.2} {:>7.2}%",
                m.metric, m.romanet, m.baseline, m.reduction_pct
            );
        }
        for path in write_comparison(&out, &cmp)? {
            println!("  wrote {}", path.display());
        }
    }
    Ok(())
}
