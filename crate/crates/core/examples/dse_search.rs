//! Search tiling factors and loop schedules for every layer in both modes.
//!
//! ```text
//! cargo run --release --example dse_search -- mobilenet
//! ```

use dramflow::{search_network, Mode, NetworkModel, SearchConfig};

fn main() -> dramflow::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "alexnet".into());
    let net = NetworkModel::bundled(&name)?;
    let romanet = search_network(&net, &SearchConfig::new(Mode::Romanet))?;
    let baseline = search_network(&net, &SearchConfig::new(Mode::Baseline))?;

    for (r, b) in romanet.iter().zip(&baseline) {
        let f = &r.plan.factors;
        println!(
            "{:<10} {:<10} Th={:<3} Tw={:<3} Ti={:<4} Tj={:<4} {:>11} words (baseline {:>11})",
            r.plan.layer.name,
            r.schedule.nest_string(),
            f.th,
            f.tw,
            f.ti,
            f.tj,
            r.min_accesses.total(),
            b.min_accesses.total()
        );
    }
    let total = |v: &[dramflow::LayerPlanResult]| v.iter().map(|x| x.min_accesses.total()).sum::<u64>();
    let (tr, tb) = (total(&romanet), total(&baseline));
    println!("total {tr} vs {tb}: {:.1}% fewer words", 100.0 * (1.0 - tr as f64 / tb as f64));
    Ok(())
}
