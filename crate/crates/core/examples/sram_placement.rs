//! Occupancy of the on-chip buffers and the spread of words and filters
//! over SRAM banks.

use dramflow::sram_map::{assign_filters, buffer_usage, place_tile, SramGeometry};
use dramflow::{search_network, Mode, NetworkModel, SearchConfig};

fn main() -> dramflow::Result<()> {
    let geom = SramGeometry::default();
    let net = NetworkModel::bundled("alexnet")?;
    for r in search_network(&net, &SearchConfig::new(Mode::Romanet))? {
        let usage = buffer_usage(&r.plan, &geom);
        let cells: Vec<String> = usage
            .iter()
            .map(|u| {
                format!(
                    "{} {:>6} B ({:>4.1}% rows idle)",
                    u.data,
                    u.tile_bytes,
                    100.0 * u.unused_row_fraction
                )
            })
            .collect();
        println!("{:<6} {}", r.plan.layer.name, cells.join("  "));
    }

    let tile = place_tile(20, &geom)?;
    println!("20-word tile: {:?}", tile.assignments);
    println!("12 filters over {} banks: {:?}", geom.banks, assign_filters(12, geom.banks));
    Ok(())
}
