//! Split one layer into tiles and show the window grids and buffer needs.

use dramflow::tiling::{buffer_footprint, build_plan, TilingFactors};
use dramflow::NetworkModel;

fn main() -> dramflow::Result<()> {
    let net = NetworkModel::bundled("alexnet")?;
    let conv1 = &net.layers[0];
    let plan = build_plan(conv1, TilingFactors::new(conv1, 59, 59, 3, 48))?;

    println!(
        "{}: {}x{}x{} -> {} filters, stride {}",
        conv1.name, conv1.h, conv1.w, conv1.i, conv1.j, conv1.stride
    );
    println!("rows:    windows {:?}", plan.ifm_h.window_lens());
    println!("         fetched {:?} (halo {})", plan.ifm_h.fetch_extents(), plan.ifm_h.halo);
    println!("cols:    windows {:?}", plan.ifm_w.window_lens());
    println!("ofm:     {:?} x {:?}", plan.ofm_m.window_lens(), plan.ofm_n.window_lens());
    println!("filters: {:?}", plan.filters.window_lens());

    let f = buffer_footprint(&plan);
    println!("buffers: ifm {} B, wgh {} B, ofm {} B", f.ifm, f.wgh, f.ofm);
    Ok(())
}
