//! Where the first ifmap block of a layer lands in DRAM under each policy.

use dramflow::access_model::TileId;
use dramflow::dram_map::{allocate_regions, write_address_dump};
use dramflow::{build_plan, DataType, DramGeometry, Mode, NetworkModel, TilingFactors};

fn main() -> dramflow::Result<()> {
    let geom = DramGeometry::default();
    let net = NetworkModel::bundled("vgg16")?;
    let layer = &net.layers[1];
    let plan = build_plan(layer, TilingFactors::new(layer, 28, 28, 16, 64))?;

    for mode in Mode::ALL {
        let mut regions = allocate_regions(std::slice::from_ref(&plan), mode, &geom, false)?;
        let alloc = regions.layer_mut(0);
        let words = 2048;
        let base = alloc.block_base(
            TileId {
                data: DataType::Ifm,
                idx: [0, 0, 0],
            },
            words,
        )?;
        let addrs = (base..base + words)
            .step_by(256)
            .map(|a| alloc.physical(a))
            .collect::<dramflow::Result<Vec<_>>>()?;
        println!("{mode}: region {:?}", alloc.region(DataType::Ifm));
        write_address_dump(std::io::stdout(), &addrs)?;
    }
    Ok(())
}
