//! Describe a network in code, save it as JSON and push it through the
//! flow with smaller buffers.

use dramflow::dse::BufferSizes;
use dramflow::net_model::BitWidths;
use dramflow::pipeline::{run_compare, Experiment};
use dramflow::{BurstMode, HardwareConfig, LayerShape, NetworkModel};

fn main() -> dramflow::Result<()> {
    let bits = BitWidths::uniform(16);
    let layers = vec![
        LayerShape::conv("stem", 64, 64, 3, 3, 3, 32, 2)?.with_bits(bits),
        LayerShape::depthwise("dw", 32, 32, 32, 3, 3, 1)?.with_bits(bits),
        LayerShape::conv("pw", 32, 32, 32, 1, 1, 64, 1)?.with_bits(bits),
        LayerShape::fc("head", 64 * 32 * 32, 10)?.with_bits(bits),
    ];
    let net = NetworkModel::new("tiny", layers)?;
    let path = std::env::temp_dir().join("tiny_network.json");
    std::fs::write(&path, net.to_json())?;
    let net = NetworkModel::load(&path)?;

    let mut hw = HardwareConfig::bundled();
    hw.buffers = BufferSizes::uniform(16 * 1024);
    let cmp = run_compare(&Experiment::new(net, hw), BurstMode::Burst)?;
    for m in cmp.summary() {
        println!("{:<17} {:>7.2}%", m.metric, m.reduction_pct);
    }
    Ok(())
}
