//! Reuse factors and the resulting reuse priority order of every layer.
//!
//! ```text
//! cargo run --example reuse_analysis -- vgg16
//! ```

use dramflow::net_model::{reuse_factors, reuse_priority_order};
use dramflow::NetworkModel;

fn main() -> dramflow::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "alexnet".into());
    let net = NetworkModel::bundled(&name)?;
    println!("{:<10} {:>10} {:>10} {:>10}  order", "layer", "ifm", "wgh", "ofm");
    for layer in &net.layers {
        let r = reuse_factors(layer);
        let order = reuse_priority_order(layer);
        println!("{:<10} {:>10} {:>10} {:>10}  {order}", layer.name, r.ifm, r.wgh, r.ofm);
    }
    Ok(())
}
