//! Harden a small model into the rewire-and-accumulate netlist and read
//! its structure: rewires, the expanding adder-tree width histogram,
//! bias adders, and ReLU gates.
//!
//!     cargo run --example harden_netlist

use rewacc::netlist::{build_netlist, dead_node_count, netlist_stats};
use rewacc::quant::{quantize_model, QuantConfig};
use rewacc::toygen;

fn main() -> rewacc::Result<()> {
    let ir = toygen::toy_model(7);
    let qm = quantize_model(&ir, &QuantConfig::default())?;
    let netlist = build_netlist(&qm)?;
    for w in &netlist.warnings {
        println!("warning: {w}");
    }

    let stats = netlist_stats(&netlist);
    println!(
        "model {}: {} nodes, k_fe = {}, dead nodes = {}",
        qm.name,
        netlist.node_count(),
        netlist.k_fe,
        dead_node_count(&netlist)
    );
    println!();
    println!(
        "{:<10} {:>8} {:>8} {:>6} {:>6} {:>10}  adders by size",
        "group", "rewires", "adders", "bias", "relu", "bit-adders"
    );
    for g in &stats.per_layer {
        let adders: usize = g.adders_by_width.values().sum();
        let hist: Vec<String> =
            g.adders_by_width.iter().map(|(w, c)| format!("{c}x{w}b")).collect();
        println!(
            "{:<10} {:>8} {:>8} {:>6} {:>6} {:>10}  {}",
            g.name,
            g.rewires,
            adders,
            g.bias_adders,
            g.relu_gates,
            g.bit_adders,
            hist.join(" ")
        );
    }
    println!(
        "total: {} bit-adders, {} rewires, {} relu gates",
        stats.total.bit_adders, stats.total.rewires, stats.total.relu_gates
    );
    println!();

    // every reduction tree obeys adders = leaves - 1
    let conv = &stats.per_layer[1];
    let trees = 8 * 8 * 4; // first conv output elements
    let adders: usize = conv.adders_by_width.values().sum();
    println!(
        "first conv: {} trees, {} leaves, {} adders = leaves - trees",
        trees, conv.rewires, adders
    );
    assert_eq!(adders, conv.rewires - trees);
    Ok(())
}
