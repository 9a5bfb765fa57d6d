//! The on-disk model container: JSON manifest plus binary blob, for both
//! real-valued and quantized models, with a bit-exact reload check.
//!
//!     cargo run --example save_and_load

use std::fs;

use rewacc::format::{load_model, load_quantized, save_model, save_quantized};
use rewacc::netlist::build_netlist;
use rewacc::quant::{quantize_model, QuantConfig};
use rewacc::sim::{simulate, SimOptions};
use rewacc::toygen;

fn main() -> rewacc::Result<()> {
    let dir = std::env::temp_dir().join("rewacc_example_io");
    fs::create_dir_all(&dir)?;

    // save and reload a real-valued model
    let ir = toygen::toy_model(21);
    let model_path = dir.join("toy.model");
    save_model(&ir, &model_path)?;
    let reloaded = load_model(&model_path)?;
    println!(
        "saved {} ({} layers) -> {} + {}",
        ir.name,
        ir.layers.len(),
        model_path.display(),
        dir.join("toy.weights").display()
    );
    let manifest = fs::read_to_string(&model_path)?;
    println!("manifest head:");
    for line in manifest.lines().take(8) {
        println!("  {line}");
    }

    // quantize, save the folded model, reload it
    let qm = quantize_model(&reloaded, &QuantConfig::default())?;
    let q_path = dir.join("toy.qmodel");
    save_quantized(&qm, &q_path)?;
    let qm2 = load_quantized(&q_path)?;
    assert_eq!(qm.layers, qm2.layers);
    println!();
    println!("quantized model reloads identically ({} layers)", qm2.layers.len());

    // the reloaded model simulates bit-identically
    let n1 = build_netlist(&qm)?;
    let n2 = build_netlist(&qm2)?;
    let input = toygen::random_input(5, reloaded.input, qm.activation);
    let t1 = simulate(&n1, &input, &SimOptions::default())?;
    let t2 = simulate(&n2, &input, &SimOptions::default())?;
    assert_eq!(t1.features, t2.features);
    println!("netlists from the original and reloaded models agree bit-exactly");
    Ok(())
}
