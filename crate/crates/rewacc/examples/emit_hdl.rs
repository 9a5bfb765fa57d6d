//! Emit the structural HDL for a tiny hardened model and show the pieces:
//! rewiring as bit selects, adder/subtractor cells, the two-gate ReLU
//! mask, and requantizers.
//!
//!     cargo run --example emit_hdl

use rewacc::hdl::emit_hdl;
use rewacc::ir::{ConvSpec, LayerSpec, ModelIR, TensorShape};
use rewacc::netlist::build_netlist;
use rewacc::quant::{quantize_model, QuantConfig};

fn main() -> rewacc::Result<()> {
    // 1x1 conv over 4 channels: weights 1, -0.5, 0.25, 2 exercise the
    // identity wiring, a subtractor, a right shift, and a left shift.
    let spec = ConvSpec {
        r: 1,
        s: 1,
        in_channels: 4,
        out_channels: 1,
        stride: 1,
        padding: 0,
        groups: 1,
    };
    let ir = ModelIR {
        name: "demo".into(),
        input: TensorShape { h: 1, w: 1, c: 4 },
        layers: vec![
            LayerSpec::Conv { spec, weights: vec![1.0, -0.5, 0.25, 2.0] },
            LayerSpec::Relu,
            LayerSpec::Linear { out_features: 1, in_features: 1, weights: vec![1.0] },
        ],
        classifier: 2,
    };
    let qm = quantize_model(&ir, &QuantConfig::default())?;
    let netlist = build_netlist(&qm)?;
    let text = emit_hdl(&netlist, "demo_extractor");
    println!("{text}");

    let again = emit_hdl(&netlist, "demo_extractor");
    assert_eq!(text, again, "emission must be byte-deterministic");
    eprintln!("// {} bytes, deterministic", text.len());
    Ok(())
}
