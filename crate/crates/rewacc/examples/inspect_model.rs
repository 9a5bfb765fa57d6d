//! Load the bundled MobileNetV2-shape model and walk its layer graph:
//! shapes, Toeplitz (GEMM) dims, and the feature-extractor contract.
//!
//!     cargo run --example inspect_model

use rewacc::ir::LayerSpec;
use rewacc::mobilenet;

fn main() -> rewacc::Result<()> {
    let ir = mobilenet::model_ir(0);
    ir.validate()?;
    let shapes = ir.infer_shapes()?;
    let convs = ir.conv_toeplitz_dims()?;

    println!("model {}   input {}", ir.name, ir.input);
    println!("{:>4}  {:<16} {:>12}  gemm (M x RSC x PQ)", "id", "kind", "output");
    let conv_dims: std::collections::BTreeMap<usize, _> =
        convs.iter().map(|(i, spec, t)| (*i, (spec, t))).collect();
    for (i, layer) in ir.layers.iter().enumerate() {
        let gemm = conv_dims
            .get(&i)
            .map(|(spec, t)| {
                let tag = if spec.is_depthwise() { " (dw)" } else { "" };
                format!("{} x {} x {}{}", t.m, t.rsc, t.pq, tag)
            })
            .unwrap_or_default();
        let kind = match layer {
            LayerSpec::EltwiseAdd { source } => format!("eltwise_add <-{source}"),
            other => other.kind().to_string(),
        };
        println!("{i:>4}  {kind:<16} {:>12}  {gemm}", format!("{}", shapes[i]));
    }
    println!();
    println!("feature extractor outputs (k_fe): {}", ir.k_fe()?);
    println!("convolutions: {} ({} depthwise)", convs.len(),
        convs.iter().filter(|(_, s, _)| s.is_depthwise()).count());

    // A time-multiplexed accelerator double-buffers the worst layer's
    // inputs and outputs; a fully unrolled one stores only the feature
    // vector.
    let mut worst = (0, 0usize);
    let mut prev = ir.input;
    for (i, shape) in shapes.iter().enumerate() {
        let double_buffer = prev.elements() + shape.elements();
        if double_buffer > worst.1 {
            worst = (i, double_buffer);
        }
        prev = *shape;
    }
    println!(
        "worst double-buffer (layer {}): {} elements vs a {}-element feature buffer ({}x)",
        worst.0,
        worst.1,
        ir.k_fe()?,
        worst.1 / ir.k_fe()?
    );
    Ok(())
}
