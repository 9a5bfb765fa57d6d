//! The analytical area model: calibrate the per-bit cost on one
//! synthesized reference block, predict the others, and price the
//! bundled MobileNetV2 in both linear and detailed modes.
//!
//!     cargo run --example area_model

use rewacc::cost::{
    adder_tree_bits, calibrate_alpha, model_area, AreaMode, AreaParams, REFERENCE_CONV_AREAS,
};
use rewacc::mobilenet;

fn main() -> rewacc::Result<()> {
    // fit alpha on the 16-leaf 8-bit block
    let alpha = calibrate_alpha(&[(16, 8, 29.4)])?;
    println!("alpha = {alpha:.4} um^2 per full-adder bit (fit on the 16-leaf 8-bit block)");
    println!();
    println!("{:<10} {:>6} {:>10} {:>10} {:>8}", "block", "bits", "predicted", "reference", "error");
    for r in REFERENCE_CONV_AREAS.iter().filter(|r| r.name.starts_with("1x1")) {
        let bits = adder_tree_bits(r.leaves, 8).total_bits;
        let want = r.areas[3].1;
        let got = alpha * bits as f64;
        println!(
            "{:<10} {:>6} {:>9.1} {:>10.1} {:>7.1}%",
            r.name,
            bits,
            got,
            want,
            (got - want).abs() / want * 100.0
        );
    }
    println!();

    // narrow activations shrink every adder
    for r in REFERENCE_CONV_AREAS.iter().filter(|r| r.name == "1x1x64") {
        for (bits, want) in r.areas {
            let got = alpha * adder_tree_bits(r.leaves, bits).total_bits as f64;
            println!("1x1x64 at {bits}-bit: predicted {got:>6.1} um^2, synthesized {want}");
        }
    }
    println!("(the linear bit model over-predicts narrow widths; synthesis squeezes them harder)");
    println!();

    // whole-model area, both modes
    let ir = mobilenet::model_ir(0);
    let params = AreaParams::default();
    println!("{:>8} {:>16} {:>16}", "sparsity", "linear mm^2", "detailed mm^2");
    for s in [0.0, 0.2, 0.4, 0.6, 0.8] {
        let lin = model_area(&ir, s, 8, &params, AreaMode::Linear)?;
        let det = model_area(&ir, s, 8, &params, AreaMode::Detailed)?;
        println!("{s:>8.1} {:>16.1} {:>16.1}", lin.extractor_mm2, det.extractor_mm2);
    }
    let total = model_area(&ir, 0.6, 8, &params, AreaMode::Linear)?;
    println!();
    println!(
        "one accelerator at 60% sparsity: extractor {:.1} + npu {:.2} + buffers {:.2} = {:.1} mm^2",
        total.extractor_mm2, total.npu_mm2, total.buffers_mm2, total.total_mm2
    );
    Ok(())
}
