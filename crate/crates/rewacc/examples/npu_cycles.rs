//! The final-layer NPU: functional matrix-vector execution with
//! swappable task weights, and the systolic cycle model with its
//! published anchor point.
//!
//!     cargo run --example npu_cycles

use rewacc::npu::{npu_execute, systolic_cycles, ArrayConfig, GemmDims};

fn main() -> rewacc::Result<()> {
    // functional execution: stream new weights between calls
    let features = vec![0.5, -1.0, 2.0, 0.25];
    let task_a = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]; // picks features 0 and 2
    let task_b = vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]; // picks features 1 and 3
    println!("task A logits: {:?}", npu_execute(&task_a, 2, &features)?);
    println!("task B logits: {:?}", npu_execute(&task_b, 2, &features)?);
    println!("same features, different classifier: that is the flexible last layer");
    println!();

    // the classifier GEMM on its output-stationary array
    let cfg = ArrayConfig::output_stationary(1000, 1);
    let dims = GemmDims { m: 1000, n: 1, k: 1280 };
    let r = systolic_cycles(&cfg, &dims)?;
    println!(
        "classifier 1000x1x1280 on a 1000x1 output-stationary array: {} cycles ({} tile, utilization {:.3})",
        r.cycles, r.tiles, r.utilization
    );
    println!("  = K + rows + cols - 2 under skewed operand streaming");
    println!();

    // a weight-stationary tile study on one conv layer
    let ws = ArrayConfig::weight_stationary(128, 128);
    for k in [160usize, 80] {
        let d = GemmDims { m: 960, n: 49, k };
        let r = systolic_cycles(&ws, &d)?;
        println!(
            "960x49xK={k:<4} on 128x128 weight-stationary: {:>6} cycles, {} folds",
            r.cycles, r.tiles
        );
    }
    println!("  halving K drops a whole fold here: the 2:4 sweet spot");
    Ok(())
}
