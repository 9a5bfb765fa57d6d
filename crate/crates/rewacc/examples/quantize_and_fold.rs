//! Power-of-two weight quantization and batch-norm folding, element by
//! element: codes, rounding behavior, the relative-error bound, and what
//! folding does to exponents.
//!
//!     cargo run --example quantize_and_fold

use rewacc::fixed::FixedPointFormat;
use rewacc::ir::BatchNormSpec;
use rewacc::quant::{fold_batchnorm, quantize_batchnorm, quantize_po2, QuantConfig};

fn main() -> rewacc::Result<()> {
    let cfg = QuantConfig::default();
    println!(
        "config: activations {}, exponents [{}, {}], zero threshold {:.2e}",
        cfg.activation, cfg.exp_min, cfg.exp_max, cfg.zero_threshold
    );
    println!();

    println!("weight -> po2 code (value), relative error");
    for w in [0.3, 0.75, -0.11, 2.9, 0.0013, 1e-4] {
        let q = quantize_po2(w, &cfg);
        let rel = if w != 0.0 { (w - q.value()).abs() / w.abs() } else { 0.0 };
        println!("  {w:>9.5} -> {q:?} ({:.5}), {:.1}%", q.value(), rel * 100.0);
    }
    println!("  worst case is the interval midpoint: error <= 1/3");
    println!();

    // activation quantization: round-to-nearest-even, then saturate
    let fmt = FixedPointFormat::q3_5();
    println!("value -> {fmt} code (dequantized)");
    for x in [1.5, 0.015625, 100.0, -3.99, -4.2] {
        let code = fmt.quantize(x);
        println!("  {x:>9.5} -> {code:>5} ({:.5})", fmt.dequantize(code));
    }
    println!();

    // fold a batch norm into a 1x1 conv
    let bn = BatchNormSpec {
        gamma: vec![1.0, -2.0],
        beta: vec![0.0, 1.0],
        mean: vec![0.0, 0.25],
        variance: vec![1.0 - 1e-5, 0.25],
        epsilon: 1e-5,
    };
    let acc = FixedPointFormat::new(8, 5)?;
    let (s, b) = quantize_batchnorm(&bn, &cfg, acc)?;
    println!("batch norm: scale codes {s:?}");
    println!("            offset codes {b:?} (at {acc})");

    let spec = rewacc::ir::ConvSpec {
        r: 1,
        s: 1,
        in_channels: 3,
        out_channels: 2,
        stride: 1,
        padding: 0,
        groups: 1,
    };
    let weights: Vec<_> = [0.5, -0.25, 1.0, 0.5, -0.25, 1.0]
        .iter()
        .map(|w| quantize_po2(*w, &cfg))
        .collect();
    let offsets: Vec<f64> = (0..2).map(|m| bn.offset(m)).collect();
    let folded = fold_batchnorm(spec, &weights, &s, &offsets, &cfg, true)?;
    println!("folded weights (channel scale multiplies every exponent):");
    for m in 0..2 {
        let per = spec.weights_per_filter();
        println!("  channel {m}: {:?}", &folded.weights[m * per..(m + 1) * per]);
    }
    println!("bias codes {:?}, clamped exponents {}", folded.bias, folded.clamped_exponents);
    Ok(())
}
