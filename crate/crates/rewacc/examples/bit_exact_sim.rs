//! The central functional check: netlist simulation against the
//! independent fixed-point oracle (bit-exact), plus distance to the
//! double-precision reference and classifier argmax agreement.
//!
//!     cargo run --example bit_exact_sim

use rewacc::netlist::build_netlist;
use rewacc::npu::npu_execute;
use rewacc::quant::{quantize_model, QuantConfig};
use rewacc::sim::{float_reference, oracle_forward, simulate, FixedTensor, SimOptions};
use rewacc::toygen;

fn main() -> rewacc::Result<()> {
    let cfg = QuantConfig::default();
    let mut runs = 0usize;
    let mut mismatches = 0usize;
    let mut argmax_agree = 0usize;
    let mut argmax_total = 0usize;
    let mut worst_err: f64 = 0.0;

    for seed in 0..40u64 {
        let ir = toygen::random_model(seed);
        let qm = quantize_model(&ir, &cfg)?;
        let netlist = build_netlist(&qm)?;
        for input_seed in 0..4u64 {
            // drive both paths from the same real-valued input
            let reals = toygen::random_real_input(900 + seed * 4 + input_seed, ir.input, qm.activation);
            let input = FixedTensor::from_reals(ir.input, qm.activation, &reals)?;

            let sim = simulate(&netlist, &input, &SimOptions::default())?;
            let oracle = oracle_forward(&qm, &input)?;
            runs += 1;
            if sim.features != oracle.features || sim.layer_outputs != oracle.layer_outputs {
                mismatches += 1;
            }

            // distance to the double-precision reference
            let (_, float_features) = float_reference(&ir, &reals)?;
            let got: Vec<f64> =
                sim.features.iter().map(|c| qm.activation.dequantize(*c)).collect();
            for (a, b) in float_features.iter().zip(got.iter()) {
                worst_err = worst_err.max((a - b).abs());
            }

            // classifier argmax agreement (measured, not asserted: the
            // quantization error bound is the real contract)
            let quant_logits = npu_execute(&qm.classifier, qm.classifier_out, &got)?;
            let float_logits = npu_execute(&qm.classifier, qm.classifier_out, &float_features)?;
            let argmax = |v: &[f64]| {
                v.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).map(|(i, _)| i)
            };
            argmax_total += 1;
            if argmax(&quant_logits) == argmax(&float_logits) {
                argmax_agree += 1;
            }
        }
    }

    println!("{runs} simulations, {mismatches} oracle mismatches (must be 0)");
    println!(
        "worst |feature - float reference| = {worst_err:.4} \
         (random desk models saturate the Q3.5 range freely; the \
         error-shrinks-with-fraction-bits check lives in the simulator tests)"
    );
    println!(
        "classifier argmax agreement vs float reference: {argmax_agree}/{argmax_total} ({:.1}%)",
        100.0 * argmax_agree as f64 / argmax_total as f64
    );
    assert_eq!(mismatches, 0, "netlist must match the oracle bit-exactly");
    Ok(())
}
