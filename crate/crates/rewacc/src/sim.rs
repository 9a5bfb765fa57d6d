//! Bit-exact evaluation of hardened netlists, plus two independent
//! references: a fixed-point loop nest with the identical leaf semantics
//! (the equivalence oracle) and a double-precision forward pass (for
//! error measurement).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{fits_width, relu_gate, shift_code, FixedPointFormat};
use crate::ir::{LayerSpec, ModelIR, TensorShape};
use crate::netlist::{NetNode, Netlist, NodeId};
use crate::quant::{Po2Weight, QuantLayer, QuantizedModel};

/// An activation tensor of fixed-point codes in flat (h, w, c) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedTensor {
    pub shape: TensorShape,
    pub format: FixedPointFormat,
    pub codes: Vec<i64>,
}

impl FixedTensor {
    pub fn from_reals(shape: TensorShape, format: FixedPointFormat, values: &[f64]) -> Result<Self> {
        if values.len() != shape.elements() {
            return Err(Error::Sim(format!(
                "value count {} does not match shape {shape}",
                values.len()
            )));
        }
        Ok(Self { shape, format, codes: values.iter().map(|v| format.quantize(*v)).collect() })
    }

    pub fn to_reals(&self) -> Vec<f64> {
        self.codes.iter().map(|c| self.format.dequantize(*c)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.codes.len() != self.shape.elements() {
            return Err(Error::Sim("code count does not match shape".into()));
        }
        if let Some(c) = self.codes.iter().find(|c| !self.format.contains_code(**c)) {
            return Err(Error::Sim(format!("code {c} outside {}", self.format)));
        }
        Ok(())
    }
}

/// Per-layer activation tensors and the final feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub layer_outputs: Vec<FixedTensor>,
    pub features: Vec<i64>,
    /// Full node-value map, captured only on request.
    pub node_values: Option<Vec<i64>>,
}

impl SimTrace {
    /// JSON export with per-layer hex codes (two's complement at the
    /// activation width).
    pub fn export_json(&self) -> serde_json::Value {
        let hex = |t: &FixedTensor| -> Vec<String> {
            let mask = (1u64 << t.format.total_bits()) - 1;
            t.codes.iter().map(|c| format!("0x{:02x}", (*c as u64) & mask)).collect()
        };
        serde_json::json!({
            "layers": self
                .layer_outputs
                .iter()
                .map(|t| {
                    serde_json::json!({
                        "shape": t.shape,
                        "format": format!("{}", t.format),
                        "codes_hex": hex(t),
                    })
                })
                .collect::<Vec<_>>(),
            "features": self.features,
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    /// Capture every node's value (memory scales with netlist size).
    pub capture_node_values: bool,
}

/// Combine two operand wires under the netlist's sign bookkeeping: like
/// signs add (the shared sign lives on the result node), mixed signs
/// subtract so the result comes out positive.
fn combine(values: &[i64], negated: &[bool], lhs: NodeId, rhs: NodeId) -> i64 {
    match (negated[lhs], negated[rhs]) {
        (a, b) if a == b => values[lhs] + values[rhs],
        (true, false) => values[rhs] - values[lhs],
        (false, true) => values[lhs] - values[rhs],
        _ => unreachable!(),
    }
}

/// Evaluate the DAG in id order with exact integer arithmetic. Every
/// adder asserts that its exact sum fits its declared width.
pub fn simulate(netlist: &Netlist, input: &FixedTensor, opts: &SimOptions) -> Result<SimTrace> {
    input.validate()?;
    if input.shape != netlist.input_shape {
        return Err(Error::Sim(format!(
            "input shape {} does not match netlist input {}",
            input.shape, netlist.input_shape
        )));
    }
    if input.format != netlist.activation {
        return Err(Error::Sim(format!(
            "input format {} does not match netlist activation {}",
            input.format, netlist.activation
        )));
    }

    let nodes = &netlist.nodes;
    let mut values = vec![0i64; nodes.len()];
    let mut features = vec![0i64; netlist.k_fe];
    for id in 0..nodes.len() {
        let value = match &nodes[id] {
            NetNode::InputTap { h, w, c } => input.codes[input.shape.index(*h, *w, *c)],
            NetNode::Rewire { source, shift, .. } => {
                shift_code(values[*source], *shift, netlist.widths[id])
            }
            NetNode::Add { width, lhs, rhs } => {
                let sum = combine(&values, &netlist.negated, *lhs, *rhs);
                if !fits_width(sum, *width) {
                    return Err(Error::Sim(format!("adder {id} overflowed {width} bits")));
                }
                sum
            }
            NetNode::Passthrough { source } => values[*source],
            NetNode::BiasAdd { width, source, bias } => {
                let a = source
                    .map(|s| if netlist.negated[s] { -values[s] } else { values[s] })
                    .unwrap_or(0);
                let sum = a + bias;
                if !fits_width(sum, *width) {
                    return Err(Error::Sim(format!("bias adder {id} overflowed {width} bits")));
                }
                sum
            }
            NetNode::ReluGate { source } => relu_gate(values[*source], netlist.widths[*source]),
            NetNode::Requantize { source, from_frac, format } => {
                let v = values[*source];
                let dropped = from_frac.saturating_sub(format.frac_bits);
                format.saturate(v >> dropped)
            }
            NetNode::EltAdd { width, lhs, rhs } => {
                let sum = combine(&values, &netlist.negated, *lhs, *rhs);
                if !fits_width(sum, *width) {
                    return Err(Error::Sim(format!("residual adder {id} overflowed {width} bits")));
                }
                sum
            }
            NetNode::OutputTap { index, source } => {
                features[*index] = values[*source];
                values[*source]
            }
        };
        values[id] = value;
    }

    let layer_outputs = netlist
        .compute_groups()
        .map(|g| FixedTensor {
            shape: g.shape,
            format: netlist.activation,
            codes: g.outputs.iter().map(|id| values[*id]).collect(),
        })
        .collect();

    Ok(SimTrace {
        layer_outputs,
        features,
        node_values: opts.capture_node_values.then_some(values),
    })
}

/// Fixed-point reference computed by a direct loop nest over the folded
/// model, with leaf semantics identical to the netlist's but no tree
/// structure: the independent side of the equivalence check.
pub fn oracle_forward(qm: &QuantizedModel, input: &FixedTensor) -> Result<SimTrace> {
    input.validate()?;
    if input.shape != qm.input {
        return Err(Error::Sim(format!(
            "input shape {} does not match model input {}",
            input.shape, qm.input
        )));
    }
    if input.format != qm.activation {
        return Err(Error::Sim("input format does not match model activation".into()));
    }

    let act = qm.activation;
    let act_bits = act.total_bits();
    let shapes = qm.layer_shapes();
    let mut layer_outputs: Vec<FixedTensor> = Vec::with_capacity(qm.layers.len());
    let mut cur = input.clone();
    for (li, layer) in qm.layers.iter().enumerate() {
        let out_shape = shapes[li];
        let codes = match layer {
            QuantLayer::Conv(fc) => {
                let spec = &fc.spec;
                let cpg = spec.channels_per_group();
                let filters_per_group = spec.out_channels / spec.groups;
                let mut out = Vec::with_capacity(out_shape.elements());
                for p in 0..out_shape.h {
                    for q in 0..out_shape.w {
                        for m in 0..spec.out_channels {
                            let group = m / filters_per_group;
                            let mut acc: i64 = 0;
                            for r in 0..spec.r {
                                for s in 0..spec.s {
                                    for cg in 0..cpg {
                                        let flat = (r * spec.s + s) * cpg + cg;
                                        let (sign, exponent) = match fc.weight(m, flat) {
                                            Po2Weight::Zero => continue,
                                            Po2Weight::NonZero { sign, exponent } => (sign, exponent),
                                        };
                                        let ih = (p * spec.stride + r) as isize - spec.padding as isize;
                                        let iw = (q * spec.stride + s) as isize - spec.padding as isize;
                                        if ih < 0
                                            || iw < 0
                                            || ih >= cur.shape.h as isize
                                            || iw >= cur.shape.w as isize
                                        {
                                            continue;
                                        }
                                        let x = cur.codes
                                            [cur.shape.index(ih as usize, iw as usize, group * cpg + cg)];
                                        let term = shift_code(x, exponent, act_bits);
                                        acc += if sign < 0 { -term } else { term };
                                    }
                                }
                            }
                            acc += fc.bias[m];
                            if fc.relu {
                                acc = acc.max(0);
                            }
                            out.push(act.saturate(acc));
                        }
                    }
                }
                out
            }
            QuantLayer::Relu => cur.codes.iter().map(|x| (*x).max(0)).collect(),
            QuantLayer::EltwiseAdd { source } => {
                let other = &layer_outputs[*source];
                cur.codes
                    .iter()
                    .zip(other.codes.iter())
                    .map(|(a, b)| act.saturate(a + b))
                    .collect()
            }
            QuantLayer::GlobalSumPool => {
                let mut out = Vec::with_capacity(cur.shape.c);
                for c in 0..cur.shape.c {
                    let mut acc: i64 = 0;
                    for h in 0..cur.shape.h {
                        for w in 0..cur.shape.w {
                            acc += cur.codes[cur.shape.index(h, w, c)];
                        }
                    }
                    out.push(act.saturate(acc));
                }
                out
            }
        };
        cur = FixedTensor { shape: out_shape, format: act, codes };
        layer_outputs.push(cur.clone());
    }

    let features = cur.codes.clone();
    Ok(SimTrace { layer_outputs, features, node_values: None })
}

/// Double-precision forward pass over the original real-valued model,
/// classifier excluded. Returns per-layer activations and the feature
/// vector.
pub fn float_reference(ir: &ModelIR, input: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if input.len() != ir.input.elements() {
        return Err(Error::Sim("input length does not match model input shape".into()));
    }
    let shapes = ir.infer_shapes()?;
    let mut outputs: Vec<Vec<f64>> = Vec::new();
    let mut cur = input.to_vec();
    let mut cur_shape = ir.input;
    for (li, layer) in ir.layers.iter().enumerate() {
        let out_shape = shapes[li];
        match layer {
            LayerSpec::Conv { spec, weights } => {
                let cpg = spec.channels_per_group();
                let filters_per_group = spec.out_channels / spec.groups;
                let per = spec.weights_per_filter();
                let mut out = vec![0.0; out_shape.elements()];
                for p in 0..out_shape.h {
                    for q in 0..out_shape.w {
                        for m in 0..spec.out_channels {
                            let group = m / filters_per_group;
                            let mut acc = 0.0;
                            for r in 0..spec.r {
                                for s in 0..spec.s {
                                    let ih = (p * spec.stride + r) as isize - spec.padding as isize;
                                    let iw = (q * spec.stride + s) as isize - spec.padding as isize;
                                    if ih < 0
                                        || iw < 0
                                        || ih >= cur_shape.h as isize
                                        || iw >= cur_shape.w as isize
                                    {
                                        continue;
                                    }
                                    for cg in 0..cpg {
                                        let w = weights[m * per + (r * spec.s + s) * cpg + cg];
                                        let x = cur
                                            [cur_shape.index(ih as usize, iw as usize, group * cpg + cg)];
                                        acc += w * x;
                                    }
                                }
                            }
                            out[out_shape.index(p, q, m)] = acc;
                        }
                    }
                }
                cur = out;
            }
            LayerSpec::BatchNorm(bn) => {
                let mut out = Vec::with_capacity(cur.len());
                for (i, x) in cur.iter().enumerate() {
                    let m = i % cur_shape.c;
                    out.push(x * bn.scale(m) + bn.offset(m));
                }
                cur = out;
            }
            LayerSpec::Relu => {
                cur = cur.iter().map(|x| x.max(0.0)).collect();
            }
            LayerSpec::EltwiseAdd { source } => {
                let other = &outputs[*source];
                cur = cur.iter().zip(other.iter()).map(|(a, b)| a + b).collect();
            }
            LayerSpec::GlobalSumPool => {
                let mut out = vec![0.0; cur_shape.c];
                for h in 0..cur_shape.h {
                    for w in 0..cur_shape.w {
                        for c in 0..cur_shape.c {
                            out[c] += cur[cur_shape.index(h, w, c)];
                        }
                    }
                }
                cur = out;
            }
            LayerSpec::Linear { .. } => break,
        }
        outputs.push(cur.clone());
        cur_shape = out_shape;
    }
    let features = outputs.last().cloned().unwrap_or_else(|| input.to_vec());
    Ok((outputs, features))
}

/// Full pipeline: simulate the netlist, dequantize the feature codes, and
/// run the full-precision classifier on the NPU model. The classifier
/// weights are swappable between calls.
pub fn end_to_end(
    netlist: &Netlist,
    classifier: &[f64],
    classifier_out: usize,
    input: &FixedTensor,
) -> Result<Vec<f64>> {
    let trace = simulate(netlist, input, &SimOptions::default())?;
    let features: Vec<f64> =
        trace.features.iter().map(|c| netlist.activation.dequantize(*c)).collect();
    crate::npu::npu_execute(classifier, classifier_out, &features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::ConvSpec;
    use crate::netlist::build_netlist;
    use crate::quant::{quantize_model, QuantConfig};
    use crate::toygen;

    fn identity_conv_model() -> ModelIR {
        let spec = ConvSpec {
            r: 1,
            s: 1,
            in_channels: 2,
            out_channels: 2,
            stride: 1,
            padding: 0,
            groups: 2,
        };
        ModelIR {
            name: "id".into(),
            input: TensorShape { h: 2, w: 2, c: 2 },
            layers: vec![
                LayerSpec::Conv { spec, weights: vec![1.0, 1.0] },
                LayerSpec::Relu,
                LayerSpec::Linear { out_features: 2, in_features: 8, weights: vec![0.0; 16] },
            ],
            classifier: 2,
        }
    }

    #[test]
    fn identity_conv_passes_relu_of_input() {
        let ir = identity_conv_model();
        let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
        let n = build_netlist(&qm).unwrap();
        let input = toygen::random_input(1, ir.input, qm.activation);
        let trace = simulate(&n, &input, &SimOptions::default()).unwrap();
        let expect: Vec<i64> = input.codes.iter().map(|x| (*x).max(0)).collect();
        assert_eq!(trace.features, expect);
    }

    #[test]
    fn all_zero_weights_yield_constant_bias_output() {
        let spec = ConvSpec {
            r: 1,
            s: 1,
            in_channels: 1,
            out_channels: 1,
            stride: 1,
            padding: 0,
            groups: 1,
        };
        let ir = ModelIR {
            name: "const".into(),
            input: TensorShape { h: 1, w: 1, c: 1 },
            layers: vec![
                LayerSpec::Conv { spec, weights: vec![0.0] },
                LayerSpec::BatchNorm(crate::ir::BatchNormSpec {
                    gamma: vec![1.0],
                    beta: vec![1.5],
                    mean: vec![0.0],
                    variance: vec![1.0 - 1e-5],
                    epsilon: 1e-5,
                }),
                LayerSpec::Relu,
                LayerSpec::Linear { out_features: 1, in_features: 1, weights: vec![1.0] },
            ],
            classifier: 3,
        };
        let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
        let n = build_netlist(&qm).unwrap();
        let input = toygen::random_input(3, ir.input, qm.activation);
        let trace = simulate(&n, &input, &SimOptions::default()).unwrap();
        // bias = 1.5 at 5 fraction bits = 48; relu keeps it; requantize
        // saturates into Q3.5 (48 fits).
        assert_eq!(trace.features, vec![48]);
        let oracle = oracle_forward(&qm, &input).unwrap();
        assert_eq!(oracle.features, trace.features);
    }

    #[test]
    fn simulate_equals_oracle_on_random_models() {
        for seed in 0..25 {
            let ir = toygen::random_model(seed);
            let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
            let n = build_netlist(&qm).unwrap();
            for input_seed in 0..4 {
                let input = toygen::random_input(1000 + input_seed, ir.input, qm.activation);
                let sim = simulate(&n, &input, &SimOptions::default()).unwrap();
                let oracle = oracle_forward(&qm, &input).unwrap();
                assert_eq!(sim.features, oracle.features, "seed {seed}/{input_seed}");
                assert_eq!(sim.layer_outputs, oracle.layer_outputs, "seed {seed}/{input_seed}");
            }
        }
    }

    #[test]
    fn simulate_equals_oracle_across_formats_and_exponent_ranges() {
        for (int_bits, frac_bits, exp_min, exp_max) in
            [(3u32, 3u32, -8, 7), (3, 4, -8, 7), (4, 4, -4, 3), (2, 6, -12, 3)]
        {
            let fmt = FixedPointFormat::new(int_bits, frac_bits).unwrap();
            let cfg = QuantConfig::new(fmt, exp_min, exp_max).unwrap();
            for seed in 100..110 {
                let ir = toygen::random_model(seed);
                let qm = quantize_model(&ir, &cfg).unwrap();
                let n = build_netlist(&qm).unwrap();
                let input = toygen::random_input(seed, ir.input, fmt);
                let sim = simulate(&n, &input, &SimOptions::default()).unwrap();
                let oracle = oracle_forward(&qm, &input).unwrap();
                assert_eq!(sim.features, oracle.features, "{fmt} seed {seed}");
            }
        }
    }

    #[test]
    fn simulate_equals_oracle_on_grouped_convs() {
        // groups between 1 and C exercise the filters-per-group indexing
        let spec = ConvSpec {
            r: 3,
            s: 3,
            in_channels: 4,
            out_channels: 6,
            stride: 1,
            padding: 1,
            groups: 2,
        };
        let mut rng_weights = Vec::new();
        for i in 0..spec.weight_count() {
            rng_weights.push(((i * 37 % 19) as f64 - 9.0) / 11.0);
        }
        let ir = ModelIR {
            name: "grouped".into(),
            input: TensorShape { h: 6, w: 6, c: 4 },
            layers: vec![
                LayerSpec::Conv { spec, weights: rng_weights },
                LayerSpec::Relu,
                LayerSpec::GlobalSumPool,
                LayerSpec::Linear { out_features: 2, in_features: 6, weights: vec![0.0; 12] },
            ],
            classifier: 3,
        };
        let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
        let n = build_netlist(&qm).unwrap();
        for s in 0..5 {
            let input = toygen::random_input(s, ir.input, qm.activation);
            let sim = simulate(&n, &input, &SimOptions::default()).unwrap();
            let oracle = oracle_forward(&qm, &input).unwrap();
            assert_eq!(sim.features, oracle.features);
        }
    }

    #[test]
    fn zero_input_yields_relu_of_bias() {
        let ir = toygen::toy_model(9);
        let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
        let n = build_netlist(&qm).unwrap();
        let input = FixedTensor {
            shape: ir.input,
            format: qm.activation,
            codes: vec![0; ir.input.elements()],
        };
        let sim = simulate(&n, &input, &SimOptions::default()).unwrap();
        let oracle = oracle_forward(&qm, &input).unwrap();
        assert_eq!(sim.features, oracle.features);
        // First conv layer output must equal relu(bias) requantized.
        if let QuantLayer::Conv(fc) = &qm.layers[0] {
            let shape = sim.layer_outputs[0].shape;
            for p in 0..shape.h {
                for q in 0..shape.w {
                    for m in 0..shape.c {
                        let expect = qm.activation.saturate(fc.bias[m].max(0));
                        assert_eq!(sim.layer_outputs[0].codes[shape.index(p, q, m)], expect);
                    }
                }
            }
        }
    }

    #[test]
    fn toeplitz_gemm_equals_loop_nest_at_real_precision() {
        // Flatten the filters to M x RSC, unroll input patches to
        // RSC x PQ, multiply, and compare against the direct loop nest.
        // Identical (r, s, c) summation order makes this exact in f64.
        let spec = ConvSpec {
            r: 3,
            s: 3,
            in_channels: 3,
            out_channels: 4,
            stride: 2,
            padding: 1,
            groups: 1,
        };
        let input_shape = TensorShape { h: 9, w: 9, c: 3 };
        let ir = ModelIR {
            name: "t".into(),
            input: input_shape,
            layers: vec![
                LayerSpec::Conv {
                    spec,
                    weights: (0..spec.weight_count()).map(|i| (i as f64 * 0.37).sin()).collect(),
                },
                LayerSpec::GlobalSumPool,
                LayerSpec::Linear { out_features: 2, in_features: 4, weights: vec![0.0; 8] },
            ],
            classifier: 2,
        };
        let input: Vec<f64> = (0..input_shape.elements()).map(|i| (i as f64 * 0.11).cos()).collect();
        let (outputs, _) = float_reference(&ir, &input).unwrap();
        let conv_out = &outputs[0];

        let dims = crate::ir::toeplitz_dims(&spec, input_shape).unwrap();
        let out_shape = spec.output_shape(input_shape).unwrap();
        let weights = match &ir.layers[0] {
            LayerSpec::Conv { weights, .. } => weights,
            _ => unreachable!(),
        };
        for p in 0..out_shape.h {
            for q in 0..out_shape.w {
                // Unrolled patch in (r, s, c) order; padding taps are zero.
                let mut patch = Vec::with_capacity(dims.rsc);
                for r in 0..spec.r {
                    for s in 0..spec.s {
                        for c in 0..spec.in_channels {
                            let ih = (p * spec.stride + r) as isize - spec.padding as isize;
                            let iw = (q * spec.stride + s) as isize - spec.padding as isize;
                            patch.push(
                                if ih < 0
                                    || iw < 0
                                    || ih >= input_shape.h as isize
                                    || iw >= input_shape.w as isize
                                {
                                    0.0
                                } else {
                                    input[input_shape.index(ih as usize, iw as usize, c)]
                                },
                            );
                        }
                    }
                }
                assert_eq!(patch.len(), dims.rsc);
                for m in 0..dims.m {
                    let row = &weights[m * dims.rsc..(m + 1) * dims.rsc];
                    let gemm: f64 = row.iter().zip(patch.iter()).map(|(w, x)| w * x).sum();
                    assert_eq!(gemm, conv_out[out_shape.index(p, q, m)], "at ({p},{q},{m})");
                }
            }
        }
    }

    #[test]
    fn batchnorm_centered_on_a_constant_input_zeroes_it() {
        // identity conv on a constant input, batch norm with the mean set
        // to that constant: the normalized value is exactly zero.
        let spec = ConvSpec {
            r: 1,
            s: 1,
            in_channels: 1,
            out_channels: 1,
            stride: 1,
            padding: 0,
            groups: 1,
        };
        let ir = ModelIR {
            name: "bn".into(),
            input: TensorShape { h: 2, w: 2, c: 1 },
            layers: vec![
                LayerSpec::Conv { spec, weights: vec![1.0] },
                LayerSpec::BatchNorm(crate::ir::BatchNormSpec {
                    gamma: vec![1.0],
                    beta: vec![0.0],
                    mean: vec![0.75],
                    variance: vec![1.0],
                    epsilon: 1e-5,
                }),
                LayerSpec::Linear { out_features: 1, in_features: 4, weights: vec![0.0; 4] },
            ],
            classifier: 2,
        };
        let (outputs, _) = float_reference(&ir, &[0.75; 4]).unwrap();
        for v in &outputs[1] {
            assert!(v.abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn quantization_error_shrinks_with_fraction_bits() {
        // More fraction bits -> smaller gap to the double-precision
        // reference on a fixed toy model and input.
        let ir = toygen::toy_model(4);
        let reals = toygen::random_real_input(77, ir.input, FixedPointFormat::q3_5());
        let (_, float_features) = float_reference(&ir, &reals).unwrap();
        let mut errs = Vec::new();
        for n_frac in [3u32, 4, 5] {
            let fmt = FixedPointFormat::new(3, n_frac).unwrap();
            let cfg = QuantConfig::new(fmt, -8, 7).unwrap();
            let qm = quantize_model(&ir, &cfg).unwrap();
            let net = build_netlist(&qm).unwrap();
            let input = FixedTensor::from_reals(ir.input, fmt, &reals).unwrap();
            let trace = simulate(&net, &input, &SimOptions::default()).unwrap();
            let got: Vec<f64> = trace.features.iter().map(|c| fmt.dequantize(*c)).collect();
            let err: f64 = float_features
                .iter()
                .zip(got.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[0] >= errs[1] && errs[1] >= errs[2], "errors {errs:?} not monotone");
    }

    #[test]
    fn end_to_end_classifier_is_swappable() {
        let ir = toygen::toy_model(5);
        let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
        let n = build_netlist(&qm).unwrap();
        let input = toygen::random_input(8, ir.input, qm.activation);

        // A one-hot classifier row reads back a single feature.
        let k_fe = qm.k_fe;
        let mut probe = vec![0.0; k_fe];
        probe[2] = 1.0;
        let logits = end_to_end(&n, &probe, 1, &input).unwrap();
        let trace = simulate(&n, &input, &SimOptions::default()).unwrap();
        assert_eq!(logits[0], qm.activation.dequantize(trace.features[2]));

        // Swapping weights changes logits, not features.
        let logits_a = end_to_end(&n, &qm.classifier, qm.classifier_out, &input).unwrap();
        let other = toygen::toy_model(6);
        let qm_b = quantize_model(&other, &QuantConfig::default()).unwrap();
        let logits_b = end_to_end(&n, &qm_b.classifier, qm_b.classifier_out, &input).unwrap();
        assert_ne!(logits_a, logits_b);
    }

    #[test]
    fn traces_are_deterministic_across_runs() {
        let ir = toygen::random_model(77);
        let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
        let n = build_netlist(&qm).unwrap();
        let input = toygen::random_input(77, ir.input, qm.activation);
        let a = simulate(&n, &input, &SimOptions { capture_node_values: true }).unwrap();
        let b = simulate(&n, &input, &SimOptions { capture_node_values: true }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_export_has_hex_codes() {
        let ir = toygen::toy_model(2);
        let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
        let n = build_netlist(&qm).unwrap();
        let input = toygen::random_input(2, ir.input, qm.activation);
        let trace = simulate(&n, &input, &SimOptions::default()).unwrap();
        let json = trace.export_json();
        let first = json["layers"][0]["codes_hex"][0].as_str().unwrap();
        assert!(first.starts_with("0x"));
    }
}
