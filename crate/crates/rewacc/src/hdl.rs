//! Structural HDL emission for hardened netlists: continuous-assignment
//! rewires (bit-select/concatenate), instantiated signed adder and
//! subtractor cells parameterized by width, and the two-gate ReLU mask.
//! Output is deterministic: identical netlists emit identical bytes.

use std::fmt::Write as _;

use crate::netlist::{NetNode, Netlist, NodeId};

/// Signed decimal-or-hex literal of `value` at `width` bits.
fn literal(value: i64, width: u32) -> String {
    let mask = if width >= 64 { u64::MAX } else { (1u64 << width) - 1 };
    format!("{}'sh{:x}", width, (value as u64) & mask)
}

/// Sign-extend wire `name` of width `from` to `to` bits.
fn extend(name: &str, from: u32, to: u32) -> String {
    if from == to {
        name.to_string()
    } else {
        format!("{{{{{}{{{}[{}]}}}}, {}}}", to - from, name, from - 1, name)
    }
}

fn wire(id: NodeId) -> String {
    format!("n{id}")
}

const CELL_LIBRARY: &str = r#"// --- cell library ---------------------------------------------------

// signed adder, W full-adder bits, W+1-bit sum
module add_cell #(parameter W = 8) (
  input  wire signed [W-1:0] a,
  input  wire signed [W-1:0] b,
  output wire signed [W:0]   y
);
  assign y = a + b;
endmodule

// signed subtractor (a - b), costed identically to add_cell
module sub_cell #(parameter W = 8) (
  input  wire signed [W-1:0] a,
  input  wire signed [W-1:0] b,
  output wire signed [W:0]   y
);
  assign y = a - b;
endmodule

// constant bias adder at the tree root
module bias_cell #(parameter W = 8, parameter signed [W-1:0] B = 0, parameter NEG = 0) (
  input  wire signed [W-1:0] a,
  output wire signed [W:0]   y
);
  assign y = (NEG ? -a : a) + B;
endmodule

// truncate toward -inf by DROP bits, then saturate into WO bits
module requant_cell #(parameter WI = 16, parameter DROP = 0, parameter WO = 8) (
  input  wire signed [WI-1:0] a,
  output wire signed [WO-1:0] y
);
  localparam integer MAX = (1 << (WO - 1)) - 1;
  localparam integer MIN = -(1 << (WO - 1));
  wire signed [WI-1:0] t = a >>> DROP;
  assign y = (t > MAX) ? {1'b0, {(WO-1){1'b1}}} :
             (t < MIN) ? {1'b1, {(WO-1){1'b0}}} : t[WO-1:0];
endmodule

// --------------------------------------------------------------------
"#;

/// Emit the netlist as one structural module plus its small cell
/// library. Inputs arrive on a flat activation-width bus in (h, w, c)
/// order; the feature outputs leave on `out_bus`.
pub fn emit_hdl(netlist: &Netlist, top_name: &str) -> String {
    let act_bits = netlist.activation.total_bits();
    let in_bits = netlist.input_shape.elements() as u32 * act_bits;
    let out_bits = netlist.k_fe as u32 * act_bits;
    let nodes = &netlist.nodes;
    let widths = &netlist.widths;

    let mut s = String::new();
    let _ = writeln!(s, "// {top_name}: hardened rewire-and-accumulate feature extractor");
    let _ = writeln!(
        s,
        "// input {} x {} activations, {} feature outputs, {} nodes",
        netlist.input_shape,
        netlist.activation,
        netlist.k_fe,
        nodes.len()
    );
    s.push('\n');
    s.push_str(CELL_LIBRARY);
    s.push('\n');
    let _ = writeln!(s, "module {top_name} (");
    let _ = writeln!(s, "  input  wire [{}:0] in_bus,", in_bits - 1);
    let _ = writeln!(s, "  output wire [{}:0] out_bus", out_bits - 1);
    let _ = writeln!(s, ");");
    s.push('\n');

    for (id, node) in nodes.iter().enumerate() {
        let w = widths[id];
        let name = wire(id);
        match node {
            NetNode::InputTap { h, w: iw, c } => {
                let flat = netlist.input_shape.index(*h, *iw, *c) as u32;
                let _ = writeln!(
                    s,
                    "  wire signed [{}:0] {name} = in_bus[{}:{}];",
                    w - 1,
                    (flat + 1) * act_bits - 1,
                    flat * act_bits
                );
            }
            NetNode::Rewire { source, shift, .. } => {
                let src = wire(*source);
                let msb = w - 1;
                if *shift == 0 {
                    let _ = writeln!(s, "  wire signed [{msb}:0] {name} = {src};");
                } else if *shift < 0 {
                    // arithmetic right shift as sign-extended bit select
                    let k = (-shift) as u32;
                    if k >= w {
                        let _ = writeln!(
                            s,
                            "  wire signed [{msb}:0] {name} = {{{w}{{{src}[{msb}]}}}};"
                        );
                    } else {
                        let _ = writeln!(
                            s,
                            "  wire signed [{msb}:0] {name} = {{{{{k}{{{src}[{msb}]}}}}, {src}[{msb}:{k}]}};"
                        );
                    }
                } else {
                    // saturating left shift
                    let k = *shift as u32;
                    let max_in = ((1i64 << (w - 1)) - 1) >> k;
                    let min_in = (-(1i64 << (w - 1))) >> k;
                    let _ = writeln!(
                        s,
                        "  wire signed [{msb}:0] {name} = ({src} > {maxi}) ? {maxv} : ({src} < {mini}) ? {minv} : ({src} <<< {k});",
                        maxi = literal(max_in, w),
                        maxv = literal((1i64 << (w - 1)) - 1, w),
                        mini = literal(min_in, w),
                        minv = literal(-(1i64 << (w - 1)), w),
                    );
                }
            }
            NetNode::Add { width, lhs, rhs } => {
                let size = width - 1;
                let ea = extend(&wire(*lhs), widths[*lhs], size);
                let eb = extend(&wire(*rhs), widths[*rhs], size);
                let _ = writeln!(s, "  wire signed [{}:0] {name};", width - 1);
                // like signs add (the sign rides on the result); mixed
                // signs subtract so the result comes out positive
                let (cell, pa, pb) = match (netlist.negated[*lhs], netlist.negated[*rhs]) {
                    (a, b) if a == b => ("add_cell", ea, eb),
                    (false, true) => ("sub_cell", ea, eb),
                    _ => ("sub_cell", eb, ea),
                };
                let _ = writeln!(
                    s,
                    "  {cell} #(.W({size})) u_{name} (.a({pa}), .b({pb}), .y({name}));"
                );
            }
            NetNode::Passthrough { source } => {
                let _ = writeln!(s, "  wire signed [{}:0] {name} = {};", w - 1, wire(*source));
            }
            NetNode::BiasAdd { width, source, bias } => {
                let size = width - 1;
                let _ = writeln!(s, "  wire signed [{}:0] {name};", width - 1);
                match source {
                    Some(src) => {
                        let neg = netlist.negated[*src];
                        let ea = extend(&wire(*src), widths[*src], size);
                        let _ = writeln!(
                            s,
                            "  bias_cell #(.W({size}), .B({}), .NEG({})) u_{name} (.a({ea}), .y({name}));",
                            literal(*bias, size),
                            if neg { 1 } else { 0 },
                        );
                    }
                    None => {
                        let _ = writeln!(s, "  assign {name} = {};", literal(*bias, *width));
                    }
                }
            }
            NetNode::ReluGate { source } => {
                // invert the sign bit and AND it across the word
                let src = wire(*source);
                let msb = w - 1;
                let _ = writeln!(
                    s,
                    "  wire signed [{msb}:0] {name} = {{{w}{{~{src}[{msb}]}}}} & {src};"
                );
            }
            NetNode::Requantize { source, from_frac, format } => {
                let wi = widths[*source];
                let drop = from_frac.saturating_sub(format.frac_bits);
                let _ = writeln!(s, "  wire signed [{}:0] {name};", w - 1);
                let _ = writeln!(
                    s,
                    "  requant_cell #(.WI({wi}), .DROP({drop}), .WO({w})) u_{name} (.a({}), .y({name}));",
                    wire(*source)
                );
            }
            NetNode::EltAdd { width, lhs, rhs } => {
                let size = width - 1;
                let ea = extend(&wire(*lhs), widths[*lhs], size);
                let eb = extend(&wire(*rhs), widths[*rhs], size);
                let _ = writeln!(s, "  wire signed [{}:0] {name};", width - 1);
                let _ = writeln!(
                    s,
                    "  add_cell #(.W({size})) u_{name} (.a({ea}), .b({eb}), .y({name}));"
                );
            }
            NetNode::OutputTap { index, source } => {
                let flat = *index as u32;
                let _ = writeln!(
                    s,
                    "  assign out_bus[{}:{}] = {};",
                    (flat + 1) * act_bits - 1,
                    flat * act_bits,
                    wire(*source)
                );
            }
        }
    }

    s.push('\n');
    let _ = writeln!(s, "endmodule");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{ConvSpec, LayerSpec, ModelIR, TensorShape};
    use crate::netlist::build_netlist;
    use crate::quant::{quantize_model, QuantConfig};

    fn single_weight_model(w: f64) -> ModelIR {
        let spec = ConvSpec {
            r: 1,
            s: 1,
            in_channels: 1,
            out_channels: 1,
            stride: 1,
            padding: 0,
            groups: 1,
        };
        ModelIR {
            name: "w".into(),
            input: TensorShape { h: 1, w: 1, c: 1 },
            layers: vec![
                LayerSpec::Conv { spec, weights: vec![w] },
                LayerSpec::Relu,
                LayerSpec::Linear { out_features: 1, in_features: 1, weights: vec![1.0] },
            ],
            classifier: 2,
        }
    }

    fn emit(w: f64) -> String {
        let ir = single_weight_model(w);
        let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
        emit_hdl(&build_netlist(&qm).unwrap(), "toy")
    }

    #[test]
    fn relu_mask_pattern_present() {
        // ReLU on a signed value: replicate the inverted sign bit and AND.
        let text = emit(1.0);
        assert!(text.contains("~"), "{text}");
        // the relu gate sits on the 10-bit biased value here; check an
        // 8-bit example via a standalone relu on activations
        let ir = crate::toygen::random_model(12);
        let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
        let n = build_netlist(&qm).unwrap();
        let text = emit_hdl(&n, "toy");
        assert!(text.contains("}} &"), "mask pattern missing:\n{text}");
    }

    #[test]
    fn eight_bit_relu_mask_exact_shape() {
        // Build a netlist with a standalone 8-bit ReLU (after a residual).
        use crate::ir::LayerSpec;
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
            name: "r".into(),
            input: TensorShape { h: 1, w: 1, c: 1 },
            layers: vec![
                LayerSpec::Conv { spec, weights: vec![1.0] },
                LayerSpec::EltwiseAdd { source: 0 },
                LayerSpec::Relu,
                LayerSpec::Linear { out_features: 1, in_features: 1, weights: vec![1.0] },
            ],
            classifier: 3,
        };
        let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
        let n = build_netlist(&qm).unwrap();
        let text = emit_hdl(&n, "toy");
        // somewhere an 8-bit gate: {8{~nX[7]}} & nX
        let has = text.lines().any(|l| l.contains("{8{~") && l.contains("[7]}} &"));
        assert!(has, "no 8-bit relu mask in:\n{text}");
    }

    #[test]
    fn negative_shift_is_sign_extended_bit_select() {
        // weight 0.25 -> shift -2 on 8 bits: {{2{nX[7]}}, nX[7:2]}
        let text = emit(0.25);
        assert!(text.contains("[7]}}, ") && text.contains("[7:2]"), "{text}");
    }

    #[test]
    fn emission_is_byte_deterministic() {
        let ir = crate::toygen::random_model(33);
        let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
        let n = build_netlist(&qm).unwrap();
        let a = emit_hdl(&n, "top");
        let b = emit_hdl(&n, "top");
        assert_eq!(a, b);
        // And rebuilt from scratch:
        let n2 = build_netlist(&qm).unwrap();
        assert_eq!(a, emit_hdl(&n2, "top"));
    }

    #[test]
    fn negative_weight_uses_a_subtractor() {
        let spec = ConvSpec {
            r: 1,
            s: 1,
            in_channels: 2,
            out_channels: 1,
            stride: 1,
            padding: 0,
            groups: 1,
        };
        let ir = ModelIR {
            name: "s".into(),
            input: TensorShape { h: 1, w: 1, c: 2 },
            layers: vec![
                LayerSpec::Conv { spec, weights: vec![1.0, -1.0] },
                LayerSpec::Linear { out_features: 1, in_features: 1, weights: vec![1.0] },
            ],
            classifier: 1,
        };
        let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
        let text = emit_hdl(&build_netlist(&qm).unwrap(), "toy");
        assert!(text.contains("sub_cell"), "{text}");
    }
}
