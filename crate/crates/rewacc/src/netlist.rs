//! Netlist construction for the hardened feature extractor: rewiring
//! leaves, expanding binary adder trees, bias adders, gate-level ReLU,
//! and requantizers, grouped per source layer.
//!
//! Width discipline: every node records its output width in bits. A leaf
//! produces an activation-width value; an adder's output is one bit wider
//! than its widest input (the adder itself spans `width - 1` full-adder
//! bits, which is what the statistics count).
//!
//! Negative weights: a leaf's sign is a flag, not a computed negation.
//! When an adder combines two like-signed operands it adds their wire
//! values and the sign propagates up (`Netlist::negated`); mixed signs
//! become a subtraction. A sign that survives to the tree root resolves
//! in the bias adder's subtract mode. Adders and subtractors cost the
//! same, and every wire value fits its declared width exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::FixedPointFormat;
use crate::ir::TensorShape;
use crate::quant::{QuantLayer, QuantizedModel};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NetNode {
    /// Tap of the layer-input tensor at (h, w, c).
    InputTap { h: usize, w: usize, c: usize },
    /// Fixed shift realized as wiring; `negate` marks a negative weight,
    /// resolved as subtraction in the consuming adder.
    Rewire { source: NodeId, shift: i32, negate: bool },
    /// Binary adder; output is `width` bits, one wider than its widest
    /// input.
    Add { width: u32, lhs: NodeId, rhs: NodeId },
    /// Odd tree node carried unchanged to the next level.
    Passthrough { source: NodeId },
    /// Root bias adder. `source == None` encodes a constant-bias output
    /// for filters with no surviving weights.
    BiasAdd { width: u32, source: Option<NodeId>, bias: i64 },
    /// Sign-bit gate: zero when the MSB is set.
    ReluGate { source: NodeId },
    /// Truncate (toward -inf) and saturate into `format`.
    Requantize { source: NodeId, from_frac: u32, format: FixedPointFormat },
    /// Residual adder over two requantized activations.
    EltAdd { width: u32, lhs: NodeId, rhs: NodeId },
    /// Feature-buffer tap.
    OutputTap { index: usize, source: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    Input,
    Conv,
    Relu,
    EltAdd,
    SumPool,
    Output,
}

/// Nodes belonging to one source layer, plus the flat (h, w, c) grid of
/// its output nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerGroup {
    pub name: String,
    pub kind: GroupKind,
    pub node_start: usize,
    pub node_end: usize,
    pub shape: TensorShape,
    pub outputs: Vec<NodeId>,
}

/// The hardened feature extractor as a DAG of typed nodes. Node ids are
/// topologically ordered by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Netlist {
    pub nodes: Vec<NetNode>,
    /// Output width in bits, per node.
    pub widths: Vec<u32>,
    /// Per node: whether the wire value stands for the negation of the
    /// node's semantic value (resolved by the consuming adder).
    pub negated: Vec<bool>,
    pub groups: Vec<LayerGroup>,
    pub input_shape: TensorShape,
    pub activation: FixedPointFormat,
    pub k_fe: usize,
    pub warnings: Vec<String>,
}

impl Netlist {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Groups that carry activation tensors (everything but the input
    /// taps and the output taps), aligned with the quantized model's
    /// layer list.
    pub fn compute_groups(&self) -> impl Iterator<Item = &LayerGroup> {
        self.groups
            .iter()
            .filter(|g| !matches!(g.kind, GroupKind::Input | GroupKind::Output))
    }
}

struct Builder {
    nodes: Vec<NetNode>,
    widths: Vec<u32>,
    negated: Vec<bool>,
    act: FixedPointFormat,
}

impl Builder {
    fn push(&mut self, node: NetNode, width: u32, negated: bool) -> NodeId {
        self.nodes.push(node);
        self.widths.push(width);
        self.negated.push(negated);
        self.widths.len() - 1
    }

    /// Balanced binary reduction: pair adjacent nodes, carry an odd tail
    /// up as a passthrough. Like-signed pairs keep their shared sign;
    /// mixed pairs subtract and come out positive. Returns the root.
    fn reduce(&mut self, mut level: Vec<NodeId>) -> NodeId {
        debug_assert!(!level.is_empty());
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len().div_ceil(2));
            let mut it = level.chunks_exact(2);
            for pair in &mut it {
                let (lhs, rhs) = (pair[0], pair[1]);
                let width = 1 + self.widths[lhs].max(self.widths[rhs]);
                let neg = self.negated[lhs] && self.negated[rhs];
                next.push(self.push(NetNode::Add { width, lhs, rhs }, width, neg));
            }
            if let [odd] = it.remainder() {
                let width = self.widths[*odd];
                let neg = self.negated[*odd];
                next.push(self.push(NetNode::Passthrough { source: *odd }, width, neg));
            }
            level = next;
        }
        level[0]
    }

    fn requantize(&mut self, source: NodeId) -> NodeId {
        let fmt = self.act;
        debug_assert!(!self.negated[source]);
        self.push(
            NetNode::Requantize { source, from_frac: fmt.frac_bits, format: fmt },
            fmt.total_bits(),
            false,
        )
    }
}

/// Estimate of the node count a netlist build would materialize. Counts
/// nonzero weights per filter, ignoring border tap drops, so padded
/// convolutions over-count; odd tree levels can under-count by one node
/// per tree. Order-of-magnitude accurate either way.
pub fn estimate_node_count(qm: &QuantizedModel) -> u64 {
    let shapes = qm.layer_shapes();
    let mut total = qm.input.elements() as u64;
    let mut prev = qm.input;
    for (li, layer) in qm.layers.iter().enumerate() {
        let out = shapes[li];
        total += match layer {
            QuantLayer::Conv(fc) => {
                let leaves: u64 =
                    (0..fc.spec.out_channels).map(|m| fc.nonzero_count(m) as u64).sum();
                // rewires + adders/passthroughs + bias + relu + requant
                (out.h * out.w) as u64 * 2 * leaves + 3 * out.elements() as u64
            }
            QuantLayer::Relu => out.elements() as u64,
            QuantLayer::EltwiseAdd { .. } => 2 * out.elements() as u64,
            QuantLayer::GlobalSumPool => 2 * prev.elements() as u64,
        };
        prev = out;
    }
    total + qm.k_fe as u64
}

/// Build the hardened netlist for a folded, quantized model. The
/// classifier is excluded; it runs on the NPU. Standalone batch norms
/// cannot occur here: quantization refuses to produce them.
pub fn build_netlist(qm: &QuantizedModel) -> Result<Netlist> {
    let act = qm.activation;
    let act_bits = act.total_bits();
    let mut b = Builder { nodes: Vec::new(), widths: Vec::new(), negated: Vec::new(), act };
    let mut groups: Vec<LayerGroup> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();

    // Input taps, flat (h, w, c).
    let input_outputs: Vec<NodeId> = {
        let start = b.nodes.len();
        let mut outs = Vec::with_capacity(qm.input.elements());
        for h in 0..qm.input.h {
            for w in 0..qm.input.w {
                for c in 0..qm.input.c {
                    outs.push(b.push(NetNode::InputTap { h, w, c }, act_bits, false));
                }
            }
        }
        groups.push(LayerGroup {
            name: "input".into(),
            kind: GroupKind::Input,
            node_start: start,
            node_end: b.nodes.len(),
            shape: qm.input,
            outputs: outs.clone(),
        });
        outs
    };

    let shapes = qm.layer_shapes();
    let mut prev_shape = qm.input;
    let mut prev_outputs = input_outputs;
    // Outputs of each quantized layer, for residual back-edges.
    let mut layer_outputs: Vec<Vec<NodeId>> = Vec::with_capacity(qm.layers.len());

    for (li, layer) in qm.layers.iter().enumerate() {
        let start = b.nodes.len();
        let out_shape = shapes[li];
        let (kind, outputs) = match layer {
            QuantLayer::Conv(fc) => {
                let spec = &fc.spec;
                let cpg = spec.channels_per_group();
                let filters_per_group = spec.out_channels / spec.groups;
                let mut outs = Vec::with_capacity(out_shape.elements());
                let mut empty_outputs = 0usize;
                for p in 0..out_shape.h {
                    for q in 0..out_shape.w {
                        for m in 0..spec.out_channels {
                            let group = m / filters_per_group;
                            let mut leaves: Vec<NodeId> = Vec::new();
                            for r in 0..spec.r {
                                for s in 0..spec.s {
                                    for cg in 0..cpg {
                                        let flat = (r * spec.s + s) * cpg + cg;
                                        let weight = fc.weight(m, flat);
                                        let (sign, exponent) = match weight {
                                            crate::quant::Po2Weight::Zero => continue,
                                            crate::quant::Po2Weight::NonZero { sign, exponent } => {
                                                (sign, exponent)
                                            }
                                        };
                                        let ih = (p * spec.stride + r) as isize - spec.padding as isize;
                                        let iw = (q * spec.stride + s) as isize - spec.padding as isize;
                                        if ih < 0
                                            || iw < 0
                                            || ih >= prev_shape.h as isize
                                            || iw >= prev_shape.w as isize
                                        {
                                            // Zero padding constant-propagates away.
                                            continue;
                                        }
                                        let c_abs = group * cpg + cg;
                                        let src = prev_outputs
                                            [prev_shape.index(ih as usize, iw as usize, c_abs)];
                                        leaves.push(b.push(
                                            NetNode::Rewire {
                                                source: src,
                                                shift: exponent,
                                                negate: sign < 0,
                                            },
                                            act_bits,
                                            sign < 0,
                                        ));
                                    }
                                }
                            }
                            let bias_width = fc.bias_format[m].total_bits();
                            let biased = if leaves.is_empty() {
                                empty_outputs += 1;
                                let width = 1 + bias_width;
                                b.push(
                                    NetNode::BiasAdd { width, source: None, bias: fc.bias[m] },
                                    width,
                                    false,
                                )
                            } else {
                                let root = b.reduce(leaves);
                                let width = 1 + b.widths[root].max(bias_width);
                                b.push(
                                    NetNode::BiasAdd {
                                        width,
                                        source: Some(root),
                                        bias: fc.bias[m],
                                    },
                                    width,
                                    false,
                                )
                            };
                            let gated = if fc.relu {
                                let width = b.widths[biased];
                                b.push(NetNode::ReluGate { source: biased }, width, false)
                            } else {
                                biased
                            };
                            outs.push(b.requantize(gated));
                        }
                    }
                }
                if empty_outputs > 0 {
                    warnings.push(format!(
                        "layer {li}: {empty_outputs} output elements have no surviving weights; emitted constant-bias nodes"
                    ));
                }
                (GroupKind::Conv, outs)
            }
            QuantLayer::Relu => {
                let outs = prev_outputs
                    .iter()
                    .map(|src| {
                        let width = b.widths[*src];
                        b.push(NetNode::ReluGate { source: *src }, width, false)
                    })
                    .collect();
                (GroupKind::Relu, outs)
            }
            QuantLayer::EltwiseAdd { source } => {
                let other = &layer_outputs[*source];
                if other.len() != prev_outputs.len() {
                    return Err(Error::Harden(format!(
                        "residual shapes differ at layer {li}"
                    )));
                }
                let outs = prev_outputs
                    .iter()
                    .zip(other.iter())
                    .map(|(lhs, rhs)| {
                        let width = act_bits + 1;
                        let sum = b.push(NetNode::EltAdd { width, lhs: *lhs, rhs: *rhs }, width, false);
                        b.requantize(sum)
                    })
                    .collect();
                (GroupKind::EltAdd, outs)
            }
            QuantLayer::GlobalSumPool => {
                let mut outs = Vec::with_capacity(prev_shape.c);
                for c in 0..prev_shape.c {
                    let leaves: Vec<NodeId> = (0..prev_shape.h)
                        .flat_map(|h| (0..prev_shape.w).map(move |w| (h, w)))
                        .map(|(h, w)| prev_outputs[prev_shape.index(h, w, c)])
                        .collect();
                    let root = b.reduce(leaves);
                    outs.push(b.requantize(root));
                }
                (GroupKind::SumPool, outs)
            }
        };
        groups.push(LayerGroup {
            name: format!("layer{li}"),
            kind,
            node_start: start,
            node_end: b.nodes.len(),
            shape: out_shape,
            outputs: outputs.clone(),
        });
        layer_outputs.push(outputs.clone());
        prev_outputs = outputs;
        prev_shape = out_shape;
    }

    // Feature-buffer taps.
    let start = b.nodes.len();
    let tap_sources = prev_outputs.clone();
    let mut taps = Vec::with_capacity(tap_sources.len());
    for (index, src) in tap_sources.iter().enumerate() {
        let width = b.widths[*src];
        taps.push(b.push(NetNode::OutputTap { index, source: *src }, width, false));
    }
    groups.push(LayerGroup {
        name: "features".into(),
        kind: GroupKind::Output,
        node_start: start,
        node_end: b.nodes.len(),
        shape: prev_shape,
        outputs: taps,
    });

    if prev_shape.elements() != qm.k_fe {
        return Err(Error::Harden(format!(
            "feature extractor produces {} outputs, expected k_fe = {}",
            prev_shape.elements(),
            qm.k_fe
        )));
    }

    Ok(Netlist {
        nodes: b.nodes,
        widths: b.widths,
        negated: b.negated,
        groups,
        input_shape: qm.input,
        activation: act,
        k_fe: qm.k_fe,
        warnings,
    })
}

/// Per-group structural counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub name: String,
    /// Adder full-adder-bit histogram keyed by adder size (input width).
    pub adders_by_width: BTreeMap<u32, usize>,
    pub rewires: usize,
    pub relu_gates: usize,
    pub bias_adders: usize,
    pub elt_adders: usize,
    pub passthroughs: usize,
    pub requantizers: usize,
    /// Sum over Add nodes of their adder size.
    pub bit_adders: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetlistStats {
    pub per_layer: Vec<GroupStats>,
    pub total: GroupStats,
    pub node_count: usize,
}

/// Exact structural counts for a built netlist.
pub fn netlist_stats(n: &Netlist) -> NetlistStats {
    let mut per_layer = Vec::new();
    let mut total = GroupStats { name: "total".into(), ..Default::default() };
    for g in &n.groups {
        let mut s = GroupStats { name: g.name.clone(), ..Default::default() };
        for id in g.node_start..g.node_end {
            match &n.nodes[id] {
                NetNode::Rewire { .. } => s.rewires += 1,
                NetNode::Add { width, .. } => {
                    let size = width - 1;
                    *s.adders_by_width.entry(size).or_insert(0) += 1;
                    s.bit_adders += size as u64;
                }
                NetNode::Passthrough { .. } => s.passthroughs += 1,
                NetNode::BiasAdd { .. } => s.bias_adders += 1,
                NetNode::ReluGate { .. } => s.relu_gates += 1,
                NetNode::Requantize { .. } => s.requantizers += 1,
                NetNode::EltAdd { .. } => s.elt_adders += 1,
                NetNode::InputTap { .. } | NetNode::OutputTap { .. } => {}
            }
        }
        total.rewires += s.rewires;
        total.relu_gates += s.relu_gates;
        total.bias_adders += s.bias_adders;
        total.elt_adders += s.elt_adders;
        total.passthroughs += s.passthroughs;
        total.requantizers += s.requantizers;
        total.bit_adders += s.bit_adders;
        for (w, c) in &s.adders_by_width {
            *total.adders_by_width.entry(*w).or_insert(0) += c;
        }
        per_layer.push(s);
    }
    NetlistStats { per_layer, total, node_count: n.nodes.len() }
}

/// Count nodes unreachable from every output tap. Zero for any netlist
/// this module builds.
pub fn dead_node_count(n: &Netlist) -> usize {
    let mut live = vec![false; n.nodes.len()];
    let mut stack: Vec<NodeId> = n
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, node)| matches!(node, NetNode::OutputTap { .. }))
        .map(|(i, _)| i)
        .collect();
    while let Some(id) = stack.pop() {
        if live[id] {
            continue;
        }
        live[id] = true;
        match &n.nodes[id] {
            NetNode::InputTap { .. } => {}
            NetNode::Rewire { source, .. }
            | NetNode::Passthrough { source }
            | NetNode::ReluGate { source }
            | NetNode::Requantize { source, .. }
            | NetNode::OutputTap { source, .. } => stack.push(*source),
            NetNode::Add { lhs, rhs, .. } | NetNode::EltAdd { lhs, rhs, .. } => {
                stack.push(*lhs);
                stack.push(*rhs);
            }
            NetNode::BiasAdd { source, .. } => {
                if let Some(s) = source {
                    stack.push(*s);
                }
            }
        }
    }
    live.iter().filter(|l| !**l).count()
}
