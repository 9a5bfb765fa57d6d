//! Power-of-two weight quantization, batch-norm quantization and folding,
//! and the quantized-model representation consumed by the hardener.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::FixedPointFormat;
use crate::ir::{BatchNormSpec, ConvSpec, LayerSpec, ModelIR, TensorShape};

/// A weight code: zero (pruned or underflowed) or a signed power of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Po2Weight {
    Zero,
    NonZero { sign: i8, exponent: i32 },
}

impl Po2Weight {
    pub fn is_zero(&self) -> bool {
        matches!(self, Po2Weight::Zero)
    }

    /// The real value this code stands for.
    pub fn value(&self) -> f64 {
        match self {
            Po2Weight::Zero => 0.0,
            Po2Weight::NonZero { sign, exponent } => *sign as f64 * (*exponent as f64).exp2(),
        }
    }
}

/// Quantization settings: activation format, weight bitwidth (a
/// bookkeeping value; rewiring makes it free in hardware), weight
/// exponent range, and the threshold below which weights collapse to
/// zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantConfig {
    pub activation: FixedPointFormat,
    /// Kept equal to the activation width: narrowing it saves nothing
    /// once shifts are wiring.
    pub weight_bits: u32,
    pub exp_min: i32,
    pub exp_max: i32,
    pub zero_threshold: f64,
}

impl QuantConfig {
    pub fn new(activation: FixedPointFormat, exp_min: i32, exp_max: i32) -> Result<Self> {
        if exp_min >= exp_max {
            return Err(Error::Quant(format!("empty exponent range [{exp_min}, {exp_max}]")));
        }
        Ok(Self {
            activation,
            weight_bits: activation.total_bits(),
            exp_min,
            exp_max,
            zero_threshold: ((exp_min - 1) as f64).exp2(),
        })
    }
}

impl Default for QuantConfig {
    /// Q3.5 activations with exponents in [-8, 7], zero threshold 2^-9.
    fn default() -> Self {
        Self::new(FixedPointFormat::q3_5(), -8, 7).unwrap()
    }
}

/// Quantize one real weight to the nearest power of two in linear
/// distance, ties toward the larger magnitude, exponent clamped into the
/// configured range. Magnitudes below the zero threshold become `Zero`.
pub fn quantize_po2(w: f64, cfg: &QuantConfig) -> Po2Weight {
    if !w.is_finite() || w.abs() < cfg.zero_threshold {
        return Po2Weight::Zero;
    }
    let sign: i8 = if w < 0.0 { -1 } else { 1 };
    let mag = w.abs();
    let lo = mag.log2().floor() as i32;
    // Compare the two bracketing powers in linear distance; on a tie the
    // larger magnitude wins.
    let d_lo = (mag - (lo as f64).exp2()).abs();
    let d_hi = ((lo + 1) as f64).exp2() - mag;
    let p = if d_hi <= d_lo { lo + 1 } else { lo };
    let p = p.clamp(cfg.exp_min, cfg.exp_max);
    Po2Weight::NonZero { sign, exponent: p }
}

/// Po2 codes for the batch-norm scale and fixed-point codes for the
/// offset: s_m = Q(gamma / sqrt(var + eps)) as a power of two,
/// b_m = Q(beta - gamma * mean / sqrt(var + eps)) in the accumulator
/// format of the tree root the bias feeds.
pub fn quantize_batchnorm(
    bn: &BatchNormSpec,
    cfg: &QuantConfig,
    acc_format: FixedPointFormat,
) -> Result<(Vec<Po2Weight>, Vec<i64>)> {
    bn.validate()?;
    let mut scales = Vec::with_capacity(bn.channels());
    let mut offsets = Vec::with_capacity(bn.channels());
    for m in 0..bn.channels() {
        scales.push(quantize_po2(bn.scale(m), cfg));
        offsets.push(acc_format.quantize(bn.offset(m)));
    }
    Ok((scales, offsets))
}

/// A convolution with Po2 weights, folded batch-norm bias, and the ReLU
/// flag of the activation that follows it in the source graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldedConvLayer {
    pub spec: ConvSpec,
    /// (m, r, s, c) order, like the source weights.
    pub weights: Vec<Po2Weight>,
    /// Per-channel bias codes on the activation fraction grid.
    pub bias: Vec<i64>,
    /// Per-channel bias format (activation format widened by that
    /// channel's tree depth).
    pub bias_format: Vec<FixedPointFormat>,
    /// Batch-norm scale codes that were folded in (identity if none).
    pub bn_scale: Vec<Po2Weight>,
    /// Source offset values the bias codes were quantized from.
    pub bn_offset: Vec<f64>,
    pub relu: bool,
    /// Folded exponents that fell outside the configured range and were
    /// clamped.
    pub clamped_exponents: usize,
}

impl FoldedConvLayer {
    pub fn weight(&self, m: usize, flat: usize) -> Po2Weight {
        self.weights[m * self.spec.weights_per_filter() + flat]
    }

    /// Nonzero weights of filter m.
    pub fn nonzero_count(&self, m: usize) -> usize {
        let per = self.spec.weights_per_filter();
        self.weights[m * per..(m + 1) * per].iter().filter(|w| !w.is_zero()).count()
    }

    /// Tree depth for filter m: ceil(log2(nonzero leaves)), 0 for empty.
    pub fn tree_depth(&self, m: usize) -> u32 {
        tree_depth(self.nonzero_count(m))
    }
}

/// ceil(log2(leaves)) with the degenerate cases pinned to 0.
pub fn tree_depth(leaves: usize) -> u32 {
    if leaves <= 1 {
        0
    } else {
        usize::BITS - (leaves - 1).leading_zeros()
    }
}

/// Fold quantized batch-norm codes into a Po2-quantized convolution.
/// Every nonzero weight in channel m picks up the channel scale's sign
/// and exponent; exponents that leave the configured range are clamped
/// and counted. The bias is re-quantized per channel into the
/// accumulator format implied by that channel's post-fold tree depth.
pub fn fold_batchnorm(
    spec: ConvSpec,
    weights: &[Po2Weight],
    bn_scale: &[Po2Weight],
    bn_offset: &[f64],
    cfg: &QuantConfig,
    relu: bool,
) -> Result<FoldedConvLayer> {
    if bn_scale.len() != spec.out_channels || bn_offset.len() != spec.out_channels {
        return Err(Error::Quant(format!(
            "batch-norm has {} channels, conv produces {}",
            bn_scale.len(),
            spec.out_channels
        )));
    }
    if weights.len() != spec.weight_count() {
        return Err(Error::Quant("weight count does not match conv spec".into()));
    }
    let per = spec.weights_per_filter();
    let mut folded = Vec::with_capacity(weights.len());
    let mut clamped = 0usize;
    for m in 0..spec.out_channels {
        let scale = bn_scale[m];
        for w in &weights[m * per..(m + 1) * per] {
            let f = match (*w, scale) {
                (Po2Weight::Zero, _) | (_, Po2Weight::Zero) => Po2Weight::Zero,
                (
                    Po2Weight::NonZero { sign, exponent },
                    Po2Weight::NonZero { sign: s_sign, exponent: s_exp },
                ) => {
                    let e = exponent + s_exp;
                    let clamped_e = e.clamp(cfg.exp_min, cfg.exp_max);
                    if clamped_e != e {
                        clamped += 1;
                    }
                    Po2Weight::NonZero { sign: sign * s_sign, exponent: clamped_e }
                }
            };
            folded.push(f);
        }
    }

    // Per-channel accumulator format: activation widened by tree depth.
    let mut bias = Vec::with_capacity(spec.out_channels);
    let mut bias_format = Vec::with_capacity(spec.out_channels);
    for m in 0..spec.out_channels {
        let leaves = folded[m * per..(m + 1) * per].iter().filter(|w| !w.is_zero()).count();
        let fmt = cfg.activation.widened(tree_depth(leaves));
        bias.push(fmt.quantize(bn_offset[m]));
        bias_format.push(fmt);
    }

    Ok(FoldedConvLayer {
        spec,
        weights: folded,
        bias,
        bias_format,
        bn_scale: bn_scale.to_vec(),
        bn_offset: bn_offset.to_vec(),
        relu,
        clamped_exponents: clamped,
    })
}

/// Identity batch-norm codes for a conv without one: unit scale, zero
/// offset.
pub fn identity_batchnorm(channels: usize) -> (Vec<Po2Weight>, Vec<f64>) {
    (
        vec![Po2Weight::NonZero { sign: 1, exponent: 0 }; channels],
        vec![0.0; channels],
    )
}

/// A layer of the quantized, folded model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QuantLayer {
    Conv(FoldedConvLayer),
    Relu,
    EltwiseAdd { source: usize },
    GlobalSumPool,
}

/// The hardened feature extractor plus the full-precision classifier kept
/// for the NPU. Produced by [`quantize_model`]; consumed by the hardener
/// and the fixed-point oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedModel {
    pub name: String,
    pub input: TensorShape,
    pub activation: FixedPointFormat,
    pub config: QuantConfig,
    pub layers: Vec<QuantLayer>,
    /// Classifier weights, row-major (out x k_fe), full precision.
    pub classifier: Vec<f64>,
    pub classifier_out: usize,
    pub k_fe: usize,
    /// Total clamped exponents across all folds.
    pub clamped_exponents: usize,
}

impl QuantizedModel {
    /// Structural checks mirroring the real-model validation: shapes
    /// chain, residual sources point backward at matching shapes,
    /// per-channel vectors line up, and the feature count is k_fe.
    pub fn validate(&self) -> Result<()> {
        let mut shapes: Vec<TensorShape> = Vec::with_capacity(self.layers.len());
        let mut cur = self.input;
        for (i, layer) in self.layers.iter().enumerate() {
            cur = match layer {
                QuantLayer::Conv(fc) => {
                    if fc.weights.len() != fc.spec.weight_count()
                        || fc.bias.len() != fc.spec.out_channels
                        || fc.bias_format.len() != fc.spec.out_channels
                    {
                        return Err(Error::Quant(format!("layer {i}: per-channel vectors do not line up")));
                    }
                    fc.spec
                        .output_shape(cur)
                        .map_err(|e| Error::Quant(format!("layer {i}: {e}")))?
                }
                QuantLayer::Relu => cur,
                QuantLayer::EltwiseAdd { source } => {
                    if *source >= i || shapes[*source] != cur {
                        return Err(Error::Quant(format!("layer {i}: bad residual source {source}")));
                    }
                    cur
                }
                QuantLayer::GlobalSumPool => TensorShape { h: 1, w: 1, c: cur.c },
            };
            shapes.push(cur);
        }
        if cur.elements() != self.k_fe {
            return Err(Error::Quant(format!(
                "feature extractor produces {} outputs, k_fe says {}",
                cur.elements(),
                self.k_fe
            )));
        }
        if self.classifier.len() != self.classifier_out * self.k_fe {
            return Err(Error::Quant("classifier weight count does not factor".into()));
        }
        Ok(())
    }

    /// Output shapes of the quantized layers.
    pub fn layer_shapes(&self) -> Vec<TensorShape> {
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut cur = self.input;
        for layer in &self.layers {
            cur = match layer {
                QuantLayer::Conv(fc) => fc.spec.output_shape(cur).expect("validated at build"),
                QuantLayer::Relu | QuantLayer::EltwiseAdd { .. } => cur,
                QuantLayer::GlobalSumPool => TensorShape { h: 1, w: 1, c: cur.c },
            };
            shapes.push(cur);
        }
        shapes
    }

    pub fn feature_shape(&self) -> TensorShape {
        self.layer_shapes().last().copied().unwrap_or(self.input)
    }
}

/// Quantize and fold a real-valued model: conv weights to Po2 codes,
/// batch norms quantized and folded into the preceding conv, ReLU layers
/// that directly follow a conv fused into it, and the classifier kept at
/// full precision. Zeroed (pruned) weights fall below the zero threshold
/// and come out as `Po2Weight::Zero`.
pub fn quantize_model(ir: &ModelIR, cfg: &QuantConfig) -> Result<QuantizedModel> {
    ir.validate()?;
    let mut layers: Vec<QuantLayer> = Vec::new();
    // Maps source-layer id -> quantized-layer index producing its output.
    let mut id_map: Vec<usize> = Vec::with_capacity(ir.layers.len());
    // Whether the source layer's output survives fusion (a batch norm in
    // the middle of a conv+bn+relu group does not: its pre-ReLU value has
    // no node in the quantized model).
    let mut is_tail: Vec<bool> = Vec::with_capacity(ir.layers.len());
    let mut clamped_total = 0usize;

    let mut i = 0;
    while i < ir.layers.len() {
        match &ir.layers[i] {
            LayerSpec::Conv { spec, weights } => {
                let codes: Vec<Po2Weight> = weights.iter().map(|w| quantize_po2(*w, cfg)).collect();
                // Absorb a following BatchNorm, then a following ReLU.
                let mut consumed = 0usize;
                let (bn_scale, bn_offset) = match ir.layers.get(i + 1) {
                    Some(LayerSpec::BatchNorm(bn)) => {
                        consumed += 1;
                        let mut scales = Vec::with_capacity(bn.channels());
                        let mut offsets = Vec::with_capacity(bn.channels());
                        for m in 0..bn.channels() {
                            scales.push(quantize_po2(bn.scale(m), cfg));
                            offsets.push(bn.offset(m));
                        }
                        (scales, offsets)
                    }
                    _ => identity_batchnorm(spec.out_channels),
                };
                let relu = matches!(ir.layers.get(i + 1 + consumed), Some(LayerSpec::Relu));
                if relu {
                    consumed += 1;
                }
                let folded = fold_batchnorm(*spec, &codes, &bn_scale, &bn_offset, cfg, relu)?;
                clamped_total += folded.clamped_exponents;
                layers.push(QuantLayer::Conv(folded));
                // The conv and everything it absorbed map to this layer,
                // but only the group's last member keeps its own output.
                for k in 0..=consumed {
                    id_map.push(layers.len() - 1);
                    is_tail.push(k == consumed);
                }
                i += 1 + consumed;
            }
            LayerSpec::BatchNorm(_) => {
                return Err(Error::Quant(format!(
                    "standalone batch-norm at layer {i} has no preceding conv to fold into"
                )));
            }
            LayerSpec::Relu => {
                layers.push(QuantLayer::Relu);
                id_map.push(layers.len() - 1);
                is_tail.push(true);
                i += 1;
            }
            LayerSpec::EltwiseAdd { source } => {
                let mapped = *id_map.get(*source).ok_or_else(|| {
                    Error::Quant(format!("eltwise_add source {source} not yet produced"))
                })?;
                if !is_tail[*source] {
                    return Err(Error::Quant(format!(
                        "eltwise_add source {source} taps a pre-activation value inside a fused conv group"
                    )));
                }
                layers.push(QuantLayer::EltwiseAdd { source: mapped });
                id_map.push(layers.len() - 1);
                is_tail.push(true);
                i += 1;
            }
            LayerSpec::GlobalSumPool => {
                layers.push(QuantLayer::GlobalSumPool);
                id_map.push(layers.len() - 1);
                is_tail.push(true);
                i += 1;
            }
            LayerSpec::Linear { out_features, in_features, weights } => {
                if i != ir.layers.len() - 1 {
                    return Err(Error::Quant("classifier must be the last layer".into()));
                }
                let model = QuantizedModel {
                    name: ir.name.clone(),
                    input: ir.input,
                    activation: cfg.activation,
                    config: *cfg,
                    layers,
                    classifier: weights.clone(),
                    classifier_out: *out_features,
                    k_fe: *in_features,
                    clamped_exponents: clamped_total,
                };
                let fe = model.feature_shape();
                if fe.elements() != *in_features {
                    return Err(Error::Quant(format!(
                        "feature extractor produces {} outputs, classifier expects {}",
                        fe.elements(),
                        in_features
                    )));
                }
                return Ok(model);
            }
        }
    }
    Err(Error::Quant("model has no classifier".into()))
}
