//! Layer-graph intermediate representation: tensor shapes, layer specs,
//! shape inference, and the Toeplitz (GEMM) view of convolutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial activation shape, height x width x channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorShape {
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl TensorShape {
    pub fn new(h: usize, w: usize, c: usize) -> Result<Self> {
        if h == 0 || w == 0 || c == 0 {
            return Err(Error::Model(format!("degenerate tensor shape {h}x{w}x{c}")));
        }
        Ok(Self { h, w, c })
    }

    pub fn elements(&self) -> usize {
        self.h * self.w * self.c
    }

    /// Flat index in (h, w, c) order.
    pub fn index(&self, h: usize, w: usize, c: usize) -> usize {
        (h * self.w + w) * self.c + c
    }
}

impl std::fmt::Display for TensorShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.h, self.w, self.c)
    }
}

/// Convolution geometry. `groups == in_channels == out_channels` encodes a
/// depthwise convolution; the weight tensor holds
/// `out_channels * r * s * (in_channels / groups)` elements in
/// (m, r, s, c) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub r: usize,
    pub s: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
    pub padding: usize,
    pub groups: usize,
}

impl ConvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.s == 0 {
            return Err(Error::Model("kernel dims must be >= 1".into()));
        }
        if self.stride == 0 {
            return Err(Error::Model("stride must be >= 1".into()));
        }
        if self.groups == 0 || self.in_channels % self.groups != 0 {
            return Err(Error::Model(format!(
                "in_channels {} not divisible by groups {}",
                self.in_channels, self.groups
            )));
        }
        if self.out_channels % self.groups != 0 {
            return Err(Error::Model(format!(
                "out_channels {} not divisible by groups {}",
                self.out_channels, self.groups
            )));
        }
        Ok(())
    }

    pub fn is_depthwise(&self) -> bool {
        self.groups > 1 && self.groups == self.in_channels && self.out_channels == self.in_channels
    }

    /// Channels seen by each filter.
    pub fn channels_per_group(&self) -> usize {
        self.in_channels / self.groups
    }

    /// Weight elements per filter: R*S*(C/groups).
    pub fn weights_per_filter(&self) -> usize {
        self.r * self.s * self.channels_per_group()
    }

    pub fn weight_count(&self) -> usize {
        self.out_channels * self.weights_per_filter()
    }

    /// Output spatial shape under the stride/padding formula. Errors when
    /// (H + 2*pad - R) is not divisible by the stride.
    pub fn output_shape(&self, input: TensorShape) -> Result<TensorShape> {
        self.validate()?;
        if input.c != self.in_channels {
            return Err(Error::Model(format!(
                "conv expects {} input channels, got {}",
                self.in_channels, input.c
            )));
        }
        let p = conv_out_dim(input.h, self.r, self.stride, self.padding)?;
        let q = conv_out_dim(input.w, self.s, self.stride, self.padding)?;
        TensorShape::new(p, q, self.out_channels)
    }
}

// Standard floor semantics: (H + 2*pad - R) / stride + 1. A stride that
// does not divide the span exactly leaves trailing pixels unread, which
// the hardened netlist simply never wires up.
fn conv_out_dim(input: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    let padded = input + 2 * padding;
    if padded < kernel {
        return Err(Error::Model(format!(
            "non-integral output dimension: kernel {kernel} larger than padded input {padded}"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

/// Per-channel batch normalization parameters (inference-time buffers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNormSpec {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub epsilon: f64,
}

impl BatchNormSpec {
    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.gamma.len();
        if self.beta.len() != n || self.mean.len() != n || self.variance.len() != n {
            return Err(Error::Model("batch-norm parameter vectors differ in length".into()));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::Model("batch-norm epsilon must be > 0".into()));
        }
        if self.variance.iter().any(|v| *v < 0.0) {
            return Err(Error::Model("batch-norm variance must be >= 0".into()));
        }
        Ok(())
    }

    /// The folded per-channel scale gamma / sqrt(var + eps).
    pub fn scale(&self, m: usize) -> f64 {
        self.gamma[m] / (self.variance[m] + self.epsilon).sqrt()
    }

    /// The folded per-channel offset beta - gamma * mean / sqrt(var + eps).
    pub fn offset(&self, m: usize) -> f64 {
        self.beta[m] - self.gamma[m] * self.mean[m] / (self.variance[m] + self.epsilon).sqrt()
    }
}

/// One layer of the flat graph. Residual connections are explicit
/// `EltwiseAdd` back-edges naming an earlier layer id; global average
/// pooling appears as `GlobalSumPool` with the divisor absorbed into the
/// classifier at load time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LayerSpec {
    Conv {
        spec: ConvSpec,
        /// (m, r, s, c) order, length `spec.weight_count()`.
        weights: Vec<f64>,
    },
    BatchNorm(BatchNormSpec),
    Relu,
    EltwiseAdd {
        /// Id (index) of the earlier layer whose output is added.
        source: usize,
    },
    GlobalSumPool,
    Linear {
        out_features: usize,
        in_features: usize,
        /// Row-major (out_features x in_features).
        weights: Vec<f64>,
    },
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::BatchNorm(_) => "batch_norm",
            LayerSpec::Relu => "relu",
            LayerSpec::EltwiseAdd { .. } => "eltwise_add",
            LayerSpec::GlobalSumPool => "global_sum_pool",
            LayerSpec::Linear { .. } => "linear",
        }
    }
}

/// The loaded model: an ordered layer sequence over a fixed input shape,
/// with exactly one Linear classifier in last position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelIR {
    pub name: String,
    pub input: TensorShape,
    pub layers: Vec<LayerSpec>,
    /// Index of the classifier layer (always the last one).
    pub classifier: usize,
}

/// GEMM dimensions (M, RSC, PQ) of a convolution in Toeplitz form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToeplitzDims {
    pub m: usize,
    pub rsc: usize,
    pub pq: usize,
}

/// GEMM view of a convolution: M filters of RSC weights against PQ
/// unrolled input patches.
pub fn toeplitz_dims(conv: &ConvSpec, input: TensorShape) -> Result<ToeplitzDims> {
    let out = conv.output_shape(input)?;
    Ok(ToeplitzDims {
        m: conv.out_channels,
        rsc: conv.weights_per_filter(),
        pq: out.h * out.w,
    })
}

impl ModelIR {
    /// Structural validation: weight sizes, classifier position, residual
    /// sources, end-to-end shape inference.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Model("model has no layers".into()));
        }
        let linear_positions: Vec<usize> = self
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::Linear { .. }))
            .map(|(i, _)| i)
            .collect();
        if linear_positions.len() != 1 {
            return Err(Error::Model(format!(
                "expected exactly one linear classifier, found {}",
                linear_positions.len()
            )));
        }
        if linear_positions[0] != self.layers.len() - 1 {
            return Err(Error::Model(format!(
                "linear classifier at layer {} is not last",
                linear_positions[0]
            )));
        }
        if self.classifier != linear_positions[0] {
            return Err(Error::Model("classifier index does not name the linear layer".into()));
        }
        let shapes = self.infer_shapes()?;
        // Feature-extractor output length must match the classifier input.
        let fe_shape = if self.layers.len() >= 2 {
            shapes[self.layers.len() - 2]
        } else {
            self.input
        };
        if let LayerSpec::Linear { out_features, in_features, weights } = &self.layers[self.classifier] {
            if fe_shape.elements() != *in_features {
                return Err(Error::ShapeMismatch {
                    layer: self.classifier,
                    reason: format!(
                        "classifier expects {} features, extractor produces {}",
                        in_features,
                        fe_shape.elements()
                    ),
                });
            }
            if weights.len() != out_features * in_features {
                return Err(Error::ShapeMismatch {
                    layer: self.classifier,
                    reason: format!(
                        "classifier weight count {} != {}x{}",
                        weights.len(),
                        out_features,
                        in_features
                    ),
                });
            }
        }
        Ok(())
    }

    /// One output shape per layer. Errors name the offending layer.
    pub fn infer_shapes(&self) -> Result<Vec<TensorShape>> {
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut cur = self.input;
        for (i, layer) in self.layers.iter().enumerate() {
            cur = match layer {
                LayerSpec::Conv { spec, weights } => {
                    if weights.len() != spec.weight_count() {
                        return Err(Error::ShapeMismatch {
                            layer: i,
                            reason: format!(
                                "conv weight count {} != expected {}",
                                weights.len(),
                                spec.weight_count()
                            ),
                        });
                    }
                    spec.output_shape(cur).map_err(|e| Error::ShapeMismatch {
                        layer: i,
                        reason: e.to_string(),
                    })?
                }
                LayerSpec::BatchNorm(bn) => {
                    bn.validate().map_err(|e| Error::ShapeMismatch { layer: i, reason: e.to_string() })?;
                    if bn.channels() != cur.c {
                        return Err(Error::ShapeMismatch {
                            layer: i,
                            reason: format!("batch-norm has {} channels, input has {}", bn.channels(), cur.c),
                        });
                    }
                    cur
                }
                LayerSpec::Relu => cur,
                LayerSpec::EltwiseAdd { source } => {
                    if *source >= i {
                        return Err(Error::ShapeMismatch {
                            layer: i,
                            reason: format!("eltwise_add source {source} is not an earlier layer"),
                        });
                    }
                    let src_shape = shapes[*source];
                    if src_shape != cur {
                        return Err(Error::ShapeMismatch {
                            layer: i,
                            reason: format!("eltwise_add shapes differ: {src_shape} vs {cur}"),
                        });
                    }
                    cur
                }
                LayerSpec::GlobalSumPool => TensorShape { h: 1, w: 1, c: cur.c },
                LayerSpec::Linear { out_features, in_features, .. } => {
                    if cur.elements() != *in_features {
                        return Err(Error::ShapeMismatch {
                            layer: i,
                            reason: format!("linear expects {in_features} inputs, got {}", cur.elements()),
                        });
                    }
                    TensorShape { h: 1, w: 1, c: *out_features }
                }
            };
            shapes.push(cur);
        }
        Ok(shapes)
    }

    /// Shape of the feature-extractor output (everything before the
    /// classifier).
    pub fn feature_shape(&self) -> Result<TensorShape> {
        let shapes = self.infer_shapes()?;
        if self.layers.len() >= 2 {
            Ok(shapes[self.layers.len() - 2])
        } else {
            Ok(self.input)
        }
    }

    /// Number of feature-extractor outputs feeding the classifier.
    pub fn k_fe(&self) -> Result<usize> {
        Ok(self.feature_shape()?.elements())
    }

    /// Toeplitz dims of every conv layer, in layer order, with layer ids.
    pub fn conv_toeplitz_dims(&self) -> Result<Vec<(usize, ConvSpec, ToeplitzDims)>> {
        let shapes = self.infer_shapes()?;
        let mut out = Vec::new();
        let mut prev = self.input;
        for (i, layer) in self.layers.iter().enumerate() {
            if let LayerSpec::Conv { spec, .. } = layer {
                out.push((i, *spec, toeplitz_dims(spec, prev)?));
            }
            prev = shapes[i];
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv(r: usize, c: usize, m: usize, stride: usize, padding: usize) -> ConvSpec {
        ConvSpec { r, s: r, in_channels: c, out_channels: m, stride, padding, groups: 1 }
    }

    #[test]
    fn conv_output_formula() {
        // MobileNetV2 first layer: 3x3 stride 2 pad 1 on 224x224x3 -> 112x112
        let spec = conv(3, 3, 32, 2, 1);
        let out = spec.output_shape(TensorShape { h: 224, w: 224, c: 3 }).unwrap();
        assert_eq!(out, TensorShape { h: 112, w: 112, c: 32 });

        // 1x1 stride 1 pad 0 keeps H, W
        let spec = conv(1, 8, 16, 1, 0);
        let out = spec.output_shape(TensorShape { h: 7, w: 7, c: 8 }).unwrap();
        assert_eq!(out, TensorShape { h: 7, w: 7, c: 16 });
    }

    #[test]
    fn conv_output_floors_and_oversized_kernels_error() {
        // (5 - 3) / 3 + 1 floors to 1
        let spec = conv(3, 3, 8, 3, 0);
        let out = spec.output_shape(TensorShape { h: 5, w: 5, c: 3 }).unwrap();
        assert_eq!((out.h, out.w), (1, 1));
        // kernel larger than the padded input cannot produce an output
        let spec = conv(3, 3, 8, 1, 0);
        assert!(spec.output_shape(TensorShape { h: 2, w: 2, c: 3 }).is_err());
    }

    #[test]
    fn toeplitz_dims_examples() {
        // final MobileNetV2 conv: 1x1x320 -> 1280 on 7x7
        let spec = conv(1, 320, 1280, 1, 0);
        let dims = toeplitz_dims(&spec, TensorShape { h: 7, w: 7, c: 320 }).unwrap();
        assert_eq!((dims.m, dims.rsc, dims.pq), (1280, 320, 49));

        // first conv: 3x3x3 -> 32, stride 2, pad 1 on 224x224x3
        let spec = conv(3, 3, 32, 2, 1);
        let dims = toeplitz_dims(&spec, TensorShape { h: 224, w: 224, c: 3 }).unwrap();
        assert_eq!((dims.m, dims.rsc, dims.pq), (32, 27, 12544));

        // degenerate 1x1x1
        let spec = conv(1, 1, 4, 1, 0);
        let dims = toeplitz_dims(&spec, TensorShape { h: 1, w: 1, c: 1 }).unwrap();
        assert_eq!((dims.m, dims.rsc, dims.pq), (4, 1, 1));
    }

    #[test]
    fn toeplitz_consistency_with_weight_count() {
        let spec = ConvSpec { r: 3, s: 3, in_channels: 32, out_channels: 32, stride: 1, padding: 1, groups: 32 };
        assert!(spec.is_depthwise());
        let dims = toeplitz_dims(&spec, TensorShape { h: 14, w: 14, c: 32 }).unwrap();
        assert_eq!(dims.m * dims.rsc, spec.weight_count());
        assert_eq!(dims.rsc, 9);
    }

    #[test]
    fn sum_pool_collapses_spatial_dims() {
        let ir = ModelIR {
            name: "t".into(),
            input: TensorShape { h: 7, w: 7, c: 1280 },
            layers: vec![
                LayerSpec::GlobalSumPool,
                LayerSpec::Linear { out_features: 10, in_features: 1280, weights: vec![0.0; 12800] },
            ],
            classifier: 1,
        };
        let shapes = ir.infer_shapes().unwrap();
        assert_eq!(shapes[0], TensorShape { h: 1, w: 1, c: 1280 });
        ir.validate().unwrap();
    }

    #[test]
    fn misplaced_linear_is_rejected() {
        let ir = ModelIR {
            name: "t".into(),
            input: TensorShape { h: 2, w: 2, c: 1 },
            layers: vec![
                LayerSpec::Linear { out_features: 4, in_features: 4, weights: vec![0.0; 16] },
                LayerSpec::Relu,
            ],
            classifier: 0,
        };
        assert!(ir.validate().is_err());
    }

    #[test]
    fn identity_single_conv_model() {
        let ir = ModelIR {
            name: "t".into(),
            input: TensorShape { h: 1, w: 1, c: 1 },
            layers: vec![
                LayerSpec::Conv { spec: conv(1, 1, 1, 1, 0), weights: vec![2.0] },
                LayerSpec::Linear { out_features: 1, in_features: 1, weights: vec![1.0] },
            ],
            classifier: 1,
        };
        ir.validate().unwrap();
        let shapes = ir.infer_shapes().unwrap();
        assert_eq!(shapes[0], ir.input);
    }
}
