//! Bundled MobileNetV2 layer table: shapes, strides, and expansion factors
//! from the architecture's public definition. Weights are random but
//! seeded; the area and cycle models depend only on shapes and sparsity,
//! so trained values are not needed for netlist statistics.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ir::{BatchNormSpec, ConvSpec, LayerSpec, ModelIR, TensorShape};

/// Inverted-residual block settings: (expansion t, output channels c,
/// repeats n, first-repeat stride s).
const BLOCKS: [(usize, usize, usize, usize); 7] = [
    (1, 16, 1, 1),
    (6, 24, 2, 2),
    (6, 32, 3, 2),
    (6, 64, 4, 2),
    (6, 96, 3, 1),
    (6, 160, 3, 2),
    (6, 320, 1, 1),
];

const BN_EPS: f64 = 1e-5;

struct Builder {
    rng: ChaCha8Rng,
    layers: Vec<LayerSpec>,
    channels: usize,
}

impl Builder {
    fn weights(&mut self, count: usize, fan_in: usize) -> Vec<f64> {
        // He-style scale keeps activations in a sane range for the
        // netlist-statistics use case.
        let std = (2.0 / fan_in as f64).sqrt();
        (0..count).map(|_| self.rng.gen_range(-2.0..2.0) * std).collect()
    }

    fn conv(&mut self, r: usize, out_channels: usize, stride: usize, padding: usize, groups: usize) {
        let spec = ConvSpec {
            r,
            s: r,
            in_channels: self.channels,
            out_channels,
            stride,
            padding,
            groups,
        };
        let fan_in = spec.weights_per_filter();
        let w = self.weights(spec.weight_count(), fan_in);
        self.layers.push(LayerSpec::Conv { spec, weights: w });
        self.channels = out_channels;
    }

    fn batch_norm(&mut self) {
        let c = self.channels;
        let bn = BatchNormSpec {
            gamma: (0..c).map(|_| self.rng.gen_range(0.5..1.5)).collect(),
            beta: (0..c).map(|_| self.rng.gen_range(-0.2..0.2)).collect(),
            mean: (0..c).map(|_| self.rng.gen_range(-0.2..0.2)).collect(),
            variance: (0..c).map(|_| self.rng.gen_range(0.5..1.5)).collect(),
            epsilon: BN_EPS,
        };
        self.layers.push(LayerSpec::BatchNorm(bn));
    }

    fn conv_bn(&mut self, r: usize, out: usize, stride: usize, padding: usize, groups: usize, relu: bool) {
        self.conv(r, out, stride, padding, groups);
        self.batch_norm();
        if relu {
            self.layers.push(LayerSpec::Relu);
        }
    }
}

/// Build the bundled MobileNetV2-shape IR with seeded weights:
/// 224x224x3 input, 1280 feature-extractor outputs, 1000x1280 classifier.
pub fn model_ir(seed: u64) -> ModelIR {
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(seed),
        layers: Vec::new(),
        channels: 3,
    };

    // Stem: 3x3 stride-2 conv to 32 channels.
    b.conv_bn(3, 32, 2, 1, 1, true);

    for &(t, c, n, s) in BLOCKS.iter() {
        for rep in 0..n {
            let stride = if rep == 0 { s } else { 1 };
            let in_c = b.channels;
            let expanded = in_c * t;
            // Residual only for stride-1 repeats with matching channels.
            let residual_src = if stride == 1 && in_c == c {
                // Index of the layer whose output shape matches: the
                // previous layer currently at the tail of the list.
                Some(b.layers.len() - 1)
            } else {
                None
            };
            if t != 1 {
                b.conv_bn(1, expanded, 1, 0, 1, true); // expand
            }
            b.conv_bn(3, expanded, stride, 1, expanded, true); // depthwise
            b.conv_bn(1, c, 1, 0, 1, false); // project (linear bottleneck)
            if let Some(src) = residual_src {
                b.layers.push(LayerSpec::EltwiseAdd { source: src });
            }
        }
    }

    // Head: 1x1 conv to 1280 features, global pool, classifier.
    b.conv_bn(1, 1280, 1, 0, 1, true);
    b.layers.push(LayerSpec::GlobalSumPool);
    let classifier_weights = b.weights(1000 * 1280, 1280);
    b.layers.push(LayerSpec::Linear {
        out_features: 1000,
        in_features: 1280,
        weights: classifier_weights,
    });

    let classifier = b.layers.len() - 1;
    ModelIR {
        name: format!("mobilenetv2-seed{seed}"),
        input: TensorShape { h: 224, w: 224, c: 3 },
        layers: b.layers,
        classifier,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::LayerSpec;

    #[test]
    fn bundled_model_validates() {
        let ir = model_ir(7);
        ir.validate().unwrap();
        assert_eq!(ir.input, TensorShape { h: 224, w: 224, c: 3 });
        assert_eq!(ir.k_fe().unwrap(), 1280);
        if let LayerSpec::Linear { out_features, in_features, .. } = &ir.layers[ir.classifier] {
            assert_eq!((*out_features, *in_features), (1000, 1280));
        } else {
            panic!("classifier is not linear");
        }
    }

    #[test]
    fn layer_inventory_matches_the_architecture() {
        let ir = model_ir(7);
        let convs = ir.conv_toeplitz_dims().unwrap();
        // 1 stem + 17 depthwise + 17 projections + 16 expansions + 1 head
        assert_eq!(convs.len(), 52);
        // Toeplitz dims factor the weight tensor and the output plane.
        let shapes = ir.infer_shapes().unwrap();
        for (i, spec, t) in &convs {
            assert_eq!(t.m * t.rsc, spec.weight_count());
            assert_eq!(t.pq, shapes[*i].h * shapes[*i].w);
        }
        let depthwise = convs.iter().filter(|(_, s, _)| s.is_depthwise()).count();
        assert_eq!(depthwise, 17);
        // Final conv feeds the 7x7x1280 feature map.
        let (_, last_spec, last_dims) = convs.last().unwrap();
        assert_eq!(last_spec.out_channels, 1280);
        assert_eq!((last_dims.m, last_dims.rsc, last_dims.pq), (1280, 320, 49));
        // Residual adds: one per stride-1 repeat with matching channels.
        let residuals = ir.layers.iter().filter(|l| matches!(l, LayerSpec::EltwiseAdd { .. })).count();
        assert_eq!(residuals, 10);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = model_ir(3);
        let b = model_ir(3);
        assert_eq!(a, b);
    }
}
