//! Seeded desk-scale model and input generation. Used by the `diff`
//! subcommand and the equivalence test fleet: every model and input is a
//! pure function of its seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fixed::FixedPointFormat;
use crate::ir::{BatchNormSpec, ConvSpec, LayerSpec, ModelIR, TensorShape};
use crate::sim::FixedTensor;

fn rand_weights(rng: &mut ChaCha8Rng, count: usize, scale: f64) -> Vec<f64> {
    // Keep magnitudes comfortably above the default zero threshold so
    // every generated weight survives quantization.
    (0..count)
        .map(|_| {
            let w: f64 = rng.gen_range(-1.0..1.0);
            (w.signum() * (0.02 + w.abs())) * scale
        })
        .collect()
}

fn rand_bn(rng: &mut ChaCha8Rng, channels: usize) -> BatchNormSpec {
    BatchNormSpec {
        gamma: (0..channels).map(|_| rng.gen_range(0.5..1.5)).collect(),
        beta: (0..channels).map(|_| rng.gen_range(-0.5..0.5)).collect(),
        mean: (0..channels).map(|_| rng.gen_range(-0.5..0.5)).collect(),
        variance: (0..channels).map(|_| rng.gen_range(0.5..1.5)).collect(),
        epsilon: 1e-5,
    }
}

/// A fixed three-stage toy model: conv+bn+relu, depthwise conv, pool,
/// classifier. Small enough to harden and print.
pub fn toy_model(seed: u64) -> ModelIR {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = TensorShape { h: 8, w: 8, c: 3 };
    let c1 = ConvSpec { r: 3, s: 3, in_channels: 3, out_channels: 4, stride: 1, padding: 1, groups: 1 };
    let c2 = ConvSpec { r: 3, s: 3, in_channels: 4, out_channels: 4, stride: 1, padding: 1, groups: 4 };
    let mut layers = vec![
        LayerSpec::Conv { spec: c1, weights: rand_weights(&mut rng, c1.weight_count(), 0.5) },
        LayerSpec::BatchNorm(rand_bn(&mut rng, 4)),
        LayerSpec::Relu,
        LayerSpec::Conv { spec: c2, weights: rand_weights(&mut rng, c2.weight_count(), 0.5) },
        LayerSpec::BatchNorm(rand_bn(&mut rng, 4)),
        LayerSpec::Relu,
        LayerSpec::GlobalSumPool,
    ];
    let k_fe = 4;
    layers.push(LayerSpec::Linear {
        out_features: 3,
        in_features: k_fe,
        weights: rand_weights(&mut rng, 3 * k_fe, 0.5),
    });
    let classifier = layers.len() - 1;
    ModelIR { name: format!("toy-seed{seed}"), input, layers, classifier }
}

/// A randomized desk-scale model: inputs at most 16x16x8, at most four
/// compute stages mixing plain and depthwise convs, batch norms, ReLUs,
/// residual adds, and an optional global sum-pool before the classifier.
pub fn random_model(seed: u64) -> ModelIR {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = [5, 6, 8, 12, 16][rng.gen_range(0..5)];
    let w = [5, 6, 8, 12, 16][rng.gen_range(0..5)];
    let c = [1, 2, 3, 4, 8][rng.gen_range(0..5)];
    let input = TensorShape { h, w, c };

    let mut layers: Vec<LayerSpec> = Vec::new();
    let mut shape = input;
    let stages = rng.gen_range(1..=4);
    for _ in 0..stages {
        let depthwise = rng.gen_bool(0.25);
        let kernel = if shape.h >= 3 && shape.w >= 3 && rng.gen_bool(0.5) { 3 } else { 1 };
        let stride = if kernel == 3 && rng.gen_bool(0.3) && (shape.h + 2 - 3) % 2 == 0 && (shape.w + 2 - 3) % 2 == 0
        {
            2
        } else {
            1
        };
        let padding = if kernel == 3 { 1 } else { 0 };
        let spec = if depthwise {
            ConvSpec {
                r: kernel,
                s: kernel,
                in_channels: shape.c,
                out_channels: shape.c,
                stride,
                padding,
                groups: shape.c,
            }
        } else {
            let m = [1, 2, 4, 6, 8][rng.gen_range(0..5)];
            ConvSpec { r: kernel, s: kernel, in_channels: shape.c, out_channels: m, stride, padding, groups: 1 }
        };
        let pre_conv_last = layers.len().checked_sub(1);
        layers.push(LayerSpec::Conv {
            spec,
            weights: rand_weights(&mut rng, spec.weight_count(), 0.6),
        });
        let out = spec.output_shape(shape).expect("generator picks valid dims");
        if rng.gen_bool(0.7) {
            layers.push(LayerSpec::BatchNorm(rand_bn(&mut rng, out.c)));
        }
        if rng.gen_bool(0.7) {
            layers.push(LayerSpec::Relu);
        }
        // Residual back to the stage input when shapes allow it, with an
        // occasional standalone ReLU after the add.
        if out == shape && rng.gen_bool(0.5) {
            if let Some(src) = pre_conv_last {
                layers.push(LayerSpec::EltwiseAdd { source: src });
                if rng.gen_bool(0.3) {
                    layers.push(LayerSpec::Relu);
                }
            }
        }
        shape = out;
    }
    if rng.gen_bool(0.5) || shape.elements() > 64 {
        layers.push(LayerSpec::GlobalSumPool);
        shape = TensorShape { h: 1, w: 1, c: shape.c };
    }
    let k_fe = shape.elements();
    let out_features = rng.gen_range(2..=5);
    layers.push(LayerSpec::Linear {
        out_features,
        in_features: k_fe,
        weights: rand_weights(&mut rng, out_features * k_fe, 0.5),
    });
    let classifier = layers.len() - 1;
    ModelIR { name: format!("random-seed{seed}"), input, layers, classifier }
}

/// Random activation codes spanning the full format range.
pub fn random_input(seed: u64, shape: TensorShape, format: FixedPointFormat) -> FixedTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codes = (0..shape.elements())
        .map(|_| rng.gen_range(format.min_code()..=format.max_code()))
        .collect();
    FixedTensor { shape, format, codes }
}

/// Random real-valued input within the representable range of a format.
pub fn random_real_input(seed: u64, shape: TensorShape, format: FixedPointFormat) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..shape.elements())
        .map(|_| rng.gen_range(format.min_value()..format.max_value()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_models_validate() {
        for seed in 0..50 {
            let ir = random_model(seed);
            ir.validate().unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            let TensorShape { h, w, c } = ir.input;
            assert!(h <= 16 && w <= 16 && c <= 8);
        }
        toy_model(1).validate().unwrap();
    }

    #[test]
    fn generation_is_seed_deterministic() {
        assert_eq!(random_model(42), random_model(42));
        let shape = TensorShape { h: 4, w: 4, c: 2 };
        let f = FixedPointFormat::q3_5();
        assert_eq!(random_input(9, shape, f), random_input(9, shape, f));
    }
}
