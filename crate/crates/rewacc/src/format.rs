//! On-disk model format: a JSON manifest describing layers and shapes,
//! with numeric payloads in a sidecar binary blob referenced by byte
//! offset and length (`{"offset": N, "len": N}`). Real-valued models
//! store little-endian FP32 weights; quantized models
//! (`"quantized": true`) store Po2 codes as (sign, exponent, zero) byte
//! triples, bias codes as little-endian i64, batch-norm offset sources
//! as little-endian f64, and keep the classifier in FP32.
//!
//! Manifest fields: `format_version`, `name`, `quantized`, `input`
//! (`{h, w, c}`), `weights_file`, `layers`. Real layer tags: `conv`
//! (`r`, `s`, `in_channels`, `out_channels`, `stride`, `padding`,
//! `groups`, `weights`), `batch_norm` (`epsilon`, `gamma`, `beta`,
//! `mean`, `variance`), `relu`, `eltwise_add` (`source`),
//! `global_sum_pool`, `global_avg_pool` (load-time rewrite), `linear`
//! (`out_features`, `in_features`, `weights`). Quantized manifests add
//! `activation_format`, `quant_config`, `k_fe`, `classifier_out`,
//! `clamped_exponents`, and a top-level `classifier` blob; their conv
//! layers carry `relu`, `clamped_exponents`, `po2_weights`, `bias`,
//! `bn_scale`, and `bn_offset`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::FixedPointFormat;
use crate::ir::{BatchNormSpec, ConvSpec, LayerSpec, ModelIR, TensorShape};
use crate::quant::{tree_depth, FoldedConvLayer, Po2Weight, QuantConfig, QuantLayer, QuantizedModel};
use crate::sim::FixedTensor;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BlobRef {
    /// Byte offset into the weights file.
    pub offset: usize,
    /// Byte length.
    pub len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum RealLayer {
    Conv {
        r: usize,
        s: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        padding: usize,
        groups: usize,
        weights: BlobRef,
    },
    BatchNorm {
        epsilon: f64,
        gamma: BlobRef,
        beta: BlobRef,
        mean: BlobRef,
        variance: BlobRef,
    },
    Relu,
    EltwiseAdd {
        source: usize,
    },
    GlobalSumPool,
    /// Average-pool spelling accepted on load: rewritten to a sum pool
    /// with the 1/(H*W) divisor folded into the classifier weights (the
    /// datapath has no divider; the classifier runs at full precision,
    /// so the absorption is exact). Never written back.
    GlobalAvgPool,
    Linear {
        out_features: usize,
        in_features: usize,
        weights: BlobRef,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct RealManifest {
    format_version: u32,
    name: String,
    quantized: bool,
    input: TensorShape,
    weights_file: String,
    layers: Vec<RealLayer>,
}

struct BlobWriter {
    bytes: Vec<u8>,
}

impl BlobWriter {
    fn new() -> Self {
        Self { bytes: Vec::new() }
    }

    fn write_f32(&mut self, values: &[f64]) -> BlobRef {
        let offset = self.bytes.len();
        for v in values {
            self.bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        BlobRef { offset, len: self.bytes.len() - offset }
    }

    fn write_i64(&mut self, values: &[i64]) -> BlobRef {
        let offset = self.bytes.len();
        for v in values {
            self.bytes.extend_from_slice(&v.to_le_bytes());
        }
        BlobRef { offset, len: self.bytes.len() - offset }
    }

    fn write_f64(&mut self, values: &[f64]) -> BlobRef {
        let offset = self.bytes.len();
        for v in values {
            self.bytes.extend_from_slice(&v.to_le_bytes());
        }
        BlobRef { offset, len: self.bytes.len() - offset }
    }

    fn write_po2(&mut self, codes: &[Po2Weight]) -> BlobRef {
        let offset = self.bytes.len();
        for c in codes {
            match c {
                Po2Weight::Zero => self.bytes.extend_from_slice(&[0, 0, 1]),
                Po2Weight::NonZero { sign, exponent } => {
                    self.bytes.extend_from_slice(&[*sign as u8, *exponent as i8 as u8, 0])
                }
            }
        }
        BlobRef { offset, len: self.bytes.len() - offset }
    }
}

struct BlobReader<'a> {
    bytes: &'a [u8],
}

impl<'a> BlobReader<'a> {
    fn slice(&self, r: &BlobRef) -> Result<&'a [u8]> {
        self.bytes
            .get(r.offset..r.offset + r.len)
            .ok_or_else(|| Error::MissingWeights(format!("blob range {}+{} out of bounds", r.offset, r.len)))
    }

    fn read_f32(&self, r: &BlobRef) -> Result<Vec<f64>> {
        let s = self.slice(r)?;
        if s.len() % 4 != 0 {
            return Err(Error::Parse("fp32 blob length not a multiple of 4".into()));
        }
        Ok(s.chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect())
    }

    fn read_i64(&self, r: &BlobRef) -> Result<Vec<i64>> {
        let s = self.slice(r)?;
        if s.len() % 8 != 0 {
            return Err(Error::Parse("i64 blob length not a multiple of 8".into()));
        }
        Ok(s.chunks_exact(8)
            .map(|b| i64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]))
            .collect())
    }

    fn read_f64(&self, r: &BlobRef) -> Result<Vec<f64>> {
        let s = self.slice(r)?;
        if s.len() % 8 != 0 {
            return Err(Error::Parse("f64 blob length not a multiple of 8".into()));
        }
        Ok(s.chunks_exact(8)
            .map(|b| f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]))
            .collect())
    }

    fn read_po2(&self, r: &BlobRef) -> Result<Vec<Po2Weight>> {
        let s = self.slice(r)?;
        if s.len() % 3 != 0 {
            return Err(Error::Parse("po2 blob length not a multiple of 3".into()));
        }
        s.chunks_exact(3)
            .map(|b| {
                if b[2] != 0 {
                    Ok(Po2Weight::Zero)
                } else {
                    let sign = b[0] as i8;
                    if sign != 1 && sign != -1 {
                        return Err(Error::Parse(format!("bad po2 sign byte {}", b[0])));
                    }
                    Ok(Po2Weight::NonZero { sign, exponent: b[1] as i8 as i32 })
                }
            })
            .collect()
    }
}

fn blob_path(manifest_path: &Path, weights_file: &str) -> PathBuf {
    manifest_path.parent().unwrap_or_else(|| Path::new(".")).join(weights_file)
}

fn weights_file_name(manifest_path: &Path) -> String {
    let stem = manifest_path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    format!("{stem}.weights")
}

/// Save a real-valued model: `<path>` gets the JSON manifest, the weight
/// blob lands next to it as `<stem>.weights`.
pub fn save_model(ir: &ModelIR, path: &Path) -> Result<()> {
    ir.validate()?;
    let mut blob = BlobWriter::new();
    let layers = ir
        .layers
        .iter()
        .map(|layer| match layer {
            LayerSpec::Conv { spec, weights } => RealLayer::Conv {
                r: spec.r,
                s: spec.s,
                in_channels: spec.in_channels,
                out_channels: spec.out_channels,
                stride: spec.stride,
                padding: spec.padding,
                groups: spec.groups,
                weights: blob.write_f32(weights),
            },
            LayerSpec::BatchNorm(bn) => RealLayer::BatchNorm {
                epsilon: bn.epsilon,
                gamma: blob.write_f32(&bn.gamma),
                beta: blob.write_f32(&bn.beta),
                mean: blob.write_f32(&bn.mean),
                variance: blob.write_f32(&bn.variance),
            },
            LayerSpec::Relu => RealLayer::Relu,
            LayerSpec::EltwiseAdd { source } => RealLayer::EltwiseAdd { source: *source },
            LayerSpec::GlobalSumPool => RealLayer::GlobalSumPool,
            LayerSpec::Linear { out_features, in_features, weights } => RealLayer::Linear {
                out_features: *out_features,
                in_features: *in_features,
                weights: blob.write_f32(weights),
            },
        })
        .collect();
    let weights_file = weights_file_name(path);
    let manifest = RealManifest {
        format_version: FORMAT_VERSION,
        name: ir.name.clone(),
        quantized: false,
        input: ir.input,
        weights_file: weights_file.clone(),
        layers,
    };
    fs::write(path, serde_json::to_string_pretty(&manifest)?)?;
    fs::write(blob_path(path, &weights_file), blob.bytes)?;
    Ok(())
}

/// Load a real-valued model. A `global_avg_pool` layer is rewritten at
/// load time into `GlobalSumPool` with the divisor absorbed into the
/// classifier, so the in-memory IR always carries pure-sum semantics.
pub fn load_model(path: &Path) -> Result<ModelIR> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let manifest: RealManifest =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported format_version {}", manifest.format_version)));
    }
    if manifest.quantized {
        return Err(Error::Parse("quantized model passed to the real-model loader".into()));
    }
    let blob_bytes = fs::read(blob_path(path, &manifest.weights_file))
        .map_err(|e| Error::MissingWeights(format!("{}: {e}", manifest.weights_file)))?;
    let blob = BlobReader { bytes: &blob_bytes };

    let mut layers = Vec::with_capacity(manifest.layers.len());
    let mut avg_pools: Vec<usize> = Vec::new();
    for (i, layer) in manifest.layers.iter().enumerate() {
        let l = match layer {
            RealLayer::Conv { r, s, in_channels, out_channels, stride, padding, groups, weights } => {
                let spec = ConvSpec {
                    r: *r,
                    s: *s,
                    in_channels: *in_channels,
                    out_channels: *out_channels,
                    stride: *stride,
                    padding: *padding,
                    groups: *groups,
                };
                let w = blob.read_f32(weights)?;
                if w.len() != spec.weight_count() {
                    return Err(Error::ShapeMismatch {
                        layer: i,
                        reason: format!("conv blob holds {} weights, spec needs {}", w.len(), spec.weight_count()),
                    });
                }
                LayerSpec::Conv { spec, weights: w }
            }
            RealLayer::BatchNorm { epsilon, gamma, beta, mean, variance } => {
                LayerSpec::BatchNorm(BatchNormSpec {
                    gamma: blob.read_f32(gamma)?,
                    beta: blob.read_f32(beta)?,
                    mean: blob.read_f32(mean)?,
                    variance: blob.read_f32(variance)?,
                    epsilon: *epsilon,
                })
            }
            RealLayer::Relu => LayerSpec::Relu,
            RealLayer::EltwiseAdd { source } => LayerSpec::EltwiseAdd { source: *source },
            RealLayer::GlobalSumPool => LayerSpec::GlobalSumPool,
            RealLayer::GlobalAvgPool => {
                avg_pools.push(i);
                LayerSpec::GlobalSumPool
            }
            RealLayer::Linear { out_features, in_features, weights } => LayerSpec::Linear {
                out_features: *out_features,
                in_features: *in_features,
                weights: blob.read_f32(weights)?,
            },
        };
        layers.push(l);
    }
    let classifier = layers.len().saturating_sub(1);
    let mut ir = ModelIR { name: manifest.name, input: manifest.input, layers, classifier };
    ir.validate()?;
    absorb_pool_divisors(&mut ir, &avg_pools)?;
    Ok(ir)
}

/// Fold 1/(H*W) of each average pool into the classifier weights, so the
/// pool itself stays a pure sum in the IR.
fn absorb_pool_divisors(ir: &mut ModelIR, avg_pools: &[usize]) -> Result<()> {
    if avg_pools.is_empty() {
        return Ok(());
    }
    let shapes = ir.infer_shapes()?;
    let mut divisor = 1.0;
    for &i in avg_pools {
        let pool_in = if i == 0 { ir.input } else { shapes[i - 1] };
        divisor *= (pool_in.h * pool_in.w) as f64;
    }
    if let LayerSpec::Linear { weights, .. } = &mut ir.layers[ir.classifier] {
        for w in weights.iter_mut() {
            *w /= divisor;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum QuantManifestLayer {
    Conv {
        r: usize,
        s: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        padding: usize,
        groups: usize,
        relu: bool,
        clamped_exponents: usize,
        po2_weights: BlobRef,
        bias: BlobRef,
        bn_scale: BlobRef,
        bn_offset: BlobRef,
    },
    Relu,
    EltwiseAdd {
        source: usize,
    },
    GlobalSumPool,
}

#[derive(Debug, Serialize, Deserialize)]
struct QuantManifest {
    format_version: u32,
    name: String,
    quantized: bool,
    input: TensorShape,
    activation_format: FixedPointFormat,
    quant_config: QuantConfig,
    k_fe: usize,
    classifier_out: usize,
    clamped_exponents: usize,
    weights_file: String,
    layers: Vec<QuantManifestLayer>,
    classifier: BlobRef,
}

/// Save a quantized, folded model in the shared manifest+blob container
/// with the `quantized: true` marker.
pub fn save_quantized(qm: &QuantizedModel, path: &Path) -> Result<()> {
    let mut blob = BlobWriter::new();
    let layers = qm
        .layers
        .iter()
        .map(|layer| match layer {
            QuantLayer::Conv(fc) => QuantManifestLayer::Conv {
                r: fc.spec.r,
                s: fc.spec.s,
                in_channels: fc.spec.in_channels,
                out_channels: fc.spec.out_channels,
                stride: fc.spec.stride,
                padding: fc.spec.padding,
                groups: fc.spec.groups,
                relu: fc.relu,
                clamped_exponents: fc.clamped_exponents,
                po2_weights: blob.write_po2(&fc.weights),
                bias: blob.write_i64(&fc.bias),
                bn_scale: blob.write_po2(&fc.bn_scale),
                bn_offset: blob.write_f64(&fc.bn_offset),
            },
            QuantLayer::Relu => QuantManifestLayer::Relu,
            QuantLayer::EltwiseAdd { source } => QuantManifestLayer::EltwiseAdd { source: *source },
            QuantLayer::GlobalSumPool => QuantManifestLayer::GlobalSumPool,
        })
        .collect();
    let classifier = blob.write_f32(&qm.classifier);
    let weights_file = weights_file_name(path);
    let manifest = QuantManifest {
        format_version: FORMAT_VERSION,
        name: qm.name.clone(),
        quantized: true,
        input: qm.input,
        activation_format: qm.activation,
        quant_config: qm.config,
        k_fe: qm.k_fe,
        classifier_out: qm.classifier_out,
        clamped_exponents: qm.clamped_exponents,
        weights_file: weights_file.clone(),
        layers,
        classifier,
    };
    fs::write(path, serde_json::to_string_pretty(&manifest)?)?;
    fs::write(blob_path(path, &weights_file), blob.bytes)?;
    Ok(())
}

/// Load a quantized model. Bias formats are recomputed from the stored
/// weight codes (they are a pure function of per-filter leaf counts).
pub fn load_quantized(path: &Path) -> Result<QuantizedModel> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let manifest: QuantManifest =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported format_version {}", manifest.format_version)));
    }
    if !manifest.quantized {
        return Err(Error::Parse("real-valued model passed to the quantized loader".into()));
    }
    let blob_bytes = fs::read(blob_path(path, &manifest.weights_file))
        .map_err(|e| Error::MissingWeights(format!("{}: {e}", manifest.weights_file)))?;
    let blob = BlobReader { bytes: &blob_bytes };

    let mut layers = Vec::with_capacity(manifest.layers.len());
    for (i, layer) in manifest.layers.iter().enumerate() {
        let l = match layer {
            QuantManifestLayer::Conv {
                r,
                s,
                in_channels,
                out_channels,
                stride,
                padding,
                groups,
                relu,
                clamped_exponents,
                po2_weights,
                bias,
                bn_scale,
                bn_offset,
            } => {
                let spec = ConvSpec {
                    r: *r,
                    s: *s,
                    in_channels: *in_channels,
                    out_channels: *out_channels,
                    stride: *stride,
                    padding: *padding,
                    groups: *groups,
                };
                spec.validate()?;
                let weights = blob.read_po2(po2_weights)?;
                if weights.len() != spec.weight_count() {
                    return Err(Error::ShapeMismatch {
                        layer: i,
                        reason: format!(
                            "po2 blob holds {} codes, spec needs {}",
                            weights.len(),
                            spec.weight_count()
                        ),
                    });
                }
                let bias = blob.read_i64(bias)?;
                let bn_scale = blob.read_po2(bn_scale)?;
                let bn_offset = blob.read_f64(bn_offset)?;
                if bias.len() != spec.out_channels
                    || bn_scale.len() != spec.out_channels
                    || bn_offset.len() != spec.out_channels
                {
                    return Err(Error::ShapeMismatch {
                        layer: i,
                        reason: "per-channel vectors do not match out_channels".into(),
                    });
                }
                let per = spec.weights_per_filter();
                let bias_format = (0..spec.out_channels)
                    .map(|m| {
                        let leaves =
                            weights[m * per..(m + 1) * per].iter().filter(|w| !w.is_zero()).count();
                        manifest.activation_format.widened(tree_depth(leaves))
                    })
                    .collect();
                QuantLayer::Conv(FoldedConvLayer {
                    spec,
                    weights,
                    bias,
                    bias_format,
                    bn_scale,
                    bn_offset,
                    relu: *relu,
                    clamped_exponents: *clamped_exponents,
                })
            }
            QuantManifestLayer::Relu => QuantLayer::Relu,
            QuantManifestLayer::EltwiseAdd { source } => QuantLayer::EltwiseAdd { source: *source },
            QuantManifestLayer::GlobalSumPool => QuantLayer::GlobalSumPool,
        };
        layers.push(l);
    }

    let qm = QuantizedModel {
        name: manifest.name,
        input: manifest.input,
        activation: manifest.activation_format,
        config: manifest.quant_config,
        layers,
        classifier: blob.read_f32(&manifest.classifier)?,
        classifier_out: manifest.classifier_out,
        k_fe: manifest.k_fe,
        clamped_exponents: manifest.clamped_exponents,
    };
    qm.validate()?;
    Ok(qm)
}

/// Load a raw 8-bit RGB image as activation codes: pixel values map
/// linearly onto [0, 1] before quantization.
pub fn load_input_rgb(path: &Path, shape: TensorShape, format: FixedPointFormat) -> Result<FixedTensor> {
    if shape.c != 3 {
        return Err(Error::Sim(format!("raw RGB input needs 3 channels, model wants {}", shape.c)));
    }
    let bytes = fs::read(path)?;
    if bytes.len() != shape.elements() {
        return Err(Error::Sim(format!(
            "raw input holds {} bytes, shape {shape} needs {}",
            bytes.len(),
            shape.elements()
        )));
    }
    let reals: Vec<f64> = bytes.iter().map(|b| *b as f64 / 255.0).collect();
    FixedTensor::from_reals(shape, format, &reals)
}

/// Load a tensor JSON (the serialized [`FixedTensor`] form).
pub fn load_input_json(path: &Path) -> Result<FixedTensor> {
    let text = fs::read_to_string(path)?;
    let t: FixedTensor = serde_json::from_str(&text)?;
    t.validate()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::quantize_model;

    #[test]
    fn real_roundtrip_is_byte_identical() {
        let dir = std::env::temp_dir().join("rewacc_fmt_test");
        fs::create_dir_all(&dir).unwrap();
        let ir = crate::toygen::toy_model(11);
        let p1 = dir.join("a.model");
        save_model(&ir, &p1).unwrap();
        let loaded = load_model(&p1).unwrap();
        let p2 = dir.join("b.model");
        save_model(&loaded, &p2).unwrap();
        // weights files byte-identical; manifests differ only in the
        // weights_file name they embed, so compare after normalizing it
        let w1 = fs::read(dir.join("a.weights")).unwrap();
        let w2 = fs::read(dir.join("b.weights")).unwrap();
        assert_eq!(w1, w2);
        let m1 = fs::read_to_string(&p1).unwrap().replace("a.weights", "X");
        let m2 = fs::read_to_string(&p2).unwrap().replace("b.weights", "X");
        assert_eq!(m1, m2);
    }

    #[test]
    fn avg_pool_spelling_folds_divisor_into_classifier() {
        let dir = std::env::temp_dir().join("rewacc_fmt_pool");
        fs::create_dir_all(&dir).unwrap();
        let ir = crate::toygen::toy_model(12);
        let p = dir.join("m.model");
        save_model(&ir, &p).unwrap();
        // rewrite the sum pool as an average pool and reload
        let text = fs::read_to_string(&p).unwrap().replace("global_sum_pool", "global_avg_pool");
        fs::write(&p, text).unwrap();
        let loaded = load_model(&p).unwrap();
        assert!(matches!(loaded.layers[loaded.classifier - 1], LayerSpec::GlobalSumPool));
        // toy model pools over 8x8
        if let (LayerSpec::Linear { weights: orig, .. }, LayerSpec::Linear { weights: got, .. }) =
            (&ir.layers[ir.classifier], &loaded.layers[loaded.classifier])
        {
            for (a, b) in orig.iter().zip(got.iter()) {
                assert!((b - (*a as f32) as f64 / 64.0).abs() < 1e-12);
            }
        } else {
            panic!("classifier missing");
        }
    }

    #[test]
    fn quantized_roundtrip_preserves_the_model() {
        let dir = std::env::temp_dir().join("rewacc_fmt_q");
        fs::create_dir_all(&dir).unwrap();
        let ir = crate::toygen::random_model(19);
        let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
        let p = dir.join("q.model");
        save_quantized(&qm, &p).unwrap();
        let loaded = load_quantized(&p).unwrap();
        assert_eq!(loaded.layers, qm.layers);
        assert_eq!(loaded.k_fe, qm.k_fe);
        assert_eq!(loaded.activation, qm.activation);
        // classifier ran through f32 once
        for (a, b) in qm.classifier.iter().zip(loaded.classifier.iter()) {
            assert_eq!(*a as f32, *b as f32);
        }
    }

    #[test]
    fn misplaced_linear_fails_to_load() {
        let dir = std::env::temp_dir().join("rewacc_fmt_bad");
        fs::create_dir_all(&dir).unwrap();
        let manifest = serde_json::json!({
            "format_version": 1,
            "name": "bad",
            "quantized": false,
            "input": {"h": 2, "w": 2, "c": 1},
            "weights_file": "bad.weights",
            "layers": [
                {"type": "linear", "out_features": 4, "in_features": 4,
                 "weights": {"offset": 0, "len": 64}},
                {"type": "relu"}
            ]
        });
        let p = dir.join("bad.model");
        fs::write(&p, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
        fs::write(dir.join("bad.weights"), vec![0u8; 64]).unwrap();
        let err = load_model(&p).unwrap_err();
        assert!(err.to_string().contains("not last") || err.to_string().contains("linear"));
    }

    #[test]
    fn missing_blob_is_reported() {
        let dir = std::env::temp_dir().join("rewacc_fmt_missing");
        fs::create_dir_all(&dir).unwrap();
        let ir = crate::toygen::toy_model(4);
        let p = dir.join("m.model");
        save_model(&ir, &p).unwrap();
        fs::remove_file(dir.join("m.weights")).unwrap();
        assert!(matches!(load_model(&p), Err(Error::MissingWeights(_))));
    }

    #[test]
    fn rgb_and_json_inputs() {
        let dir = std::env::temp_dir().join("rewacc_fmt_in");
        fs::create_dir_all(&dir).unwrap();
        let shape = TensorShape { h: 2, w: 2, c: 3 };
        let f = FixedPointFormat::q3_5();
        fs::write(dir.join("img.rgb"), (0u8..12).collect::<Vec<u8>>()).unwrap();
        let t = load_input_rgb(&dir.join("img.rgb"), shape, f).unwrap();
        assert_eq!(t.codes.len(), 12);
        assert_eq!(t.codes[0], 0);

        let json_path = dir.join("t.json");
        fs::write(&json_path, serde_json::to_string(&t).unwrap()).unwrap();
        let back = load_input_json(&json_path).unwrap();
        assert_eq!(back, t);
    }
}
