//! Magnitude pruning with per-layer skip rules, and 2:4 structured weight
//! compression with two-bit position metadata.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::{LayerSpec, ModelIR};

/// How the smallest-magnitude fraction is selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PruneScope {
    /// Rank magnitudes within each layer separately.
    PerLayer,
    /// Rank magnitudes across all prunable layers at once.
    Global,
}

/// Keep/drop mask congruent to one layer's weights. `true` keeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneMask {
    pub keep: Vec<bool>,
    pub target_sparsity: f64,
}

impl PruneMask {
    pub fn all_true(len: usize) -> Self {
        Self { keep: vec![true; len], target_sparsity: 0.0 }
    }

    pub fn masked_count(&self) -> usize {
        self.keep.iter().filter(|k| !**k).count()
    }

    pub fn sparsity(&self) -> f64 {
        if self.keep.is_empty() {
            0.0
        } else {
            self.masked_count() as f64 / self.keep.len() as f64
        }
    }
}

/// Mask the `s_frac` fraction of smallest-magnitude entries. Ties break
/// toward the lowest flat index.
pub fn magnitude_prune_tensor(weights: &[f64], s_frac: f64) -> Result<PruneMask> {
    if !(0.0..1.0).contains(&s_frac) {
        return Err(Error::Quant(format!("sparsity fraction {s_frac} outside [0, 1)")));
    }
    let n = weights.len();
    let drop = (s_frac * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| {
        weights[*a]
            .abs()
            .partial_cmp(&weights[*b].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(b))
    });
    let mut keep = vec![true; n];
    for &i in order.iter().take(drop) {
        keep[i] = false;
    }
    Ok(PruneMask { keep, target_sparsity: s_frac })
}

/// Whether a conv layer is exempt from pruning: depthwise convolutions
/// and the first conv of the model keep all weights.
pub fn default_skip(ir: &ModelIR, layer_id: usize) -> bool {
    let first_conv = ir
        .layers
        .iter()
        .position(|l| matches!(l, LayerSpec::Conv { .. }));
    match &ir.layers[layer_id] {
        LayerSpec::Conv { spec, .. } => spec.is_depthwise() || Some(layer_id) == first_conv,
        _ => true,
    }
}

/// Per-conv-layer masks for a whole model. Skipped layers get all-true
/// masks; the scope controls whether magnitudes rank per layer or across
/// every prunable layer at once.
pub fn magnitude_prune_model(
    ir: &ModelIR,
    s_frac: f64,
    scope: PruneScope,
    skip: impl Fn(&ModelIR, usize) -> bool,
) -> Result<Vec<(usize, PruneMask)>> {
    if !(0.0..1.0).contains(&s_frac) {
        return Err(Error::Quant(format!("sparsity fraction {s_frac} outside [0, 1)")));
    }
    let mut result = Vec::new();
    match scope {
        PruneScope::PerLayer => {
            for (i, layer) in ir.layers.iter().enumerate() {
                if let LayerSpec::Conv { weights, .. } = layer {
                    let mask = if skip(ir, i) {
                        PruneMask::all_true(weights.len())
                    } else {
                        magnitude_prune_tensor(weights, s_frac)?
                    };
                    result.push((i, mask));
                }
            }
        }
        PruneScope::Global => {
            // Pool magnitudes from all prunable layers, rank once.
            let mut pool: Vec<(f64, usize, usize)> = Vec::new();
            for (i, layer) in ir.layers.iter().enumerate() {
                if let LayerSpec::Conv { weights, .. } = layer {
                    if !skip(ir, i) {
                        for (j, w) in weights.iter().enumerate() {
                            pool.push((w.abs(), i, j));
                        }
                    }
                }
            }
            let drop = (s_frac * pool.len() as f64).round() as usize;
            pool.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then((a.1, a.2).cmp(&(b.1, b.2)))
            });
            let mut dropped: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
            for (_, i, j) in pool.iter().take(drop) {
                dropped.entry(*i).or_default().push(*j);
            }
            for (i, layer) in ir.layers.iter().enumerate() {
                if let LayerSpec::Conv { weights, .. } = layer {
                    let mut mask = PruneMask::all_true(weights.len());
                    mask.target_sparsity = if skip(ir, i) { 0.0 } else { s_frac };
                    if let Some(js) = dropped.get(&i) {
                        for &j in js {
                            mask.keep[j] = false;
                        }
                    }
                    result.push((i, mask));
                }
            }
        }
    }
    Ok(result)
}

/// Apply masks in place: masked weights become exactly zero so the Po2
/// quantizer maps them to `Zero`.
pub fn apply_masks(ir: &mut ModelIR, masks: &[(usize, PruneMask)]) -> Result<()> {
    for (i, mask) in masks {
        if let LayerSpec::Conv { weights, .. } = &mut ir.layers[*i] {
            if weights.len() != mask.keep.len() {
                return Err(Error::Quant(format!("mask length mismatch at layer {i}")));
            }
            for (w, keep) in weights.iter_mut().zip(mask.keep.iter()) {
                if !keep {
                    *w = 0.0;
                }
            }
        } else {
            return Err(Error::Quant(format!("mask target {i} is not a conv layer")));
        }
    }
    Ok(())
}

/// 2:4 compression of a weight matrix: each row group of four keeps its
/// two surviving values plus their in-group indices as metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Compressed2to4 {
    pub rows: usize,
    pub cols: usize,
    /// rows x cols/2 surviving values.
    pub values: Vec<f64>,
    /// Two-bit in-group positions (stored one per byte), same layout.
    pub indices: Vec<u8>,
}

/// Compress a row-major matrix whose row length is divisible by four and
/// whose every group of four holds at most two nonzeros. All-zero groups
/// keep positions {0, 1} by convention.
pub fn compress_2to4(matrix: &[f64], rows: usize, cols: usize) -> Result<Compressed2to4> {
    if rows * cols != matrix.len() {
        return Err(Error::Quant("matrix dims do not match data length".into()));
    }
    if cols % 4 != 0 {
        return Err(Error::Quant(format!("row length {cols} not divisible by 4")));
    }
    let mut values = Vec::with_capacity(rows * cols / 2);
    let mut indices = Vec::with_capacity(rows * cols / 2);
    for row in 0..rows {
        for group in 0..cols / 4 {
            let base = row * cols + group * 4;
            let g = &matrix[base..base + 4];
            let nz: Vec<usize> = (0..4).filter(|i| g[*i] != 0.0).collect();
            if nz.len() > 2 {
                return Err(Error::GroupNonzeros { row, group, nonzeros: nz.len() });
            }
            // Pad with the smallest unused positions, keep sorted order.
            let mut pos = nz.clone();
            for cand in 0..4 {
                if pos.len() == 2 {
                    break;
                }
                if !pos.contains(&cand) {
                    pos.push(cand);
                }
            }
            pos.sort_unstable();
            for p in pos {
                values.push(g[p]);
                indices.push(p as u8);
            }
        }
    }
    Ok(Compressed2to4 { rows, cols, values, indices })
}

/// Expand a compressed matrix back to its dense form.
pub fn decompress_2to4(c: &Compressed2to4) -> Vec<f64> {
    let mut out = vec![0.0; c.rows * c.cols];
    for row in 0..c.rows {
        for group in 0..c.cols / 4 {
            let src = (row * c.cols / 4 + group) * 2;
            let dst = row * c.cols + group * 4;
            for k in 0..2 {
                out[dst + c.indices[src + k] as usize] = c.values[src + k];
            }
        }
    }
    out
}
