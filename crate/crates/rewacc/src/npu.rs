//! The flexible final-layer NPU: functional matrix-vector execution with
//! swappable weights, and a cycle-level schedule simulator for
//! output-stationary and weight-stationary systolic arrays, including the
//! 2:4 sparsity cycle study.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dataflow {
    OutputStationary,
    WeightStationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    pub dataflow: Dataflow,
}

impl ArrayConfig {
    pub fn output_stationary(rows: usize, cols: usize) -> Self {
        Self { rows, cols, dataflow: Dataflow::OutputStationary }
    }

    pub fn weight_stationary(rows: usize, cols: usize) -> Self {
        Self { rows, cols, dataflow: Dataflow::WeightStationary }
    }
}

/// GEMM dims: output M x N with inner (reduction) dimension K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GemmDims {
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub cycles: u64,
    pub tiles: usize,
    /// MAC occupancy: useful MACs / (cycles * rows * cols).
    pub utilization: f64,
    pub macs: u64,
}

/// Exact full-precision matrix-vector product; the weight matrix is an
/// argument so callers can stream new task weights between calls.
pub fn npu_execute(weights: &[f64], out_features: usize, x: &[f64]) -> Result<Vec<f64>> {
    if out_features == 0 || x.is_empty() || weights.len() != out_features * x.len() {
        return Err(Error::Npu(format!(
            "weight matrix {} does not factor as {out_features} x {}",
            weights.len(),
            x.len()
        )));
    }
    let k = x.len();
    Ok((0..out_features)
        .map(|row| {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate() {
                acc += weights[row * k + j] * xj;
            }
            acc
        })
        .collect())
}

/// Split a dimension into full-array chunks plus a remainder.
fn chunks(total: usize, size: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(total.div_ceil(size));
    let mut left = total;
    while left > 0 {
        let c = left.min(size);
        out.push(c);
        left -= c;
    }
    out
}

/// Number of (i, j) pairs with i in [0, d1), j in [0, d2), i + j == u.
fn pair_counts(d1: usize, d2: usize) -> Vec<u64> {
    (0..d1 + d2 - 1)
        .map(|u| {
            let lo = u.saturating_sub(d2 - 1);
            let hi = u.min(d1 - 1);
            (hi - lo + 1) as u64
        })
        .collect()
}

/// March the skewed wavefront of one tile cycle by cycle: a MAC for
/// coordinates (i, j, t) fires at cycle i + j + t. Returns the cycle
/// count and the number of busy PE-cycles observed.
fn march_wavefront(d1: usize, d2: usize, t_len: usize) -> (u64, u64) {
    let pc = pair_counts(d1, d2);
    let total = d1 + d2 + t_len - 2;
    let mut window: i64 = 0;
    let mut busy: u64 = 0;
    for t in 0..total {
        if t < pc.len() {
            window += pc[t] as i64;
        }
        if t >= t_len {
            let gone = t - t_len;
            if gone < pc.len() {
                window -= pc[gone] as i64;
            }
        }
        busy += window as u64;
    }
    (total as u64, busy)
}

/// Cycle count from an event-level schedule simulation of the chosen
/// dataflow over the tile loop.
///
/// Output-stationary pins an M x N output tile on the array and streams
/// the K dimension through the skewed operand wavefront. Weight-
/// stationary pins a K x M block of filter weights (K along rows, one
/// filter per column), pays K fill cycles per tile, then streams the N
/// output pixels through the same skewed wavefront, draining partial
/// sums down the columns.
pub fn systolic_cycles(cfg: &ArrayConfig, dims: &GemmDims) -> Result<CycleReport> {
    if cfg.rows == 0 || cfg.cols == 0 {
        return Err(Error::Npu("array dims must be >= 1".into()));
    }
    if dims.m == 0 || dims.n == 0 || dims.k == 0 {
        return Err(Error::Npu("GEMM dims must be >= 1".into()));
    }
    let mut cycles: u64 = 0;
    let mut busy: u64 = 0;
    let mut tiles = 0usize;
    match cfg.dataflow {
        Dataflow::OutputStationary => {
            for sr in chunks(dims.m, cfg.rows) {
                for sc in chunks(dims.n, cfg.cols) {
                    let (c, b) = march_wavefront(sr, sc, dims.k);
                    cycles += c;
                    busy += b;
                    tiles += 1;
                }
            }
        }
        Dataflow::WeightStationary => {
            for kt in chunks(dims.k, cfg.rows) {
                for mt in chunks(dims.m, cfg.cols) {
                    // Fill: one weight row per cycle, no MACs.
                    cycles += kt as u64;
                    let (c, b) = march_wavefront(kt, mt, dims.n);
                    cycles += c;
                    busy += b;
                    tiles += 1;
                }
            }
        }
    }
    let macs = (dims.m * dims.n * dims.k) as u64;
    debug_assert_eq!(busy, macs, "schedule fired a wrong MAC count");
    Ok(CycleReport {
        cycles,
        tiles,
        utilization: macs as f64 / (cycles as f64 * (cfg.rows * cfg.cols) as f64),
        macs,
    })
}

/// One layer of the 2:4 cycle study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyRow {
    pub name: String,
    pub dims: GemmDims,
    pub cycles_full: u64,
    pub cycles_half: u64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparsityStudy {
    pub rows: Vec<StudyRow>,
    pub mean_ratio: f64,
    /// Ratio of summed cycles (weights large layers more).
    pub total_ratio: f64,
}

/// For each layer, compare cycles at the full inner dimension against the
/// 2:4-compressed half inner dimension (rounded up for odd K) on the
/// given array.
pub fn sparsity_24_study(
    layers: &[(String, GemmDims)],
    cfg: &ArrayConfig,
) -> Result<SparsityStudy> {
    if layers.is_empty() {
        return Err(Error::Npu("study needs at least one layer".into()));
    }
    let mut rows = Vec::with_capacity(layers.len());
    let mut sum_full = 0u64;
    let mut sum_half = 0u64;
    for (name, dims) in layers {
        let full = systolic_cycles(cfg, dims)?;
        let half_dims = GemmDims { m: dims.m, n: dims.n, k: dims.k.div_ceil(2) };
        let half = systolic_cycles(cfg, &half_dims)?;
        sum_full += full.cycles;
        sum_half += half.cycles;
        rows.push(StudyRow {
            name: name.clone(),
            dims: *dims,
            cycles_full: full.cycles,
            cycles_half: half.cycles,
            ratio: half.cycles as f64 / full.cycles as f64,
        });
    }
    let mean_ratio = rows.iter().map(|r| r.ratio).sum::<f64>() / rows.len() as f64;
    Ok(SparsityStudy { rows, mean_ratio, total_ratio: sum_half as f64 / sum_full as f64 })
}

/// Toeplitz dims of every conv layer of the bundled MobileNetV2, as
/// (name, GemmDims) pairs for the cycle study.
pub fn mobilenet_gemm_layers() -> Vec<(String, GemmDims)> {
    let ir = crate::mobilenet::model_ir(0);
    ir.conv_toeplitz_dims()
        .expect("bundled model is valid")
        .into_iter()
        .map(|(id, spec, t)| {
            let tag = if spec.is_depthwise() { "dw" } else { "conv" };
            (
                format!("layer{id:03}_{tag}_{}x{}x{}", spec.r, spec.s, spec.in_channels),
                GemmDims { m: t.m, n: t.pq, k: t.rsc },
            )
        })
        .collect()
}
