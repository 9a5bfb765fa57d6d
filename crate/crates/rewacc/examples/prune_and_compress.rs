//! Magnitude pruning over the bundled MobileNetV2 (depthwise and first
//! conv kept dense) and 2:4 structured compression with its two-bit
//! position metadata.
//!
//!     cargo run --example prune_and_compress

use rewacc::prune::{
    compress_2to4, decompress_2to4, default_skip, magnitude_prune_model, magnitude_prune_tensor,
    PruneScope,
};

fn main() -> rewacc::Result<()> {
    // per-layer pruning on the bundled model
    let ir = rewacc::mobilenet::model_ir(0);
    let masks = magnitude_prune_model(&ir, 0.6, PruneScope::PerLayer, default_skip)?;
    let mut kept_dense = 0usize;
    let mut pruned_weights = 0usize;
    let mut total_prunable = 0usize;
    for (i, mask) in &masks {
        if default_skip(&ir, *i) {
            kept_dense += 1;
        } else {
            pruned_weights += mask.masked_count();
            total_prunable += mask.keep.len();
        }
    }
    println!(
        "target sparsity 0.60: {} conv layers, {} kept dense (depthwise/first), \
         {}/{} prunable weights masked ({:.2}%)",
        masks.len(),
        kept_dense,
        pruned_weights,
        total_prunable,
        100.0 * pruned_weights as f64 / total_prunable as f64
    );

    // the per-channel commutation that makes pruning before folding safe
    let channel = [0.8, -0.1, 0.45, 0.02, -0.6];
    let scaled: Vec<f64> = channel.iter().map(|w| w * -1.7).collect();
    let a = magnitude_prune_tensor(&channel, 0.4)?;
    let b = magnitude_prune_tensor(&scaled, 0.4)?;
    println!(
        "mask before fold {:?}\nmask after fold  {:?} (channel scale cannot reorder magnitudes)",
        a.keep, b.keep
    );
    println!();

    // 2:4 compression of a pruned row
    let row = [0.9, 0.0, -0.3, 0.0, 0.0, 0.0, 0.7, 0.0];
    let c = compress_2to4(&row, 1, 8)?;
    println!("2:4 row {row:?}");
    println!("    values  {:?}", c.values);
    println!("    indices {:?}", c.indices);
    assert_eq!(decompress_2to4(&c), row);
    println!("    decompression reproduces the original exactly");

    // memory accounting for one projection layer (144 -> 24 at 56x56)
    if let Some((_, spec, dims)) = ir
        .conv_toeplitz_dims()?
        .into_iter()
        .find(|(_, s, _)| s.in_channels == 144 && s.out_channels == 24)
    {
        let dense = dims.m * dims.rsc + dims.rsc * dims.pq;
        let compressed = dims.m * dims.rsc / 2 + dims.rsc / 2 * dims.pq;
        let metadata = dims.rsc / 2 * dims.pq; // two-bit indices
        println!();
        println!(
            "projection {}x{}x{}: dense transfer {} elements, 2:4 transfer {} + {} two-bit indices",
            spec.out_channels, spec.in_channels, dims.pq, dense, compressed, metadata
        );
    }
    Ok(())
}
