//! The throughput/latency model: the two published accelerator design
//! points, the sparsity sweep with its npu-bound to load-bound
//! crossover, and the 2:4 cycle study summary.
//!
//!     cargo run --example perf_sweep

use rewacc::cost::{main_table, perf_model, sweep, AreaParams, PerfParams, Variant};
use rewacc::npu::{mobilenet_gemm_layers, sparsity_24_study, ArrayConfig};

fn main() -> rewacc::Result<()> {
    // the two design points against their published references
    let rows = main_table(
        &AreaParams::default(),
        &PerfParams::main_table_flex(),
        &PerfParams::for_variant(Variant::Fix),
    )?;
    for row in &rows {
        println!(
            "{:<5} throughput {:>10.4e} img/s (ref {:>8.2e}), latency {:>7.4} us (ref {:>5.2}), area {:>7.2} mm^2 (ref {})",
            format!("{}", row.variant),
            row.report.throughput_ips,
            row.reference.throughput_ips,
            row.report.latency_us,
            row.reference.latency_us.unwrap(),
            row.area_mm2,
            row.reference.area_mm2,
        );
    }
    println!();

    // sweep sparsity and find where data loading takes over
    let params = PerfParams::for_variant(Variant::Flex);
    let result = sweep(0.0, 0.80, 0.05, Variant::Flex, &params)?;
    println!("{:>8} {:>9} {:>3} {:>12} {:>12} {:>14} {:>8}", "sparsity", "a mm^2", "k", "load cyc", "latency us", "img/s", "limit");
    for p in &result.points {
        println!(
            "{:>8.2} {:>9.2} {:>3} {:>12.1} {:>12.4} {:>14.1} {:>8}",
            p.sparsity, p.a_individ_mm2, p.k, p.load_cycles, p.latency_us, p.throughput_ips, p.limiter
        );
    }
    println!("crossover: {:?}", result.crossover_sparsity);
    println!();

    // the fully fixed variant is load-bound from the start
    let fix = perf_model(0.0, Variant::Fix, &PerfParams::for_variant(Variant::Fix))?;
    println!(
        "fix variant, dense: {:.1} load cycles -> {:.4} us, {:.3e} img/s",
        fix.load_cycles, fix.latency_us, fix.throughput_ips
    );
    println!();

    // 2:4 study summary (per-layer table: `rewacc study-24`)
    let study = sparsity_24_study(&mobilenet_gemm_layers(), &ArrayConfig::weight_stationary(128, 128))?;
    println!(
        "2:4 study on 128x128 weight-stationary: mean per-layer cycle ratio {:.3}, total-cycle ratio {:.3}",
        study.mean_ratio, study.total_ratio
    );
    let best = study.rows.iter().min_by(|a, b| a.ratio.partial_cmp(&b.ratio).unwrap()).unwrap();
    let worst = study.rows.iter().max_by(|a, b| a.ratio.partial_cmp(&b.ratio).unwrap()).unwrap();
    println!("  best layer  {} at {:.3}", best.name, best.ratio);
    println!("  worst layer {} at {:.3}", worst.name, worst.ratio);
    Ok(())
}
