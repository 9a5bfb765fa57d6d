//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line. Run with `cargo test --test acceptance -- --nocapture`.

use rewacc::cost::{
    self, adder_tree_bits, adder_tree_bits_closed_form, calibrate_alpha, AreaMode, AreaParams,
    PerfParams, Variant,
};
use rewacc::fixed::{relu_gate, FixedPointFormat};
use rewacc::netlist::{build_netlist, netlist_stats};
use rewacc::npu::{sparsity_24_study, systolic_cycles, ArrayConfig, GemmDims};
use rewacc::prune::magnitude_prune_tensor;
use rewacc::quant::{quantize_model, quantize_po2, QuantConfig};
use rewacc::sim::{oracle_forward, simulate, SimOptions};
use rewacc::{hdl, mobilenet, toygen};

fn criterion(n: u32, desc: &str, ok: bool, detail: String) {
    if ok {
        println!("[PASS] criterion {n:02}: {desc} ({detail})");
    } else {
        println!("[FAIL] criterion {n:02}: {desc} ({detail})");
        panic!("criterion {n} failed: {detail}");
    }
}

/// Flex variant main-table point: A0 = 549, s = 0.60, reticle preset 880,
/// 3300 NPU cycles at 1 GHz -> latency exactly 3.3 us, throughput
/// 1.212e6 img/s within 1% of the published 1.21e6.
#[test]
fn criterion_01_flex_table_point() {
    let r = cost::perf_model(0.60, Variant::Flex, &PerfParams::main_table_flex()).unwrap();
    let ok = r.latency_us == 3.3
        && (r.throughput_ips - 1.21e6).abs() / 1.21e6 <= 0.01
        && r.k == 4;
    criterion(
        1,
        "flex point: latency 3.300 us exact, throughput 1.21e6 within 1%",
        ok,
        format!("latency {} us, throughput {:.4e}, k {}", r.latency_us, r.throughput_ips, r.k),
    );
}

/// Fix variant dense point, per-accelerator bandwidth, 4000 output
/// bytes: load 250-260 cycles, latency 0.25 us +-5%, throughput
/// 4.0e6 +-5%.
#[test]
fn criterion_02_fix_table_point() {
    let r = cost::perf_model(0.0, Variant::Fix, &PerfParams::for_variant(Variant::Fix)).unwrap();
    let ok = (250.0..=260.0).contains(&r.load_cycles)
        && (r.latency_us - 0.25).abs() / 0.25 <= 0.05
        && (r.throughput_ips - 4.0e6).abs() / 4.0e6 <= 0.05;
    criterion(
        2,
        "fix point: load 250-260 cycles, latency 0.25 us +-5%, throughput 4.0e6 +-5%",
        ok,
        format!(
            "load {:.1} cycles, latency {:.4} us, throughput {:.4e}",
            r.load_cycles, r.latency_us, r.throughput_ips
        ),
    );
}

/// Linear area mode: extractor areas at five sparsity points to 0.1%,
/// and single-accelerator total at s = 0.6 equal to 220 mm^2 +-1%.
#[test]
fn criterion_03_linear_area_points() {
    let ir = mobilenet::model_ir(0);
    let p = AreaParams::default();
    let mut detail = String::new();
    let mut ok = true;
    for (s, want) in [(0.0, 549.0), (0.2, 439.2), (0.4, 329.4), (0.6, 219.6), (0.8, 109.8)] {
        let r = cost::model_area(&ir, s, 8, &p, AreaMode::Linear).unwrap();
        ok &= (r.extractor_mm2 - want).abs() / want <= 0.001;
        detail.push_str(&format!("{s}->{:.2} ", r.extractor_mm2));
    }
    let total = cost::model_area(&ir, 0.6, 8, &p, AreaMode::Linear).unwrap().total_mm2;
    ok &= (total - 220.0).abs() / 220.0 <= 0.01;
    detail.push_str(&format!("total(0.6) {total:.2}"));
    criterion(3, "linear area: five extractor points to 0.1%, total 220 +-1%", ok, detail);
}

/// Alpha fit on the 16-leaf 8-bit anchor (29.4 um^2) predicts the 32,
/// 64, and 320-leaf 8-bit blocks within 10%, and the 5-bit/8-bit area
/// ratio for pointwise blocks lies in [0.50, 0.75].
#[test]
fn criterion_04_reference_area_calibration() {
    let alpha = calibrate_alpha(&[(16, 8, 29.4)]).unwrap();
    let mut detail = format!("alpha {alpha:.4}; ");
    let mut ok = true;
    for (leaves, want) in [(32usize, 61.0), (64, 126.0), (320, 632.6)] {
        let got = alpha * adder_tree_bits(leaves, 8).total_bits as f64;
        let dev = (got - want).abs() / want;
        ok &= dev <= 0.10;
        detail.push_str(&format!("{leaves}: {got:.1} vs {want} ({:.1}%) ", dev * 100.0));
    }
    for leaves in [16usize, 32, 64, 320] {
        let ratio = adder_tree_bits(leaves, 5).total_bits as f64
            / adder_tree_bits(leaves, 8).total_bits as f64;
        ok &= (0.50..=0.75).contains(&ratio);
    }
    criterion(4, "area calibration within 10%; 5b/8b ratio in [0.50, 0.75]", ok, detail);
}

/// Netlist simulation is bit-exact against the independent fixed-point
/// oracle on 100 seeded random models (conv/depthwise/folded-BN/ReLU/
/// residual/sum-pool mixes), several inputs each.
#[test]
fn criterion_05_bit_exact_equivalence() {
    let cfg = QuantConfig::default();
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for seed in 0..100u64 {
        let ir = toygen::random_model(seed);
        let qm = quantize_model(&ir, &cfg).unwrap();
        let netlist = build_netlist(&qm).unwrap();
        for input_seed in 0..3u64 {
            let input = toygen::random_input(7000 + seed * 3 + input_seed, ir.input, qm.activation);
            let sim = simulate(&netlist, &input, &SimOptions::default()).unwrap();
            let oracle = oracle_forward(&qm, &input).unwrap();
            checked += 1;
            if sim.features != oracle.features || sim.layer_outputs != oracle.layer_outputs {
                mismatches += 1;
            }
        }
    }
    criterion(
        5,
        "bit-exact netlist vs oracle on 100 seeded models",
        mismatches == 0,
        format!("{checked} runs, {mismatches} mismatches"),
    );
}

/// The sign-bit ReLU gate equals max(x, 0) exhaustively at widths 4-12.
#[test]
fn criterion_06_relu_gate_exhaustive() {
    let mut ok = true;
    let mut count = 0u64;
    for width in 4..=12u32 {
        let lo = -(1i64 << (width - 1));
        let hi = (1i64 << (width - 1)) - 1;
        for x in lo..=hi {
            ok &= relu_gate(x, width) == x.max(0);
            count += 1;
        }
    }
    criterion(6, "relu gate == max(x, 0) exhaustively, widths 4-12", ok, format!("{count} codes"));
}

/// Output-stationary 1000x1 array on GEMM 1000x1x1280: 2278 cycles +-1%.
#[test]
fn criterion_07_npu_cycle_anchor() {
    let cfg = ArrayConfig::output_stationary(1000, 1);
    let r = systolic_cycles(&cfg, &GemmDims { m: 1000, n: 1, k: 1280 }).unwrap();
    let dev = (r.cycles as f64 - 2278.0).abs() / 2278.0;
    criterion(
        7,
        "output-stationary cycle anchor 2278 +-1%",
        dev <= 0.01,
        format!("{} cycles ({:.3}% off)", r.cycles, dev * 100.0),
    );
}

/// 2:4 study over the bundled MobileNetV2 conv layers on a 128x128
/// weight-stationary array: every per-layer ratio in (0.4, 1.0], mean
/// 0.83 +-0.07. The per-layer table is printed for inspection.
#[test]
fn criterion_08_two_four_study() {
    let cfg = ArrayConfig::weight_stationary(128, 128);
    let layers = rewacc::npu::mobilenet_gemm_layers();
    let study = sparsity_24_study(&layers, &cfg).unwrap();
    println!("  layer                          m      n      k   full    half   ratio");
    for r in &study.rows {
        println!(
            "  {:<28} {:>6} {:>6} {:>5} {:>6} {:>7} {:>7.4}",
            r.name, r.dims.m, r.dims.n, r.dims.k, r.cycles_full, r.cycles_half, r.ratio
        );
    }
    println!(
        "  mean per-layer ratio {:.4}, total-cycle ratio {:.4}",
        study.mean_ratio, study.total_ratio
    );
    let bounds_ok = study.rows.iter().all(|r| r.ratio > 0.4 && r.ratio <= 1.0);
    let mean_ok = (study.mean_ratio - 0.83).abs() <= 0.07;
    criterion(
        8,
        "2:4 study: ratios in (0.4, 1.0], mean 0.83 +-0.07",
        bounds_ok && mean_ok,
        format!("mean {:.4}, total {:.4}, {} layers", study.mean_ratio, study.total_ratio, study.rows.len()),
    );
}

/// Die-shared flex sweep: the npu-bound to load-bound transition falls
/// in s in [0.63, 0.72].
#[test]
fn criterion_09_sweep_crossover() {
    let r = cost::sweep(0.0, 0.80, 0.01, Variant::Flex, &PerfParams::for_variant(Variant::Flex))
        .unwrap();
    let s = r.crossover_sparsity;
    let ok = matches!(s, Some(x) if (0.63..=0.72).contains(&x));
    criterion(9, "flex sweep crossover in [0.63, 0.72]", ok, format!("crossover {s:?}"));
}

/// Property suites: Po2 relative error <= 1/3 on a sign-symmetric grid;
/// prune-fold mask commutation on 50 random scaled channels; adder count
/// = leaves - 1 on 1000 random trees; closed-form vs enumerated tree
/// bits equal for all power-of-two leaf counts <= 2^14; HDL emission is
/// byte-deterministic.
#[test]
fn criterion_10_property_suites() {
    use rand::Rng;
    use rand::SeedableRng;

    // Po2 relative error bound.
    let cfg = QuantConfig::default();
    let mut po2_ok = true;
    let mut x = 2f64.powi(-8);
    while x < 8.0 {
        for w in [x, -x] {
            let q = quantize_po2(w, &cfg);
            po2_ok &= (w - q.value()).abs() / w.abs() <= 1.0 / 3.0 + 1e-12;
        }
        x *= 1.001;
    }

    // Prune-fold commutation at mask level, per output channel.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let mut commute_ok = true;
    for _ in 0..50 {
        let per = rng.gen_range(4..64);
        let chan: Vec<f64> = (0..per).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scale: f64 = {
            let s = rng.gen_range(0.05..4.0);
            if rng.gen_bool(0.5) {
                -s
            } else {
                s
            }
        };
        let folded: Vec<f64> = chan.iter().map(|w| w * scale).collect();
        let frac = rng.gen_range(0.0..0.9);
        commute_ok &= magnitude_prune_tensor(&chan, frac).unwrap().keep
            == magnitude_prune_tensor(&folded, frac).unwrap().keep;
    }

    // Adder count on random trees.
    let mut adder_ok = true;
    for _ in 0..1000 {
        let leaves = rng.gen_range(1..5000);
        let t = adder_tree_bits(leaves, 8);
        adder_ok &= t.histogram.values().sum::<usize>() == leaves - 1;
    }

    // Closed form vs enumeration on powers of two.
    let mut closed_ok = true;
    let mut leaves = 1usize;
    while leaves <= 1 << 14 {
        closed_ok &= adder_tree_bits(leaves, 8).total_bits
            == adder_tree_bits_closed_form(leaves, 8).unwrap();
        leaves *= 2;
    }

    // HDL byte determinism.
    let ir = toygen::random_model(4242);
    let qm = quantize_model(&ir, &cfg).unwrap();
    let n1 = build_netlist(&qm).unwrap();
    let n2 = build_netlist(&qm).unwrap();
    let hdl_ok = hdl::emit_hdl(&n1, "top") == hdl::emit_hdl(&n2, "top");

    let ok = po2_ok && commute_ok && adder_ok && closed_ok && hdl_ok;
    criterion(
        10,
        "property suites: po2 error, mask commutation, tree counts, closed form, HDL determinism",
        ok,
        format!("po2 {po2_ok}, commute {commute_ok}, adders {adder_ok}, closed {closed_ok}, hdl {hdl_ok}"),
    );
}

/// Not a numbered criterion, but pinned here: the dense-tree netlist
/// statistics match the hand-enumerated widths histogram that the area
/// model calibrates against.
#[test]
fn netlist_stats_agree_with_tree_enumeration() {
    let ir = {
        use rewacc::ir::{ConvSpec, LayerSpec, ModelIR, TensorShape};
        let spec = ConvSpec {
            r: 1,
            s: 1,
            in_channels: 16,
            out_channels: 1,
            stride: 1,
            padding: 0,
            groups: 1,
        };
        ModelIR {
            name: "t".into(),
            input: TensorShape { h: 1, w: 1, c: 16 },
            layers: vec![
                LayerSpec::Conv { spec, weights: vec![0.5; 16] },
                LayerSpec::Linear { out_features: 1, in_features: 1, weights: vec![0.0] },
            ],
            classifier: 1,
        }
    };
    let qm = quantize_model(&ir, &QuantConfig::default()).unwrap();
    let n = build_netlist(&qm).unwrap();
    let stats = netlist_stats(&n);
    let tree = adder_tree_bits(16, 8);
    assert_eq!(stats.per_layer[1].adders_by_width, tree.histogram);
    assert_eq!(stats.per_layer[1].bit_adders, tree.total_bits);
    assert_eq!(FixedPointFormat::q3_5().total_bits(), 8);
}
