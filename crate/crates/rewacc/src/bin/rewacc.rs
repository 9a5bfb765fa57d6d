//! Command-line front end. Each subcommand is a thin wrapper over the
//! library pipeline: load -> prune -> quantize/fold -> harden ->
//! simulate/emit/stats, plus the area, perf, and cycle models. Every
//! artifact embeds the effective configuration and seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use rewacc::cost::{
    self, AreaMode, AreaParams, BandwidthMode, PerfParams, Variant as CostVariant,
};
use rewacc::error::{Error, Result};
use rewacc::fixed::FixedPointFormat;
use rewacc::format;
use rewacc::ir::ModelIR;
use rewacc::netlist::{build_netlist, netlist_stats};
use rewacc::npu::{self, ArrayConfig, Dataflow, GemmDims};
use rewacc::prune::{self, PruneScope};
use rewacc::quant::{quantize_model, QuantConfig, QuantizedModel};
use rewacc::sim::{oracle_forward, simulate, FixedTensor, SimOptions};
use rewacc::{hdl, mobilenet, toygen};

#[derive(Parser)]
#[command(name = "rewacc", version, about = "Compile quantized CNNs to rewire-and-accumulate netlists and evaluate them")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Key-value config file (key = value per line; CLI flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Seed for generated models and inputs.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args, Clone, Default)]
struct QuantFlags {
    /// Activation integer bits (sign included).
    #[arg(long)]
    act_int: Option<u32>,
    /// Activation fraction bits.
    #[arg(long)]
    act_frac: Option<u32>,
    /// Smallest weight exponent.
    #[arg(long)]
    exp_min: Option<i32>,
    /// Largest weight exponent.
    #[arg(long)]
    exp_max: Option<i32>,
}

#[derive(Args, Clone, Default)]
struct PerfFlags {
    /// Dense extractor area A0 in mm^2.
    #[arg(long)]
    a0: Option<f64>,
    /// Reticle limit in mm^2.
    #[arg(long)]
    reticle: Option<f64>,
    /// NPU cycle budget.
    #[arg(long)]
    npu_cycles: Option<f64>,
    /// Input bytes per inference.
    #[arg(long)]
    bytes_in: Option<f64>,
    /// Output bytes per inference.
    #[arg(long)]
    bytes_out: Option<f64>,
    /// Clock in GHz.
    #[arg(long)]
    clock_ghz: Option<f64>,
    /// Bandwidth attribution: per_accelerator or die_shared.
    #[arg(long)]
    bandwidth_mode: Option<CliBandwidthMode>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliBandwidthMode {
    PerAccelerator,
    DieShared,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliVariant {
    Flex,
    Fix,
}

impl From<CliVariant> for CostVariant {
    fn from(v: CliVariant) -> Self {
        match v {
            CliVariant::Flex => CostVariant::Flex,
            CliVariant::Fix => CostVariant::Fix,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CliDataflow {
    Os,
    Ws,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliScope {
    PerLayer,
    Global,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliAreaMode {
    Linear,
    Detailed,
}

#[derive(Subcommand)]
enum Command {
    /// Print layer shapes and Toeplitz dims; optionally save the model.
    Inspect {
        /// Model manifest path, or builtin:mobilenetv2 / builtin:toy.
        #[arg(long)]
        model: String,
        /// Write the (possibly builtin) model to this manifest path.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Quantize weights to Po2 codes and batch norms to scale/offset
    /// codes; reports code statistics and saves the folded model.
    Quantize {
        #[arg(long)]
        model: String,
        #[command(flatten)]
        quant: QuantFlags,
        /// Where to save the quantized model manifest.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fold quantized batch norms into their convolutions and save the
    /// hardened-ready model (reports exponent clamping).
    Fold {
        #[arg(long)]
        model: String,
        #[command(flatten)]
        quant: QuantFlags,
        #[arg(long)]
        out: PathBuf,
    },
    /// Magnitude-prune a real-valued model (depthwise and first conv are
    /// kept dense) and save it.
    Prune {
        #[arg(long)]
        model: String,
        #[arg(long)]
        sparsity: f64,
        #[arg(long, value_enum, default_value = "per-layer")]
        scope: CliScope,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the hardened netlist and write its statistics.
    Harden {
        #[arg(long)]
        model: String,
        /// Prune to this sparsity first.
        #[arg(long)]
        sparsity: Option<f64>,
        #[command(flatten)]
        quant: QuantFlags,
    },
    /// Emit structural HDL for the hardened netlist.
    Emit {
        #[arg(long)]
        model: String,
        #[arg(long)]
        sparsity: Option<f64>,
        #[command(flatten)]
        quant: QuantFlags,
        #[arg(long, default_value = "extractor")]
        top: String,
    },
    /// Simulate the netlist on an input and export the trace.
    Sim {
        #[arg(long)]
        model: String,
        /// Raw 8-bit RGB binary or tensor JSON (by extension: .json).
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        quant: QuantFlags,
        /// Capture every node value in the trace.
        #[arg(long)]
        debug_nodes: bool,
    },
    /// Check netlist simulation against the independent fixed-point
    /// oracle on seeded random inputs.
    Diff {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 32)]
        inputs: usize,
        #[command(flatten)]
        quant: QuantFlags,
    },
    /// Analytical area model (linear shortcut or per-layer trees).
    Area {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 0.0)]
        sparsity: f64,
        #[arg(long, value_enum, default_value = "linear")]
        mode: CliAreaMode,
        #[arg(long)]
        act_bits: Option<u32>,
        #[arg(long)]
        a0: Option<f64>,
    },
    /// Throughput/latency model at one sparsity point.
    Perf {
        #[arg(long, value_enum)]
        variant: CliVariant,
        #[arg(long)]
        sparsity: f64,
        #[command(flatten)]
        perf: PerfFlags,
    },
    /// Perf model across a sparsity range; writes plot-ready CSV.
    Sweep {
        #[arg(long, value_enum)]
        variant: CliVariant,
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        #[arg(long, default_value_t = 0.80)]
        end: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[command(flatten)]
        perf: PerfFlags,
    },
    /// Reproduce the accelerator comparison-table rows with deviations
    /// against the published reference values.
    Table3 {
        #[command(flatten)]
        perf: PerfFlags,
    },
    /// Cycle model for one GEMM on a systolic array.
    NpuCycles {
        #[arg(long, default_value_t = 1000)]
        rows: usize,
        #[arg(long, default_value_t = 1)]
        cols: usize,
        #[arg(long, value_enum, default_value = "os")]
        dataflow: CliDataflow,
        #[arg(short, default_value_t = 1000)]
        m: usize,
        #[arg(short, default_value_t = 1)]
        n: usize,
        #[arg(short, default_value_t = 1280)]
        k: usize,
    },
    /// 2:4 cycle study over the bundled MobileNetV2 layers.
    #[command(name = "study-24")]
    Study24 {
        #[arg(long, default_value_t = 128)]
        rows: usize,
        #[arg(long, default_value_t = 128)]
        cols: usize,
    },
}

/// Key-value config file: `key = value` lines, `#` comments.
fn read_config(path: &Option<PathBuf>) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    if let Some(p) = path {
        let text = fs::read_to_string(p)
            .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    Ok(map)
}

fn cfg_parse<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("bad value for {key}: {v}"))),
    }
}

struct Ctx {
    file_cfg: BTreeMap<String, String>,
    out_dir: PathBuf,
    seed: u64,
}

impl Ctx {
    /// Precedence: CLI flag > config file > default.
    fn resolve<T: std::str::FromStr + Copy>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        Ok(cfg_parse(&self.file_cfg, key)?.unwrap_or(default))
    }

    fn quant_config(&self, flags: &QuantFlags) -> Result<QuantConfig> {
        let base = QuantConfig::default();
        let act_int = self.resolve(flags.act_int, "act_int", base.activation.int_bits)?;
        let act_frac = self.resolve(flags.act_frac, "act_frac", base.activation.frac_bits)?;
        let exp_min = self.resolve(flags.exp_min, "exp_min", base.exp_min)?;
        let exp_max = self.resolve(flags.exp_max, "exp_max", base.exp_max)?;
        QuantConfig::new(FixedPointFormat::new(act_int, act_frac)?, exp_min, exp_max)
    }

    fn perf_params(&self, flags: &PerfFlags, variant: CostVariant) -> Result<PerfParams> {
        let mut p = PerfParams::for_variant(variant);
        p.base_area_mm2 = self.resolve(flags.a0, "a0", p.base_area_mm2)?;
        p.reticle_mm2 = self.resolve(flags.reticle, "reticle", p.reticle_mm2)?;
        p.npu_cycles = self.resolve(flags.npu_cycles, "npu_cycles", p.npu_cycles)?;
        p.bytes_in = self.resolve(flags.bytes_in, "bytes_in", p.bytes_in)?;
        p.bytes_out = self.resolve(flags.bytes_out, "bytes_out", p.bytes_out)?;
        let ghz = self.resolve(flags.clock_ghz, "clock_ghz", p.clock_hz / 1e9)?;
        p.clock_hz = ghz * 1e9;
        if let Some(mode) = flags.bandwidth_mode {
            p.bandwidth_mode = match mode {
                CliBandwidthMode::PerAccelerator => BandwidthMode::PerAccelerator,
                CliBandwidthMode::DieShared => BandwidthMode::DieShared,
            };
        } else if let Some(s) = self.file_cfg.get("bandwidth_mode") {
            p.bandwidth_mode = match s.as_str() {
                "per_accelerator" => BandwidthMode::PerAccelerator,
                "die_shared" => BandwidthMode::DieShared,
                other => return Err(Error::Config(format!("bad bandwidth_mode {other}"))),
            };
        }
        Ok(p)
    }

    /// Load a model by path or builtin name.
    fn load_model(&self, spec: &str) -> Result<ModelIR> {
        if let Some(rest) = spec.strip_prefix("builtin:") {
            let (name, seed) = match rest.split_once(':') {
                Some((n, s)) => (
                    n,
                    s.parse::<u64>()
                        .map_err(|_| Error::Config(format!("bad builtin seed {s}")))?,
                ),
                None => (rest, self.seed),
            };
            return match name {
                "mobilenetv2" => Ok(mobilenet::model_ir(seed)),
                "toy" => Ok(toygen::toy_model(seed)),
                "random" => Ok(toygen::random_model(seed)),
                other => Err(Error::Config(format!("unknown builtin model {other}"))),
            };
        }
        format::load_model(Path::new(spec))
    }

    /// Effective configuration embedded in every artifact.
    fn effective(&self, extra: serde_json::Value) -> serde_json::Value {
        json!({
            "seed": self.seed,
            "config_file": self.file_cfg,
            "parameters": extra,
        })
    }

    fn write_artifact(&self, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(value)?)?;
        Ok(path)
    }

    fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        fs::write(&path, text)?;
        Ok(path)
    }
}

fn prune_in_place(ir: &mut ModelIR, sparsity: f64, scope: PruneScope) -> Result<serde_json::Value> {
    let masks = prune::magnitude_prune_model(ir, sparsity, scope, prune::default_skip)?;
    let rows: Vec<serde_json::Value> = masks
        .iter()
        .map(|(i, m)| {
            json!({
                "layer": i,
                "weights": m.keep.len(),
                "masked": m.masked_count(),
                "sparsity": m.sparsity(),
                "skipped": m.target_sparsity == 0.0 && sparsity > 0.0,
            })
        })
        .collect();
    prune::apply_masks(ir, &masks)?;
    Ok(json!(rows))
}

fn quantize_pipeline(
    ctx: &Ctx,
    model: &str,
    sparsity: Option<f64>,
    flags: &QuantFlags,
) -> Result<(ModelIR, QuantizedModel, QuantConfig)> {
    let mut ir = ctx.load_model(model)?;
    if let Some(s) = sparsity {
        if s > 0.0 {
            prune_in_place(&mut ir, s, PruneScope::PerLayer)?;
        }
    }
    let cfg = ctx.quant_config(flags)?;
    let qm = quantize_model(&ir, &cfg)?;
    Ok((ir, qm, cfg))
}

/// Accept either an already-quantized model file or anything the real
/// pipeline can produce one from.
fn quantized_from_spec(
    ctx: &Ctx,
    model: &str,
    sparsity: Option<f64>,
    flags: &QuantFlags,
) -> Result<QuantizedModel> {
    let path = Path::new(model);
    if path.is_file() {
        if let Ok(manifest) = serde_json::from_str::<serde_json::Value>(&fs::read_to_string(path)?) {
            if manifest["quantized"] == serde_json::Value::Bool(true) {
                if sparsity.is_some() {
                    return Err(Error::Config(
                        "--sparsity applies to real-valued models; this one is already quantized".into(),
                    ));
                }
                return format::load_quantized(path);
            }
        }
    }
    quantize_pipeline(ctx, model, sparsity, flags).map(|(_, qm, _)| qm)
}

/// Netlist construction materializes every node; refuse sizes that would
/// not fit in memory.
fn check_netlist_size(qm: &QuantizedModel) -> Result<()> {
    const LIMIT: u64 = 50_000_000;
    let estimate = rewacc::netlist::estimate_node_count(qm);
    if estimate > LIMIT {
        return Err(Error::Harden(format!(
            "netlist would need about {estimate} nodes (limit {LIMIT}); \
             harden/emit/sim run on desk-scale models, and the area and cycle \
             models handle full-size networks analytically"
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        file_cfg: read_config(&cli.config)?,
        out_dir: cli.out_dir.clone(),
        seed: cli.seed.unwrap_or(0),
    };

    match cli.command {
        Command::Inspect { model, save } => {
            let ir = ctx.load_model(&model)?;
            ir.validate()?;
            let shapes = ir.infer_shapes()?;
            let convs = ir.conv_toeplitz_dims()?;
            let conv_dims: BTreeMap<usize, serde_json::Value> = convs
                .iter()
                .map(|(i, spec, t)| {
                    (*i, json!({"m": t.m, "rsc": t.rsc, "pq": t.pq, "depthwise": spec.is_depthwise()}))
                })
                .collect();
            let layers: Vec<serde_json::Value> = ir
                .layers
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    json!({
                        "id": i,
                        "kind": l.kind(),
                        "output": format!("{}", shapes[i]),
                        "toeplitz": conv_dims.get(&i),
                    })
                })
                .collect();
            let report = json!({
                "model": ir.name,
                "input": format!("{}", ir.input),
                "k_fe": ir.k_fe()?,
                "layers": layers,
                "effective": ctx.effective(json!({"model": model})),
            });
            if let Some(path) = save {
                format::save_model(&ir, &path)?;
                println!("saved model to {}", path.display());
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            ctx.write_artifact("inspect.json", &report)?;
        }

        Command::Quantize { model, quant, out } => {
            let (_, qm, cfg) = quantize_pipeline(&ctx, &model, None, &quant)?;
            let mut zero = 0usize;
            let mut total = 0usize;
            for layer in &qm.layers {
                if let rewacc::quant::QuantLayer::Conv(fc) = layer {
                    total += fc.weights.len();
                    zero += fc.weights.iter().filter(|w| w.is_zero()).count();
                }
            }
            let report = json!({
                "model": qm.name,
                "activation": format!("{}", qm.activation),
                "weight_bits": cfg.weight_bits,
                "exponent_range": [cfg.exp_min, cfg.exp_max],
                "zero_threshold": cfg.zero_threshold,
                "weights": total,
                "zero_codes": zero,
                "clamped_exponents": qm.clamped_exponents,
                "effective": ctx.effective(json!({"model": model})),
            });
            if let Some(path) = out {
                format::save_quantized(&qm, &path)?;
                println!("saved quantized model to {}", path.display());
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            ctx.write_artifact("quantize.json", &report)?;
        }

        Command::Fold { model, quant, out } => {
            let (_, qm, _) = quantize_pipeline(&ctx, &model, None, &quant)?;
            format::save_quantized(&qm, &out)?;
            let per_layer: Vec<serde_json::Value> = qm
                .layers
                .iter()
                .enumerate()
                .filter_map(|(i, l)| match l {
                    rewacc::quant::QuantLayer::Conv(fc) => Some(json!({
                        "layer": i,
                        "clamped_exponents": fc.clamped_exponents,
                        "relu_fused": fc.relu,
                    })),
                    _ => None,
                })
                .collect();
            let report = json!({
                "model": qm.name,
                "saved": out.display().to_string(),
                "clamped_exponents": qm.clamped_exponents,
                "per_layer": per_layer,
                "effective": ctx.effective(json!({"model": model})),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            ctx.write_artifact("fold.json", &report)?;
        }

        Command::Prune { model, sparsity, scope, out } => {
            let mut ir = ctx.load_model(&model)?;
            let scope = match scope {
                CliScope::PerLayer => PruneScope::PerLayer,
                CliScope::Global => PruneScope::Global,
            };
            let rows = prune_in_place(&mut ir, sparsity, scope)?;
            format::save_model(&ir, &out)?;
            let report = json!({
                "model": ir.name,
                "sparsity": sparsity,
                "saved": out.display().to_string(),
                "per_layer": rows,
                "effective": ctx.effective(json!({"model": model, "sparsity": sparsity})),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            ctx.write_artifact("prune.json", &report)?;
        }

        Command::Harden { model, sparsity, quant } => {
            let qm = quantized_from_spec(&ctx, &model, sparsity, &quant)?;
            check_netlist_size(&qm)?;
            let netlist = build_netlist(&qm)?;
            for w in &netlist.warnings {
                eprintln!("warning: {w}");
            }
            let stats = netlist_stats(&netlist);
            let report = json!({
                "model": qm.name,
                "nodes": netlist.node_count(),
                "k_fe": netlist.k_fe,
                "stats": stats,
                "warnings": netlist.warnings,
                "effective": ctx.effective(json!({"model": model, "sparsity": sparsity})),
            });
            println!(
                "netlist: {} nodes, {} bit-adders, {} rewires",
                netlist.node_count(),
                stats.total.bit_adders,
                stats.total.rewires
            );
            let path = ctx.write_artifact("netlist_stats.json", &report)?;
            println!("wrote {}", path.display());
        }

        Command::Emit { model, sparsity, quant, top } => {
            let qm = quantized_from_spec(&ctx, &model, sparsity, &quant)?;
            check_netlist_size(&qm)?;
            let netlist = build_netlist(&qm)?;
            let text = hdl::emit_hdl(&netlist, &top);
            let path = ctx.write_text(&format!("{top}.v"), &text)?;
            println!("wrote {} ({} bytes)", path.display(), text.len());
        }

        Command::Sim { model, input, quant, debug_nodes } => {
            let qm = quantized_from_spec(&ctx, &model, None, &quant)?;
            check_netlist_size(&qm)?;
            let netlist = build_netlist(&qm)?;
            let tensor = match &input {
                Some(p) if p.extension().map(|e| e == "json").unwrap_or(false) => {
                    format::load_input_json(p)?
                }
                Some(p) => format::load_input_rgb(p, qm.input, qm.activation)?,
                None => toygen::random_input(ctx.seed, qm.input, qm.activation),
            };
            let trace = simulate(&netlist, &tensor, &SimOptions { capture_node_values: debug_nodes })?;
            let mut report = trace.export_json();
            report["effective"] = ctx.effective(json!({
                "model": model,
                "input": input.as_ref().map(|p| p.display().to_string()),
            }));
            if let Some(values) = &trace.node_values {
                report["node_values"] = json!(values);
            }
            let path = ctx.write_artifact("trace.json", &report)?;
            println!("simulated {} nodes -> {}", netlist.node_count(), path.display());
        }

        Command::Diff { model, inputs, quant } => {
            let qm = quantized_from_spec(&ctx, &model, None, &quant)?;
            check_netlist_size(&qm)?;
            let netlist = build_netlist(&qm)?;
            let mut mismatches = 0usize;
            for i in 0..inputs {
                let tensor: FixedTensor =
                    toygen::random_input(ctx.seed.wrapping_add(i as u64), qm.input, qm.activation);
                let sim = simulate(&netlist, &tensor, &SimOptions::default())?;
                let oracle = oracle_forward(&qm, &tensor)?;
                if sim.features != oracle.features || sim.layer_outputs != oracle.layer_outputs {
                    mismatches += 1;
                }
            }
            let bit_exact = mismatches == 0;
            let report = json!({
                "model": qm.name,
                "inputs": inputs,
                "mismatching_inputs": mismatches,
                "bit_exact": bit_exact,
                "effective": ctx.effective(json!({"model": model, "inputs": inputs})),
            });
            println!("bit-exact: {bit_exact}");
            ctx.write_artifact("diff.json", &report)?;
            if !bit_exact {
                return Err(Error::Sim(format!("{mismatches}/{inputs} inputs mismatched the oracle")));
            }
        }

        Command::Area { model, sparsity, mode, act_bits, a0 } => {
            let ir = ctx.load_model(&model)?;
            let mut params = AreaParams::default();
            params.base_extractor_mm2 = ctx.resolve(a0, "a0", params.base_extractor_mm2)?;
            let act_bits = ctx.resolve(act_bits, "act_bits", cost::default_act_bits())?;
            let mode = match mode {
                CliAreaMode::Linear => AreaMode::Linear,
                CliAreaMode::Detailed => AreaMode::Detailed,
            };
            let report = cost::model_area(&ir, sparsity, act_bits, &params, mode)?;
            let artifact = json!({
                "report": report,
                "effective": ctx.effective(json!({
                    "model": model, "sparsity": sparsity, "act_bits": act_bits,
                    "alpha_um2_per_bit": params.alpha_um2_per_bit, "a0": params.base_extractor_mm2,
                })),
            });
            println!(
                "extractor {:.2} mm^2, total {:.2} mm^2",
                report.extractor_mm2, report.total_mm2
            );
            ctx.write_artifact("area.json", &artifact)?;
        }

        Command::Perf { variant, sparsity, perf } => {
            let variant: CostVariant = variant.into();
            let params = ctx.perf_params(&perf, variant)?;
            let report = cost::perf_model(sparsity, variant, &params)?;
            let artifact = json!({
                "report": report,
                "effective": ctx.effective(serde_json::to_value(params)?),
            });
            println!(
                "{variant} s={sparsity}: k={}, latency {:.4} us, throughput {:.4e} img/s ({} bound)",
                report.k, report.latency_us, report.throughput_ips, report.limiter
            );
            ctx.write_artifact("perf.json", &artifact)?;
        }

        Command::Sweep { variant, start, end, step, perf } => {
            let variant: CostVariant = variant.into();
            let params = ctx.perf_params(&perf, variant)?;
            let result = cost::sweep(start, end, step, variant, &params)?;
            let mut csv = String::from("sparsity,a_mm2,k,load_cycles,latency_us,throughput_ips,limiter\n");
            for p in &result.points {
                csv.push_str(&format!(
                    "{:.4},{:.4},{},{:.2},{:.4},{:.2},{}\n",
                    p.sparsity, p.a_individ_mm2, p.k, p.load_cycles, p.latency_us, p.throughput_ips, p.limiter
                ));
            }
            let path = ctx.write_text("sweep.csv", &csv)?;
            let artifact = json!({
                "crossover_sparsity": result.crossover_sparsity,
                "points": result.points,
                "effective": ctx.effective(serde_json::to_value(params)?),
            });
            ctx.write_artifact("sweep.json", &artifact)?;
            match result.crossover_sparsity {
                Some(s) => println!("npu-bound -> load-bound crossover at s = {s:.2}; wrote {}", path.display()),
                None => println!("no crossover in range; wrote {}", path.display()),
            }
        }

        Command::Table3 { perf } => {
            let area_params = AreaParams::default();
            let mut flex_params = ctx.perf_params(&perf, CostVariant::Flex)?;
            // main-table preset unless the user pinned a reticle
            if perf.reticle.is_none() && !ctx.file_cfg.contains_key("reticle") {
                flex_params.reticle_mm2 = 880.0;
            }
            let fix_params = ctx.perf_params(&perf, CostVariant::Fix)?;
            let rows = cost::main_table(&area_params, &flex_params, &fix_params)?;
            println!("variant  throughput(img/s)  ref        latency(us)  ref    area(mm^2)  ref    max dev");
            for row in &rows {
                let max_dev = row
                    .throughput_dev_pct
                    .abs()
                    .max(row.latency_dev_pct.abs())
                    .max(row.area_dev_pct.abs());
                println!(
                    "{:<8} {:<18.4e} {:<10.2e} {:<12.4} {:<6.2} {:<11.2} {:<6.0} {:.2}%",
                    format!("{}", row.variant),
                    row.report.throughput_ips,
                    row.reference.throughput_ips,
                    row.report.latency_us,
                    row.reference.latency_us.unwrap_or(f64::NAN),
                    row.area_mm2,
                    row.reference.area_mm2,
                    max_dev
                );
                if let Some(note) = &row.note {
                    println!("         note: {note}");
                }
            }
            let artifact = json!({
                "rows": rows,
                "reference_others": cost::REFERENCE_OTHERS,
                "effective": ctx.effective(json!({
                    "flex": flex_params, "fix": fix_params,
                })),
            });
            ctx.write_artifact("table3.json", &artifact)?;
        }

        Command::NpuCycles { rows, cols, dataflow, m, n, k } => {
            let cfg = ArrayConfig {
                rows,
                cols,
                dataflow: match dataflow {
                    CliDataflow::Os => Dataflow::OutputStationary,
                    CliDataflow::Ws => Dataflow::WeightStationary,
                },
            };
            let dims = GemmDims { m, n, k };
            let report = npu::systolic_cycles(&cfg, &dims)?;
            println!(
                "{}x{} {:?} GEMM {m}x{n}x{k}: {} cycles, {} tiles, utilization {:.3}",
                rows, cols, cfg.dataflow, report.cycles, report.tiles, report.utilization
            );
            let artifact = json!({
                "config": cfg,
                "dims": dims,
                "report": report,
                "effective": ctx.effective(json!({})),
            });
            ctx.write_artifact("npu_cycles.json", &artifact)?;
        }

        Command::Study24 { rows, cols } => {
            let cfg = ArrayConfig::weight_stationary(rows, cols);
            let layers = npu::mobilenet_gemm_layers();
            let study = npu::sparsity_24_study(&layers, &cfg)?;
            let mut csv = String::from("layer,m,n,k,cycles_full,cycles_half,ratio\n");
            for r in &study.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{:.4}\n",
                    r.name, r.dims.m, r.dims.n, r.dims.k, r.cycles_full, r.cycles_half, r.ratio
                ));
            }
            let path = ctx.write_text("study24.csv", &csv)?;
            let artifact = json!({
                "mean_ratio": study.mean_ratio,
                "total_ratio": study.total_ratio,
                "rows": study.rows,
                "effective": ctx.effective(json!({"rows": rows, "cols": cols})),
            });
            ctx.write_artifact("study24.json", &artifact)?;
            println!(
                "mean per-layer ratio {:.4}, total-cycle ratio {:.4}; wrote {}",
                study.mean_ratio, study.total_ratio, path.display()
            );
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    });
}
