//! rewacc compiles quantized CNNs into hardened rewire-and-accumulate
//! netlists and evaluates them.
//!
//! The pipeline: load a layer-graph model ([`ir`]), prune it ([`prune`]),
//! quantize weights to powers of two and fold batch norms ([`quant`]),
//! build the adder-tree netlist ([`netlist`]), simulate it bit-exactly
//! against an independent fixed-point oracle ([`sim`]), emit structural
//! HDL ([`hdl`]), and evaluate the analytical area and throughput models
//! ([`cost`]) plus the final-layer NPU cycle model ([`npu`]).
//!
//! Every capability has a runnable demo under `examples/`; the `rewacc`
//! binary exposes the same operations as subcommands.

pub mod cost;
pub mod error;
pub mod fixed;
pub mod format;
pub mod hdl;
pub mod ir;
pub mod mobilenet;
pub mod netlist;
pub mod npu;
pub mod prune;
pub mod quant;
pub mod sim;
pub mod toygen;

pub use error::{Error, Result};
