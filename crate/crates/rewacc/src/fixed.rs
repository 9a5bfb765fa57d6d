//! Signed fixed-point formats and the rounding/saturation rules shared by
//! the quantizer, the netlist semantics, and the simulator.
//!
//! A `Qm.n` format has `m` integer bits (sign included) and `n` fraction
//! bits, so Q3.5 is 8 bits total with representable range
//! [-4, 3.96875] at a resolution of 2^-5. Codes are stored as plain
//! signed integers; a value `x` is encoded as `round(x * 2^n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed Qm.n fixed-point descriptor. `int_bits` counts the sign bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPointFormat {
    pub int_bits: u32,
    pub frac_bits: u32,
}

impl FixedPointFormat {
    pub fn new(int_bits: u32, frac_bits: u32) -> Result<Self> {
        if int_bits < 1 {
            return Err(Error::Quant("fixed-point format needs at least a sign bit".into()));
        }
        if int_bits + frac_bits > 32 {
            return Err(Error::Quant(format!(
                "fixed-point format Q{int_bits}.{frac_bits} exceeds 32 bits"
            )));
        }
        Ok(Self { int_bits, frac_bits })
    }

    /// The default activation format: Q3.5, 8 bits total.
    pub fn q3_5() -> Self {
        Self { int_bits: 3, frac_bits: 5 }
    }

    pub fn total_bits(&self) -> u32 {
        self.int_bits + self.frac_bits
    }

    /// Smallest representable code.
    pub fn min_code(&self) -> i64 {
        -(1i64 << (self.total_bits() - 1))
    }

    /// Largest representable code.
    pub fn max_code(&self) -> i64 {
        (1i64 << (self.total_bits() - 1)) - 1
    }

    pub fn min_value(&self) -> f64 {
        self.min_code() as f64 * self.resolution()
    }

    pub fn max_value(&self) -> f64 {
        self.max_code() as f64 * self.resolution()
    }

    pub fn resolution(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    /// Widen the integer part by `extra` bits, keeping the fraction. Used
    /// for accumulator formats at adder-tree roots.
    pub fn widened(&self, extra: u32) -> Self {
        Self { int_bits: self.int_bits + extra, frac_bits: self.frac_bits }
    }

    pub fn contains_code(&self, code: i64) -> bool {
        code >= self.min_code() && code <= self.max_code()
    }

    /// Quantize a real value: round to nearest at 2^-n resolution with
    /// ties to even, then saturate to the format range.
    pub fn quantize(&self, x: f64) -> i64 {
        let scaled = x * (self.frac_bits as f64).exp2();
        let code = round_half_even(scaled);
        code.clamp(self.min_code(), self.max_code())
    }

    pub fn dequantize(&self, code: i64) -> f64 {
        code as f64 * self.resolution()
    }

    /// Saturate an arbitrary integer code into this format's range.
    pub fn saturate(&self, code: i64) -> i64 {
        code.clamp(self.min_code(), self.max_code())
    }
}

impl std::fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Q{}.{}", self.int_bits, self.frac_bits)
    }
}

/// Round to nearest integer, ties to even (IEEE "banker's rounding").
pub fn round_half_even(x: f64) -> i64 {
    let floor = x.floor();
    let frac = x - floor;
    let f = floor as i64;
    match frac.partial_cmp(&0.5) {
        Some(std::cmp::Ordering::Greater) => f + 1,
        Some(std::cmp::Ordering::Less) => f,
        _ => {
            if f % 2 == 0 {
                f
            } else {
                f + 1
            }
        }
    }
}

/// Check that a code fits in `width` bits of two's complement.
pub fn fits_width(code: i64, width: u32) -> bool {
    let lo = -(1i64 << (width - 1));
    let hi = (1i64 << (width - 1)) - 1;
    code >= lo && code <= hi
}

/// Saturate a code to `width` bits of two's complement.
pub fn saturate_width(code: i64, width: u32) -> i64 {
    code.clamp(-(1i64 << (width - 1)), (1i64 << (width - 1)) - 1)
}

/// The rewire-leaf shift: multiply an activation-width code by 2^shift,
/// staying at activation width. Right shifts are arithmetic (truncate
/// toward -inf, dropped bits discarded); left shifts saturate at the
/// format bounds; shift 0 is the identity wiring.
pub fn shift_code(code: i64, shift: i32, width: u32) -> i64 {
    if shift >= 0 {
        let s = shift.min(62) as u32;
        let shifted = code.checked_shl(s).unwrap_or(i64::MAX);
        saturate_width(shifted, width)
    } else {
        code >> ((-shift).min(62) as u32)
    }
}

/// The gate-level ReLU on a `width`-bit two's-complement code: invert the
/// sign bit and AND it across the rest, i.e. max(x, 0).
pub fn relu_gate(code: i64, width: u32) -> i64 {
    debug_assert!(fits_width(code, width), "relu_gate input out of width");
    let msb = (code >> (width - 1)) & 1;
    if msb != 0 {
        0
    } else {
        code
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q3_5_range() {
        let f = FixedPointFormat::q3_5();
        assert_eq!(f.total_bits(), 8);
        assert_eq!(f.min_code(), -128);
        assert_eq!(f.max_code(), 127);
        assert_eq!(f.min_value(), -4.0);
        assert_eq!(f.max_value(), 3.96875);
    }

    #[test]
    fn quantize_exact_and_saturating() {
        let f = FixedPointFormat::q3_5();
        // 1.5 * 2^5 = 48, exactly representable
        assert_eq!(f.quantize(1.5), 48);
        // far out of range: clamps to +max
        assert_eq!(f.quantize(100.0), 127);
        assert_eq!(f.quantize(-100.0), -128);
        // 2^-6 scales to 0.5, round-half-even picks 0
        assert_eq!(f.quantize(2f64.powi(-6)), 0);
        // 3 * 2^-6 scales to 1.5, round-half-even picks 2
        assert_eq!(f.quantize(3.0 * 2f64.powi(-6)), 2);
    }

    #[test]
    fn quantize_is_idempotent() {
        let f = FixedPointFormat::q3_5();
        for code in f.min_code()..=f.max_code() {
            let v = f.dequantize(code);
            assert_eq!(f.quantize(v), code);
        }
    }

    #[test]
    fn round_half_even_cases() {
        assert_eq!(round_half_even(0.5), 0);
        assert_eq!(round_half_even(1.5), 2);
        assert_eq!(round_half_even(2.5), 2);
        assert_eq!(round_half_even(-0.5), 0);
        assert_eq!(round_half_even(-1.5), -2);
        assert_eq!(round_half_even(0.49), 0);
        assert_eq!(round_half_even(0.51), 1);
    }

    #[test]
    fn shift_semantics() {
        // identity
        assert_eq!(shift_code(37, 0, 8), 37);
        // arithmetic right shift truncates toward -inf
        assert_eq!(shift_code(-5, -1, 8), -3);
        assert_eq!(shift_code(5, -1, 8), 2);
        assert_eq!(shift_code(-1, -3, 8), -1);
        // left shift saturates at the 8-bit bounds
        assert_eq!(shift_code(100, 1, 8), 127);
        assert_eq!(shift_code(-100, 1, 8), -128);
        assert_eq!(shift_code(3, 2, 8), 12);
    }

    #[test]
    fn relu_gate_equals_max_exhaustive() {
        for width in 4..=12u32 {
            let lo = -(1i64 << (width - 1));
            let hi = (1i64 << (width - 1)) - 1;
            for x in lo..=hi {
                assert_eq!(relu_gate(x, width), x.max(0), "width {width}, x {x}");
            }
        }
    }
}
