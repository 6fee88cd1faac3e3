//! Bit-exact emulation of the FP32, FP16 and BFloat16 formats.
//!
//! Every emulated operation computes its result in binary64 and then rounds
//! once to the target format with round-to-nearest, ties-to-even. For the
//! three formats here the binary64 intermediate of a single add, subtract or
//! multiply is either exact or wide enough that the second rounding cannot
//! differ from a direct correctly rounded result (53 >= 2p + 2 for p <= 24).
//! Subnormals are kept, overflow goes to infinity and NaNs are quiet.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One of the three emulated floating-point formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Format {
    Fp32,
    Fp16,
    Bf16,
}

/// Static layout of a binary interchange format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FormatSpec {
    pub format: Format,
    pub exp_bits: u32,
    pub mant_bits: u32,
    pub bias: i32,
    pub total_bits: u32,
}

pub const FP32: FormatSpec = FormatSpec::new(Format::Fp32, 8, 23);
pub const FP16: FormatSpec = FormatSpec::new(Format::Fp16, 5, 10);
pub const BF16: FormatSpec = FormatSpec::new(Format::Bf16, 8, 7);

impl FormatSpec {
    const fn new(format: Format, exp_bits: u32, mant_bits: u32) -> Self {
        FormatSpec {
            format,
            exp_bits,
            mant_bits,
            bias: (1 << (exp_bits - 1)) - 1,
            total_bits: 1 + exp_bits + mant_bits,
        }
    }

    /// All-ones biased exponent, reserved for Inf and NaN.
    pub const fn max_biased_exponent(&self) -> u32 {
        (1 << self.exp_bits) - 1
    }

    /// Unbiased exponent of the smallest normal number.
    pub const fn min_normal_exponent(&self) -> i32 {
        1 - self.bias
    }

    pub const fn max_normal_exponent(&self) -> i32 {
        self.max_biased_exponent() as i32 - 1 - self.bias
    }

    pub const fn sign_mask(&self) -> u32 {
        1 << (self.total_bits - 1)
    }

    pub const fn mant_mask(&self) -> u32 {
        (1 << self.mant_bits) - 1
    }

    pub const fn bit_mask(&self) -> u32 {
        if self.total_bits == 32 {
            u32::MAX
        } else {
            (1 << self.total_bits) - 1
        }
    }

    pub const fn inf_bits(&self) -> u32 {
        self.max_biased_exponent() << self.mant_bits
    }

    pub const fn quiet_nan_bits(&self) -> u32 {
        self.inf_bits() | (1 << (self.mant_bits - 1))
    }

    /// Largest finite value.
    pub fn max_value(&self) -> f64 {
        decode(self.inf_bits() - 1, self)
    }

    /// Smallest positive normal value.
    pub fn min_positive_normal(&self) -> f64 {
        pow2(self.min_normal_exponent())
    }
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Fp32, Format::Fp16, Format::Bf16];

    pub const fn spec(self) -> &'static FormatSpec {
        match self {
            Format::Fp32 => &FP32,
            Format::Fp16 => &FP16,
            Format::Bf16 => &BF16,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Format::Fp32 => "fp32",
            Format::Fp16 => "fp16",
            Format::Bf16 => "bf16",
        }
    }

    /// Round a binary64 value to this format and return the rounded value.
    #[inline]
    pub fn round(self, x: f64) -> f64 {
        let spec = self.spec();
        decode(encode(x, spec), spec)
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fp32" | "f32" | "float32" => Ok(Format::Fp32),
            "fp16" | "f16" | "float16" | "half" => Ok(Format::Fp16),
            "bf16" | "bfloat16" => Ok(Format::Bf16),
            other => Err(Error::Usage(format!("unknown format `{other}`"))),
        }
    }
}

/// Exact power of two as binary64, flushing to 0 or infinity outside its range.
pub fn pow2(e: i32) -> f64 {
    if e > 1023 {
        f64::INFINITY
    } else if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else if e >= -1074 {
        f64::from_bits(1u64 << (e + 1074))
    } else {
        0.0
    }
}

/// `floor(log2(|x|))` for finite nonzero `x`, including binary64 subnormals.
pub fn binade_exponent(x: f64) -> Option<i32> {
    if !x.is_finite() || x == 0.0 {
        return None;
    }
    let raw = x.abs().to_bits();
    let biased = ((raw >> 52) & 0x7ff) as i32;
    if biased != 0 {
        Some(biased - 1023)
    } else {
        let frac = raw & ((1u64 << 52) - 1);
        Some(-1074 + 63 - frac.leading_zeros() as i32)
    }
}

/// Round `x` to the nearest representable value of `spec` (ties to even) and
/// return its bit pattern.
pub(crate) fn encode(x: f64, spec: &FormatSpec) -> u32 {
    let sign = if x.is_sign_negative() {
        spec.sign_mask()
    } else {
        0
    };
    if x.is_nan() {
        return spec.quiet_nan_bits();
    }
    if x.is_infinite() {
        return sign | spec.inf_bits();
    }
    if x == 0.0 {
        return sign;
    }

    let raw = x.abs().to_bits();
    let biased = ((raw >> 52) & 0x7ff) as i32;
    let frac = raw & ((1u64 << 52) - 1);
    // |x| = sig * 2^exp2
    let (sig, exp2) = if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    };
    let top = 63 - sig.leading_zeros() as i32;
    let e = exp2 + top;

    let mant_bits = spec.mant_bits as i32;
    let quantum_exp = e.max(spec.min_normal_exponent()) - mant_bits;
    let shift = quantum_exp - exp2;

    let mut q: u64 = if shift <= 0 {
        sig << (-shift)
    } else if shift > 100 {
        0
    } else {
        let sig = sig as u128;
        let s = shift as u32;
        let kept = sig >> s;
        let rem = sig & ((1u128 << s) - 1);
        let half = 1u128 << (s - 1);
        let round_up = rem > half || (rem == half && kept & 1 == 1);
        (kept + round_up as u128) as u64
    };
    if q == 0 {
        return sign;
    }

    let mut qe = quantum_exp;
    let implicit = 1u64 << spec.mant_bits;
    if q >= implicit << 1 {
        q >>= 1;
        qe += 1;
    }
    let (biased_out, field) = if q >= implicit {
        (qe + mant_bits + spec.bias, q - implicit)
    } else {
        (0, q)
    };
    if biased_out >= spec.max_biased_exponent() as i32 {
        return sign | spec.inf_bits();
    }
    sign | ((biased_out as u32) << spec.mant_bits) | field as u32
}

/// Exact binary64 value of a bit pattern in `spec`.
pub(crate) fn decode(bits: u32, spec: &FormatSpec) -> f64 {
    let negative = bits & spec.sign_mask() != 0;
    let biased = (bits >> spec.mant_bits) & spec.max_biased_exponent();
    let field = bits & spec.mant_mask();
    let magnitude = if biased == spec.max_biased_exponent() {
        if field == 0 {
            f64::INFINITY
        } else {
            return f64::NAN;
        }
    } else if biased == 0 {
        field as f64 * pow2(spec.min_normal_exponent() - spec.mant_bits as i32)
    } else {
        ((1u64 << spec.mant_bits) | field as u64) as f64
            * pow2(biased as i32 - spec.bias - spec.mant_bits as i32)
    };
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// The IEEE-754 fields of a scalar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decomposed {
    pub sign: u8,
    pub biased_exponent: u32,
    pub significand_field: u32,
}

/// A format-tagged scalar carried as its raw bit pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FpScalar {
    bits: u32,
    format: Format,
}

impl FpScalar {
    /// Wraps a raw bit pattern; bits above the format width are dropped.
    pub fn from_bits(bits: u32, format: Format) -> Self {
        FpScalar {
            bits: bits & format.spec().bit_mask(),
            format,
        }
    }

    /// Rounds a binary64 value into `format`.
    pub fn from_f64(x: f64, format: Format) -> Self {
        round_binary(x, format)
    }

    pub fn zero(format: Format) -> Self {
        FpScalar { bits: 0, format }
    }

    pub fn one(format: Format) -> Self {
        round_binary(1.0, format)
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn format(self) -> Format {
        self.format
    }

    pub fn spec(self) -> &'static FormatSpec {
        self.format.spec()
    }

    /// The exact value as binary64.
    pub fn to_f64(self) -> f64 {
        decode(self.bits, self.spec())
    }

    fn biased_exponent(self) -> u32 {
        let spec = self.spec();
        (self.bits >> spec.mant_bits) & spec.max_biased_exponent()
    }

    pub fn is_nan(self) -> bool {
        self.biased_exponent() == self.spec().max_biased_exponent()
            && self.bits & self.spec().mant_mask() != 0
    }

    pub fn is_infinite(self) -> bool {
        self.bits & !self.spec().sign_mask() == self.spec().inf_bits()
    }

    pub fn is_finite(self) -> bool {
        self.biased_exponent() != self.spec().max_biased_exponent()
    }

    pub fn is_zero(self) -> bool {
        self.bits & !self.spec().sign_mask() == 0
    }

    pub fn is_subnormal(self) -> bool {
        self.biased_exponent() == 0 && !self.is_zero()
    }

    pub fn is_sign_negative(self) -> bool {
        self.bits & self.spec().sign_mask() != 0
    }

    /// Splits a finite scalar into sign, biased exponent and significand field.
    pub fn decompose(self) -> Result<Decomposed> {
        if !self.is_finite() {
            return Err(Error::Domain(format!(
                "cannot decompose non-finite {} value",
                self.format
            )));
        }
        Ok(Decomposed {
            sign: self.is_sign_negative() as u8,
            biased_exponent: self.biased_exponent(),
            significand_field: self.bits & self.spec().mant_mask(),
        })
    }

    /// Inverse of [`FpScalar::decompose`].
    pub fn compose(fields: Decomposed, format: Format) -> Result<Self> {
        let spec = format.spec();
        if fields.sign > 1
            || fields.biased_exponent >= spec.max_biased_exponent()
            || fields.significand_field > spec.mant_mask()
        {
            return Err(Error::Domain(format!(
                "fields {fields:?} do not describe a finite {format} value"
            )));
        }
        let bits = ((fields.sign as u32) << (spec.total_bits - 1))
            | (fields.biased_exponent << spec.mant_bits)
            | fields.significand_field;
        Ok(FpScalar { bits, format })
    }

    /// Unbiased exponent `E - bias` of a finite nonzero scalar. Subnormals
    /// report the exponent they would have once normalized.
    pub fn unbiased_exponent(self) -> Option<i32> {
        if !self.is_finite() || self.is_zero() {
            return None;
        }
        let spec = self.spec();
        let biased = self.biased_exponent();
        if biased != 0 {
            Some(biased as i32 - spec.bias)
        } else {
            let field = self.bits & spec.mant_mask();
            let top = 31 - field.leading_zeros() as i32;
            Some(spec.min_normal_exponent() - spec.mant_bits as i32 + top)
        }
    }

    /// Significand in `[1, 2)` of a finite nonzero scalar.
    pub fn significand(self) -> Option<f64> {
        self.unbiased_exponent()
            .map(|e| self.to_f64().abs() * pow2(-e))
    }

    /// Distance in units in the last place between two finite scalars of the
    /// same format, counted along the ordered bit patterns.
    pub fn ulp_distance(self, other: FpScalar) -> Result<u64> {
        check_same(self, other)?;
        if !self.is_finite() || !other.is_finite() {
            return Err(Error::Domain("ulp distance of non-finite value".into()));
        }
        let key = |s: FpScalar| -> i64 {
            let magnitude = (s.bits & !s.spec().sign_mask()) as i64;
            if s.is_sign_negative() {
                -magnitude
            } else {
                magnitude
            }
        };
        Ok(key(self).abs_diff(key(other)))
    }
}

impl fmt::Display for FpScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Nearest representable value of `format`, ties to even.
pub fn round_binary(x: f64, format: Format) -> FpScalar {
    FpScalar {
        bits: encode(x, format.spec()),
        format,
    }
}

fn check_same(a: FpScalar, b: FpScalar) -> Result<()> {
    if a.format != b.format {
        return Err(Error::FormatMismatch {
            expected: a.format,
            found: b.format,
        });
    }
    Ok(())
}

pub fn emu_add(a: FpScalar, b: FpScalar) -> Result<FpScalar> {
    check_same(a, b)?;
    Ok(round_binary(a.to_f64() + b.to_f64(), a.format))
}

pub fn emu_sub(a: FpScalar, b: FpScalar) -> Result<FpScalar> {
    check_same(a, b)?;
    Ok(round_binary(a.to_f64() - b.to_f64(), a.format))
}

pub fn emu_mul(a: FpScalar, b: FpScalar) -> Result<FpScalar> {
    check_same(a, b)?;
    Ok(round_binary(a.to_f64() * b.to_f64(), a.format))
}

/// Arithmetic context for scalar values held as binary64.
///
/// `Format` rounds every primitive result once into the format, which is the
/// same as operating on [`FpScalar`]s. `Exact` is plain binary64 and serves
/// as the reference path for the analytic properties.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arith {
    Exact,
    Format(Format),
}

impl Arith {
    #[inline]
    pub fn round(self, x: f64) -> f64 {
        match self {
            Arith::Exact => x,
            Arith::Format(f) => f.round(x),
        }
    }

    #[inline]
    pub fn add(self, a: f64, b: f64) -> f64 {
        self.round(a + b)
    }

    #[inline]
    pub fn sub(self, a: f64, b: f64) -> f64 {
        self.round(a - b)
    }

    #[inline]
    pub fn mul(self, a: f64, b: f64) -> f64 {
        self.round(a * b)
    }
}

/// Default fan-in of the adder trees.
pub const TREE_ARITY: usize = 8;

/// Sum of `xs` in the reduction order of the adder block.
///
/// The input is cut into chunks of `arity * arity` consecutive elements.
/// Each chunk goes through `arity` first-level trees of `arity` inputs, whose
/// outputs feed one second-level tree. When more than one chunk exists, the
/// chunk partial sums are fed back through the same block as a new input.
/// An `arity`-input tree adds adjacent pairs level by level. Missing inputs
/// of the last chunk are zeros.
pub fn tree_sum(format: Format, xs: &[FpScalar], arity: usize) -> Result<FpScalar> {
    if let Some(bad) = xs.iter().find(|x| x.format != format) {
        return Err(Error::FormatMismatch {
            expected: format,
            found: bad.format,
        });
    }
    let values: Vec<f64> = xs.iter().map(|x| x.to_f64()).collect();
    let sum = tree_reduce(Arith::Format(format), &values, arity)?;
    Ok(round_binary(sum, format))
}

/// [`tree_sum`] over binary64 values in an arbitrary arithmetic context.
pub fn tree_reduce(arith: Arith, xs: &[f64], arity: usize) -> Result<f64> {
    if arity < 2 {
        return Err(Error::Usage(format!("adder tree arity must be >= 2, got {arity}")));
    }
    if xs.is_empty() {
        return Ok(0.0);
    }
    let chunk_len = arity * arity;
    let mut partials: Vec<f64> = Vec::with_capacity(xs.len().div_ceil(chunk_len));
    let mut buf = vec![0.0; chunk_len];
    let mut level1 = vec![0.0; arity];
    for chunk in xs.chunks(chunk_len) {
        buf[..chunk.len()].copy_from_slice(chunk);
        buf[chunk.len()..].fill(0.0);
        for (out, group) in level1.iter_mut().zip(buf.chunks(arity)) {
            *out = adder_tree(arith, group);
        }
        partials.push(adder_tree(arith, &level1));
    }
    if partials.len() == 1 {
        Ok(partials[0])
    } else {
        tree_reduce(arith, &partials, arity)
    }
}

fn adder_tree(arith: Arith, inputs: &[f64]) -> f64 {
    let mut level: Vec<f64> = inputs.to_vec();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => arith.add(*a, *b),
                [a] => *a,
                _ => unreachable!(),
            })
            .collect();
    }
    level[0]
}
