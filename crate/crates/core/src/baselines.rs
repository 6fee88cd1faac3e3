//! Comparison targets: fast-inverse-square-root layer norm and a binary64
//! reference.

use crate::error::{Error, Result};
use crate::fpformat::{Arith, Format, FpScalar};
use crate::norm::{normalize_with, IterOutcome, NormInputs, NormResult};

/// Canonical FP32 magic constant.
pub const FP32_MAGIC: u32 = 0x5f37_59df;
/// Upper half of [`FP32_MAGIC`], for BFloat16.
pub const BF16_MAGIC: u32 = 0x5f37;

/// Parameters of the bit-trick seed and its Newton refinement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FisrSpec {
    format: Format,
    pub magic: u32,
    pub newton_iters: u32,
}

impl FisrSpec {
    /// Only formats with an 8-bit exponent are accepted: the seed halves the
    /// exponent by shifting the whole pattern.
    pub fn new(format: Format, magic: u32, newton_iters: u32) -> Result<Self> {
        if format.spec().exp_bits != 8 {
            return Err(Error::Usage(format!(
                "fast inverse square root needs an 8-bit exponent; {format} has {}",
                format.spec().exp_bits
            )));
        }
        Ok(FisrSpec { format, magic: magic & format.spec().bit_mask(), newton_iters })
    }

    /// Canonical constant and one Newton step.
    pub fn canonical(format: Format) -> Result<Self> {
        let magic = match format {
            Format::Bf16 => BF16_MAGIC,
            _ => FP32_MAGIC,
        };
        Self::new(format, magic, 1)
    }

    pub fn format(&self) -> Format {
        self.format
    }
}

/// `magic − (bits >> 1)` refined by `y ← y·(1.5 − 0.5·x·y²)`, all in the
/// format's arithmetic.
pub fn fisr_inv_sqrt(x: FpScalar, spec: &FisrSpec) -> Result<FpScalar> {
    if x.format() != spec.format {
        return Err(Error::FormatMismatch { expected: spec.format, found: x.format() });
    }
    let value = x.to_f64();
    if !(value > 0.0) || x.is_infinite() {
        return Err(Error::Domain(format!("inverse square root of {value}")));
    }
    let arith = Arith::Format(spec.format);
    let seed = FpScalar::from_bits(spec.magic.wrapping_sub(x.bits() >> 1), spec.format);
    let half_x = arith.mul(0.5, value);
    let mut y = seed.to_f64();
    for _ in 0..spec.newton_iters {
        let t = arith.mul(half_x, y);
        let t = arith.mul(t, y);
        let t = arith.sub(1.5, t);
        y = arith.mul(y, t);
    }
    Ok(FpScalar::from_f64(y, spec.format))
}

/// The layer-norm pipeline with the inverse norm taken from
/// [`fisr_inv_sqrt`].
pub fn layernorm_fisr(inputs: &NormInputs, spec: &FisrSpec) -> Result<NormResult> {
    if inputs.format() != spec.format {
        return Err(Error::FormatMismatch { expected: spec.format, found: inputs.format() });
    }
    normalize_with(inputs, |m| {
        let a = fisr_inv_sqrt(FpScalar::from_f64(m, spec.format), spec)?.to_f64();
        Ok(IterOutcome { a_final: a, trajectory: vec![a], steps: spec.newton_iters, converged: true })
    })
}

/// Neumaier-compensated sum.
fn accurate_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Layer normalization in binary64 from the exact input values, rounded to
/// the input format once per output element.
///
/// The mean shift is carried as `w = d·x − Σx`, which is scale free and exact
/// for moderate `d`, so `ŷ = √d·w/‖w‖₂`. A zero-variance input gives `z = β`.
pub fn layernorm_reference(inputs: &NormInputs) -> NormResult {
    let format = inputs.format();
    let d = inputs.len() as f64;
    let x: Vec<f64> = inputs.x().iter().map(|s| s.to_f64()).collect();
    let total = accurate_sum(x.iter().copied());
    let w: Vec<f64> = x.iter().map(|&v| d * v - total).collect();
    let w_norm_sq = accurate_sum(w.iter().map(|v| v * v));
    let mean = total / d;

    let y_hat: Vec<f64> = if w_norm_sq == 0.0 {
        vec![0.0; x.len()]
    } else {
        let scale = d.sqrt() / w_norm_sq.sqrt();
        w.iter().map(|v| v * scale).collect()
    };
    let z = if w_norm_sq == 0.0 {
        inputs.beta().to_vec()
    } else {
        y_hat
            .iter()
            .zip(inputs.gamma().iter().zip(inputs.beta()))
            .map(|(yh, (g, b))| FpScalar::from_f64(g.to_f64() * yh + b.to_f64(), format))
            .collect()
    };
    let m = w_norm_sq / (d * d);
    NormResult {
        z,
        y_hat: y_hat.iter().map(|&v| FpScalar::from_f64(v, format)).collect(),
        mean: FpScalar::from_f64(mean, format),
        m: FpScalar::from_f64(m, format),
        a_trajectory: if m > 0.0 { vec![m.sqrt().recip()] } else { Vec::new() },
        steps_taken: 0,
        converged: true,
    }
}
