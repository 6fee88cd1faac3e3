//! Layer normalization by a division-free, square-root-free iteration.
//!
//! The inverse norm `a = 1/‖y‖₂` of the mean-shifted input is the stable
//! positive fixed point of the scalar map
//!
//! ```text
//! a ← a + λ·m·a·(1 − m·a²),    m = ‖y‖₂²
//! ```
//!
//! which needs only multiplies and adds. The start value and the update rate
//! are read off the exponent of `m`, so a handful of steps suffices for every
//! magnitude of input.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::dynamics;
use crate::error::{Error, Result};
use crate::fpformat::{binade_exponent, pow2, tree_reduce, Arith, Format, FpScalar, TREE_ARITY};

/// Tolerated size of the decaying term after [`DESIGN_STEPS`] steps.
pub const DESIGN_TOLERANCE: f64 = 1e-3;
/// Step budget the default update rate is designed for.
pub const DESIGN_STEPS: u32 = 5;
/// Step count used when none is given.
pub const DEFAULT_STEPS: u32 = 5;

/// Coefficient `c` of the default update rate `λ = c·2^-(E(m)-bias)`.
pub fn rate_coefficient() -> f64 {
    dynamics::lambda_lower_bound(0, DESIGN_TOLERANCE, DESIGN_STEPS)
}

/// When the iteration stops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stopping {
    /// Run exactly this many update steps.
    FixedSteps(u32),
    /// Run until `|Δa| <= delta_max`, giving up after `max_steps`.
    Threshold { delta_max: f64, max_steps: u32 },
}

/// Arithmetic used by the scalar iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IterationPrecision {
    /// Same format as the data, one rounding per primitive.
    #[default]
    Native,
    /// Unrounded binary64; `a` is rounded to the data format once at the end.
    Binary64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormConfig {
    pub stopping: Stopping,
    pub lambda_override: Option<f64>,
    /// Seed of the `Δa` loop guard in threshold mode; `2·delta_max` if unset.
    pub initial_delta: Option<f64>,
    pub iteration: IterationPrecision,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig::fixed_steps(DEFAULT_STEPS)
    }
}

impl NormConfig {
    pub fn fixed_steps(steps: u32) -> Self {
        NormConfig {
            stopping: Stopping::FixedSteps(steps),
            lambda_override: None,
            initial_delta: None,
            iteration: IterationPrecision::Native,
        }
    }

    pub fn threshold(delta_max: f64, max_steps: u32) -> Self {
        NormConfig {
            stopping: Stopping::Threshold { delta_max, max_steps },
            ..NormConfig::default()
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda_override = Some(lambda);
        self
    }

    pub fn with_iteration(mut self, iteration: IterationPrecision) -> Self {
        self.iteration = iteration;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(lambda) = self.lambda_override {
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(Error::Usage(format!("lambda must be positive and finite, got {lambda}")));
            }
        }
        if let Stopping::Threshold { delta_max, .. } = self.stopping {
            if !(delta_max.is_finite() && delta_max > 0.0) {
                return Err(Error::Usage(format!("delta_max must be positive, got {delta_max}")));
            }
            let seed = self.initial_delta();
            if !(seed > delta_max) {
                return Err(Error::Usage(format!(
                    "initial delta {seed} must exceed delta_max {delta_max}"
                )));
            }
        }
        Ok(())
    }

    fn initial_delta(&self) -> f64 {
        match self.stopping {
            Stopping::Threshold { delta_max, .. } => self.initial_delta.unwrap_or(2.0 * delta_max),
            Stopping::FixedSteps(_) => self.initial_delta.unwrap_or(f64::INFINITY),
        }
    }

    fn arith(&self, format: Format) -> Arith {
        match self.iteration {
            IterationPrecision::Native => Arith::Format(format),
            IterationPrecision::Binary64 => Arith::Exact,
        }
    }
}

/// Input vector with its scale and shift parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct NormInputs {
    x: Vec<FpScalar>,
    gamma: Vec<FpScalar>,
    beta: Vec<FpScalar>,
}

impl NormInputs {
    pub fn new(x: Vec<FpScalar>, gamma: Vec<FpScalar>, beta: Vec<FpScalar>) -> Result<Self> {
        let Some(first) = x.first() else {
            return Err(Error::Shape("input vector is empty".into()));
        };
        let d = x.len();
        if gamma.len() != d || beta.len() != d {
            return Err(Error::Shape(format!(
                "x has length {d} but gamma has {} and beta has {}",
                gamma.len(),
                beta.len()
            )));
        }
        let format = first.format();
        if let Some(bad) = x.iter().chain(&gamma).chain(&beta).find(|s| s.format() != format) {
            return Err(Error::FormatMismatch {
                expected: format,
                found: bad.format(),
            });
        }
        Ok(NormInputs { x, gamma, beta })
    }

    /// Rounds `x` into `format` with `γ = 1` and `β = 0`.
    pub fn from_values(x: &[f64], format: Format) -> Result<Self> {
        let d = x.len();
        Self::new(
            round_all(x, format),
            vec![FpScalar::one(format); d],
            vec![FpScalar::zero(format); d],
        )
    }

    pub fn from_values_affine(x: &[f64], gamma: &[f64], beta: &[f64], format: Format) -> Result<Self> {
        Self::new(round_all(x, format), round_all(gamma, format), round_all(beta, format))
    }

    pub fn x(&self) -> &[FpScalar] {
        &self.x
    }

    pub fn gamma(&self) -> &[FpScalar] {
        &self.gamma
    }

    pub fn beta(&self) -> &[FpScalar] {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn format(&self) -> Format {
        self.x[0].format()
    }
}

fn round_all(xs: &[f64], format: Format) -> Vec<FpScalar> {
    xs.iter().map(|&v| FpScalar::from_f64(v, format)).collect()
}

fn values(xs: &[FpScalar]) -> Vec<f64> {
    xs.iter().map(|s| s.to_f64()).collect()
}

/// Scalar state of the iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterState {
    pub a: f64,
    pub m: f64,
    pub lambda: f64,
    pub step: u32,
    pub delta_a: f64,
}

impl IterState {
    /// Starting state for squared norm `m`: `a₀` from [`init_a_with`] and `λ`
    /// from [`select_lambda_with`].
    pub fn start(m: f64, lambda_override: Option<f64>, arith: Arith) -> Result<Self> {
        Ok(IterState {
            a: init_a_with(m, arith)?,
            m,
            lambda: select_lambda_with(m, lambda_override, arith)?,
            step: 0,
            delta_a: 0.0,
        })
    }
}

/// Outcome of [`iterate_a`].
#[derive(Clone, Debug, PartialEq)]
pub struct IterOutcome {
    pub a_final: f64,
    /// `a₀, a₁, …, a_n`.
    pub trajectory: Vec<f64>,
    pub steps: u32,
    /// False only when threshold stopping ran out of steps.
    pub converged: bool,
}

/// Normalized output with diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct NormResult {
    pub z: Vec<FpScalar>,
    pub y_hat: Vec<FpScalar>,
    pub mean: FpScalar,
    pub m: FpScalar,
    /// `a₀ … a_n`; empty when `m = 0` and no inverse norm exists.
    pub a_trajectory: Vec<f64>,
    pub steps_taken: u32,
    pub converged: bool,
}

/// Subtracts the mean. The mean is the tree sum times the stored constant
/// `1/d`, rounded to the format.
pub fn mean_shift(x: &[FpScalar]) -> Result<(Vec<FpScalar>, FpScalar)> {
    let Some(first) = x.first() else {
        return Err(Error::Shape("input vector is empty".into()));
    };
    let format = first.format();
    if let Some(bad) = x.iter().find(|s| s.format() != format) {
        return Err(Error::FormatMismatch { expected: format, found: bad.format() });
    }
    let (y, mean) = mean_shift_values(Arith::Format(format), &values(x));
    Ok((round_all(&y, format), FpScalar::from_f64(mean, format)))
}

fn mean_shift_values(arith: Arith, x: &[f64]) -> (Vec<f64>, f64) {
    let d = x.len();
    let inv_d = arith.round(1.0 / d as f64);
    let sum = tree_reduce(arith, x, TREE_ARITY).expect("tree arity is valid");
    let mean = arith.mul(sum, inv_d);
    (x.iter().map(|&v| arith.sub(v, mean)).collect(), mean)
}

/// `‖y‖₂²` via element-wise squares and the adder tree.
pub fn squared_norm(y: &[FpScalar]) -> Result<FpScalar> {
    let Some(first) = y.first() else {
        return Err(Error::Shape("input vector is empty".into()));
    };
    let format = first.format();
    if let Some(bad) = y.iter().find(|s| s.format() != format) {
        return Err(Error::FormatMismatch { expected: format, found: bad.format() });
    }
    let m = squared_norm_value(Arith::Format(format), &values(y))?;
    Ok(FpScalar::from_f64(m, format))
}

fn squared_norm_value(arith: Arith, y: &[f64]) -> Result<f64> {
    let squares: Vec<f64> = y.iter().map(|&v| arith.mul(v, v)).collect();
    let m = tree_reduce(arith, &squares, TREE_ARITY)?;
    if m.is_infinite() {
        return Err(Error::Range("squared norm overflows the format".into()));
    }
    if m.is_nan() {
        return Err(Error::Domain("squared norm is NaN".into()));
    }
    Ok(m)
}

fn check_norm(m: f64) -> Result<i32> {
    if m.is_nan() {
        return Err(Error::Domain("squared norm is NaN".into()));
    }
    if m.is_infinite() {
        return Err(Error::Range("squared norm is infinite".into()));
    }
    if m == 0.0 {
        return Err(Error::ZeroNorm);
    }
    if m < 0.0 {
        return Err(Error::Domain(format!("squared norm {m} is negative")));
    }
    Ok(binade_exponent(m).expect("finite positive"))
}

/// `a₀ = 2^-((E(m) - bias + 1)/2)` in the format of `m`.
pub fn init_a(m: FpScalar) -> Result<f64> {
    init_a_with(m.to_f64(), Arith::Format(m.format()))
}

/// [`init_a`] for a squared norm held as binary64. Odd exponents use the
/// stored constant `1/√2`.
pub fn init_a_with(m: f64, arith: Arith) -> Result<f64> {
    let e = check_norm(m)? + 1;
    let q = e.div_euclid(2);
    let base = arith.round(pow2(-q));
    if e.rem_euclid(2) == 0 {
        Ok(base)
    } else {
        Ok(arith.mul(base, arith.round(FRAC_1_SQRT_2)))
    }
}

/// Default update rate `λ = c·2^-(E(m)-bias)`, or the override.
pub fn select_lambda(m: FpScalar, lambda_override: Option<f64>) -> Result<f64> {
    select_lambda_with(m.to_f64(), lambda_override, Arith::Format(m.format()))
}

/// [`select_lambda`] for a squared norm held as binary64.
///
/// `c` is stored rounded to the format and scaled by an exact power of two,
/// so the result is representable whenever it lies in the format's range.
pub fn select_lambda_with(m: f64, lambda_override: Option<f64>, arith: Arith) -> Result<f64> {
    let e = check_norm(m)?;
    match lambda_override {
        Some(lambda) if !(lambda.is_finite() && lambda > 0.0) => {
            Err(Error::Usage(format!("lambda must be positive and finite, got {lambda}")))
        }
        Some(lambda) => Ok(arith.round(lambda)),
        None => Ok(arith.round(rate_coefficient()) * pow2(-e)),
    }
}

/// Runs the update `Δa = λ·m·a·(1 − m·a²)`, `a ← a + Δa`.
///
/// `λ·m` is formed once. Every other product and sum is one primitive of
/// `arith`.
pub fn iterate_a(state: IterState, config: &NormConfig, arith: Arith) -> IterOutcome {
    let IterState { mut a, m, lambda, .. } = state;
    let lambda_m = arith.mul(lambda, m);
    let mut trajectory = vec![a];
    let step = |a: f64| -> (f64, f64) {
        let ma = arith.mul(m, a);
        let ma2 = arith.mul(ma, a);
        let residual = arith.sub(1.0, ma2);
        let gain = arith.mul(lambda_m, a);
        let delta = arith.mul(gain, residual);
        (arith.add(a, delta), delta)
    };

    match config.stopping {
        Stopping::FixedSteps(n) => {
            for _ in 0..n {
                a = step(a).0;
                trajectory.push(a);
            }
            IterOutcome { a_final: a, trajectory, steps: n, converged: true }
        }
        Stopping::Threshold { delta_max, max_steps } => {
            let mut delta = config.initial_delta();
            let mut steps = 0;
            while delta.abs() > delta_max && steps < max_steps {
                (a, delta) = step(a);
                trajectory.push(a);
                steps += 1;
            }
            IterOutcome {
                a_final: a,
                trajectory,
                steps,
                converged: delta.abs() <= delta_max,
            }
        }
    }
}

/// Layer normalization with the iterative inverse norm.
pub fn layernorm_iterl2(inputs: &NormInputs, config: &NormConfig) -> Result<NormResult> {
    config.validate()?;
    let arith = config.arith(inputs.format());
    normalize_with(inputs, |m| {
        let state = IterState::start(m, config.lambda_override, arith)?;
        Ok(iterate_a(state, config, arith))
    })
}

/// The same pipeline with the inverse norm supplied by `inv_norm(m)`.
///
/// With `|m| 1.0 / m.sqrt()` only the datapath rounding remains, which
/// separates it from the iteration error.
pub fn layernorm_with_inverse_norm(
    inputs: &NormInputs,
    inv_norm: impl FnOnce(f64) -> f64,
) -> Result<NormResult> {
    normalize_with(inputs, |m| {
        let a = inv_norm(m);
        Ok(IterOutcome { a_final: a, trajectory: vec![a], steps: 0, converged: true })
    })
}

/// Mean shift, squared norm, inverse norm from `solve`, then scale and shift.
pub(crate) fn normalize_with(
    inputs: &NormInputs,
    solve: impl FnOnce(f64) -> Result<IterOutcome>,
) -> Result<NormResult> {
    let format = inputs.format();
    let arith = Arith::Format(format);
    let d = inputs.len();

    let (y, mean) = mean_shift_values(arith, &values(&inputs.x));
    let m = squared_norm_value(arith, &y)?;

    if m == 0.0 {
        return Ok(NormResult {
            z: inputs.beta.clone(),
            y_hat: vec![FpScalar::zero(format); d],
            mean: FpScalar::from_f64(mean, format),
            m: FpScalar::zero(format),
            a_trajectory: Vec::new(),
            steps_taken: 0,
            converged: true,
        });
    }

    let outcome = solve(m)?;
    let a = arith.round(outcome.a_final);
    let sqrt_d = arith.round((d as f64).sqrt());
    let scale = arith.mul(sqrt_d, a);

    let mut y_hat = Vec::with_capacity(d);
    let mut z = Vec::with_capacity(d);
    for ((&yi, g), b) in y.iter().zip(&inputs.gamma).zip(&inputs.beta) {
        let yh = arith.mul(scale, yi);
        y_hat.push(FpScalar::from_f64(yh, format));
        let zi = arith.add(arith.mul(g.to_f64(), yh), b.to_f64());
        z.push(FpScalar::from_f64(zi, format));
    }

    Ok(NormResult {
        z,
        y_hat,
        mean: FpScalar::from_f64(mean, format),
        m: FpScalar::from_f64(m, format),
        a_trajectory: outcome.trajectory,
        steps_taken: outcome.steps,
        converged: outcome.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn fp32(xs: &[f64]) -> Vec<FpScalar> {
        round_all(xs, Format::Fp32)
    }

    fn vals(xs: &[FpScalar]) -> Vec<f64> {
        values(xs)
    }

    #[test]
    fn mean_shift_examples() {
        let (y, mean) = mean_shift(&fp32(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(mean.to_f64(), 2.5);
        assert_eq!(vals(&y), [-1.5, -0.5, 0.5, 1.5]);

        let c = 0.123;
        let (y, _) = mean_shift(&fp32(&[c; 37])).unwrap();
        assert!(y.iter().all(|v| v.is_zero()));

        let (y, mean) = mean_shift(&fp32(&[5.0])).unwrap();
        assert_eq!(mean.to_f64(), 5.0);
        assert_eq!(vals(&y), [0.0]);

        assert!(matches!(mean_shift(&[]), Err(Error::Shape(_))));
    }

    #[test]
    fn squared_norm_examples() {
        assert_eq!(squared_norm(&fp32(&[-1.5, -0.5, 0.5, 1.5])).unwrap().to_f64(), 5.0);
        assert!(squared_norm(&fp32(&[0.0; 9])).unwrap().is_zero());
        let mut e1 = vec![0.0; 100];
        e1[17] = 1.0;
        assert_eq!(squared_norm(&fp32(&e1)).unwrap().to_f64(), 1.0);
    }

    #[test]
    fn squared_norm_overflow_is_a_range_error() {
        let big = round_all(&[300.0, -300.0], Format::Fp16);
        assert!(matches!(squared_norm(&big), Err(Error::Range(_))));
    }

    #[test]
    fn init_a_examples() {
        let five = FpScalar::from_f64(5.0, Format::Fp32);
        let a0 = init_a(five).unwrap();
        assert!(close(a0, 2f64.powf(-1.5), 1e-7));
        let ratio = a0 * 5f64.sqrt();
        assert!(close(ratio, 0.7906, 1e-4));

        let one = FpScalar::one(Format::Fp32);
        assert!(close(init_a(one).unwrap(), FRAC_1_SQRT_2, 1e-7));

        let four = FpScalar::from_f64(4.0, Format::Fp32);
        let a0 = init_a(four).unwrap();
        assert!(close(a0, 2f64.powf(-1.5), 1e-7));
        assert!(close(a0 / 0.5, FRAC_1_SQRT_2, 1e-7));
    }

    #[test]
    fn init_a_rejects_degenerate_norms() {
        assert_eq!(init_a(FpScalar::zero(Format::Bf16)), Err(Error::ZeroNorm));
        assert!(matches!(init_a(FpScalar::from_f64(-1.0, Format::Bf16)), Err(Error::Domain(_))));
        assert!(matches!(init_a(FpScalar::from_f64(f64::INFINITY, Format::Fp16)), Err(Error::Range(_))));
    }

    #[test]
    fn init_a_uses_normalized_exponent_for_subnormals() {
        // m = 2^-22 in FP16 is subnormal; a0 = 2^(21/2)
        let m = FpScalar::from_bits(0b100, Format::Fp16);
        let a0 = init_a(m).unwrap();
        assert!(close(a0 * m.to_f64().sqrt(), FRAC_1_SQRT_2, 1e-3));
    }

    #[test]
    fn select_lambda_default_and_override() {
        let c = rate_coefficient();
        assert!(close(c, 0.345_387_763_949_106_8, 1e-15));
        let five = FpScalar::from_f64(5.0, Format::Fp32);
        let lambda = select_lambda(five, None).unwrap();
        assert!(close(lambda, c / 4.0, 1e-8));
        assert!(lambda > 0.345 / 4.0);
        let one = FpScalar::one(Format::Fp32);
        assert!(close(select_lambda(one, None).unwrap(), c, 1e-8));
        let half = FpScalar::from_f64(0.5, Format::Fp32);
        assert!(close(select_lambda(half, None).unwrap(), 2.0 * c, 1e-7));

        assert_eq!(select_lambda(five, Some(0.125)).unwrap(), 0.125);
        assert!(matches!(select_lambda(five, Some(0.0)), Err(Error::Usage(_))));
        assert!(matches!(select_lambda(five, Some(-1.0)), Err(Error::Usage(_))));
    }

    #[test]
    fn iterate_a_five_steps_from_m5() {
        let state = IterState::start(5.0, Some(0.125), Arith::Exact).unwrap();
        assert!(close(state.a, 2f64.powf(-1.5), 1e-15));
        let out = iterate_a(state, &NormConfig::fixed_steps(5), Arith::Exact);
        assert_eq!(out.trajectory.len(), 6);
        let target = 5f64.sqrt().recip();
        assert!(close(out.a_final, 0.44718, 1e-5));
        assert!(((out.a_final - target) / target).abs() < 1e-4);
    }

    #[test]
    fn iterate_a_converges_for_unit_norm() {
        let state = IterState::start(1.0, None, Arith::Exact).unwrap();
        let out = iterate_a(state, &NormConfig::fixed_steps(40), Arith::Exact);
        assert!(close(out.a_final, 1.0, 1e-12));
    }

    #[test]
    fn fixed_point_is_stationary() {
        for arith in [Arith::Exact, Arith::Format(Format::Bf16)] {
            let state = IterState { a: 0.5, m: 4.0, lambda: 0.1, step: 0, delta_a: 0.0 };
            let out = iterate_a(state, &NormConfig::fixed_steps(7), arith);
            assert!(out.trajectory.iter().all(|&a| a == 0.5));
        }
    }

    #[test]
    fn threshold_stopping() {
        let state = IterState::start(5.0, None, Arith::Exact).unwrap();
        let out = iterate_a(state, &NormConfig::threshold(1e-9, 100), Arith::Exact);
        assert!(out.converged);
        assert!(out.steps > 0 && out.steps < 100);
        assert_eq!(out.trajectory.len() as u32, out.steps + 1);
        let last = out.trajectory[out.trajectory.len() - 1] - out.trajectory[out.trajectory.len() - 2];
        assert!(last.abs() <= 1e-9);

        let out = iterate_a(state, &NormConfig::threshold(1e-30, 3), Arith::Exact);
        assert!(!out.converged);
        assert_eq!(out.steps, 3);
    }

    #[test]
    fn threshold_config_validation() {
        assert!(NormConfig::threshold(1e-3, 10).validate().is_ok());
        assert!(NormConfig::threshold(0.0, 10).validate().is_err());
        let mut bad = NormConfig::threshold(1e-3, 10);
        bad.initial_delta = Some(1e-4);
        assert!(matches!(bad.validate(), Err(Error::Usage(_))));
        assert!(NormConfig::default().with_lambda(-2.0).validate().is_err());
    }

    #[test]
    fn layernorm_small_example() {
        let inputs = NormInputs::from_values(&[1.0, 2.0, 3.0, 4.0], Format::Fp32).unwrap();
        let out = layernorm_iterl2(&inputs, &NormConfig::default()).unwrap();
        let expected = [-1.34164, -0.44721, 0.44721, 1.34164];
        for (z, e) in out.z.iter().zip(expected) {
            assert!(close(z.to_f64(), e, 1e-3), "{z} vs {e}");
        }
        assert_eq!(out.m.to_f64(), 5.0);
        assert_eq!(out.mean.to_f64(), 2.5);
        assert_eq!(out.steps_taken, 5);
        assert_eq!(out.a_trajectory.len(), 6);
    }

    #[test]
    fn constant_input_returns_beta() {
        for format in Format::ALL {
            let inputs = NormInputs::from_values_affine(
                &[0.75; 10],
                &[2.0; 10],
                &[0.5, -1.0, 0.0, 3.0, 1.0, 1.0, 1.0, 1.0, 1.0, -0.25],
                format,
            )
            .unwrap();
            let out = layernorm_iterl2(&inputs, &NormConfig::default()).unwrap();
            assert_eq!(out.z, inputs.beta());
            assert!(out.y_hat.iter().all(|v| v.is_zero()));
            assert!(out.a_trajectory.is_empty());
        }
    }

    #[test]
    fn zero_gamma_returns_beta() {
        let x = [0.3, -1.2, 0.9, 0.01, 2.5];
        let beta = [1.0, 2.0, -3.0, 0.25, 0.0];
        let inputs = NormInputs::from_values_affine(&x, &[0.0; 5], &beta, Format::Bf16).unwrap();
        let out = layernorm_iterl2(&inputs, &NormConfig::default()).unwrap();
        assert_eq!(vals(&out.z), beta);
    }

    #[test]
    fn inputs_are_validated() {
        let x = fp32(&[1.0, 2.0]);
        assert!(matches!(NormInputs::new(x.clone(), fp32(&[1.0]), fp32(&[0.0, 0.0])), Err(Error::Shape(_))));
        assert!(matches!(NormInputs::new(vec![], vec![], vec![]), Err(Error::Shape(_))));
        let bf = round_all(&[1.0, 1.0], Format::Bf16);
        assert!(matches!(NormInputs::new(x, bf, fp32(&[0.0, 0.0])), Err(Error::FormatMismatch { .. })));
    }

    #[test]
    fn overflowing_norm_is_a_range_error() {
        let inputs = NormInputs::from_values(&[-60000.0, 60000.0], Format::Fp16).unwrap();
        assert!(matches!(layernorm_iterl2(&inputs, &NormConfig::default()), Err(Error::Range(_))));
    }

    #[test]
    fn injected_inverse_norm_skips_iteration() {
        let inputs = NormInputs::from_values(&[1.0, 2.0, 3.0, 4.0], Format::Fp32).unwrap();
        let out = layernorm_with_inverse_norm(&inputs, |m| 1.0 / m.sqrt()).unwrap();
        assert_eq!(out.steps_taken, 0);
        let expected = 2.0 * 1.5 / 5f64.sqrt();
        assert!(close(out.z[3].to_f64(), expected, 1e-6));
    }

    #[test]
    fn binary64_iteration_mode() {
        let inputs = NormInputs::from_values(&[1.0, 2.0, 3.0, 4.0, -7.5], Format::Bf16).unwrap();
        let config = NormConfig::fixed_steps(30).with_iteration(IterationPrecision::Binary64);
        let out = layernorm_iterl2(&inputs, &config).unwrap();
        let m = out.m.to_f64();
        assert!(close(*out.a_trajectory.last().unwrap(), m.sqrt().recip(), 1e-12));
    }
}
