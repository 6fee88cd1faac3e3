//! Continuous-time companion of the iteration, in binary64.
//!
//! For a fixed vector `y` the flow `τ·dỹ/dt = k·y − α·k²·ỹ` with `k = y·ỹ`
//! reduces to `τ·dk/dt = k·‖y‖² − α·k³`. It has an unstable fixed point at
//! `k = 0` and stable ones at `k = ±α^-1/2·‖y‖`, so any start with `k₀ > 0`
//! ends at `ỹ = α^-1/2·y/‖y‖`. Writing `ỹ = a·y` turns the flow into a
//! logistic equation in `a²`, solved in closed form by [`analytic_a`]. The
//! iteration in [`crate::norm`] is its forward Euler discretization with
//! step `λ = Δt/τ`.

use crate::error::{Error, Result};
use crate::fpformat::pow2;

/// Fixed points of the `k` dynamics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPoints {
    pub unstable: f64,
    pub stable_pos: f64,
    pub stable_neg: f64,
}

/// `(0, +α^-1/2·‖y‖, −α^-1/2·‖y‖)` for `norm = ‖y‖₂`.
pub fn k_fixed_points(norm: f64, alpha: f64) -> Result<FixedPoints> {
    positive("norm", norm)?;
    positive("alpha", alpha)?;
    let k = norm / alpha.sqrt();
    Ok(FixedPoints {
        unstable: 0.0,
        stable_pos: k,
        stable_neg: -k,
    })
}

/// Squared norm `1/α` of the steady state.
pub fn steady_norm_sq(alpha: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    Ok(alpha.recip())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Usage(format!("{name} must be positive and finite, got {v}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicsParams {
    /// `m = ‖y‖₂²`
    pub norm_sq: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub a0: f64,
}

impl DynamicsParams {
    pub fn new(norm_sq: f64, alpha: f64, lambda: f64, a0: f64) -> Result<Self> {
        positive("norm_sq", norm_sq)?;
        positive("alpha", alpha)?;
        positive("lambda", lambda)?;
        positive("a0", a0)?;
        Ok(DynamicsParams { norm_sq, alpha, lambda, a0 })
    }

    /// `α = 1`, the case used for normalization.
    pub fn unit(norm_sq: f64, lambda: f64, a0: f64) -> Result<Self> {
        Self::new(norm_sq, 1.0, lambda, a0)
    }

    /// Steady state `(α·m)^-1/2`.
    pub fn a_infinity(&self) -> f64 {
        (self.alpha * self.norm_sq).sqrt().recip()
    }
}

/// Decaying term `(1 − α·m·a₀²)·e^(−2·m·n·λ)` of the closed-form solution.
pub fn exponential_term(params: &DynamicsParams, n: u32) -> f64 {
    let DynamicsParams { norm_sq: m, alpha, lambda, a0 } = *params;
    (1.0 - alpha * m * a0 * a0) * (-2.0 * m * n as f64 * lambda).exp()
}

/// Closed-form `a` after `n` steps of width `λ`:
/// `a₀·[(1 − α·m·a₀²)·e^(−2mnλ) + α·m·a₀²]^(−1/2)`.
pub fn analytic_a(params: &DynamicsParams, n: u32) -> Result<f64> {
    let DynamicsParams { norm_sq: m, alpha, a0, .. } = *params;
    let bracket = exponential_term(params, n) + alpha * m * a0 * a0;
    if !(bracket > 0.0) {
        return Err(Error::OutOfBasin(format!(
            "bracket {bracket} is not positive at n = {n}"
        )));
    }
    Ok(a0 / bracket.sqrt())
}

/// Lower bound on `λ` for the decaying term to fall below `delta_c` within
/// `n_c` steps, using only the binade of `m`.
///
/// The exact requirement `λ > −ln(δ_c)/(2·m·n_c)` is relaxed with
/// `1/m > 2^-(E−bias)/2`, giving `−ln(δ_c)/(4·n_c)·2^-(E−bias)`. For
/// `δ_c = 10⁻³` and `n_c = 5` the coefficient is 0.3454.
///
/// # Panics
///
/// If `delta_c` is not in `(0, 1)` or `n_c` is zero.
pub fn lambda_lower_bound(exponent: i32, delta_c: f64, n_c: u32) -> f64 {
    assert!(delta_c > 0.0 && delta_c < 1.0, "delta_c must lie in (0, 1)");
    assert!(n_c >= 1, "n_c must be at least 1");
    -delta_c.ln() / (4.0 * n_c as f64) * pow2(-exponent)
}

/// Largest decaying term at `n_c` over one binade when `λ` equals
/// [`lambda_lower_bound`] and `a₀` comes from the exponent of `m`.
///
/// With `m = s·2^e` the start gives `m·a₀² = s/2` and `λ·m = c·s`, so the
/// term is `(1 − s/2)·δ_c^(s/2)`, largest at `s = 1`: `√δ_c / 2`.
pub fn worst_case_exponential_term(delta_c: f64) -> f64 {
    delta_c.sqrt() / 2.0
}

/// Forward Euler on the vector flow: `ỹ ← (1 − λα·k²)·ỹ + λ·k·y` with
/// `k = y·ỹ`, for `steps` steps from `y0`. Binary64 throughout.
pub fn simulate_vector_flow(y: &[f64], y0: &[f64], alpha: f64, lambda: f64, steps: u32) -> Vec<f64> {
    assert_eq!(y.len(), y0.len(), "y and y0 must have the same length");
    let mut yt = y0.to_vec();
    for _ in 0..steps {
        let k: f64 = y.iter().zip(&yt).map(|(a, b)| a * b).sum();
        let keep = 1.0 - lambda * alpha * k * k;
        for (t, v) in yt.iter_mut().zip(y) {
            *t = keep * *t + lambda * k * v;
        }
    }
    yt
}
