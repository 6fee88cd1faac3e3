//! Division-free, square-root-free layer normalization.
//!
//! The inverse norm `1/‖y‖₂` of a mean-shifted vector is found by iterating
//! `a ← a + λ·m·a·(1 − m·a²)` with `m = ‖y‖₂²`, which needs only adds and
//! multiplies. Every operation can run in emulated FP32, FP16 or BFloat16
//! with round-to-nearest-even, so precision experiments see the rounding a
//! hardware datapath in that format would.
//!
//! ```
//! use iterl2norm::{layernorm_iterl2, Format, NormConfig, NormInputs};
//!
//! let inputs = NormInputs::from_values(&[1.0, 2.0, 3.0, 4.0], Format::Fp32).unwrap();
//! let out = layernorm_iterl2(&inputs, &NormConfig::default()).unwrap();
//! assert!((out.z[3].to_f64() - 1.341641).abs() < 1e-3);
//! ```

pub mod baselines;
pub mod dynamics;
pub mod error;
pub mod fpformat;
pub mod latency;
pub mod norm;

pub use baselines::{fisr_inv_sqrt, layernorm_fisr, layernorm_reference, FisrSpec};
pub use error::{Error, Result};
pub use fpformat::{round_binary, tree_sum, Arith, Format, FormatSpec, FpScalar};
pub use latency::{estimate_cycles, CycleReport, MacroGeometry, Phase, StageCosts};
pub use norm::{
    layernorm_iterl2, layernorm_with_inverse_norm, IterationPrecision, NormConfig, NormInputs,
    NormResult, Stopping,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/iteration.md")]
    mod iteration {}
    #[doc = include_str!("../../../book/src/start_and_rate.md")]
    mod start_and_rate {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/latency.md")]
    mod latency {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
