//! Cycle-count model of the normalization macro.
//!
//! The macro streams the input through its adder and multiplier blocks one
//! chunk of `n_banks * bank_width` elements at a time, so every data pass
//! costs a fixed pipeline overhead plus a per-chunk cost. The scalar
//! iteration in between costs a setup plus a fixed amount per step. When a
//! vector spans more than one chunk, the two reductions (mean and squared
//! norm) need an extra pass of their partial sums through the adder block.
//!
//! Only timing is modelled; buffer contents are not simulated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bank layout of the input buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacroGeometry {
    pub n_banks: usize,
    pub bank_width: usize,
    pub bank_height: usize,
    pub d_max: usize,
}

impl Default for MacroGeometry {
    fn default() -> Self {
        MacroGeometry { n_banks: 8, bank_width: 8, bank_height: 16, d_max: 1024 }
    }
}

impl MacroGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.n_banks == 0 || self.bank_width == 0 || self.bank_height == 0 {
            return Err(Error::Usage("bank dimensions must be nonzero".into()));
        }
        if self.d_max != self.n_banks * self.bank_width * self.bank_height {
            return Err(Error::Usage(format!(
                "d_max {} does not match {} banks of {}x{}",
                self.d_max, self.n_banks, self.bank_height, self.bank_width
            )));
        }
        Ok(())
    }

    /// Elements read per pass.
    pub fn chunk_size(&self) -> usize {
        self.n_banks * self.bank_width
    }

    pub fn chunks(&self, d: usize) -> usize {
        d.div_ceil(self.chunk_size())
    }
}

/// Per-phase cycle costs. The defaults reproduce 116 cycles at `d = 64`
/// and 227 at `d = 1024` for five steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageCosts {
    pub mul_latency: u64,
    pub add_latency: u64,

    pub mean_sum_fixed: u64,
    pub mean_sum_per_chunk: u64,
    pub mean_multiply_fixed: u64,
    pub mean_shift_fixed: u64,
    pub mean_shift_per_chunk: u64,
    pub inner_product_fixed: u64,
    pub inner_product_per_chunk: u64,
    /// Buffer read before a partial-sum pass; the pass adds `add_latency`.
    pub partial_sum_read: u64,
    pub iteration_setup: u64,
    /// Multiplies on the critical path of one update.
    pub iteration_muls: u64,
    /// Adds on the critical path of one update.
    pub iteration_adds: u64,
    pub output_scale_fixed: u64,
    pub output_scale_per_chunk: u64,
    pub output_affine_fixed: u64,
    pub output_affine_per_chunk: u64,
}

impl Default for StageCosts {
    fn default() -> Self {
        StageCosts {
            mul_latency: 2,
            add_latency: 2,
            mean_sum_fixed: 12,
            mean_sum_per_chunk: 1,
            mean_multiply_fixed: 4,
            mean_shift_fixed: 6,
            mean_shift_per_chunk: 2,
            inner_product_fixed: 14,
            inner_product_per_chunk: 1,
            partial_sum_read: 1,
            iteration_setup: 4,
            iteration_muls: 3,
            iteration_adds: 2,
            output_scale_fixed: 9,
            output_scale_per_chunk: 1,
            output_affine_fixed: 10,
            output_affine_per_chunk: 2,
        }
    }
}

impl StageCosts {
    pub fn cycles_per_step(&self) -> u64 {
        self.iteration_muls * self.mul_latency + self.iteration_adds * self.add_latency
    }

    fn partial_sum_pass(&self, chunks: u64) -> u64 {
        if chunks > 1 {
            self.partial_sum_read + self.add_latency
        } else {
            0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    MeanSum,
    MeanMultiply,
    MeanShift,
    InnerProduct,
    Iteration,
    OutputScale,
    OutputAffine,
}

impl Phase {
    pub const ALL: [Phase; 7] = [
        Phase::MeanSum,
        Phase::MeanMultiply,
        Phase::MeanShift,
        Phase::InnerProduct,
        Phase::Iteration,
        Phase::OutputScale,
        Phase::OutputAffine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::MeanSum => "mean_sum",
            Phase::MeanMultiply => "mean_multiply",
            Phase::MeanShift => "mean_shift",
            Phase::InnerProduct => "inner_product",
            Phase::Iteration => "iteration",
            Phase::OutputScale => "output_scale",
            Phase::OutputAffine => "output_affine",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleReport {
    pub total: u64,
    /// In [`Phase::ALL`] order.
    pub per_phase: Vec<(Phase, u64)>,
}

impl CycleReport {
    pub fn phase(&self, phase: Phase) -> u64 {
        self.per_phase
            .iter()
            .find(|(p, _)| *p == phase)
            .map(|&(_, c)| c)
            .unwrap_or(0)
    }
}

/// Cycles to normalize one `d`-long vector with `n_iter` update steps.
pub fn estimate_cycles(
    d: usize,
    n_iter: u32,
    geom: &MacroGeometry,
    costs: &StageCosts,
) -> Result<CycleReport> {
    geom.validate()?;
    if d == 0 || d > geom.d_max {
        return Err(Error::Usage(format!("d = {d} outside 1..={}", geom.d_max)));
    }
    let chunks = geom.chunks(d) as u64;
    let per_phase: Vec<(Phase, u64)> = Phase::ALL
        .iter()
        .map(|&phase| {
            let cycles = match phase {
                Phase::MeanSum => {
                    costs.mean_sum_fixed
                        + costs.mean_sum_per_chunk * chunks
                        + costs.partial_sum_pass(chunks)
                }
                Phase::MeanMultiply => costs.mean_multiply_fixed,
                Phase::MeanShift => costs.mean_shift_fixed + costs.mean_shift_per_chunk * chunks,
                Phase::InnerProduct => {
                    costs.inner_product_fixed
                        + costs.inner_product_per_chunk * chunks
                        + costs.partial_sum_pass(chunks)
                }
                Phase::Iteration => costs.iteration_setup + n_iter as u64 * costs.cycles_per_step(),
                Phase::OutputScale => {
                    costs.output_scale_fixed + costs.output_scale_per_chunk * chunks
                }
                Phase::OutputAffine => {
                    costs.output_affine_fixed + costs.output_affine_per_chunk * chunks
                }
            };
            (phase, cycles)
        })
        .collect();
    Ok(CycleReport { total: per_phase.iter().map(|&(_, c)| c).sum(), per_phase })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycles(d: usize, n: u32) -> u64 {
        estimate_cycles(d, n, &MacroGeometry::default(), &StageCosts::default())
            .unwrap()
            .total
    }

    #[test]
    fn geometry_defaults() {
        let g = MacroGeometry::default();
        g.validate().unwrap();
        assert_eq!(g.chunk_size(), 64);
        assert_eq!(g.d_max, 1024);
        let bad = MacroGeometry { d_max: 1000, ..g };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn endpoints() {
        assert_eq!(cycles(64, 5), 116);
        assert_eq!(cycles(1024, 5), 227);
    }

    #[test]
    fn chunk_plateaus() {
        assert_eq!(cycles(65, 5), cycles(128, 5));
        assert!(cycles(513, 5) > cycles(512, 5));
        assert_eq!(cycles(1, 5), cycles(64, 5));
    }

    #[test]
    fn linear_in_steps() {
        let slope = cycles(300, 1) - cycles(300, 0);
        assert_eq!(slope, StageCosts::default().cycles_per_step());
        for n in 0..20 {
            assert_eq!(cycles(300, n), cycles(300, 0) + n as u64 * slope);
        }
    }

    #[test]
    fn per_phase_sums_to_total() {
        let r = estimate_cycles(700, 5, &MacroGeometry::default(), &StageCosts::default()).unwrap();
        assert_eq!(r.per_phase.iter().map(|p| p.1).sum::<u64>(), r.total);
        assert_eq!(r.phase(Phase::Iteration), 54);
        assert_eq!(r.phase(Phase::MeanMultiply), 4);
    }

    #[test]
    fn out_of_range_lengths() {
        let g = MacroGeometry::default();
        let c = StageCosts::default();
        assert!(matches!(estimate_cycles(0, 5, &g, &c), Err(Error::Usage(_))));
        assert!(matches!(estimate_cycles(1025, 5, &g, &c), Err(Error::Usage(_))));
    }
}
