//! Optional TOML configuration.
//!
//! ```toml
//! [geometry]
//! n_banks = 8
//!
//! [stage_costs]
//! mean_sum_fixed = 12
//! add_latency = 2
//!
//! [fisr.fp32]
//! magic = 0x5f3759df
//! newton_iters = 1
//!
//! [fisr.bf16]
//! magic = 0x5f37
//! newton_iters = 2
//! ```
//!
//! Every key is optional; missing ones keep their defaults.

use std::path::Path;

use iterl2norm::{FisrSpec, Format, MacroGeometry, StageCosts};
use serde::Deserialize;

use crate::error::{BenchError, Result};

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub geometry: MacroGeometry,
    pub stage_costs: StageCosts,
    pub fisr: FisrOverrides,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FisrOverrides {
    pub fp32: Option<FisrOverride>,
    pub bf16: Option<FisrOverride>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FisrOverride {
    pub magic: Option<u32>,
    pub newton_iters: Option<u32>,
}

impl HarnessConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(path.into(), e))?;
        Self::parse(&text).map_err(|msg| BenchError::Config(path.into(), msg))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let cfg: HarnessConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.geometry.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    /// FISR parameters for `format`, canonical unless overridden.
    pub fn fisr_spec(&self, format: Format) -> Result<FisrSpec> {
        let mut spec = FisrSpec::canonical(format)?;
        let over = match format {
            Format::Fp32 => self.fisr.fp32,
            Format::Bf16 => self.fisr.bf16,
            Format::Fp16 => None,
        };
        if let Some(o) = over {
            spec = FisrSpec::new(
                format,
                o.magic.unwrap_or(spec.magic),
                o.newton_iters.unwrap_or(spec.newton_iters),
            )?;
        }
        Ok(spec)
    }
}
