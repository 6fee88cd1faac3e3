//! The five harness experiments.

use std::path::PathBuf;

use iterl2norm::{
    estimate_cycles, layernorm_fisr, layernorm_iterl2, layernorm_reference, CycleReport, Format,
    NormConfig, NormInputs, NormResult, Phase,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::HarnessConfig;
use crate::error::{BenchError, Result};
use crate::rng::uniform_vector;
use crate::stats::ErrorStats;
use crate::vecio::{read_vectors, VectorSet};

/// Sequence lengths of the OPT model family, used by the FISR comparison.
pub const OPT_DIMS: [usize; 9] = [768, 1024, 2048, 2560, 4096, 5120, 7168, 9216, 12288];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Precision,
    Convergence,
    CompareFisr,
    Latency,
    Normalize,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Precision => "precision",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::CompareFisr => "compare-fisr",
            ExperimentKind::Latency => "latency",
            ExperimentKind::Normalize => "normalize",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub formats: Vec<Format>,
    pub dims: Vec<usize>,
    pub num_vectors: usize,
    pub seed: u64,
    pub steps: Vec<u32>,
    pub lambda_override: Option<f64>,
    /// Switches to threshold stopping with `steps` as the step cap.
    pub delta_max: Option<f64>,
    pub config: HarnessConfig,
    pub config_path: Option<PathBuf>,
    pub input_path: Option<PathBuf>,
    pub gamma_path: Option<PathBuf>,
    pub beta_path: Option<PathBuf>,
}

impl ExperimentSpec {
    /// The defaults for `kind`.
    pub fn new(kind: ExperimentKind) -> Self {
        let (formats, dims, steps) = match kind {
            ExperimentKind::Precision => {
                (Format::ALL.to_vec(), (1..=16).map(|k| 64 * k).collect(), vec![5])
            }
            ExperimentKind::Convergence => (Format::ALL.to_vec(), vec![1024], (1..=10).collect()),
            ExperimentKind::CompareFisr => {
                (vec![Format::Fp32, Format::Bf16], OPT_DIMS.to_vec(), vec![5])
            }
            ExperimentKind::Latency => (Vec::new(), (1..=1024).collect(), vec![5]),
            ExperimentKind::Normalize => (vec![Format::Fp32], Vec::new(), vec![5]),
        };
        ExperimentSpec {
            kind,
            formats,
            dims,
            num_vectors: 1000,
            seed: 0,
            steps,
            lambda_override: None,
            delta_max: None,
            config: HarnessConfig::default(),
            config_path: None,
            input_path: None,
            gamma_path: None,
            beta_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: &str| Err(BenchError::Usage(m.into()));
        if self.num_vectors == 0 {
            return usage("--num-vectors must be at least 1");
        }
        if self.dims.contains(&0) {
            return usage("every dimension must be at least 1");
        }
        if self.steps.is_empty() {
            return usage("at least one step count is required");
        }
        if self.kind != ExperimentKind::Latency && self.formats.is_empty() {
            return usage("at least one format is required");
        }
        self.norm_config(self.steps[0]).validate()?;
        Ok(())
    }

    pub fn norm_config(&self, steps: u32) -> NormConfig {
        let config = match self.delta_max {
            Some(delta) => NormConfig::threshold(delta, steps),
            None => NormConfig::fixed_steps(steps),
        };
        match self.lambda_override {
            Some(l) => config.with_lambda(l),
            None => config,
        }
    }
}

fn abs_errors(got: &NormResult, reference: &NormResult) -> ErrorStats {
    ErrorStats::from_pairs(got.z.iter().zip(&reference.z).map(|(a, b)| (a.to_f64(), b.to_f64())))
}

fn inputs(spec: &ExperimentSpec, format: Format, d: usize, index: usize) -> NormInputs {
    NormInputs::from_values(&uniform_vector(spec.seed, d, index), format)
        .expect("generated vectors are nonempty")
}

/// Per-vector statistics computed in parallel and merged in index order.
fn pooled<const N: usize>(
    n: usize,
    per_vector: impl Fn(usize) -> Result<[ErrorStats; N]> + Sync + Send,
) -> Result<[ErrorStats; N]> {
    let parts: Vec<[ErrorStats; N]> =
        (0..n).into_par_iter().map(&per_vector).collect::<Result<_>>()?;
    let mut total: [ErrorStats; N] = std::array::from_fn(|_| ErrorStats::default());
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total)
}

fn iterl2_stats(spec: &ExperimentSpec, format: Format, d: usize, steps: u32) -> Result<ErrorStats> {
    let config = spec.norm_config(steps);
    let [stats] = pooled(spec.num_vectors, |i| {
        let x = inputs(spec, format, d, i);
        let got = layernorm_iterl2(&x, &config)?;
        Ok([abs_errors(&got, &layernorm_reference(&x))])
    })?;
    Ok(stats)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionRow {
    pub format: Format,
    pub d: usize,
    pub steps: u32,
    pub stats: ErrorStats,
}

/// Error of the iterative pipeline against the binary64 reference for every
/// (format, d, steps).
pub fn run_precision(spec: &ExperimentSpec) -> Result<Vec<PrecisionRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &format in &spec.formats {
        for &d in &spec.dims {
            for &steps in &spec.steps {
                let stats = iterl2_stats(spec, format, d, steps)?;
                rows.push(PrecisionRow { format, d, steps, stats });
            }
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub format: Format,
    pub steps: u32,
    pub stats: ErrorStats,
}

/// Error against step count, pooled over `dims`.
pub fn run_convergence(spec: &ExperimentSpec) -> Result<Vec<ConvergenceRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &format in &spec.formats {
        for &steps in &spec.steps {
            let mut stats = ErrorStats::default();
            for &d in &spec.dims {
                stats.merge(&iterl2_stats(spec, format, d, steps)?);
            }
            rows.push(ConvergenceRow { format, steps, stats });
        }
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    IterL2Norm,
    Fisr,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::IterL2Norm => "iterl2norm",
            Method::Fisr => "fisr",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FisrRow {
    pub format: Format,
    pub d: usize,
    pub method: Method,
    pub stats: ErrorStats,
}

/// Paired rows for the iterative pipeline and the FISR baseline on the same
/// vectors. Uses the first entry of `steps`.
pub fn run_compare_fisr(spec: &ExperimentSpec) -> Result<Vec<FisrRow>> {
    spec.validate()?;
    if spec.formats.contains(&Format::Fp16) {
        return Err(BenchError::Usage(
            "FISR needs an 8-bit exponent; compare-fisr supports fp32 and bf16 only".into(),
        ));
    }
    let config = spec.norm_config(spec.steps[0]);
    let mut rows = Vec::new();
    for &format in &spec.formats {
        let fisr = spec.config.fisr_spec(format)?;
        for &d in &spec.dims {
            let [iter, fast] = pooled(spec.num_vectors, |i| {
                let x = inputs(spec, format, d, i);
                let reference = layernorm_reference(&x);
                Ok([
                    abs_errors(&layernorm_iterl2(&x, &config)?, &reference),
                    abs_errors(&layernorm_fisr(&x, &fisr)?, &reference),
                ])
            })?;
            rows.push(FisrRow { format, d, method: Method::IterL2Norm, stats: iter });
            rows.push(FisrRow { format, d, method: Method::Fisr, stats: fast });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatencyRow {
    pub d: usize,
    pub steps: u32,
    pub chunks: usize,
    pub report: CycleReport,
}

pub fn run_latency(spec: &ExperimentSpec) -> Result<Vec<LatencyRow>> {
    spec.validate()?;
    let geom = &spec.config.geometry;
    let mut rows = Vec::new();
    for &steps in &spec.steps {
        for &d in &spec.dims {
            let report = estimate_cycles(d, steps, geom, &spec.config.stage_costs)?;
            rows.push(LatencyRow { d, steps, chunks: geom.chunks(d), report });
        }
    }
    Ok(rows)
}

/// One line of the diagnostics sidecar.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub index: usize,
    pub mean: f64,
    pub m: f64,
    pub steps: u32,
    pub converged: bool,
    pub a_trajectory: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizeOutput {
    pub output: VectorSet,
    pub diagnostics: Vec<Diagnostic>,
    /// The input was binary, so the output should be too.
    pub binary: bool,
}

fn affine_row(path: &std::path::Path, format: Format, d: usize) -> Result<Vec<iterl2norm::FpScalar>> {
    let set = read_vectors(path, Some(format))?;
    if set.rows.len() != 1 || set.d != d {
        return Err(BenchError::data(
            path,
            1,
            format!("expected one row of {d} values, found {} of {}", set.rows.len(), set.d),
        ));
    }
    Ok(set.rows.into_iter().next().unwrap())
}

/// Normalize every vector of `spec.input_path` with optional γ and β files.
pub fn run_normalize(spec: &ExperimentSpec) -> Result<NormalizeOutput> {
    let path = spec
        .input_path
        .as_deref()
        .ok_or_else(|| BenchError::Usage("normalize needs an input file".into()))?;
    if spec.formats.len() > 1 {
        return Err(BenchError::Usage("normalize takes a single --format".into()));
    }
    spec.norm_config(spec.steps[0]).validate()?;
    let binary = std::fs::read(path)
        .map(|b| b.starts_with(&crate::vecio::MAGIC))
        .map_err(|e| BenchError::Io(path.into(), e))?;
    let hint = if binary { spec.formats.first().copied() } else { Some(spec.formats.first().copied().unwrap_or(Format::Fp32)) };
    let set = read_vectors(path, hint)?;
    let (format, d) = (set.format, set.d);
    let one = iterl2norm::FpScalar::one(format);
    let zero = iterl2norm::FpScalar::zero(format);
    let gamma = match &spec.gamma_path {
        Some(p) => affine_row(p, format, d)?,
        None => vec![one; d],
    };
    let beta = match &spec.beta_path {
        Some(p) => affine_row(p, format, d)?,
        None => vec![zero; d],
    };
    let config = spec.norm_config(spec.steps[0]);
    let results: Vec<NormResult> = set
        .rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let x = NormInputs::new(row.clone(), gamma.clone(), beta.clone())?;
            layernorm_iterl2(&x, &config).map_err(|e| match e {
                iterl2norm::Error::Range(msg) => iterl2norm::Error::Range(format!("vector {i}: {msg}")),
                other => other,
            })
        })
        .collect::<std::result::Result<_, _>>()?;
    let diagnostics = results
        .iter()
        .enumerate()
        .map(|(index, r)| Diagnostic {
            index,
            mean: r.mean.to_f64(),
            m: r.m.to_f64(),
            steps: r.steps_taken,
            converged: r.converged,
            a_trajectory: r.a_trajectory.clone(),
        })
        .collect();
    let rows = results.into_iter().map(|r| r.z).collect();
    Ok(NormalizeOutput { output: VectorSet { format, d, rows }, diagnostics, binary })
}

/// CSV column names and formatted rows.
pub trait CsvRows {
    fn columns() -> Vec<String>;
    fn cells(&self) -> Vec<String>;
}

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

fn stats_cells(s: &ErrorStats) -> Vec<String> {
    let mut cells = vec![sci(s.avg()), sci(s.max), s.count.to_string()];
    cells.extend(s.histogram.iter().map(|c| c.to_string()));
    cells
}

fn stats_columns() -> Vec<String> {
    let mut cols: Vec<String> = ["avg_abs_err", "max_abs_err", "elements"].map(String::from).to_vec();
    cols.extend(crate::stats::BUCKET_LABELS.iter().map(|l| format!("hist_{l}")));
    cols
}

impl CsvRows for PrecisionRow {
    fn columns() -> Vec<String> {
        let mut c: Vec<String> = ["format", "d", "steps"].map(String::from).to_vec();
        c.extend(stats_columns());
        c
    }
    fn cells(&self) -> Vec<String> {
        let mut c = vec![self.format.to_string(), self.d.to_string(), self.steps.to_string()];
        c.extend(stats_cells(&self.stats));
        c
    }
}

impl CsvRows for ConvergenceRow {
    fn columns() -> Vec<String> {
        let mut c: Vec<String> = ["format", "steps"].map(String::from).to_vec();
        c.extend(stats_columns());
        c
    }
    fn cells(&self) -> Vec<String> {
        let mut c = vec![self.format.to_string(), self.steps.to_string()];
        c.extend(stats_cells(&self.stats));
        c
    }
}

impl CsvRows for FisrRow {
    fn columns() -> Vec<String> {
        ["format", "d", "method", "avg_err", "max_err", "elements"].map(String::from).to_vec()
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.format.to_string(),
            self.d.to_string(),
            self.method.name().into(),
            sci(self.stats.avg()),
            sci(self.stats.max),
            self.stats.count.to_string(),
        ]
    }
}

impl CsvRows for LatencyRow {
    fn columns() -> Vec<String> {
        let mut c: Vec<String> = ["d", "steps", "chunks", "total_cycles"].map(String::from).to_vec();
        c.extend(Phase::ALL.iter().map(|p| p.name().to_string()));
        c
    }
    fn cells(&self) -> Vec<String> {
        let mut c = vec![
            self.d.to_string(),
            self.steps.to_string(),
            self.chunks.to_string(),
            self.report.total.to_string(),
        ];
        c.extend(self.report.per_phase.iter().map(|(_, v)| v.to_string()));
        c
    }
}
