use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use iterl2norm::Format;
use iterl2norm_bench::experiments::{self, CsvRows, ExperimentKind, ExperimentSpec};
use iterl2norm_bench::{report, vecio, BenchError, HarnessConfig, Result};

#[derive(Parser)]
#[command(name = "iterl2norm-bench", version, about = "Precision and latency experiments for iterative layer normalization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Average and maximum error against the binary64 reference per format and length.
    Precision(Common),
    /// Error against the number of iteration steps.
    Convergence(Common),
    /// Paired errors of the iteration and the FISR baseline.
    CompareFisr(Common),
    /// Modelled cycle counts per length.
    Latency(Common),
    /// Normalize the vectors of a file.
    Normalize(NormalizeArgs),
}

#[derive(Args)]
struct Common {
    /// fp32, fp16 or bf16; repeat for several.
    #[arg(long = "format", value_parser = parse_format)]
    formats: Vec<Format>,
    /// Comma-separated vector lengths.
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    num_vectors: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated step counts.
    #[arg(long, value_delimiter = ',')]
    steps: Vec<u32>,
    /// Fixed update rate instead of the exponent-derived default.
    #[arg(long)]
    lambda: Option<f64>,
    /// Stop once |Δa| falls to this value, with --steps as the cap.
    #[arg(long)]
    delta_max: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with stage costs, geometry and FISR overrides.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct NormalizeArgs {
    /// Text or binary vector file.
    input: PathBuf,
    /// One-row file with the per-element scale.
    #[arg(long)]
    gamma: Option<PathBuf>,
    /// One-row file with the per-element shift.
    #[arg(long)]
    beta: Option<PathBuf>,
    /// JSON-lines diagnostics; defaults to `<out>.diag.jsonl` when --out is set.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: iterl2norm::Error| e.to_string())
}

fn spec_from(kind: ExperimentKind, args: &Common) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::new(kind);
    if !args.formats.is_empty() {
        spec.formats = args.formats.clone();
    }
    if !args.dims.is_empty() {
        spec.dims = args.dims.clone();
    }
    if !args.steps.is_empty() {
        spec.steps = args.steps.clone();
    }
    spec.num_vectors = args.num_vectors;
    spec.seed = args.seed;
    spec.lambda_override = args.lambda;
    spec.delta_max = args.delta_max;
    if let Some(path) = &args.config {
        spec.config = HarnessConfig::load(path)?;
        spec.config_path = Some(path.clone());
    }
    Ok(spec)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| BenchError::Io(path.into(), e))
}

fn emit<R: CsvRows>(spec: &ExperimentSpec, out: Option<&Path>, rows: &[R]) -> Result<()> {
    let result = match out {
        Some(path) => {
            let mut w = create(path)?;
            report::write_csv(&mut w, spec, rows).and_then(|_| w.flush())
        }
        None => report::write_csv(&mut std::io::stdout().lock(), spec, rows),
    };
    result.map_err(|e| BenchError::Io(out.unwrap_or(Path::new("<stdout>")).into(), e))
}

fn normalize(args: &NormalizeArgs) -> Result<()> {
    let mut spec = spec_from(ExperimentKind::Normalize, &args.common)?;
    if args.common.formats.is_empty() {
        spec.formats.clear();
    }
    spec.input_path = Some(args.input.clone());
    spec.gamma_path = args.gamma.clone();
    spec.beta_path = args.beta.clone();
    let result = experiments::run_normalize(&spec)?;

    let out = args.common.out.as_deref();
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |e| BenchError::Io(p, e)
    };
    let stdout_path = Path::new("<stdout>");
    match out {
        Some(path) => {
            let mut w = create(path)?;
            if result.binary {
                vecio::write_binary(&mut w, &result.output).map_err(io_err(path))?;
            } else {
                vecio::write_text(&mut w, &result.output.rows).map_err(io_err(path))?;
            }
            w.flush().map_err(io_err(path))?;
        }
        None if result.binary => {
            vecio::write_binary(&mut std::io::stdout().lock(), &result.output)
                .map_err(io_err(stdout_path))?;
        }
        None => {
            vecio::write_text(&mut std::io::stdout().lock(), &result.output.rows)
                .map_err(io_err(stdout_path))?;
        }
    }

    let sidecar = args.diagnostics.clone().or_else(|| {
        out.map(|p| {
            let mut s = p.as_os_str().to_owned();
            s.push(".diag.jsonl");
            PathBuf::from(s)
        })
    });
    if let Some(path) = sidecar {
        let mut w = create(&path)?;
        for d in &result.diagnostics {
            let line = serde_json::to_string(d).expect("diagnostics serialize");
            writeln!(w, "{line}").map_err(io_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Precision(a) => {
            let spec = spec_from(ExperimentKind::Precision, a)?;
            emit(&spec, a.out.as_deref(), &experiments::run_precision(&spec)?)
        }
        Command::Convergence(a) => {
            let spec = spec_from(ExperimentKind::Convergence, a)?;
            emit(&spec, a.out.as_deref(), &experiments::run_convergence(&spec)?)
        }
        Command::CompareFisr(a) => {
            let spec = spec_from(ExperimentKind::CompareFisr, a)?;
            emit(&spec, a.out.as_deref(), &experiments::run_compare_fisr(&spec)?)
        }
        Command::Latency(a) => {
            let spec = spec_from(ExperimentKind::Latency, a)?;
            emit(&spec, a.out.as_deref(), &experiments::run_latency(&spec)?)
        }
        Command::Normalize(a) => normalize(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
