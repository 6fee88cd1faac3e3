use std::io::Write;

use crate::experiments::{CsvRows, ExperimentSpec};
use crate::rng::RNG_ID;

/// `64,128,...,1024` style summary of a dimension list.
pub fn describe_dims(dims: &[usize]) -> String {
    if dims.len() > 3 {
        let step = dims[1].wrapping_sub(dims[0]);
        if step > 0 && dims.windows(2).all(|w| w[1].wrapping_sub(w[0]) == step) {
            return format!("{}..={} step {step}", dims[0], dims[dims.len() - 1]);
        }
    }
    join(dims)
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Comment block describing the run, one `# key: value` per line.
pub fn header(spec: &ExperimentSpec) -> Vec<String> {
    let opt = |v: Option<f64>| v.map_or_else(|| "default".to_string(), |v| v.to_string());
    vec![
        format!("iterl2norm-bench {}", env!("CARGO_PKG_VERSION")),
        format!("experiment: {}", spec.kind.name()),
        format!("formats: {}", join(&spec.formats)),
        format!("dims: {}", describe_dims(&spec.dims)),
        format!("num_vectors: {}", spec.num_vectors),
        format!("steps: {}", join(&spec.steps)),
        format!("lambda: {}", opt(spec.lambda_override)),
        format!(
            "stopping: {}",
            spec.delta_max.map_or_else(|| "fixed steps".into(), |d| format!("|delta a| <= {d}"))
        ),
        format!("seed: {}", spec.seed),
        format!("rng: {RNG_ID}"),
        format!(
            "config: {}",
            spec.config_path.as_ref().map_or_else(|| "defaults".into(), |p| p.display().to_string())
        ),
    ]
}

pub fn write_csv<R: CsvRows>(
    out: &mut impl Write,
    spec: &ExperimentSpec,
    rows: &[R],
) -> std::io::Result<()> {
    for line in header(spec) {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{}", R::columns().join(","))?;
    for row in rows {
        writeln!(out, "{}", row.cells().join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_latency, ExperimentKind};

    #[test]
    fn dims_summary() {
        assert_eq!(describe_dims(&[64, 128, 192, 256]), "64..=256 step 64");
        assert_eq!(describe_dims(&[1, 2, 5]), "1,2,5");
        assert_eq!(describe_dims(&[1, 2, 3, 5]), "1,2,3,5");
    }

    #[test]
    fn csv_starts_with_comment_block() {
        let spec = ExperimentSpec { dims: vec![64, 1024], ..ExperimentSpec::new(ExperimentKind::Latency) };
        let mut buf = Vec::new();
        write_csv(&mut buf, &spec, &run_latency(&spec).unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# iterl2norm-bench "));
        assert!(text.contains("# seed: 0\n"));
        assert!(text.contains("# rng: ChaCha8"));
        let first_row = lines.iter().position(|l| !l.starts_with('#')).unwrap();
        assert!(lines[first_row].starts_with("d,steps,chunks,total_cycles,mean_sum"));
        assert!(lines[first_row + 1].starts_with("64,5,1,116,"));
        assert!(lines[first_row + 2].starts_with("1024,5,16,227,"));
    }
}
