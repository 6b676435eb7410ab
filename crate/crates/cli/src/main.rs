use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bdris_core::experiment::{run_sweep, Design, SweepParam, SweepSpec};
use bdris_core::report::{emit_report, ReportFormat};
use bdris_core::{apply_overrides, Error};
use clap::Parser;
use serde_json::{json, Value};

/// Sweep one parameter of a BD-RIS assisted cell-free SWIPT network and
/// write CSV and JSON results. The worker thread count follows
/// `RAYON_NUM_THREADS`.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// JSON object of configuration overrides.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Swept parameter: `L` (antennas per AP) or `M` (number of APs).
    #[arg(long, default_value = "L")]
    sweep: String,

    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,

    /// Comma-separated scattering designs.
    #[arg(long, value_delimiter = ',', default_value = "heuristic,random,none")]
    designs: Vec<String>,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,

    /// Add Monte Carlo validation columns.
    #[arg(long)]
    mc_validate: bool,

    /// Small-scale trials per topology for `--mc-validate`.
    #[arg(long, default_value_t = 10_000)]
    trials: usize,

    /// Full-size scenario (`ML = 480`, 8×5 RIS) instead of the desk default.
    #[arg(long)]
    paper_scale: bool,

    #[arg(long)]
    topologies: Option<usize>,

    /// Fixed `M·L` product. Zero disables the constraint.
    #[arg(long)]
    total_antennas: Option<usize>,
}

#[derive(Debug)]
struct Failure {
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        kind: "usage",
        message: message.into(),
    }
}

fn build_spec(args: &Args) -> Result<SweepSpec, Failure> {
    let param: SweepParam = args.sweep.parse()?;
    let designs = args
        .designs
        .iter()
        .map(|d| d.trim().parse::<Design>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut spec = if args.paper_scale {
        SweepSpec::full_scale(param, args.values.clone(), args.seed)
    } else {
        SweepSpec::desk(param, args.values.clone(), args.seed)
    };
    spec.designs = designs;
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Failure {
            kind: "io",
            message: format!("{}: {e}", path.display()),
        })?;
        let Value::Object(map) = serde_json::from_str::<Value>(&text).map_err(|e| Failure {
            kind: "json",
            message: format!("{}: {e}", path.display()),
        })?
        else {
            return Err(usage("configuration file must hold a JSON object"));
        };
        spec.config = apply_overrides(&spec.config, &map)?;
    }
    if let Some(t) = args.topologies {
        spec.topologies = t;
    }
    match args.total_antennas {
        Some(0) => spec.total_antennas = None,
        Some(n) => spec.total_antennas = Some(n),
        None => {}
    }
    if args.mc_validate {
        spec.mc_trials = Some(args.trials);
    }
    spec.validate()?;
    Ok(spec)
}

fn run(args: &Args) -> Result<Value, Failure> {
    let spec = build_spec(args)?;
    fs::create_dir_all(&args.out).map_err(|e| Failure {
        kind: "io",
        message: format!("{}: {e}", args.out.display()),
    })?;
    let rows = run_sweep(&spec)?;
    let csv = args.out.join("results.csv");
    let json_path = args.out.join("results.json");
    emit_report(&rows, ReportFormat::Csv, &csv, &spec)?;
    emit_report(&rows, ReportFormat::Json, &json_path, &spec)?;
    let infeasible = rows.iter().filter(|r| !r.feasible).count();
    Ok(json!({
        "rows": rows.len(),
        "infeasible": infeasible,
        "csv": display(&csv),
        "json": display(&json_path),
    }))
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": "usage", "message": e.to_string().trim_end() }));
            return ExitCode::from(2);
        }
    };
    match run(&args) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
            ExitCode::FAILURE
        }
    }
}
