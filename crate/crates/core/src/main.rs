use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use confocal::cli::{self, schema, EXPERIMENTS};

/// Run a confocal-quadrics experiment and write its `report_v1` JSON.
#[derive(Parser, Debug)]
#[command(name = "confocal", version)]
struct Args {
    /// Experiment name, or `list` to show experiments and their keys.
    experiment: String,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; may be repeated. Wins over the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write an SVG figure of the configuration.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Also write per-sample CSV next to the report.
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance compared against the largest scaled deviation.
    #[arg(long)]
    tol: Option<f64>,
}

fn list() {
    for name in EXPERIMENTS {
        let (keys, tol) = schema(name).expect("listed experiments have schemas");
        println!("{name} (tol {tol:e})");
        for k in keys {
            println!("    {:<16} {:<18} {}", k.name, k.default.to_string(), k.doc);
        }
    }
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("confocal: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.experiment == "list" {
        list();
        return ExitCode::SUCCESS;
    }
    let mut overrides = Vec::new();
    for s in &args.set {
        match s.split_once('=') {
            Some((k, v)) => overrides.push((k.trim().to_string(), v.trim().to_string())),
            None => return fail(format!("--set expects KEY=VALUE, got `{s}`")),
        }
    }
    let file = match &args.config {
        Some(p) => match fs::read_to_string(p) {
            Ok(t) => Some(t),
            Err(e) => return fail(format!("{}: {e}", p.display())),
        },
        None => None,
    };
    let config = match cli::configure(&args.experiment, file.as_deref(), &overrides, args.seed, args.tol) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let (report, scene) = cli::run(&config);
    let json = report.to_json();
    match &args.out {
        Some(p) => {
            if let Err(e) = fs::write(p, json + "\n") {
                return fail(format!("{}: {e}", p.display()));
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            if let Err(e) = writeln!(out, "{json}") {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return fail(e);
                }
            }
        }
    }
    if args.csv {
        let path = args.out.as_deref().map_or_else(|| PathBuf::from(format!("{}.csv", args.experiment)), |p| p.with_extension("csv"));
        if let Err(e) = fs::write(&path, report.to_csv()) {
            return fail(format!("{}: {e}", path.display()));
        }
    }
    if let Some(p) = &args.svg {
        if let Err(e) = write_svg(p, scene.as_ref()) {
            return fail(e);
        }
    }
    if let Some(err) = &report.error {
        eprintln!("confocal: {} failed: {err}", args.experiment);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn write_svg(path: &Path, scene: Option<&cli::svg::Scene>) -> Result<(), String> {
    let doc = cli::svg::render_svg(scene.unwrap_or(&cli::svg::Scene::default())).map_err(|e| e.to_string())?;
    fs::write(path, doc).map_err(|e| format!("{}: {e}", path.display()))
}
