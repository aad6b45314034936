use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shockrom::experiments::{builtin_scenarios, execute, find_scenario, sidecar_path, Pipeline, RunReport, Scenario};
use shockrom::{Error, Result};

#[derive(Parser)]
#[command(name = "shockrom", version, about = "Reduced-order models of scalar conservation laws with shocks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    List,
    /// Run a pipeline on one or more scenarios.
    Run {
        /// Scenario name; repeat to run several, in which case `--out` is a directory.
        #[arg(long, required = true)]
        scenario: Vec<String>,
        #[arg(long, value_parser = parse_pipeline)]
        pipeline: Pipeline,
        /// CSV output file, or directory for several scenarios.
        #[arg(long)]
        out: PathBuf,
        /// Relative singular-value energy threshold.
        #[arg(long)]
        eps: Option<f64>,
        /// Smoothing width of Riemann data.
        #[arg(long)]
        delta: Option<f64>,
        /// JSON object overriding scenario fields.
        #[arg(long)]
        json_config: Option<PathBuf>,
        /// Run several scenarios concurrently.
        #[arg(long)]
        parallel: bool,
    },
}

fn parse_pipeline(s: &str) -> std::result::Result<Pipeline, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn prepare(
    name: &str,
    eps: Option<f64>,
    delta: Option<f64>,
    overrides: Option<&serde_json::Value>,
) -> Result<Scenario> {
    let mut s = find_scenario(name)?;
    if let Some(o) = overrides {
        s = s.with_overrides(o)?;
    }
    if let Some(e) = eps {
        s.eps = e;
    }
    if delta.is_some() {
        s.delta = delta;
    }
    s.validate()?;
    Ok(s)
}

fn summary(report: &RunReport, out: &Path) -> String {
    let d = &report.diagnostics;
    let last = d.rom.errors.last().copied().unwrap_or(f64::NAN);
    let rank = d.rom.rank.map_or("-".to_string(), |r| r.to_string());
    format!(
        "{} {}: rank {rank}, error at t = {} is {last:.3e} against the {} reference -> {} ({})",
        d.scenario.name,
        d.pipeline,
        report.times.last().copied().unwrap_or(0.0),
        d.reference,
        out.display(),
        sidecar_path(out).display()
    )
}

fn run(
    scenarios: &[String],
    pipeline: Pipeline,
    out: &Path,
    eps: Option<f64>,
    delta: Option<f64>,
    json_config: Option<&Path>,
    parallel: bool,
) -> std::result::Result<(), Vec<Error>> {
    prepare_and_run(scenarios, pipeline, out, eps, delta, json_config, parallel).map_err(|e| vec![e])?
}

fn prepare_and_run(
    scenarios: &[String],
    pipeline: Pipeline,
    out: &Path,
    eps: Option<f64>,
    delta: Option<f64>,
    json_config: Option<&Path>,
    parallel: bool,
) -> Result<std::result::Result<(), Vec<Error>>> {
    let overrides = match json_config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Some(
                serde_json::from_str::<serde_json::Value>(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            )
        }
        None => None,
    };
    let jobs =
        scenarios.iter().map(|name| prepare(name, eps, delta, overrides.as_ref())).collect::<Result<Vec<_>>>()?;
    let targets: Vec<PathBuf> = if jobs.len() == 1 {
        vec![out.to_path_buf()]
    } else {
        std::fs::create_dir_all(out)?;
        jobs.iter().map(|s| out.join(format!("{}-{pipeline}.csv", s.name))).collect()
    };

    let results: Vec<Result<RunReport>> = if parallel && jobs.len() > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> =
                jobs.iter().zip(&targets).map(|(s, t)| scope.spawn(move || execute(s, pipeline, t))).collect();
            handles.into_iter().map(|h| h.join().expect("scenario worker panicked")).collect()
        })
    } else {
        jobs.iter().zip(&targets).map(|(s, t)| execute(s, pipeline, t)).collect()
    };

    let mut errors = Vec::new();
    for (r, t) in results.into_iter().zip(&targets) {
        match r {
            Ok(report) => println!("{}", summary(&report, t)),
            Err(e) => errors.push(e),
        }
    }
    Ok(if errors.is_empty() { Ok(()) } else { Err(errors) })
}

fn report_error(e: &Error) {
    let line = serde_json::json!({ "error": e.category().as_str(), "message": e.to_string() });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome: std::result::Result<(), Vec<Error>> = match cli.command {
        Command::List => {
            for s in builtin_scenarios() {
                println!(
                    "{:<20} {:<16} [{}, {}] cells={} steps={} train<={} predict<={} snapshots={} source={:?}",
                    s.name,
                    s.flux.name(),
                    s.domain[0],
                    s.domain[1],
                    s.cells,
                    s.steps,
                    s.t_train,
                    s.t_predict,
                    s.snapshots,
                    s.source
                );
            }
            Ok(())
        }
        Command::Run { scenario, pipeline, out, eps, delta, json_config, parallel } => {
            run(&scenario, pipeline, &out, eps, delta, json_config.as_deref(), parallel)
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(errors) => {
            errors.iter().for_each(report_error);
            // the first failure decides the exit status
            ExitCode::from(errors[0].category().exit_code() as u8)
        }
    }
}
