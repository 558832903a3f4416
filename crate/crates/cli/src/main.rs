//! `fracdiff`: configuration-driven front end for the fracdiff library.
//!
//! Exit codes: 0 success, 1 I/O or verification failure, 2 invalid
//! configuration, 3 numerical failure.

mod config;
mod experiments;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use fracdiff::evolution::mittag_leffler;
use fracdiff::io;
use fracdiff::moments::{fit_power_law, MomentKind};
use serde_json::json;

use config::{ConfigError, Format};

#[derive(Parser)]
#[command(name = "fracdiff", version, about = "Fractional diffusion laboratory")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "FRACDIFF_THREADS")]
    threads: Option<usize>,

    /// Output format, overriding the config's `output.formats`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite and print a JSON report.
    Verify {
        #[arg(value_enum)]
        suite: verify::Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report to `DIR/verify_<suite>.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit `Var(t) - var0 = C t^α` to a series CSV.
    Fit {
        #[arg(long)]
        series: PathBuf,
        /// Baseline variance; defaults to the first value of the series.
        #[arg(long)]
        var0: Option<f64>,
        #[arg(long, num_args = 2, value_names = ["T_MIN", "T_MAX"])]
        window: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the Mittag-Leffler function `E_β(z)` on `[z_min, z_max]`.
    MlEval {
        #[arg(long)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        z_min: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        z_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the JSON schema of the run configuration.
    Schema,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(lib) = cause.downcast_ref::<fracdiff::Error>() {
            return match lib {
                fracdiff::Error::InvalidParameter { .. } => 2,
                fracdiff::Error::Io(_) | fracdiff::Error::Csv(_) | fracdiff::Error::Json(_) => 1,
                _ => 3,
            };
        }
    }
    1
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(ConfigError::new("--threads", "must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    match cli.command {
        Command::Run { config, out } => run(&config, out, cli.format),
        Command::Verify { suite, seed, out } => {
            let report = verify::run(suite, seed)?;
            let text = serde_json::to_string_pretty(&report)? + "\n";
            print!("{text}");
            if let Some(dir) = out {
                let name = format!("verify_{}.json", serde_json::to_value(suite)?.as_str().unwrap_or("suite"));
                std::fs::write(io::output_path(&dir, &name)?, &text)?;
            }
            Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Fit {
            series,
            var0,
            window,
            out,
        } => fit(&series, var0, window, out.as_deref()),
        Command::MlEval {
            beta,
            z_min,
            z_max,
            points,
            out,
        } => ml_eval(beta, z_min, z_max, points, out.as_deref(), cli.format.unwrap_or(Format::Csv)),
        Command::Schema => {
            let schema = schemars::schema_for!(config::RunConfig);
            print!("{}", serde_json::to_string_pretty(&schema)? + "\n");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run(path: &Path, out: Option<PathBuf>, format: Option<Format>) -> Result<ExitCode> {
    let mut cfg = config::load(path)?;
    if let Some(dir) = out {
        cfg.output.directory = dir;
    }
    if let Some(f) = format {
        cfg.output.formats = vec![f];
    }
    cfg.validate()?;
    let dir = cfg.output.directory.clone();
    let outcome = experiments::run(&cfg, &dir)?;
    let manifest = json!({
        "tool": "fracdiff",
        "version": env!("CARGO_PKG_VERSION"),
        "library_version": fracdiff::VERSION,
        "config": cfg,
        "artifacts": outcome.artifacts,
        "summary": outcome.summary,
    });
    io::write_json(&dir.join("manifest.json"), &manifest)?;
    println!("{}", serde_json::to_string_pretty(&manifest["summary"])?);
    Ok(ExitCode::SUCCESS)
}

fn fit(series: &Path, var0: Option<f64>, window: Option<Vec<f64>>, out: Option<&Path>) -> Result<ExitCode> {
    let s = io::read_series_csv::<f64>(series, MomentKind::Variance)
        .with_context(|| format!("cannot read series {}", series.display()))?;
    let Some(first) = s.values.first() else {
        bail!(ConfigError::new("--series", "series is empty"));
    };
    let var0 = var0.unwrap_or(first.re);
    let window = window.map(|w| (w[0], w[1]));
    let result = fit_power_law(&s, var0, window)?;
    print!("{}", serde_json::to_string_pretty(&result)? + "\n");
    if let Some(dir) = out {
        io::write_fit_json(&io::output_path(dir, "fit.json")?, &result)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn ml_eval(beta: f64, z_min: f64, z_max: f64, points: usize, out: Option<&Path>, format: Format) -> Result<ExitCode> {
    if !(z_min <= z_max && z_max <= 0.0) {
        return Err(ConfigError::new("--z-min", "need z_min ≤ z_max ≤ 0").into());
    }
    if points < 2 {
        return Err(ConfigError::new("--points", "need at least 2").into());
    }
    let z: Vec<f64> = (0..points)
        .map(|i| z_min + (z_max - z_min) * i as f64 / (points - 1) as f64)
        .collect();
    let values = z
        .iter()
        .map(|&x| mittag_leffler(beta, x))
        .collect::<fracdiff::Result<Vec<f64>>>()
        .context("evolution: mittag_leffler")?;
    let text = match format {
        Format::Csv => {
            let mut s = String::from("z,value\n");
            for (x, v) in z.iter().zip(&values) {
                s.push_str(&format!("{x:.16e},{v:.16e}\n"));
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&json!({ "beta": beta, "z": z, "value": values }))? + "\n",
    };
    match out {
        Some(dir) => {
            let name = if format == Format::Csv { "mittag_leffler.csv" } else { "mittag_leffler.json" };
            std::fs::write(io::output_path(dir, name)?, text)?;
        }
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}
