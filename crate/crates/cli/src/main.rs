use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use bergman_core::bundles::Psi;
use bergman_core::random_sections::TestForm;
use bergman_lab::{configure_threads, run_experiment, validate, ExperimentConfig, Format};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bergman-lab", version, about = "Bergman kernel and equidistribution experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Print the potential and test-form catalogs.
    ListCatalog,
}

fn load(path: &PathBuf) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn threads_from_env() -> anyhow::Result<usize> {
    match std::env::var("BERGMAN_LAB_THREADS") {
        Ok(v) => v.trim().parse().with_context(|| format!("BERGMAN_LAB_THREADS = {v:?}")),
        Err(_) => Ok(0),
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::ListCatalog => {
            println!("potentials:");
            for psi in Psi::ALL {
                println!("  {:<14} {}", psi.id(), psi.description());
            }
            println!("test forms:");
            for f in TestForm::ALL {
                println!("  {:<14} {}", f.id(), f.description());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let config = load(&config)?;
            let diagnostics = validate(&config);
            for d in &diagnostics {
                println!("{d}");
            }
            Ok(if diagnostics.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Run { config, seed, out, format } => {
            let mut config = load(&config)?;
            if let Some(s) = seed {
                config.seed = s;
            }
            if let Some(o) = out {
                config.output = Some(o);
            }
            if let Some(f) = format {
                config.format = match f {
                    FormatArg::Csv => Format::Csv,
                    FormatArg::Json => Format::Json,
                };
            }
            let diagnostics = validate(&config);
            if !diagnostics.is_empty() {
                anyhow::bail!("invalid config: {}", diagnostics.join("; "));
            }
            configure_threads(threads_from_env()?)?;
            let report = run_experiment(&config)?;
            match &config.output {
                Some(path) => report.write(path.as_ref())?,
                None => match config.format {
                    Format::Json => println!("{}", report.to_json()),
                    Format::Csv => print!("{}", report.to_csv()?),
                },
            }
            for c in &report.summary.checks {
                eprintln!("{} {}: {:.6e} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
            }
            eprintln!("wall time {:.2}s", report.wall_time_s);
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
