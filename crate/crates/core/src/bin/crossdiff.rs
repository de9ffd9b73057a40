use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crossdiff::error::{Error, ErrorKind};
use crossdiff::io::{self, Overrides};
use crossdiff::model::StepperKind;

#[derive(Parser)]
#[command(name = "crossdiff", version, about = "Cross-diffusion simulator and estimate diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a config and write snapshots plus report tables.
    Run {
        /// TOML configuration file.
        config: PathBuf,
        /// Output directory, overriding `[output].dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `explicit` or `semi-implicit`.
        #[arg(long)]
        stepper: Option<StepperKind>,
        /// Viscosity, overriding `[time].eps`.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run the `[study]` section of a config.
    Study {
        /// TOML configuration file.
        config: PathBuf,
        /// Output directory, overriding `[output].dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `explicit` or `semi-implicit`.
        #[arg(long)]
        stepper: Option<StepperKind>,
        /// Viscosity, overriding `[time].eps`.
        #[arg(long)]
        eps: Option<f64>,
        /// Number of refinement levels.
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Recompute the report from a directory written by `run`.
    Diagnose {
        /// Directory written by `run`.
        trajdir: PathBuf,
        /// Defaults to TRAJDIR/diagnose.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render CSV tables as SVG line plots.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Directory for the SVG files, next to each CSV by default.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Logarithmic axes.
        #[arg(long)]
        loglog: bool,
    },
}

fn out_dir(out: Option<PathBuf>, text: &str, fallback: &str) -> Result<PathBuf, Error> {
    if let Some(o) = out {
        return Ok(o);
    }
    Ok(io::parse_config(text)?.output.dir.unwrap_or_else(|| PathBuf::from(fallback)))
}

fn effective(config: &Path, overrides: Overrides) -> Result<String, Error> {
    io::apply_overrides(&io::read_config(config)?, &overrides)
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run {
            config,
            out,
            stepper,
            eps,
        } => {
            let text = effective(&config, Overrides { stepper, eps, levels: None })?;
            let dir = out_dir(out, &text, "out")?;
            let (traj, _) = io::run_to_dir(&text, &dir)?;
            println!(
                "wrote {} snapshots ({} steps) to {}",
                traj.snapshots.len(),
                traj.step_log.len(),
                dir.display()
            );
        }
        Command::Study {
            config,
            out,
            stepper,
            eps,
            levels,
        } => {
            let text = effective(&config, Overrides { stepper, eps, levels })?;
            let dir = out_dir(out, &text, "study")?;
            let rep = io::study_to_dir(&text, &dir)?;
            println!("wrote {} levels to {}", rep.levels.len(), dir.display());
        }
        Command::Diagnose { trajdir, out } => {
            let rep = io::diagnose_dir(&trajdir)?;
            let dir = out.unwrap_or_else(|| trajdir.join("diagnose"));
            let cfg = io::parse_config(&io::read_config(&trajdir.join(io::CONFIG_COPY))?)?;
            io::write_report_csv(&rep, &dir, io::Precision(cfg.output.precision))?;
            println!("wrote report to {}", dir.display());
        }
        Command::Plot { csv, out, loglog } => {
            for path in &csv {
                let svg = io::plot_csv(path, out.as_deref(), loglog)?;
                println!("{}", svg.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, status) = match e.kind() {
                ErrorKind::Config => ("config", 2),
                ErrorKind::Runtime => ("runtime", 3),
                ErrorKind::Io => ("io", 4),
            };
            eprintln!("error: {code}: {}", e.to_string().replace('\n', " "));
            ExitCode::from(status)
        }
    }
}
