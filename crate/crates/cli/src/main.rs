//! `immersed`: runs one immersed fluid-structure simulation from a parameter file.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use log::{error, info, warn};

use immersed_core::config::{parse_parameters, Parameters};
use immersed_core::harness::{RunReport, Simulation};

const EXIT_DEFAULTS_WRITTEN: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "immersed", version, about = "Immersed finite element fluid-structure solver")]
struct Cli {
    /// Parameter file; created with default values if it does not exist.
    parameter_file: PathBuf,
    /// Write the default parameter file here instead of at PARAMETER_FILE.
    #[arg(long, value_name = "PATH")]
    defaults_out: Option<PathBuf>,
    /// Only report warnings and errors.
    #[arg(long)]
    quiet: bool,
}

fn write_defaults(path: &Path) -> Result<(), String> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    std::fs::write(path, Parameters::default().to_prm()).map_err(|e| format!("{}: {e}", path.display()))
}

fn summarize(report: &RunReport) {
    info!(
        "{} steps on {} fluid cells ({} fluid dofs); max |area change| {:.4}%, max |Bu| {:.2e}",
        report.steps, report.fluid_cells, report.fluid_dofs, report.max_area_change_pct, report.max_continuity_defect
    );
    if let Some(e) = &report.errors {
        info!("errors: L2(u) = {:.5e}, H1(u) = {:.5e}, L2(p) = {:.5e}", e.l2_u, e.h1_u, e.l2_p);
    }
}

fn run(cli: &Cli) -> Result<RunReport, String> {
    let text = std::fs::read_to_string(&cli.parameter_file)
        .map_err(|e| format!("{}: {e}", cli.parameter_file.display()))?;
    let parsed = parse_parameters(&text).map_err(|e| format!("{}: {e}", cli.parameter_file.display()))?;
    for w in &parsed.warnings {
        warn!("{}: {w}", cli.parameter_file.display());
    }
    let sim = Simulation::from_parameters(&parsed.parameters, Path::new(".")).map_err(|e| e.to_string())?;
    let (report, _) = sim.run(true).map_err(|e| e.to_string())?;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if !cli.parameter_file.exists() {
        let target = cli.defaults_out.as_deref().unwrap_or(&cli.parameter_file);
        return match write_defaults(target) {
            Ok(()) => {
                warn!(
                    "{} not found; wrote default parameters to {}",
                    cli.parameter_file.display(),
                    target.display()
                );
                ExitCode::from(EXIT_DEFAULTS_WRITTEN)
            }
            Err(e) => {
                error!("cannot write default parameters: {e}");
                ExitCode::FAILURE
            }
        };
    }
    match run(&cli) {
        Ok(report) => {
            summarize(&report);
            ExitCode::SUCCESS
        }
        Err(e) => {
            error!("{e}");
            ExitCode::FAILURE
        }
    }
}
