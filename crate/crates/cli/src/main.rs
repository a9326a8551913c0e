use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use photon_metrology::StateSpec;
use photon_metrology_cli::{
    cmd_bayes, cmd_loss, cmd_qfi, cmd_sample, cmd_state_info, cmd_sweep, cmd_table1, row_warnings, write_report,
    write_sample, CliError, CliResult, Overrides, RunConfig,
};

#[derive(Parser)]
#[command(name = "pmetro", version, about = "Phase estimation with photon-number probe states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Number statistics of a state.
    StateInfo,
    /// N00N, vacuum-Fock and folded families side by side at (N, eta).
    Table1,
    /// Quantum and classical Fisher information.
    Qfi,
    /// Bayesian metrological power under a prior.
    Bayes,
    /// Upper bound on the QFI under photon loss.
    Loss,
    /// Evaluate over a grid of one parameter.
    Sweep,
    /// Simulate photon-counting records.
    Sample,
}

fn config_from(flags: &Overrides) -> CliResult<RunConfig> {
    let mut config = match &flags.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::default(),
    };
    config.merge(flags)?;
    config.validate()?;
    Ok(config)
}

fn output(config: &RunConfig) -> CliResult<Box<dyn Write>> {
    Ok(match &config.output.path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn eta_of(spec: Option<&StateSpec>) -> Option<f64> {
    match spec? {
        StateSpec::VacuumFockSquared { eta, .. }
        | StateSpec::RhoOns { eta, .. }
        | StateSpec::RhoOnn { eta, .. }
        | StateSpec::PsiOnn { eta, .. } => Some(*eta),
        _ => None,
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let config = config_from(&cli.flags)?;
    let format = config.output.format;
    let report = match cli.command {
        Command::Sample => {
            let report = cmd_sample(&config)?;
            let mut out = output(&config)?;
            write_sample(&report, format, &mut out)?;
            out.flush()?;
            return Ok(());
        }
        Command::StateInfo => cmd_state_info(&config)?,
        Command::Table1 => {
            let n = cli.flags.n.or_else(|| config.spec.as_ref().and_then(StateSpec::fock_number));
            let eta = cli.flags.eta.or_else(|| eta_of(config.spec.as_ref()));
            match (n, eta) {
                (Some(n), Some(eta)) => cmd_table1(n, eta, &config)?,
                _ => return Err(CliError::validation("table1 needs --N and --eta")),
            }
        }
        Command::Qfi => cmd_qfi(&config)?,
        Command::Bayes => cmd_bayes(&config)?,
        Command::Loss => cmd_loss(&config)?,
        Command::Sweep => cmd_sweep(&config)?,
    };
    for w in row_warnings(&report) {
        eprintln!("warning: {w}");
    }
    let mut out = output(&config)?;
    write_report(&report, format, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
