//! Library behind the `pmetro` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::io::Write;

pub use commands::{cmd_bayes, cmd_loss, cmd_qfi, cmd_sample, cmd_state_info, cmd_sweep, cmd_table1, SampleReport};
pub use config::{Format, Overrides, RunConfig};
pub use error::{CliError, CliResult};
pub use report::{EstimationReport, ReportRow};

use report::human_number;

pub fn write_report<W: Write>(report: &EstimationReport, format: Format, out: W) -> CliResult<()> {
    match format {
        Format::Json => report.write_json(out),
        Format::Csv => report.write_csv(out),
        Format::Table => report.write_table(out),
    }
}

pub fn write_sample<W: Write>(report: &SampleReport, format: Format, mut out: W) -> CliResult<()> {
    match format {
        Format::Json => serde_json::to_writer_pretty(out, report).map_err(std::io::Error::from)?,
        Format::Csv => report.record.write_csv(out)?,
        Format::Table => {
            let rec = &report.record;
            writeln!(out, "shots {}  seed {}  phi {}", rec.shots, rec.seed, human_number(rec.phi))?;
            writeln!(
                out,
                "worst-case photons per shot {}  mean per shot {}  n_mean {}",
                rec.worst_case_photons,
                human_number(rec.mean_photons_per_shot),
                human_number(report.n_mean)
            )?;
            if let Some(classes) = &report.classes {
                let freq = rec.total_number_frequencies();
                writeln!(out, "{:<12}  {:>7}  {:>11}  {:>11}  informative", "class", "photons", "probability", "frequency")?;
                for c in classes {
                    let f = freq.get(&c.photons).copied().unwrap_or(0.0);
                    let name = serde_json::to_value(c.class).ok().and_then(|v| v.as_str().map(String::from));
                    writeln!(
                        out,
                        "{:<12}  {:>7}  {:>11}  {:>11}  {}",
                        name.unwrap_or_default(),
                        c.photons,
                        human_number(c.probability),
                        human_number(f),
                        c.informative
                    )?;
                }
            }
            writeln!(out, "{:>4} {:>4}  count", "n1", "n2")?;
            for c in &rec.histogram {
                writeln!(out, "{:>4} {:>4}  {}", c.label.n1, c.label.n2, c.count)?;
            }
        }
    }
    Ok(())
}

/// Warnings for flagged rows, for stderr.
pub fn row_warnings(report: &EstimationReport) -> Vec<String> {
    let mut w = Vec::new();
    for r in &report.rows {
        if r.failed {
            w.push(format!("row {}: failed: {}", r.label, r.error.as_deref().unwrap_or("")));
        }
        if r.wide_prior {
            w.push(format!("row {}: prior wider than 2, the quadratic cost no longer approximates a periodic one", r.label));
        }
        if r.divergent_cfi {
            w.push(format!("row {}: classical Fisher information diverges at a zero-probability outcome", r.label));
        }
        if r.mismatch {
            w.push(format!("row {}: closed form and numerics disagree beyond 1e-8", r.label));
        }
    }
    w
}
