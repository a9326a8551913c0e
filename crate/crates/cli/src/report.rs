//! Report rows and their JSON, CSV and table renderings.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliResult;

/// Relative agreement required between a closed form and the numerics.
pub const AGREEMENT_TOL: f64 = 1e-8;

/// One line of a report. Quantities that were not computed are `None`; a
/// `*_closed` field holds the analytic value of the field it follows.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportRow {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(rename = "W", skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_mean_closed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2_mean_closed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vacuum_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vacuum_prob_closed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qfi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qfi_closed: Option<f64>,
    /// QFI of the total-number twirl of the state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qfi_twirled: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qfi_conditioned: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qfi_conditioned_closed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qcrb_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfi: Option<f64>,
    #[serde(rename = "P", skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(rename = "P_closed", skip_serializing_if = "Option::is_none")]
    pub power_closed: Option<f64>,
    #[serde(rename = "P_conditioned", skip_serializing_if = "Option::is_none")]
    pub power_conditioned: Option<f64>,
    #[serde(rename = "P_conditioned_closed", skip_serializing_if = "Option::is_none")]
    pub power_conditioned_closed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma0_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub no_click_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_class_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_n_class_prob: Option<f64>,
    pub wide_prior: bool,
    pub divergent_cfi: bool,
    /// Some closed form disagrees with its numerical counterpart.
    pub mismatch: bool,
    pub failed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Probability of each total photon number.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub number_distribution: Option<BTreeMap<u32, f64>>,
}

/// CSV columns, in order.
pub const COLUMNS: &[&str] = &[
    "label",
    "kind",
    "N",
    "eta",
    "p",
    "alpha",
    "beta",
    "W",
    "gamma",
    "phi",
    "n_mean",
    "n_mean_closed",
    "n2_mean",
    "n2_mean_closed",
    "vacuum_prob",
    "vacuum_prob_closed",
    "qfi",
    "qfi_closed",
    "qfi_twirled",
    "qfi_conditioned",
    "qfi_conditioned_closed",
    "qcrb_variance",
    "cfi",
    "P",
    "P_closed",
    "P_conditioned",
    "P_conditioned_closed",
    "optimal_error",
    "sigma0_sq",
    "loss_bound",
    "no_click_prob",
    "n_class_prob",
    "two_n_class_prob",
    "wide_prior",
    "divergent_cfi",
    "mismatch",
    "failed",
    "error",
    "number_distribution",
];

/// Value as text with 17 significant digits, enough to round-trip an `f64`.
pub fn machine_number(x: f64) -> String {
    if x == 0.0 {
        "0.0000000000000000e0".into()
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Value as text with 6 significant digits.
pub fn human_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

impl ReportRow {
    pub fn labelled(label: impl Into<String>) -> Self {
        ReportRow { label: label.into(), ..Default::default() }
    }

    pub fn failure(label: impl Into<String>, message: String) -> Self {
        ReportRow { label: label.into(), failed: true, error: Some(message), ..Default::default() }
    }

    fn pairs(&self) -> [(Option<f64>, Option<f64>); 8] {
        [
            (self.power, self.power_closed),
            (self.qfi, self.qfi_twirled),
            (self.n_mean, self.n_mean_closed),
            (self.n2_mean, self.n2_mean_closed),
            (self.vacuum_prob, self.vacuum_prob_closed),
            (self.qfi, self.qfi_closed),
            (self.qfi_conditioned, self.qfi_conditioned_closed),
            (self.power_conditioned, self.power_conditioned_closed),
        ]
    }

    /// Sets [`ReportRow::mismatch`] if any computed quantity disagrees with
    /// its closed form beyond [`AGREEMENT_TOL`].
    pub fn check_agreement(&mut self) {
        self.mismatch |= self.pairs().into_iter().any(|pair| match pair {
            (Some(a), Some(b)) => !((a - b).abs() <= AGREEMENT_TOL * b.abs().max(1.0)),
            _ => false,
        });
    }

    /// Cells in [`COLUMNS`] order; missing values are empty.
    pub fn csv_cells(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map(machine_number).unwrap_or_default();
        let flag = |b: bool| b.to_string();
        let dist = self.number_distribution.as_ref().map(|d| {
            d.iter().map(|(k, p)| format!("{k}:{}", machine_number(*p))).collect::<Vec<_>>().join(";")
        });
        vec![
            self.label.clone(),
            self.kind.clone().unwrap_or_default(),
            self.n.map(|n| n.to_string()).unwrap_or_default(),
            num(self.eta),
            num(self.p),
            num(self.alpha),
            num(self.beta),
            num(self.width),
            num(self.gamma),
            num(self.phi),
            num(self.n_mean),
            num(self.n_mean_closed),
            num(self.n2_mean),
            num(self.n2_mean_closed),
            num(self.vacuum_prob),
            num(self.vacuum_prob_closed),
            num(self.qfi),
            num(self.qfi_closed),
            num(self.qfi_twirled),
            num(self.qfi_conditioned),
            num(self.qfi_conditioned_closed),
            num(self.qcrb_variance),
            num(self.cfi),
            num(self.power),
            num(self.power_closed),
            num(self.power_conditioned),
            num(self.power_conditioned_closed),
            num(self.optimal_error),
            num(self.sigma0_sq),
            num(self.loss_bound),
            num(self.no_click_prob),
            num(self.n_class_prob),
            num(self.two_n_class_prob),
            flag(self.wide_prior),
            flag(self.divergent_cfi),
            flag(self.mismatch),
            flag(self.failed),
            self.error.clone().unwrap_or_default(),
            dist.unwrap_or_default(),
        ]
    }

    fn human_cells(&self) -> Vec<String> {
        let mut cells = self.csv_cells();
        for (cell, name) in cells.iter_mut().zip(COLUMNS) {
            if *name == "number_distribution" {
                if let Some(d) = &self.number_distribution {
                    *cell = d.iter().map(|(k, p)| format!("{k}:{}", human_number(*p))).collect::<Vec<_>>().join(" ");
                }
            } else if let Ok(v) = cell.parse::<f64>() {
                if *name != "N" {
                    *cell = human_number(v);
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub version: String,
    pub command: String,
    pub config: RunConfig,
}

impl Meta {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Meta { version: env!("CARGO_PKG_VERSION").into(), command: command.into(), config: config.clone() }
    }
}

/// A command's result: `{meta, rows}`.
#[derive(Debug, Clone, Serialize)]
pub struct EstimationReport {
    pub meta: Meta,
    pub rows: Vec<ReportRow>,
}

impl EstimationReport {
    pub fn write_json<W: Write>(&self, out: W) -> CliResult<()> {
        serde_json::to_writer_pretty(out, self).map_err(std::io::Error::from)?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COLUMNS).map_err(csv_io)?;
        for row in &self.rows {
            w.write_record(row.csv_cells()).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Aligned columns, omitting columns that are empty in every row and the
    /// flag columns when no flag is set.
    pub fn write_table<W: Write>(&self, mut out: W) -> CliResult<()> {
        let cells: Vec<Vec<String>> = self.rows.iter().map(ReportRow::human_cells).collect();
        let shown: Vec<usize> = (0..COLUMNS.len())
            .filter(|&c| cells.iter().any(|r| !r[c].is_empty() && r[c] != "false"))
            .collect();
        let width: Vec<usize> = shown
            .iter()
            .map(|&c| cells.iter().map(|r| r[c].len()).chain([COLUMNS[c].len()]).max().unwrap_or(0))
            .collect();
        let line = |vals: Vec<&str>| -> String {
            vals.iter().zip(&width).map(|(v, w)| format!("{v:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
        };
        writeln!(out, "{}", line(shown.iter().map(|&c| COLUMNS[c]).collect()))?;
        for r in &cells {
            writeln!(out, "{}", line(shown.iter().map(|&c| r[c].as_str()).collect()))?;
        }
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formats() {
        assert_eq!(human_number(2.0 / 3.0), "0.666667");
        assert_eq!(human_number(4.0), "4");
        assert_eq!(human_number(123456.7), "123457");
        assert_eq!(human_number(1234567.8), "1.23457e6");
        assert_eq!(human_number(0.000123456789), "0.000123457");
        assert_eq!(machine_number(0.1).parse::<f64>().unwrap(), 0.1);
        let x = 0.313_725_490_196_078_4;
        assert_eq!(machine_number(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn empty_cells_for_missing_values() {
        let row = ReportRow { qfi: Some(4.0), ..ReportRow::labelled("x") };
        let cells = row.csv_cells();
        assert_eq!(cells.len(), COLUMNS.len());
        let i = COLUMNS.iter().position(|c| *c == "P").unwrap();
        assert_eq!(cells[i], "");
        let q = COLUMNS.iter().position(|c| *c == "qfi").unwrap();
        assert_eq!(cells[q], "4.0000000000000000e0");
    }

    #[test]
    fn agreement_flag() {
        let mut row = ReportRow { qfi: Some(4.0), qfi_closed: Some(4.0 + 1e-12), ..Default::default() };
        row.check_agreement();
        assert!(!row.mismatch);
        row.qfi_closed = Some(4.1);
        row.check_agreement();
        assert!(row.mismatch);
    }
}
