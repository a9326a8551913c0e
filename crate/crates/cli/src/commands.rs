//! The subcommands. Each returns a report; rendering is left to the caller.

use std::time::{SystemTime, UNIX_EPOCH};

use photon_metrology::bayes::{closed_form_power, metrological_power_with_tolerance, Prior, PriorKind};
use photon_metrology::counting::{
    event_class_summary, mach_zehnder_counting_povm, photon_counting_povm, sample_counts, CountingRecord,
    EventClassSummary,
};
use photon_metrology::frequentist::{
    cfi_with_tolerance, coherent_mix_qfi_closed, loss_bound, prob_mix_qfi_closed, qcrb_variance, qfi_mixed_with_tolerance,
    qfi_pure, Povm,
};
use photon_metrology::{Error, Probe, StateSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{PovmKind, RunConfig, SweepParam};
use crate::error::{CliError, CliResult};
use crate::report::{EstimationReport, Meta, ReportRow};

/// Analytic number statistics and QFI of a spec, where known.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClosedForms {
    pub n_mean: Option<f64>,
    pub n2_mean: Option<f64>,
    pub vacuum_prob: Option<f64>,
    pub qfi: Option<f64>,
    pub qfi_conditioned: Option<f64>,
}

pub fn closed_forms(spec: &StateSpec) -> ClosedForms {
    let sq = |x: f64| x * x;
    match *spec {
        StateSpec::Noon { n } => {
            let n = n as f64;
            ClosedForms {
                n_mean: Some(n),
                n2_mean: Some(n * n),
                vacuum_prob: Some(0.0),
                qfi: Some(n * n),
                qfi_conditioned: Some(n * n),
            }
        }
        StateSpec::VacuumFockSquared { n, eta } | StateSpec::RhoOns { n, eta } => {
            let (n, e2) = (n as f64, eta * eta);
            let d = sq(1.0 + e2);
            ClosedForms {
                n_mean: Some(2.0 * e2 * n / (1.0 + e2)),
                n2_mean: Some(2.0 * e2 * (1.0 + 2.0 * e2) * n * n / d),
                vacuum_prob: Some(1.0 / d),
                qfi: Some(2.0 * e2 * n * n / d),
                qfi_conditioned: Some(n * n / (1.0 + e2 / 2.0)),
            }
        }
        StateSpec::PsiOnn { n, eta } | StateSpec::RhoOnn { n, eta } => {
            let (n, e2) = (n as f64, eta * eta);
            let d = sq(1.0 + e2);
            ClosedForms {
                n_mean: Some(2.0 * e2 * n / d),
                n2_mean: Some(2.0 * e2 * n * n / d),
                vacuum_prob: Some((1.0 + e2 * e2) / d),
                qfi: Some(2.0 * e2 * n * n / d),
                qfi_conditioned: Some(n * n),
            }
        }
        StateSpec::MasterState { .. } | StateSpec::ProbMix { .. } if spec.is_master_family() => {
            let (n, alpha, beta) = spec.master_parameters().expect("master family");
            let n = n as f64;
            let rest = 1.0 - alpha - beta;
            ClosedForms {
                n_mean: Some(beta * n + rest * 2.0 * n),
                n2_mean: Some(beta * n * n + rest * 4.0 * n * n),
                vacuum_prob: Some(alpha),
                qfi: Some(beta * n * n),
                qfi_conditioned: (alpha < 1.0).then(|| beta * n * n / (1.0 - alpha)),
            }
        }
        StateSpec::ProbMix { ref inner, p } => match inner.build() {
            Ok(Probe::Pure(phi)) => {
                let vacuum = (1.0 - p) + p * phi.vacuum_overlap().norm_sqr();
                let qfi = prob_mix_qfi_closed(&phi, p).ok();
                ClosedForms {
                    vacuum_prob: Some(vacuum),
                    qfi,
                    qfi_conditioned: qfi.filter(|_| vacuum < 1.0).map(|f| f / (1.0 - vacuum)),
                    ..Default::default()
                }
            }
            _ => ClosedForms::default(),
        },
        StateSpec::CoherentProbMix { ref inner, p } => match inner.build() {
            Ok(Probe::Pure(phi)) => match coherent_mix_qfi_closed(&phi, p) {
                Ok(c) => ClosedForms {
                    vacuum_prob: Some(1.0 - p),
                    qfi: Some(c.value),
                    qfi_conditioned: (p > 0.0).then_some(c.conditioned),
                    ..Default::default()
                },
                Err(_) => ClosedForms::default(),
            },
            _ => ClosedForms::default(),
        },
        _ => ClosedForms::default(),
    }
}

fn eta_of(spec: &StateSpec) -> Option<f64> {
    match spec {
        StateSpec::VacuumFockSquared { eta, .. }
        | StateSpec::RhoOns { eta, .. }
        | StateSpec::RhoOnn { eta, .. }
        | StateSpec::PsiOnn { eta, .. } => Some(*eta),
        StateSpec::ProbMix { inner, .. } | StateSpec::CoherentProbMix { inner, .. } => eta_of(inner),
        _ => None,
    }
}

fn describe(row: &mut ReportRow, spec: &StateSpec) {
    row.kind = Some(spec.kind().into());
    row.n = spec.fock_number();
    row.eta = eta_of(spec);
    match spec {
        StateSpec::ProbMix { p, .. } | StateSpec::CoherentProbMix { p, .. } => row.p = Some(*p),
        StateSpec::MasterState { alpha, beta, .. } => {
            row.alpha = Some(*alpha);
            row.beta = Some(*beta);
        }
        _ => {}
    }
}

fn fill_stats(row: &mut ReportRow, probe: &Probe, closed: &ClosedForms) {
    row.n_mean = Some(probe.mean_total_number());
    row.n2_mean = Some(probe.mean_total_number_squared());
    row.vacuum_prob = Some(probe.vacuum_probability());
    row.n_mean_closed = closed.n_mean;
    row.n2_mean_closed = closed.n2_mean;
    row.vacuum_prob_closed = closed.vacuum_prob;
}

fn numeric_qfi(probe: &Probe, config: &RunConfig) -> CliResult<f64> {
    Ok(match probe {
        Probe::Pure(s) => qfi_pure(s)?.value,
        Probe::Mixed(r) => qfi_mixed_with_tolerance(r, config.phi, config.tolerances.eps_supp)?.value,
    })
}

fn fill_qfi(row: &mut ReportRow, probe: &Probe, closed: &ClosedForms, config: &RunConfig) -> CliResult<()> {
    let f = numeric_qfi(probe, config)?;
    row.phi = Some(config.phi);
    row.qfi = Some(f);
    row.qfi_closed = closed.qfi;
    let detection = 1.0 - probe.vacuum_probability();
    if detection > photon_metrology::NORM_TOL {
        row.qfi_conditioned = Some(f / detection);
        row.qfi_conditioned_closed = closed.qfi_conditioned;
    }
    row.qcrb_variance = Some(qcrb_variance(f, 1)?);
    Ok(())
}

pub fn povm_for(kind: PovmKind, n_max: u32) -> Povm {
    match kind {
        PovmKind::MachZehnder => mach_zehnder_counting_povm(n_max),
        PovmKind::Counting => photon_counting_povm(n_max),
    }
}

fn fill_cfi(row: &mut ReportRow, probe: &Probe, config: &RunConfig) -> CliResult<()> {
    let povm = povm_for(config.povm, probe.n_max());
    match cfi_with_tolerance(&probe.to_density(), config.phi, &povm, config.tolerances.eps_prob) {
        Ok(c) => row.cfi = Some(c),
        Err(Error::DivergentCfi { .. }) => row.divergent_cfi = true,
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

pub fn prior_of(config: &RunConfig) -> CliResult<Option<Prior>> {
    config.prior.clone().map(|k| Prior::new(k, config.tolerances.nodes).map_err(CliError::from)).transpose()
}

fn fill_bayes(row: &mut ReportRow, probe: &Probe, spec: &StateSpec, prior: &Prior, config: &RunConfig) -> CliResult<()> {
    let r = metrological_power_with_tolerance(probe, prior, config.tolerances.eps_supp)?;
    row.width = Some(prior.width());
    row.power = Some(r.power);
    row.optimal_error = Some(r.optimal_error);
    row.sigma0_sq = Some(r.sigma0_sq);
    row.wide_prior = r.wide_prior;
    if let (Some((n, alpha, beta)), PriorKind::Flat { width, .. }) = (spec.master_parameters(), prior.kind()) {
        if spec.is_master_family() {
            let closed = closed_form_power(n, alpha, beta, *width)?;
            row.power_closed = Some(closed);
            if alpha < 1.0 {
                row.power_conditioned_closed = Some(closed / (1.0 - alpha));
            }
        }
    }
    let detection = 1.0 - probe.vacuum_probability();
    if detection > photon_metrology::NORM_TOL {
        row.power_conditioned = Some(r.power / detection);
    }
    Ok(())
}

fn fill_classes(row: &mut ReportRow, spec: &StateSpec) {
    if let Ok(classes) = event_class_summary(spec) {
        row.no_click_prob = Some(classes[0].probability);
        row.n_class_prob = Some(classes[1].probability);
        row.two_n_class_prob = Some(classes[2].probability);
    }
}

fn spec_row(spec: &StateSpec) -> CliResult<(ReportRow, Probe, ClosedForms)> {
    let probe = spec.build()?;
    let mut row = ReportRow::labelled(spec.kind());
    describe(&mut row, spec);
    let closed = closed_forms(spec);
    fill_stats(&mut row, &probe, &closed);
    Ok((row, probe, closed))
}

/// Number statistics and total-number distribution.
pub fn cmd_state_info(config: &RunConfig) -> CliResult<EstimationReport> {
    let spec = config.spec()?;
    let (mut row, probe, _) = spec_row(spec)?;
    row.number_distribution = Some(probe.total_number_distribution());
    fill_classes(&mut row, spec);
    row.check_agreement();
    Ok(EstimationReport { meta: Meta::new("state-info", config), rows: vec![row] })
}

/// The three families of the conditioned-QFI comparison at `(N, eta)`: N00N,
/// the vacuum-Fock square and its twirl, and the folded state and its twirl.
/// Every column is computed numerically; closed forms sit alongside.
pub fn cmd_table1(n: u32, eta: f64, config: &RunConfig) -> CliResult<EstimationReport> {
    if n == 0 {
        return Err(CliError::validation("N must be at least 1"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(CliError::validation(format!("eta must be positive, got {eta}")));
    }
    let families = [
        ("noon", StateSpec::Noon { n }),
        ("vacuum_fock_squared / rho_ons", StateSpec::VacuumFockSquared { n, eta }),
        ("psi_onn / rho_onn", StateSpec::PsiOnn { n, eta }),
    ];
    let mut rows = Vec::with_capacity(3);
    for (label, spec) in families {
        let (mut row, probe, closed) = spec_row(&spec)?;
        row.label = label.into();
        row.eta = Some(eta);
        fill_qfi(&mut row, &probe, &closed, config)?;
        let twirled = probe.twirl_total_number();
        row.qfi_twirled = Some(qfi_mixed_with_tolerance(&twirled, config.phi, config.tolerances.eps_supp)?.value);
        row.check_agreement();
        rows.push(row);
    }
    Ok(EstimationReport { meta: Meta::new("table1", config), rows })
}

fn qfi_row(spec: &StateSpec, config: &RunConfig) -> CliResult<(ReportRow, Probe)> {
    let (mut row, probe, closed) = spec_row(spec)?;
    fill_qfi(&mut row, &probe, &closed, config)?;
    fill_cfi(&mut row, &probe, config)?;
    Ok((row, probe))
}

pub fn cmd_qfi(config: &RunConfig) -> CliResult<EstimationReport> {
    let (mut row, _) = qfi_row(config.spec()?, config)?;
    row.check_agreement();
    Ok(EstimationReport { meta: Meta::new("qfi", config), rows: vec![row] })
}

pub fn cmd_bayes(config: &RunConfig) -> CliResult<EstimationReport> {
    let spec = config.spec()?;
    let prior = prior_of(config)?.ok_or_else(|| CliError::validation("bayes needs a prior (--prior-width)"))?;
    let (mut row, probe, _) = spec_row(spec)?;
    fill_bayes(&mut row, &probe, spec, &prior, config)?;
    row.check_agreement();
    Ok(EstimationReport { meta: Meta::new("bayes", config), rows: vec![row] })
}

/// Loss bound next to the lossless QFI of the state, if one is given.
pub fn cmd_loss(config: &RunConfig) -> CliResult<EstimationReport> {
    let gamma = config.gamma.ok_or_else(|| CliError::validation("loss needs --gamma"))?;
    let mut row = match (&config.spec, config.n_mean) {
        (Some(spec), _) => {
            let (mut row, probe, closed) = spec_row(spec)?;
            fill_qfi(&mut row, &probe, &closed, config)?;
            row
        }
        (None, Some(_)) => ReportRow::labelled("loss"),
        (None, None) => return Err(CliError::validation("loss needs a state or --n-mean")),
    };
    if let Some(n_mean) = config.n_mean {
        row.n_mean = Some(n_mean);
    }
    row.gamma = Some(gamma);
    row.loss_bound = Some(loss_bound(row.n_mean.unwrap_or(0.0), gamma)?);
    row.check_agreement();
    Ok(EstimationReport { meta: Meta::new("loss", config), rows: vec![row] })
}

fn sweep_label(param: SweepParam, value: f64) -> String {
    let name = match param {
        SweepParam::Eta => "eta",
        SweepParam::N => "N",
        SweepParam::W => "W",
        SweepParam::P => "p",
        SweepParam::Gamma => "gamma",
    };
    format!("{name}={}", crate::report::human_number(value))
}

/// Every quantity the configuration allows for one grid point.
fn full_row(config: &RunConfig) -> CliResult<ReportRow> {
    let spec = config.spec()?;
    let (mut row, probe) = qfi_row(spec, config)?;
    if let Some(prior) = prior_of(config)? {
        fill_bayes(&mut row, &probe, spec, &prior, config)?;
    }
    if let Some(gamma) = config.gamma {
        row.gamma = Some(gamma);
        row.loss_bound = Some(loss_bound(probe.mean_total_number(), gamma)?);
    }
    fill_classes(&mut row, spec);
    row.check_agreement();
    Ok(row)
}

/// One row per grid value, in grid order. Rows are evaluated in parallel; a
/// failing point yields a flagged row rather than aborting the sweep.
pub fn cmd_sweep(config: &RunConfig) -> CliResult<EstimationReport> {
    let sweep = config.sweep.as_ref().ok_or_else(|| CliError::validation("sweep needs --sweep and a grid"))?;
    sweep.validate()?;
    config.spec()?;
    let rows = sweep
        .values
        .par_iter()
        .map(|&v| {
            let label = sweep_label(sweep.parameter, v);
            match config.at(sweep.parameter, v).and_then(|c| {
                c.validate()?;
                full_row(&c)
            }) {
                Ok(mut row) => {
                    row.label = label;
                    row
                }
                Err(e) => ReportRow::failure(label, e.to_string()),
            }
        })
        .collect();
    Ok(EstimationReport { meta: Meta::new("sweep", config), rows })
}

pub const DEFAULT_SHOTS: u64 = 10_000;

#[derive(Debug, Clone, Serialize)]
pub struct SampleReport {
    pub meta: Meta,
    pub n_mean: f64,
    pub record: CountingRecord,
    /// Detection-event classes, for the vacuum-Fock families.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<EventClassSummary>>,
}

pub fn cmd_sample(config: &RunConfig) -> CliResult<SampleReport> {
    let spec = config.spec()?;
    let shots = config.shots.unwrap_or(DEFAULT_SHOTS);
    if shots == 0 {
        return Err(CliError::validation("shots must be at least 1"));
    }
    let seed = config.seed.unwrap_or_else(|| {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0)
    });
    let probe = spec.build()?;
    let povm = povm_for(config.povm, probe.n_max());
    let record = sample_counts(&probe, config.phi, &povm, shots, seed)?;
    let mut used = config.clone();
    used.seed = Some(seed);
    used.shots = Some(shots);
    Ok(SampleReport {
        meta: Meta::new("sample", &used),
        n_mean: probe.mean_total_number(),
        record,
        classes: event_class_summary(spec).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(spec: StateSpec) -> RunConfig {
        RunConfig { spec: Some(spec), ..Default::default() }
    }

    #[test]
    fn state_info_examples() {
        let r = cmd_state_info(&config(StateSpec::RhoOns { n: 2, eta: 1.0 })).unwrap();
        let row = &r.rows[0];
        assert!((row.n_mean.unwrap() - 2.0).abs() < 1e-12);
        assert!((row.vacuum_prob.unwrap() - 0.25).abs() < 1e-12);
        assert!(!row.mismatch);
        let r = cmd_state_info(&config(StateSpec::Noon { n: 5 })).unwrap();
        assert!((r.rows[0].n_mean.unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(r.rows[0].vacuum_prob, Some(0.0));
        let r = cmd_state_info(&config(StateSpec::VacuumFockSquared { n: 3, eta: 0.1 })).unwrap();
        assert!((r.rows[0].n_mean.unwrap() - 0.06 / 1.01).abs() < 1e-12);
    }

    #[test]
    fn table1_example() {
        let r = cmd_table1(2, 1.0, &RunConfig::default()).unwrap();
        let cond: Vec<f64> = r.rows.iter().map(|r| r.qfi_conditioned.unwrap()).collect();
        assert!((cond[0] - 4.0).abs() < 1e-9 && (cond[1] - 4.0 / 1.5).abs() < 1e-9 && (cond[2] - 4.0).abs() < 1e-9);
        assert!(r.rows.iter().all(|r| !r.mismatch));
        assert!(cmd_table1(0, 1.0, &RunConfig::default()).is_err());
    }

    #[test]
    fn bayes_needs_prior() {
        let err = cmd_bayes(&config(StateSpec::Noon { n: 2 })).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn loss_without_state() {
        let c = RunConfig { gamma: Some(0.5), n_mean: Some(2.0), ..Default::default() };
        assert_eq!(cmd_loss(&c).unwrap().rows[0].loss_bound, Some(2.0));
        let c = RunConfig { gamma: Some(1.5), n_mean: Some(2.0), ..Default::default() };
        assert_eq!(cmd_loss(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn sweep_flags_failing_rows() {
        let mut c = config(StateSpec::ProbMix { inner: Box::new(StateSpec::Noon { n: 2 }), p: 0.5 });
        c.sweep = Some(crate::config::SweepConfig { parameter: SweepParam::P, values: vec![0.2, 0.9, 1.5] });
        let r = cmd_sweep(&c).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(!r.rows[0].failed && !r.rows[1].failed && r.rows[2].failed);
        assert_eq!(r.rows[1].label, "p=0.9");
        assert!((r.rows[1].qfi.unwrap() - 0.9 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn sample_rejects_zero_shots() {
        let mut c = config(StateSpec::RhoOns { n: 4, eta: 0.1 });
        c.shots = Some(0);
        assert_eq!(cmd_sample(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn closed_forms_of_master_family_match_named() {
        let (n, eta) = (3, 0.8);
        let spec = StateSpec::RhoOns { n, eta };
        let (_, alpha, beta) = spec.master_parameters().unwrap();
        let a = closed_forms(&spec);
        let b = closed_forms(&StateSpec::MasterState { n, alpha, beta });
        for (x, y) in [(a.n_mean, b.n_mean), (a.n2_mean, b.n2_mean), (a.qfi, b.qfi), (a.qfi_conditioned, b.qfi_conditioned)] {
            assert!((x.unwrap() - y.unwrap()).abs() < 1e-12);
        }
    }
}
