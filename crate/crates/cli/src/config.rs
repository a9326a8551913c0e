//! Run configuration: a JSON document merged with command-line flags, flags
//! taking precedence.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use photon_metrology::bayes::{PriorKind, DEFAULT_NODES};
use photon_metrology::{StateSpec, EPS_PROB, EPS_SUPP};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

/// Measurement used for classical Fisher information and sampling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PovmKind {
    /// Photon counting after a balanced beam splitter.
    #[default]
    MachZehnder,
    /// Photon counting directly on the two arms.
    Counting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum SweepParam {
    #[serde(rename = "eta")]
    #[value(name = "eta")]
    Eta,
    #[serde(rename = "N")]
    #[value(name = "N", alias = "n")]
    N,
    #[serde(rename = "W")]
    #[value(name = "W", alias = "w")]
    W,
    #[serde(rename = "p")]
    #[value(name = "p")]
    P,
    #[serde(rename = "gamma")]
    #[value(name = "gamma")]
    Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
}

impl SweepConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.values.is_empty() {
            return Err(CliError::validation("sweep grid is empty"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::validation("sweep grid must be finite"));
        }
        let inc = self.values.windows(2).all(|w| w[1] > w[0]);
        let dec = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return Err(CliError::validation("sweep grid must be strictly monotone"));
        }
        if self.parameter == SweepParam::N && self.values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
            return Err(CliError::validation("sweep over N needs positive integers"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub eps_supp: f64,
    pub eps_prob: f64,
    pub nodes: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eps_supp: EPS_SUPP, eps_prob: EPS_PROB, nodes: DEFAULT_NODES }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<StateSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    pub output: OutputConfig,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Phase at which local quantities are evaluated.
    pub phi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    /// Mean photon number for the loss bound when no state is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_mean: Option<f64>,
    pub povm: PovmKind,
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> CliResult<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_json_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn spec(&self) -> CliResult<&StateSpec> {
        self.spec.as_ref().ok_or_else(|| CliError::validation("no state given (use --spec or a config file)"))
    }

    /// Flags over this configuration.
    pub fn merge(&mut self, ov: &Overrides) -> CliResult<()> {
        if let Some(kind) = &ov.spec {
            let ov = seed_swept(ov)?;
            self.spec = Some(spec_from_flags(kind, &ov, self.spec.as_ref())?);
        } else if let Some(spec) = self.spec.as_mut() {
            patch_spec(spec, ov.n, ov.eta, ov.p, ov.alpha, ov.beta)?;
        }
        if ov.prior_width.is_some() || ov.prior_center.is_some() {
            let (c0, w0) = match &self.prior {
                Some(PriorKind::Flat { center, width }) => (*center, Some(*width)),
                _ => (0.0, None),
            };
            let width = ov
                .prior_width
                .or(w0)
                .ok_or_else(|| CliError::validation("--prior-center needs --prior-width"))?;
            self.prior = Some(PriorKind::Flat { center: ov.prior_center.unwrap_or(c0), width });
        }
        if let Some(param) = ov.sweep {
            let values = match (&ov.values, &ov.range) {
                (Some(v), _) => parse_values(v)?,
                (None, Some(r)) => parse_range(r)?,
                (None, None) => match &self.sweep {
                    Some(s) => s.values.clone(),
                    None => return Err(CliError::validation("--sweep needs --values or --range")),
                },
            };
            self.sweep = Some(SweepConfig { parameter: param, values });
        } else if let (Some(s), Some(v)) = (self.sweep.as_mut(), &ov.values) {
            s.values = parse_values(v)?;
        } else if let (Some(s), Some(r)) = (self.sweep.as_mut(), &ov.range) {
            s.values = parse_range(r)?;
        }
        macro_rules! take {
            ($field:ident, $dst:expr) => {
                if let Some(v) = ov.$field.clone() {
                    $dst = v;
                }
            };
        }
        take!(phi, self.phi);
        take!(format, self.output.format);
        take!(povm, self.povm);
        take!(nodes, self.tolerances.nodes);
        take!(eps_supp, self.tolerances.eps_supp);
        take!(eps_prob, self.tolerances.eps_prob);
        if ov.out.is_some() {
            self.output.path = ov.out.clone();
        }
        if ov.gamma.is_some() {
            self.gamma = ov.gamma;
        }
        if ov.shots.is_some() {
            self.shots = ov.shots;
        }
        if ov.seed.is_some() {
            self.seed = ov.seed;
        }
        if ov.n_mean.is_some() {
            self.n_mean = ov.n_mean;
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        if let Some(spec) = &self.spec {
            spec.validate()?;
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        let t = &self.tolerances;
        if !(t.eps_supp > 0.0 && t.eps_prob > 0.0) {
            return Err(CliError::validation("tolerances must be positive"));
        }
        if t.nodes < 2 {
            return Err(CliError::validation("quadrature needs at least 2 nodes"));
        }
        if !self.phi.is_finite() {
            return Err(CliError::validation("phi must be finite"));
        }
        Ok(())
    }

    /// Copy with one sweep parameter set to `value`.
    pub fn at(&self, param: SweepParam, value: f64) -> CliResult<RunConfig> {
        let mut c = self.clone();
        c.sweep = None;
        match param {
            SweepParam::Eta => patch_spec(spec_mut(&mut c)?, None, Some(value), None, None, None)?,
            SweepParam::N => patch_spec(spec_mut(&mut c)?, Some(value as u32), None, None, None, None)?,
            SweepParam::P => patch_spec(spec_mut(&mut c)?, None, None, Some(value), None, None)?,
            SweepParam::Gamma => c.gamma = Some(value),
            SweepParam::W => {
                let center = match &c.prior {
                    Some(PriorKind::Flat { center, .. }) => *center,
                    Some(PriorKind::Tabulated { .. }) => {
                        return Err(CliError::validation("sweeping W needs a flat prior"));
                    }
                    None => 0.0,
                };
                c.prior = Some(PriorKind::Flat { center, width: value });
            }
        }
        Ok(c)
    }
}

fn spec_mut(c: &mut RunConfig) -> CliResult<&mut StateSpec> {
    c.spec.as_mut().ok_or_else(|| CliError::validation("sweep needs a state"))
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// State family: noon, vacuum_fock_squared, rho_ons, rho_onn, psi_onn,
    /// master_state, prob_mix, coherent_prob_mix.
    #[arg(long, global = true)]
    pub spec: Option<String>,
    /// Fock number of the phase-sensitive component.
    #[arg(long = "N", alias = "n", global = true)]
    pub n: Option<u32>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    /// Usage probability of the mixed families.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Inner family for prob_mix and coherent_prob_mix (default noon).
    #[arg(long, global = true)]
    pub inner: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Width of a flat prior.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub prior_width: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub prior_center: Option<f64>,
    /// Fractional loss rate.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Mean photon number for the loss bound.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub n_mean: Option<f64>,
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Quadrature nodes for prior averages.
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub eps_supp: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub eps_prob: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub povm: Option<PovmKind>,
    #[arg(long, global = true, value_enum)]
    pub sweep: Option<SweepParam>,
    /// Comma-separated sweep grid.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub values: Option<String>,
    /// Sweep grid as `start:stop:count`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub range: Option<String>,
}

pub fn parse_values(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::validation(format!("bad grid value `{s}`"))))
        .collect()
}

/// `start:stop:count`, endpoints included.
pub fn parse_range(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::validation(format!("bad range `{text}`, expected start:stop:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    match count {
        0 => Err(bad()),
        1 => Ok(vec![start]),
        _ => Ok((0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect()),
    }
}

/// A swept spec parameter need not be given on its own; the first usable
/// grid value stands in until each row overwrites it.
fn seed_swept(ov: &Overrides) -> CliResult<Overrides> {
    let mut ov = ov.clone();
    let values = match (ov.sweep, &ov.values, &ov.range) {
        (Some(_), Some(v), _) => parse_values(v)?,
        (Some(_), None, Some(r)) => parse_range(r)?,
        _ => return Ok(ov),
    };
    let first = values.iter().copied().find(|v| v.is_finite() && *v > 0.0);
    match ov.sweep {
        Some(SweepParam::Eta) if ov.eta.is_none() => ov.eta = first,
        Some(SweepParam::P) if ov.p.is_none() => ov.p = first.filter(|v| *v <= 1.0),
        Some(SweepParam::N) if ov.n.is_none() => ov.n = first.filter(|v| v.fract() == 0.0).map(|v| v as u32),
        _ => {}
    }
    Ok(ov)
}

fn normalize_kind(kind: &str) -> String {
    kind.trim().to_ascii_lowercase().replace('-', "_")
}

fn require<T>(v: Option<T>, flag: &str, kind: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::validation(format!("--{flag} is required for spec {kind}")))
}

fn spec_from_flags(kind: &str, ov: &Overrides, base: Option<&StateSpec>) -> CliResult<StateSpec> {
    let kind = normalize_kind(kind);
    let n = ov.n.or_else(|| base.and_then(StateSpec::fock_number));
    let named = |kind: &str| -> CliResult<StateSpec> {
        let n = require(n, "N", kind)?;
        Ok(match kind {
            "noon" => StateSpec::Noon { n },
            "vacuum_fock_squared" => StateSpec::VacuumFockSquared { n, eta: require(ov.eta, "eta", kind)? },
            "rho_ons" => StateSpec::RhoOns { n, eta: require(ov.eta, "eta", kind)? },
            "rho_onn" => StateSpec::RhoOnn { n, eta: require(ov.eta, "eta", kind)? },
            "psi_onn" => StateSpec::PsiOnn { n, eta: require(ov.eta, "eta", kind)? },
            "master_state" => StateSpec::MasterState {
                n,
                alpha: require(ov.alpha, "alpha", kind)?,
                beta: require(ov.beta, "beta", kind)?,
            },
            other => return Err(CliError::validation(format!("unknown spec `{other}`"))),
        })
    };
    match kind.as_str() {
        "prob_mix" | "coherent_prob_mix" => {
            let inner = Box::new(named(&normalize_kind(ov.inner.as_deref().unwrap_or("noon")))?);
            let p = require(ov.p, "p", &kind)?;
            Ok(if kind == "prob_mix" {
                StateSpec::ProbMix { inner, p }
            } else {
                StateSpec::CoherentProbMix { inner, p }
            })
        }
        other => named(other),
    }
}

/// Overwrites the parameters of `spec` that the flags supply.
pub fn patch_spec(
    spec: &mut StateSpec,
    n: Option<u32>,
    eta: Option<f64>,
    p: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> CliResult<()> {
    let unused = |flag: &str, spec: &StateSpec| {
        CliError::validation(format!("--{flag} does not apply to spec {}", spec.kind()))
    };
    match spec {
        StateSpec::Noon { n: sn } => {
            if let Some(v) = n {
                *sn = v;
            }
            if eta.is_some() {
                return Err(unused("eta", spec));
            }
        }
        StateSpec::VacuumFockSquared { n: sn, eta: se }
        | StateSpec::RhoOns { n: sn, eta: se }
        | StateSpec::RhoOnn { n: sn, eta: se }
        | StateSpec::PsiOnn { n: sn, eta: se } => {
            if let Some(v) = n {
                *sn = v;
            }
            if let Some(v) = eta {
                *se = v;
            }
        }
        StateSpec::MasterState { n: sn, alpha: sa, beta: sb } => {
            if let Some(v) = n {
                *sn = v;
            }
            if let Some(v) = alpha {
                *sa = v;
            }
            if let Some(v) = beta {
                *sb = v;
            }
            if eta.is_some() {
                return Err(unused("eta", spec));
            }
        }
        StateSpec::ProbMix { inner, p: sp } | StateSpec::CoherentProbMix { inner, p: sp } => {
            if let Some(v) = p {
                *sp = v;
            }
            return patch_spec(inner, n, eta, None, alpha, beta);
        }
        StateSpec::Custom { .. } => {
            if n.is_some() || eta.is_some() {
                return Err(unused(if n.is_some() { "N" } else { "eta" }, spec));
            }
        }
    }
    if p.is_some() && !matches!(spec, StateSpec::ProbMix { .. } | StateSpec::CoherentProbMix { .. }) {
        return Err(unused("p", spec));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::from_json_str("{}").unwrap();
        assert_eq!(c.tolerances.nodes, 200);
        assert_eq!(c.tolerances.eps_supp, 1e-10);
        assert_eq!(c.tolerances.eps_prob, 1e-12);
        assert_eq!(c.output.format, Format::Table);
        assert!(RunConfig::from_json_str(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let mut c = RunConfig::from_json_str(
            r#"{"spec": {"kind": "rho_ons", "n": 2, "eta": 0.5}, "prior": {"kind": "flat", "center": 0.1, "width": 1.0}}"#,
        )
        .unwrap();
        let ov = Overrides { eta: Some(0.9), prior_width: Some(0.5), ..Default::default() };
        c.merge(&ov).unwrap();
        assert_eq!(c.spec, Some(StateSpec::RhoOns { n: 2, eta: 0.9 }));
        assert_eq!(c.prior, Some(PriorKind::Flat { center: 0.1, width: 0.5 }));
    }

    #[test]
    fn spec_from_flag_set() {
        let mut c = RunConfig::default();
        let ov = Overrides { spec: Some("prob-mix".into()), n: Some(3), p: Some(0.2), ..Default::default() };
        c.merge(&ov).unwrap();
        assert_eq!(c.spec, Some(StateSpec::ProbMix { inner: Box::new(StateSpec::Noon { n: 3 }), p: 0.2 }));
        let ov = Overrides { spec: Some("rho_ons".into()), n: Some(3), ..Default::default() };
        assert!(matches!(RunConfig::default().merge(&ov), Err(CliError::Validation(_))));
    }

    #[test]
    fn grids() {
        assert_eq!(parse_range("0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_values("1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(parse_range("0:1").is_err());
        let s = SweepConfig { parameter: SweepParam::Eta, values: vec![0.1, 0.1] };
        assert!(s.validate().is_err());
        let s = SweepConfig { parameter: SweepParam::N, values: vec![1.0, 2.5] };
        assert!(s.validate().is_err());
        let s = SweepConfig { parameter: SweepParam::W, values: vec![] };
        assert!(s.validate().is_err());
    }

    #[test]
    fn sweep_point_config() {
        let mut c = RunConfig { spec: Some(StateSpec::RhoOns { n: 2, eta: 0.5 }), ..Default::default() };
        c.sweep = Some(SweepConfig { parameter: SweepParam::W, values: vec![0.5, 1.0] });
        let at = c.at(SweepParam::W, 1.0).unwrap();
        assert_eq!(at.prior, Some(PriorKind::Flat { center: 0.0, width: 1.0 }));
        assert!(at.sweep.is_none());
        let at = c.at(SweepParam::N, 4.0).unwrap();
        assert_eq!(at.spec, Some(StateSpec::RhoOns { n: 4, eta: 0.5 }));
        assert!(c.at(SweepParam::P, 0.3).is_err());
    }

    #[test]
    fn sweep_param_names() {
        let s: SweepConfig = serde_json::from_str(r#"{"parameter": "N", "values": [1, 2]}"#).unwrap();
        assert_eq!(s.parameter, SweepParam::N);
    }
}
