//! Named probe families and their construction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityOperator, FockIndex, HermitianOperator, Probe, PureState};
use crate::RENORMALIZE_LIMIT;

/// Description of a probe state.
///
/// `n` is the Fock number of the phase-sensitive component, `eta` the
/// amplitude ratio of the vacuum-Fock superpositions, `p` a usage
/// probability and `alpha`, `beta` the vacuum and N00N weights of the
/// master family `alpha |00><00| + beta |N00N><N00N| + (1 - alpha - beta) |NN><NN|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    /// `(|N0> + |0N>) / sqrt(2)`.
    Noon { n: u32 },
    /// `(|0> + eta |N>)^{(x)2} / (1 + eta^2)`.
    VacuumFockSquared { n: u32, eta: f64 },
    /// Total-number twirl of [`StateSpec::VacuumFockSquared`].
    RhoOns { n: u32, eta: f64 },
    /// [`StateSpec::RhoOns`] with the `|NN>` component folded into vacuum.
    RhoOnn { n: u32, eta: f64 },
    /// Coherent counterpart of [`StateSpec::RhoOnn`].
    PsiOnn { n: u32, eta: f64 },
    MasterState { n: u32, alpha: f64, beta: f64 },
    /// `(1 - p) |00><00| + p rho_inner`.
    ProbMix { inner: Box<StateSpec>, p: f64 },
    /// `sqrt(1 - p) |00> + sqrt(p) |phi>`, requires `<00|phi> = 0`.
    CoherentProbMix { inner: Box<StateSpec>, p: f64 },
    /// User-supplied amplitudes or density-matrix entries.
    Custom {
        n_max: u32,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        amplitudes: Vec<AmplitudeEntry>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        entries: Vec<MatrixEntry>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEntry {
    pub index: FockIndex,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// One matrix element `<i|A|j>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub i: FockIndex,
    pub j: FockIndex,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// JSON form of a constructed state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub kind: String,
    pub parameters: serde_json::Value,
    pub n_max: u32,
    pub pure: bool,
    pub entries: Vec<MatrixEntry>,
}

impl StateRecord {
    pub fn new(spec: &StateSpec, probe: &Probe) -> Self {
        let mut parameters = serde_json::to_value(spec).unwrap_or(serde_json::Value::Null);
        if let Some(obj) = parameters.as_object_mut() {
            obj.remove("kind");
        }
        StateRecord {
            kind: spec.kind().to_string(),
            parameters,
            n_max: probe.n_max(),
            pure: probe.is_pure(),
            entries: operator_entries(probe.to_density().as_operator()),
        }
    }

    /// Rebuilds the density operator described by the record.
    pub fn density(&self) -> Result<DensityOperator> {
        let op = HermitianOperator::from_entries(
            self.n_max,
            self.entries.iter().map(|e| (e.i, e.j, Complex64::new(e.re, e.im))),
        )?;
        DensityOperator::new(op)
    }
}

/// Upper-triangle entries of an operator in storage order.
pub fn operator_entries(op: &HermitianOperator) -> Vec<MatrixEntry> {
    op.iter().map(|(i, j, v)| MatrixEntry { i, j, re: v.re, im: v.im }).collect()
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        Err(Error::invalid("N must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("eta must be positive and finite, got {eta}")))
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("p must lie in [0, 1], got {p}")))
    }
}

fn check_master_weights(alpha: f64, beta: f64) -> Result<()> {
    if alpha >= 0.0 && beta >= 0.0 && alpha + beta <= 1.0 + RENORMALIZE_LIMIT {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "master-state weights need alpha, beta >= 0 and alpha + beta <= 1, got ({alpha}, {beta})"
        )))
    }
}

/// Weights `(alpha, beta)` of the vacuum-Fock families viewed as master states.
fn vacuum_fock_weights(eta: f64, fold_nn_into_vacuum: bool) -> (f64, f64) {
    let d = (1.0 + eta * eta).powi(2);
    let beta = 2.0 * eta * eta / d;
    let alpha = if fold_nn_into_vacuum { (1.0 + eta.powi(4)) / d } else { 1.0 / d };
    (alpha, beta)
}

impl StateSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            StateSpec::Noon { .. } => "noon",
            StateSpec::VacuumFockSquared { .. } => "vacuum_fock_squared",
            StateSpec::RhoOns { .. } => "rho_ons",
            StateSpec::RhoOnn { .. } => "rho_onn",
            StateSpec::PsiOnn { .. } => "psi_onn",
            StateSpec::MasterState { .. } => "master_state",
            StateSpec::ProbMix { .. } => "prob_mix",
            StateSpec::CoherentProbMix { .. } => "coherent_prob_mix",
            StateSpec::Custom { .. } => "custom",
        }
    }

    /// Checks parameter ranges without building the state.
    pub fn validate(&self) -> Result<()> {
        match self {
            StateSpec::Noon { n } => check_n(*n),
            StateSpec::VacuumFockSquared { n, eta }
            | StateSpec::RhoOns { n, eta }
            | StateSpec::RhoOnn { n, eta }
            | StateSpec::PsiOnn { n, eta } => check_n(*n).and_then(|_| check_eta(*eta)),
            StateSpec::MasterState { n, alpha, beta } => {
                check_n(*n).and_then(|_| check_master_weights(*alpha, *beta))
            }
            StateSpec::ProbMix { inner, p } | StateSpec::CoherentProbMix { inner, p } => {
                check_probability(*p).and_then(|_| inner.validate())
            }
            StateSpec::Custom { amplitudes, entries, .. } => match (amplitudes.is_empty(), entries.is_empty()) {
                (false, true) | (true, false) => Ok(()),
                _ => Err(Error::invalid("custom state needs exactly one of `amplitudes` or `entries`")),
            },
        }
    }

    /// Largest single-mode occupation appearing in the state.
    pub fn n_max(&self) -> u32 {
        match self {
            StateSpec::Noon { n }
            | StateSpec::VacuumFockSquared { n, .. }
            | StateSpec::RhoOns { n, .. }
            | StateSpec::RhoOnn { n, .. }
            | StateSpec::PsiOnn { n, .. }
            | StateSpec::MasterState { n, .. } => *n,
            StateSpec::ProbMix { inner, .. } | StateSpec::CoherentProbMix { inner, .. } => inner.n_max(),
            StateSpec::Custom { n_max, .. } => *n_max,
        }
    }

    /// Fock number of the phase-sensitive component for the named families.
    pub fn fock_number(&self) -> Option<u32> {
        match self {
            StateSpec::Noon { n }
            | StateSpec::VacuumFockSquared { n, .. }
            | StateSpec::RhoOns { n, .. }
            | StateSpec::RhoOnn { n, .. }
            | StateSpec::PsiOnn { n, .. }
            | StateSpec::MasterState { n, .. } => Some(*n),
            StateSpec::ProbMix { inner, .. } | StateSpec::CoherentProbMix { inner, .. } => inner.fock_number(),
            StateSpec::Custom { .. } => None,
        }
    }

    /// `(N, alpha, beta)` when the state (or its total-number twirl) belongs to
    /// the master family.
    pub fn master_parameters(&self) -> Option<(u32, f64, f64)> {
        match *self {
            StateSpec::Noon { n } => Some((n, 0.0, 1.0)),
            StateSpec::RhoOns { n, eta } | StateSpec::VacuumFockSquared { n, eta } => {
                let (a, b) = vacuum_fock_weights(eta, false);
                Some((n, a, b))
            }
            StateSpec::RhoOnn { n, eta } | StateSpec::PsiOnn { n, eta } => {
                let (a, b) = vacuum_fock_weights(eta, true);
                Some((n, a, b))
            }
            StateSpec::MasterState { n, alpha, beta } => Some((n, alpha, beta)),
            StateSpec::ProbMix { ref inner, p } => match inner.as_ref() {
                StateSpec::Noon { n } => Some((*n, 1.0 - p, p)),
                _ => None,
            },
            _ => None,
        }
    }

    /// Whether the constructed state is itself in the master family (as
    /// opposed to only its twirl).
    pub fn is_master_family(&self) -> bool {
        !matches!(self, StateSpec::VacuumFockSquared { .. } | StateSpec::PsiOnn { .. })
            && self.master_parameters().is_some()
    }

    /// Builds the state. Pure specs give [`Probe::Pure`], mixtures give
    /// [`Probe::Mixed`].
    pub fn build(&self) -> Result<Probe> {
        make_state(self)
    }
}

pub fn noon(n: u32) -> Result<PureState> {
    check_n(n)?;
    let a = std::f64::consts::FRAC_1_SQRT_2;
    PureState::from_real(n, [(FockIndex::new(n, 0), a), (FockIndex::new(0, n), a)])
}

/// Master-family state `alpha |00><00| + beta |N00N><N00N| + (1-alpha-beta) |NN><NN|`.
pub fn master_state(n: u32, alpha: f64, beta: f64) -> Result<DensityOperator> {
    check_n(n)?;
    check_master_weights(alpha, beta)?;
    let vacuum = PureState::basis_state(n, FockIndex::VACUUM)?.projector();
    let both = PureState::basis_state(n, FockIndex::new(n, n))?.projector();
    let noon = noon(n)?.projector();
    let rest = (1.0 - alpha - beta).max(0.0);
    let parts = [(alpha, &vacuum), (beta, &noon), (rest, &both)];
    DensityOperator::mixture(n, parts.into_iter().filter(|(w, _)| *w > 0.0))
}

/// Every single-mode occupation pattern of `(|0> + eta|N>)^{(x)2} / (1 + eta^2)`.
fn vacuum_fock_squared(n: u32, eta: f64) -> Result<PureState> {
    let d = 1.0 + eta * eta;
    PureState::from_real(
        n,
        [
            (FockIndex::VACUUM, 1.0 / d),
            (FockIndex::new(n, 0), eta / d),
            (FockIndex::new(0, n), eta / d),
            (FockIndex::new(n, n), eta * eta / d),
        ],
    )
}

fn psi_onn(n: u32, eta: f64) -> Result<PureState> {
    let d = 1.0 + eta * eta;
    let vac = (1.0 + eta.powi(4)).sqrt() / d;
    let side = eta / d;
    PureState::from_real(
        n,
        [(FockIndex::VACUUM, vac), (FockIndex::new(n, 0), side), (FockIndex::new(0, n), side)],
    )
}

pub fn make_state(spec: &StateSpec) -> Result<Probe> {
    spec.validate()?;
    Ok(match spec {
        StateSpec::Noon { n } => noon(*n)?.into(),
        StateSpec::VacuumFockSquared { n, eta } => vacuum_fock_squared(*n, *eta)?.into(),
        StateSpec::PsiOnn { n, eta } => psi_onn(*n, *eta)?.into(),
        StateSpec::RhoOns { .. } | StateSpec::RhoOnn { .. } | StateSpec::MasterState { .. } => {
            let (n, alpha, beta) = spec.master_parameters().expect("master family");
            master_state(n, alpha, beta)?.into()
        }
        StateSpec::ProbMix { inner, p } => {
            let inner = make_state(inner)?;
            let n_max = inner.n_max();
            let vacuum = PureState::basis_state(n_max, FockIndex::VACUUM)?.projector();
            let rho = inner.to_density();
            DensityOperator::mixture(n_max, [(1.0 - p, &vacuum), (*p, &rho)])?.into()
        }
        StateSpec::CoherentProbMix { inner, p } => {
            let phi = match make_state(inner)? {
                Probe::Pure(s) => s,
                Probe::Mixed(_) => {
                    return Err(Error::Unsupported { operation: "coherent_prob_mix", kind: inner.kind().into() })
                }
            };
            coherent_superposition(&phi, *p)?.into()
        }
        StateSpec::Custom { n_max, amplitudes, entries } => {
            if !amplitudes.is_empty() {
                PureState::new(*n_max, amplitudes.iter().map(|a| (a.index, Complex64::new(a.re, a.im))))?.into()
            } else {
                let op = HermitianOperator::from_entries(
                    *n_max,
                    entries.iter().map(|e| (e.i, e.j, Complex64::new(e.re, e.im))),
                )?;
                DensityOperator::new(op)?.into()
            }
        }
    })
}

/// `sqrt(1 - p) |00> + sqrt(p) |phi>` for `phi` orthogonal to the vacuum.
pub fn coherent_superposition(phi: &PureState, p: f64) -> Result<PureState> {
    check_probability(p)?;
    let overlap = phi.vacuum_overlap().norm_sqr();
    if overlap > 0.0 {
        return Err(Error::VacuumOverlap { overlap });
    }
    let amps = phi
        .iter()
        .map(|(i, a)| (i, a * p.sqrt()))
        .chain(std::iter::once((FockIndex::VACUUM, Complex64::new((1.0 - p).sqrt(), 0.0))));
    PureState::new(phi.n_max(), amps)
}

/// Pure-state decomposition `sum_k p_k |psi_k><psi_k|` implied by the
/// construction of a mixed spec, where one is known.
pub fn pure_decomposition(spec: &StateSpec) -> Result<Vec<(f64, PureState)>> {
    spec.validate()?;
    if let StateSpec::ProbMix { inner, p } = spec {
        if let Probe::Pure(phi) = make_state(inner)? {
            let n_max = phi.n_max();
            return Ok(vec![(1.0 - p, PureState::basis_state(n_max, FockIndex::VACUUM)?), (*p, phi)]);
        }
    }
    match spec.master_parameters() {
        Some((n, alpha, beta)) if spec.is_master_family() => Ok(vec![
            (alpha, PureState::basis_state(n, FockIndex::VACUUM)?),
            (beta, noon(n)?),
            ((1.0 - alpha - beta).max(0.0), PureState::basis_state(n, FockIndex::new(n, n))?),
        ]),
        _ => match make_state(spec)? {
            Probe::Pure(s) => Ok(vec![(1.0, s)]),
            Probe::Mixed(_) => Err(Error::Unsupported { operation: "pure_decomposition", kind: spec.kind().into() }),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn noon_two_amplitudes() {
        let s = noon(2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s.amplitude(FockIndex::new(2, 0)).re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(FockIndex::new(0, 2)).re, h, epsilon = 1e-15);
        assert_eq!(s.iter().count(), 2);
    }

    #[test]
    fn vacuum_fock_squared_at_unit_eta() {
        let Probe::Pure(s) = make_state(&StateSpec::VacuumFockSquared { n: 1, eta: 1.0 }).unwrap() else {
            panic!("expected pure state")
        };
        for idx in [FockIndex::new(0, 0), FockIndex::new(1, 0), FockIndex::new(0, 1), FockIndex::new(1, 1)] {
            assert_abs_diff_eq!(s.amplitude(idx).re, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn rho_ons_block_weights() {
        let rho = make_state(&StateSpec::RhoOns { n: 2, eta: 1.0 }).unwrap().to_density();
        let noon = noon(2).unwrap().projector();
        assert_abs_diff_eq!(rho.get(FockIndex::VACUUM, FockIndex::VACUUM).re, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.get(FockIndex::new(2, 2), FockIndex::new(2, 2)).re, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.trace_product(&noon), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn twirled_vacuum_fock_squared_is_rho_ons() {
        for &(n, eta) in &[(1, 0.3), (3, 1.7), (5, 0.05)] {
            let psi = make_state(&StateSpec::VacuumFockSquared { n, eta }).unwrap();
            let rho = make_state(&StateSpec::RhoOns { n, eta }).unwrap().to_density();
            assert!(psi.twirl_total_number().max_abs_diff(&rho) < 1e-15);
        }
    }

    #[test]
    fn twirled_psi_onn_is_rho_onn() {
        let psi = make_state(&StateSpec::PsiOnn { n: 3, eta: 0.4 }).unwrap();
        let rho = make_state(&StateSpec::RhoOnn { n: 3, eta: 0.4 }).unwrap().to_density();
        assert!(psi.twirl_total_number().max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn validation_errors() {
        assert!(make_state(&StateSpec::Noon { n: 0 }).is_err());
        assert!(make_state(&StateSpec::RhoOns { n: 2, eta: 0.0 }).is_err());
        assert!(make_state(&StateSpec::MasterState { n: 2, alpha: 0.7, beta: 0.5 }).is_err());
        assert!(make_state(&StateSpec::ProbMix { inner: Box::new(StateSpec::Noon { n: 2 }), p: 1.5 }).is_err());
    }

    #[test]
    fn coherent_mix_rejects_vacuum_overlap() {
        let spec = StateSpec::CoherentProbMix { inner: Box::new(StateSpec::PsiOnn { n: 2, eta: 0.5 }), p: 0.5 };
        assert!(matches!(make_state(&spec), Err(Error::VacuumOverlap { .. })));
        let ok = StateSpec::CoherentProbMix { inner: Box::new(StateSpec::Noon { n: 2 }), p: 0.5 };
        let s = make_state(&ok).unwrap();
        assert_abs_diff_eq!(s.vacuum_probability(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn custom_density_roundtrips_through_record() {
        let spec = StateSpec::RhoOnn { n: 2, eta: 0.6 };
        let probe = make_state(&spec).unwrap();
        let record = StateRecord::new(&spec, &probe);
        let json = serde_json::to_string(&record).unwrap();
        let back: StateRecord = serde_json::from_str(&json).unwrap();
        assert!(back.density().unwrap().max_abs_diff(&probe.to_density()) < 1e-15);
        assert_eq!(back.kind, "rho_onn");
        assert_eq!(back.parameters["eta"], 0.6);
    }

    #[test]
    fn spec_json_shape() {
        let spec: StateSpec =
            serde_json::from_str(r#"{"kind":"prob_mix","p":0.25,"inner":{"kind":"noon","n":3}}"#).unwrap();
        assert_eq!(spec, StateSpec::ProbMix { inner: Box::new(StateSpec::Noon { n: 3 }), p: 0.25 });
        let custom: StateSpec = serde_json::from_str(
            r#"{"kind":"custom","n_max":2,"amplitudes":[{"index":[0,0],"re":0.6},{"index":[2,0],"re":0.8}]}"#,
        )
        .unwrap();
        assert!(make_state(&custom).unwrap().is_pure());
    }
}
