//! Local (frequentist) estimation: quantum and classical Fisher information
//! for phase encoding by `K = (n1 - n2) / 2`.
//!
//! The QFI convention is the variance form `<(n1 - n2)^2> - <n1 - n2>^2` for
//! pure states (equivalently `4 Var K`), so a N00N state of `N` photons has
//! QFI `N^2` and the bound on the variance of an unbiased estimator from `nu`
//! repetitions is `1 / (nu F)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityOperator, FockIndex, HermitianOperator, Probe, PureState};
use crate::linalg::{self, solve_symmetric_lyapunov};
use crate::states::{make_state, operator_entries, MatrixEntry, StateSpec};
use crate::{EPS_PROB, EPS_SUPP, LEAK_TOL, NORM_TOL, PSD_TOL, RENORMALIZE_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QfiMethod {
    PureVariance,
    SpectralSld,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QfiResult {
    pub value: f64,
    pub method: QfiMethod,
    pub sld: Option<HermitianOperator>,
}

#[derive(Serialize)]
struct QfiResultJson {
    value: f64,
    method: QfiMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    sld: Option<Vec<MatrixEntry>>,
}

impl Serialize for QfiResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QfiResultJson {
            value: self.value,
            method: self.method,
            sld: self.sld.as_ref().map(operator_entries),
        }
        .serialize(s)
    }
}

fn check_pure_norm(state: &PureState) -> Result<()> {
    let deviation = (state.norm_sqr() - 1.0).abs();
    if deviation > NORM_TOL {
        Err(Error::NotNormalized { deviation })
    } else {
        Ok(())
    }
}

/// `<(n1 - n2)^2> - <n1 - n2>^2`.
pub fn qfi_pure(state: &PureState) -> Result<QfiResult> {
    check_pure_norm(state)?;
    let mean = state.expect_diagonal(FockIndex::difference);
    let second = state.expect_diagonal(|i| i.difference().powi(2));
    Ok(QfiResult { value: (second - mean * mean).max(0.0), method: QfiMethod::PureVariance, sld: None })
}

/// Symmetric logarithmic derivative of `rho(phi)`, solving
/// `d rho / d phi = (L rho + rho L) / 2` on the support of `rho(phi)`.
pub fn sld(rho: &DensityOperator, phi: f64) -> Result<HermitianOperator> {
    sld_with_tolerance(rho, phi, EPS_SUPP)
}

pub fn sld_with_tolerance(rho: &DensityOperator, phi: f64, eps_supp: f64) -> Result<HermitianOperator> {
    let encoded = rho.encode_phase(phi);
    let basis = encoded.support();
    if basis.is_empty() {
        return Ok(HermitianOperator::zeros(rho.n_max()));
    }
    let derivative = encoded.phase_derivative();
    let sol = solve_symmetric_lyapunov(&encoded.to_dense(&basis), &derivative.to_dense(&basis), eps_supp);
    if sol.leak > LEAK_TOL {
        return Err(Error::IllDefinedSld { leak: sol.leak });
    }
    Ok(HermitianOperator::from_dense(rho.n_max(), &basis, &sol.solution, 1e-14))
}

/// `Tr(rho L^2)` with `L` the symmetric logarithmic derivative at `phi`.
pub fn qfi_mixed(rho: &DensityOperator, phi: f64) -> Result<QfiResult> {
    qfi_mixed_with_tolerance(rho, phi, EPS_SUPP)
}

pub fn qfi_mixed_with_tolerance(rho: &DensityOperator, phi: f64, eps_supp: f64) -> Result<QfiResult> {
    let l = sld_with_tolerance(rho, phi, eps_supp)?;
    let encoded = rho.encode_phase(phi);
    let basis = encoded.support();
    let value = if basis.is_empty() {
        0.0
    } else {
        let r = encoded.to_dense(&basis);
        let ld = l.to_dense(&basis);
        linalg::trace_product(&r, &(&ld * &ld))
    };
    Ok(QfiResult { value: value.max(0.0), method: QfiMethod::SpectralSld, sld: Some(l) })
}

/// QFI of a probe: the variance form for kets, the spectral SLD otherwise.
pub fn qfi(probe: &Probe) -> Result<QfiResult> {
    match probe {
        Probe::Pure(s) => qfi_pure(s),
        Probe::Mixed(r) => qfi_mixed(r, 0.0),
    }
}

/// A measurement: positive effects summing to the identity, each labelled by
/// the detector click pattern it reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    n_max: u32,
    effects: Vec<HermitianOperator>,
    labels: Vec<FockIndex>,
}

impl Povm {
    pub fn new(n_max: u32, effects: Vec<HermitianOperator>, labels: Vec<FockIndex>) -> Result<Self> {
        if effects.len() != labels.len() {
            return Err(Error::invalid("POVM needs one label per effect"));
        }
        for e in &effects {
            if let Some(&min) = e.eigenvalues().first() {
                if min < -PSD_TOL {
                    return Err(Error::NotPositive { min_eigenvalue: min });
                }
            }
        }
        let povm = Povm { n_max, effects, labels };
        let residual = povm.completeness_residual();
        if residual > PSD_TOL {
            return Err(Error::invalid(format!("POVM effects miss the identity by {residual:e}")));
        }
        Ok(povm)
    }

    pub(crate) fn from_valid(n_max: u32, effects: Vec<HermitianOperator>, labels: Vec<FockIndex>) -> Self {
        Povm { n_max, effects, labels }
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[HermitianOperator] {
        &self.effects
    }

    pub fn labels(&self) -> &[FockIndex] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (FockIndex, &HermitianOperator)> {
        self.labels.iter().copied().zip(self.effects.iter())
    }

    /// Largest entrywise deviation of `sum_x E_x` from the identity.
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = HermitianOperator::zeros(self.n_max);
        for e in &self.effects {
            sum.add_scaled(e, 1.0);
        }
        sum.max_abs_diff(&HermitianOperator::identity(self.n_max))
    }
}

/// Fisher information of the outcome distribution of `povm` on `rho(phi)`.
pub fn cfi(rho: &DensityOperator, phi: f64, povm: &Povm) -> Result<f64> {
    cfi_with_tolerance(rho, phi, povm, EPS_PROB)
}

pub fn cfi_with_tolerance(rho: &DensityOperator, phi: f64, povm: &Povm, eps_prob: f64) -> Result<f64> {
    let encoded = rho.encode_phase(phi);
    let derivative = encoded.phase_derivative();
    let mut total = 0.0;
    for (label, effect) in povm.iter() {
        let p = effect.trace_product(&encoded);
        let dp = effect.trace_product(&derivative);
        if p < eps_prob {
            if dp.abs() < eps_prob {
                continue;
            }
            return Err(Error::DivergentCfi { outcome: label });
        }
        total += dp * dp / p;
    }
    Ok(total)
}

/// Weighted pure states `sum_k p_k |psi_k><psi_k|`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureDecomposition {
    components: Vec<(f64, PureState)>,
}

impl PureDecomposition {
    pub fn new(components: Vec<(f64, PureState)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("empty decomposition"));
        }
        if let Some((w, _)) = components.iter().find(|(w, _)| !(*w >= 0.0)) {
            return Err(Error::invalid(format!("negative decomposition weight {w}")));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("decomposition weights sum to {total}")));
        }
        Ok(PureDecomposition { components })
    }

    pub fn from_spec(spec: &StateSpec) -> Result<Self> {
        Self::new(crate::states::pure_decomposition(spec)?)
    }

    pub fn components(&self) -> &[(f64, PureState)] {
        &self.components
    }

    pub fn density(&self) -> Result<DensityOperator> {
        let n_max = self.components.iter().map(|(_, s)| s.n_max()).max().unwrap_or(0);
        let projectors: Vec<_> = self.components.iter().map(|(w, s)| (*w, s.projector())).collect();
        DensityOperator::mixture(n_max, projectors.iter().map(|(w, r)| (*w, r)))
    }
}

/// Convexity bound `CFI({p_k}) + sum_k p_k F(psi_k)` on the QFI of the
/// mixture. The weights of a decomposition do not depend on the phase, so
/// their Fisher information vanishes.
pub fn convexity_bound(decomp: &PureDecomposition) -> Result<f64> {
    let weight_cfi = 0.0;
    decomp
        .components()
        .iter()
        .try_fold(weight_cfi, |acc, (w, s)| Ok(acc + w * qfi_pure(s)?.value))
}

/// QFI divided by the probability of detecting at least one photon.
pub fn conditioned_qfi(spec: &StateSpec) -> Result<f64> {
    let probe = make_state(spec)?;
    let detection = 1.0 - probe.vacuum_probability();
    if detection <= NORM_TOL {
        return Err(Error::UndefinedConditioning);
    }
    Ok(qfi(&probe)?.value / detection)
}

fn vacuum_weight(phi: &PureState) -> Result<f64> {
    check_pure_norm(phi)?;
    let v = phi.vacuum_overlap().norm_sqr();
    if v >= 1.0 - RENORMALIZE_LIMIT {
        Err(Error::DegenerateProbe)
    } else {
        Ok(v)
    }
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("p must lie in [0, 1], got {p}")))
    }
}

/// QFI of `(1 - p)|00><00| + p|phi><phi|`:
/// `p F(phi) - p (1 - p) <n1 - n2>^2 |<0|phi>|^2 / (1 - |<0|phi>|^2)`.
pub fn prob_mix_qfi_closed(phi: &PureState, p: f64) -> Result<f64> {
    check_p(p)?;
    let v = vacuum_weight(phi)?;
    let f = qfi_pure(phi)?.value;
    let mean_diff = phi.expect_diagonal(FockIndex::difference);
    Ok(p * f - p * (1.0 - p) * mean_diff * mean_diff * v / (1.0 - v))
}

/// The same QFI from inner products with `|phi'> = d|phi>/d phi`:
/// `4p(<phi'|phi'> + <phi|phi'>^2) + 4p(1-p)|<phi|0>|^2 <phi'|phi>^2 / (1 - |<phi|0>|^2)`.
pub fn prob_mix_qfi_nonorthogonal(phi: &PureState, p: f64) -> Result<f64> {
    check_p(p)?;
    let v = vacuum_weight(phi)?;
    let dphi = phi.phase_derivative();
    let dd = dphi.inner(&dphi);
    let phi_dphi = phi.inner(&dphi);
    let dphi_phi = dphi.inner(phi);
    let value = Complex64::new(4.0 * p, 0.0) * (dd + phi_dphi * phi_dphi)
        + Complex64::new(4.0 * p * (1.0 - p) * v / (1.0 - v), 0.0) * dphi_phi * dphi_phi;
    Ok(value.re)
}

/// QFI of the coherent mixture `sqrt(1-p)|00> + sqrt(p)|phi>` and the QFI per
/// detection probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentMixQfi {
    pub value: f64,
    /// `F / p = F(phi) + (1 - p) <n1 - n2>^2`.
    pub conditioned: f64,
}

pub fn coherent_mix_qfi_closed(phi: &PureState, p: f64) -> Result<CoherentMixQfi> {
    check_p(p)?;
    check_pure_norm(phi)?;
    let overlap = phi.vacuum_overlap().norm_sqr();
    if overlap > 0.0 {
        return Err(Error::VacuumOverlap { overlap });
    }
    let mean = phi.expect_diagonal(FockIndex::difference);
    let second = phi.expect_diagonal(|i| i.difference().powi(2));
    let value = p * second - p * p * mean * mean;
    let conditioned = if p > 0.0 { (second - mean * mean) + (1.0 - p) * mean * mean } else { f64::NAN };
    Ok(CoherentMixQfi { value, conditioned })
}

/// Upper bound `n_mean * gamma / (1 - gamma)` on the QFI under fractional loss `gamma`.
pub fn loss_bound(n_mean: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("loss rate must lie in (0, 1), got {gamma}")));
    }
    if !(n_mean >= 0.0) || !n_mean.is_finite() {
        return Err(Error::invalid(format!("mean photon number must be nonnegative, got {n_mean}")));
    }
    Ok(n_mean * gamma / (1.0 - gamma))
}

/// Quantum Cramér-Rao bound `1 / (nu F)` on the variance of an unbiased
/// estimator. Zero information gives an infinite bound.
pub fn qcrb_variance(qfi: f64, repetitions: u64) -> Result<f64> {
    if repetitions == 0 {
        return Err(Error::invalid("repetitions must be at least 1"));
    }
    if !(qfi >= 0.0) {
        return Err(Error::invalid(format!("QFI must be nonnegative, got {qfi}")));
    }
    Ok(1.0 / (repetitions as f64 * qfi))
}
