//! Single-shot Bayesian phase estimation under the mean-square-error cost.
//!
//! For a prior `z(phi)` the prior-averaged operators are
//! `rho_bar = int z(phi) rho(phi)` and `rho_bar' = int z(phi) phi rho(phi)`.
//! The optimal estimator `S` solves `S rho_bar + rho_bar S = 2 rho_bar'`; its
//! eigenvectors form the optimal measurement and its eigenvalues the optimal
//! estimates. The metrological power
//! `P = [Tr(rho_bar S^2) - Tr(rho_bar S)^2] / sigma0^4` generalises the QFI:
//! it tends to the QFI for narrow priors and never exceeds `1 / sigma0^2`.
//!
//! Integrals are evaluated by Gauss-Legendre quadrature about the prior mean;
//! the estimator is shifted back by `mean * identity` on the support.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityOperator, FockIndex, HermitianOperator, Probe};
use crate::linalg::{self, solve_symmetric_lyapunov};
use crate::quadrature::GaussLegendre;
use crate::states::{master_state, operator_entries, MatrixEntry};
use crate::{EPS_SUPP, LEAK_TOL, NORM_TOL};

pub const DEFAULT_NODES: usize = 200;

/// Prior widths beyond this leave the regime where the square error
/// approximates a periodic cost.
pub const WIDE_PRIOR_WIDTH: f64 = 2.0;

/// Below this `|x|` the attenuation factor uses its Taylor series.
pub const KAPPA_SERIES_SWITCH: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorKind {
    /// Uniform on `[center - width/2, center + width/2]`.
    Flat { center: f64, width: f64 },
    /// Piecewise-linear density through samples on a uniform grid over `[a, b]`.
    Tabulated { a: f64, b: f64, density: Vec<f64> },
}

/// Phase prior with its quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    kind: PriorKind,
    nodes: usize,
    rule: Vec<(f64, f64)>,
    mean: f64,
    variance: f64,
}

impl Prior {
    pub fn flat(center: f64, width: f64) -> Result<Self> {
        Self::new(PriorKind::Flat { center, width }, DEFAULT_NODES)
    }

    pub fn tabulated(a: f64, b: f64, density: Vec<f64>) -> Result<Self> {
        Self::new(PriorKind::Tabulated { a, b, density }, DEFAULT_NODES)
    }

    pub fn new(kind: PriorKind, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::invalid(format!("quadrature needs at least 2 nodes, got {nodes}")));
        }
        let rule = match &kind {
            PriorKind::Flat { center, width } => {
                if !(*width > 0.0 && width.is_finite() && center.is_finite()) {
                    return Err(Error::invalid(format!("prior width must be positive, got {width}")));
                }
                let gl = GaussLegendre::new(nodes);
                gl.on_interval(center - width / 2.0, center + width / 2.0)
                    .map(|(x, w)| (x, w / width))
                    .collect::<Vec<_>>()
            }
            PriorKind::Tabulated { a, b, density } => tabulated_rule(*a, *b, density, nodes)?,
        };
        let (mean, variance) = match kind {
            PriorKind::Flat { center, width } => (center, width * width / 12.0),
            PriorKind::Tabulated { .. } => {
                let mean: f64 = rule.iter().map(|(x, w)| w * x).sum();
                let var: f64 = rule.iter().map(|(x, w)| w * (x - mean).powi(2)).sum();
                (mean, var)
            }
        };
        Ok(Prior { kind, nodes, rule, mean, variance })
    }

    pub fn kind(&self) -> &PriorKind {
        &self.kind
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Length of the support.
    pub fn width(&self) -> f64 {
        match self.kind {
            PriorKind::Flat { width, .. } => width,
            PriorKind::Tabulated { a, b, .. } => b - a,
        }
    }

    pub fn is_wide(&self) -> bool {
        self.width() > WIDE_PRIOR_WIDTH
    }

    /// Quadrature pairs `(phi_i, w_i z(phi_i))`, summing to one.
    pub fn rule(&self) -> &[(f64, f64)] {
        &self.rule
    }

    /// `(mean, sigma0^2)`.
    pub fn moments(&self) -> (f64, f64) {
        (self.mean, self.variance)
    }

    /// `int z(phi) f(phi) dphi` under the prior's quadrature.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.rule.iter().map(|&(x, w)| w * f(x)).sum()
    }
}

fn tabulated_rule(a: f64, b: f64, density: &[f64], nodes: usize) -> Result<Vec<(f64, f64)>> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid(format!("tabulated prior needs a < b, got [{a}, {b}]")));
    }
    if density.len() < 2 {
        return Err(Error::invalid("tabulated prior needs at least two density samples"));
    }
    if density.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
        return Err(Error::invalid("tabulated density must be finite and nonnegative"));
    }
    let segments = density.len() - 1;
    let per_segment = nodes.div_ceil(segments).max(2);
    let gl = GaussLegendre::new(per_segment);
    let h = (b - a) / segments as f64;
    let mut rule = Vec::with_capacity(segments * per_segment);
    for s in 0..segments {
        let lo = a + s as f64 * h;
        let (d0, d1) = (density[s], density[s + 1]);
        for (x, w) in gl.on_interval(lo, lo + h) {
            let t = (x - lo) / h;
            rule.push((x, w * (d0 + t * (d1 - d0))));
        }
    }
    let norm: f64 = rule.iter().map(|(_, w)| w).sum();
    if !(norm > 0.0) {
        return Err(Error::invalid("tabulated density integrates to zero"));
    }
    rule.iter_mut().for_each(|(_, w)| *w /= norm);
    Ok(rule)
}

/// Prior-averaged zeroth and first moments of the encoded state.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedStates {
    /// `int z(phi) rho(phi) dphi`.
    pub zeroth: DensityOperator,
    /// `int z(phi) phi rho(phi) dphi`.
    pub first: HermitianOperator,
}

/// Zeroth moment and first moment about the prior mean.
fn centered_averages(probe: &Probe, prior: &Prior) -> (DensityOperator, HermitianOperator) {
    let rho = probe.to_density();
    let (mean, _) = prior.moments();
    let mut zeroth = HermitianOperator::zeros(rho.n_max());
    let mut first = HermitianOperator::zeros(rho.n_max());
    for &(phi, w) in prior.rule() {
        let encoded = rho.encode_phase(phi);
        zeroth.add_scaled(&encoded, w);
        first.add_scaled(&encoded, w * (phi - mean));
    }
    (DensityOperator::from_valid(zeroth), first)
}

pub fn averaged_states(probe: &Probe, prior: &Prior) -> AveragedStates {
    let (zeroth, mut first) = centered_averages(probe, prior);
    let (mean, _) = prior.moments();
    first.add_scaled(&zeroth, mean);
    AveragedStates { zeroth, first }
}

/// Solves `S rho_bar + rho_bar S = 2 rho_bar'` on the support of `rho_bar`.
pub fn personick_estimator(zeroth: &DensityOperator, first: &HermitianOperator) -> Result<HermitianOperator> {
    personick_estimator_with_tolerance(zeroth, first, EPS_SUPP)
}

pub fn personick_estimator_with_tolerance(
    zeroth: &DensityOperator,
    first: &HermitianOperator,
    eps_supp: f64,
) -> Result<HermitianOperator> {
    let mut basis = zeroth.support();
    basis.extend(first.support());
    basis.sort_unstable();
    basis.dedup();
    if basis.is_empty() {
        return Ok(HermitianOperator::zeros(zeroth.n_max()));
    }
    let sol = solve_symmetric_lyapunov(&zeroth.to_dense(&basis), &first.to_dense(&basis), eps_supp);
    if sol.leak > LEAK_TOL {
        return Err(Error::IllDefinedEstimator { leak: sol.leak });
    }
    Ok(HermitianOperator::from_dense(zeroth.n_max(), &basis, &sol.solution, 1e-15))
}

/// Outcome of a Bayesian analysis of one probe under one prior.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesResult {
    /// Metrological power `P`.
    pub power: f64,
    /// Minimum prior-averaged mean square error.
    pub optimal_error: f64,
    pub sigma0_sq: f64,
    pub prior_mean: f64,
    /// `Tr(rho_bar S)`; equals the prior mean.
    pub trace_rho_s: f64,
    pub wide_prior: bool,
    /// Optimal estimator in the Fock basis.
    pub estimator: HermitianOperator,
    support: Vec<FockIndex>,
}

impl BayesResult {
    /// Eigenvalues of the estimator on the support of `rho_bar`: the optimal
    /// phase estimates of the optimal measurement.
    pub fn estimates(&self) -> Vec<f64> {
        if self.support.is_empty() {
            return Vec::new();
        }
        let (ev, _) = linalg::eigh(&self.estimator.to_dense(&self.support));
        let mut ev: Vec<f64> = ev.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

#[derive(Serialize)]
struct BayesResultJson {
    #[serde(rename = "P")]
    power: f64,
    optimal_error: f64,
    sigma0_sq: f64,
    wide_prior_flag: bool,
    #[serde(rename = "S")]
    estimator: Vec<MatrixEntry>,
    estimates: Vec<f64>,
}

impl Serialize for BayesResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BayesResultJson {
            power: self.power,
            optimal_error: self.optimal_error,
            sigma0_sq: self.sigma0_sq,
            wide_prior_flag: self.wide_prior,
            estimator: operator_entries(&self.estimator),
            estimates: self.estimates(),
        }
        .serialize(s)
    }
}

pub fn metrological_power(probe: &Probe, prior: &Prior) -> Result<BayesResult> {
    metrological_power_with_tolerance(probe, prior, EPS_SUPP)
}

pub fn metrological_power_with_tolerance(probe: &Probe, prior: &Prior, eps_supp: f64) -> Result<BayesResult> {
    let (mean, sigma0_sq) = prior.moments();
    let (zeroth, first_centered) = centered_averages(probe, prior);
    let centered = personick_estimator_with_tolerance(&zeroth, &first_centered, eps_supp)?;
    let support = zeroth.support();
    let (tr_s, tr_s2) = if support.is_empty() {
        (0.0, 0.0)
    } else {
        let r = zeroth.to_dense(&support);
        let s: DMatrix<Complex64> = centered.to_dense(&support);
        (linalg::trace_product(&r, &s), linalg::trace_product(&r, &(&s * &s)))
    };
    let power = (tr_s2 - tr_s * tr_s) / (sigma0_sq * sigma0_sq);
    let optimal_error = sigma0_sq - tr_s2;
    let mut estimator = centered;
    if mean != 0.0 {
        for &idx in &support {
            estimator.add(idx, idx, Complex64::new(mean, 0.0));
        }
    }
    Ok(BayesResult {
        power,
        optimal_error,
        sigma0_sq,
        prior_mean: mean,
        trace_rho_s: mean + tr_s,
        wide_prior: prior.is_wide(),
        estimator,
        support,
    })
}

/// `P / p` with `p` the probability that at least one photon is detected.
pub fn conditioned_power(probe: &Probe, prior: &Prior) -> Result<f64> {
    let detection = 1.0 - probe.vacuum_probability();
    if detection <= NORM_TOL {
        return Err(Error::UndefinedConditioning);
    }
    Ok(metrological_power(probe, prior)?.power / detection)
}

/// Prior-width attenuation `kappa(x) = 9 (x cos x - sin x)^2 / x^6`, with
/// range `[0, 1]` and `kappa(0) = 1`.
pub fn kappa(x: f64) -> f64 {
    if x.abs() <= KAPPA_SERIES_SWITCH {
        let x2 = x * x;
        1.0 - x2 / 5.0 + 3.0 * x2 * x2 / 175.0
    } else {
        let t = x * x.cos() - x.sin();
        9.0 * t * t / x.powi(6)
    }
}

fn check_master(n: u32, alpha: f64, beta: f64, width: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if !(alpha >= 0.0 && beta >= 0.0 && alpha + beta <= 1.0 + NORM_TOL) {
        return Err(Error::invalid(format!("invalid master-state weights ({alpha}, {beta})")));
    }
    if !(width > 0.0) {
        return Err(Error::invalid(format!("prior width must be positive, got {width}")));
    }
    Ok(())
}

/// `kappa(N W / 2) beta N^2`: the metrological power of a master-family state
/// under a flat prior of width `W`. Independent of `alpha`.
pub fn closed_form_power(n: u32, alpha: f64, beta: f64, width: f64) -> Result<f64> {
    check_master(n, alpha, beta, width)?;
    let nf = n as f64;
    Ok(kappa(nf * width / 2.0) * beta * nf * nf)
}

/// Optimal estimator for every master-family state under a centred flat prior
/// of width `W`:
/// `S = i (N W cos(NW/2) - 2 sin(NW/2)) / (N^2 W) (|N0><0N| - |0N><N0|)`.
///
/// With the opposite encoding sign `exp(+i phi K)` the estimator changes sign.
pub fn closed_form_estimator(n: u32, width: f64) -> Result<HermitianOperator> {
    check_master(n, 0.0, 1.0, width)?;
    let nf = n as f64;
    let half = nf * width / 2.0;
    let coeff = (nf * width * half.cos() - 2.0 * half.sin()) / (nf * nf * width);
    let mut s = HermitianOperator::zeros(n);
    s.set(FockIndex::new(n, 0), FockIndex::new(0, n), Complex64::new(0.0, coeff));
    Ok(s)
}

/// Prior averages of a master-family state under a centred flat prior, from
/// the exact integrals of `exp(-i N phi)` and `phi exp(-i N phi)`.
pub fn closed_form_averages(n: u32, alpha: f64, beta: f64, width: f64) -> Result<AveragedStates> {
    check_master(n, alpha, beta, width)?;
    let nf = n as f64;
    let half = nf * width / 2.0;
    let (s, c) = half.sin_cos();
    let mut zeroth = master_state(n, alpha, beta)?.into_operator();
    let coherence = beta * s / (nf * width);
    zeroth.set(FockIndex::new(n, 0), FockIndex::new(0, n), Complex64::new(coherence, 0.0));
    let mut first = HermitianOperator::zeros(n);
    let moment = beta * (nf * width * c - 2.0 * s) / (2.0 * nf * nf * width);
    first.set(FockIndex::new(n, 0), FockIndex::new(0, n), Complex64::new(0.0, moment));
    Ok(AveragedStates { zeroth: DensityOperator::from_valid(zeroth), first })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_state, StateSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_prior_moments() {
        let (m, v) = Prior::flat(0.0, 1.0).unwrap().moments();
        assert_eq!((m, v), (0.0, 1.0 / 12.0));
        let (m, v) = Prior::flat(0.5, 1.0).unwrap().moments();
        assert_eq!((m, v), (0.5, 1.0 / 12.0));
    }

    #[test]
    fn flat_prior_quadrature_agrees_with_exact_moments() {
        let prior = Prior::flat(0.3, 1.7).unwrap();
        assert_abs_diff_eq!(prior.expect(|_| 1.0), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(prior.expect(|x| x), 0.3, epsilon = 1e-13);
        assert_abs_diff_eq!(prior.expect(|x| (x - 0.3).powi(2)), 1.7f64.powi(2) / 12.0, epsilon = 1e-13);
    }

    #[test]
    fn triangular_prior_moments() {
        let prior = Prior::tabulated(-1.0, 1.0, vec![0.0, 1.0, 0.0]).unwrap();
        let (m, v) = prior.moments();
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v, 1.0 / 6.0, epsilon = 1e-13);
    }

    #[test]
    fn prior_validation() {
        assert!(Prior::flat(0.0, 0.0).is_err());
        assert!(Prior::new(PriorKind::Flat { center: 0.0, width: 1.0 }, 1).is_err());
        assert!(Prior::tabulated(1.0, -1.0, vec![1.0, 1.0]).is_err());
        assert!(Prior::tabulated(-1.0, 1.0, vec![1.0, -1.0]).is_err());
        assert!(Prior::flat(0.0, 2.5).unwrap().is_wide());
        assert!(!Prior::flat(0.0, 2.0).unwrap().is_wide());
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(0.0), 1.0);
        let one = 9.0 * (1f64.cos() - 1f64.sin()).powi(2);
        assert_abs_diff_eq!(kappa(1.0), one, epsilon = 1e-15);
        // both branches agree across the switch
        let x = KAPPA_SERIES_SWITCH;
        let t = x * x.cos() - x.sin();
        assert_abs_diff_eq!(kappa(x), 9.0 * t * t / x.powi(6), epsilon = 1e-9);
        for k in 0..=5000 {
            let x = k as f64 * 0.01;
            let v = kappa(x);
            assert!((0.0..=1.0).contains(&v), "kappa({x}) = {v}");
        }
    }

    #[test]
    fn phase_independent_state_has_zero_estimator() {
        let probe = make_state(&StateSpec::MasterState { n: 2, alpha: 0.4, beta: 0.0 }).unwrap();
        let prior = Prior::flat(0.0, 1.0).unwrap();
        let avg = averaged_states(&probe, &prior);
        assert!(avg.zeroth.max_abs_diff(&probe.to_density()) < 1e-14);
        assert!(avg.first.max_abs() < 1e-15);
        let r = metrological_power(&probe, &prior).unwrap();
        assert!(r.estimator.max_abs() < 1e-15);
        assert_abs_diff_eq!(r.power, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.optimal_error, 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn shifted_prior_shifts_estimates() {
        let probe = make_state(&StateSpec::Noon { n: 2 }).unwrap();
        let centered = metrological_power(&probe, &Prior::flat(0.0, 1.0).unwrap()).unwrap();
        let shifted = metrological_power(&probe, &Prior::flat(0.4, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(shifted.power, centered.power, epsilon = 1e-12);
        assert_abs_diff_eq!(shifted.trace_rho_s, 0.4, epsilon = 1e-12);
        let a = centered.estimates();
        let b = shifted.estimates();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x + 0.4, *y, epsilon = 1e-12);
        }
    }

    #[test]
    fn noon_estimates_are_symmetric() {
        let probe = make_state(&StateSpec::Noon { n: 3 }).unwrap();
        let r = metrological_power(&probe, &Prior::flat(0.0, 0.8).unwrap()).unwrap();
        let est = r.estimates();
        assert_eq!(est.len(), 2);
        assert_abs_diff_eq!(est[0], -est[1], epsilon = 1e-13);
    }

    #[test]
    fn bayes_result_json_fields() {
        let probe = make_state(&StateSpec::Noon { n: 1 }).unwrap();
        let r = metrological_power(&probe, &Prior::flat(0.0, 2.5).unwrap()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert!(v["P"].is_f64());
        assert_eq!(v["wide_prior_flag"], true);
        assert_eq!(v["estimates"].as_array().unwrap().len(), 2);
        assert!(v["S"].is_array());
    }
}
