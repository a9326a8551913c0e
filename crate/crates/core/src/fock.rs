//! Truncated two-mode Fock space: basis labels, kets, Hermitian operators and
//! the handful of maps the rest of the crate needs (phase encoding, the
//! total-number twirl, number statistics).

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::{NORM_TOL, PSD_TOL, RENORMALIZE_LIMIT};

/// Occupation pair `|n1, n2>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct FockIndex {
    pub n1: u32,
    pub n2: u32,
}

impl FockIndex {
    pub const VACUUM: FockIndex = FockIndex { n1: 0, n2: 0 };

    pub const fn new(n1: u32, n2: u32) -> Self {
        FockIndex { n1, n2 }
    }

    pub fn total(self) -> u32 {
        self.n1 + self.n2
    }

    /// Eigenvalue of `n1 - n2`.
    pub fn difference(self) -> f64 {
        self.n1 as f64 - self.n2 as f64
    }

    /// Eigenvalue of the phase generator `K = (n1 - n2) / 2`.
    pub fn generator_eigenvalue(self) -> f64 {
        0.5 * self.difference()
    }

    pub fn max_occupation(self) -> u32 {
        self.n1.max(self.n2)
    }

    fn check(self, n_max: u32) -> Result<()> {
        if self.max_occupation() > n_max {
            Err(Error::IndexOutOfRange { index: self, n_max })
        } else {
            Ok(())
        }
    }
}

impl From<[u32; 2]> for FockIndex {
    fn from([n1, n2]: [u32; 2]) -> Self {
        FockIndex { n1, n2 }
    }
}

impl From<FockIndex> for [u32; 2] {
    fn from(idx: FockIndex) -> Self {
        [idx.n1, idx.n2]
    }
}

impl fmt::Display for FockIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>", self.n1, self.n2)
    }
}

/// Every basis label of the space truncated at `n_max` photons per mode.
pub fn basis(n_max: u32) -> impl Iterator<Item = FockIndex> {
    (0..=n_max).flat_map(move |n1| (0..=n_max).map(move |n2| FockIndex::new(n1, n2)))
}

fn encoding_phase(idx: FockIndex, phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, -phi * idx.generator_eigenvalue())
}

/// Normalised two-mode ket with sparse amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_max: u32,
    amplitudes: BTreeMap<FockIndex, Complex64>,
}

impl PureState {
    /// Builds a ket, renormalising rounding-level norm errors and rejecting
    /// anything worse.
    pub fn new(n_max: u32, amplitudes: impl IntoIterator<Item = (FockIndex, Complex64)>) -> Result<Self> {
        let mut map: BTreeMap<FockIndex, Complex64> = BTreeMap::new();
        for (idx, amp) in amplitudes {
            idx.check(n_max)?;
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(Error::invalid(format!("non-finite amplitude at {idx}")));
            }
            *map.entry(idx).or_default() += amp;
        }
        map.retain(|_, a| a.norm_sqr() > 0.0);
        let norm_sqr: f64 = map.values().map(|a| a.norm_sqr()).sum();
        let deviation = (norm_sqr - 1.0).abs();
        if deviation > RENORMALIZE_LIMIT {
            return Err(Error::NotNormalized { deviation });
        }
        let scale = norm_sqr.sqrt().recip();
        map.values_mut().for_each(|a| *a *= scale);
        Ok(PureState { n_max, amplitudes: map })
    }

    pub fn from_real(n_max: u32, amplitudes: impl IntoIterator<Item = (FockIndex, f64)>) -> Result<Self> {
        Self::new(n_max, amplitudes.into_iter().map(|(i, a)| (i, Complex64::new(a, 0.0))))
    }

    pub fn basis_state(n_max: u32, idx: FockIndex) -> Result<Self> {
        Self::from_real(n_max, [(idx, 1.0)])
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn amplitude(&self, idx: FockIndex) -> Complex64 {
        self.amplitudes.get(&idx).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FockIndex, Complex64)> + '_ {
        self.amplitudes.iter().map(|(i, a)| (*i, *a))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.iter().map(|(i, a)| a.conj() * other.amplitude(i)).sum()
    }

    /// Expectation of an operator diagonal in the Fock basis.
    pub fn expect_diagonal(&self, f: impl Fn(FockIndex) -> f64) -> f64 {
        self.iter().map(|(i, a)| a.norm_sqr() * f(i)).sum()
    }

    pub fn vacuum_overlap(&self) -> Complex64 {
        self.amplitude(FockIndex::VACUUM)
    }

    pub fn encode_phase(&self, phi: f64) -> PureState {
        PureState {
            n_max: self.n_max,
            amplitudes: self.iter().map(|(i, a)| (i, a * encoding_phase(i, phi))).collect(),
        }
    }

    /// `-i K |psi>`, the phase derivative of the encoded ket at phi = 0.
    pub fn phase_derivative(&self) -> PureState {
        PureState {
            n_max: self.n_max,
            amplitudes: self
                .iter()
                .map(|(i, a)| (i, Complex64::new(0.0, -i.generator_eigenvalue()) * a))
                .collect(),
        }
    }

    pub fn projector(&self) -> DensityOperator {
        let mut op = HermitianOperator::zeros(self.n_max);
        let amps: Vec<_> = self.iter().collect();
        for (k, &(i, a)) in amps.iter().enumerate() {
            for &(j, b) in &amps[k..] {
                op.set(i, j, a * b.conj());
            }
        }
        DensityOperator(op)
    }
}

/// Hermitian operator on the truncated space. Only the upper triangle
/// (`i <= j` in index order) is stored; the lower triangle is implied by
/// conjugation.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    n_max: u32,
    entries: BTreeMap<(FockIndex, FockIndex), Complex64>,
}

impl HermitianOperator {
    pub fn zeros(n_max: u32) -> Self {
        HermitianOperator { n_max, entries: BTreeMap::new() }
    }

    pub fn identity(n_max: u32) -> Self {
        let mut op = Self::zeros(n_max);
        for idx in basis(n_max) {
            op.set(idx, idx, Complex64::new(1.0, 0.0));
        }
        op
    }

    /// Builds an operator from arbitrary `(i, j, value)` triples. Pairs given
    /// in both orders must agree up to conjugation.
    pub fn from_entries(
        n_max: u32,
        entries: impl IntoIterator<Item = (FockIndex, FockIndex, Complex64)>,
    ) -> Result<Self> {
        let mut op = Self::zeros(n_max);
        let mut seen: BTreeMap<(FockIndex, FockIndex), Complex64> = BTreeMap::new();
        for (i, j, v) in entries {
            i.check(n_max)?;
            j.check(n_max)?;
            let (key, val) = if i <= j { ((i, j), v) } else { ((j, i), v.conj()) };
            if i == j && v.im.abs() > NORM_TOL {
                return Err(Error::invalid(format!("diagonal entry at {i} is not real")));
            }
            if let Some(prev) = seen.insert(key, val) {
                if (prev - val).norm() > NORM_TOL {
                    return Err(Error::invalid(format!("entries ({i},{j}) and ({j},{i}) are not conjugate")));
                }
                continue;
            }
            op.set(key.0, key.1, val);
        }
        Ok(op)
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn get(&self, i: FockIndex, j: FockIndex) -> Complex64 {
        if i <= j {
            self.entries.get(&(i, j)).copied().unwrap_or_default()
        } else {
            self.entries.get(&(j, i)).map(|v| v.conj()).unwrap_or_default()
        }
    }

    /// Sets `<i|A|j>` (and implicitly `<j|A|i>`).
    pub fn set(&mut self, i: FockIndex, j: FockIndex, value: Complex64) {
        self.n_max = self.n_max.max(i.max_occupation()).max(j.max_occupation());
        let (key, mut val) = if i <= j { ((i, j), value) } else { ((j, i), value.conj()) };
        if i == j {
            val.im = 0.0;
        }
        if val == Complex64::default() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, val);
        }
    }

    pub fn add(&mut self, i: FockIndex, j: FockIndex, value: Complex64) {
        let v = self.get(i, j) + value;
        self.set(i, j, v);
    }

    /// Stored upper-triangle entries.
    pub fn iter(&self) -> impl Iterator<Item = (FockIndex, FockIndex, Complex64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    /// Every nonzero matrix element, both triangles.
    pub fn iter_full(&self) -> impl Iterator<Item = (FockIndex, FockIndex, Complex64)> + '_ {
        self.iter().flat_map(|(i, j, v)| {
            let mirror = (i != j).then_some((j, i, v.conj()));
            std::iter::once((i, j, v)).chain(mirror)
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Basis labels touched by any stored entry, sorted.
    pub fn support(&self) -> Vec<FockIndex> {
        let mut idx: Vec<FockIndex> = self.iter().flat_map(|(i, j, _)| [i, j]).collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    pub fn trace(&self) -> f64 {
        self.iter().filter(|(i, j, _)| i == j).map(|(_, _, v)| v.re).sum()
    }

    /// `Tr(A B)` for two Hermitian operators; always real.
    pub fn trace_product(&self, other: &HermitianOperator) -> f64 {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small
            .iter()
            .map(|(i, j, a)| {
                let b = large.get(i, j);
                if i == j {
                    a.re * b.re
                } else {
                    2.0 * (a * b.conj()).re
                }
            })
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> HermitianOperator {
        let mut out = self.clone();
        out.entries.values_mut().for_each(|v| *v *= factor);
        out.entries.retain(|_, v| *v != Complex64::default());
        out
    }

    /// `self + factor * other`.
    pub fn add_scaled(&mut self, other: &HermitianOperator, factor: f64) {
        for (i, j, v) in other.iter() {
            self.add(i, j, v * factor);
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        let mut keys: Vec<_> = self.entries.keys().chain(other.entries.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter()
            .map(|(i, j)| (self.get(i, j) - other.get(i, j)).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Drops entries with modulus at or below `tol`.
    pub fn pruned(mut self, tol: f64) -> Self {
        self.entries.retain(|_, v| v.norm() > tol);
        self
    }

    pub fn to_dense(&self, basis: &[FockIndex]) -> DMatrix<Complex64> {
        DMatrix::from_fn(basis.len(), basis.len(), |r, c| self.get(basis[r], basis[c]))
    }

    /// Reads the upper triangle of a dense matrix expressed in `basis`.
    /// Entries with modulus at or below `drop_tol` are not stored.
    pub fn from_dense(n_max: u32, basis: &[FockIndex], m: &DMatrix<Complex64>, drop_tol: f64) -> Self {
        let mut op = Self::zeros(n_max);
        for r in 0..basis.len() {
            for c in 0..basis.len() {
                if basis[r] <= basis[c] {
                    let v = 0.5 * (m[(r, c)] + m[(c, r)].conj());
                    if v.norm() > drop_tol {
                        op.set(basis[r], basis[c], v);
                    }
                }
            }
        }
        op
    }

    /// Conjugation by the phase-encoding unitary.
    pub fn encode_phase(&self, phi: f64) -> HermitianOperator {
        let mut out = self.clone();
        for (&(i, j), v) in out.entries.iter_mut() {
            *v *= encoding_phase(i, phi) * encoding_phase(j, phi).conj();
        }
        out
    }

    /// `-i [K, A]`, the derivative of `A(phi)` with respect to phi.
    pub fn phase_derivative(&self) -> HermitianOperator {
        let mut out = Self::zeros(self.n_max);
        for (i, j, v) in self.iter() {
            let gap = i.generator_eigenvalue() - j.generator_eigenvalue();
            if gap != 0.0 {
                out.set(i, j, Complex64::new(0.0, -gap) * v);
            }
        }
        out
    }

    /// Drops coherences between different total photon numbers.
    pub fn twirl_total_number(&self) -> HermitianOperator {
        let mut out = self.clone();
        out.entries.retain(|(i, j), _| i.total() == j.total());
        out
    }

    /// Eigenvalues on the support, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let basis = self.support();
        if basis.is_empty() {
            return Vec::new();
        }
        let mut ev: Vec<f64> = linalg::eigh(&self.to_dense(&basis)).0.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// The diagonal operator `K = (n1 - n2) / 2` on the space truncated at `n_max`.
pub fn generator_k(n_max: u32) -> HermitianOperator {
    let mut op = HermitianOperator::zeros(n_max);
    for idx in basis(n_max) {
        op.set(idx, idx, Complex64::new(idx.generator_eigenvalue(), 0.0));
    }
    op
}

/// Unit-trace positive semidefinite Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator(HermitianOperator);

impl DensityOperator {
    /// Validates trace and positivity. Rounding-level trace errors are
    /// renormalised away.
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let trace = op.trace();
        let deviation = (trace - 1.0).abs();
        if deviation > RENORMALIZE_LIMIT {
            return Err(Error::NotNormalized { deviation });
        }
        let op = op.scaled(trace.recip());
        if let Some(&min_eigenvalue) = op.eigenvalues().first() {
            if min_eigenvalue < -PSD_TOL {
                return Err(Error::NotPositive { min_eigenvalue });
            }
        }
        Ok(DensityOperator(op))
    }

    /// Wraps an operator already known to be a valid state.
    pub(crate) fn from_valid(op: HermitianOperator) -> Self {
        DensityOperator(op)
    }

    /// Convex combination `sum_k w_k rho_k`; weights must be nonnegative and sum to one.
    pub fn mixture<'a>(n_max: u32, parts: impl IntoIterator<Item = (f64, &'a DensityOperator)>) -> Result<Self> {
        let mut op = HermitianOperator::zeros(n_max);
        let mut total = 0.0;
        for (w, rho) in parts {
            if !(w >= 0.0) {
                return Err(Error::invalid(format!("mixture weight {w} is negative")));
            }
            total += w;
            op.add_scaled(rho, w);
        }
        if (total - 1.0).abs() > RENORMALIZE_LIMIT {
            return Err(Error::invalid(format!("mixture weights sum to {total}")));
        }
        Ok(DensityOperator(op))
    }

    pub fn as_operator(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn into_operator(self) -> HermitianOperator {
        self.0
    }

    pub fn encode_phase(&self, phi: f64) -> DensityOperator {
        DensityOperator(self.0.encode_phase(phi))
    }

    pub fn twirl_total_number(&self) -> DensityOperator {
        DensityOperator(self.0.twirl_total_number())
    }

    /// `<i|rho|i>` over the support.
    pub fn diagonal(&self) -> impl Iterator<Item = (FockIndex, f64)> + '_ {
        self.0.iter().filter(|(i, j, _)| i == j).map(|(i, _, v)| (i, v.re))
    }
}

impl std::ops::Deref for DensityOperator {
    type Target = HermitianOperator;
    fn deref(&self) -> &HermitianOperator {
        &self.0
    }
}

/// A probe state, pure or mixed.
#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    Pure(PureState),
    Mixed(DensityOperator),
}

impl Probe {
    pub fn n_max(&self) -> u32 {
        match self {
            Probe::Pure(s) => s.n_max(),
            Probe::Mixed(r) => r.n_max(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, Probe::Pure(_))
    }

    pub fn as_pure(&self) -> Option<&PureState> {
        match self {
            Probe::Pure(s) => Some(s),
            Probe::Mixed(_) => None,
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        match self {
            Probe::Pure(s) => s.projector(),
            Probe::Mixed(r) => r.clone(),
        }
    }

    pub fn encode_phase(&self, phi: f64) -> Probe {
        match self {
            Probe::Pure(s) => Probe::Pure(s.encode_phase(phi)),
            Probe::Mixed(r) => Probe::Mixed(r.encode_phase(phi)),
        }
    }

    /// The state seen by measurements insensitive to a common phase on both
    /// modes: coherences between different total photon numbers are erased.
    pub fn twirl_total_number(&self) -> DensityOperator {
        match self {
            Probe::Pure(s) => s.projector().twirl_total_number(),
            Probe::Mixed(r) => r.twirl_total_number(),
        }
    }

    /// Fock-basis populations.
    pub fn populations(&self) -> Vec<(FockIndex, f64)> {
        match self {
            Probe::Pure(s) => s.iter().map(|(i, a)| (i, a.norm_sqr())).collect(),
            Probe::Mixed(r) => r.diagonal().collect(),
        }
    }

    fn expect_diagonal(&self, f: impl Fn(FockIndex) -> f64) -> f64 {
        self.populations().into_iter().map(|(i, p)| p * f(i)).sum()
    }

    /// `<n1 + n2>`.
    pub fn mean_total_number(&self) -> f64 {
        self.expect_diagonal(|i| i.total() as f64)
    }

    /// `<(n1 + n2)^2>`.
    pub fn mean_total_number_squared(&self) -> f64 {
        self.expect_diagonal(|i| (i.total() as f64).powi(2))
    }

    pub fn vacuum_probability(&self) -> f64 {
        self.populations()
            .into_iter()
            .filter(|(i, _)| *i == FockIndex::VACUUM)
            .map(|(_, p)| p)
            .sum()
    }

    /// Marginal distribution of `n1 + n2`.
    pub fn total_number_distribution(&self) -> BTreeMap<u32, f64> {
        let mut dist = BTreeMap::new();
        for (i, p) in self.populations() {
            *dist.entry(i.total()).or_insert(0.0) += p;
        }
        dist
    }
}

impl From<PureState> for Probe {
    fn from(s: PureState) -> Self {
        Probe::Pure(s)
    }
}

impl From<DensityOperator> for Probe {
    fn from(r: DensityOperator) -> Self {
        Probe::Mixed(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn noon(n: u32) -> PureState {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        PureState::from_real(n, [(FockIndex::new(n, 0), a), (FockIndex::new(0, n), a)]).unwrap()
    }

    #[test]
    fn generator_entries() {
        let k = generator_k(3);
        assert_eq!(k.get(FockIndex::new(2, 0), FockIndex::new(2, 0)).re, 1.0);
        assert_eq!(k.get(FockIndex::new(1, 1), FockIndex::new(1, 1)).re, 0.0);
        assert_eq!(k.get(FockIndex::new(0, 3), FockIndex::new(0, 3)).re, -1.5);
    }

    #[test]
    fn renormalises_rounding_but_rejects_bad_norm() {
        let s = PureState::from_real(1, [(FockIndex::VACUUM, 1.0 + 1e-11)]).unwrap();
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
        let err = PureState::from_real(1, [(FockIndex::VACUUM, 1.1)]).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
    }

    #[test]
    fn rejects_index_beyond_truncation() {
        let err = PureState::from_real(1, [(FockIndex::new(2, 0), 1.0)]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { .. }));
    }

    #[test]
    fn noon_relative_phase() {
        let n = 3;
        let phi = 0.37;
        let s = noon(n).encode_phase(phi);
        let ratio = s.amplitude(FockIndex::new(n, 0)) / s.amplitude(FockIndex::new(0, n));
        let expected = Complex64::from_polar(1.0, -(n as f64) * phi);
        assert_abs_diff_eq!((ratio - expected).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn balanced_occupation_is_phase_invariant() {
        let s = PureState::basis_state(2, FockIndex::new(2, 2)).unwrap();
        assert_eq!(s.encode_phase(1.3), s);
    }

    #[test]
    fn encode_phase_zero_is_identity() {
        let rho = noon(2).projector();
        assert_eq!(rho.encode_phase(0.0), rho);
    }

    #[test]
    fn opposite_convention_is_phase_reflection() {
        // exp(+i phi K) rho exp(-i phi K) is the encoding at -phi.
        let rho = noon(2).projector();
        let phi = 0.8;
        let mut flipped = rho.as_operator().clone();
        for (i, j, v) in rho.iter() {
            let u = Complex64::from_polar(1.0, phi * (i.generator_eigenvalue() - j.generator_eigenvalue()));
            flipped.set(i, j, v * u);
        }
        assert!(flipped.max_abs_diff(&rho.encode_phase(-phi)) < 1e-15);
    }

    #[test]
    fn hermitian_storage_mirrors_conjugate() {
        let mut op = HermitianOperator::zeros(1);
        let a = FockIndex::new(1, 0);
        let b = FockIndex::new(0, 1);
        op.set(a, b, Complex64::new(0.5, 0.25));
        assert_eq!(op.get(a, b), Complex64::new(0.5, 0.25));
        assert_eq!(op.get(b, a), Complex64::new(0.5, -0.25));
        assert_eq!(op.len(), 1);
    }

    #[test]
    fn from_entries_rejects_non_hermitian_pairs() {
        let a = FockIndex::new(1, 0);
        let b = FockIndex::new(0, 1);
        let c = Complex64::new(0.1, 0.2);
        assert!(HermitianOperator::from_entries(1, [(a, b, c), (b, a, c.conj())]).is_ok());
        assert!(HermitianOperator::from_entries(1, [(a, b, c), (b, a, c)]).is_err());
    }

    #[test]
    fn trace_product_matches_dense() {
        let rho = noon(2).projector();
        let k = generator_k(2);
        let k2 = {
            let mut m = HermitianOperator::zeros(2);
            for idx in basis(2) {
                m.set(idx, idx, Complex64::new(idx.generator_eigenvalue().powi(2), 0.0));
            }
            m
        };
        assert_abs_diff_eq!(rho.trace_product(&k), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.trace_product(&k2), 1.0, epsilon = 1e-15);
        let b: Vec<_> = basis(2).collect();
        let dense = (rho.to_dense(&b) * k2.to_dense(&b)).trace();
        assert_abs_diff_eq!(dense.re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn density_rejects_negative_eigenvalue() {
        let mut op = HermitianOperator::zeros(1);
        op.set(FockIndex::new(0, 0), FockIndex::new(0, 0), Complex64::new(1.2, 0.0));
        op.set(FockIndex::new(1, 0), FockIndex::new(1, 0), Complex64::new(-0.2, 0.0));
        assert!(matches!(DensityOperator::new(op), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn twirl_keeps_fixed_number_states() {
        let psi = noon(4);
        let rho = psi.projector();
        assert_eq!(Probe::from(psi).twirl_total_number(), rho);
    }

    #[test]
    fn number_statistics_of_fixed_number_state() {
        let p = Probe::from(noon(3));
        assert_abs_diff_eq!(p.mean_total_number(), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.mean_total_number_squared(), 9.0, epsilon = 1e-13);
        assert_eq!(p.vacuum_probability(), 0.0);
        let dist = p.total_number_distribution();
        assert_eq!(dist.len(), 1);
        assert_abs_diff_eq!(dist[&3], 1.0, epsilon = 1e-15);
    }
}
