//! Photon-counting measurements and finite-shot sampling.
//!
//! Counting directly after the phase shifts only sees Fock populations, which
//! do not depend on the phase. To read out the relative phase the two modes are
//! recombined on a beam splitter first (the second half of a Mach-Zehnder
//! interferometer); [`mach_zehnder_counting_povm`] folds that unitary into the
//! measurement effects.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{basis, FockIndex, HermitianOperator, Probe};
use crate::frequentist::Povm;
use crate::states::StateSpec;

/// Projectors onto every `|n1, n2>` with both occupations at most `n_max`.
pub fn photon_counting_povm(n_max: u32) -> Povm {
    let labels: Vec<FockIndex> = basis(n_max).collect();
    let effects = labels
        .iter()
        .map(|&idx| {
            let mut e = HermitianOperator::zeros(n_max);
            e.set(idx, idx, Complex64::new(1.0, 0.0));
            e
        })
        .collect();
    Povm::from_valid(n_max, effects, labels)
}

/// Matrix of a beam splitter with mixing angle `theta` on the sector of total
/// photon number `n`, in the basis `|k, n-k>` for `k = 0..=n`. The mode
/// operators transform as `a1^dag -> cos(theta) a1^dag + i sin(theta) a2^dag`
/// and `a2^dag -> i sin(theta) a1^dag + cos(theta) a2^dag`.
///
/// Entry `[k][j]` is `<k, n-k| U |j, n-j>`.
pub fn beam_splitter_sector(n: u32, theta: f64) -> Vec<Vec<Complex64>> {
    let n = n as usize;
    let t = Complex64::new(theta.cos(), 0.0);
    let ir = Complex64::new(0.0, theta.sin());
    let log_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    let mut u = vec![vec![Complex64::default(); n + 1]; n + 1];
    for j in 0..=n {
        // coefficients of a1^dag^m a2^dag^(d - m) after d factors
        let mut poly = vec![Complex64::new(1.0, 0.0)];
        for step in 0..n {
            let (c1, c2) = if step < j { (t, ir) } else { (ir, t) };
            let mut next = vec![Complex64::default(); poly.len() + 1];
            for (m, &c) in poly.iter().enumerate() {
                next[m + 1] += c * c1;
                next[m] += c * c2;
            }
            poly = next;
        }
        let norm_in = 0.5 * (log_fact[j] + log_fact[n - j]);
        for (k, &c) in poly.iter().enumerate() {
            let norm_out = 0.5 * (log_fact[k] + log_fact[n - k]);
            u[k][j] = c * (norm_out - norm_in).exp();
        }
    }
    u
}

/// Counting after a beam splitter of mixing angle `theta`. Sectors whose total
/// photon number exceeds `n_max` are not closed under the beam splitter on the
/// truncated space and are counted directly.
pub fn beam_splitter_counting_povm(n_max: u32, theta: f64) -> Povm {
    let mut labels = Vec::new();
    let mut effects = Vec::new();
    for total in 0..=2 * n_max {
        let lo = total.saturating_sub(n_max);
        let hi = total.min(n_max);
        let sector: Vec<FockIndex> = (lo..=hi).map(|k| FockIndex::new(k, total - k)).collect();
        if total <= n_max {
            let u = beam_splitter_sector(total, theta);
            for k in 0..=total as usize {
                // E_k = U^dag |k><k| U, so <a|E_k|b> = conj(U[k][a]) U[k][b]
                let mut e = HermitianOperator::zeros(n_max);
                for a in 0..=total as usize {
                    for b in a..=total as usize {
                        let v = u[k][a].conj() * u[k][b];
                        if v.norm() > 1e-300 {
                            e.set(sector[a], sector[b], v);
                        }
                    }
                }
                labels.push(sector[k]);
                effects.push(e);
            }
        } else {
            for &idx in &sector {
                let mut e = HermitianOperator::zeros(n_max);
                e.set(idx, idx, Complex64::new(1.0, 0.0));
                labels.push(idx);
                effects.push(e);
            }
        }
    }
    Povm::from_valid(n_max, effects, labels)
}

/// Counting after a balanced (50:50) beam splitter.
pub fn mach_zehnder_counting_povm(n_max: u32) -> Povm {
    beam_splitter_counting_povm(n_max, std::f64::consts::FRAC_PI_4)
}

/// Born-rule probabilities `Tr(E_x rho(phi))` for every outcome of `povm`.
pub fn outcome_distribution(probe: &Probe, phi: f64, povm: &Povm) -> BTreeMap<FockIndex, f64> {
    let encoded = probe.to_density().encode_phase(phi);
    let mut dist = BTreeMap::new();
    for (label, effect) in povm.iter() {
        *dist.entry(label).or_insert(0.0) += effect.trace_product(&encoded);
    }
    dist
}

/// Histogram of simulated detection events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingRecord {
    pub histogram: Vec<OutcomeCount>,
    pub shots: u64,
    pub seed: u64,
    pub phi: f64,
    /// Largest total photon number registered in a single shot.
    pub worst_case_photons: u32,
    pub mean_photons_per_shot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCount {
    pub label: FockIndex,
    pub count: u64,
}

impl CountingRecord {
    pub fn count(&self, label: FockIndex) -> u64 {
        self.histogram.iter().find(|c| c.label == label).map_or(0, |c| c.count)
    }

    /// Empirical distribution of the total photon number per shot.
    pub fn total_number_frequencies(&self) -> BTreeMap<u32, f64> {
        let mut freq = BTreeMap::new();
        for c in &self.histogram {
            *freq.entry(c.label.total()).or_insert(0.0) += c.count as f64 / self.shots as f64;
        }
        freq
    }

    /// CSV with header `label_n1,label_n2,count`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "label_n1,label_n2,count")?;
        for c in &self.histogram {
            writeln!(out, "{},{},{}", c.label.n1, c.label.n2, c.count)?;
        }
        Ok(())
    }
}

/// Draws `shots` i.i.d. outcomes of `povm` on `rho(phi)` from a ChaCha8
/// stream seeded by `seed`.
pub fn sample_counts(probe: &Probe, phi: f64, povm: &Povm, shots: u64, seed: u64) -> Result<CountingRecord> {
    if shots == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    let dist = outcome_distribution(probe, phi, povm);
    let (labels, weights): (Vec<FockIndex>, Vec<f64>) = dist.into_iter().map(|(l, p)| (l, p.max(0.0))).unzip();
    let sampler = WeightedIndex::new(&weights).map_err(|e| Error::invalid(format!("outcome distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; labels.len()];
    for _ in 0..shots {
        counts[sampler.sample(&mut rng)] += 1;
    }
    let histogram: Vec<OutcomeCount> = labels
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(&label, &count)| OutcomeCount { label, count })
        .collect();
    let worst_case_photons = histogram.iter().map(|c| c.label.total()).max().unwrap_or(0);
    let photons: u64 = histogram.iter().map(|c| c.label.total() as u64 * c.count).sum();
    Ok(CountingRecord {
        histogram,
        shots,
        seed,
        phi,
        worst_case_photons,
        mean_photons_per_shot: photons as f64 / shots as f64,
    })
}

/// Detection-event classes of the vacuum-Fock families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventClass {
    /// Neither detector clicks.
    NoClick,
    /// `N` photons crossed the phase shift in superposition.
    NClass,
    /// `N` photons crossed each arm; no relative phase accumulates.
    TwoNClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventClassSummary {
    pub class: EventClass,
    pub probability: f64,
    /// Photons through the sample in an event of this class.
    pub photons: u32,
    pub informative: bool,
}

pub fn event_class_summary(spec: &StateSpec) -> Result<Vec<EventClassSummary>> {
    let n = match spec {
        StateSpec::VacuumFockSquared { n, .. }
        | StateSpec::RhoOns { n, .. }
        | StateSpec::RhoOnn { n, .. }
        | StateSpec::PsiOnn { n, .. } => *n,
        other => return Err(Error::Unsupported { operation: "event_class_summary", kind: other.kind().into() }),
    };
    let dist = spec.build()?.total_number_distribution();
    let mass = |k: u32| dist.get(&k).copied().unwrap_or(0.0);
    Ok(vec![
        EventClassSummary { class: EventClass::NoClick, probability: mass(0), photons: 0, informative: false },
        EventClassSummary { class: EventClass::NClass, probability: mass(n), photons: n, informative: true },
        EventClassSummary { class: EventClass::TwoNClass, probability: mass(2 * n), photons: 2 * n, informative: false },
    ])
}
