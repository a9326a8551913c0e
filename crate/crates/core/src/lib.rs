//! Metrological power and photon-number exposure of two-mode optical probes.
//!
//! States live on a truncated two-mode Fock space and are stored sparsely:
//! every named probe family occupies only a handful of basis kets. Phase
//! encoding uses `rho(phi) = exp(-i phi K) rho exp(i phi K)` with
//! `K = (n1 - n2) / 2`.
//!
//! * [`fock`]: indices, kets, Hermitian operators, phase encoding, number statistics.
//! * [`states`]: the named probe families and their construction from a [`StateSpec`].
//! * [`frequentist`]: quantum and classical Fisher information, SLD, closed forms.
//! * [`bayes`]: priors, prior-averaged states, the optimal estimator and metrological power.
//! * [`counting`]: photon-counting measurements, outcome sampling, detection-event classes.

pub mod bayes;
pub mod counting;
pub mod error;
pub mod fock;
mod linalg;
pub mod quadrature;
pub mod states;
pub mod frequentist;

pub use error::{Error, Result};
pub use fock::{DensityOperator, FockIndex, HermitianOperator, Probe, PureState};
pub use states::StateSpec;

/// Allowed deviation of a norm or trace from one after construction.
pub const NORM_TOL: f64 = 1e-12;

/// Norm deviations below this are treated as rounding and renormalised away;
/// anything larger is rejected.
pub const RENORMALIZE_LIMIT: f64 = 1e-9;

/// Smallest eigenvalue tolerated for a positive semidefinite operator.
pub const PSD_TOL: f64 = 1e-10;

/// Eigenvalue sums at or below this are treated as outside the support in
/// Lyapunov solves.
pub const EPS_SUPP: f64 = 1e-10;

/// Outcome probabilities below this are pruned from Fisher information sums.
pub const EPS_PROB: f64 = 1e-12;

/// Largest right-hand-side component allowed outside the support of a
/// Lyapunov solve before the solution is declared ill-defined.
pub const LEAK_TOL: f64 = 1e-10;
