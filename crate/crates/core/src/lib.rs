//! Mixture-of-Gaussian limit laws for modified ergodic sums.
//!
//! Ergodic sums `sum_{k<n} phi(T^k x)` of a centered observable over a
//! chaotic system satisfy a central limit theorem. Perturbing the observable
//! by a base-point-dependent translation (`phi(theta_x(T^k x))`, e.g. the
//! classical sums `sum phi((2^k - 1) x)`) changes the limit: the normalized
//! sums converge to a *mixture* of centered Gaussians, mixing the asymptotic
//! variance of the translated observable over the pushforward of the volume
//! by the modifier.
//!
//! This crate computes both sides at desk scale:
//! - exact closed-form variance profiles and the resulting mixture laws
//!   ([`variance`], [`limitlaw`]);
//! - large-scale Monte Carlo simulation of the modified sums on exact
//!   fixed-point orbits ([`dynamics`], [`montecarlo`]);
//! - transfer-operator and decorrelation diagnostics backing the
//!   assumptions ([`decorrelation`]);
//! - an end-to-end verification suite comparing the two routes
//!   ([`acceptance`]).

pub mod acceptance;
pub mod config;
pub mod decorrelation;
pub mod dynamics;
pub mod limitlaw;
pub mod modifiers;
pub mod montecarlo;
pub mod observables;
pub mod report;
pub mod variance;

pub use dynamics::{
    BitFraction, IntMatrix, LacunarySequence, System, ToralPrecision, TorusPoint,
};
pub use limitlaw::MixtureLaw;
pub use modifiers::{ModifierMap, ParameterGrid};
pub use montecarlo::{EmpiricalDistribution, ExperimentSpec};
pub use observables::{FourierObservable, StepFunction1D, TrigPolynomial};
pub use variance::VarianceProfile;
