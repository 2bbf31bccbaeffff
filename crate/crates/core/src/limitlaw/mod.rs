//! Predicted limit laws: mixtures of centered Gaussians over a variance
//! profile, with vanishing-variance components contributing a Dirac mass at
//! zero.
//!
//! Quadrature over a profile is plain weighted summation; the grid
//! resolution of the profile is the accuracy knob, cross-checked by
//! resolution doubling in the tests. Atoms with bitwise-equal `sigma^2`
//! collapse into one component, so product grids whose variance depends on
//! one linear combination of coordinates cost their per-axis resolution,
//! not its power.

mod normal;

pub use normal::{erf, erfc, std_normal_cdf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::observables::StepFunction1D;
use crate::variance::VarianceProfile;

/// A finite mixture of centered Gaussians `sum_i w_i N(0, sigma_i^2)`.
#[derive(Debug, Clone)]
pub struct MixtureLaw {
    /// `(weight, sigma)` components, sigma ascending, equal sigmas merged.
    components: Vec<(f64, f64)>,
}

impl MixtureLaw {
    pub fn from_profile(profile: &VarianceProfile) -> Self {
        let mut pairs: Vec<(f64, f64)> = profile
            .sigma2()
            .iter()
            .zip(profile.weights())
            .map(|(&s2, &w)| (s2, w))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite variances"));
        let mut components: Vec<(f64, f64)> = Vec::new();
        let mut last_s2 = f64::NAN;
        for (s2, w) in pairs {
            if s2 == last_s2 {
                components.last_mut().expect("non-empty after first push").0 += w;
            } else {
                components.push((w, s2.sqrt()));
                last_s2 = s2;
            }
        }
        Self { components }
    }

    /// A single centered Gaussian (or Dirac at 0 for `sigma2 = 0`).
    pub fn gaussian(sigma2: f64) -> Self {
        Self {
            components: vec![(1.0, sigma2.sqrt())],
        }
    }

    /// Explicit `(weight, sigma^2)` atoms.
    pub fn from_atoms(atoms: &[(f64, f64)]) -> Self {
        Self {
            components: atoms.iter().map(|&(w, s2)| (w, s2.sqrt())).collect(),
        }
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    pub fn max_sigma(&self) -> f64 {
        self.components
            .iter()
            .map(|&(_, s)| s)
            .fold(0.0, f64::max)
    }

    /// Mixture CDF: `sum_i w_i Phi(t / sigma_i)`, the `sigma_i = 0`
    /// components contributing the Dirac convention `1_{t >= 0}`.
    pub fn cdf(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &(w, sigma) in &self.components {
            if sigma == 0.0 {
                if t >= 0.0 {
                    acc += w;
                }
            } else {
                acc += w * std_normal_cdf(t / sigma);
            }
        }
        acc
    }

    /// Mixture characteristic function `sum_i w_i exp(-sigma_i^2 t^2 / 2)`
    /// (real: the components are centered).
    pub fn charfn(&self, t: f64) -> f64 {
        self.components
            .iter()
            .map(|&(w, sigma)| w * (-0.5 * sigma * sigma * t * t).exp())
            .sum()
    }

    /// Predicted second moment `sum_i w_i sigma_i^2`.
    pub fn second_moment(&self) -> f64 {
        self.components
            .iter()
            .map(|&(w, sigma)| w * sigma * sigma)
            .sum()
    }

    /// Deterministic sampler: component by inverse-CDF on the weights, then
    /// `sigma * Z`.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let cumulative: Vec<f64> = self
            .components
            .iter()
            .scan(0.0, |acc, &(w, _)| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        (0..count)
            .map(|_| {
                let u: f64 = rand::Rng::gen(&mut rng);
                let idx = cumulative.partition_point(|&c| c < u);
                let sigma = self.components[idx.min(self.components.len() - 1)].1;
                let z: f64 = StandardNormal.sample(&mut rng);
                sigma * z
            })
            .collect()
    }
}

/// Characteristic function of `psi(Y) Z` for `Y` uniform on `[0,1)`, `Z`
/// with characteristic function `base`, `psi` a step function:
/// `sum_j (a_{j+1} - a_j) base(c_j t)`.
pub fn step_mixture_charfn<F>(base: F, psi: &StepFunction1D, t: f64) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    psi.pieces()
        .map(|(len, value)| len * base(value * t))
        .sum()
}

/// The standard normal characteristic function `exp(-t^2/2)` as a base for
/// [`step_mixture_charfn`].
pub fn gaussian_charfn(t: f64) -> Complex64 {
    Complex64::new((-0.5 * t * t).exp(), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::TorusPoint;
    use crate::variance::{Provenance, VarianceProfile};
    use approx::assert_relative_eq;

    fn constant_profile(sigma2: f64, atoms: usize) -> VarianceProfile {
        VarianceProfile::new(
            (0..atoms).map(|_| TorusPoint::zero(1)).collect(),
            vec![1.0 / atoms as f64; atoms],
            vec![sigma2; atoms],
            Provenance::ClosedForm,
        )
        .unwrap()
    }

    #[test]
    fn unit_profile_is_standard_normal() {
        let law = MixtureLaw::from_profile(&constant_profile(1.0, 16));
        assert_eq!(law.components().len(), 1); // merged bitwise-equal atoms
        for t in [-2.0, -0.5, 0.0, 0.5, 2.0] {
            assert_relative_eq!(law.cdf(t), std_normal_cdf(t), epsilon = 1e-15);
        }
    }

    #[test]
    fn dirac_convention() {
        let law = MixtureLaw::from_profile(&constant_profile(0.0, 4));
        assert_eq!(law.cdf(-1.0), 0.0);
        assert_eq!(law.cdf(0.0), 1.0);
        assert_eq!(law.cdf(1.0), 1.0);
        assert!(law.sample(3, 100).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn charfn_at_zero_is_one() {
        let law = MixtureLaw::from_atoms(&[(0.5, 1.0), (0.5, 4.0)]);
        assert_relative_eq!(law.charfn(0.0), 1.0);
    }

    #[test]
    fn two_atom_charfn_closed_form() {
        let law = MixtureLaw::from_atoms(&[(0.5, 1.0), (0.5, 4.0)]);
        for t in [0.3f64, 1.0, 2.5] {
            let expect = 0.5 * (-0.5 * t * t).exp() + 0.5 * (-2.0 * t * t).exp();
            assert_relative_eq!(law.charfn(t), expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn step_mixture_matches_two_atom() {
        let psi = StepFunction1D::new(vec![0.0, 0.5, 1.0], vec![1.0, 2.0]).unwrap();
        for t in [0.5f64, 1.0, 2.0] {
            let got = step_mixture_charfn(gaussian_charfn, &psi, t);
            let expect = 0.5 * (-0.5 * t * t).exp() + 0.5 * (-2.0 * t * t).exp();
            assert_relative_eq!(got.re, expect, epsilon = 1e-15);
            assert_relative_eq!(got.im, 0.0);
        }
    }

    #[test]
    fn step_mixture_trivial_cases() {
        let one = StepFunction1D::constant(1.0);
        assert_relative_eq!(
            step_mixture_charfn(gaussian_charfn, &one, 1.3).re,
            (-0.5f64 * 1.3 * 1.3).exp()
        );
        let zero = StepFunction1D::constant(0.0);
        for t in [0.1, 1.0, 7.0] {
            assert_relative_eq!(step_mixture_charfn(gaussian_charfn, &zero, t).re, 1.0);
        }
    }

    #[test]
    fn cdf_limits_within_budget() {
        let law = MixtureLaw::from_atoms(&[(0.25, 0.5), (0.5, 1.0), (0.25, 2.0)]);
        let t = 12.0 * law.max_sigma();
        assert!(law.cdf(t) > 1.0 - 1e-12);
        assert!(law.cdf(-t) < 1e-12);
    }

    #[test]
    fn cdf_monotone_on_grid() {
        let law = MixtureLaw::from_atoms(&[(0.3, 0.0), (0.4, 0.7), (0.3, 2.5)]);
        let mut prev = -1.0;
        for i in -600..=600 {
            let v = law.cdf(i as f64 * 0.01);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn density_integrates_to_one() {
        // finite-difference derivative of the CDF integrates to 1 on
        // non-degenerate profiles
        let law = MixtureLaw::from_atoms(&[(0.5, 0.5), (0.5, 2.0)]);
        let h = 1e-4;
        let lim = 12.0 * law.max_sigma();
        let steps = (2.0 * lim / h) as usize;
        let mut integral = 0.0;
        for i in 0..steps {
            let t = -lim + i as f64 * h;
            integral += (law.cdf(t + h) - law.cdf(t - h)) / (2.0 * h) * h;
        }
        assert!((integral - 1.0).abs() < 1e-6, "integral {integral}");
    }

    #[test]
    fn sampler_moment_identity() {
        let law = MixtureLaw::from_atoms(&[(0.5, 1.0), (0.5, 4.0)]);
        let samples = law.sample(11, 100_000);
        let m2: f64 = samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64;
        let var_of_sq: f64 = samples
            .iter()
            .map(|v| (v * v - m2).powi(2))
            .sum::<f64>()
            / samples.len() as f64;
        let se = (var_of_sq / samples.len() as f64).sqrt();
        assert!(
            (m2 - law.second_moment()).abs() < 3.0 * se,
            "second moment {m2} vs {}",
            law.second_moment()
        );
    }

    #[test]
    fn sampler_is_deterministic() {
        let law = MixtureLaw::from_atoms(&[(0.5, 1.0), (0.5, 4.0)]);
        assert_eq!(law.sample(9, 1000), law.sample(9, 1000));
    }
}
