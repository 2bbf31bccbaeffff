//! Asymptotic variances and variance profiles.
//!
//! For the doubling map the asymptotic variance of a centered trigonometric
//! polynomial is the finite sum
//! `sum_p [ |c_p|^2 + 2 sum_{j>=1} c_{2^j p} conj(c_p) ]`,
//! truncating once `2^j p` leaves the support. For a toral automorphism it
//! is `mu(phi^2) + 2 sum_k <phi, phi o T^k>` with the inner products matched
//! on frequency orbits of the transposed matrix; the k-sum stops under a
//! hyperbolic escape certificate (all image frequencies outside the support
//! ball with strictly growing norms) and fails loudly if the cap is reached.
//!
//! A variance profile attaches `sigma^2` to every translation parameter in
//! the pushforward support; mixtures of Gaussians over the profile are the
//! predicted limit laws.

use rayon::prelude::*;
use thiserror::Error;

use crate::decorrelation::{covariance_decay, DecorrelationError};
use crate::dynamics::{
    BitFraction, DynamicsError, IntMatrix, LacunarySequence, System, TorusPoint, UniformStreams,
};
use crate::modifiers::{HistogramSampling, ModifierError, ModifierMap, ParameterGrid};
use crate::observables::{FourierObservable, ObservableError};

#[derive(Debug, Error)]
pub enum VarianceError {
    #[error("doubling-map variance needs a circle observable, got dimension {0}")]
    NotOneDimensional(usize),
    #[error(
        "frequency orbits did not escape the support ball within {cap} steps \
         (matrix is too close to parabolic for the series to certify)"
    )]
    NoEscape { cap: usize },
    #[error("variance series produced {0}, below the negative-rounding budget")]
    NegativeVariance(f64),
    #[error("no closed-form variance for this system/modifier combination")]
    Unsupported,
    #[error("profile weights sum to {0}, not 1")]
    MassDefect(f64),
    #[error("profile has negative variance {0}")]
    NegativeProfileEntry(f64),
    #[error("profile point/weight/variance lengths disagree")]
    LengthMismatch,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error(transparent)]
    Modifier(#[from] ModifierError),
    #[error(transparent)]
    Decorrelation(#[from] DecorrelationError),
}

/// Default cap on the toral covariance series.
pub const DEFAULT_ESCAPE_CAP: usize = 64;

/// Values within this budget below zero are treated as rounded exact zeros
/// (coboundary points).
const NEGATIVE_BUDGET: f64 = 1e-12;

fn clamp_variance(raw: f64) -> Result<f64, VarianceError> {
    if raw < -NEGATIVE_BUDGET {
        return Err(VarianceError::NegativeVariance(raw));
    }
    Ok(raw.max(0.0))
}

/// Asymptotic variance of doubling-map ergodic sums.
pub fn variance_doubling(phi: &FourierObservable) -> Result<f64, VarianceError> {
    if phi.dim() != 1 {
        return Err(VarianceError::NotOneDimensional(phi.dim()));
    }
    let radius = phi.support_radius();
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for (p, c) in phi.coeffs() {
        acc += c.norm_sqr();
        let mut q = p[0] as i128;
        loop {
            q *= 2;
            if q.unsigned_abs() > radius as u128 {
                break;
            }
            acc += 2.0 * phi.coeff(&[q as i64]) * c.conj();
        }
    }
    assert!(
        acc.im.abs() <= 1e-12 * (1.0 + phi.coeff_abs_sum().powi(2)),
        "variance series must be real"
    );
    clamp_variance(acc.re)
}

/// Asymptotic variance of the translated observable `phi(. + y)`.
pub fn variance_doubling_translated(
    phi: &FourierObservable,
    y: &TorusPoint,
) -> Result<f64, VarianceError> {
    variance_doubling(&phi.translate(y)?)
}

/// Asymptotic variance of ergodic sums under a toral automorphism, with the
/// default escape cap.
pub fn variance_toral(phi: &FourierObservable, a: &IntMatrix) -> Result<f64, VarianceError> {
    variance_toral_with_cap(phi, a, DEFAULT_ESCAPE_CAP)
}

pub fn variance_toral_with_cap(
    phi: &FourierObservable,
    a: &IntMatrix,
    cap: usize,
) -> Result<f64, VarianceError> {
    let check = a.check_ergodic()?;
    if !check.ergodic {
        return Err(VarianceError::Dynamics(DynamicsError::NotErgodic(
            check.failure.expect("non-ergodic result carries a failure"),
        )));
    }
    if phi.is_zero() {
        return Ok(0.0);
    }
    let at = a.transpose();
    let radius = phi.support_radius() as u128;
    let support: Vec<(&Vec<i64>, num_complex::Complex64)> =
        phi.coeffs().iter().map(|(p, &c)| (p, c)).collect();
    // image frequencies (None = overflowed, i.e. escaped beyond tracking)
    let mut images: Vec<Option<Vec<i128>>> = support
        .iter()
        .map(|(p, _)| Some(p.iter().map(|&f| f as i128).collect()))
        .collect();
    let norm = |v: &[i128]| v.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
    let mut prev_norms: Vec<u128> = images
        .iter()
        .map(|im| im.as_ref().map(|v| norm(v)).unwrap_or(u128::MAX))
        .collect();

    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for (_, c) in &support {
        acc += c.norm_sqr();
    }
    let mut escaped = false;
    for _k in 1..=cap {
        let mut all_outside = true;
        let mut all_growing = true;
        let mut term = num_complex::Complex64::new(0.0, 0.0);
        for (i, (_, c_q)) in support.iter().enumerate() {
            images[i] = images[i].take().and_then(|v| at.mul_vec_i128(&v));
            match &images[i] {
                Some(v) => {
                    let nrm = norm(v);
                    if nrm <= radius {
                        all_outside = false;
                        // exact i64 conversion is safe inside the ball
                        let key: Vec<i64> = v.iter().map(|&c| c as i64).collect();
                        term += c_q * phi.coeff(&key).conj();
                    }
                    if nrm <= prev_norms[i] {
                        all_growing = false;
                    }
                    prev_norms[i] = nrm;
                }
                None => {
                    // overflow certifies the frequency left every ball
                    prev_norms[i] = u128::MAX;
                }
            }
        }
        acc += 2.0 * term;
        if all_outside && all_growing {
            escaped = true;
            break;
        }
    }
    if !escaped {
        return Err(VarianceError::NoEscape { cap });
    }
    assert!(
        acc.im.abs() <= 1e-12 * (1.0 + phi.coeff_abs_sum().powi(2)),
        "variance series must be real"
    );
    clamp_variance(acc.re)
}

/// Provenance of the entries of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    Empirical,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ClosedForm => "closed-form",
            Self::Empirical => "empirical",
        }
    }
}

/// A quadrature table `(y_i, w_i, sigma^2_i)` over the translation parameter.
#[derive(Debug, Clone)]
pub struct VarianceProfile {
    points: Vec<TorusPoint>,
    weights: Vec<f64>,
    sigma2: Vec<f64>,
    provenance: Provenance,
}

impl VarianceProfile {
    pub fn new(
        points: Vec<TorusPoint>,
        weights: Vec<f64>,
        sigma2: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self, VarianceError> {
        if points.len() != weights.len() || points.len() != sigma2.len() {
            return Err(VarianceError::LengthMismatch);
        }
        let mass: f64 = weights.iter().sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(VarianceError::MassDefect(mass));
        }
        if let Some(&bad) = sigma2.iter().find(|&&s| s < 0.0) {
            return Err(VarianceError::NegativeProfileEntry(bad));
        }
        Ok(Self {
            points,
            weights,
            sigma2,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `integral of sigma^2 d(weights)`: the predicted second moment of the
    /// limit law.
    pub fn integral(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.sigma2)
            .map(|(w, s)| w * s)
            .sum()
    }

    pub fn max_sigma2(&self) -> f64 {
        self.sigma2.iter().copied().fold(0.0, f64::max)
    }
}

/// Options for profile construction.
#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions {
    /// Budget for histogram pushforwards (tabulated/singular modifiers).
    pub histogram: HistogramSampling,
    /// Budget for the empirical per-cell variance estimates.
    pub empirical: EmpiricalVarianceOptions,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            histogram: HistogramSampling::default(),
            empirical: EmpiricalVarianceOptions::default(),
        }
    }
}

/// The closed-form variance of the translated observable under a system, if
/// one exists.
fn closed_form_sigma2(
    system: &System,
    phi: &FourierObservable,
    y: &TorusPoint,
) -> Result<f64, VarianceError> {
    match system {
        System::Doubling => variance_doubling_translated(phi, y),
        System::Lacunary(seq) => match seq {
            LacunarySequence::PowersOfTwo | LacunarySequence::PowersOfTwoMinusOne => {
                variance_doubling_translated(phi, y)
            }
            LacunarySequence::Explicit(_) => Err(VarianceError::Unsupported),
        },
        System::Toral { matrix, .. } => variance_toral(&phi.translate(y)?, matrix),
    }
}

/// Build the variance profile of `(system, theta, phi)` over a parameter
/// grid: weights from the pushforward of the modifier, `sigma^2` in closed
/// form for translation modifiers, or estimated per cell for tabulated ones.
pub fn variance_profile(
    system: &System,
    theta: &ModifierMap,
    phi: &FourierObservable,
    grid: &ParameterGrid,
    opts: &ProfileOptions,
) -> Result<VarianceProfile, VarianceError> {
    system.validate()?;
    theta.validate(system.dim())?;
    let pushforward = theta.pushforward_weights(grid, opts.histogram)?;
    let empirical = matches!(theta, ModifierMap::Tabulated(_));
    // drop zero-weight cells (histogram pushforwards put no mass there)
    let live: Vec<(TorusPoint, f64)> = pushforward
        .points
        .into_iter()
        .zip(pushforward.weights)
        .filter(|(_, w)| *w > 0.0)
        .collect();
    let sigma2: Vec<f64> = if empirical {
        live.par_iter()
            .map(|(y, _)| {
                let translated = phi.translate(y)?;
                empirical_variance(system, &translated, &opts.empirical).map(|(v, _)| v)
            })
            .collect::<Result<_, _>>()?
    } else {
        live.par_iter()
            .map(|(y, _)| closed_form_sigma2(system, phi, y))
            .collect::<Result<_, _>>()?
    };
    let (points, weights): (Vec<_>, Vec<_>) = live.into_iter().unzip();
    VarianceProfile::new(
        points,
        weights,
        sigma2,
        if empirical {
            Provenance::Empirical
        } else {
            Provenance::ClosedForm
        },
    )
}

/// Budget for the covariance-series variance estimator.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalVarianceOptions {
    pub samples: usize,
    pub max_lag: usize,
    pub seed: u64,
}

impl Default for EmpiricalVarianceOptions {
    fn default() -> Self {
        Self {
            samples: 20_000,
            max_lag: 24,
            seed: 0,
        }
    }
}

/// Estimate `sigma^2(phi) = c_0 + 2 sum_k c_k` from Monte Carlo covariance
/// estimates, truncating the series at the noise floor; the decay fit from
/// the covariance report documents the truncation. Returns `(estimate, se)`.
pub fn empirical_variance(
    system: &System,
    phi: &FourierObservable,
    opts: &EmpiricalVarianceOptions,
) -> Result<(f64, f64), VarianceError> {
    let report = covariance_decay(system, phi, phi, opts.max_lag, opts.samples, opts.seed)?;
    let mut est = report.estimates[0];
    let mut var = report.ses[0] * report.ses[0];
    for k in 1..report.estimates.len() {
        if report.estimates[k].abs() > report.noise_floor.max(3.0 * report.ses[k]) {
            est += 2.0 * report.estimates[k];
            var += 4.0 * report.ses[k] * report.ses[k];
        }
    }
    Ok((est.max(0.0), var.sqrt()))
}

/// Single-orbit variance estimate by overlapping batch means with window
/// `w`: the empirical variance of windowed sums divided by the window.
pub fn batch_means_variance(series: &[f64], window: usize) -> f64 {
    let n = series.len();
    if window == 0 || window > n {
        return 0.0;
    }
    let mean: f64 = series.iter().sum::<f64>() / n as f64;
    let mut acc = 0.0;
    let mut win_sum: f64 = series[..window].iter().sum();
    let count = n - window + 1;
    for start in 0..count {
        let centered = win_sum - window as f64 * mean;
        acc += centered * centered;
        if start + window < n {
            win_sum += series[start + window] - series[start];
        }
    }
    acc / (count as f64 * window as f64)
}

/// Report of the translation-regularity check on the modified sums
/// `R_n(x, y) = sum_{k<n} phi(2^k x - x + y)`.
#[derive(Debug, Clone)]
pub struct LipschitzReport {
    /// Empirical `n^{-1/2} || R_n(., y) - R_n(., y') ||_2`.
    pub lhs: f64,
    pub se: f64,
    /// `C(phi) |y - y'|` with the torus distance, as printed in the source
    /// regularity lemma. Numerically this constant is too small by `2 pi`;
    /// see `bound_derived`.
    pub bound_literal: f64,
    /// `2 pi C(phi) d_T(y, y')`: the bound the phase estimates actually give
    /// (`|e^{2 pi i p y} - e^{2 pi i p y'}| <= 2 pi |p| d_T`).
    pub bound_derived: f64,
    pub distance: f64,
    pub c_norm: f64,
    pub violates_literal: bool,
    pub violates_derived: bool,
}

/// Estimate the left side of the regularity bound on `M` exact doubling
/// orbits and compare against both forms of the bound.
pub fn lipschitz_bound_check(
    phi: &FourierObservable,
    y: &TorusPoint,
    y_prime: &TorusPoint,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<LipschitzReport, VarianceError> {
    if phi.dim() != 1 {
        return Err(VarianceError::NotOneDimensional(phi.dim()));
    }
    let streams = UniformStreams::new(seed);
    let bits = n + 64;
    let yn = y.numerators()[0];
    let ypn = y_prime.numerators()[0];
    let plan = crate::montecarlo::EvalPlan1D::new(phi);
    let (sum_sq, sum_quad) = (0..samples as u64)
        .into_par_iter()
        .map(|j| {
            let frac: BitFraction = streams.bit_fraction(j, bits);
            let x0 = frac.top64();
            let mut d = 0.0;
            for w in frac.windows().take(n) {
                let base = w.wrapping_sub(x0);
                d += plan.eval(base.wrapping_add(yn)) - plan.eval(base.wrapping_add(ypn));
            }
            let v = d * d / n as f64;
            (v, v * v)
        })
        .reduce(|| (0.0, 0.0), |(a, a2), (b, b2)| (a + b, a2 + b2));
    let m = samples as f64;
    let mean_sq = sum_sq / m;
    let se_mean_sq = ((sum_quad / m - mean_sq * mean_sq).max(0.0) / m).sqrt();
    let lhs = mean_sq.sqrt();
    let se = if lhs > 0.0 {
        se_mean_sq / (2.0 * lhs)
    } else {
        0.0
    };
    let distance = y.torus_distance(y_prime);
    let c = phi.c_norm();
    let bound_literal = c * distance;
    let bound_derived = std::f64::consts::TAU * c * distance;
    Ok(LipschitzReport {
        lhs,
        se,
        bound_literal,
        bound_derived,
        distance,
        c_norm: c,
        violates_literal: lhs > bound_literal + 3.0 * se,
        violates_derived: lhs > bound_derived + 3.0 * se,
    })
}

/// Zero-set scan of a profile. The limit law is degenerate only if almost
/// all of the mass sits on vanishing variance.
#[derive(Debug, Clone)]
pub struct NondegeneracyReport {
    pub epsilon: f64,
    pub zero_set_weight: f64,
    pub zero_set_count: usize,
    pub degenerate: bool,
}

pub const DEFAULT_ZERO_EPSILON: f64 = 1e-9;

pub fn nondegeneracy_scan(profile: &VarianceProfile, epsilon: f64) -> NondegeneracyReport {
    let mut weight = 0.0;
    let mut count = 0;
    for (w, s) in profile.weights().iter().zip(profile.sigma2()) {
        if *s < epsilon {
            weight += w;
            count += 1;
        }
    }
    NondegeneracyReport {
        epsilon,
        zero_set_weight: weight,
        zero_set_count: count,
        degenerate: weight > 1.0 - epsilon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ef() -> FourierObservable {
        FourierObservable::erdos_fortet()
    }

    fn cat() -> IntMatrix {
        IntMatrix::new(vec![vec![2, 1], vec![1, 1]]).unwrap()
    }

    #[test]
    fn variance_of_single_cosine() {
        let phi = FourierObservable::cosine(1, vec![1]).unwrap();
        assert_relative_eq!(variance_doubling(&phi).unwrap(), 0.5);
    }

    #[test]
    fn variance_of_ef_observable() {
        assert_relative_eq!(variance_doubling(&ef()).unwrap(), 2.0);
    }

    #[test]
    fn variance_of_zero() {
        assert_eq!(variance_doubling(&FourierObservable::zero(1)).unwrap(), 0.0);
    }

    #[test]
    fn translated_variance_closed_form() {
        // sigma^2(y) = 1 + cos(2 pi y) for the EF observable
        for i in 0..32 {
            let y = TorusPoint::from_fractions(&[(i, 32)]).unwrap();
            let got = variance_doubling_translated(&ef(), &y).unwrap();
            let expect = 1.0 + (std::f64::consts::TAU * i as f64 / 32.0).cos();
            assert_relative_eq!(got, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn translated_variance_at_coboundary_point() {
        let y = TorusPoint::from_fractions(&[(1, 2)]).unwrap();
        assert_relative_eq!(
            variance_doubling_translated(&ef(), &y).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn translation_by_zero_consistent() {
        let y = TorusPoint::zero(1);
        assert_relative_eq!(
            variance_doubling_translated(&ef(), &y).unwrap(),
            variance_doubling(&ef()).unwrap()
        );
    }

    #[test]
    fn toral_variance_single_cosine() {
        let phi = FourierObservable::cosine(2, vec![1, 0]).unwrap();
        assert_relative_eq!(variance_toral(&phi, &cat()).unwrap(), 0.5);
    }

    #[test]
    fn toral_variance_with_resonance() {
        // cos(2 pi x1) + cos(2 pi (2 x1 + x2)): the k=1 image of (1,0) hits
        // (2,1), contributing 2 * (1/4 + 1/4); escape certifies at k=2
        let phi = FourierObservable::from_coeffs(
            2,
            [
                (vec![1, 0], num_complex::Complex64::new(0.5, 0.0)),
                (vec![2, 1], num_complex::Complex64::new(0.5, 0.0)),
            ],
        )
        .unwrap();
        assert_relative_eq!(variance_toral(&phi, &cat()).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn toral_variance_zero_observable() {
        assert_eq!(
            variance_toral(&FourierObservable::zero(2), &cat()).unwrap(),
            0.0
        );
    }

    #[test]
    fn toral_variance_translated_closed_form() {
        // sigma^2(y) = 1 + cos(2 pi (y1 + y2)) for the resonant observable
        let phi = FourierObservable::from_coeffs(
            2,
            [
                (vec![1, 0], num_complex::Complex64::new(0.5, 0.0)),
                (vec![2, 1], num_complex::Complex64::new(0.5, 0.0)),
            ],
        )
        .unwrap();
        for (i, j) in [(0u64, 0u64), (3, 5), (8, 8), (15, 1)] {
            let y = TorusPoint::from_fractions(&[(i, 16), (j, 16)]).unwrap();
            let got = variance_toral(&phi.translate(&y).unwrap(), &cat()).unwrap();
            let expect = 1.0 + (std::f64::consts::TAU * ((i + j) as f64 / 16.0)).cos();
            assert_relative_eq!(got, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn near_parabolic_fails_loudly() {
        // ergodic check passes for no matrix here: parabolic shear is caught
        // by the ergodicity test itself
        let shear = IntMatrix::new(vec![vec![1, 1], vec![0, 1]]).unwrap();
        let phi = FourierObservable::cosine(2, vec![1, 0]).unwrap();
        assert!(matches!(
            variance_toral(&phi, &shear),
            Err(VarianceError::Dynamics(DynamicsError::NotErgodic(_)))
        ));
    }

    #[test]
    fn ef_profile_matches_closed_form() {
        let grid = ParameterGrid::new(1, 256);
        let profile = variance_profile(
            &System::Doubling,
            &ModifierMap::SelfTranslation,
            &ef(),
            &grid,
            &ProfileOptions::default(),
        )
        .unwrap();
        assert_eq!(profile.len(), 256);
        for (y, s) in profile.points().iter().zip(profile.sigma2()) {
            let expect = 1.0 + (std::f64::consts::TAU * y.coord_f64(0)).cos();
            assert_relative_eq!(*s, expect, epsilon = 1e-12);
        }
        assert_relative_eq!(profile.integral(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_observable_profile_is_zero() {
        let grid = ParameterGrid::new(1, 64);
        let profile = variance_profile(
            &System::Doubling,
            &ModifierMap::SelfTranslation,
            &FourierObservable::zero(1),
            &grid,
            &ProfileOptions::default(),
        )
        .unwrap();
        assert!(profile.sigma2().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn profile_mass_always_one() {
        let grid = ParameterGrid::new(1, 100);
        let profile = variance_profile(
            &System::Doubling,
            &ModifierMap::SelfTranslation,
            &ef(),
            &grid,
            &ProfileOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(profile.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nondegeneracy_of_ef_profile() {
        let grid = ParameterGrid::new(1, 1024);
        let profile = variance_profile(
            &System::Doubling,
            &ModifierMap::SelfTranslation,
            &ef(),
            &grid,
            &ProfileOptions::default(),
        )
        .unwrap();
        let report = nondegeneracy_scan(&profile, DEFAULT_ZERO_EPSILON);
        assert!(!report.degenerate);
        assert_eq!(report.zero_set_count, 1); // exactly y = 1/2
        assert!(report.zero_set_weight <= 2.0 / 1024.0);
    }

    #[test]
    fn nondegeneracy_trivial_cases() {
        let profile = VarianceProfile::new(
            vec![TorusPoint::zero(1)],
            vec![1.0],
            vec![0.0],
            Provenance::ClosedForm,
        )
        .unwrap();
        assert!(nondegeneracy_scan(&profile, DEFAULT_ZERO_EPSILON).degenerate);
        let profile = VarianceProfile::new(
            vec![TorusPoint::zero(1)],
            vec![1.0],
            vec![0.5],
            Provenance::ClosedForm,
        )
        .unwrap();
        let report = nondegeneracy_scan(&profile, DEFAULT_ZERO_EPSILON);
        assert_eq!(report.zero_set_count, 0);
        assert!(!report.degenerate);
    }

    #[test]
    fn lipschitz_equal_points_zero() {
        let y = TorusPoint::from_fractions(&[(1, 8)]).unwrap();
        let report = lipschitz_bound_check(&ef(), &y, &y, 64, 200, 1).unwrap();
        assert_eq!(report.lhs, 0.0);
        assert_eq!(report.bound_derived, 0.0);
        assert!(!report.violates_derived);
    }

    #[test]
    fn lipschitz_zero_observable() {
        let y = TorusPoint::zero(1);
        let yp = TorusPoint::from_fractions(&[(1, 10)]).unwrap();
        let report =
            lipschitz_bound_check(&FourierObservable::zero(1), &y, &yp, 64, 200, 1).unwrap();
        assert_eq!(report.lhs, 0.0);
    }

    #[test]
    fn batch_means_on_iid_noise() {
        // iid +-1 series: asymptotic variance 1
        let streams = UniformStreams::new(17);
        let mut rng = streams.stream(0);
        use rand::Rng;
        let series: Vec<f64> = (0..100_000)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let v = batch_means_variance(&series, 316);
        assert!((v - 1.0).abs() < 0.1, "batch means variance {v}");
    }
}
