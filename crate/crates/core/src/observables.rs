//! Centered trigonometric polynomials on the d-torus.
//!
//! An observable is a finite table of Fourier coefficients over nonzero
//! integer frequencies, kept conjugate-symmetric (`c_{-p} = conj(c_p)`) so it
//! is real valued, and with no constant term so it is centered. Everything
//! downstream — variance series, translated observables, transfer-operator
//! action — is a finite exact manipulation of this table.
//!
//! Evaluation reduces `p . x mod 1` in wrapping fixed-point arithmetic, so
//! the only rounding before the transcendental call is the top-53-bit
//! truncation of the angle.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::{unit_f64, IntMatrix, TorusPoint};

/// An integer frequency vector in `Z^d \ {0}`.
pub type Frequency = Vec<i64>;

#[derive(Debug, Error)]
pub enum ObservableError {
    #[error("dimension mismatch: observable on T^{expected}, argument has dimension {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("frequency 0 is not allowed (observables are centered)")]
    ZeroFrequency,
    #[error("frequency {0:?} has wrong dimension")]
    BadFrequency(String),
    #[error("duplicate coefficient for frequency {0:?}")]
    DuplicateFrequency(String),
    #[error("coefficients at p and -p are not conjugate for frequency {0:?}")]
    NotConjugateSymmetric(String),
    #[error("integer overflow while relabeling frequencies")]
    FrequencyOverflow,
    #[error("step function breakpoints must start at 0, end at 1, and strictly increase")]
    BadBreakpoints,
    #[error("step function has {values} values for {intervals} intervals")]
    ValueCountMismatch { values: usize, intervals: usize },
}

/// Angle `p . x mod 1` as an exact 64-bit fraction numerator.
#[inline]
pub fn dot_fraction(freq: &[i64], x: &TorusPoint) -> u64 {
    let coords = x.numerators();
    let mut acc = 0u64;
    for (p, c) in freq.iter().zip(coords) {
        acc = acc.wrapping_add((*p as u64).wrapping_mul(*c));
    }
    acc
}

/// `e^{2 pi i (p . x)}` with the angle reduced exactly before rounding.
#[inline]
pub fn unit_phase(freq: &[i64], x: &TorusPoint) -> Complex64 {
    let (s, c) = (TAU * unit_f64(dot_fraction(freq, x))).sin_cos();
    Complex64::new(c, s)
}

/// A centered real trigonometric polynomial on `T^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierObservable {
    dim: usize,
    coeffs: BTreeMap<Frequency, Complex64>,
}

impl FourierObservable {
    /// Build from coefficient entries. Frequency 0 is rejected; the conjugate
    /// mirror of each entry is auto-completed, and if both members of a pair
    /// are supplied they must already be conjugate.
    pub fn from_coeffs<I>(dim: usize, entries: I) -> Result<Self, ObservableError>
    where
        I: IntoIterator<Item = (Frequency, Complex64)>,
    {
        let mut coeffs: BTreeMap<Frequency, Complex64> = BTreeMap::new();
        let mut given: Vec<Frequency> = Vec::new();
        for (freq, c) in entries {
            if freq.len() != dim {
                return Err(ObservableError::BadFrequency(format!("{freq:?}")));
            }
            if freq.iter().all(|&f| f == 0) {
                return Err(ObservableError::ZeroFrequency);
            }
            if coeffs.contains_key(&freq) && given.contains(&freq) {
                return Err(ObservableError::DuplicateFrequency(format!("{freq:?}")));
            }
            let neg: Frequency = freq.iter().map(|&f| -f).collect();
            if let Some(&existing) = coeffs.get(&freq) {
                // was auto-completed from the mirror entry; check consistency
                if (existing - c).norm() > 1e-12 * (1.0 + c.norm()) {
                    return Err(ObservableError::NotConjugateSymmetric(format!("{freq:?}")));
                }
            }
            coeffs.insert(freq.clone(), c);
            coeffs.entry(neg).or_insert_with(|| c.conj());
            given.push(freq);
        }
        // re-check symmetry for pairs where both members were user-supplied
        for (freq, c) in &coeffs {
            let neg: Frequency = freq.iter().map(|&f| -f).collect();
            let mirror = coeffs[&neg];
            if (mirror - c.conj()).norm() > 1e-12 * (1.0 + c.norm()) {
                return Err(ObservableError::NotConjugateSymmetric(format!("{freq:?}")));
            }
        }
        Ok(Self { dim, coeffs })
    }

    /// The zero observable on `T^dim`.
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    /// `cos(2 pi p . x)`: coefficients 1/2 at `+-p`.
    pub fn cosine(dim: usize, freq: Frequency) -> Result<Self, ObservableError> {
        Self::from_coeffs(dim, [(freq, Complex64::new(0.5, 0.0))])
    }

    /// The classical Erdos-Fortet observable `cos(2 pi x) + cos(4 pi x)`.
    pub fn erdos_fortet() -> Self {
        Self::from_coeffs(
            1,
            [
                (vec![1], Complex64::new(0.5, 0.0)),
                (vec![2], Complex64::new(0.5, 0.0)),
            ],
        )
        .expect("static coefficients are valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &BTreeMap<Frequency, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, freq: &[i64]) -> Complex64 {
        self.coeffs
            .get(freq)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `max ||p||_inf` over the support (0 for the zero observable).
    pub fn support_radius(&self) -> i64 {
        self.coeffs
            .keys()
            .map(|p| p.iter().map(|&f| f.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// `sum |c_p|` over the support.
    pub fn coeff_abs_sum(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// `sum |c_p|^2` = the mean square of the observable.
    pub fn mean_square(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    /// The translation-regularity constant `C = sum ||p||_inf |c_p|`.
    pub fn c_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(p, c)| p.iter().map(|&f| f.abs()).max().unwrap_or(0) as f64 * c.norm())
            .sum()
    }

    /// Evaluate at a torus point. The imaginary part of the coefficient sum
    /// must vanish up to rounding; it is asserted below `1e-9 sum |c_p|` and
    /// discarded.
    pub fn evaluate(&self, x: &TorusPoint) -> Result<f64, ObservableError> {
        if x.dim() != self.dim {
            return Err(ObservableError::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, c) in &self.coeffs {
            acc += c * unit_phase(p, x);
        }
        assert!(
            acc.im.abs() <= 1e-9 * self.coeff_abs_sum().max(f64::MIN_POSITIVE),
            "imaginary residue {} exceeds rounding budget",
            acc.im
        );
        Ok(acc.re)
    }

    /// The translated observable `x -> phi(x + y)`: coefficients pick up the
    /// exact phases `e^{2 pi i p . y}`. Conjugate symmetry is enforced
    /// structurally by mirroring each canonical pair.
    pub fn translate(&self, y: &TorusPoint) -> Result<Self, ObservableError> {
        if y.dim() != self.dim {
            return Err(ObservableError::DimensionMismatch {
                expected: self.dim,
                got: y.dim(),
            });
        }
        let mut coeffs = BTreeMap::new();
        for (p, c) in &self.coeffs {
            if !is_canonical(p) {
                continue;
            }
            let shifted = c * unit_phase(p, y);
            coeffs.insert(p.clone(), shifted);
            coeffs.insert(p.iter().map(|&f| -f).collect(), shifted.conj());
        }
        Ok(Self {
            dim: self.dim,
            coeffs,
        })
    }

    /// The composition `x -> phi(M x)`: frequencies relabel through the
    /// transpose, colliding images are summed, and any mass landing on
    /// frequency 0 is returned as a constant offset (the composition may lose
    /// centeredness; the caller decides how to re-center).
    pub fn compose_linear(&self, m: &IntMatrix) -> Result<(Self, f64), ObservableError> {
        if m.dim() != self.dim {
            return Err(ObservableError::DimensionMismatch {
                expected: self.dim,
                got: m.dim(),
            });
        }
        let mt = m.transpose();
        let mut coeffs: BTreeMap<Frequency, Complex64> = BTreeMap::new();
        let mut offset = Complex64::new(0.0, 0.0);
        for (p, c) in &self.coeffs {
            let image128 = mt
                .mul_vec_i128(&p.iter().map(|&f| f as i128).collect::<Vec<_>>())
                .ok_or(ObservableError::FrequencyOverflow)?;
            let image: Frequency = image128
                .iter()
                .map(|&v| i64::try_from(v).map_err(|_| ObservableError::FrequencyOverflow))
                .collect::<Result<_, _>>()?;
            if image.iter().all(|&f| f == 0) {
                offset += c;
            } else {
                *coeffs
                    .entry(image)
                    .or_insert(Complex64::new(0.0, 0.0)) += c;
            }
        }
        coeffs.retain(|_, c| c.norm() > 0.0);
        assert!(
            offset.im.abs() <= 1e-12 * (1.0 + self.coeff_abs_sum()),
            "constant offset must be real"
        );
        Ok((
            Self {
                dim: self.dim,
                coeffs,
            },
            offset.re,
        ))
    }

    /// Iterate canonical representatives (one frequency per `+-p` pair).
    pub fn canonical_pairs(&self) -> impl Iterator<Item = (&Frequency, &Complex64)> {
        self.coeffs.iter().filter(|(p, _)| is_canonical(p))
    }
}

/// The canonical member of a `+-p` pair: first nonzero entry positive.
pub fn is_canonical(freq: &[i64]) -> bool {
    for &f in freq {
        if f > 0 {
            return true;
        }
        if f < 0 {
            return false;
        }
    }
    false
}

/// A trigonometric polynomial with a constant term, e.g. a density
/// `1 + (centered part)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    pub constant: f64,
    pub centered: FourierObservable,
}

impl TrigPolynomial {
    pub fn new(constant: f64, centered: FourierObservable) -> Self {
        Self { constant, centered }
    }

    pub fn from_observable(centered: FourierObservable) -> Self {
        Self {
            constant: 0.0,
            centered,
        }
    }

    pub fn constant_one(dim: usize) -> Self {
        Self {
            constant: 1.0,
            centered: FourierObservable::zero(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.centered.dim()
    }

    pub fn evaluate(&self, x: &TorusPoint) -> Result<f64, ObservableError> {
        Ok(self.constant + self.centered.evaluate(x)?)
    }

    /// Upper bound for the supremum: `constant + sum |c_p|`.
    pub fn sup_bound(&self) -> f64 {
        self.constant + self.centered.coeff_abs_sum()
    }

    /// Exact product of two trigonometric polynomials (coefficient
    /// convolution). Supports the multiple-decorrelation bookkeeping where
    /// covariances of products reduce to constant terms.
    pub fn mul(&self, other: &Self) -> Result<Self, ObservableError> {
        if self.dim() != other.dim() {
            return Err(ObservableError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let dim = self.dim();
        let mut constant = self.constant * other.constant;
        let mut coeffs: BTreeMap<Frequency, Complex64> = BTreeMap::new();
        let mut add = |freq: Frequency, c: Complex64| {
            if freq.iter().all(|&f| f == 0) {
                unreachable!("zero frequency handled by caller");
            }
            *coeffs.entry(freq).or_insert(Complex64::new(0.0, 0.0)) += c;
        };
        for (p, a) in self.centered.coeffs() {
            add(p.clone(), a * other.constant);
        }
        for (q, b) in other.centered.coeffs() {
            add(q.clone(), b * self.constant);
        }
        let mut cross_constant = Complex64::new(0.0, 0.0);
        for (p, a) in self.centered.coeffs() {
            for (q, b) in other.centered.coeffs() {
                let sum: Frequency = p
                    .iter()
                    .zip(q)
                    .map(|(&x, &y)| x.checked_add(y).ok_or(ObservableError::FrequencyOverflow))
                    .collect::<Result<_, _>>()?;
                if sum.iter().all(|&f| f == 0) {
                    cross_constant += a * b;
                } else {
                    add(sum, a * b);
                }
            }
        }
        assert!(
            cross_constant.im.abs() <= 1e-12 * (1.0 + self.sup_bound() * other.sup_bound()),
            "constant term of a product of real polynomials must be real"
        );
        constant += cross_constant.re;
        coeffs.retain(|_, c| c.norm() > 1e-300);
        Ok(Self {
            constant,
            centered: FourierObservable { dim, coeffs },
        })
    }

    /// Mean with respect to Lebesgue measure (the constant term).
    pub fn mean(&self) -> f64 {
        self.constant
    }
}

/// A real step function on `[0, 1)` with finitely many pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction1D {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction1D {
    /// `breakpoints` must run `0 = a_0 < a_1 < ... < a_{p+1} = 1`, with one
    /// value per interval `[a_j, a_{j+1})`.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, ObservableError> {
        if breakpoints.len() < 2
            || breakpoints[0] != 0.0
            || *breakpoints.last().unwrap() != 1.0
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(ObservableError::BadBreakpoints);
        }
        if values.len() != breakpoints.len() - 1 {
            return Err(ObservableError::ValueCountMismatch {
                values: values.len(),
                intervals: breakpoints.len() - 1,
            });
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: vec![0.0, 1.0],
            values: vec![value],
        }
    }

    pub fn value_at(&self, y: f64) -> f64 {
        let y = y.rem_euclid(1.0);
        let idx = match self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&y).expect("finite breakpoints"))
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        self.values[idx.min(self.values.len() - 1)]
    }

    /// Iterate `(interval length, value)` pairs.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[1] - w[0], v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ef() -> FourierObservable {
        FourierObservable::erdos_fortet()
    }

    #[test]
    fn ef_at_zero_is_two() {
        let x = TorusPoint::zero(1);
        assert_relative_eq!(ef().evaluate(&x).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn ef_at_half_is_zero() {
        let x = TorusPoint::from_fractions(&[(1, 2)]).unwrap();
        assert_relative_eq!(ef().evaluate(&x).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cosine_at_third() {
        let obs = FourierObservable::cosine(1, vec![1]).unwrap();
        let x = TorusPoint::from_fractions(&[(1, 3)]).unwrap();
        // cos(2 pi / 3) = -1/2; the angle is truncated to the lattice first
        assert_relative_eq!(obs.evaluate(&x).unwrap(), -0.5, epsilon = 1e-9);
    }

    #[test]
    fn c_norm_values() {
        assert_relative_eq!(ef().c_norm(), 3.0);
        assert_relative_eq!(FourierObservable::zero(1).c_norm(), 0.0);
        let obs2 = FourierObservable::cosine(2, vec![2, 1]).unwrap();
        assert_relative_eq!(obs2.c_norm(), 2.0);
    }

    #[test]
    fn translate_by_zero_is_identity() {
        let t = ef().translate(&TorusPoint::zero(1)).unwrap();
        for (p, c) in ef().coeffs() {
            assert_relative_eq!(t.coeff(p).re, c.re, epsilon = 1e-15);
            assert_relative_eq!(t.coeff(p).im, c.im, epsilon = 1e-15);
        }
    }

    #[test]
    fn translate_by_half_flips_sign() {
        let obs = FourierObservable::cosine(1, vec![1]).unwrap();
        let y = TorusPoint::from_fractions(&[(1, 2)]).unwrap();
        let t = obs.translate(&y).unwrap();
        assert_relative_eq!(t.coeff(&[1]).re, -0.5, epsilon = 1e-12);
        assert_relative_eq!(t.coeff(&[1]).im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn translate_ef_by_quarter() {
        let y = TorusPoint::from_fractions(&[(1, 4)]).unwrap();
        let t = ef().translate(&y).unwrap();
        // c_1 -> i/2, c_2 -> -1/2, mirrors conjugate
        assert_relative_eq!(t.coeff(&[1]).re, 0.0, epsilon = 1e-12);
        assert_relative_eq!(t.coeff(&[1]).im, 0.5, epsilon = 1e-12);
        assert_relative_eq!(t.coeff(&[2]).re, -0.5, epsilon = 1e-12);
        assert_relative_eq!(t.coeff(&[-1]).im, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn c_norm_invariant_under_translation() {
        let y = TorusPoint::from_fractions(&[(7, 32)]).unwrap();
        let t = ef().translate(&y).unwrap();
        assert_relative_eq!(t.c_norm(), ef().c_norm(), epsilon = 1e-12);
    }

    #[test]
    fn compose_identity_unchanged() {
        let (c, offset) = ef().compose_linear(&IntMatrix::identity(1)).unwrap();
        assert_eq!(c, ef());
        assert_eq!(offset, 0.0);
    }

    #[test]
    fn compose_scalar_doubles_frequency() {
        let obs = FourierObservable::cosine(1, vec![1]).unwrap();
        let m = IntMatrix::new(vec![vec![2]]).unwrap();
        let (c, offset) = obs.compose_linear(&m).unwrap();
        assert_eq!(offset, 0.0);
        assert_relative_eq!(c.coeff(&[2]).re, 0.5);
        assert!(c.coeff(&[1]).norm() == 0.0);
    }

    #[test]
    fn compose_cat_map_frequency() {
        let obs = FourierObservable::cosine(2, vec![1, 0]).unwrap();
        let m = IntMatrix::new(vec![vec![2, 1], vec![1, 1]]).unwrap();
        let (c, _) = obs.compose_linear(&m).unwrap();
        assert_relative_eq!(c.coeff(&[2, 1]).re, 0.5);
    }

    #[test]
    fn compose_reports_constant_mass() {
        // phi(x) = cos(2 pi x), M = 0: image frequency is 0, mass 1/2 + 1/2
        let obs = FourierObservable::cosine(1, vec![1]).unwrap();
        let (c, offset) = obs.compose_linear(&IntMatrix::zeros(1)).unwrap();
        assert!(c.is_zero());
        assert_relative_eq!(offset, 1.0);
    }

    #[test]
    fn rejects_zero_frequency_and_duplicates() {
        assert!(matches!(
            FourierObservable::from_coeffs(2, [(vec![0, 0], Complex64::new(1.0, 0.0))]),
            Err(ObservableError::ZeroFrequency)
        ));
        assert!(FourierObservable::from_coeffs(
            1,
            [
                (vec![1], Complex64::new(0.5, 0.0)),
                (vec![1], Complex64::new(0.5, 0.0))
            ]
        )
        .is_err());
    }

    #[test]
    fn rejects_asymmetric_pair() {
        assert!(matches!(
            FourierObservable::from_coeffs(
                1,
                [
                    (vec![1], Complex64::new(0.5, 0.25)),
                    (vec![-1], Complex64::new(0.5, 0.25)),
                ]
            ),
            Err(ObservableError::NotConjugateSymmetric(_))
        ));
    }

    #[test]
    fn auto_completes_conjugate() {
        let obs =
            FourierObservable::from_coeffs(1, [(vec![1], Complex64::new(0.25, 0.5))]).unwrap();
        assert_eq!(obs.coeff(&[-1]), Complex64::new(0.25, -0.5));
    }

    #[test]
    fn trig_product_constant_term() {
        // cos^2(2 pi x) = 1/2 + cos(4 pi x)/2
        let c = TrigPolynomial::from_observable(FourierObservable::cosine(1, vec![1]).unwrap());
        let sq = c.mul(&c).unwrap();
        assert_relative_eq!(sq.constant, 0.5);
        assert_relative_eq!(sq.centered.coeff(&[2]).re, 0.25);
        assert!(sq.centered.coeff(&[1]).norm() < 1e-15);
    }

    #[test]
    fn step_function_lookup() {
        let s = StepFunction1D::new(vec![0.0, 0.5, 1.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(s.value_at(0.0), 1.0);
        assert_eq!(s.value_at(0.49), 1.0);
        assert_eq!(s.value_at(0.5), 2.0);
        assert_eq!(s.value_at(0.99), 2.0);
        assert!(StepFunction1D::new(vec![0.0, 0.6, 0.5, 1.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(StepFunction1D::new(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
    }
}
