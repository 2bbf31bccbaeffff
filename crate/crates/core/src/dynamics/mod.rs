//! Exact-arithmetic orbit generation for the supported system families:
//! the doubling map and lacunary integer sequences on the circle, and
//! hyperbolic automorphisms of the d-torus.
//!
//! Doubling orbits use a long binary fraction and read 64-bit windows at
//! successive offsets, so `T^k x` is an exact left shift; floating point
//! would lose the orbit after 52 steps. Toral orbits use wrapping
//! matrix-vector products, exact on the `2^-W` lattice (`W` = 64 or 128),
//! which the matrix preserves.

mod matrix;
mod point;
mod sampling;

pub use matrix::{ErgodicityCheck, ErgodicityFailure, IntMatrix};
pub use point::{unit_f64, BitFraction, TorusPoint, WindowIter};
pub use sampling::{sample_bit_fractions, sample_points, UniformStreams};

use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("bit fraction too short: need {needed} bits, have {available}")]
    InsufficientBits { needed: usize, available: usize },
    #[error("invalid fraction {num}/{den}: need den > 0 and num < den")]
    InvalidFraction { num: u64, den: u64 },
    #[error("invalid bit string literal {0:?}")]
    InvalidBitString(String),
    #[error("matrix is not square: {rows} rows, first row has {cols} entries")]
    NotSquare { rows: usize, cols: usize },
    #[error("integer overflow in exact matrix arithmetic")]
    MatrixOverflow,
    #[error("matrix does not define an ergodic automorphism: {0}")]
    NotErgodic(ErgodicityFailure),
    #[error("lacunary sequence must be strictly increasing and positive after index 0")]
    NotLacunary,
    #[error("lacunary sequence has {available} terms, {needed} requested")]
    SequenceTooShort { needed: usize, available: usize },
}

/// A rule producing the integer sequence `q_0 < q_1 < ...` driving lacunary
/// sums. The two built-ins admit an exact bit-window fast path; explicit
/// lists go through big-integer products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LacunarySequence {
    /// `q_k = 2^k`
    PowersOfTwo,
    /// `q_k = 2^k - 1`
    PowersOfTwoMinusOne,
    /// User-supplied terms.
    Explicit(Vec<BigUint>),
}

impl LacunarySequence {
    pub fn explicit_u64(terms: &[u64]) -> Result<Self, DynamicsError> {
        let seq = Self::Explicit(terms.iter().map(|&t| BigUint::from(t)).collect());
        seq.validate()?;
        Ok(seq)
    }

    /// Strictly increasing, positive after index 0 (`q_0 = 0` is allowed,
    /// matching `2^0 - 1`).
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if let Self::Explicit(terms) = self {
            if terms.is_empty() {
                return Err(DynamicsError::NotLacunary);
            }
            for w in terms.windows(2) {
                if w[1] <= w[0] {
                    return Err(DynamicsError::NotLacunary);
                }
            }
        }
        Ok(())
    }

    pub fn term(&self, k: usize) -> Result<BigUint, DynamicsError> {
        match self {
            Self::PowersOfTwo => Ok(BigUint::from(1u8) << k),
            Self::PowersOfTwoMinusOne => Ok((BigUint::from(1u8) << k) - 1u8),
            Self::Explicit(terms) => terms.get(k).cloned().ok_or_else(|| {
                DynamicsError::SequenceTooShort {
                    needed: k + 1,
                    available: terms.len(),
                }
            }),
        }
    }

    /// Max bit length of the terms used up to index `n-1`; sizes the binary
    /// fraction for the big-integer path.
    pub fn max_bit_len(&self, n: usize) -> usize {
        match self {
            Self::PowersOfTwo => n,
            Self::PowersOfTwoMinusOne => n.saturating_sub(1),
            Self::Explicit(terms) => terms
                .iter()
                .take(n)
                .map(|t| t.bits() as usize)
                .max()
                .unwrap_or(0),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::PowersOfTwo => "2^k".to_string(),
            Self::PowersOfTwoMinusOne => "2^k-1".to_string(),
            Self::Explicit(terms) => format!("explicit[{}]", terms.len()),
        }
    }
}

/// Lattice resolution of toral orbit iteration. The matrix preserves the
/// `2^-W` lattice, so iteration is exact at either width; 128-bit state
/// pushes the discretization floor far below anything a double can see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ToralPrecision {
    #[default]
    W64,
    W128,
}

/// A simulated system family.
#[derive(Debug, Clone)]
pub enum System {
    /// `x -> 2x mod 1` on the circle.
    Doubling,
    /// Sums along `q_k x` for a lacunary integer sequence.
    Lacunary(LacunarySequence),
    /// An ergodic automorphism of the d-torus.
    Toral {
        matrix: IntMatrix,
        precision: ToralPrecision,
    },
}

impl System {
    pub fn toral(matrix: IntMatrix) -> Self {
        Self::Toral {
            matrix,
            precision: ToralPrecision::W64,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Doubling | Self::Lacunary(_) => 1,
            Self::Toral { matrix, .. } => matrix.dim(),
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        match self {
            Self::Doubling => Ok(()),
            Self::Lacunary(seq) => seq.validate(),
            Self::Toral { matrix, .. } => {
                let check = matrix.check_ergodic()?;
                if check.ergodic {
                    Ok(())
                } else {
                    Err(DynamicsError::NotErgodic(
                        check.failure.expect("non-ergodic result carries a failure"),
                    ))
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Doubling => "doubling".to_string(),
            Self::Lacunary(seq) => format!("lacunary({})", seq.label()),
            Self::Toral { matrix, .. } => format!("toral(d={})", matrix.dim()),
        }
    }
}

/// First `n` points of the doubling-map orbit `T^k x = 2^k x mod 1`, each
/// carrying the top 64 bits of the exactly shifted fraction.
pub fn doubling_orbit(x: &BitFraction, n: usize) -> Result<Vec<TorusPoint>, DynamicsError> {
    if x.bits() < n + 64 {
        return Err(DynamicsError::InsufficientBits {
            needed: n + 64,
            available: x.bits(),
        });
    }
    (0..n)
        .map(|k| Ok(TorusPoint::from_numerator(x.window64(k)?)))
        .collect()
}

/// The points `q_k x + y mod 1` for `k < n`, exact for the stored fraction.
///
/// The built-in sequences use bit windows: for `q_k = 2^k - 1` the point is
/// the wrapping difference `window(k) - window(0) + y`, the same identity the
/// translated modified sums rely on. Explicit sequences multiply the full
/// fraction by `q_k` as big integers and truncate mod 1 to 64 bits.
pub fn lacunary_points(
    x: &BitFraction,
    seq: &LacunarySequence,
    n: usize,
    y: &TorusPoint,
) -> Result<Vec<TorusPoint>, DynamicsError> {
    assert_eq!(y.dim(), 1, "lacunary points live on the circle");
    seq.validate()?;
    let y0 = y.numerators()[0];
    match seq {
        LacunarySequence::PowersOfTwo | LacunarySequence::PowersOfTwoMinusOne => {
            if x.bits() < n + 64 {
                return Err(DynamicsError::InsufficientBits {
                    needed: n + 64,
                    available: x.bits(),
                });
            }
            let sub = if matches!(seq, LacunarySequence::PowersOfTwoMinusOne) {
                x.top64()
            } else {
                0
            };
            (0..n)
                .map(|k| {
                    let w = x.window64(k)?;
                    Ok(TorusPoint::from_numerator(
                        w.wrapping_sub(sub).wrapping_add(y0),
                    ))
                })
                .collect()
        }
        LacunarySequence::Explicit(_) => {
            let xb = fraction_numerator(x);
            let bits = x.bits();
            let modulus = BigUint::from(1u8) << bits;
            (0..n)
                .map(|k| {
                    let q = seq.term(k)?;
                    let prod = (q * &xb) % &modulus;
                    let top: BigUint = prod >> (bits - 64);
                    let num = top.iter_u64_digits().next().unwrap_or(0);
                    Ok(TorusPoint::from_numerator(num.wrapping_add(y0)))
                })
                .collect()
        }
    }
}

/// The fraction as the big integer `x * 2^bits`.
fn fraction_numerator(x: &BitFraction) -> BigUint {
    let mut acc = BigUint::default();
    for &w in x.words() {
        acc = (acc << 64) | BigUint::from(w);
    }
    // words cover ceil(bits/64)*64 bits; drop the zero tail padding
    acc >> (x.words().len() * 64 - x.bits())
}

/// First `n` points of the toral orbit `A^k x`, exact on the 64-bit lattice.
pub fn toral_orbit(
    x: &TorusPoint,
    a: &IntMatrix,
    n: usize,
) -> Result<Vec<TorusPoint>, DynamicsError> {
    let check = a.check_ergodic()?;
    if !check.ergodic {
        return Err(DynamicsError::NotErgodic(
            check.failure.expect("non-ergodic result carries a failure"),
        ));
    }
    assert_eq!(x.dim(), a.dim(), "matrix/point dimension mismatch");
    let mut out = Vec::with_capacity(n);
    let mut cur = x.clone();
    for _ in 0..n {
        out.push(cur.clone());
        cur = a.apply_point(&cur);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_orbit_requires_bits() {
        let x = BitFraction::zero(100);
        assert!(doubling_orbit(&x, 37).is_err());
        assert!(doubling_orbit(&x, 36).is_ok());
    }

    #[test]
    fn doubling_orbit_of_zero_is_fixed() {
        let x = BitFraction::zero(256);
        for p in doubling_orbit(&x, 100).unwrap() {
            assert_eq!(p, TorusPoint::zero(1));
        }
    }

    #[test]
    fn lacunary_one_third_alternates() {
        // q_k = 2^k - 1, x = 1/3: even k -> 0, odd k -> 1/3 (exactly, in
        // window arithmetic)
        let x = BitFraction::from_rational(1, 3, 256).unwrap();
        let pts = lacunary_points(&x, &LacunarySequence::PowersOfTwoMinusOne, 100, &TorusPoint::zero(1)).unwrap();
        let third = x.top64();
        for (k, p) in pts.iter().enumerate() {
            let expect = if k % 2 == 0 { 0 } else { third };
            assert_eq!(p.numerators()[0], expect, "k = {k}");
        }
    }

    #[test]
    fn lacunary_from_zero_is_translation() {
        let x = BitFraction::zero(256);
        let y = TorusPoint::from_fractions(&[(3, 8)]).unwrap();
        let seq = LacunarySequence::explicit_u64(&[0, 5, 17, 100]).unwrap();
        for p in lacunary_points(&x, &seq, 4, &y).unwrap() {
            assert_eq!(p, y);
        }
    }

    #[test]
    fn explicit_powers_of_two_match_doubling_bit_for_bit() {
        // two independent exact paths: big-integer products vs bit windows
        let x = sample_bit_fractions(11, 192, 1)[0].clone();
        let seq = LacunarySequence::explicit_u64(&[1, 2, 4, 8, 16, 32, 64, 128]).unwrap();
        let via_big = lacunary_points(&x, &seq, 8, &TorusPoint::zero(1)).unwrap();
        let via_windows = doubling_orbit(&x, 8).unwrap();
        assert_eq!(via_big, via_windows);
    }

    #[test]
    fn telescoping_identity_exact() {
        // lacunary(2^k - 1, y) == doubling window - x + y in wrapping arithmetic
        let x = sample_bit_fractions(5, 256, 1)[0].clone();
        let y = TorusPoint::from_fractions(&[(7, 16)]).unwrap();
        let lac = lacunary_points(&x, &LacunarySequence::PowersOfTwoMinusOne, 150, &y).unwrap();
        let orb = doubling_orbit(&x, 150).unwrap();
        for (l, o) in lac.iter().zip(&orb) {
            assert_eq!(*l, o.wrapping_sub(&x.to_point()).wrapping_add(&y));
        }
    }

    #[test]
    fn non_increasing_sequence_rejected() {
        assert!(LacunarySequence::explicit_u64(&[1, 3, 3]).is_err());
        assert!(LacunarySequence::explicit_u64(&[]).is_err());
    }

    #[test]
    fn toral_orbit_rejects_non_ergodic() {
        let m = IntMatrix::new(vec![vec![1, 1], vec![0, 1]]).unwrap();
        let x = TorusPoint::zero(2);
        assert!(matches!(
            toral_orbit(&x, &m, 3),
            Err(DynamicsError::NotErgodic(_))
        ));
    }

    #[test]
    fn toral_orbit_fixed_point() {
        let a = IntMatrix::new(vec![vec![2, 1], vec![1, 1]]).unwrap();
        for p in toral_orbit(&TorusPoint::zero(2), &a, 50).unwrap() {
            assert_eq!(p, TorusPoint::zero(2));
        }
    }

    #[test]
    fn toral_orbit_step() {
        let a = IntMatrix::new(vec![vec![2, 1], vec![1, 1]]).unwrap();
        let x = TorusPoint::from_fractions(&[(1, 2), (0, 1)]).unwrap();
        let orbit = toral_orbit(&x, &a, 2).unwrap();
        assert_eq!(orbit[1], TorusPoint::from_fractions(&[(0, 1), (1, 2)]).unwrap());
    }

    #[test]
    fn toral_orbit_linearity() {
        let a = IntMatrix::new(vec![vec![2, 1], vec![1, 1]]).unwrap();
        let x1 = sample_points(21, 2, 1)[0].clone();
        let x2 = sample_points(22, 2, 1)[0].clone();
        let sum = x1.wrapping_add(&x2);
        let o1 = toral_orbit(&x1, &a, 40).unwrap();
        let o2 = toral_orbit(&x2, &a, 40).unwrap();
        let os = toral_orbit(&sum, &a, 40).unwrap();
        for k in 0..40 {
            assert_eq!(os[k], o1[k].wrapping_add(&o2[k]));
        }
    }
}
