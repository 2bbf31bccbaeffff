//! Square integer matrices acting on the torus.
//!
//! A matrix with integer entries maps the `2^-64` coordinate lattice to
//! itself, so matrix-vector products in wrapping arithmetic are exact torus
//! maps. A matrix defines an *ergodic* automorphism iff `|det| = 1` and no
//! eigenvalue is a root of unity; the latter is decided exactly by testing
//! the characteristic polynomial for cyclotomic factors of degree <= d.

use super::{DynamicsError, TorusPoint};

/// A `d x d` integer matrix (row-major).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    dim: usize,
    entries: Vec<i64>,
}

impl IntMatrix {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self, DynamicsError> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(DynamicsError::NotSquare {
                rows: dim,
                cols: rows.first().map_or(0, Vec::len),
            });
        }
        Ok(Self {
            dim,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        Self { dim, entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.dim + j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim)
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        (0..self.dim)
            .map(|i| self.entries[i * self.dim..(i + 1) * self.dim].to_vec())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut entries = vec![0; self.dim * self.dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                entries[j * self.dim + i] = self.entry(i, j);
            }
        }
        Self {
            dim: self.dim,
            entries,
        }
    }

    /// Exact action on the torus lattice: wrapping matrix-vector product.
    pub fn apply_point(&self, x: &TorusPoint) -> TorusPoint {
        assert_eq!(self.dim, x.dim(), "matrix/point dimension mismatch");
        let coords = x.numerators();
        let out = (0..self.dim)
            .map(|i| {
                let mut acc = 0u64;
                for j in 0..self.dim {
                    acc = acc.wrapping_add((self.entry(i, j) as u64).wrapping_mul(coords[j]));
                }
                acc
            })
            .collect();
        TorusPoint::from_numerators(out)
    }

    /// Wrapping product on 128-bit state, for high-precision orbit iteration.
    pub fn apply_u128(&self, x: &[u128]) -> Vec<u128> {
        assert_eq!(self.dim, x.len(), "matrix/state dimension mismatch");
        (0..self.dim)
            .map(|i| {
                let mut acc = 0u128;
                for j in 0..self.dim {
                    acc = acc.wrapping_add((self.entry(i, j) as i128 as u128).wrapping_mul(x[j]));
                }
                acc
            })
            .collect()
    }

    /// Integer matrix-vector product with overflow detection.
    pub fn mul_vec_i128(&self, v: &[i128]) -> Option<Vec<i128>> {
        assert_eq!(self.dim, v.len(), "matrix/vector dimension mismatch");
        (0..self.dim)
            .map(|i| {
                let mut acc: i128 = 0;
                for j in 0..self.dim {
                    acc = acc.checked_add((self.entry(i, j) as i128).checked_mul(v[j])?)?;
                }
                Some(acc)
            })
            .collect()
    }

    /// Checked integer matrix product.
    pub fn mul(&self, other: &Self) -> Option<Self> {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        let mut entries = vec![0i64; self.dim * self.dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut acc: i64 = 0;
                for k in 0..self.dim {
                    acc = acc.checked_add(self.entry(i, k).checked_mul(other.entry(k, j))?)?;
                }
                entries[i * self.dim + j] = acc;
            }
        }
        Some(Self {
            dim: self.dim,
            entries,
        })
    }

    /// Checked integer matrix power.
    pub fn pow(&self, k: usize) -> Option<Self> {
        let mut out = Self::identity(self.dim);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Some(out)
    }

    /// Checked entrywise difference.
    pub fn sub(&self, other: &Self) -> Option<Self> {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<i64>>>()?;
        Some(Self {
            dim: self.dim,
            entries,
        })
    }

    /// Characteristic polynomial `x^d + c_1 x^{d-1} + ... + c_d`, returned as
    /// ascending coefficients `[c_d, ..., c_1, 1]`. Faddeev-LeVerrier with
    /// exact integer divisions.
    pub fn char_poly(&self) -> Result<Vec<i128>, DynamicsError> {
        let d = self.dim;
        let entries: Vec<i128> = self.entries.iter().map(|&e| e as i128).collect();
        let at = |m: &[i128], i: usize, j: usize| m[i * d + j];
        let mat_mul = |a: &[i128], b: &[i128]| -> Option<Vec<i128>> {
            let mut out = vec![0i128; d * d];
            for i in 0..d {
                for j in 0..d {
                    let mut acc: i128 = 0;
                    for k in 0..d {
                        acc = acc.checked_add(at(a, i, k).checked_mul(at(b, k, j))?)?;
                    }
                    out[i * d + j] = acc;
                }
            }
            Some(out)
        };
        let trace = |m: &[i128]| (0..d).try_fold(0i128, |acc, i| acc.checked_add(at(m, i, i)));

        let mut coeffs = vec![0i128; d + 1];
        coeffs[d] = 1;
        let mut m = entries.clone();
        for k in 1..=d {
            let t = trace(&m).ok_or(DynamicsError::MatrixOverflow)?;
            debug_assert_eq!(t % k as i128, 0, "Faddeev-LeVerrier division must be exact");
            let c = -t / k as i128;
            coeffs[d - k] = c;
            if k < d {
                let mut shifted = m.clone();
                for i in 0..d {
                    shifted[i * d + i] = shifted[i * d + i]
                        .checked_add(c)
                        .ok_or(DynamicsError::MatrixOverflow)?;
                }
                m = mat_mul(&entries, &shifted).ok_or(DynamicsError::MatrixOverflow)?;
            }
        }
        Ok(coeffs)
    }

    /// Exact determinant via the characteristic polynomial.
    pub fn det(&self) -> Result<i128, DynamicsError> {
        let coeffs = self.char_poly()?;
        let c_d = coeffs[0]; // chi(0) = c_d, det = (-1)^d chi(0)
        Ok(if self.dim % 2 == 0 { c_d } else { -c_d })
    }

    pub fn trace(&self) -> i64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    /// Decide whether the matrix defines an ergodic torus automorphism.
    pub fn check_ergodic(&self) -> Result<ErgodicityCheck, DynamicsError> {
        let det = self.det()?;
        if det.abs() != 1 {
            return Ok(ErgodicityCheck {
                ergodic: false,
                det,
                trace: self.trace(),
                failure: Some(ErgodicityFailure::DeterminantNotUnimodular { det }),
            });
        }
        let chi = self.char_poly()?;
        for (order, phi) in cyclotomics_with_degree_at_most(self.dim) {
            if divides_exactly(&phi, &chi) {
                return Ok(ErgodicityCheck {
                    ergodic: false,
                    det,
                    trace: self.trace(),
                    failure: Some(ErgodicityFailure::RootOfUnityEigenvalue { order }),
                });
            }
        }
        Ok(ErgodicityCheck {
            ergodic: true,
            det,
            trace: self.trace(),
            failure: None,
        })
    }
}

/// Outcome of the ergodicity test, with a diagnosis on failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErgodicityCheck {
    pub ergodic: bool,
    pub det: i128,
    pub trace: i64,
    pub failure: Option<ErgodicityFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ErgodicityFailure {
    /// `|det| != 1`: not invertible over the integers, not measure preserving
    /// as an automorphism.
    DeterminantNotUnimodular { det: i128 },
    /// The characteristic polynomial has the `order`-th cyclotomic factor, so
    /// some eigenvalue is a primitive `order`-th root of unity.
    RootOfUnityEigenvalue { order: usize },
}

impl std::fmt::Display for ErgodicityFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::DeterminantNotUnimodular { det } => {
                write!(f, "determinant {det} is not +-1")
            }
            Self::RootOfUnityEigenvalue { order } => write!(
                f,
                "eigenvalue is a primitive {order}-th root of unity \
                 (characteristic polynomial has a cyclotomic factor)"
            ),
        }
    }
}

/// Euler totient by trial factorization (arguments are tiny).
fn totient(mut m: usize) -> usize {
    let mut phi = 1;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            let mut pk = 1;
            while m % p == 0 {
                m /= p;
                pk *= p;
            }
            phi *= pk - pk / p;
        }
        p += 1;
    }
    if m > 1 {
        phi *= m - 1;
    }
    phi
}

/// All cyclotomic polynomials of degree <= `d`, as `(order, ascending coeffs)`.
/// Uses `phi(m) >= sqrt(m/2)`, so `m <= 2 d^2` exhausts the candidates.
fn cyclotomics_with_degree_at_most(d: usize) -> Vec<(usize, Vec<i128>)> {
    let m_max = 2 * d * d + 1;
    let mut table: Vec<Option<Vec<i128>>> = vec![None; m_max + 1];
    let mut out = Vec::new();
    for m in 1..=m_max {
        if totient(m) <= d {
            let poly = cyclotomic(m, &mut table);
            debug_assert_eq!(poly.len() - 1, totient(m));
            out.push((m, poly));
        }
    }
    out
}

fn cyclotomic(m: usize, table: &mut Vec<Option<Vec<i128>>>) -> Vec<i128> {
    if let Some(p) = &table[m] {
        return p.clone();
    }
    // x^m - 1 divided by all proper-divisor cyclotomics
    let mut poly = vec![0i128; m + 1];
    poly[0] = -1;
    poly[m] = 1;
    for div in 1..m {
        if m % div == 0 {
            let factor = cyclotomic(div, table);
            poly = poly_div_exact(&poly, &factor);
        }
    }
    table[m] = Some(poly.clone());
    poly
}

/// Exact division of integer polynomials with monic divisor (ascending
/// coefficients); panics if the division is not exact, which cannot happen
/// for the cyclotomic tower.
fn poly_div_exact(num: &[i128], den: &[i128]) -> Vec<i128> {
    let mut rem = num.to_vec();
    let dn = den.len() - 1;
    debug_assert_eq!(den[dn], 1, "divisor must be monic");
    let qn = rem.len() - 1 - dn;
    let mut quot = vec![0i128; qn + 1];
    for k in (0..=qn).rev() {
        let c = rem[k + dn];
        quot[k] = c;
        for (i, &dcoef) in den.iter().enumerate() {
            rem[k + i] -= c * dcoef;
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0), "division must be exact");
    quot
}

/// Whether monic `den` divides `num` exactly over the integers.
fn divides_exactly(den: &[i128], num: &[i128]) -> bool {
    if den.len() > num.len() {
        return false;
    }
    let mut rem = num.to_vec();
    let dn = den.len() - 1;
    for k in (0..=(rem.len() - 1 - dn)).rev() {
        let c = rem[k + dn];
        for (i, &dcoef) in den.iter().enumerate() {
            rem[k + i] -= c * dcoef;
        }
    }
    rem.iter().all(|&c| c == 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> IntMatrix {
        IntMatrix::new(vec![vec![2, 1], vec![1, 1]]).unwrap()
    }

    #[test]
    fn cat_map_is_ergodic() {
        let chk = cat().check_ergodic().unwrap();
        assert!(chk.ergodic);
        assert_eq!(chk.det, 1);
    }

    #[test]
    fn rotation_of_order_four_rejected() {
        let m = IntMatrix::new(vec![vec![0, -1], vec![1, 0]]).unwrap();
        let chk = m.check_ergodic().unwrap();
        assert!(!chk.ergodic);
        assert_eq!(
            chk.failure,
            Some(ErgodicityFailure::RootOfUnityEigenvalue { order: 4 })
        );
    }

    #[test]
    fn parabolic_rejected() {
        let m = IntMatrix::new(vec![vec![1, 1], vec![0, 1]]).unwrap();
        let chk = m.check_ergodic().unwrap();
        assert!(!chk.ergodic);
        assert_eq!(
            chk.failure,
            Some(ErgodicityFailure::RootOfUnityEigenvalue { order: 1 })
        );
    }

    #[test]
    fn non_unimodular_rejected() {
        let m = IntMatrix::new(vec![vec![2, 0], vec![0, 1]]).unwrap();
        let chk = m.check_ergodic().unwrap();
        assert!(!chk.ergodic);
        assert_eq!(
            chk.failure,
            Some(ErgodicityFailure::DeterminantNotUnimodular { det: 2 })
        );
    }

    #[test]
    fn char_poly_of_cat_map() {
        // x^2 - 3x + 1
        assert_eq!(cat().char_poly().unwrap(), vec![1, -3, 1]);
    }

    #[test]
    fn non_square_rejected() {
        assert!(IntMatrix::new(vec![vec![1, 2]]).is_err());
    }

    #[test]
    fn d3_hyperbolic_accepted() {
        // companion matrix of x^3 - x - 1 (Pisot, no root of unity, det 1)
        let m = IntMatrix::new(vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 0]]).unwrap();
        assert!(m.check_ergodic().unwrap().ergodic);
    }

    #[test]
    fn apply_point_wraps_exactly() {
        let x = TorusPoint::from_fractions(&[(1, 2), (0, 1)]).unwrap();
        let y = cat().apply_point(&x);
        assert_eq!(y, TorusPoint::from_fractions(&[(0, 1), (1, 2)]).unwrap());
    }

    #[test]
    fn apply_point_exact_on_rational_orbit() {
        let x = TorusPoint::from_fractions(&[(1, 5), (2, 5)]).unwrap();
        let y = cat().apply_point(&x);
        assert_eq!(y, TorusPoint::from_fractions(&[(4, 5), (3, 5)]).unwrap());
    }

    #[test]
    fn totient_small_values() {
        let vals: Vec<usize> = (1..=12).map(totient).collect();
        assert_eq!(vals, vec![1, 1, 2, 2, 4, 2, 6, 4, 6, 4, 10, 4]);
    }

    #[test]
    fn cyclotomic_polynomials_are_correct() {
        let mut table = vec![None; 13];
        assert_eq!(cyclotomic(1, &mut table), vec![-1, 1]);
        assert_eq!(cyclotomic(2, &mut table), vec![1, 1]);
        assert_eq!(cyclotomic(4, &mut table), vec![1, 0, 1]);
        assert_eq!(cyclotomic(6, &mut table), vec![1, -1, 1]);
        assert_eq!(cyclotomic(12, &mut table), vec![1, 0, -1, 0, 1]);
    }
}
