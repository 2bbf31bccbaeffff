//! Fixed-point torus coordinates.
//!
//! A point of the d-torus is stored as one unsigned 64-bit numerator per
//! coordinate, interpreted as the fraction `numerator / 2^64` in `[0, 1)`.
//! Group operations (add, subtract, negate) are wrapping integer arithmetic
//! and therefore exact on the `2^-64` lattice. Conversion to `f64` truncates
//! to the top 53 bits, so the only rounding in any evaluation pipeline
//! happens at the final transcendental call.

use super::DynamicsError;

/// Scale factor taking a 53-bit integer to the unit interval.
const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Convert a 64-bit fraction numerator to `f64` by top-53-bit truncation.
#[inline(always)]
pub fn unit_f64(numerator: u64) -> f64 {
    ((numerator >> 11) as f64) * INV_2_53
}

/// A point of `T^d` with exact 64-bit fixed-point coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TorusPoint {
    coords: Vec<u64>,
}

impl TorusPoint {
    /// The origin of `T^d`.
    pub fn zero(dim: usize) -> Self {
        Self {
            coords: vec![0; dim],
        }
    }

    /// Build a point from raw fraction numerators over `2^64`.
    pub fn from_numerators(coords: Vec<u64>) -> Self {
        Self { coords }
    }

    /// Build a 1-dimensional point from a raw numerator.
    pub fn from_numerator(c: u64) -> Self {
        Self { coords: vec![c] }
    }

    /// Exact rational coordinates `num/den` with `num < den`, truncated
    /// (floored) onto the `2^-64` lattice. Exact whenever `den` divides `2^64`.
    pub fn from_fractions(fracs: &[(u64, u64)]) -> Result<Self, DynamicsError> {
        let mut coords = Vec::with_capacity(fracs.len());
        for &(num, den) in fracs {
            if den == 0 || num >= den {
                return Err(DynamicsError::InvalidFraction { num, den });
            }
            coords.push((((num as u128) << 64) / den as u128) as u64);
        }
        Ok(Self { coords })
    }

    /// Reduce real coordinates mod 1 and truncate onto the lattice.
    pub fn from_f64s(coords: &[f64]) -> Self {
        let coords = coords
            .iter()
            .map(|&v| {
                let f = v.rem_euclid(1.0);
                // rem_euclid can return 1.0 for tiny negative v
                if f >= 1.0 {
                    0
                } else {
                    (f * (2f64.powi(64))) as u64
                }
            })
            .collect();
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn numerators(&self) -> &[u64] {
        &self.coords
    }

    /// Coordinates as `f64` (top-53-bit truncation).
    pub fn to_f64s(&self) -> Vec<f64> {
        self.coords.iter().map(|&c| unit_f64(c)).collect()
    }

    pub fn coord_f64(&self, i: usize) -> f64 {
        unit_f64(self.coords[i])
    }

    /// Wrapping (exact) group addition.
    pub fn wrapping_add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "torus point dimension mismatch");
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a.wrapping_add(*b))
                .collect(),
        }
    }

    /// Wrapping (exact) group subtraction.
    pub fn wrapping_sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "torus point dimension mismatch");
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a.wrapping_sub(*b))
                .collect(),
        }
    }

    /// Wrapping (exact) group inverse.
    pub fn wrapping_neg(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|&a| a.wrapping_neg()).collect(),
        }
    }

    /// Torus distance `max_i min(|x_i - y_i|, 1 - |x_i - y_i|)` computed
    /// exactly on the lattice before the final conversion.
    pub fn torus_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "torus point dimension mismatch");
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| {
                let d = a.wrapping_sub(*b);
                let d = d.min(d.wrapping_neg());
                unit_f64(d)
            })
            .fold(0.0, f64::max)
    }
}

/// A binary fraction of configurable length, used for deep doubling-map
/// orbits where 64 bits are consumed after 64 shifts.
///
/// Bit `i` (starting at 0) is the coefficient of `2^-(i+1)`; words store the
/// expansion most-significant first, with unused tail bits kept zero so that
/// equality is structural.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitFraction {
    words: Vec<u64>,
    bits: usize,
}

impl BitFraction {
    pub fn zero(bits: usize) -> Self {
        Self {
            words: vec![0; bits.div_ceil(64)],
            bits,
        }
    }

    /// Build from raw words (most-significant first). Tail bits beyond
    /// `bits` are cleared.
    pub fn from_words(mut words: Vec<u64>, bits: usize) -> Result<Self, DynamicsError> {
        let need = bits.div_ceil(64);
        if words.len() < need || bits < 64 {
            return Err(DynamicsError::InsufficientBits {
                needed: bits.max(64),
                available: words.len() * 64,
            });
        }
        words.truncate(need);
        let tail = need * 64 - bits;
        if tail > 0 {
            let last = words.last_mut().expect("need >= 1");
            *last &= u64::MAX << tail;
        }
        Ok(Self { words, bits })
    }

    /// Parse `"0.101..."` (or a bare bit string) for tests and literals.
    /// The stored length is padded to at least `min_bits`.
    pub fn from_binary_str(s: &str, min_bits: usize) -> Result<Self, DynamicsError> {
        let digits = s.strip_prefix("0.").unwrap_or(s);
        let bits = digits.len().max(min_bits).max(64);
        let mut frac = Self::zero(bits);
        for (i, ch) in digits.chars().enumerate() {
            match ch {
                '1' => frac.set_bit(i),
                '0' => {}
                _ => return Err(DynamicsError::InvalidBitString(s.to_string())),
            }
        }
        Ok(frac)
    }

    /// Binary expansion of `num/den` (`num < den`) to `bits` bits, by long
    /// division.
    pub fn from_rational(num: u64, den: u64, bits: usize) -> Result<Self, DynamicsError> {
        if den == 0 || num >= den {
            return Err(DynamicsError::InvalidFraction { num, den });
        }
        let mut frac = Self::zero(bits.max(64));
        let mut rem = num as u128;
        let den = den as u128;
        for i in 0..frac.bits {
            rem <<= 1;
            if rem >= den {
                rem -= den;
                frac.set_bit(i);
            }
        }
        Ok(frac)
    }

    fn set_bit(&mut self, i: usize) {
        self.words[i / 64] |= 1u64 << (63 - (i % 64));
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Bits `k..k+64` as a 64-bit fraction numerator: the top 64 bits of the
    /// fraction shifted left by `k`, i.e. of `2^k x mod 1`.
    pub fn window64(&self, k: usize) -> Result<u64, DynamicsError> {
        if k + 64 > self.bits {
            return Err(DynamicsError::InsufficientBits {
                needed: k + 64,
                available: self.bits,
            });
        }
        let w = k / 64;
        let b = k % 64;
        Ok(if b == 0 {
            self.words[w]
        } else {
            (self.words[w] << b) | (self.words[w + 1] >> (64 - b))
        })
    }

    /// The leading 64 bits (the fraction itself on the coarse lattice).
    pub fn top64(&self) -> u64 {
        self.words[0]
    }

    /// The point of `T^1` holding the leading 64 bits.
    pub fn to_point(&self) -> TorusPoint {
        TorusPoint::from_numerator(self.top64())
    }

    /// Streaming left-shift windows: yields `window64(k)` for `k = 0, 1, ...`
    /// while 64 significant bits remain.
    pub fn windows(&self) -> WindowIter<'_> {
        WindowIter {
            frac: self,
            next_k: 0,
            current: self.words[0],
        }
    }
}

/// Iterator over successive 64-bit windows of a [`BitFraction`].
pub struct WindowIter<'a> {
    frac: &'a BitFraction,
    next_k: usize,
    current: u64,
}

impl Iterator for WindowIter<'_> {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        let k = self.next_k;
        if k + 64 > self.frac.bits {
            return None;
        }
        let out = self.current;
        // slide: shift in bit k+64 (if it exists) at the bottom
        let i = k + 64;
        let bit = if i < self.frac.bits {
            (self.frac.words[i / 64] >> (63 - (i % 64))) & 1
        } else {
            0
        };
        self.current = (self.current << 1) | bit;
        self.next_k += 1;
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_truncation_is_floor() {
        // 1/5 on the lattice: floor(2^64/5); applying the known residue
        // 2^64 = 5q + 1 gives q = (2^64 - 1)/5.
        let p = TorusPoint::from_fractions(&[(1, 5)]).unwrap();
        assert_eq!(p.numerators()[0], (u64::MAX / 5));
    }

    #[test]
    fn dyadic_fractions_are_exact() {
        let p = TorusPoint::from_fractions(&[(3, 8)]).unwrap();
        assert_eq!(p.numerators()[0], 3u64 << 61);
        assert_eq!(p.coord_f64(0), 0.375);
    }

    #[test]
    fn wrapping_ops_are_group_ops() {
        let a = TorusPoint::from_fractions(&[(3, 4)]).unwrap();
        let b = TorusPoint::from_fractions(&[(1, 2)]).unwrap();
        let s = a.wrapping_add(&b);
        assert_eq!(s.coord_f64(0), 0.25);
        assert_eq!(s.wrapping_sub(&b), a);
        assert_eq!(a.wrapping_add(&a.wrapping_neg()), TorusPoint::zero(1));
    }

    #[test]
    fn window_shifts_drop_overflow() {
        // x = 0.101 -> shift by 1 -> 0.01
        let x = BitFraction::from_binary_str("0.101", 128).unwrap();
        assert_eq!(x.window64(1).unwrap(), 0b01u64 << 62);
    }

    #[test]
    fn window_of_one_third_is_periodic() {
        let x = BitFraction::from_rational(1, 3, 256).unwrap();
        // shift by 2: 4/3 mod 1 = 1/3
        assert_eq!(x.window64(2).unwrap(), x.top64());
        assert_eq!(x.window64(1).unwrap(), !x.top64()); // 2/3 = bitwise complement of 1/3
    }

    #[test]
    fn zero_is_fixed() {
        let x = BitFraction::zero(256);
        for k in 0..100 {
            assert_eq!(x.window64(k).unwrap(), 0);
        }
    }

    #[test]
    fn windows_iterator_matches_direct_extraction() {
        let x = BitFraction::from_rational(13, 29, 300).unwrap();
        for (k, w) in x.windows().enumerate() {
            assert_eq!(w, x.window64(k).unwrap());
        }
        assert_eq!(x.windows().count(), 300 - 64 + 1);
    }

    #[test]
    fn window_out_of_range_errors() {
        let x = BitFraction::zero(128);
        assert!(x.window64(64).is_ok());
        assert!(x.window64(65).is_err());
    }
}
