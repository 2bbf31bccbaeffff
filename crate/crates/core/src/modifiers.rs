//! Perturbation families acting on the observable.
//!
//! A modifier attaches to each base point `x` a torus map `theta_x`; all
//! built-ins act by group translation, so the effective observable at `x` is
//! the base observable translated by a vector `t(x)`, and its mean is 0 (the
//! centering offset is returned alongside for uniformity). The pushforward
//! of Lebesgue measure under `x -> t(x)` supplies the mixing weights of the
//! limit law.

use thiserror::Error;

use crate::dynamics::{IntMatrix, TorusPoint, UniformStreams};
use crate::observables::{FourierObservable, ObservableError};

#[derive(Debug, Error)]
pub enum ModifierError {
    #[error("dimension mismatch: modifier on T^{expected}, argument has dimension {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {0:?} lies outside every partition region")]
    PointOutsideRegions(Vec<f64>),
    #[error("partition regions must tile the torus: volumes sum to {sum}, not 1")]
    PartitionMassDefect { sum: f64 },
    #[error("partition regions overlap on a set of positive measure")]
    PartitionOverlap,
    #[error("region bound {0} outside [0, 1]")]
    BadRegionBound(f64),
    #[error("region is empty (zero volume)")]
    EmptyRegion,
    #[error("tabulated map violates its declared Holder modulus at adjacent cells {a:?}, {b:?}: distance {dist} > bound {bound}")]
    HolderViolation {
        a: Vec<usize>,
        b: Vec<usize>,
        dist: f64,
        bound: f64,
    },
    #[error("tabulated map needs {expected} cells, got {got}")]
    TableSizeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Observable(#[from] ObservableError),
}

/// An axis-aligned half-open box `prod [lo_i, hi_i)` inside `[0, 1)^d`,
/// stored on the 64-bit lattice (the upper bound may be `2^64` = 1.0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxRegion {
    lo: Vec<u64>,
    hi: Vec<u128>,
}

impl BoxRegion {
    pub fn new(bounds: &[(f64, f64)]) -> Result<Self, ModifierError> {
        let mut lo = Vec::with_capacity(bounds.len());
        let mut hi = Vec::with_capacity(bounds.len());
        for &(a, b) in bounds {
            if !(0.0..=1.0).contains(&a) {
                return Err(ModifierError::BadRegionBound(a));
            }
            if !(0.0..=1.0).contains(&b) {
                return Err(ModifierError::BadRegionBound(b));
            }
            let la = (a * 2f64.powi(64)) as u64; // a < 1 here, cast is exact floor
            let hb = if b >= 1.0 {
                1u128 << 64
            } else {
                ((b * 2f64.powi(64)) as u64) as u128
            };
            if (la as u128) >= hb {
                return Err(ModifierError::EmptyRegion);
            }
            lo.push(la);
            hi.push(hb);
        }
        Ok(Self { lo, hi })
    }

    /// The whole torus `[0,1)^d`.
    pub fn full(dim: usize) -> Self {
        Self {
            lo: vec![0; dim],
            hi: vec![1u128 << 64; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &TorusPoint) -> bool {
        x.numerators()
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&c, (&l, &h))| c >= l && (c as u128) < h)
    }

    /// Exact Lebesgue volume.
    pub fn volume(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| (h - l as u128) as f64 / 2f64.powi(64))
            .product()
    }

    fn overlap_volume(&self, other: &Self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(other.lo.iter().zip(&other.hi))
            .map(|((&l1, &h1), (&l2, &h2))| {
                let lo = l1.max(l2) as u128;
                let hi = h1.min(h2);
                if hi > lo {
                    (hi - lo) as f64 / 2f64.powi(64)
                } else {
                    0.0
                }
            })
            .product()
    }

    fn lower_corner(&self) -> Vec<u64> {
        self.lo.clone()
    }
}

/// One cell of a finite-partition modifier.
#[derive(Debug, Clone)]
pub struct PartitionCell {
    pub region: BoxRegion,
    pub shift: TorusPoint,
}

/// A grid-tabulated translation-valued map with a declared Holder modulus.
#[derive(Debug, Clone)]
pub struct TabulatedMap {
    dim: usize,
    grid: usize,
    /// Translation vectors, row-major over the `grid^dim` cells, quantized to
    /// the 64-bit lattice; the cell representative is its lower corner.
    vectors: Vec<TorusPoint>,
    pub holder_constant: f64,
    pub holder_exponent: f64,
}

impl TabulatedMap {
    /// Build and verify the declared modulus on all adjacent cell pairs
    /// (wrapping across the torus).
    pub fn new(
        dim: usize,
        grid: usize,
        vectors: Vec<TorusPoint>,
        holder_constant: f64,
        holder_exponent: f64,
    ) -> Result<Self, ModifierError> {
        let cells = grid.pow(dim as u32);
        if vectors.len() != cells {
            return Err(ModifierError::TableSizeMismatch {
                expected: cells,
                got: vectors.len(),
            });
        }
        let map = Self {
            dim,
            grid,
            vectors,
            holder_constant,
            holder_exponent,
        };
        let step = 1.0 / grid as f64;
        let bound = holder_constant * step.powf(holder_exponent) + 1e-12;
        for idx in 0..cells {
            let a = map.unflatten(idx);
            for axis in 0..dim {
                let mut b = a.clone();
                b[axis] = (b[axis] + 1) % grid;
                let dist = map.vectors[idx].torus_distance(&map.vectors[map.flatten(&b)]);
                if dist > bound {
                    return Err(ModifierError::HolderViolation { a, b, dist, bound });
                }
            }
        }
        Ok(map)
    }

    fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.grid + i)
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for i in (0..self.dim).rev() {
            idx[i] = flat % self.grid;
            flat /= self.grid;
        }
        idx
    }

    /// Cell lookup: floor(x * grid) per axis, exact in integer arithmetic.
    pub fn vector_at(&self, x: &TorusPoint) -> &TorusPoint {
        let idx: Vec<usize> = x
            .numerators()
            .iter()
            .map(|&c| ((c as u128 * self.grid as u128) >> 64) as usize)
            .collect();
        &self.vectors[self.flatten(&idx)]
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn cells(&self) -> &[TorusPoint] {
        &self.vectors
    }
}

/// The perturbation family `theta`.
#[derive(Debug, Clone)]
pub enum ModifierMap {
    /// `theta_x(z) = z - x`: the translated modified sums.
    SelfTranslation,
    /// `theta(x) = -Bx` acting by translation, so the modified observable at
    /// orbit point `A^k x` is `phi((A^k - B) x)`. `B = 0` is the identity
    /// modifier (plain ergodic sums).
    Linear(IntMatrix),
    /// Piecewise-constant translation on a finite box partition.
    Partition(Vec<PartitionCell>),
    /// Grid-tabulated Holder translation field.
    Tabulated(TabulatedMap),
}

impl ModifierMap {
    /// Identity modifier: plain (unmodified) ergodic sums.
    pub fn identity(dim: usize) -> Self {
        Self::Linear(IntMatrix::zeros(dim))
    }

    pub fn label(&self) -> String {
        match self {
            Self::SelfTranslation => "self-translation".to_string(),
            Self::Linear(b) if b.is_zero() => "identity".to_string(),
            Self::Linear(_) => "linear".to_string(),
            Self::Partition(cells) => format!("partition[{}]", cells.len()),
            Self::Tabulated(t) => format!("tabulated[{}]", t.grid()),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), ModifierError> {
        match self {
            Self::SelfTranslation => Ok(()),
            Self::Linear(b) => {
                if b.dim() != dim {
                    Err(ModifierError::DimensionMismatch {
                        expected: b.dim(),
                        got: dim,
                    })
                } else {
                    Ok(())
                }
            }
            Self::Partition(cells) => {
                if cells.iter().any(|c| c.region.dim() != dim || c.shift.dim() != dim) {
                    return Err(ModifierError::DimensionMismatch {
                        expected: dim,
                        got: cells
                            .iter()
                            .map(|c| c.region.dim())
                            .find(|&d| d != dim)
                            .unwrap_or(dim),
                    });
                }
                let sum: f64 = cells.iter().map(|c| c.region.volume()).sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(ModifierError::PartitionMassDefect { sum });
                }
                for (i, a) in cells.iter().enumerate() {
                    for b in &cells[i + 1..] {
                        if a.region.overlap_volume(&b.region) > 1e-12 {
                            return Err(ModifierError::PartitionOverlap);
                        }
                    }
                }
                Ok(())
            }
            Self::Tabulated(t) => {
                if t.dim != dim {
                    Err(ModifierError::DimensionMismatch {
                        expected: t.dim,
                        got: dim,
                    })
                } else {
                    Ok(())
                }
            }
        }
    }

    /// The effective translation vector `t(x)` with `theta_x(z) = z + t(x)`.
    ///
    /// Partition cells are scanned in lexicographic order of their lower
    /// corner, so a boundary point resolves to the lexicographically smallest
    /// region containing it.
    pub fn effective_translation(&self, x: &TorusPoint) -> Result<TorusPoint, ModifierError> {
        match self {
            Self::SelfTranslation => Ok(x.wrapping_neg()),
            Self::Linear(b) => Ok(b.apply_point(x).wrapping_neg()),
            Self::Partition(cells) => {
                let mut order: Vec<&PartitionCell> = cells.iter().collect();
                order.sort_by(|a, b| a.region.lower_corner().cmp(&b.region.lower_corner()));
                order
                    .iter()
                    .find(|c| c.region.contains(x))
                    .map(|c| c.shift.clone())
                    .ok_or_else(|| ModifierError::PointOutsideRegions(x.to_f64s()))
            }
            Self::Tabulated(t) => Ok(t.vector_at(x).clone()),
        }
    }

    /// The centered observable seen along the orbit of `x`, together with the
    /// centering offset. Translations preserve Lebesgue measure, so the
    /// offset is exactly 0 for every variant.
    pub fn effective_observable(
        &self,
        x: &TorusPoint,
        phi: &FourierObservable,
    ) -> Result<(FourierObservable, f64), ModifierError> {
        let t = self.effective_translation(x)?;
        Ok((phi.translate(&t)?, 0.0))
    }

    /// The pushforward of Lebesgue measure under `x -> t(x)`, as a weight
    /// table over parameter points.
    ///
    /// Exact uniform for self-translation and for invertible linear
    /// modifiers; exact atoms for partitions; a sampled histogram otherwise.
    pub fn pushforward_weights(
        &self,
        grid: &ParameterGrid,
        sampling: HistogramSampling,
    ) -> Result<PushforwardWeights, ModifierError> {
        match self {
            Self::SelfTranslation => Ok(PushforwardWeights::uniform(grid)),
            Self::Linear(b) => {
                if b.is_zero() {
                    Ok(PushforwardWeights {
                        points: vec![TorusPoint::zero(grid.dim)],
                        weights: vec![1.0],
                    })
                } else if b.det().map(|d| d != 0).unwrap_or(false) {
                    Ok(PushforwardWeights::uniform(grid))
                } else {
                    Ok(self.histogram(grid, sampling))
                }
            }
            Self::Partition(cells) => Ok(PushforwardWeights {
                points: cells.iter().map(|c| c.shift.clone()).collect(),
                weights: cells.iter().map(|c| c.region.volume()).collect(),
            }),
            Self::Tabulated(_) => Ok(self.histogram(grid, sampling)),
        }
    }

    fn histogram(&self, grid: &ParameterGrid, sampling: HistogramSampling) -> PushforwardWeights {
        let streams = UniformStreams::new(sampling.seed);
        let mut counts = vec![0u64; grid.cells()];
        for i in 0..sampling.samples {
            let x = streams.point(i as u64, grid.dim);
            let t = self
                .effective_translation(&x)
                .expect("histogram sampling requires a total modifier");
            counts[grid.cell_of(&t)] += 1;
        }
        let total = sampling.samples as f64;
        PushforwardWeights {
            points: grid.points(),
            weights: counts.iter().map(|&c| c as f64 / total).collect(),
        }
    }
}

/// Sampling budget for histogram pushforwards.
#[derive(Debug, Clone, Copy)]
pub struct HistogramSampling {
    pub samples: usize,
    pub seed: u64,
}

impl Default for HistogramSampling {
    fn default() -> Self {
        Self {
            samples: 200_000,
            seed: 0,
        }
    }
}

/// A product lattice `({0, 1/g, ..., (g-1)/g})^d` of translation parameters.
#[derive(Debug, Clone, Copy)]
pub struct ParameterGrid {
    pub dim: usize,
    pub per_axis: usize,
}

impl ParameterGrid {
    pub fn new(dim: usize, per_axis: usize) -> Self {
        assert!(per_axis > 0, "grid must have at least one point per axis");
        Self { dim, per_axis }
    }

    pub fn cells(&self) -> usize {
        self.per_axis.pow(self.dim as u32)
    }

    /// Grid point `i/g` per axis (exact on the lattice when `g` is a power
    /// of two).
    pub fn point(&self, flat: usize) -> TorusPoint {
        let mut idx = flat;
        let mut coords = vec![0u64; self.dim];
        for i in (0..self.dim).rev() {
            let j = idx % self.per_axis;
            idx /= self.per_axis;
            coords[i] = (((j as u128) << 64) / self.per_axis as u128) as u64;
        }
        TorusPoint::from_numerators(coords)
    }

    pub fn points(&self) -> Vec<TorusPoint> {
        (0..self.cells()).map(|i| self.point(i)).collect()
    }

    /// Index of the cell `[i/g, (i+1)/g)^d` containing `x`.
    pub fn cell_of(&self, x: &TorusPoint) -> usize {
        x.numerators().iter().fold(0, |acc, &c| {
            acc * self.per_axis + ((c as u128 * self.per_axis as u128) >> 64) as usize
        })
    }
}

/// Pushforward measure as a finite weight table.
#[derive(Debug, Clone)]
pub struct PushforwardWeights {
    pub points: Vec<TorusPoint>,
    pub weights: Vec<f64>,
}

impl PushforwardWeights {
    fn uniform(grid: &ParameterGrid) -> Self {
        let cells = grid.cells();
        Self {
            points: grid.points(),
            weights: vec![1.0 / cells as f64; cells],
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn half_partition() -> ModifierMap {
        ModifierMap::Partition(vec![
            PartitionCell {
                region: BoxRegion::new(&[(0.0, 0.5)]).unwrap(),
                shift: TorusPoint::zero(1),
            },
            PartitionCell {
                region: BoxRegion::new(&[(0.5, 1.0)]).unwrap(),
                shift: TorusPoint::from_fractions(&[(1, 4)]).unwrap(),
            },
        ])
    }

    #[test]
    fn self_translation_negates() {
        let x = TorusPoint::from_fractions(&[(3, 8)]).unwrap();
        let t = ModifierMap::SelfTranslation.effective_translation(&x).unwrap();
        assert_eq!(t, x.wrapping_neg());
    }

    #[test]
    fn linear_zero_is_identity() {
        let x = TorusPoint::from_fractions(&[(3, 8), (1, 4)]).unwrap();
        let m = ModifierMap::identity(2);
        let t = m.effective_translation(&x).unwrap();
        assert_eq!(t, TorusPoint::zero(2));
        let phi = FourierObservable::cosine(2, vec![1, 0]).unwrap();
        let (eff, offset) = m.effective_observable(&x, &phi).unwrap();
        assert_eq!(offset, 0.0);
        assert_eq!(eff.coeff(&[1, 0]), phi.coeff(&[1, 0]));
    }

    #[test]
    fn partition_lookup() {
        let m = half_partition();
        m.validate(1).unwrap();
        let x = TorusPoint::from_fractions(&[(7, 10)]).unwrap();
        let t = m.effective_translation(&x).unwrap();
        assert_relative_eq!(t.coord_f64(0), 0.25);
    }

    #[test]
    fn partition_weights_are_atoms() {
        let m = half_partition();
        let grid = ParameterGrid::new(1, 16);
        let pw = m
            .pushforward_weights(&grid, HistogramSampling::default())
            .unwrap();
        assert_eq!(pw.points.len(), 2);
        assert_relative_eq!(pw.weights[0], 0.5);
        assert_relative_eq!(pw.weights[1], 0.5);
        assert_relative_eq!(pw.total_mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn partition_must_tile() {
        let m = ModifierMap::Partition(vec![PartitionCell {
            region: BoxRegion::new(&[(0.0, 0.5)]).unwrap(),
            shift: TorusPoint::zero(1),
        }]);
        assert!(matches!(
            m.validate(1),
            Err(ModifierError::PartitionMassDefect { .. })
        ));
        let m = ModifierMap::Partition(vec![
            PartitionCell {
                region: BoxRegion::new(&[(0.0, 0.6)]).unwrap(),
                shift: TorusPoint::zero(1),
            },
            PartitionCell {
                region: BoxRegion::new(&[(0.4, 0.8)]).unwrap(),
                shift: TorusPoint::zero(1),
            },
        ]);
        assert!(matches!(m.validate(1), Err(ModifierError::PartitionOverlap)));
    }

    #[test]
    fn linear_invertible_pushforward_uniform() {
        let m = ModifierMap::Linear(IntMatrix::identity(2));
        let grid = ParameterGrid::new(2, 4);
        let pw = m
            .pushforward_weights(&grid, HistogramSampling::default())
            .unwrap();
        assert_eq!(pw.points.len(), 16);
        for w in &pw.weights {
            assert_relative_eq!(*w, 1.0 / 16.0);
        }
    }

    #[test]
    fn linear_zero_pushforward_dirac() {
        let m = ModifierMap::identity(1);
        let grid = ParameterGrid::new(1, 8);
        let pw = m
            .pushforward_weights(&grid, HistogramSampling::default())
            .unwrap();
        assert_eq!(pw.points.len(), 1);
        assert_eq!(pw.points[0], TorusPoint::zero(1));
        assert_relative_eq!(pw.weights[0], 1.0);
    }

    #[test]
    fn tabulated_holder_checked_at_load() {
        // periodic triangle-wave table passes (adjacency wraps around the torus)
        let grid = 16usize;
        let vectors: Vec<TorusPoint> = (0..grid)
            .map(|i| TorusPoint::from_f64s(&[0.02 * i.min(grid - i) as f64 / 8.0]))
            .collect();
        assert!(TabulatedMap::new(1, grid, vectors.clone(), 1.0, 1.0).is_ok());
        // jumpy table at tight modulus fails
        let mut jumpy = vectors;
        jumpy[7] = TorusPoint::from_f64s(&[0.6]);
        assert!(matches!(
            TabulatedMap::new(1, grid, jumpy, 1.0, 1.0),
            Err(ModifierError::HolderViolation { .. })
        ));
    }

    #[test]
    fn tabulated_lookup_uses_cell_lower_corner() {
        let grid = 4;
        let vectors: Vec<TorusPoint> = (0..grid)
            .map(|i| TorusPoint::from_f64s(&[i as f64 / 16.0]))
            .collect();
        let t = TabulatedMap::new(1, grid, vectors, 2.0, 1.0).unwrap();
        let x = TorusPoint::from_fractions(&[(5, 8)]).unwrap(); // cell 2 of 4
        assert_relative_eq!(t.vector_at(&x).coord_f64(0), 2.0 / 16.0);
    }

    #[test]
    fn histogram_pushforward_recovers_atoms() {
        // tabulated map constant 1/4 on upper half, 0 on lower half
        let grid = 8;
        let vectors: Vec<TorusPoint> = (0..grid)
            .map(|i| {
                if i < grid / 2 {
                    TorusPoint::zero(1)
                } else {
                    TorusPoint::from_fractions(&[(1, 4)]).unwrap()
                }
            })
            .collect();
        let t = ModifierMap::Tabulated(TabulatedMap::new(1, grid, vectors, 4.0, 1.0).unwrap());
        let pgrid = ParameterGrid::new(1, 8);
        let pw = t
            .pushforward_weights(
                &pgrid,
                HistogramSampling {
                    samples: 20_000,
                    seed: 5,
                },
            )
            .unwrap();
        assert_relative_eq!(pw.total_mass(), 1.0, epsilon = 1e-12);
        // mass concentrates in cells 0 (shift 0) and 2 (shift 1/4)
        assert!((pw.weights[0] - 0.5).abs() < 0.02);
        assert!((pw.weights[2] - 0.5).abs() < 0.02);
    }
}
