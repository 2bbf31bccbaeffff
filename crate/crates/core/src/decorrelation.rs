//! Transfer-operator computations for the doubling map and empirical
//! (multiple) decorrelation estimates.
//!
//! For the doubling map the transfer operator halves frequencies on the
//! coefficient table (`c_p(P rho) = c_{2p}(rho)`, constant term fixed), so a
//! trigonometric density with top frequency below `2^L` reaches equilibrium
//! exactly after `L` steps. Covariances of trigonometric observables reduce
//! to finite frequency-matching sums, giving an exact column against which
//! the Monte Carlo estimates are validated.

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{
    DynamicsError, IntMatrix, System, TorusPoint, UniformStreams,
};
use crate::observables::{
    FourierObservable, Frequency, ObservableError, TrigPolynomial,
};

#[derive(Debug, Error)]
pub enum DecorrelationError {
    #[error("transfer operator acts on the circle (d = 1), got dimension {0}")]
    NotOneDimensional(usize),
    #[error("density is negative (min {min} on the evaluation grid)")]
    NegativeDensity { min: f64 },
    #[error("density must have constant term 1, got {0}")]
    NotNormalized(f64),
    #[error("product order m + m' = {0} exceeds the supported bound 4")]
    ProductOrderTooLarge(usize),
    #[error("frequency relabeling overflowed while composing with the map")]
    FrequencyOverflow,
    #[error("explicit lacunary sequences have no transfer/covariance structure here")]
    UnsupportedSystem,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
}

/// Exponential fit `C * zeta^n` over the lags where the signal clears the
/// noise floor.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub rate: f64,
    pub constant: f64,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
}

/// Lagged magnitudes with uncertainty, an exact column when the structure
/// allows one, and an optional fitted rate.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub lags: Vec<usize>,
    pub estimates: Vec<f64>,
    pub ses: Vec<f64>,
    pub exact: Option<Vec<f64>>,
    pub noise_floor: f64,
    pub fit: Option<DecayFit>,
}

/// Residual threshold above which a fitted rate is withheld.
const FIT_RESIDUAL_MAX: f64 = 0.5;

impl DecayReport {
    fn with_fit(mut self) -> Self {
        let pts: Vec<(f64, f64)> = self
            .lags
            .iter()
            .zip(&self.estimates)
            .filter(|(_, &e)| e.abs() > self.noise_floor)
            .map(|(&l, &e)| (l as f64, e.abs().ln()))
            .collect();
        if pts.len() < 2 {
            return self;
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        if denom <= 0.0 {
            return self;
        }
        let slope = (n * sxy - sx * sy) / denom;
        let intercept = (sy - slope * sx) / n;
        let residual = (pts
            .iter()
            .map(|&(x, y)| (y - slope * x - intercept).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let rate = slope.exp();
        if rate > 0.0 && rate < 1.0 && residual <= FIT_RESIDUAL_MAX {
            self.fit = Some(DecayFit {
                rate,
                constant: intercept.exp(),
                residual,
            });
        }
        self
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.abs()).collect()
    }
}

/// One application of the doubling-map transfer operator, iterated `l` times:
/// keep frequencies divisible by `2^l` and divide them out. Exact.
pub fn transfer_apply(
    rho: &TrigPolynomial,
    l: usize,
) -> Result<TrigPolynomial, DecorrelationError> {
    if rho.dim() != 1 {
        return Err(DecorrelationError::NotOneDimensional(rho.dim()));
    }
    let mut coeffs = Vec::new();
    if l < 64 {
        let step = 1i64 << l;
        for (p, c) in rho.centered.coeffs() {
            if p[0] % step == 0 {
                coeffs.push((vec![p[0] / step], *c));
            }
        }
    }
    Ok(TrigPolynomial::new(
        rho.constant,
        FourierObservable::from_coeffs(1, coeffs)?,
    ))
}

/// Grid used for L1 quadrature of smooth trigonometric polynomials.
const L1_GRID: usize = 1 << 16;

/// `||P^l rho - 1||_1` for `l = 0..=l_max`, by dense-grid quadrature.
///
/// The density must be a normalized nonnegative trigonometric polynomial;
/// for top frequency below `2^L` the value is exactly 0 from `l = L` on.
pub fn transfer_l1_decay(
    rho: &TrigPolynomial,
    l_max: usize,
) -> Result<DecayReport, DecorrelationError> {
    if rho.dim() != 1 {
        return Err(DecorrelationError::NotOneDimensional(rho.dim()));
    }
    if (rho.constant - 1.0).abs() > 1e-12 {
        return Err(DecorrelationError::NotNormalized(rho.constant));
    }
    let min = grid_min(&rho.centered);
    if rho.constant + min < -1e-12 {
        return Err(DecorrelationError::NegativeDensity {
            min: rho.constant + min,
        });
    }
    let mut values = Vec::with_capacity(l_max + 1);
    let mut cur = rho.clone();
    for _ in 0..=l_max {
        values.push(grid_l1(&cur.centered));
        cur = transfer_apply(&cur, 1)?;
    }
    Ok(DecayReport {
        lags: (0..=l_max).collect(),
        estimates: values,
        ses: vec![0.0; l_max + 1],
        exact: None,
        noise_floor: 1e-9,
        fit: None,
    }
    .with_fit())
}

fn grid_l1(obs: &FourierObservable) -> f64 {
    if obs.is_zero() {
        return 0.0;
    }
    (0..L1_GRID)
        .into_par_iter()
        .map(|i| {
            let x = TorusPoint::from_numerator((i as u64) << 48);
            obs.evaluate(&x).expect("dimension 1 checked").abs()
        })
        .sum::<f64>()
        / L1_GRID as f64
}

fn grid_min(obs: &FourierObservable) -> f64 {
    if obs.is_zero() {
        return 0.0;
    }
    (0..L1_GRID)
        .into_par_iter()
        .map(|i| {
            let x = TorusPoint::from_numerator((i as u64) << 48);
            obs.evaluate(&x).expect("dimension 1 checked")
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// How far a frequency must be pushed before it leaves a support ball.
fn doubling_image(p: &Frequency, lag: usize) -> Option<Frequency> {
    let shifted = (p[0] as i128).checked_shl(lag as u32)?;
    i64::try_from(shifted).ok().map(|v| vec![v])
}

fn toral_image(at: &IntMatrix, p: &Frequency, lag: usize) -> Option<Frequency> {
    let mut v: Vec<i128> = p.iter().map(|&f| f as i128).collect();
    for _ in 0..lag {
        v = at.mul_vec_i128(&v)?;
    }
    v.into_iter()
        .map(|c| i64::try_from(c).ok())
        .collect::<Option<Frequency>>()
}

/// Exact covariance `<phi, psi o T^n>` by frequency matching:
/// `sum_p c_{image_n(p)}(phi) conj(c_p(psi))`.
fn exact_covariance(
    system: &System,
    phi: &FourierObservable,
    psi: &FourierObservable,
    lag: usize,
) -> Result<f64, DecorrelationError> {
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for (p, c_psi) in psi.coeffs() {
        let image = match system {
            System::Doubling => doubling_image(p, lag),
            System::Toral { matrix, .. } => toral_image(&matrix.transpose(), p, lag),
            System::Lacunary(_) => return Err(DecorrelationError::UnsupportedSystem),
        };
        if let Some(q) = image {
            acc += phi.coeff(&q) * c_psi.conj();
        }
        // overflowing images are far outside any support: contribute 0
    }
    assert!(acc.im.abs() <= 1e-12 * (1.0 + phi.coeff_abs_sum() * psi.coeff_abs_sum()));
    Ok(acc.re)
}

/// Orbit evaluations of a fixed observable along a single trajectory.
fn orbit_values(
    system: &System,
    obs: &FourierObservable,
    streams: &UniformStreams,
    sample: u64,
    len: usize,
) -> Vec<f64> {
    match system {
        System::Doubling => {
            let mut rng = streams.stream(sample);
            let bits = len + 64;
            let frac = streams.bit_fraction_from(&mut rng, bits);
            frac.windows()
                .take(len)
                .map(|w| {
                    obs.evaluate(&TorusPoint::from_numerator(w))
                        .expect("dimension 1")
                })
                .collect()
        }
        System::Toral { matrix, .. } => {
            let mut rng = streams.stream(sample);
            let mut x = streams.point_from(&mut rng, matrix.dim());
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                out.push(obs.evaluate(&x).expect("dimension checked"));
                x = matrix.apply_point(&x);
            }
            out
        }
        System::Lacunary(_) => unreachable!("rejected before orbit generation"),
    }
}

/// Monte Carlo covariances `<phi, psi o T^n>` for `n <= n_max`, with the
/// exact frequency-matching column alongside.
pub fn covariance_decay(
    system: &System,
    phi: &FourierObservable,
    psi: &FourierObservable,
    n_max: usize,
    samples: usize,
    seed: u64,
) -> Result<DecayReport, DecorrelationError> {
    system.validate()?;
    if matches!(system, System::Lacunary(_)) {
        return Err(DecorrelationError::UnsupportedSystem);
    }
    let streams = UniformStreams::new(seed);
    let len = n_max + 1;
    // accumulate sum and sum of squares of phi(x) psi(T^n x) per lag
    let (sums, squares) = (0..samples as u64)
        .into_par_iter()
        .map(|j| {
            let phis = orbit_values(system, phi, &streams, j, 1);
            let psis = orbit_values(system, psi, &streams, j, len);
            let base = phis[0];
            let prods: Vec<f64> = psis.iter().map(|v| base * v).collect();
            let sq: Vec<f64> = prods.iter().map(|v| v * v).collect();
            (prods, sq)
        })
        .reduce(
            || (vec![0.0; len], vec![0.0; len]),
            |(mut a, mut a2), (b, b2)| {
                for i in 0..len {
                    a[i] += b[i];
                    a2[i] += b2[i];
                }
                (a, a2)
            },
        );
    let m = samples as f64;
    let estimates: Vec<f64> = sums.iter().map(|s| s / m).collect();
    let ses: Vec<f64> = squares
        .iter()
        .zip(&estimates)
        .map(|(&sq, &mean)| ((sq / m - mean * mean).max(0.0) / m).sqrt())
        .collect();
    let exact = (0..len)
        .map(|lag| exact_covariance(system, phi, psi, lag))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(DecayReport {
        lags: (0..len).collect(),
        estimates,
        ses,
        exact: Some(exact),
        noise_floor: 3.0 / m.sqrt(),
        fit: None,
    }
    .with_fit())
}

/// One factor of a decorrelation product: the observable composed with
/// `T^lag`.
#[derive(Debug, Clone)]
pub struct LaggedObservable {
    pub lag: usize,
    pub observable: FourierObservable,
}

/// The composed observable `phi o T^lag` as an exact coefficient relabeling.
fn composed_with_map(
    system: &System,
    obs: &FourierObservable,
    lag: usize,
) -> Result<FourierObservable, DecorrelationError> {
    let coeffs = obs
        .coeffs()
        .iter()
        .map(|(p, c)| {
            let image = match system {
                System::Doubling => doubling_image(p, lag),
                System::Toral { matrix, .. } => toral_image(&matrix.transpose(), p, lag),
                System::Lacunary(_) => None,
            }
            .ok_or(DecorrelationError::FrequencyOverflow)?;
            Ok((image, *c))
        })
        .collect::<Result<Vec<_>, DecorrelationError>>()?;
    Ok(FourierObservable::from_coeffs(obs.dim(), coeffs)?)
}

/// Covariance of two products of lagged observables across a gap schedule:
/// `Cov(prod_i phi_i o T^{l_i}, prod_j psi_j o T^{k_j + N})`.
///
/// Both a Monte Carlo estimate and the exact value by coefficient
/// convolution are reported; for trigonometric observables the exact value
/// is identically 0 once the gap outruns the finite frequency bookkeeping.
pub fn multi_decorrelation_probe(
    system: &System,
    front: &[LaggedObservable],
    back: &[LaggedObservable],
    gaps: &[usize],
    samples: usize,
    seed: u64,
) -> Result<DecayReport, DecorrelationError> {
    system.validate()?;
    if matches!(system, System::Lacunary(_)) {
        return Err(DecorrelationError::UnsupportedSystem);
    }
    if front.len() + back.len() > 4 {
        return Err(DecorrelationError::ProductOrderTooLarge(
            front.len() + back.len(),
        ));
    }
    let streams = UniformStreams::new(seed);
    let max_gap = gaps.iter().copied().max().unwrap_or(0);
    let front_max = front.iter().map(|f| f.lag).max().unwrap_or(0);
    let back_max = back.iter().map(|f| f.lag).max().unwrap_or(0);
    let len = front_max.max(back_max + max_gap) + 1;

    // exact values via coefficient convolution
    let mut exact = Vec::with_capacity(gaps.len());
    for &gap in gaps {
        let mut u = TrigPolynomial::constant_one(system.dim());
        for f in front {
            u = u.mul(&TrigPolynomial::from_observable(composed_with_map(
                system,
                &f.observable,
                f.lag,
            )?))?;
        }
        let mut v = TrigPolynomial::constant_one(system.dim());
        for b in back {
            v = v.mul(&TrigPolynomial::from_observable(composed_with_map(
                system,
                &b.observable,
                b.lag + gap,
            )?))?;
        }
        let joint = u.mul(&v)?;
        exact.push(joint.mean() - u.mean() * v.mean());
    }

    // Monte Carlo along shared orbits: per sample, U and V at every gap
    let per_sample: Vec<(f64, Vec<f64>)> = (0..samples as u64)
        .into_par_iter()
        .map(|j| {
            let orbit: Vec<TorusPoint> = match system {
                System::Doubling => {
                    let mut rng = streams.stream(j);
                    let frac = streams.bit_fraction_from(&mut rng, len + 64);
                    frac.windows()
                        .take(len)
                        .map(TorusPoint::from_numerator)
                        .collect()
                }
                System::Toral { matrix, .. } => {
                    let mut rng = streams.stream(j);
                    let mut x = streams.point_from(&mut rng, matrix.dim());
                    let mut out = Vec::with_capacity(len);
                    for _ in 0..len {
                        out.push(x.clone());
                        x = matrix.apply_point(&x);
                    }
                    out
                }
                System::Lacunary(_) => unreachable!(),
            };
            let eval = |lob: &LaggedObservable, extra: usize| {
                lob.observable
                    .evaluate(&orbit[lob.lag + extra])
                    .expect("orbit length covers all lags")
            };
            let u: f64 = front.iter().map(|f| eval(f, 0)).product();
            let vs: Vec<f64> = gaps
                .iter()
                .map(|&gap| back.iter().map(|b| eval(b, gap)).product::<f64>())
                .collect();
            (u, vs)
        })
        .collect();
    let m = samples as f64;
    let mean_u: f64 = per_sample.iter().map(|(u, _)| u).sum::<f64>() / m;
    let mut estimates = Vec::with_capacity(gaps.len());
    let mut ses = Vec::with_capacity(gaps.len());
    for gi in 0..gaps.len() {
        let mean_v: f64 = per_sample.iter().map(|(_, vs)| vs[gi]).sum::<f64>() / m;
        let mean_uv: f64 = per_sample.iter().map(|(u, vs)| u * vs[gi]).sum::<f64>() / m;
        // variance of the per-sample covariance contribution u*v - E[u]v - u E[v]
        let var: f64 = per_sample
            .iter()
            .map(|(u, vs)| {
                let c = u * vs[gi] - mean_u * vs[gi] - u * mean_v + mean_u * mean_v;
                let centered = c - (mean_uv - mean_u * mean_v);
                centered * centered
            })
            .sum::<f64>()
            / m;
        estimates.push(mean_uv - mean_u * mean_v);
        ses.push((var / m).sqrt());
    }
    Ok(DecayReport {
        lags: gaps.to_vec(),
        estimates,
        ses,
        exact: Some(exact),
        noise_floor: 3.0 / m.sqrt(),
        fit: None,
    }
    .with_fit())
}

/// `||S_n phi||_2 / sqrt(n)` across an n-schedule, with a growth flag when
/// the ratio keeps climbing by more than 20% per doubling over four
/// consecutive doublings.
#[derive(Debug, Clone)]
pub struct SqrtBoundReport {
    pub ns: Vec<usize>,
    pub ratios: Vec<f64>,
    pub ses: Vec<f64>,
    pub growth_flagged: bool,
}

pub fn sqrt_n_bound_check(
    system: &System,
    phi: &FourierObservable,
    ns: &[usize],
    samples: usize,
    seed: u64,
) -> Result<SqrtBoundReport, DecorrelationError> {
    system.validate()?;
    if matches!(system, System::Lacunary(_)) {
        return Err(DecorrelationError::UnsupportedSystem);
    }
    let streams = UniformStreams::new(seed);
    let mut sorted: Vec<usize> = ns.iter().copied().filter(|&n| n > 0).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let n_max = sorted.last().copied().unwrap_or(0);
    // accumulate sum and sum of squares of (S_n)^2 / n per checkpoint
    let (sums, squares) = if phi.is_zero() {
        (vec![0.0; sorted.len()], vec![0.0; sorted.len()])
    } else {
        (0..samples as u64)
            .into_par_iter()
            .fold(
                || (vec![0.0; sorted.len()], vec![0.0; sorted.len()]),
                |(mut s, mut q), j| {
                    let vals = orbit_values(system, phi, &streams, j, n_max);
                    let mut acc = 0.0;
                    let mut ci = 0;
                    for (k, v) in vals.iter().enumerate() {
                        acc += v;
                        if ci < sorted.len() && k + 1 == sorted[ci] {
                            let m2 = acc * acc / sorted[ci] as f64;
                            s[ci] += m2;
                            q[ci] += m2 * m2;
                            ci += 1;
                        }
                    }
                    (s, q)
                },
            )
            .reduce(
                || (vec![0.0; sorted.len()], vec![0.0; sorted.len()]),
                |(mut a, mut a2), (b, b2)| {
                    for i in 0..sorted.len() {
                        a[i] += b[i];
                        a2[i] += b2[i];
                    }
                    (a, a2)
                },
            )
    };
    let m = samples as f64;
    let ratios: Vec<f64> = sums.iter().map(|s| (s / m).sqrt()).collect();
    let ses: Vec<f64> = squares
        .iter()
        .zip(&sums)
        .zip(&ratios)
        .map(|((&sq, &s), &r)| {
            let mean = s / m;
            let se_mean = ((sq / m - mean * mean).max(0.0) / m).sqrt();
            if r > 0.0 {
                se_mean / (2.0 * r)
            } else {
                0.0
            }
        })
        .collect();
    let mut report = SqrtBoundReport {
        ns: sorted,
        ratios,
        ses,
        growth_flagged: false,
    };
    // growth flag: > 20% per doubling over 4 consecutive doublings
    let mut consecutive = 0;
    for w in 0..report.ns.len().saturating_sub(1) {
        if report.ns[w + 1] == 2 * report.ns[w] {
            if report.ratios[w + 1] > 1.2 * report.ratios[w] {
                consecutive += 1;
                if consecutive >= 4 {
                    report.growth_flagged = true;
                }
            } else {
                consecutive = 0;
            }
        } else {
            consecutive = 0;
        }
    }
    Ok(report)
}
