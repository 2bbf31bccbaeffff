//! JSON experiment configuration.
//!
//! One structured document describes a full experiment: system, observable,
//! modifier, sizes, seeds, optional conditioning, optional assertion
//! thresholds. The loader validates everything (conjugate symmetry,
//! ergodicity, partition tiling, Holder modulus) and converts into the
//! strongly-typed domain objects; all diagnostics carry enough context to
//! fix the config.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    DynamicsError, IntMatrix, LacunarySequence, System, ToralPrecision, TorusPoint,
};
use crate::modifiers::{
    BoxRegion, ModifierError, ModifierMap, PartitionCell, TabulatedMap,
};
use crate::montecarlo::{Conditioning, Constraint, ExperimentSpec, MonteCarloError};
use crate::observables::{FourierObservable, ObservableError, TrigPolynomial};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error(transparent)]
    Modifier(#[from] ModifierError),
    #[error(transparent)]
    MonteCarlo(#[from] MonteCarloError),
}

/// Top-level experiment configuration (JSON).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub system: SystemConfig,
    /// Coefficient entries of the observable; the conjugate mirror of each
    /// entry is auto-completed.
    pub observable: Vec<CoeffEntry>,
    #[serde(default = "default_theta")]
    pub theta: ThetaConfig,
    #[serde(default = "default_n")]
    pub n: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// First orbit index entering the sums (0 or 1).
    #[serde(default = "default_k_start")]
    pub k_start: usize,
    /// Per-axis resolution of variance-profile grids.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Evaluation points of characteristic functions.
    #[serde(default = "default_t_values")]
    pub t_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<ConditioningConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decorrelation: Option<DecorrelationConfig>,
    /// Assertion thresholds checked by `simulate --assert`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
    #[serde(default)]
    pub output: OutputConfig,
    /// Worker cap; 0 = library default.
    #[serde(default)]
    pub threads: usize,
}

fn default_theta() -> ThetaConfig {
    ThetaConfig::Name("identity".into())
}
fn default_n() -> Vec<usize> {
    vec![256, 1024, 4096]
}
fn default_samples() -> usize {
    200_000
}
fn default_k_start() -> usize {
    1
}
fn default_grid() -> usize {
    1024
}
fn default_t_values() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SystemConfig {
    Doubling,
    Lacunary {
        sequence: SequenceConfig,
    },
    Toral {
        matrix: Vec<Vec<i64>>,
        #[serde(default = "default_precision")]
        precision: u32,
    },
}

fn default_precision() -> u32 {
    64
}

/// `"2^k"`, `"2^k-1"`, or an explicit list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SequenceConfig {
    Named(String),
    Explicit(Vec<u64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub p: Vec<i64>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Modifier variants:
/// `"self-translation"`, `"identity"`, `{"linear": [[..]]}`,
/// `{"partition": [{"box": [[lo,hi],..], "shift": [..]}, ..]}`,
/// `{"table": "path.json"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaConfig {
    Name(String),
    Linear { linear: Vec<Vec<i64>> },
    Partition { partition: Vec<PartitionEntry> },
    Table { table: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionEntry {
    #[serde(rename = "box")]
    pub region: Vec<[f64; 2]>,
    pub shift: Vec<f64>,
}

/// On-disk format of a tabulated modifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableFile {
    pub dim: usize,
    pub grid: usize,
    pub holder_constant: f64,
    pub holder_exponent: f64,
    /// Row-major translation vectors over the `grid^dim` cells.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditioningConfig {
    /// Axis-aligned box, one `[lo, hi]` pair per coordinate.
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub region: Option<Vec<[f64; 2]>>,
    /// Density `1 + (these coefficients)`, rejected if negative.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<CoeffEntry>>,
    /// The fixed translation applied to the observable in the conditioned
    /// run.
    #[serde(default)]
    pub translate: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecorrelationConfig {
    #[serde(default = "default_lags")]
    pub lags: usize,
    #[serde(default = "default_decorr_samples")]
    pub samples: usize,
    /// Density coefficients for the transfer-operator decay report
    /// (`1 + ...`); when present the decay of `||P^l rho - 1||_1` is
    /// reported alongside the covariance column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<CoeffEntry>>,
}

fn default_lags() -> usize {
    16
}
fn default_decorr_samples() -> usize {
    20_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Thresholds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charfn_max_err: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_moment_rel_err: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    /// Emit the raw sample column (little-endian f64) alongside summaries.
    #[serde(default)]
    pub raw_samples: bool,
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Canonical bytes for hashing; field order is fixed by the struct.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("config serializes")
    }

    pub fn build_system(&self) -> Result<System, ConfigError> {
        let system = match &self.system {
            SystemConfig::Doubling => System::Doubling,
            SystemConfig::Lacunary { sequence } => System::Lacunary(match sequence {
                SequenceConfig::Named(name) => match name.as_str() {
                    "2^k" => LacunarySequence::PowersOfTwo,
                    "2^k-1" => LacunarySequence::PowersOfTwoMinusOne,
                    other => {
                        return Err(ConfigError::Invalid(format!(
                            "unknown sequence {other:?}; use \"2^k\", \"2^k-1\" or a list"
                        )))
                    }
                },
                SequenceConfig::Explicit(terms) => LacunarySequence::explicit_u64(terms)?,
            }),
            SystemConfig::Toral { matrix, precision } => {
                let m = IntMatrix::new(matrix.clone())?;
                let check = m.check_ergodic()?;
                if !check.ergodic {
                    return Err(ConfigError::Invalid(format!(
                        "matrix {:?} is not ergodic: {}",
                        matrix,
                        check.failure.expect("failure present")
                    )));
                }
                let precision = match precision {
                    64 => ToralPrecision::W64,
                    128 => ToralPrecision::W128,
                    other => {
                        return Err(ConfigError::Invalid(format!(
                            "precision must be 64 or 128, got {other}"
                        )))
                    }
                };
                System::Toral {
                    matrix: m,
                    precision,
                }
            }
        };
        system.validate()?;
        Ok(system)
    }

    pub fn build_observable(&self) -> Result<FourierObservable, ConfigError> {
        let dim = self.dim();
        Ok(FourierObservable::from_coeffs(
            dim,
            self.observable
                .iter()
                .map(|e| (e.p.clone(), Complex64::new(e.re, e.im))),
        )?)
    }

    /// A density `1 + (these coefficients)` as a trigonometric polynomial.
    pub fn build_density(dim: usize, entries: &[CoeffEntry]) -> Result<TrigPolynomial, ConfigError> {
        Ok(TrigPolynomial::new(
            1.0,
            FourierObservable::from_coeffs(
                dim,
                entries
                    .iter()
                    .map(|e| (e.p.clone(), Complex64::new(e.re, e.im))),
            )?,
        ))
    }

    pub fn dim(&self) -> usize {
        match &self.system {
            SystemConfig::Doubling | SystemConfig::Lacunary { .. } => 1,
            SystemConfig::Toral { matrix, .. } => matrix.len(),
        }
    }

    pub fn build_modifier(&self, config_dir: &Path) -> Result<ModifierMap, ConfigError> {
        let dim = self.dim();
        let modifier = match &self.theta {
            ThetaConfig::Name(name) => match name.as_str() {
                "self-translation" => ModifierMap::SelfTranslation,
                "identity" => ModifierMap::identity(dim),
                other => {
                    return Err(ConfigError::Invalid(format!(
                        "unknown theta {other:?}; use \"self-translation\", \"identity\", \
                         {{\"linear\": ..}}, {{\"partition\": ..}} or {{\"table\": ..}}"
                    )))
                }
            },
            ThetaConfig::Linear { linear } => ModifierMap::Linear(IntMatrix::new(linear.clone())?),
            ThetaConfig::Partition { partition } => {
                let cells = partition
                    .iter()
                    .map(|entry| {
                        let bounds: Vec<(f64, f64)> =
                            entry.region.iter().map(|&[lo, hi]| (lo, hi)).collect();
                        Ok(PartitionCell {
                            region: BoxRegion::new(&bounds)?,
                            shift: TorusPoint::from_f64s(&entry.shift),
                        })
                    })
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                ModifierMap::Partition(cells)
            }
            ThetaConfig::Table { table } => {
                let path = config_dir.join(table);
                let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                let file: TableFile = serde_json::from_str(&text)?;
                let vectors = file
                    .values
                    .iter()
                    .map(|v| TorusPoint::from_f64s(v))
                    .collect();
                ModifierMap::Tabulated(TabulatedMap::new(
                    file.dim,
                    file.grid,
                    vectors,
                    file.holder_constant,
                    file.holder_exponent,
                )?)
            }
        };
        modifier.validate(dim)?;
        Ok(modifier)
    }

    pub fn build_spec(&self, config_dir: &Path) -> Result<ExperimentSpec, ConfigError> {
        let spec = ExperimentSpec {
            system: self.build_system()?,
            observable: self.build_observable()?,
            modifier: self.build_modifier(config_dir)?,
            n_values: self.n.clone(),
            samples: self.samples,
            seed: self.seed,
            k_start: self.k_start,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn build_conditioning(&self) -> Result<Option<Conditioning>, ConfigError> {
        let Some(cond) = &self.conditioning else {
            return Ok(None);
        };
        let dim = self.dim();
        let constraint = match (&cond.region, &cond.density) {
            (Some(bounds), None) => {
                let pairs: Vec<(f64, f64)> = bounds.iter().map(|&[lo, hi]| (lo, hi)).collect();
                Constraint::Region(BoxRegion::new(&pairs)?)
            }
            (None, Some(entries)) => Constraint::Density(Self::build_density(dim, entries)?),
            _ => {
                return Err(ConfigError::Invalid(
                    "conditioning needs exactly one of \"box\" or \"density\"".into(),
                ))
            }
        };
        let translate = if cond.translate.is_empty() {
            TorusPoint::zero(dim)
        } else {
            TorusPoint::from_f64s(&cond.translate)
        };
        Ok(Some(Conditioning {
            constraint,
            translate,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EF_JSON: &str = r#"{
        "system": {"type": "doubling"},
        "observable": [
            {"p": [1], "re": 0.5},
            {"p": [2], "re": 0.5}
        ],
        "theta": "self-translation",
        "n": [256, 4096],
        "samples": 1000,
        "seed": 7
    }"#;

    #[test]
    fn parses_ef_config() {
        let cfg = Config::from_str(EF_JSON).unwrap();
        let spec = cfg.build_spec(Path::new(".")).unwrap();
        assert_eq!(spec.k_start, 1);
        assert_eq!(spec.observable.coeff(&[1]).re, 0.5);
        assert_eq!(spec.observable.coeff(&[-2]).re, 0.5);
        assert!(matches!(spec.system, System::Doubling));
    }

    #[test]
    fn rejects_non_ergodic_matrix_with_diagnosis() {
        let json = r#"{
            "system": {"type": "toral", "matrix": [[0, -1], [1, 0]]},
            "observable": [{"p": [1, 0], "re": 0.5}]
        }"#;
        let cfg = Config::from_str(json).unwrap();
        let err = cfg.build_system().unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("root of unity"), "message: {msg}");
    }

    #[test]
    fn rejects_zero_frequency() {
        let json = r#"{
            "system": {"type": "doubling"},
            "observable": [{"p": [0], "re": 1.0}]
        }"#;
        let cfg = Config::from_str(json).unwrap();
        assert!(cfg.build_observable().is_err());
    }

    #[test]
    fn parses_partition_theta() {
        let json = r#"{
            "system": {"type": "toral", "matrix": [[2, 1], [1, 1]]},
            "observable": [{"p": [1, 0], "re": 0.5}],
            "theta": {"partition": [
                {"box": [[0.0, 0.5], [0.0, 1.0]], "shift": [0.0, 0.0]},
                {"box": [[0.5, 1.0], [0.0, 1.0]], "shift": [0.25, 0.25]}
            ]}
        }"#;
        let cfg = Config::from_str(json).unwrap();
        let modifier = cfg.build_modifier(Path::new(".")).unwrap();
        assert!(matches!(modifier, ModifierMap::Partition(_)));
    }

    #[test]
    fn parses_lacunary_variants() {
        for (seq, expect) in [
            ("\"2^k\"", LacunarySequence::PowersOfTwo),
            ("\"2^k-1\"", LacunarySequence::PowersOfTwoMinusOne),
        ] {
            let json = format!(
                r#"{{"system": {{"type": "lacunary", "sequence": {seq}}},
                     "observable": [{{"p": [1], "re": 0.5}}]}}"#
            );
            let cfg = Config::from_str(&json).unwrap();
            match cfg.build_system().unwrap() {
                System::Lacunary(s) => assert_eq!(s, expect),
                other => panic!("unexpected system {other:?}"),
            }
        }
        let json = r#"{"system": {"type": "lacunary", "sequence": [1, 3, 7, 12]},
                       "observable": [{"p": [1], "re": 0.5}]}"#;
        let cfg = Config::from_str(json).unwrap();
        assert!(matches!(
            cfg.build_system().unwrap(),
            System::Lacunary(LacunarySequence::Explicit(_))
        ));
    }

    #[test]
    fn conditioning_requires_one_constraint() {
        let json = r#"{
            "system": {"type": "doubling"},
            "observable": [{"p": [1], "re": 0.5}],
            "conditioning": {"translate": [0.0]}
        }"#;
        let cfg = Config::from_str(json).unwrap();
        assert!(cfg.build_conditioning().is_err());
    }

    #[test]
    fn canonical_bytes_are_stable() {
        let cfg = Config::from_str(EF_JSON).unwrap();
        assert_eq!(cfg.canonical_bytes(), cfg.canonical_bytes());
    }
}
