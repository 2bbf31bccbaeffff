//! Artifact emission: summary JSON, plot-ready CSV tables, optional raw
//! sample columns, and a manifest digesting every emitted file.
//!
//! Output bytes are a pure function of (config, seed): summaries use
//! fixed-order structs, floats print with the shortest round-trip
//! representation, and sample order is pinned by the per-sample streams, so
//! re-running a manifest's config reproduces the listed digests exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::decorrelation::DecayReport;
use crate::limitlaw::MixtureLaw;
use crate::montecarlo::{CharfnPoint, EmpiricalDistribution};
use crate::variance::{NondegeneracyReport, VarianceProfile};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

/// Writer that tracks every emitted file with a content digest.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Run metadata plus the digest list of all outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<ManifestEntry>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, ReportError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| ReportError::Io {
            path: root.display().to_string(),
            source,
        })?;
        Ok(Self {
            root,
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, ReportError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.files.push(ManifestEntry {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(
        &mut self,
        name: &str,
        value: &T,
    ) -> Result<PathBuf, ReportError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Finish the run: write `manifest.json` listing every other file.
    pub fn finish(
        self,
        config_sha256: String,
        seed: u64,
        wall_clock_seconds: f64,
    ) -> Result<RunManifest, ReportError> {
        let manifest = RunManifest {
            config_sha256,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds,
            outputs: self.files.clone(),
        };
        let bytes = serde_json::to_vec_pretty(&manifest)?;
        let path = self.root.join("manifest.json");
        fs::write(&path, bytes).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(manifest)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Profile rows `y..., weight, sigma2, provenance`.
pub fn profile_csv(profile: &VarianceProfile) -> Vec<u8> {
    let dim = profile.points().first().map_or(1, |p| p.dim());
    let mut out = Vec::new();
    let header: Vec<String> = (0..dim)
        .map(|i| format!("y{i}"))
        .chain(["weight".into(), "sigma2".into(), "provenance".into()])
        .collect();
    writeln!(out, "{}", header.join(",")).expect("vec write");
    for ((point, weight), sigma2) in profile
        .points()
        .iter()
        .zip(profile.weights())
        .zip(profile.sigma2())
    {
        let coords: Vec<String> = point.to_f64s().iter().map(|c| format!("{c}")).collect();
        writeln!(
            out,
            "{},{weight},{sigma2},{}",
            coords.join(","),
            profile.provenance().as_str()
        )
        .expect("vec write");
    }
    out
}

/// Law table `(t, cdf, charfn_re)` on a symmetric t-grid.
pub fn law_csv(law: &MixtureLaw, t_max: f64, points: usize) -> Vec<u8> {
    let mut out = Vec::new();
    writeln!(out, "t,cdf,charfn_re").expect("vec write");
    for i in 0..points {
        let t = -t_max + 2.0 * t_max * i as f64 / (points - 1) as f64;
        writeln!(out, "{t},{},{}", law.cdf(t), law.charfn(t)).expect("vec write");
    }
    out
}

/// Curve table `(t, empirical_cdf, predicted_cdf)` over the sample range.
pub fn cdf_curves_csv(emp: &EmpiricalDistribution, law: &MixtureLaw, points: usize) -> Vec<u8> {
    let lo = emp.values().first().copied().unwrap_or(-1.0);
    let hi = emp.values().last().copied().unwrap_or(1.0);
    let pad = 0.05 * (hi - lo).max(1e-9);
    let (lo, hi) = (lo - pad, hi + pad);
    let mut out = Vec::new();
    writeln!(out, "t,empirical_cdf,predicted_cdf").expect("vec write");
    for i in 0..points {
        let t = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        writeln!(out, "{t},{},{}", emp.cdf(t), law.cdf(t)).expect("vec write");
    }
    out
}

/// Decay table `(lag, estimate, se, exact_if_available)`.
pub fn decay_csv(report: &DecayReport) -> Vec<u8> {
    let mut out = Vec::new();
    writeln!(out, "lag,estimate,se,exact_if_available").expect("vec write");
    for (i, &lag) in report.lags.iter().enumerate() {
        let exact = report
            .exact
            .as_ref()
            .map(|e| format!("{}", e[i]))
            .unwrap_or_default();
        writeln!(out, "{lag},{},{},{exact}", report.estimates[i], report.ses[i])
            .expect("vec write");
    }
    out
}

/// Raw sample column, little-endian f64 (ascending order, the
/// distribution's storage order).
pub fn samples_binary(emp: &EmpiricalDistribution) -> Vec<u8> {
    let mut out = Vec::with_capacity(emp.len() * 8);
    for v in emp.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// One characteristic-function comparison row of a summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharfnRow {
    pub t: f64,
    pub empirical_re: f64,
    pub empirical_im: f64,
    pub se: f64,
    pub predicted_re: f64,
}

pub fn charfn_rows(points: &[CharfnPoint], law: &MixtureLaw) -> Vec<CharfnRow> {
    points
        .iter()
        .map(|p| CharfnRow {
            t: p.t,
            empirical_re: p.re,
            empirical_im: p.im,
            se: p.se,
            predicted_re: law.charfn(p.t),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NondegeneracyRow {
    pub epsilon: f64,
    pub zero_set_weight: f64,
    pub zero_set_count: usize,
    pub degenerate: bool,
}

impl From<&NondegeneracyReport> for NondegeneracyRow {
    fn from(r: &NondegeneracyReport) -> Self {
        Self {
            epsilon: r.epsilon,
            zero_set_weight: r.zero_set_weight,
            zero_set_count: r.zero_set_count,
            degenerate: r.degenerate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::TorusPoint;
    use crate::montecarlo::RunMeta;
    use crate::variance::Provenance;

    fn tiny_profile() -> VarianceProfile {
        VarianceProfile::new(
            vec![
                TorusPoint::zero(1),
                TorusPoint::from_fractions(&[(1, 2)]).unwrap(),
            ],
            vec![0.5, 0.5],
            vec![2.0, 0.0],
            Provenance::ClosedForm,
        )
        .unwrap()
    }

    #[test]
    fn profile_csv_shape() {
        let csv = String::from_utf8(profile_csv(&tiny_profile())).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "y0,weight,sigma2,provenance");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with("closed-form"));
    }

    #[test]
    fn law_csv_monotone_cdf_column() {
        let law = MixtureLaw::from_profile(&tiny_profile());
        let csv = String::from_utf8(law_csv(&law, 6.0, 101)).unwrap();
        let cdfs: Vec<f64> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert!(cdfs.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn samples_binary_roundtrip() {
        let meta = RunMeta {
            system: "t".into(),
            modifier: "m".into(),
            n: 4,
            samples: 3,
            seed: 0,
            k_start: 1,
        };
        let emp = EmpiricalDistribution::from_values(vec![1.5, -0.25, 0.0], meta);
        let bin = samples_binary(&emp);
        assert_eq!(bin.len(), 24);
        let back: Vec<f64> = bin
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(back, vec![-0.25, 0.0, 1.5]);
    }

    #[test]
    fn output_dir_digests_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path().join("run")).unwrap();
        out.write_bytes("a.csv", b"x,y\n1,2\n").unwrap();
        let manifest = out.finish("cfg".into(), 9, 0.5).unwrap();
        assert_eq!(manifest.outputs.len(), 1);
        assert_eq!(manifest.outputs[0].path, "a.csv");
        assert_eq!(manifest.outputs[0].sha256.len(), 64);
        assert!(dir.path().join("run/manifest.json").exists());
    }
}
