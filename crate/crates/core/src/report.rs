//! Fidelity reports: correlation agreement plus per-feature marginal drift.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataio::write_atomically;
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::procrustes::frobenius_gap;
use crate::stats::{pearson_correlation, CorrelationKind, CorrelationMatrix, FeatureStats};

pub const DEFAULT_ECDF_POINTS: usize = 256;

/// Row-major correlation matrix with its feature names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub kind: CorrelationKind,
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl From<&CorrelationMatrix> for CorrelationTable {
    fn from(c: &CorrelationMatrix) -> Self {
        Self {
            kind: c.kind,
            names: c.names.clone(),
            values: c.rows(),
        }
    }
}

impl CorrelationTable {
    pub fn max_abs_diff(&self, other: &CorrelationTable) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// One ECDF sample: `(x, F_orig(x), F_cand(x))`, serialized as a 3-array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcdfPoint(pub f64, pub f64, pub f64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureFidelity {
    pub name: String,
    pub mean_orig: f64,
    pub mean_cand: f64,
    pub var_orig: f64,
    pub var_cand: f64,
    pub ks_distance: f64,
    pub ecdf_grid: Vec<EcdfPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub corr_original: CorrelationTable,
    pub corr_candidate: CorrelationTable,
    pub corr_max_abs_error: f64,
    pub corr_frobenius_error: f64,
    pub features: Vec<FeatureFidelity>,
    pub frobenius_gap_to_start: Option<f64>,
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Two-sample KS statistic on already sorted inputs.
fn ks_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `sup_x |F_a(x) - F_b(x)|` over the two empirical CDFs.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("KS distance needs two nonempty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("KS distance needs finite samples".into()));
    }
    Ok(ks_sorted(&sorted(a), &sorted(b)))
}

fn ecdf_at(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

/// ECDFs of both samples evaluated at `points` evenly spaced quantiles of the pooled data.
fn ecdf_grid(a: &[f64], b: &[f64], points: usize) -> Vec<EcdfPoint> {
    let mut pooled = Vec::with_capacity(a.len() + b.len());
    pooled.extend_from_slice(a);
    pooled.extend_from_slice(b);
    pooled.sort_unstable_by(f64::total_cmp);
    let last = (pooled.len() - 1) as f64;
    (0..points)
        .map(|k| {
            let q = k as f64 / (points - 1) as f64;
            let x = pooled[(q * last).round() as usize];
            EcdfPoint(x, ecdf_at(a, x), ecdf_at(b, x))
        })
        .collect()
}

/// Compares `candidate` against `original`; `start` adds the Frobenius distance
/// from the candidate back to the table it was derived from.
pub fn build_report(
    original: &FeatureMatrix,
    candidate: &FeatureMatrix,
    start: Option<&FeatureMatrix>,
    ecdf_points: usize,
) -> Result<FidelityReport> {
    if original.names() != candidate.names() {
        return Err(Error::SchemaMismatch(format!(
            "original features [{}] vs candidate features [{}]",
            original.names().join(", "),
            candidate.names().join(", ")
        )));
    }
    if ecdf_points < 2 {
        return Err(Error::InvalidInput(format!("ecdf_points must be >= 2, got {ecdf_points}")));
    }
    let corr_o = pearson_correlation(original)?;
    let corr_c = pearson_correlation(candidate)?;
    let corr_original = CorrelationTable::from(&corr_o);
    let corr_candidate = CorrelationTable::from(&corr_c);
    let corr_max_abs_error = corr_original.max_abs_diff(&corr_candidate);
    let corr_frobenius_error = (&corr_o.entries - &corr_c.entries).norm();

    let stats_o = FeatureStats::compute(original);
    let stats_c = FeatureStats::compute(candidate);
    let features = (0..original.ncols())
        .map(|j| {
            let a = sorted(original.column(j));
            let b = sorted(candidate.column(j));
            FeatureFidelity {
                name: original.names()[j].clone(),
                mean_orig: stats_o.means[j],
                mean_cand: stats_c.means[j],
                var_orig: stats_o.variances[j],
                var_cand: stats_c.variances[j],
                ks_distance: ks_sorted(&a, &b),
                ecdf_grid: ecdf_grid(&a, &b, ecdf_points),
            }
        })
        .collect();

    let frobenius_gap_to_start = start.map(|s| frobenius_gap(candidate, s)).transpose()?;
    Ok(FidelityReport {
        corr_original,
        corr_candidate,
        corr_max_abs_error,
        corr_frobenius_error,
        features,
        frobenius_gap_to_start,
    })
}

impl FidelityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomically(path, |out| {
            serde_json::to_writer_pretty(&mut *out, self)?;
            out.write_all(b"\n")?;
            Ok(())
        })
    }

    /// One `value,F_orig,F_cand` CSV per feature, named `<prefix>ecdf_<feature>.csv`.
    pub fn write_ecdf_csvs(&self, dir: impl AsRef<Path>, prefix: &str) -> Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.features.len());
        let mut buf = ryu::Buffer::new();
        for feature in &self.features {
            let safe: String = feature
                .name
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
                .collect();
            let path = dir.as_ref().join(format!("{prefix}ecdf_{safe}.csv"));
            write_atomically(&path, |out| {
                writeln!(out, "value,F_orig,F_cand")?;
                for p in &feature.ecdf_grid {
                    write!(out, "{},", buf.format_finite(p.0))?;
                    write!(out, "{},", buf.format_finite(p.1))?;
                    writeln!(out, "{}", buf.format_finite(p.2))?;
                }
                Ok(())
            })?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::default_names;

    #[test]
    fn ks_examples() {
        assert_eq!(ks_distance(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_distance(&[1.0, 2.0], &[5.0, 6.0, 7.0]).unwrap(), 1.0);
        assert_eq!(ks_distance(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0]).unwrap(), 0.5);
        assert!(ks_distance(&[], &[1.0]).is_err());
    }

    #[test]
    fn ks_handles_ties() {
        // F_a jumps to 1 at 0, F_b is 0.5 there
        assert_eq!(ks_distance(&[0.0, 0.0], &[0.0, 1.0]).unwrap(), 0.5);
    }

    #[test]
    fn self_report_is_clean() {
        let o = FeatureMatrix::from_columns(
            &[vec![1.0, 4.0, 2.0, 8.0, 5.0], vec![0.0, 1.0, 0.5, -1.0, 2.0]],
            default_names(2),
        )
        .unwrap();
        let r = build_report(&o, &o, Some(&o), 16).unwrap();
        assert_eq!(r.corr_max_abs_error, 0.0);
        assert_eq!(r.frobenius_gap_to_start, Some(0.0));
        assert!(r.features.iter().all(|f| f.ks_distance == 0.0 && f.ecdf_grid.len() == 16));
        let last = r.features[0].ecdf_grid.last().unwrap();
        assert_eq!((last.1, last.2), (1.0, 1.0));
    }

    #[test]
    fn name_mismatch_rejected() {
        let o = FeatureMatrix::from_columns(&[vec![1.0, 2.0, 3.0]], vec!["a".into()]).unwrap();
        let c = FeatureMatrix::from_columns(&[vec![1.0, 2.0, 3.0]], vec!["b".into()]).unwrap();
        assert!(matches!(build_report(&o, &c, None, 8), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn json_keys_and_round_trip() {
        let o = FeatureMatrix::from_columns(
            &[vec![0.1, 0.7, 0.3, 0.9], vec![1.0 / 3.0, 2.0, -0.5, 1e-7]],
            default_names(2),
        )
        .unwrap();
        let c = FeatureMatrix::from_columns(
            &[vec![0.2, 0.6, 0.3, 0.8], vec![1.0, 2.5, -0.5, 0.0]],
            default_names(2),
        )
        .unwrap();
        let r = build_report(&o, &c, None, 4).unwrap();
        let text = r.to_json().unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in [
            "corr_original",
            "corr_candidate",
            "corr_max_abs_error",
            "corr_frobenius_error",
            "features",
            "frobenius_gap_to_start",
        ] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
        assert_eq!(FidelityReport::from_json(&text).unwrap(), r);
    }
}
