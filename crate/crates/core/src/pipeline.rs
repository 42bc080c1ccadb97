//! File-level workflows shared by the command line and the Python bindings.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::dataio::{read_csv, write_atomically, write_csv, CsvSchema};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::procrustes::{enforce_correlations, Enforcement, StatTargets, DEFAULT_REL_TOL};
use crate::report::{build_report, CorrelationTable, FidelityReport, DEFAULT_ECDF_POINTS};
use crate::sampler::{naive_sample, SamplerConfig, SamplerMode};
use crate::stats::{pearson_correlation, FeatureStats};

/// Where the output means and variances come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetsSource {
    FromOriginal,
    FromSynthetic,
    /// CSV with header `name,mean,variance` and one row per selected column.
    File(PathBuf),
}

impl FromStr for TargetsSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "original" | "from_original" => Self::FromOriginal,
            "synthetic" | "from_synthetic" => Self::FromSynthetic,
            "" => return Err(Error::InvalidConfig("empty --targets value".into())),
            path => Self::File(PathBuf::from(path)),
        })
    }
}

pub fn read_targets_file(path: impl AsRef<Path>, names: &[String]) -> Result<StatTargets> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |key: &str| {
        headers
            .iter()
            .position(|h| h == key)
            .ok_or_else(|| Error::MissingColumn(format!("{key} (in targets file {})", path.display())))
    };
    let (name_col, mean_col, var_col) = (col("name")?, col("mean")?, col("variance")?);
    let mut rows: HashMap<String, (f64, f64)> = HashMap::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let parse = |idx: usize, label: &str| -> Result<f64> {
            let text = record.get(idx).unwrap_or("");
            text.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::ParseError {
                row: line as u64 + 1,
                column: label.to_string(),
                message: format!("cannot parse `{text}` as a finite number"),
            })
        };
        let name = record.get(name_col).unwrap_or("").to_string();
        let pair = (parse(mean_col, "mean")?, parse(var_col, "variance")?);
        if rows.insert(name.clone(), pair).is_some() {
            return Err(Error::InvalidConfig(format!("targets file lists `{name}` twice")));
        }
    }
    if let Some(extra) = rows.keys().find(|k| !names.contains(k)) {
        return Err(Error::InvalidConfig(format!(
            "targets file lists `{extra}`, which is not a selected column"
        )));
    }
    let mut means = Vec::with_capacity(names.len());
    let mut variances = Vec::with_capacity(names.len());
    for name in names {
        let (mu, var) = rows
            .get(name)
            .ok_or_else(|| Error::InvalidConfig(format!("targets file has no row for `{name}`")))?;
        if !(*var > 0.0) {
            return Err(Error::DegenerateTarget(name.clone()));
        }
        means.push(*mu);
        variances.push(*var);
    }
    StatTargets::new(means, variances)
}

pub fn resolve_targets(
    source: &TargetsSource,
    original: &FeatureMatrix,
    synthetic: &FeatureMatrix,
) -> Result<StatTargets> {
    let named = |f: &FeatureMatrix| {
        let stats = FeatureStats::compute(f);
        if let Some(j) = stats.variances.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::DegenerateTarget(f.names()[j].clone()));
        }
        StatTargets::from_stats(&stats)
    };
    match source {
        TargetsSource::FromOriginal => named(original),
        TargetsSource::FromSynthetic => named(synthetic),
        TargetsSource::File(path) => read_targets_file(path, original.names()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StatsSummary {
    pub n: usize,
    pub names: Vec<String>,
    #[serde(flatten)]
    pub stats: FeatureStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationTable>,
}

pub fn summarize(f: &FeatureMatrix, with_correlation: bool) -> Result<StatsSummary> {
    let correlation = if with_correlation {
        Some(CorrelationTable::from(&pearson_correlation(f)?))
    } else {
        None
    };
    Ok(StatsSummary {
        n: f.nrows(),
        names: f.names().to_vec(),
        stats: FeatureStats::compute(f),
        correlation,
    })
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    write_atomically(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        out.write_all(b"\n")?;
        Ok(())
    })
}

#[derive(Clone, Debug)]
pub struct EnforceOptions {
    pub targets: TargetsSource,
    pub rel_tol: f64,
    pub ecdf_points: usize,
}

impl Default for EnforceOptions {
    fn default() -> Self {
        Self {
            targets: TargetsSource::FromOriginal,
            rel_tol: DEFAULT_REL_TOL,
            ecdf_points: DEFAULT_ECDF_POINTS,
        }
    }
}

/// Enforces `Corr(original)` on `synthetic` and reports the result against the original.
pub fn enforce_tables(
    original: &FeatureMatrix,
    synthetic: &FeatureMatrix,
    opts: &EnforceOptions,
) -> Result<(Enforcement, FidelityReport)> {
    let targets = resolve_targets(&opts.targets, original, synthetic)?;
    let enforcement = enforce_correlations(original, synthetic, &targets, opts.rel_tol)?;
    let report = build_report(original, &enforcement.s_hat, Some(synthetic), opts.ecdf_points)?;
    Ok((enforcement, report))
}

/// Reads the synthetic file restricted to the original's columns, in the same order.
fn read_matching(path: &Path, schema: &CsvSchema, original: &FeatureMatrix) -> Result<FeatureMatrix> {
    let schema = schema.clone().with_columns(Some(original.names().to_vec()));
    read_csv(path, &schema)
}

pub fn run_enforce(
    original_path: &Path,
    synthetic_path: &Path,
    output_path: &Path,
    report_path: Option<&Path>,
    schema: &CsvSchema,
    opts: &EnforceOptions,
) -> Result<(Enforcement, FidelityReport)> {
    let original = read_csv(original_path, schema)?;
    log::info!("read original: n = {}, m = {}", original.nrows(), original.ncols());
    let synthetic = read_matching(synthetic_path, schema, &original)?;
    log::info!("read synthetic: p = {}", synthetic.nrows());
    let (enforcement, report) = enforce_tables(&original, &synthetic, opts)?;
    log::info!(
        "enforced: rank {}, max |corr error| = {:e}",
        enforcement.diagnostics.rank,
        report.corr_max_abs_error
    );
    write_csv(&enforcement.s_hat, output_path, schema)?;
    if let Some(path) = report_path {
        report.write_json(path)?;
    }
    Ok((enforcement, report))
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub seed: u64,
    pub mode: SamplerMode,
    /// Defaults to the original row count.
    pub rows: Option<usize>,
    /// Targets for `S_hat`; `O_hat` always uses the original's own moments.
    pub targets: TargetsSource,
    pub rel_tol: f64,
    pub ecdf_points: usize,
    pub ecdf_csv: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            mode: SamplerMode::Bootstrap,
            rows: None,
            targets: TargetsSource::FromSynthetic,
            rel_tol: DEFAULT_REL_TOL,
            ecdf_points: DEFAULT_ECDF_POINTS,
            ecdf_csv: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub original: FeatureMatrix,
    pub synthetic: FeatureMatrix,
    pub s_hat: FeatureMatrix,
    pub o_hat: FeatureMatrix,
    pub report_synthetic: FidelityReport,
    pub report_s_hat: FidelityReport,
    pub report_o_hat: FidelityReport,
    pub files: Vec<PathBuf>,
}

/// Sample `S` from `O`, enforce to get `S_hat` and `O_hat`, and report all three against `O`.
///
/// Writes `synthetic.csv`, `s_hat.csv`, `o_hat.csv` and one
/// `report_<name>.json` per dataset into `output_dir`.
pub fn run_pipeline_on(
    original: FeatureMatrix,
    output_dir: &Path,
    schema: &CsvSchema,
    opts: &PipelineOptions,
) -> Result<PipelineOutcome> {
    std::fs::create_dir_all(output_dir)?;
    let cfg = SamplerConfig {
        mode: opts.mode,
        rows: opts.rows.unwrap_or(original.nrows()),
        seed: opts.seed,
    };
    let synthetic = naive_sample(&original, &cfg)?;
    log::info!("sampled synthetic: p = {}, seed = {}", synthetic.nrows(), opts.seed);

    let enforce = |start: &FeatureMatrix, targets: &TargetsSource| {
        enforce_tables(
            &original,
            start,
            &EnforceOptions {
                targets: targets.clone(),
                rel_tol: opts.rel_tol,
                ecdf_points: opts.ecdf_points,
            },
        )
    };
    let (s_enf, report_s_hat) = enforce(&synthetic, &opts.targets)?;
    log::info!("enforced S_hat: max |corr error| = {:e}", report_s_hat.corr_max_abs_error);
    let (o_enf, report_o_hat) = enforce(&original, &TargetsSource::FromOriginal)?;
    log::info!("enforced O_hat: max |corr error| = {:e}", report_o_hat.corr_max_abs_error);
    let report_synthetic = build_report(&original, &synthetic, None, opts.ecdf_points)?;

    let mut files = Vec::new();
    for (stem, table, report) in [
        ("synthetic", &synthetic, &report_synthetic),
        ("s_hat", &s_enf.s_hat, &report_s_hat),
        ("o_hat", &o_enf.s_hat, &report_o_hat),
    ] {
        let csv_path = output_dir.join(format!("{stem}.csv"));
        write_csv(table, &csv_path, schema)?;
        let json_path = output_dir.join(format!("report_{stem}.json"));
        report.write_json(&json_path)?;
        files.push(csv_path);
        files.push(json_path);
        if opts.ecdf_csv {
            files.extend(report.write_ecdf_csvs(output_dir, &format!("{stem}_"))?);
        }
    }
    log::info!("wrote {} files to {}", files.len(), output_dir.display());

    Ok(PipelineOutcome {
        original,
        synthetic,
        s_hat: s_enf.s_hat,
        o_hat: o_enf.s_hat,
        report_synthetic,
        report_s_hat,
        report_o_hat,
        files,
    })
}

pub fn run_pipeline(
    original_path: &Path,
    output_dir: &Path,
    schema: &CsvSchema,
    opts: &PipelineOptions,
) -> Result<PipelineOutcome> {
    let original = read_csv(original_path, schema)?;
    log::info!("read original: n = {}, m = {}", original.nrows(), original.ncols());
    run_pipeline_on(original, output_dir, schema, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_source_parsing() {
        assert_eq!("original".parse::<TargetsSource>().unwrap(), TargetsSource::FromOriginal);
        assert_eq!("from_synthetic".parse::<TargetsSource>().unwrap(), TargetsSource::FromSynthetic);
        assert_eq!(
            "t.csv".parse::<TargetsSource>().unwrap(),
            TargetsSource::File(PathBuf::from("t.csv"))
        );
    }

    #[test]
    fn targets_file_must_cover_every_column_once() {
        let dir = tempfile::tempdir().unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let p = dir.path().join("t.csv");

        std::fs::write(&p, "name,mean,variance\nb,1,4\na,-2,0.5\n").unwrap();
        let t = read_targets_file(&p, &names).unwrap();
        assert_eq!(t.means(), &[-2.0, 1.0]);
        assert_eq!(t.variances(), &[0.5, 4.0]);

        std::fs::write(&p, "name,mean,variance\na,1,4\n").unwrap();
        assert!(matches!(read_targets_file(&p, &names), Err(Error::InvalidConfig(_))));

        std::fs::write(&p, "name,mean,variance\na,1,4\na,1,4\nb,0,1\n").unwrap();
        assert!(matches!(read_targets_file(&p, &names), Err(Error::InvalidConfig(_))));

        std::fs::write(&p, "name,mean,variance\na,1,4\nb,0,1\nc,0,1\n").unwrap();
        assert!(matches!(read_targets_file(&p, &names), Err(Error::InvalidConfig(_))));

        std::fs::write(&p, "name,mean,variance\na,1,0\nb,0,1\n").unwrap();
        assert!(matches!(read_targets_file(&p, &names), Err(Error::DegenerateTarget(n)) if n == "a"));
    }
}
