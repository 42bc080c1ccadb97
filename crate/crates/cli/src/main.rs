use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use corrsynth::pipeline::{
    run_enforce, run_pipeline, summarize, write_json, EnforceOptions, PipelineOptions, StatsSummary,
    TargetsSource,
};
use corrsynth::{
    ar1_correlation, make_test_dataset, naive_sample, read_csv, write_csv, CsvSchema, Error,
    ErrorClass, SamplerConfig, SamplerMode, DEFAULT_REL_TOL,
};

#[derive(Parser)]
#[command(name = "corrsynth", version, about = "Correct synthetic tables so their correlations match an original")]
struct Cli {
    #[command(flatten)]
    csv: CsvArgs,
    /// Suppress the per-stage log lines on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CsvArgs {
    /// Comma-separated column names to read, in this order.
    #[arg(long, global = true, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    /// Single-character field delimiter.
    #[arg(long, global = true, default_value = ",")]
    delimiter: char,
    /// Input files have no header row (columns are named c1, c2, ...).
    #[arg(long, global = true)]
    no_header: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Per-feature means, variances and the Pearson correlation matrix.
    Stats {
        input: PathBuf,
        /// Also write the summary as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Skip the correlation matrix (allows constant columns).
        #[arg(long)]
        no_correlation: bool,
    },
    /// Resample each column independently.
    Sample {
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "bootstrap")]
        mode: SamplerMode,
        /// Output row count; defaults to the input's.
        #[arg(long)]
        rows: Option<usize>,
    },
    /// Move a synthetic table onto the original's correlations.
    Enforce {
        original: PathBuf,
        synthetic: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        /// Fidelity report (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
        /// `original`, `synthetic`, or a CSV file with name,mean,variance rows.
        #[arg(long, default_value = "original")]
        targets: TargetsSource,
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        rel_tol: f64,
    },
    /// Sample, enforce and report in one run, writing S, S_hat, O_hat and three reports.
    Pipeline {
        original: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "bootstrap")]
        mode: SamplerMode,
        #[arg(long)]
        rows: Option<usize>,
        /// Targets for S_hat. The default keeps the synthetic table's own moments.
        #[arg(long, default_value = "synthetic")]
        targets: TargetsSource,
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        rel_tol: f64,
        /// Also write per-feature ECDF grids as CSV.
        #[arg(long)]
        ecdf_csv: bool,
    },
    /// Write a Gaussian test table with banded correlation rho^|i-j|.
    Generate {
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        rows: usize,
        #[arg(long, default_value_t = 5)]
        cols: usize,
        #[arg(long, default_value_t = 0.7)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

impl CsvArgs {
    fn schema(&self) -> corrsynth::Result<CsvSchema> {
        if !self.delimiter.is_ascii() {
            return Err(Error::InvalidConfig(format!("delimiter `{}` is not a single byte", self.delimiter)));
        }
        Ok(CsvSchema {
            delimiter: self.delimiter as u8,
            has_header: !self.no_header,
            ..CsvSchema::default()
        }
        .with_columns(self.columns.clone()))
    }
}

fn print_summary(s: &StatsSummary) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "n = {}", s.n)?;
    writeln!(out, "{:<16} {:>24} {:>24}", "feature", "mean", "variance")?;
    for (j, name) in s.names.iter().enumerate() {
        writeln!(out, "{:<16} {:>24} {:>24}", name, s.stats.means[j], s.stats.variances[j])?;
    }
    if let Some(c) = &s.correlation {
        writeln!(out, "pearson correlation:")?;
        for (name, row) in c.names.iter().zip(&c.values) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>9.6}")).collect();
            writeln!(out, "{:<16} {}", name, cells.join(" "))?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> corrsynth::Result<()> {
    let schema = cli.csv.schema()?;
    match cli.command {
        Command::Stats { input, json, no_correlation } => {
            let f = read_csv(&input, &schema)?;
            log::info!("read {}: n = {}, m = {}", input.display(), f.nrows(), f.ncols());
            let summary = summarize(&f, !no_correlation)?;
            print_summary(&summary)?;
            if let Some(path) = json {
                write_json(&summary, &path)?;
                log::info!("wrote {}", path.display());
            }
        }
        Command::Sample { input, output, seed, mode, rows } => {
            let f = read_csv(&input, &schema)?;
            log::info!("read {}: n = {}, m = {}", input.display(), f.nrows(), f.ncols());
            let cfg = SamplerConfig { mode, rows: rows.unwrap_or(f.nrows()), seed };
            let s = naive_sample(&f, &cfg)?;
            write_csv(&s, &output, &schema)?;
            log::info!("wrote {} rows to {}", s.nrows(), output.display());
        }
        Command::Enforce { original, synthetic, output, report, targets, rel_tol } => {
            let opts = EnforceOptions { targets, rel_tol, ..EnforceOptions::default() };
            run_enforce(&original, &synthetic, &output, report.as_deref(), &schema, &opts)?;
            log::info!("wrote {}", output.display());
        }
        Command::Pipeline { original, output_dir, seed, mode, rows, targets, rel_tol, ecdf_csv } => {
            let opts = PipelineOptions {
                seed,
                mode,
                rows,
                targets,
                rel_tol,
                ecdf_csv,
                ..PipelineOptions::default()
            };
            run_pipeline(&original, &output_dir, &schema, &opts)?;
        }
        Command::Generate { output, rows, cols, rho, seed } => {
            let f = make_test_dataset(rows, cols, &ar1_correlation(cols, rho)?, seed)?;
            write_csv(&f, &output, &schema)?;
            log::info!("wrote {rows} x {cols} table to {}", output.display());
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Validation => 2,
        ErrorClass::Numeric => 3,
        ErrorClass::Io => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.quiet { log::LevelFilter::Warn } else { log::LevelFilter::Info })
        .format(|buf, record| writeln!(buf, "corrsynth: {}", record.args()))
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(exit_code(&e))
        }
    }
}
