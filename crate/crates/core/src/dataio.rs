//! CSV reading and writing for feature tables.
//!
//! Reads make two streaming passes: one to count records, one to parse into a
//! buffer allocated once at its final size. Writes use the shortest decimal
//! that round-trips (`ryu`), go to a temporary file next to the destination,
//! and are renamed into place only after a successful flush.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MissingPolicy {
    /// Any empty, unparseable or non-finite cell aborts the read.
    #[default]
    Error,
    /// Rows with such cells in a selected column are skipped.
    DropRow,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvSchema {
    pub delimiter: u8,
    pub has_header: bool,
    pub selected_columns: Option<Vec<String>>,
    pub missing_policy: MissingPolicy,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: true,
            selected_columns: None,
            missing_policy: MissingPolicy::Error,
        }
    }
}

impl CsvSchema {
    pub fn with_columns(mut self, columns: Option<Vec<String>>) -> Self {
        self.selected_columns = columns;
        self
    }
}

fn reader(path: &Path, schema: &CsvSchema) -> Result<csv::Reader<File>> {
    let file = File::open(path)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Headerless files get positional names `c1..cw`.
fn positional_names(width: usize) -> Vec<String> {
    (1..=width).map(|j| format!("c{j}")).collect()
}

fn parse_cell(raw: &[u8]) -> std::result::Result<f64, String> {
    let text = std::str::from_utf8(raw).map_err(|_| "cell is not valid UTF-8".to_string())?;
    if text.is_empty() {
        return Err("empty cell".into());
    }
    let value: f64 = text.parse().map_err(|_| format!("cannot parse `{text}` as a number"))?;
    if !value.is_finite() {
        return Err(format!("non-finite value `{text}`"));
    }
    Ok(value)
}

pub fn read_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let mut rdr = reader(path, schema)?;
    let mut record = csv::ByteRecord::new();

    let file_names: Vec<String> = if schema.has_header {
        rdr.headers()?.iter().map(str::to_owned).collect()
    } else {
        let mut peek = reader(path, schema)?;
        if !peek.read_byte_record(&mut record)? {
            return Err(Error::InvalidInput(format!("{} has no rows", path.display())));
        }
        positional_names(record.len())
    };
    let width = file_names.len();

    let (indices, names): (Vec<usize>, Vec<String>) = match &schema.selected_columns {
        Some(selected) => {
            let mut seen = HashSet::new();
            let mut out = (Vec::new(), Vec::new());
            for name in selected {
                if !seen.insert(name) {
                    return Err(Error::InvalidInput(format!("column `{name}` selected twice")));
                }
                let j = file_names
                    .iter()
                    .position(|f| f == name)
                    .ok_or_else(|| Error::MissingColumn(name.clone()))?;
                out.0.push(j);
                out.1.push(name.clone());
            }
            out
        }
        None => ((0..width).collect(), file_names.clone()),
    };
    let m = names.len();
    if m == 0 {
        return Err(Error::InvalidInput("no columns to read".into()));
    }

    let mut capacity = 0usize;
    while rdr.read_byte_record(&mut record)? {
        capacity += 1;
    }

    let mut rdr = reader(path, schema)?;
    let mut data = vec![0.0f64; capacity * m];
    let mut rows = 0usize;
    let mut line = 0u64;
    while rdr.read_byte_record(&mut record)? {
        line += 1;
        if record.len() != width {
            return Err(Error::ParseError {
                row: line,
                column: String::from("*"),
                message: format!("ragged row: expected {width} fields, found {}", record.len()),
            });
        }
        if rows == capacity {
            return Err(Error::Io(io::Error::other(format!(
                "{} grew while being read",
                path.display()
            ))));
        }
        let mut keep = true;
        for (k, &j) in indices.iter().enumerate() {
            match parse_cell(&record[j]) {
                Ok(v) => data[k * capacity + rows] = v,
                Err(message) => match schema.missing_policy {
                    MissingPolicy::Error => {
                        return Err(Error::ParseError {
                            row: line,
                            column: names[k].clone(),
                            message,
                        })
                    }
                    MissingPolicy::DropRow => {
                        keep = false;
                        break;
                    }
                },
            }
        }
        if keep {
            rows += 1;
        }
    }
    if rows < capacity {
        for k in 1..m {
            data.copy_within(k * capacity..k * capacity + rows, k * rows);
        }
        data.truncate(rows * m);
    }
    FeatureMatrix::new(DMatrix::from_vec(rows, m, data), names)
}

/// Writes `path` through a sibling temporary file that is renamed on success,
/// so a failed write never leaves a truncated destination behind.
pub fn write_atomically<F>(path: impl AsRef<Path>, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut out = BufWriter::new(tmp.as_file());
        fill(&mut out)?;
        out.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Header of names, then one LF-terminated row per observation.
pub fn write_csv(f: &FeatureMatrix, path: impl AsRef<Path>, schema: &CsvSchema) -> Result<()> {
    write_atomically(path, |out| write_csv_to(f, out, schema))
}

pub fn write_csv_to(f: &FeatureMatrix, out: &mut dyn Write, schema: &CsvSchema) -> Result<()> {
    write_table_to(f.values(), f.names(), out, schema)
}

/// Writes a raw table that need not satisfy the `FeatureMatrix` shape rules.
pub fn write_table_to(
    values: &DMatrix<f64>,
    names: &[String],
    out: &mut dyn Write,
    schema: &CsvSchema,
) -> Result<()> {
    if values.ncols() == 0 || names.is_empty() {
        return Err(Error::InvalidInput("cannot write a table without columns".into()));
    }
    if names.len() != values.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{} names for {} columns",
            names.len(),
            values.ncols()
        )));
    }
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(schema.delimiter)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    wtr.write_record(names)?;
    let mut buf = ryu::Buffer::new();
    for i in 0..values.nrows() {
        for j in 0..values.ncols() {
            let v = values[(i, j)];
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite value at ({i}, {j})")));
            }
            wtr.write_field(buf.format_finite(v))?;
        }
        wtr.write_record(None::<&[u8]>)?;
    }
    wtr.flush()?;
    Ok(())
}
