//! CSV ingestion, CSV output and atomic file writes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use gamker_core::{EstimateSeries, Sample};
use tempfile::NamedTempFile;

use crate::error::{Error, Result};

/// Reads `x_col` (and `y_col`, when given) from a comma-separated file with a header row.
///
/// Lines starting with `#` are skipped. Rows are numbered from 1, not counting the header.
pub fn ingest_csv(path: &Path, x_col: &str, y_col: Option<&str>) -> Result<Sample> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Input {
                path: path.to_path_buf(),
                message: format!("no column named {name:?}"),
            })
    };
    let xi = column(x_col)?;
    let yi = y_col.map(column).transpose()?;

    let mut xs = Vec::new();
    let mut ys = yi.map(|_| Vec::new());
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = i as u64 + 1;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Row {
            path: path.to_path_buf(),
            row,
            line,
            message,
        };
        let field = |idx: usize, name: &str| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            if raw.is_empty() {
                return Err(bad(format!("empty value in column {name:?}")));
            }
            let v: f64 = raw.parse().map_err(|_| {
                bad(format!(
                    "cannot parse {raw:?} in column {name:?} as a number"
                ))
            })?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite value {raw:?} in column {name:?}")));
            }
            Ok(v)
        };
        let x = field(xi, x_col)?;
        if x < 0.0 {
            return Err(bad(format!("negative x value {x} in column {x_col:?}")));
        }
        xs.push(x);
        if let (Some(idx), Some(ys), Some(name)) = (yi, ys.as_mut(), y_col) {
            ys.push(field(idx, name)?);
        }
    }
    if xs.is_empty() {
        return Err(Error::Input {
            path: path.to_path_buf(),
            message: "empty sample".into(),
        });
    }
    Ok(Sample::new(xs, ys)?)
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let (row, line) = err.position().map_or((0, 0), |p| (p.record(), p.line()));
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::Row {
            path: path.to_path_buf(),
            row,
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        csv::ErrorKind::Utf8 { err, .. } => Error::Row {
            path: path.to_path_buf(),
            row,
            line,
            message: format!("invalid UTF-8: {err}"),
        },
        other => Error::Input {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes through a temporary file in the destination directory and renames it into place,
/// so `path` is either untouched or complete.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    {
        let mut out = BufWriter::new(tmp.as_file());
        body(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn csv_io(err: csv::Error) -> std::io::Error {
    match err.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => std::io::Error::other(format!("{other:?}")),
    }
}

/// Curve table with columns `grid_x, density[, numerator, regression, starved]`.
pub fn write_series_csv(path: &Path, series: &EstimateSeries) -> Result<()> {
    write_atomic(path, |out| {
        let mut w = csv::Writer::from_writer(out);
        let with_regression = series.regression.is_some();
        let mut header = vec!["grid_x", "density"];
        if with_regression {
            header.extend(["numerator", "regression", "starved"]);
        }
        w.write_record(&header).map_err(csv_io)?;
        for (i, &x) in series.grid.points().iter().enumerate() {
            let mut row = vec![format_f64(x), format_f64(series.density[i])];
            if let (Some(num), Some(reg), Some(starved)) =
                (&series.numerator, &series.regression, &series.starved)
            {
                row.push(format_f64(num[i]));
                row.push(format_f64(reg[i]));
                row.push(u8::from(starved[i]).to_string());
            }
            w.write_record(&row).map_err(csv_io)?;
        }
        w.flush()
    })
}

/// Sample table `x[, y]` preceded by a `#` comment line.
pub fn write_sample_csv(path: &Path, comment: &str, sample: &Sample) -> Result<()> {
    write_atomic(path, |out| {
        writeln!(out, "# {comment}")?;
        let mut w = csv::Writer::from_writer(out);
        match sample.ys() {
            Some(ys) => {
                w.write_record(["x", "y"]).map_err(csv_io)?;
                for (&x, &y) in sample.xs().iter().zip(ys) {
                    w.write_record([format_f64(x), format_f64(y)])
                        .map_err(csv_io)?;
                }
            }
            None => {
                w.write_record(["x"]).map_err(csv_io)?;
                for &x in sample.xs() {
                    w.write_record([format_f64(x)]).map_err(csv_io)?;
                }
            }
        }
        w.flush()
    })
}
