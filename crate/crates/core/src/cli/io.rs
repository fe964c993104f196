// SPDX-License-Identifier: MIT OR Apache-2.0

use std::io::Write;
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, StringRecord, Trim};
use log::warn;
use tempfile::NamedTempFile;

use super::CliError;
use crate::costs::TimeSeries;

/// Reads a one-column (`value`) or two-column (`index,value`) CSV file.
///
/// A first row that does not parse as numbers is treated as a header and
/// skipped with a warning.
pub fn ingest(path: &Path) -> Result<TimeSeries, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    ingest_reader(file, &path.display().to_string())
}

pub fn ingest_reader<R: std::io::Read>(reader: R, name: &str) -> Result<TimeSeries, CliError> {
    let mut rdr = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut width = None;
    let mut record = StringRecord::new();
    let mut first = true;
    loop {
        let more = rdr
            .read_record(&mut record)
            .map_err(|e| CliError::Data(format!("{name}: {e}")))?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        match parse_row(&record) {
            Ok(v) => {
                let w = record.len();
                if *width.get_or_insert(w) != w {
                    return Err(CliError::Data(format!(
                        "{name}: line {line} has {w} columns, expected {}",
                        width.unwrap_or(w)
                    )));
                }
                if !v.is_finite() {
                    return Err(CliError::Data(format!(
                        "{name}: line {line}: value {v} is not finite"
                    )));
                }
                values.push(v);
            }
            Err(_) if first && record.len() <= 2 => {
                warn!("{name}: skipping header row {:?}", record.iter().collect::<Vec<_>>());
            }
            Err(msg) => return Err(CliError::Data(format!("{name}: line {line}: {msg}"))),
        }
        first = false;
    }
    if values.is_empty() {
        return Err(CliError::Data(format!("{name}: no observations")));
    }
    TimeSeries::new(values).map_err(|e| CliError::Data(format!("{name}: {e}")))
}

fn parse_row(record: &StringRecord) -> Result<f64, String> {
    let number = |field: &str| {
        field
            .parse::<f64>()
            .map_err(|_| format!("{field:?} is not a number"))
    };
    match record.len() {
        1 => number(&record[0]),
        2 => {
            number(&record[0])?;
            number(&record[1])
        }
        w => Err(format!("expected 1 or 2 columns, found {w}")),
    }
}

/// Writes every file or none: each is staged next to its target and only
/// renamed into place once all of them have been staged.
pub fn write_all_atomic(files: &[(PathBuf, String)]) -> Result<(), CliError> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, contents) in files {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = NamedTempFile::new_in(dir).map_err(|e| io_error(path, e))?;
        tmp.write_all(contents.as_bytes()).map_err(|e| io_error(path, e))?;
        tmp.flush().map_err(|e| io_error(path, e))?;
        staged.push((tmp, path));
    }
    let mut written: Vec<&PathBuf> = Vec::new();
    for (tmp, path) in staged {
        if let Err(e) = tmp.persist(path) {
            for p in written {
                let _ = std::fs::remove_file(p);
            }
            return Err(io_error(path, e.error));
        }
        written.push(path);
    }
    Ok(())
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("cannot write {}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<f64>, CliError> {
        ingest_reader(text.as_bytes(), "test").map(|ts| ts.values().to_vec())
    }

    #[test]
    fn single_column() {
        assert_eq!(parse("1.0\n2.0\n3.0").unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn header_is_skipped() {
        assert_eq!(parse("value\n1\n2\n").unwrap(), vec![1.0, 2.0]);
        assert_eq!(parse("t,y\n1,5.5\n2,6.5\n").unwrap(), vec![5.5, 6.5]);
    }

    #[test]
    fn bad_row_names_its_line() {
        let err = parse("1\n2\n3\n4\nabc\n6\n").unwrap_err();
        assert!(matches!(&err, CliError::Data(m) if m.contains("line 5")), "{err}");
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(parse("").is_err());
        assert!(parse("value\n").is_err());
        let err = parse("1\nNaN\n").unwrap_err();
        assert!(matches!(&err, CliError::Data(m) if m.contains("line 2")), "{err}");
        assert!(parse("1\ninf\n").is_err());
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(parse("1\n2,3\n").is_err());
        assert!(parse("1,2,3\n").is_err());
    }

    #[test]
    fn shortest_round_trip_formatting_is_lossless() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.12345679, f64::MIN_POSITIVE] {
            let text = format!("{v}\n");
            assert_eq!(parse(&text).unwrap(), vec![v]);
        }
    }

    #[test]
    fn atomic_write_creates_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");
        write_all_atomic(&[(a.clone(), "x".into()), (b.clone(), "y".into())]).unwrap();
        assert_eq!(std::fs::read_to_string(a).unwrap(), "x");
        assert_eq!(std::fs::read_to_string(b).unwrap(), "y");
    }

    #[test]
    fn atomic_write_leaves_nothing_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let bad = dir.path().join("missing").join("b.txt");
        assert!(write_all_atomic(&[(a.clone(), "x".into()), (bad, "y".into())]).is_err());
        assert!(!a.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
