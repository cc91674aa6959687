//! File formats: feature CSVs, 17-significant-digit JSON, and CSV writers.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::fmt17;

/// JSON formatter writing every finite real with 17 significant digits.
/// Non-finite reals are emitted as `null` by serde_json itself.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sig17Formatter;

impl serde_json::ser::Formatter for Sig17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        writer.write_all(fmt17(value).as_bytes())
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17Formatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = to_json_string(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

/// Feature matrix read from a CSV with columns `f0 .. f{n-1}` and an
/// optional boolean column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub features: DMatrix<f64>,
    pub flags: Option<Vec<bool>>,
}

pub fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "t" | "y" => Some(true),
        "0" | "false" | "no" | "f" | "n" => Some(false),
        _ => None,
    }
}

/// Reads feature columns `f0..f{n-1}` (in index order, wherever they sit in
/// the header) and, when present, the boolean column `flag_column`.
pub fn read_feature_csv<R: Read>(reader: R, flag_column: &str) -> Result<FeatureTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut feature_cols: Vec<(usize, usize)> = Vec::new();
    let mut flag_idx = None;
    for (pos, name) in headers.iter().enumerate() {
        if name == flag_column {
            flag_idx = Some(pos);
        } else if let Some(rest) = name.strip_prefix('f') {
            if let Ok(i) = rest.parse::<usize>() {
                feature_cols.push((i, pos));
            }
        }
    }
    feature_cols.sort();
    for (expected, &(i, _)) in feature_cols.iter().enumerate() {
        if i != expected {
            return Err(Error::Csv {
                line: 1,
                message: format!("feature columns must be f0..f{{n-1}}; missing f{expected}"),
            });
        }
    }
    if feature_cols.is_empty() {
        return Err(Error::Csv {
            line: 1,
            message: "no feature columns f0.. found".into(),
        });
    }
    let n = feature_cols.len();
    let mut values = Vec::new();
    let mut flags = flag_idx.map(|_| Vec::new());
    for (r, record) in rdr.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| Error::Csv {
            line,
            message: e.to_string(),
        })?;
        for &(_, pos) in &feature_cols {
            let field = record.get(pos).unwrap_or("");
            let v: f64 = field.parse().map_err(|_| Error::Csv {
                line,
                message: format!("not a number: {field:?}"),
            })?;
            values.push(v);
        }
        if let (Some(pos), Some(flags)) = (flag_idx, flags.as_mut()) {
            let field = record.get(pos).unwrap_or("");
            flags.push(parse_bool(field).ok_or_else(|| Error::Csv {
                line,
                message: format!("not a boolean: {field:?}"),
            })?);
        }
    }
    let rows = values.len() / n;
    Ok(FeatureTable {
        features: DMatrix::from_row_slice(rows, n, &values),
        flags,
    })
}

pub fn read_feature_file(path: &Path, flag_column: &str) -> Result<FeatureTable> {
    read_feature_csv(BufReader::new(File::open(path)?), flag_column)
}

/// Reads the first column of a headed CSV as booleans.
pub fn read_bool_column<R: Read>(reader: R) -> Result<Vec<bool>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| Error::Csv {
            line,
            message: e.to_string(),
        })?;
        let field = record.get(0).unwrap_or("");
        out.push(parse_bool(field).ok_or_else(|| Error::Csv {
            line,
            message: format!("not a boolean: {field:?}"),
        })?);
    }
    Ok(out)
}

/// Writes features as `f0..f{n-1}` plus an optional boolean column.
pub fn write_feature_csv<W: Write>(
    out: W,
    features: &DMatrix<f64>,
    flags: Option<(&str, &[bool])>,
) -> Result<()> {
    let mut w = BufWriter::new(out);
    let n = features.ncols();
    let mut header: Vec<String> = (0..n).map(|i| format!("f{i}")).collect();
    if let Some((name, _)) = flags {
        header.push(name.to_string());
    }
    writeln!(w, "{}", header.join(","))?;
    for r in 0..features.nrows() {
        let mut fields: Vec<String> = features.row(r).iter().map(|&v| fmt17(v)).collect();
        if let Some((_, f)) = flags {
            fields.push(if f[r] { "1".into() } else { "0".into() });
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Minimal CSV table builder; reals are written with [`fmt17`].
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    lines: Vec<String>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            lines: vec![header.join(",")],
        }
    }

    pub fn push(&mut self, fields: Vec<String>) {
        self.lines.push(fields.join(","));
    }

    pub fn rows(&self) -> usize {
        self.lines.len() - 1
    }

    pub fn render(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_reals_have_17_digits_and_round_trip() {
        let v = vec![0.1, 1.0 / 3.0, -2.0e-300, f64::NEG_INFINITY];
        let s = to_json_string(&v).unwrap();
        assert_eq!(
            s,
            "[1.0000000000000001e-1,3.3333333333333331e-1,-2.0000000000000001e-300,null]"
        );
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[..3], [Some(0.1), Some(1.0 / 3.0), Some(-2.0e-300)]);
    }

    #[test]
    fn feature_csv_round_trip() {
        let m = DMatrix::from_row_slice(2, 3, &[0.1, 2.0, -3.5, 1e-7, 0.0, 4.25]);
        let flags = [true, false];
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &m, Some(("is_error", &flags))).unwrap();
        let t = read_feature_csv(buf.as_slice(), "is_error").unwrap();
        assert_eq!(t.features, m);
        assert_eq!(t.flags.unwrap(), flags);
    }

    #[test]
    fn feature_columns_in_any_order() {
        let text = "is_error,f1,f0\ntrue,2,1\nno,4,3\n";
        let t = read_feature_csv(text.as_bytes(), "is_error").unwrap();
        assert_eq!(t.features, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert_eq!(t.flags.unwrap(), vec![true, false]);
    }

    #[test]
    fn malformed_csv_reports_line() {
        let text = "f0,f1\n1,2\n3,x\n";
        match read_feature_csv(text.as_bytes(), "is_error") {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(read_feature_csv("f0,f2\n1,2\n".as_bytes(), "is_error").is_err());
    }
}
