//! CSV ingestion and emission.
//!
//! One data format: UTF-8 CSV with a header. Datasets require `id,x,y`
//! columns; every extra column is a numeric attribute where an empty field
//! is NULL. Floats print with 17 significant digits so values survive a
//! write/read round trip bit-exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::data::{Dataset, DatasetError, Point, ResultTable, Value, LOCATION_COLUMN};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Formats with up to 17 significant digits (the `%.17g` convention:
/// trailing zeros dropped, scientific notation outside [1e-4, 1e17)).
/// 17 digits pin down any f64, so parsing the output restores the exact
/// bits.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let neg = v.is_sign_negative();
    let s = format!("{:.16e}", v.abs());
    let (mant, exp) = s.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("exponent");
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if (-4..17).contains(&exp) {
        if exp >= 0 {
            let int_len = exp as usize + 1;
            if digits.len() <= int_len {
                out.push_str(digits);
                out.extend(std::iter::repeat_n('0', int_len - digits.len()));
            } else {
                out.push_str(&digits[..int_len]);
                out.push('.');
                out.push_str(&digits[int_len..]);
            }
        } else {
            out.push_str("0.");
            out.extend(std::iter::repeat_n('0', (-exp) as usize - 1));
            out.push_str(digits);
        }
    } else {
        out.push_str(&digits[..1]);
        if digits.len() > 1 {
            out.push('.');
            out.push_str(&digits[1..]);
        }
        out.push('e');
        out.push_str(&exp.to_string());
    }
    out
}

/// Reads a dataset. `id,x,y` may appear in any order; remaining columns
/// become declared attributes in header order.
pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col("id").ok_or_else(|| CsvError::Format("missing `id` column".into()))?;
    let x_col = col("x").ok_or_else(|| CsvError::Format("missing `x` column".into()))?;
    let y_col = col("y").ok_or_else(|| CsvError::Format("missing `y` column".into()))?;
    if col(LOCATION_COLUMN).is_some() {
        return Err(CsvError::Format(format!(
            "`{LOCATION_COLUMN}` is reserved for the coordinate attribute"
        )));
    }
    let attr_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != id_col && *i != x_col && *i != y_col)
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut points = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = line + 2; // header is line 1
        let field = |i: usize| record.get(i).unwrap_or("");
        let id = field(id_col);
        if id.is_empty() {
            return Err(CsvError::Format(format!("line {row}: empty id")));
        }
        let coord = |i: usize, name: &str| -> Result<f64, CsvError> {
            field(i).parse().map_err(|_| {
                CsvError::Format(format!("line {row}: bad {name} value `{}`", field(i)))
            })
        };
        let mut p = Point::new(id, coord(x_col, "x")?, coord(y_col, "y")?);
        for (i, name) in &attr_cols {
            let cell = field(*i);
            if !cell.is_empty() {
                let v: f64 = cell.parse().map_err(|_| {
                    CsvError::Format(format!("line {row}: bad `{name}` value `{cell}`"))
                })?;
                p = p.with_attr(name.clone(), Some(v));
            }
        }
        points.push(p);
    }
    Ok(Dataset::from_points(
        points,
        attr_cols.into_iter().map(|(_, n)| n).collect(),
    )?)
}

pub fn read_dataset_path(path: &Path) -> Result<Dataset, CsvError> {
    read_dataset(File::open(path)?)
}

/// Emits a dataset as `id,x,y,<attrs...>` with NULLs as empty fields.
pub fn write_dataset<W: Write>(writer: W, ds: &Dataset) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string(), "x".into(), "y".into()];
    header.extend(ds.attr_names().iter().cloned());
    w.write_record(&header)?;
    for p in ds.points() {
        let mut rec = vec![p.id.clone(), fmt_f64(p.x), fmt_f64(p.y)];
        for name in ds.attr_names() {
            rec.push(match p.attrs.get(name).copied().flatten() {
                Some(v) => fmt_f64(v),
                None => String::new(),
            });
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_result<W: Write>(writer: W, table: &ResultTable) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        let rec: Vec<String> = row
            .iter()
            .map(|v| match v {
                Value::Str(s) => s.clone(),
                Value::Float(f) => fmt_f64(*f),
                Value::Null => String::new(),
            })
            .collect();
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
