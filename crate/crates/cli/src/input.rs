//! Observation streams from CSV or JSON-lines input.
//!
//! t, chisq and bernoulli read a column `y`; linreg reads `y`, `x` and
//! nuisance columns `z1, …, zd`, with `d` taken from the header (CSV) or the
//! first record (JSONL).

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use evseq_core::models::RegressionRow;
use evseq_core::{Datum, ModelKind, PriorGrid};
use serde_json::{Map, Value};

use crate::fail::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

pub fn open(path: &str) -> Result<Box<dyn Read>, Failure> {
    if path == "-" {
        return Ok(Box::new(io::stdin()));
    }
    File::open(Path::new(path)).map(|f| Box::new(f) as Box<dyn Read>).map_err(|e| Failure::io(path, e))
}

/// Column layout of a data source.
#[derive(Debug, Clone)]
struct Layout {
    y: usize,
    x: Option<usize>,
    z: Vec<usize>,
}

fn z_columns<'a>(names: impl Iterator<Item = (usize, &'a str)>) -> Result<Vec<usize>, Failure> {
    let mut found: Vec<(usize, usize)> = names
        .filter_map(|(i, name)| {
            let idx = name.strip_prefix('z')?.parse::<usize>().ok()?;
            Some((idx, i))
        })
        .collect();
    found.sort_unstable();
    for (expect, (idx, _)) in found.iter().enumerate() {
        if *idx != expect + 1 {
            return Err(Failure::data(format!("nuisance columns must be z1..zd without gaps; missing z{}", expect + 1)));
        }
    }
    Ok(found.into_iter().map(|(_, col)| col).collect())
}

fn layout(kind: ModelKind, names: &[&str]) -> Result<Layout, Failure> {
    let find = |want: &str| names.iter().position(|n| *n == want);
    let y = find("y").ok_or_else(|| Failure::data(format!("header has no column 'y' (found {names:?})")))?;
    if kind != ModelKind::Linreg {
        return Ok(Layout { y, x: None, z: Vec::new() });
    }
    let x = find("x").ok_or_else(|| Failure::data("linreg input needs a column 'x'"))?;
    let z = z_columns(names.iter().enumerate().map(|(i, n)| (i, *n)))?;
    Ok(Layout { y, x: Some(x), z })
}

fn number(field: &str, col: &str) -> Result<f64, String> {
    field.parse::<f64>().map_err(|_| format!("column '{col}': cannot parse '{field}' as a number"))
}

fn datum(kind: ModelKind, y: f64, x: Option<f64>, z: Vec<f64>) -> Datum {
    match kind {
        ModelKind::Linreg => Datum::Row(RegressionRow { y, x: x.unwrap_or(f64::NAN), z }),
        _ => Datum::Scalar(y),
    }
}

/// Streams data rows; items carry their 1-based row number.
pub struct Rows {
    inner: Box<dyn Iterator<Item = Result<(usize, Datum), Failure>>>,
    pub nuisance_dim: usize,
}

impl Iterator for Rows {
    type Item = Result<(usize, Datum), Failure>;

    fn next(&mut self) -> Option<Self::Item> {
        self.inner.next()
    }
}

pub fn rows(kind: ModelKind, format: Format, reader: Box<dyn Read>) -> Result<Rows, Failure> {
    match format {
        Format::Csv => csv_rows(kind, reader),
        Format::Jsonl => jsonl_rows(kind, reader),
    }
}

fn csv_rows(kind: ModelKind, reader: Box<dyn Read>) -> Result<Rows, Failure> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Failure::data(format!("cannot read CSV header: {e}")))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let lay = layout(kind, &names)?;
    let nuisance_dim = lay.z.len();
    let inner = rdr.into_records().enumerate().map(move |(i, rec)| {
        let row = i + 1;
        let rec = rec.map_err(|e| Failure::data(format!("row {row}: {e}")))?;
        let get = |col: usize, name: &str| {
            number(rec.get(col).unwrap_or(""), name).map_err(|m| Failure::data(format!("row {row}: {m}")))
        };
        let y = get(lay.y, "y")?;
        let x = lay.x.map(|c| get(c, "x")).transpose()?;
        let z = lay.z.iter().enumerate().map(|(j, &c)| get(c, &format!("z{}", j + 1))).collect::<Result<Vec<_>, _>>()?;
        Ok((row, datum(kind, y, x, z)))
    });
    Ok(Rows { inner: Box::new(inner), nuisance_dim })
}

fn json_number(obj: &Map<String, Value>, key: &str, row: usize) -> Result<f64, Failure> {
    match obj.get(key) {
        Some(Value::Number(n)) => Ok(n.as_f64().expect("serde_json numbers convert to f64")),
        Some(other) => Err(Failure::data(format!("row {row}: field '{key}' is not a number: {other}"))),
        None => Err(Failure::data(format!("row {row}: missing field '{key}'"))),
    }
}

fn jsonl_rows(kind: ModelKind, reader: Box<dyn Read>) -> Result<Rows, Failure> {
    let mut lines = BufReader::new(reader).lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let parse = |line_no: usize, line: io::Result<String>, row: usize| -> Result<Map<String, Value>, Failure> {
        let line = line.map_err(|e| Failure::data(format!("row {row} (line {}): {e}", line_no + 1)))?;
        match serde_json::from_str::<Value>(&line) {
            Ok(Value::Object(m)) => Ok(m),
            Ok(_) => Err(Failure::data(format!("row {row}: expected a JSON object"))),
            Err(e) => Err(Failure::data(format!("row {row}: invalid JSON: {e}"))),
        }
    };
    let first = match lines.next() {
        Some((no, line)) => Some(parse(no, line, 1)?),
        None => None,
    };
    let nuisance_dim = match (&first, kind) {
        (Some(obj), ModelKind::Linreg) => z_columns(obj.keys().enumerate().map(|(i, k)| (i, k.as_str())))?.len(),
        _ => 0,
    };
    let decode = move |row: usize, obj: Map<String, Value>| -> Result<(usize, Datum), Failure> {
        let y = json_number(&obj, "y", row)?;
        if kind != ModelKind::Linreg {
            return Ok((row, datum(kind, y, None, Vec::new())));
        }
        let x = json_number(&obj, "x", row)?;
        let z = (1..=nuisance_dim).map(|j| json_number(&obj, &format!("z{j}"), row)).collect::<Result<Vec<_>, _>>()?;
        let extra = obj.keys().filter(|k| k.starts_with('z') && k[1..].parse::<usize>().is_ok_and(|j| j > nuisance_dim)).count();
        if extra > 0 {
            return Err(Failure::data(format!("row {row}: more nuisance fields than the first record ({nuisance_dim})")));
        }
        Ok((row, datum(kind, y, Some(x), z)))
    };
    let head = first.map(|obj| decode(1, obj));
    let tail = lines.enumerate().map(move |(i, (no, line))| {
        let row = i + 2;
        decode(row, parse(no, line, row)?)
    });
    Ok(Rows { inner: Box::new(head.into_iter().chain(tail)), nuisance_dim })
}

/// Prior grid from a CSV file with columns `delta,weight`. Weights summing to
/// within 1e−6 of one are renormalised; anything else is rejected.
pub fn read_prior(path: &str) -> Result<PriorGrid, Failure> {
    let reader = open(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Failure::config(format!("{path}: {e}")))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Failure::config(format!("{path}: prior needs columns delta,weight")))
    };
    let (dc, wc) = (col("delta")?, col("weight")?);
    let mut atoms = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Failure::config(format!("{path}: row {}: {e}", i + 1)))?;
        let get = |c: usize, name: &str| number(rec.get(c).unwrap_or(""), name).map_err(|m| Failure::config(format!("{path}: row {}: {m}", i + 1)));
        atoms.push((get(dc, "delta")?, get(wc, "weight")?));
    }
    PriorGrid::normalized(atoms, 1e-6).map_err(|e| Failure::config(format!("{path}: {e}")))
}

/// Reads whole lines from a buffered source; used for trajectories.
pub fn read_all(path: &str) -> Result<String, Failure> {
    let mut s = String::new();
    open(path)?.read_to_string(&mut s).map_err(|e| Failure::io(path, e))?;
    Ok(s)
}
