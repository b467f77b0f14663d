use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use super::schema::FeatureSpec;
use super::table::{quarter_end, BankQuarterRecord, DataTable};
use crate::{Error, Result};

const BANK_ID: &str = "bank_id";
const REPORT_DATE: &str = "report_date";
const FAILED_LABEL: &str = "failed_label";
const FAILURE_DATE: &str = "failure_date";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub rows_read: usize,
    pub dropped_missing: usize,
}

/// Accepts `YYYY-MM-DD` and the compact `YYYYMMDD` form used by FDIC.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(s, "%Y%m%d"))
        .or_else(|_| NaiveDate::parse_from_str(s, "%m/%d/%Y"))
        .ok()
}

pub fn load_csv(path: impl AsRef<Path>, schema: &[FeatureSpec]) -> Result<DataTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (table, stats) = read_csv(file, schema)?;
    if stats.dropped_missing > 0 {
        log::warn!(
            "{}: dropped {} of {} rows with missing indicator values",
            path.display(),
            stats.dropped_missing,
            stats.rows_read
        );
    }
    Ok(table)
}

pub fn read_csv<R: Read>(reader: R, schema: &[FeatureSpec]) -> Result<(DataTable, LoadStats)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| col(name).ok_or_else(|| Error::MissingFeature(name.to_string()));

    let bank_col = required(BANK_ID)?;
    let date_col = required(REPORT_DATE)?;
    let label_col = required(FAILED_LABEL)?;
    let failure_col = col(FAILURE_DATE);
    let feature_cols: Vec<usize> = schema.iter().map(|s| required(&s.name)).collect::<Result<_>>()?;

    let mut stats = LoadStats::default();
    let mut rows = Vec::new();
    for result in rdr.records() {
        let record = result?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        stats.rows_read += 1;
        let parse_err = |message: String| Error::Parse { line, message };
        let field = |c: usize| record.get(c).unwrap_or("");

        let bank_id = field(bank_col).to_string();
        if bank_id.is_empty() {
            return Err(parse_err("empty bank_id".into()));
        }
        let report_date = parse_date(field(date_col))
            .map(quarter_end)
            .ok_or_else(|| parse_err(format!("bad report_date `{}`", field(date_col))))?;
        let failed_label = match field(label_col) {
            "0" | "false" | "" => 0,
            "1" | "true" => 1,
            other => return Err(parse_err(format!("bad failed_label `{other}`"))),
        };
        let failure_date = match failure_col.map(field) {
            None | Some("") => None,
            Some(s) => Some(parse_date(s).ok_or_else(|| parse_err(format!("bad failure_date `{s}`")))?),
        };

        let mut indicators = Vec::with_capacity(schema.len());
        let mut missing = false;
        for (spec, &c) in schema.iter().zip(&feature_cols) {
            let raw = field(c);
            if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("nan") {
                missing = true;
                break;
            }
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(format!("bad value `{raw}` for {}", spec.name)))?;
            if !v.is_finite() {
                missing = true;
                break;
            }
            indicators.push(v);
        }
        if missing {
            stats.dropped_missing += 1;
            continue;
        }
        rows.push(BankQuarterRecord {
            bank_id,
            report_date,
            indicators,
            failed_label,
            failure_date,
        });
    }
    Ok((DataTable::new(schema.to_vec(), rows)?, stats))
}

pub fn write_csv<W: Write>(table: &DataTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![BANK_ID.to_string(), REPORT_DATE.into(), FAILED_LABEL.into(), FAILURE_DATE.into()];
    header.extend(table.feature_names());
    w.write_record(&header)?;
    for r in table.rows() {
        let mut rec = vec![
            r.bank_id.clone(),
            r.report_date.to_string(),
            r.failed_label.to_string(),
            r.failure_date.map(|d| d.to_string()).unwrap_or_default(),
        ];
        rec.extend(r.indicators.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(table: &DataTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(table, std::io::BufWriter::new(file))
}
