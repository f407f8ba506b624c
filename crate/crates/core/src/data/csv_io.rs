use std::io::{Read, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};

use super::SeriesFrame;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// Reads an ETT-style CSV: a header row, an optional leading `date` column,
/// and real-valued variate columns. Rows keep file order.
pub fn load_csv<S: Scalar>(path: impl AsRef<Path>) -> Result<SeriesFrame<S>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file)
}

pub fn read_csv<S: Scalar, R: Read>(reader: R) -> Result<SeriesFrame<S>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Ingestion {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.is_empty() {
        return Err(Error::Ingestion {
            line: 1,
            message: "missing header row".into(),
        });
    }
    let has_date = header.get(0).is_some_and(|h| h.eq_ignore_ascii_case("date"));
    let first_value = usize::from(has_date);
    let names: Vec<String> = header.iter().skip(first_value).map(str::to_string).collect();
    if names.is_empty() {
        return Err(Error::Ingestion {
            line: 1,
            message: "no value columns".into(),
        });
    }

    let mut stamps = Vec::new();
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Ingestion {
            line,
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Ingestion {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        if has_date {
            let cell = &record[0];
            let ts = parse_timestamp(cell).ok_or_else(|| Error::Ingestion {
                line,
                message: format!("unparseable date `{cell}`"),
            })?;
            if stamps.last().is_some_and(|prev| *prev >= ts) {
                return Err(Error::Ingestion {
                    line,
                    message: format!("date `{cell}` is not after the previous row"),
                });
            }
            stamps.push(ts);
        }
        for (j, cell) in record.iter().enumerate().skip(first_value) {
            if cell.is_empty() {
                return Err(Error::Ingestion {
                    line,
                    message: format!("blank cell in column `{}`", &header[j]),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Ingestion {
                line,
                message: format!("non-numeric cell `{cell}` in column `{}`", &header[j]),
            })?;
            if !v.is_finite() {
                return Err(Error::Ingestion {
                    line,
                    message: format!("non-finite value `{cell}` in column `{}`", &header[j]),
                });
            }
            data.push(S::lit(v));
        }
        rows += 1;
    }
    let values = Matrix::from_vec(rows, names.len(), data)?;
    SeriesFrame::new(has_date.then_some(stamps), values, names)
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    for fmt in [TIMESTAMP_FORMAT, "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M:%S", "%Y/%m/%d %H:%M"] {
        if let Ok(ts) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(ts);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

/// Writes `frame` in the same layout [`load_csv`] reads.
pub fn write_csv<S: Scalar, W: Write>(frame: &SeriesFrame<S>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| Error::Format(e.to_string());
    let mut header: Vec<&str> = Vec::with_capacity(frame.variates() + 1);
    if frame.timestamps().is_some() {
        header.push("date");
    }
    header.extend(frame.names().iter().map(String::as_str));
    w.write_record(&header).map_err(to_err)?;
    let mut fields = Vec::with_capacity(header.len());
    for i in 0..frame.len() {
        fields.clear();
        if let Some(ts) = frame.timestamps() {
            fields.push(ts[i].format(TIMESTAMP_FORMAT).to_string());
        }
        // shortest round-trip representation
        fields.extend(frame.values().row(i).iter().map(|v| format!("{}", v.as_f64())));
        w.write_record(&fields).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn save_csv<S: Scalar>(frame: &SeriesFrame<S>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(frame, std::io::BufWriter::new(file))
}
