//! Line-oriented CSV ingestion and export.
//!
//! Layout: a header row, one timestamp column, one column per channel. An
//! empty cell or a `NaN` literal (any case) marks a missing sample.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{infer_rate, ChannelKind, ChannelSeries, Dataset};
use crate::error::{Error, Result};

/// Header written for the timestamp column on export.
pub const TIME_HEADER: &str = "timestamp";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub column: String,
    pub kind: ChannelKind,
}

impl ColumnSpec {
    pub fn new(column: impl Into<String>, kind: ChannelKind) -> Self {
        Self {
            column: column.into(),
            kind,
        }
    }
}

/// Column mapping for [`read_csv`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    /// Timestamp column; the first column when `None`.
    pub time_column: Option<String>,
    /// Channel columns in dataset order; every non-time column as
    /// [`ChannelKind::Generic`] when empty.
    pub channels: Vec<ColumnSpec>,
}

impl CsvSchema {
    pub fn with_channels(channels: Vec<ColumnSpec>) -> Self {
        Self {
            time_column: None,
            channels,
        }
    }
}

pub fn read_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let file = File::open(path.as_ref())?;
    read_csv_from(BufReader::new(file), schema)
}

pub fn read_csv_from<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers().map_err(csv_error)?.clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::config(format!("column `{name}` not found in header")))
    };
    let time_idx = match &schema.time_column {
        Some(name) => position(name)?,
        None => 0,
    };
    let specs: Vec<(usize, String, ChannelKind)> = if schema.channels.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != time_idx)
            .map(|(i, h)| (i, h.to_string(), ChannelKind::Generic))
            .collect()
    } else {
        schema
            .channels
            .iter()
            .map(|c| Ok((position(&c.column)?, c.column.clone(), c.kind)))
            .collect::<Result<_>>()?
    };
    if specs.is_empty() {
        return Err(Error::config("no channel columns"));
    }

    let width = headers.len();
    let mut timestamps = Vec::new();
    let mut values = vec![Vec::new(); specs.len()];
    let mut masks = vec![Vec::new(); specs.len()];
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut record).map_err(csv_error)?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(Error::RaggedRow {
                line,
                expected: width,
                found: record.len(),
            });
        }
        let t = parse_cell(&record[time_idx], line)?.ok_or_else(|| Error::Csv {
            line,
            message: "missing timestamp".into(),
        })?;
        timestamps.push(t);
        for (k, (col, _, _)) in specs.iter().enumerate() {
            match parse_cell(&record[*col], line)? {
                Some(v) => {
                    values[k].push(v);
                    masks[k].push(true);
                }
                None => {
                    values[k].push(f64::NAN);
                    masks[k].push(false);
                }
            }
        }
    }

    let rate = infer_rate(&timestamps).map_err(|e| match e {
        Error::NonUniformTimestamps {
            line,
            expected,
            found,
        } => Error::NonUniformTimestamps {
            // sample i sits on file line i + 2 (header is line 1)
            line: line + 2,
            expected,
            found,
        },
        other => other,
    })?;

    let channels = specs
        .into_iter()
        .zip(values.into_iter().zip(masks))
        .map(|((_, id, kind), (v, m))| {
            let ch = ChannelSeries::new(id, kind, v, m)?;
            if ch.observed_count() == 0 {
                return Err(Error::AllMissingChannel(ch.id));
            }
            Ok(ch)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(timestamps, rate, channels)
}

fn parse_cell(cell: &str, line: u64) -> Result<Option<f64>> {
    if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    cell.parse::<f64>().map(Some).map_err(|_| Error::Csv {
        line,
        message: format!("cannot parse `{cell}` as a number"),
    })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Csv {
            line,
            message: format!("{other:?}"),
        },
    }
}

pub fn write_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    write_csv_to(&mut w, data)?;
    w.flush()?;
    Ok(())
}

/// Writes `data` in the ingestion layout. Unobserved samples become empty
/// cells; numbers use the shortest round-trip representation.
pub fn write_csv_to<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![TIME_HEADER.to_string()];
    header.extend(data.channel_ids());
    w.write_record(&header).map_err(csv_error)?;
    let mut row = Vec::with_capacity(header.len());
    for (i, t) in data.timestamps().iter().enumerate() {
        row.clear();
        row.push(t.to_string());
        for ch in data.channels() {
            if ch.mask()[i] {
                row.push(ch.values()[i].to_string());
            } else {
                row.push(String::new());
            }
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
