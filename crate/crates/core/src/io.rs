//! CSV and JSON readers/writers for the exchanged data.
//!
//! Every CSV starts with optional `#` comment lines followed by a header row.
//! Readers skip comments (except recognised `# key: value` metadata) and
//! require the exact header. Floats are written in shortest round-trip form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pat::IvCurve;
use crate::ratefit::RateDataPoint;
use crate::stats::Histogram;
use crate::stream::{EventLabel, EventStream};

pub const EVENTS_HEADER: [&str; 2] = ["time_s", "label"];
pub const RATES_HEADER: [&str; 3] = ["temp_K", "rate_Hz", "rate_err_Hz"];
pub const IV_HEADER: [&str; 2] = ["voltage_V", "current_A"];
pub const RESPONSE_HEADER: [&str; 2] = ["freq_Hz", "power_dB"];
pub const HISTOGRAM_HEADER: [&str; 2] = ["bin_center_s", "density"];
pub const SWEEP_HEADER: [&str; 4] = ["bias_ratio", "temp_K", "rate_Hz", "rate_err_Hz"];
pub const TRAJECTORY_HEADER: [&str; 3] = ["tau", "phi", "dphi"];

/// Comment lines and data records of a CSV document.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// Value of the first `# key: value` comment.
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let (k, v) = c.split_once(':')?;
            (k.trim() == key).then(|| v.trim())
        })
    }

    /// Parses every cell as `f64`.
    pub fn numeric(&self) -> Result<Vec<Vec<f64>>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| row.iter().map(|c| parse_f64(c, r + 1)).collect())
            .collect()
    }
}

fn parse_f64(cell: &str, row: usize) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::Parse(format!("row {row}: not a number: {cell:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("row {row}: non-finite value {cell:?}")));
    }
    Ok(v)
}

/// Reads a CSV document with the given header.
pub fn read_table<R: Read>(mut reader: R, header: &[&str]) -> Result<Table> {
    let mut text = String::new();
    reader.read_to_string(&mut text).map_err(|e| Error::Parse(format!("unreadable input: {e}")))?;
    let comments = text
        .lines()
        .map(str::trim_start)
        .take_while(|l| l.starts_with('#') || l.trim().is_empty())
        .filter_map(|l| l.strip_prefix('#'))
        .map(|l| l.trim().to_string())
        .collect();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let got = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if got.len() != header.len() || got.iter().zip(header).any(|(a, b)| a != *b) {
        return Err(Error::Parse(format!("expected header {:?}, got {:?}", header.join(","), got.iter().collect::<Vec<_>>().join(","))));
    }
    let rows = rdr
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()).map_err(|e| Error::Parse(e.to_string())))
        .collect::<Result<_>>()?;
    Ok(Table { comments, rows })
}

/// Writes comment lines, a header and string records.
pub fn write_table<W: Write>(mut w: W, comments: &[String], header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes numeric records.
pub fn write_numeric<W: Write>(w: W, comments: &[String], header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|v| fmt_f64(*v)).collect()).collect();
    write_table(w, comments, header, &rows)
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn check_width(table: &Table, n: usize) -> Result<()> {
    match table.rows.iter().position(|r| r.len() != n) {
        Some(k) => Err(Error::Parse(format!("row {}: expected {n} fields", k + 1))),
        None => Ok(()),
    }
}

/// Event stream as `time_s,label` with `duration_s` and optional `seed` metadata.
pub fn write_events_csv<W: Write>(w: W, stream: &EventStream, comments: &[String]) -> Result<()> {
    let mut c = comments.to_vec();
    c.push(format!("duration_s: {}", fmt_f64(stream.duration())));
    if let Some(s) = stream.seed() {
        c.push(format!("seed: {s}"));
    }
    let rows: Vec<Vec<String>> = stream.iter().map(|(t, l)| vec![fmt_f64(t), l.to_string()]).collect();
    write_table(w, &c, &EVENTS_HEADER, &rows)
}

/// Reads an event stream; without `duration_s` metadata the duration is the
/// last event time.
pub fn read_events_csv<R: Read>(r: R) -> Result<EventStream> {
    let table = read_table(r, &EVENTS_HEADER)?;
    check_width(&table, 2)?;
    let mut times = Vec::with_capacity(table.rows.len());
    let mut labels = Vec::with_capacity(table.rows.len());
    for (k, row) in table.rows.iter().enumerate() {
        times.push(parse_f64(&row[0], k + 1)?);
        labels.push(row[1].parse::<EventLabel>()?);
    }
    let duration = match table.meta("duration_s") {
        Some(d) => parse_f64(d, 0)?,
        None => times.last().copied().unwrap_or(0.0),
    };
    let stream = EventStream::new(times, labels, duration)?;
    Ok(match table.meta("seed") {
        Some(s) => stream.with_seed(s.parse().map_err(|_| Error::Parse(format!("bad seed {s:?}")))?),
        None => stream,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub stream: EventStream,
}

pub fn write_events_json<W: Write>(mut w: W, stream: &EventStream, config_hash: Option<&str>) -> Result<()> {
    let doc = EventDocument { config_hash: config_hash.map(str::to_string), stream: stream.clone() };
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

pub fn read_events_json<R: Read>(r: R) -> Result<EventDocument> {
    serde_json::from_reader(r).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_rates_csv<W: Write>(w: W, data: &[RateDataPoint], comments: &[String]) -> Result<()> {
    let rows: Vec<Vec<f64>> = data.iter().map(|p| vec![p.temp_k, p.rate_hz, p.rate_err_hz]).collect();
    write_numeric(w, comments, &RATES_HEADER, &rows)
}

pub fn read_rates_csv<R: Read>(r: R) -> Result<Vec<RateDataPoint>> {
    let table = read_table(r, &RATES_HEADER)?;
    check_width(&table, 3)?;
    table.numeric()?.into_iter().map(|v| RateDataPoint::new(v[0], v[1], v[2])).collect()
}

pub fn write_iv_csv<W: Write>(w: W, iv: &IvCurve, comments: &[String]) -> Result<()> {
    let rows: Vec<Vec<f64>> = iv.voltage().iter().zip(iv.current_samples()).map(|(v, i)| vec![*v, *i]).collect();
    write_numeric(w, comments, &IV_HEADER, &rows)
}

pub fn read_iv_csv<R: Read>(r: R) -> Result<IvCurve> {
    let table = read_table(r, &IV_HEADER)?;
    check_width(&table, 2)?;
    let (v, i) = table.numeric()?.into_iter().map(|row| (row[0], row[1])).unzip();
    IvCurve::new(v, i)
}

pub fn write_histogram_csv<W: Write>(w: W, h: &Histogram, comments: &[String]) -> Result<()> {
    let rows: Vec<Vec<f64>> = h.centers().into_iter().zip(&h.density).map(|(c, d)| vec![c, *d]).collect();
    write_numeric(w, comments, &HISTOGRAM_HEADER, &rows)
}

pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_csv_round_trip() {
        let s = EventStream::new(vec![0.1, 0.25, 1.0 / 3.0], vec![EventLabel::Mode(1), EventLabel::Dark, EventLabel::Mode(0)], 2.0)
            .unwrap()
            .with_seed(99);
        let mut buf = Vec::new();
        write_events_csv(&mut buf, &s, &["manifest: abc".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# manifest: abc\n"));
        assert!(text.contains("time_s,label\n0.1,mode1\n"));
        assert_eq!(read_events_csv(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn events_json_round_trip_and_validation() {
        let s = EventStream::uniform(vec![0.5, 0.7], EventLabel::Dark, 1.0).unwrap();
        let mut buf = Vec::new();
        write_events_json(&mut buf, &s, Some("deadbeef")).unwrap();
        let doc = read_events_json(buf.as_slice()).unwrap();
        assert_eq!(doc.stream, s);
        assert_eq!(doc.config_hash.as_deref(), Some("deadbeef"));
        let bad = r#"{"stream":{"times":[0.7,0.5],"labels":["dark","dark"],"duration":1.0}}"#;
        assert!(read_events_json(bad.as_bytes()).is_err());
    }

    #[test]
    fn header_mismatch_and_garbage_rejected() {
        assert!(read_rates_csv("temp,rate\n1,2\n".as_bytes()).is_err());
        assert!(read_rates_csv("temp_K,rate_Hz,rate_err_Hz\n0.05,x,1\n".as_bytes()).is_err());
        assert!(read_rates_csv("temp_K,rate_Hz,rate_err_Hz\n0.05,1\n".as_bytes()).is_err());
        assert!(read_rates_csv("temp_K,rate_Hz,rate_err_Hz\n0.05,1,NaN\n".as_bytes()).is_err());
        assert!(read_events_csv("time_s,label\n0.1,photon\n".as_bytes()).is_err());
        assert!(read_iv_csv("voltage_V,current_A\n1,1\n0,0\n".as_bytes()).is_err());
    }

    #[test]
    fn rates_and_iv_round_trip() {
        let data = vec![RateDataPoint::new(0.021, 0.11, 0.01).unwrap(), RateDataPoint::new(0.08, 2900.0, 145.0).unwrap()];
        let mut buf = Vec::new();
        write_rates_csv(&mut buf, &data, &[]).unwrap();
        assert_eq!(read_rates_csv(buf.as_slice()).unwrap(), data);

        let iv = IvCurve::new(vec![-1e-4, 0.0, 3.3e-4], vec![-6.7e-10, 0.0, 2.2e-9]).unwrap();
        let mut buf = Vec::new();
        write_iv_csv(&mut buf, &iv, &["note".into()]).unwrap();
        assert_eq!(read_iv_csv(buf.as_slice()).unwrap(), iv);
    }

    #[test]
    fn empty_event_file_uses_metadata_duration() {
        let s = read_events_csv("# duration_s: 5\ntime_s,label\n".as_bytes()).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.duration(), 5.0);
    }
}
