//! Metric table I/O. Floats are written with Rust's shortest round-trip
//! formatting so the text is reproducible and parses back exactly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ::csv::{QuoteStyle, ReaderBuilder, Terminator, WriterBuilder};

use super::{FrontEnd, MetricRow};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 11] = [
    "snr_db",
    "delta",
    "frontend",
    "decoder",
    "frames",
    "frame_len",
    "pair_ser",
    "xor_ber",
    "xor_ser",
    "throughput_sps",
    "seed",
];

/// Writes an optional `# ...` provenance line, the header and one record
/// per row. Lines end in LF.
pub fn write_csv<W: Write>(rows: &[MetricRow], provenance: Option<&str>, mut out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no metric rows to write".into()));
    }
    if let Some(p) = provenance {
        writeln!(out, "# {}", p.replace(['\n', '\r'], " "))?;
    }
    let mut w = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .quote_style(QuoteStyle::Necessary)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.snr_db.to_string(),
            r.delta.to_string(),
            r.front_end.to_string(),
            r.decoder.to_string(),
            r.frames.to_string(),
            r.frame_len.to_string(),
            r.pair_ser.to_string(),
            r.xor_ber.to_string(),
            r.xor_ser.to_string(),
            r.throughput.map(|t| t.to_string()).unwrap_or_default(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[MetricRow], provenance: Option<&str>, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no metric rows to write".into()));
    }
    let file = File::create(path)?;
    write_csv(rows, provenance, BufWriter::new(file))
}

fn field<T: std::str::FromStr>(rec: &::csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::InvalidInput(format!("column {} has unparsable value '{raw}'", CSV_HEADER[i])))
}

/// Parses a table written by [`write_csv`], skipping `#` lines.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<MetricRow>> {
    let mut r = ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::InvalidInput(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let throughput = match rec.get(9) {
            Some("") | None => None,
            Some(_) => Some(field(&rec, 9)?),
        };
        rows.push(MetricRow {
            snr_db: field(&rec, 0)?,
            delta: field(&rec, 1)?,
            front_end: field::<FrontEnd>(&rec, 2)?,
            decoder: field(&rec, 3)?,
            frames: field(&rec, 4)?,
            frame_len: field(&rec, 5)?,
            pair_ser: field(&rec, 6)?,
            xor_ber: field(&rec, 7)?,
            xor_ser: field(&rec, 8)?,
            throughput,
            seed: field(&rec, 10)?,
        });
    }
    Ok(rows)
}
