//! KPM CSV persistence. One file per base station per run, UTF-8, `\n`
//! line endings, floats printed with 6 decimal digits.

use std::io::{self, Write};

use super::cell::KpmRecord;
use thiserror::Error;

pub const KPM_CSV_HEADER: &str =
    "ts_ms,bs_id,slice_id,ue_id,dl_tx_bytes,dl_tx_tbs,dl_buffer_bytes,dl_thr_mbps,rbg_share,sched_policy";

pub fn write_csv_header<W: Write>(w: &mut W) -> io::Result<()> {
    writeln!(w, "{KPM_CSV_HEADER}")
}

pub fn write_csv_record<W: Write>(w: &mut W, r: &KpmRecord) -> io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{},{:.6},{:.6},{}",
        r.ts_ms,
        r.bs_id,
        r.slice_id,
        r.ue_id,
        r.dl_tx_bytes,
        r.dl_tx_tbs,
        r.dl_buffer_bytes,
        r.dl_thr_mbps,
        r.rbg_share,
        r.sched_policy
    )
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("schema mismatch: expected header {expected:?}, found {found:?}")]
    SchemaMismatch { expected: String, found: String },
    #[error("line {line}: {reason}")]
    BadRow { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parse one KPM CSV file back into records. The header must match the
/// written schema exactly.
pub fn parse_csv(text: &str) -> Result<Vec<KpmRecord>, CsvError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != KPM_CSV_HEADER {
        return Err(CsvError::SchemaMismatch {
            expected: KPM_CSV_HEADER.to_string(),
            found: header.to_string(),
        });
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(CsvError::BadRow {
                line: i + 2,
                reason: format!("expected 10 fields, found {}", fields.len()),
            });
        }
        let bad = |reason: &str| CsvError::BadRow {
            line: i + 2,
            reason: reason.to_string(),
        };
        records.push(KpmRecord {
            ts_ms: fields[0].parse().map_err(|_| bad("ts_ms"))?,
            bs_id: fields[1].to_string(),
            slice_id: fields[2].parse().map_err(|_| bad("slice_id"))?,
            ue_id: fields[3].parse().map_err(|_| bad("ue_id"))?,
            dl_tx_bytes: fields[4].parse().map_err(|_| bad("dl_tx_bytes"))?,
            dl_tx_tbs: fields[5].parse().map_err(|_| bad("dl_tx_tbs"))?,
            dl_buffer_bytes: fields[6].parse().map_err(|_| bad("dl_buffer_bytes"))?,
            dl_thr_mbps: fields[7].parse().map_err(|_| bad("dl_thr_mbps"))?,
            rbg_share: fields[8].parse().map_err(|_| bad("rbg_share"))?,
            sched_policy: fields[9].parse().map_err(|_| bad("sched_policy"))?,
        });
    }
    Ok(records)
}
