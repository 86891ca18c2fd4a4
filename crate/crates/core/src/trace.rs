//! Binary attention-trace format and the CSV/JSON report writers.
//!
//! A trace file is `"SAGT"`, a little-endian u32 version (1), then the u32
//! dimensions L, H, steps, N, followed by `L*H*steps*N` little-endian f32
//! scores in (layer, head, step, position) order. Rows shorter than N are
//! zero-padded so the payload is dense. A `.meta.json` sidecar with the
//! generating configuration shares the trace's basename.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ModelConfig;
use crate::policies::PolicyConfig;

pub const TRACE_MAGIC: [u8; 4] = *b"SAGT";
pub const TRACE_VERSION: u32 = 1;
const HEADER_BYTES: usize = 24;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("bad magic: not a SAGT trace")]
    BadMagic,
    #[error("unsupported trace version {0} (expected {TRACE_VERSION})")]
    BadVersion(u32),
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },
    #[error("trailing bytes after payload: expected {expected} bytes, found {found}")]
    TrailingBytes { expected: u64, found: u64 },
    #[error("row of {got} scores exceeds {max} positions")]
    RowTooLong { got: usize, max: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dense per-(layer, head, step) score rows over N positions.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTrace {
    layers: u32,
    heads: u32,
    steps: u32,
    positions: u32,
    data: Vec<f32>,
}

impl AttentionTrace {
    pub fn zeroed(layers: u32, heads: u32, steps: u32, positions: u32) -> Self {
        let len = layers as usize * heads as usize * steps as usize * positions as usize;
        Self { layers, heads, steps, positions, data: vec![0.0; len] }
    }

    pub fn layers(&self) -> u32 {
        self.layers
    }

    pub fn heads(&self) -> u32 {
        self.heads
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn positions(&self) -> u32 {
        self.positions
    }

    fn offset(&self, layer: u32, head: u32, step: u32) -> usize {
        debug_assert!(layer < self.layers && head < self.heads && step < self.steps);
        (((layer as usize * self.heads as usize) + head as usize) * self.steps as usize
            + step as usize)
            * self.positions as usize
    }

    pub fn row(&self, layer: u32, head: u32, step: u32) -> &[f32] {
        let start = self.offset(layer, head, step);
        &self.data[start..start + self.positions as usize]
    }

    /// Store one score row, zero-padding positions beyond its length.
    pub fn set_row(&mut self, layer: u32, head: u32, step: u32, row: &[f32]) {
        assert!(
            row.len() <= self.positions as usize,
            "row of {} scores exceeds {} positions",
            row.len(),
            self.positions
        );
        let start = self.offset(layer, head, step);
        let slot = &mut self.data[start..start + self.positions as usize];
        slot[..row.len()].copy_from_slice(row);
        slot[row.len()..].fill(0.0);
    }

    pub fn raw_data(&self) -> &[f32] {
        &self.data
    }
}

/// Write a trace in the SAGT layout. Output is byte-identical for identical
/// inputs (no timestamps).
pub fn write_trace(trace: &AttentionTrace, path: &Path) -> Result<(), TraceError> {
    let mut out = Vec::with_capacity(HEADER_BYTES + trace.data.len() * 4);
    out.extend_from_slice(&TRACE_MAGIC);
    out.extend_from_slice(&TRACE_VERSION.to_le_bytes());
    out.extend_from_slice(&trace.layers.to_le_bytes());
    out.extend_from_slice(&trace.heads.to_le_bytes());
    out.extend_from_slice(&trace.steps.to_le_bytes());
    out.extend_from_slice(&trace.positions.to_le_bytes());
    for v in &trace.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

/// Read and validate a SAGT trace.
pub fn read_trace(path: &Path) -> Result<AttentionTrace, TraceError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 4 || bytes[..4] != TRACE_MAGIC {
        return Err(TraceError::BadMagic);
    }
    if bytes.len() < HEADER_BYTES {
        return Err(TraceError::TruncatedPayload {
            expected: HEADER_BYTES as u64,
            found: bytes.len() as u64,
        });
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let version = u32_at(4);
    if version != TRACE_VERSION {
        return Err(TraceError::BadVersion(version));
    }
    let layers = u32_at(8);
    let heads = u32_at(12);
    let steps = u32_at(16);
    let positions = u32_at(20);
    let payload = layers as u64 * heads as u64 * steps as u64 * positions as u64 * 4;
    let expected = HEADER_BYTES as u64 + payload;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(TraceError::TruncatedPayload { expected, found });
    }
    if found > expected {
        return Err(TraceError::TrailingBytes { expected, found });
    }
    let data = bytes[HEADER_BYTES..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(AttentionTrace { layers, heads, steps, positions, data })
}

/// Sidecar metadata describing how a trace was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub model: ModelConfig,
    pub seed: u64,
    pub policy: Option<PolicyConfig>,
    pub prefill_len: usize,
    pub decode_steps: usize,
    pub workload: String,
}

/// `path/to/trace.sagt` -> `path/to/trace.meta.json`.
pub fn meta_path(trace_path: &Path) -> PathBuf {
    trace_path.with_extension("meta.json")
}

pub fn write_meta(trace_path: &Path, meta: &TraceMeta) -> Result<(), TraceError> {
    let json = serde_json::to_string_pretty(meta).expect("meta serializes");
    fs::write(meta_path(trace_path), json)?;
    Ok(())
}

/// Format with 6 significant digits, plain decimal notation.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0.000000".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Write one CSV table with a header row; numeric cells should already be
/// formatted (see [`format_float`]) so output is deterministic.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), TraceError> {
    let mut writer = csv::Writer::from_path(path).map_err(into_io)?;
    writer.write_record(header).map_err(into_io)?;
    for row in rows {
        writer.write_record(row).map_err(into_io)?;
    }
    writer.flush()?;
    Ok(())
}

/// Serialize a report as pretty JSON.
pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), TraceError> {
    let json = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, json)?;
    Ok(())
}

fn into_io(err: csv::Error) -> TraceError {
    TraceError::Io(std::io::Error::other(err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_row_pads_with_zeros() {
        let mut t = AttentionTrace::zeroed(1, 1, 2, 4);
        t.set_row(0, 0, 0, &[0.5, 0.5]);
        t.set_row(0, 0, 1, &[0.25, 0.25, 0.25, 0.25]);
        assert_eq!(t.row(0, 0, 0), &[0.5, 0.5, 0.0, 0.0]);
        assert_eq!(t.row(0, 0, 1), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn header_and_payload_sizes() {
        // L=1, H=1, steps=1, N=2: 24 header bytes + 8 payload bytes.
        let mut t = AttentionTrace::zeroed(1, 1, 1, 2);
        t.set_row(0, 0, 0, &[0.25, 0.75]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.sagt");
        write_trace(&t, &path).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), 24 + 8);
    }

    #[test]
    fn empty_trace_is_header_only() {
        let t = AttentionTrace::zeroed(2, 3, 0, 16);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.sagt");
        write_trace(&t, &path).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), 24);
        let back = read_trace(&path).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_float(0.123456789), "0.123457");
        assert_eq!(format_float(123.456789), "123.457");
        assert_eq!(format_float(1.0), "1.00000");
        assert_eq!(format_float(0.0), "0.000000");
        assert_eq!(format_float(-0.123456789), "-0.123457");
        assert_eq!(format_float(1234567.0), "1234567");
    }

    #[test]
    fn meta_sidecar_path() {
        assert_eq!(
            meta_path(Path::new("/tmp/run/trace.sagt")),
            PathBuf::from("/tmp/run/trace.meta.json")
        );
    }
}
