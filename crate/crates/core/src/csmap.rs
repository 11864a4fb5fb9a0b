//! The CSMAP tensor container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       6     magic "CSMAP\0"
//! 6       2     version (u16) = 1
//! 8       4     height (u32)
//! 12      4     width (u32)
//! 16      4     channels (u32)
//! 20      4·n   n = h·w·c f32 values, row-major (y, x, channel)
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::maps::{PredictionMap, TaskSpec};

pub const MAGIC: &[u8; 6] = b"CSMAP\0";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 6 + 2 + 4 * 3;

pub fn encode_map(map: &PredictionMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * map.data().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for dim in [map.height(), map.width(), map.channels()] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for v in map.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_map(bytes: &[u8]) -> Result<PredictionMap> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "truncated header: {} bytes",
            bytes.len()
        )));
    }
    if &bytes[..6] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[6], bytes[7]]);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = |off: usize| {
        u32::from_le_bytes(bytes[off..off + 4].try_into().expect("4 bytes")) as usize
    };
    let (h, w, c) = (dim(8), dim(12), dim(16));
    let n = h
        .checked_mul(w)
        .and_then(|v| v.checked_mul(c))
        .ok_or_else(|| Error::Format("dimension overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != n * 4 {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            n * 4
        )));
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMap("non-finite value in payload".into()));
    }
    PredictionMap::new(h, w, c, data).map_err(|e| Error::Format(e.to_string()))
}

/// Write `map` to `path`. The map must be finite.
pub fn write_map(map: &PredictionMap, path: &Path) -> Result<()> {
    if !map.all_finite() {
        return Err(Error::InvalidMap("refusing to write non-finite map".into()));
    }
    let file = fs::File::create(path).map_err(|e| Error::write(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_map(map))
        .and_then(|_| w.flush())
        .map_err(|e| Error::write(path, e))
}

/// Validate against `task` before writing.
pub fn write_task_map(map: &PredictionMap, task: &TaskSpec, path: &Path) -> Result<()> {
    map.validate(task)?;
    write_map(map, path)
}

pub fn read_map(path: &Path) -> Result<PredictionMap> {
    let bytes = fs::read(path).map_err(|e| Error::read(path, e))?;
    decode_map(&bytes)
}

/// Read and conform to `task` (range check, simplex repair within tolerance).
pub fn read_task_map(path: &Path, task: &TaskSpec) -> Result<PredictionMap> {
    read_map(path)?.conform(task)
}
