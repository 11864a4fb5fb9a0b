//! CSPRM parameter checkpoints.
//!
//! ```text
//! "CSPRM\0"            magic (6 bytes)
//! u16                  version = 1
//! u8                   arch tag (0 patch-linear, 1 shallow-conv)
//! u8                   destination kind (0 regression, 1 classification)
//! u32 u32              source / destination channels
//! u32 + utf8           source task name
//! u32 + utf8           destination task name
//! u32                  parameter count n
//! n × f32              parameters
//! ```
//! All integers and floats little-endian.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::maps::{TaskKind, TaskSpec};

use super::model::{Arch, EdgeModel};

pub const MAGIC: &[u8; 6] = b"CSPRM\0";
pub const VERSION: u16 = 1;

pub fn encode_model(model: &EdgeModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(model.arch.tag());
    out.push(u8::from(model.dst.is_classification()));
    out.extend_from_slice(&(model.src.channels as u32).to_le_bytes());
    out.extend_from_slice(&(model.dst.channels as u32).to_le_bytes());
    for name in [&model.src.name, &model.dst.name] {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    out.extend_from_slice(&(model.param_count() as u32).to_le_bytes());
    for p in model.params() {
        out.extend_from_slice(&(*p as f32).to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("truncated checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format("bad utf-8 name".into()))
    }
}

/// Decode a checkpoint. Source kind is not stored; sources are assumed
/// regression unless `src_kind` says otherwise.
pub fn decode_model(bytes: &[u8], src_kind: TaskKind) -> Result<EdgeModel> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(6)? != MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    let version = u16::from_le_bytes(cur.take(2)?.try_into().expect("2 bytes"));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let arch = Arch::from_tag(cur.u8()?).ok_or_else(|| Error::Format("unknown arch tag".into()))?;
    let dst_kind = match cur.u8()? {
        0 => TaskKind::Regression,
        1 => TaskKind::Classification,
        k => return Err(Error::Format(format!("unknown task kind {k}"))),
    };
    let src_c = cur.u32()? as usize;
    let dst_c = cur.u32()? as usize;
    let src_name = cur.string()?;
    let dst_name = cur.string()?;
    let n = cur.u32()? as usize;
    let raw = cur.take(n.checked_mul(4).ok_or_else(|| Error::Format("size overflow".into()))?)?;
    if cur.pos != bytes.len() {
        return Err(Error::Format("trailing bytes in checkpoint".into()));
    }
    let params = raw
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes(b.try_into().expect("4 bytes"))))
        .collect();
    let src = TaskSpec::new(src_name, src_c, src_kind).map_err(|e| Error::Format(e.to_string()))?;
    let dst = TaskSpec::new(dst_name, dst_c, dst_kind).map_err(|e| Error::Format(e.to_string()))?;
    EdgeModel::with_params(src, dst, arch, params).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_model(model: &EdgeModel, path: &Path) -> Result<()> {
    fs::write(path, encode_model(model)).map_err(|e| Error::write(path, e))
}

pub fn load_model(path: &Path, src_kind: TaskKind) -> Result<EdgeModel> {
    let bytes = fs::read(path).map_err(|e| Error::read(path, e))?;
    decode_model(&bytes, src_kind)
}
