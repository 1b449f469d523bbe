//! Chunked binary tensor container (`.lka` files).
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic "LKAC" | u32 version=1 | u32 entry count
//! per entry:  u16 name length | name bytes (UTF-8) | u8 dtype | u8 rank
//!             | u32 × rank dims | u64 payload offset (absolute)
//! payloads:   8-byte aligned, row-major element data
//! ```
//!
//! Round-trips are bit-exact for every dtype; trailing bytes after the last
//! payload are ignored with a warning recorded on the returned container.

use std::fmt;
use std::path::Path;

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"LKAC";
pub const VERSION: u32 = 1;

const ALIGN: usize = 8;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("bad magic: expected \"LKAC\", found {found:?}")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),
    #[error("duplicate entry name {0:?}")]
    DuplicateName(String),
    #[error("entry name is not valid UTF-8")]
    InvalidName,
    #[error("unknown dtype code {code} for entry {name:?}")]
    UnknownDtype { name: String, code: u8 },
    #[error("entry {name:?}: declared shape {shape:?} holds {expected} elements, data has {got}")]
    ElementCount {
        name: String,
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("truncated payload for entry {name:?}: expected {expected} bytes at offset {offset}, file has {available}")]
    Truncated {
        name: String,
        expected: usize,
        offset: u64,
        available: usize,
    },
    #[error("truncated header: {0}")]
    TruncatedHeader(&'static str),
    #[error("entry {name:?} holds {found}, expected {expected}")]
    DtypeMismatch {
        name: String,
        expected: Dtype,
        found: Dtype,
    },
    #[error("no entry named {0:?}")]
    MissingEntry(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
    I32,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 1,
            Dtype::F64 => 2,
            Dtype::I32 => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Dtype::F32),
            2 => Some(Dtype::F64),
            3 => Some(Dtype::I32),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 | Dtype::I32 => 4,
            Dtype::F64 => 8,
        }
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dtype::F32 => "float32",
            Dtype::F64 => "float64",
            Dtype::I32 => "int32",
        };
        f.write_str(s)
    }
}

/// Row-major element data of one entry.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    I32(Vec<i32>),
}

impl TensorData {
    pub fn dtype(&self) -> Dtype {
        match self {
            TensorData::F32(_) => Dtype::F32,
            TensorData::F64(_) => Dtype::F64,
            TensorData::I32(_) => Dtype::I32,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
            TensorData::I32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: TensorData,
}

/// An ordered set of named tensors.
#[derive(Debug, Clone, Default)]
pub struct TensorContainer {
    entries: Vec<TensorEntry>,
    /// Non-fatal issues noticed while reading (e.g. ignored trailing bytes).
    pub warnings: Vec<String>,
}

impl TensorContainer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[TensorEntry] {
        &self.entries
    }

    pub fn push(
        &mut self,
        name: impl Into<String>,
        shape: Vec<usize>,
        data: TensorData,
    ) -> Result<(), ContainerError> {
        let name = name.into();
        if self.entries.iter().any(|e| e.name == name) {
            return Err(ContainerError::DuplicateName(name));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(ContainerError::ElementCount {
                name,
                shape,
                expected,
                got: data.len(),
            });
        }
        self.entries.push(TensorEntry { name, shape, data });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&TensorEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    fn require(&self, name: &str) -> Result<&TensorEntry, ContainerError> {
        self.get(name)
            .ok_or_else(|| ContainerError::MissingEntry(name.to_string()))
    }

    pub fn f64s(&self, name: &str) -> Result<(&[usize], &[f64]), ContainerError> {
        let e = self.require(name)?;
        match &e.data {
            TensorData::F64(v) => Ok((&e.shape, v)),
            other => Err(ContainerError::DtypeMismatch {
                name: name.to_string(),
                expected: Dtype::F64,
                found: other.dtype(),
            }),
        }
    }

    pub fn f32s(&self, name: &str) -> Result<(&[usize], &[f32]), ContainerError> {
        let e = self.require(name)?;
        match &e.data {
            TensorData::F32(v) => Ok((&e.shape, v)),
            other => Err(ContainerError::DtypeMismatch {
                name: name.to_string(),
                expected: Dtype::F32,
                found: other.dtype(),
            }),
        }
    }

    pub fn i32s(&self, name: &str) -> Result<(&[usize], &[i32]), ContainerError> {
        let e = self.require(name)?;
        match &e.data {
            TensorData::I32(v) => Ok((&e.shape, v)),
            other => Err(ContainerError::DtypeMismatch {
                name: name.to_string(),
                expected: Dtype::I32,
                found: other.dtype(),
            }),
        }
    }

    /// Scalar convenience accessors (rank-0 or single-element entries).
    pub fn scalar_f64(&self, name: &str) -> Result<f64, ContainerError> {
        let (_, v) = self.f64s(name)?;
        v.first()
            .copied()
            .ok_or_else(|| ContainerError::ElementCount {
                name: name.to_string(),
                shape: vec![],
                expected: 1,
                got: 0,
            })
    }

    pub fn scalar_i32(&self, name: &str) -> Result<i32, ContainerError> {
        let (_, v) = self.i32s(name)?;
        v.first()
            .copied()
            .ok_or_else(|| ContainerError::ElementCount {
                name: name.to_string(),
                shape: vec![],
                expected: 1,
                got: 0,
            })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        // Fixed header + entry table, then aligned payloads.
        let mut table_len = MAGIC.len() + 4 + 4;
        for e in &self.entries {
            table_len += 2 + e.name.len() + 1 + 1 + 4 * e.shape.len() + 8;
        }

        let mut offsets = Vec::with_capacity(self.entries.len());
        let mut cursor = table_len;
        for e in &self.entries {
            cursor = align_up(cursor, ALIGN);
            offsets.push(cursor as u64);
            cursor += e.data.len() * e.data.dtype().size();
        }

        let mut out = Vec::with_capacity(cursor);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for (e, off) in self.entries.iter().zip(&offsets) {
            out.extend_from_slice(&(e.name.len() as u16).to_le_bytes());
            out.extend_from_slice(e.name.as_bytes());
            out.push(e.data.dtype().code());
            out.push(e.shape.len() as u8);
            for &d in &e.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            out.extend_from_slice(&off.to_le_bytes());
        }
        for (e, &off) in self.entries.iter().zip(&offsets) {
            out.resize(off as usize, 0);
            match &e.data {
                TensorData::F32(v) => {
                    for x in v {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                }
                TensorData::F64(v) => {
                    for x in v {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                }
                TensorData::I32(v) => {
                    for x in v {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ContainerError> {
        let mut pos = 0usize;
        let take =
            |pos: &mut usize, n: usize, what: &'static str| -> Result<&[u8], ContainerError> {
                if *pos + n > bytes.len() {
                    return Err(ContainerError::TruncatedHeader(what));
                }
                let s = &bytes[*pos..*pos + n];
                *pos += n;
                Ok(s)
            };

        let magic = take(&mut pos, 4, "magic")?;
        if magic != MAGIC {
            return Err(ContainerError::BadMagic {
                found: magic.to_vec(),
            });
        }
        let version = u32::from_le_bytes(take(&mut pos, 4, "version")?.try_into().unwrap());
        if version != VERSION {
            return Err(ContainerError::UnsupportedVersion(version));
        }
        let count = u32::from_le_bytes(take(&mut pos, 4, "entry count")?.try_into().unwrap());

        struct RawEntry {
            name: String,
            dtype: Dtype,
            shape: Vec<usize>,
            offset: u64,
        }

        let mut raw = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let name_len =
                u16::from_le_bytes(take(&mut pos, 2, "name length")?.try_into().unwrap()) as usize;
            let name_bytes = take(&mut pos, name_len, "name")?;
            let name = std::str::from_utf8(name_bytes)
                .map_err(|_| ContainerError::InvalidName)?
                .to_string();
            let code = take(&mut pos, 1, "dtype")?[0];
            let dtype = Dtype::from_code(code).ok_or(ContainerError::UnknownDtype {
                name: name.clone(),
                code,
            })?;
            let rank = take(&mut pos, 1, "rank")?[0] as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                let d = u32::from_le_bytes(take(&mut pos, 4, "dim")?.try_into().unwrap());
                shape.push(d as usize);
            }
            let offset = u64::from_le_bytes(take(&mut pos, 8, "offset")?.try_into().unwrap());
            raw.push(RawEntry {
                name,
                dtype,
                shape,
                offset,
            });
        }

        let mut container = TensorContainer::new();
        let mut payload_end = pos;
        for r in raw {
            let n: usize = r.shape.iter().product();
            let byte_len = n * r.dtype.size();
            let start = r.offset as usize;
            if start + byte_len > bytes.len() {
                return Err(ContainerError::Truncated {
                    name: r.name,
                    expected: byte_len,
                    offset: r.offset,
                    available: bytes.len().saturating_sub(start),
                });
            }
            let payload = &bytes[start..start + byte_len];
            let data = match r.dtype {
                Dtype::F32 => TensorData::F32(
                    payload
                        .chunks_exact(4)
                        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                ),
                Dtype::F64 => TensorData::F64(
                    payload
                        .chunks_exact(8)
                        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                ),
                Dtype::I32 => TensorData::I32(
                    payload
                        .chunks_exact(4)
                        .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                ),
            };
            payload_end = payload_end.max(start + byte_len);
            container.push(r.name, r.shape, data)?;
        }

        if bytes.len() > align_up(payload_end, ALIGN) {
            container.warnings.push(format!(
                "ignored {} trailing bytes after the last payload",
                bytes.len() - payload_end
            ));
        }
        Ok(container)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), ContainerError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, ContainerError> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }
}

fn align_up(x: usize, align: usize) -> usize {
    x.div_ceil(align) * align
}
