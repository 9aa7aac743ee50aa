//! Flat little-endian tensor dump with a text header.
//!
//! Layout:
//!
//! ```text
//! LDTENSOR 1
//! meta <key> <value to end of line>
//! tensor <name> <f32|f64> <d0>x<d1>x... <byte offset> <byte length>
//! end
//! <payload>
//! ```
//!
//! Offsets are relative to the first payload byte. Values are stored as
//! IEEE-754 little-endian, so a write/read cycle is bit-exact.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const MAGIC: &str = "LDTENSOR 1";

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dtype(&self) -> &'static str {
        match self {
            TensorData::F32(_) => "f32",
            TensorData::F64(_) => "f64",
        }
    }

    fn byte_len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len() * 4,
            TensorData::F64(v) => v.len() * 8,
        }
    }

    fn write_le(&self, out: &mut Vec<u8>) {
        match self {
            TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: TensorData,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TensorFile {
    pub meta: BTreeMap<String, String>,
    pub tensors: Vec<Tensor>,
}

impl TensorFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::TensorFormat(format!("missing meta key {key}")))
    }

    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.meta(key)?;
        raw.parse()
            .map_err(|_| Error::TensorFormat(format!("meta {key}={raw} does not parse")))
    }

    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, data: TensorData) {
        self.tensors.push(Tensor {
            name: name.into(),
            shape,
            data,
        });
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::TensorFormat(format!("missing tensor {name}")))
    }

    pub fn get_f32(&self, name: &str, shape: &[usize]) -> Result<&[f32]> {
        let t = self.get(name)?;
        check_shape(t, shape)?;
        match &t.data {
            TensorData::F32(v) => Ok(v),
            TensorData::F64(_) => Err(Error::TensorFormat(format!("{name}: expected f32"))),
        }
    }

    pub fn get_f64(&self, name: &str, shape: &[usize]) -> Result<&[f64]> {
        let t = self.get(name)?;
        check_shape(t, shape)?;
        match &t.data {
            TensorData::F64(v) => Ok(v),
            TensorData::F32(_) => Err(Error::TensorFormat(format!("{name}: expected f64"))),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut header = String::new();
        header.push_str(MAGIC);
        header.push('\n');
        for (k, v) in &self.meta {
            if k.is_empty() || k.contains(char::is_whitespace) || v.contains('\n') {
                return Err(Error::TensorFormat(format!("unencodable meta entry {k:?}")));
            }
            header.push_str(&format!("meta {k} {v}\n"));
        }
        let mut offset = 0usize;
        for t in &self.tensors {
            if t.name.is_empty() || t.name.contains(char::is_whitespace) {
                return Err(Error::TensorFormat(format!("unencodable tensor name {:?}", t.name)));
            }
            if t.shape.iter().product::<usize>() != t.data.len() {
                return Err(Error::TensorFormat(format!("{}: shape/data length mismatch", t.name)));
            }
            let dims = if t.shape.is_empty() {
                "scalar".to_string()
            } else {
                t.shape.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
            };
            let len = t.data.byte_len();
            header.push_str(&format!("tensor {} {} {} {} {}\n", t.name, t.data.dtype(), dims, offset, len));
            offset += len;
        }
        header.push_str("end\n");
        let mut out = header.into_bytes();
        out.reserve(offset);
        for t in &self.tensors {
            t.data.write_le(&mut out);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut file = TensorFile::new();
        let mut pos = 0usize;
        let next_line = |pos: &mut usize| -> Result<&str> {
            let rest = &bytes[*pos..];
            let nl = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| Error::TensorFormat("unterminated header".into()))?;
            let line = std::str::from_utf8(&rest[..nl])
                .map_err(|_| Error::TensorFormat("header is not UTF-8".into()))?;
            *pos += nl + 1;
            Ok(line)
        };
        if next_line(&mut pos)? != MAGIC {
            return Err(Error::TensorFormat("bad magic".into()));
        }
        let mut entries = Vec::new();
        loop {
            let line = next_line(&mut pos)?;
            if line == "end" {
                break;
            }
            if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                file.meta.insert(k.to_string(), v.to_string());
            } else if let Some(rest) = line.strip_prefix("tensor ") {
                let fields: Vec<&str> = rest.split(' ').collect();
                if fields.len() != 5 {
                    return Err(Error::TensorFormat(format!("bad tensor line {line:?}")));
                }
                let shape = if fields[2] == "scalar" {
                    Vec::new()
                } else {
                    fields[2]
                        .split('x')
                        .map(|d| d.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| Error::TensorFormat(format!("bad shape in {line:?}")))?
                };
                let offset: usize = fields[3]
                    .parse()
                    .map_err(|_| Error::TensorFormat(format!("bad offset in {line:?}")))?;
                let len: usize = fields[4]
                    .parse()
                    .map_err(|_| Error::TensorFormat(format!("bad length in {line:?}")))?;
                entries.push((fields[0].to_string(), fields[1].to_string(), shape, offset, len));
            } else {
                return Err(Error::TensorFormat(format!("unknown header line {line:?}")));
            }
        }
        let payload = &bytes[pos..];
        for (name, dtype, shape, offset, len) in entries {
            let end = offset
                .checked_add(len)
                .filter(|&e| e <= payload.len())
                .ok_or_else(|| Error::TensorFormat(format!("{name}: payload out of bounds")))?;
            let raw = &payload[offset..end];
            let count: usize = shape.iter().product();
            let data = match dtype.as_str() {
                "f32" if len == count * 4 => TensorData::F32(
                    raw.chunks_exact(4)
                        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                ),
                "f64" if len == count * 8 => TensorData::F64(
                    raw.chunks_exact(8)
                        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                ),
                _ => return Err(Error::TensorFormat(format!("{name}: bad dtype or length"))),
            };
            file.tensors.push(Tensor { name, shape, data });
        }
        Ok(file)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn check_shape(t: &Tensor, shape: &[usize]) -> Result<()> {
    if t.shape != shape {
        return Err(Error::TensorFormat(format!(
            "{}: expected shape {:?}, found {:?}",
            t.name, shape, t.shape
        )));
    }
    Ok(())
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex_digest(Sha256::digest(bytes).as_slice())
}

pub(crate) fn hex_digest(digest: &[u8]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Incremental SHA-256 over float slices in little-endian byte order.
#[derive(Default)]
pub(crate) struct FloatHasher(Sha256);

impl FloatHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.0.update((s.len() as u64).to_le_bytes());
        self.0.update(s.as_bytes());
        self
    }

    pub fn f32s<'a>(&mut self, xs: impl IntoIterator<Item = &'a f32>) -> &mut Self {
        for x in xs {
            self.0.update(x.to_le_bytes());
        }
        self
    }

    pub fn f64s<'a>(&mut self, xs: impl IntoIterator<Item = &'a f64>) -> &mut Self {
        for x in xs {
            self.0.update(x.to_le_bytes());
        }
        self
    }

    pub fn finish(self) -> String {
        hex_digest(self.0.finalize().as_slice())
    }
}
