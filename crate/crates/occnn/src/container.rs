//! Little-endian framing shared by the feature, model and baseline files.
//!
//! Model and baseline files use one layout:
//!
//! ```text
//! magic[4] version:u16 [tag:u8]
//! k:u32   k × u32      configuration words
//! m:u32   m × f32      parameters
//! len:u32 len × u8     UTF-8 JSON metadata
//! ```

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const VERSION: u16 = 1;

/// Byte sink with typed little-endian writers.
#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Writer::default()
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Cursor over a file's bytes; every failure names the offending offset.
pub struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(path: &'a Path, bytes: &'a [u8]) -> Self {
        Reader { path, bytes, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Truncated {
                path: self.path.to_path_buf(),
                offset: self.bytes.len(),
                what,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u16(&mut self, what: &'static str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    pub fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub fn f32_array(&mut self, n: usize, what: &'static str) -> Result<Vec<f32>> {
        let len = n
            .checked_mul(4)
            .ok_or_else(|| self.corrupt(format!("{what} count {n} overflows")))?;
        let raw = self.take(len, what)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn bytes(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        self.take(n, what)
    }

    /// Checks the 4-byte magic and the version field.
    pub fn header(&mut self, magic: &'static str) -> Result<()> {
        let found = self.take(4, "magic")?;
        if found != magic.as_bytes() {
            return Err(Error::BadMagic {
                path: self.path.to_path_buf(),
                expected: magic,
                found: String::from_utf8_lossy(found).into_owned(),
            });
        }
        let version = self.u16("version")?;
        if version != VERSION {
            return Err(Error::Version {
                path: self.path.to_path_buf(),
                found: version,
            });
        }
        Ok(())
    }

    pub fn corrupt(&self, reason: impl Into<String>) -> Error {
        Error::Corrupt {
            path: self.path.to_path_buf(),
            offset: self.pos,
            reason: reason.into(),
        }
    }

    pub fn expect_end(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(self.corrupt(format!("{} trailing bytes", self.remaining())));
        }
        Ok(())
    }
}

/// Narrows to f32, refusing values that do not fit.
pub fn narrow(values: impl IntoIterator<Item = f64>, what: &str) -> Result<Vec<f32>> {
    values
        .into_iter()
        .map(|v| {
            let x = v as f32;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::Core(occnn_core::Error::Numerical(format!(
                    "{what} value {v} does not fit in f32"
                ))))
            }
        })
        .collect()
}

pub fn count_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Usage(format!("{what} count {n} exceeds the u32 range of the file format")))
}

/// The generic model container described in the module docs.
#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub tag: Option<u8>,
    pub config: Vec<u32>,
    pub params: Vec<f32>,
    pub metadata: Vec<u8>,
}

impl Container {
    pub fn encode(&self, magic: &'static str) -> Result<Vec<u8>> {
        let mut w = Writer::new();
        w.bytes(magic.as_bytes());
        w.u16(VERSION);
        if let Some(tag) = self.tag {
            w.u8(tag);
        }
        w.u32(count_u32(self.config.len(), "config word")?);
        self.config.iter().for_each(|&c| w.u32(c));
        w.u32(count_u32(self.params.len(), "parameter")?);
        self.params.iter().for_each(|&p| w.f32(p));
        w.u32(count_u32(self.metadata.len(), "metadata byte")?);
        w.bytes(&self.metadata);
        Ok(w.finish())
    }

    /// Byte offset of the first parameter.
    pub fn param_offset(&self) -> usize {
        6 + usize::from(self.tag.is_some()) + 4 + 4 * self.config.len() + 4
    }

    pub fn params(&self, path: &Path) -> Params<'_> {
        Params {
            path: path.to_path_buf(),
            values: &self.params,
            base: self.param_offset(),
            pos: 0,
        }
    }

    pub fn decode(path: &Path, bytes: &[u8], magic: &'static str, tagged: bool) -> Result<Self> {
        let mut r = Reader::new(path, bytes);
        r.header(magic)?;
        let tag = if tagged { Some(r.u8("method tag")?) } else { None };
        let k = r.u32("config length")? as usize;
        let config = (0..k).map(|_| r.u32("config word")).collect::<Result<Vec<_>>>()?;
        let m = r.u32("parameter count")? as usize;
        let param_start = r.offset();
        let params = r.f32_array(m, "parameters")?;
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::Corrupt {
                path: path.to_path_buf(),
                offset: param_start + 4 * i,
                reason: format!("non-finite parameter {}", params[i]),
            });
        }
        let len = r.u32("metadata length")? as usize;
        let metadata = r.bytes(len, "metadata")?.to_vec();
        r.expect_end()?;
        Ok(Container {
            tag,
            config,
            params,
            metadata,
        })
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Splits a flat parameter list into consecutive pieces of the given lengths.
pub struct Params<'a> {
    path: PathBuf,
    values: &'a [f32],
    base: usize,
    pos: usize,
}

impl Params<'_> {
    fn corrupt(&self, reason: String) -> Error {
        Error::Corrupt {
            path: self.path.clone(),
            offset: self.base + 4 * self.pos,
            reason,
        }
    }

    pub fn take(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        if self.values.len() - self.pos < n {
            return Err(self.corrupt(format!(
                "parameter block too short for {what}: need {n}, have {}",
                self.values.len() - self.pos
            )));
        }
        let out = self.values[self.pos..self.pos + n]
            .iter()
            .map(|&v| f64::from(v))
            .collect();
        self.pos += n;
        Ok(out)
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.values.len() {
            return Err(self.corrupt(format!("{} unused parameters", self.values.len() - self.pos)));
        }
        Ok(())
    }
}
