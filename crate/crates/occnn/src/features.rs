//! Feature files: the OCFV binary format and headerless CSV.
//!
//! OCFV layout: `"OCFV" version:u16 n:u32 d:u32` followed by `n·d` f32
//! values, row-major, all little-endian. Loading widens to f64; saving
//! narrows back, so save → load → save is byte-identical.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use occnn_core::data::FeatureSet;
use occnn_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::container::{count_u32, narrow, read_file, write_file, Reader, Writer, VERSION};
use crate::error::{Error, Result};

pub const OCFV_MAGIC: &str = "OCFV";
const OCFV_HEADER: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFormat {
    Ocfv,
    Csv,
}

impl FeatureFormat {
    /// `.csv` means CSV; anything else is read as OCFV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FeatureFormat::Csv,
            _ => FeatureFormat::Ocfv,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            FeatureFormat::Ocfv => "ocfv",
            FeatureFormat::Csv => "csv",
        }
    }
}

impl FromStr for FeatureFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ocfv" | "binary" => Ok(FeatureFormat::Ocfv),
            "csv" => Ok(FeatureFormat::Csv),
            other => Err(format!("unknown feature format {other:?} (expected ocfv or csv)")),
        }
    }
}

fn source_tag(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn encode_ocfv(fs: &FeatureSet) -> Result<Vec<u8>> {
    let mut w = Writer::new();
    w.bytes(OCFV_MAGIC.as_bytes());
    w.u16(VERSION);
    w.u32(count_u32(fs.n(), "row")?);
    w.u32(count_u32(fs.d(), "column")?);
    for v in narrow(fs.data.as_slice().iter().copied(), "feature")? {
        w.f32(v);
    }
    Ok(w.finish())
}

pub fn decode_ocfv(path: &Path, bytes: &[u8]) -> Result<FeatureSet> {
    let mut r = Reader::new(path, bytes);
    r.header(OCFV_MAGIC)?;
    let n = r.u32("row count")? as usize;
    let d = r.u32("column count")? as usize;
    let count = n
        .checked_mul(d)
        .ok_or_else(|| r.corrupt(format!("{n}x{d} payload does not fit in memory")))?;
    let values = r.f32_array(count, "payload")?;
    r.expect_end()?;
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Corrupt {
            path: path.to_path_buf(),
            offset: OCFV_HEADER + 4 * i,
            reason: format!("non-finite value {} at row {}, column {}", values[i], i / d, i % d),
        });
    }
    let data = Matrix::from_vec(n, d, values.into_iter().map(f64::from).collect())?;
    Ok(FeatureSet::new(data, source_tag(path)))
}

pub fn decode_csv(path: &Path, text: &str) -> Result<FeatureSet> {
    let mut values = Vec::new();
    let mut d = None;
    let mut n = 0;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            reason,
        };
        let start = values.len();
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("cannot parse {field:?} as a number")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite value {field:?}")));
            }
            values.push(v);
        }
        let width = values.len() - start;
        match d {
            None => d = Some(width),
            Some(w) if w != width => {
                return Err(parse_err(format!("expected {w} values, found {width}")));
            }
            _ => {}
        }
        n += 1;
    }
    let data = Matrix::from_vec(n, d.unwrap_or(0), values)?;
    Ok(FeatureSet::new(data, source_tag(path)))
}

/// One row per line, values in shortest round-trip form.
pub fn encode_csv(fs: &FeatureSet) -> String {
    let mut out = String::new();
    for row in fs.data.row_iter() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn load_feature_file(path: &Path, format: FeatureFormat) -> Result<FeatureSet> {
    let bytes = read_file(path)?;
    match format {
        FeatureFormat::Ocfv => decode_ocfv(path, &bytes),
        FeatureFormat::Csv => {
            let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: 1 + e.as_bytes()[..e.utf8_error().valid_up_to()]
                    .iter()
                    .filter(|&&b| b == b'\n')
                    .count(),
                reason: "invalid UTF-8".into(),
            })?;
            decode_csv(path, &text)
        }
    }
}

/// Writes `fs`; an existing file is replaced only when `overwrite` is set.
pub fn save_feature_file(fs: &FeatureSet, path: &Path, format: FeatureFormat, overwrite: bool) -> Result<()> {
    if !overwrite && path.exists() {
        return Err(Error::Usage(format!("{} already exists", path.display())));
    }
    match format {
        FeatureFormat::Ocfv => write_file(path, &encode_ocfv(fs)?),
        FeatureFormat::Csv => write_file(path, encode_csv(fs).as_bytes()),
    }
}
