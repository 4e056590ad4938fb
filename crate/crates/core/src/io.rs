//! Operator containers: a flat little-endian binary layout and a JSON form
//! for small dimensions.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! | offset | size      | field                                  |
//! |--------|-----------|----------------------------------------|
//! | 0      | 4         | magic `HLOP`                           |
//! | 4      | 4 (u32)   | format version, currently 1            |
//! | 8      | 4 (u32)   | spatial dimension n                    |
//! | 12     | 4 (u32)   | points per axis N                      |
//! | 16     | 8 (f64)   | torus side L                           |
//! | 24     | 8 (u64)   | matrix dimension D = Nⁿ                |
//! | 32     | 4 (u32)   | label length b in bytes                |
//! | 36     | b         | label, UTF-8                           |
//! | 36 + b | 16·D²     | entries row-major, each (re, im) f64   |

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::GridSpec;
use crate::operator::Operator;

pub const MAGIC: [u8; 4] = *b"HLOP";
pub const FORMAT_VERSION: u32 = 1;
/// Largest D the JSON form accepts (D² entries as text gets big fast).
pub const JSON_MAX_DIM: usize = 256;
const MAX_LABEL: usize = 1 << 16;

fn fmt_err(msg: impl Into<String>) -> LabError {
    LabError::Format(msg.into())
}

pub fn write_operator<W: Write>(mut w: W, op: &Operator) -> Result<()> {
    let g = op.grid();
    let label = op.label.as_bytes();
    if label.len() > MAX_LABEL {
        return Err(fmt_err(format!("label of {} bytes exceeds {MAX_LABEL}", label.len())));
    }
    let mut head = Vec::with_capacity(36 + label.len());
    head.extend_from_slice(&MAGIC);
    head.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    head.extend_from_slice(&(g.n as u32).to_le_bytes());
    head.extend_from_slice(&(g.points as u32).to_le_bytes());
    head.extend_from_slice(&g.length.to_le_bytes());
    head.extend_from_slice(&(op.dim() as u64).to_le_bytes());
    head.extend_from_slice(&(label.len() as u32).to_le_bytes());
    head.extend_from_slice(label);
    w.write_all(&head)?;
    let mut body = Vec::with_capacity(16 * op.dim() * op.dim());
    for z in op.entries().iter() {
        body.extend_from_slice(&z.re.to_le_bytes());
        body.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

fn take<const K: usize, R: Read>(r: &mut R, what: &str) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => fmt_err(format!("truncated container while reading {what}")),
        _ => LabError::Io(e),
    })?;
    Ok(b)
}

/// Reads one operator; the grid is rebuilt through the usual validation
/// (without the default dimension cap) and must agree with the stored D.
pub fn read_operator<R: Read>(mut r: R) -> Result<Operator> {
    if take::<4, _>(&mut r, "magic")? != MAGIC {
        return Err(fmt_err("bad magic, not an operator container"));
    }
    let version = u32::from_le_bytes(take(&mut r, "version")?);
    if version != FORMAT_VERSION {
        return Err(fmt_err(format!("unsupported container version {version}")));
    }
    let n = u32::from_le_bytes(take(&mut r, "n")?) as usize;
    let points = u32::from_le_bytes(take(&mut r, "N")?) as usize;
    let length = f64::from_le_bytes(take(&mut r, "L")?);
    let d = u64::from_le_bytes(take(&mut r, "D")?);
    let grid = GridSpec::with_max_dim(n, points, length, usize::MAX)?;
    if d != grid.dim() as u64 {
        return Err(fmt_err(format!("header dimension {d} does not match grid {points}^{n}")));
    }
    let d = d as usize;
    let lab_len = u32::from_le_bytes(take(&mut r, "label length")?) as usize;
    if lab_len > MAX_LABEL {
        return Err(fmt_err(format!("label length {lab_len} exceeds {MAX_LABEL}")));
    }
    let mut lab = vec![0u8; lab_len];
    r.read_exact(&mut lab).map_err(|_| fmt_err("truncated container while reading label"))?;
    let label = String::from_utf8(lab).map_err(|_| fmt_err("label is not UTF-8"))?;
    let bytes = d.checked_mul(d).and_then(|x| x.checked_mul(16)).ok_or_else(|| fmt_err("dimension overflows"))?;
    let mut body = vec![0u8; bytes];
    r.read_exact(&mut body).map_err(|_| fmt_err(format!("truncated container: expected {bytes} entry bytes")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(fmt_err("trailing bytes after entries"));
    }
    let vals: Vec<C64> = body
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            C64::new(re, im)
        })
        .collect();
    let m = Array2::from_shape_vec((d, d), vals).map_err(|e| fmt_err(e.to_string()))?;
    Operator::new(grid, m, label)
}

pub fn save_operator(path: impl AsRef<Path>, op: &Operator) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_operator(std::io::BufWriter::new(f), op)
}

pub fn load_operator(path: impl AsRef<Path>) -> Result<Operator> {
    let f = std::fs::File::open(path)?;
    read_operator(std::io::BufReader::new(f))
}

/// JSON form: `{"grid": {...}, "label": "...", "entries": [[re, im], ...]}`
/// with entries row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    pub grid: GridSpec,
    pub label: String,
    pub entries: Vec<[f64; 2]>,
}

pub fn to_json(op: &Operator) -> Result<String> {
    if op.dim() > JSON_MAX_DIM {
        return Err(fmt_err(format!("JSON form is limited to D <= {JSON_MAX_DIM}, got {}", op.dim())));
    }
    let j = OperatorJson {
        grid: *op.grid(),
        label: op.label.clone(),
        entries: op.entries().iter().map(|z| [z.re, z.im]).collect(),
    };
    serde_json::to_string(&j).map_err(|e| fmt_err(e.to_string()))
}

pub fn from_json(s: &str) -> Result<Operator> {
    let j: OperatorJson = serde_json::from_str(s).map_err(|e| fmt_err(e.to_string()))?;
    let grid = GridSpec::new(j.grid.n, j.grid.points, j.grid.length)?;
    let d = grid.dim();
    if d > JSON_MAX_DIM {
        return Err(fmt_err(format!("JSON form is limited to D <= {JSON_MAX_DIM}, got {d}")));
    }
    if j.entries.len() != d * d {
        return Err(LabError::DimensionMismatch { left: j.entries.len(), right: d * d });
    }
    let m = Array2::from_shape_vec((d, d), j.entries.iter().map(|e| C64::new(e[0], e[1])).collect())
        .map_err(|e| fmt_err(e.to_string()))?;
    Operator::new(grid, m, j.label)
}
