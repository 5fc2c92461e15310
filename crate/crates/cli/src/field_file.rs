//! Binary field files.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `PHWR` |
//! | 2 | version (`u16`, currently 1) |
//! | 4 | rows (`u32`) |
//! | 4 | cols (`u32`) |
//! | 2 | flags (`u16`; bit 0: ground truth present) |
//! | 4·rows·cols | wrapped phase, row-major `f32` |
//! | 4·rows·cols | ground truth cycle counts, row-major `i32` (flag bit 0 only) |
//! | rest | JSON metadata: `{"noise_variance", "surface", "seed"}` |

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unwrap_dd::phase::{Surface, WrappedField};
use unwrap_dd::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PHWR";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
const FLAG_TRUTH: u16 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Metadata {
    noise_variance: f64,
    surface: Option<Surface>,
    seed: Option<u64>,
}

pub fn encode(f: &WrappedField) -> Result<Vec<u8>> {
    let rows = u32::try_from(f.rows).map_err(|_| Error::InvalidParameter("too many rows".into()))?;
    let cols = u32::try_from(f.cols).map_err(|_| Error::InvalidParameter("too many columns".into()))?;
    if f.psi.len() != f.len() || f.truth_n.as_ref().is_some_and(|t| t.len() != f.len()) {
        return Err(Error::InvalidParameter("field arrays do not match its dimensions".into()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * f.len() + 64);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    let flags = if f.truth_n.is_some() { FLAG_TRUTH } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    for p in &f.psi {
        out.extend_from_slice(&p.to_le_bytes());
    }
    for n in f.truth_n.iter().flatten() {
        out.extend_from_slice(&n.to_le_bytes());
    }
    let meta = Metadata {
        noise_variance: f.noise_variance,
        surface: f.surface,
        seed: f.seed,
    };
    serde_json::to_writer(&mut out, &meta).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<WrappedField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::parse("offset 0", format!("file is {} bytes, shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::parse("offset 0", "bad magic, expected PHWR"));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let version = u16_at(4);
    if version != VERSION {
        return Err(Error::parse("offset 4", format!("unsupported version {version}")));
    }
    let (rows, cols) = (u32_at(6) as usize, u32_at(10) as usize);
    let flags = u16_at(14);
    if flags & !FLAG_TRUTH != 0 {
        return Err(Error::parse("offset 14", format!("unknown flags {flags:#06x}")));
    }
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::parse("offset 6", "dimensions overflow"))?;
    let arrays = if flags & FLAG_TRUTH != 0 { 2 } else { 1 };
    let body_end = len
        .checked_mul(4 * arrays)
        .and_then(|b| b.checked_add(HEADER_LEN))
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| {
            Error::parse(
                format!("offset {}", bytes.len()),
                format!("truncated: {rows}x{cols} field needs {} data bytes", 4 * arrays * len),
            )
        })?;
    let words = |start: usize| {
        bytes[start..start + 4 * len]
            .chunks_exact(4)
            .map(|c| <[u8; 4]>::try_from(c).expect("4 bytes"))
    };
    let psi: Vec<f32> = words(HEADER_LEN).map(f32::from_le_bytes).collect();
    let truth_n = (arrays == 2).then(|| words(HEADER_LEN + 4 * len).map(i32::from_le_bytes).collect());
    let meta: Metadata = serde_json::from_slice(&bytes[body_end..])
        .map_err(|e| Error::parse(format!("offset {body_end}"), format!("metadata: {e}")))?;
    Ok(WrappedField {
        rows,
        cols,
        psi,
        truth_n,
        noise_variance: meta.noise_variance,
        surface: meta.surface,
        seed: meta.seed,
    })
}

pub fn read_field(path: &Path) -> Result<WrappedField> {
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}: {location}", path.display()),
            message,
        },
        e => e,
    })
}

pub fn write_field(path: &Path, f: &WrappedField) -> Result<()> {
    write_atomic(path, &encode(f)?)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(dir, e))?;
    tmp.write_all(contents).map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

/// An I/O error annotated with its path.
pub fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}
