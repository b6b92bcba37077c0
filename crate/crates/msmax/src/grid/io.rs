//! Grid function file formats.
//!
//! Two self-describing on-disk forms share one header (dimension, per-axis
//! resolution exponents, box origin) followed by row-major cell values:
//!
//! * text — line-oriented, one value per line:
//!   ```text
//!   msmax-grid text 1
//!   n 2
//!   levels 3 3
//!   origin 0 0
//!   1.5
//!   ...
//!   ```
//! * binary — magic `MSMXGRD1`, `u8` dimension, per-axis `u8` exponents,
//!   per-axis little-endian `f64` origins, then little-endian `f64` values.
//!
//! [`read_grid`] sniffs the magic bytes and accepts either form.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::GridFunction;

const BINARY_MAGIC: &[u8; 8] = b"MSMXGRD1";
const TEXT_MAGIC: &str = "msmax-grid text 1";

/// Writes the line-oriented text form.
pub fn write_grid_text(f: &GridFunction, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(TEXT_MAGIC);
    out.push('\n');
    out.push_str(&format!("n {}\n", f.dims()));
    let levels: Vec<String> = f.levels().iter().map(|l| l.to_string()).collect();
    out.push_str(&format!("levels {}\n", levels.join(" ")));
    let origin: Vec<String> = f.origin().iter().map(|o| format!("{o:?}")).collect();
    out.push_str(&format!("origin {}\n", origin.join(" ")));
    for v in f.values() {
        // `{:?}` prints enough digits to round-trip f64 exactly.
        out.push_str(&format!("{v:?}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes the compact binary form.
pub fn write_grid_binary(f: &GridFunction, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + f.total_cells() * 8);
    buf.extend_from_slice(BINARY_MAGIC);
    buf.push(f.dims() as u8);
    buf.extend_from_slice(f.levels());
    for &o in f.origin() {
        buf.extend_from_slice(&o.to_le_bytes());
    }
    for &v in f.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Reads either on-disk form, detected by its magic header.
pub fn read_grid(path: &Path) -> Result<GridFunction> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        return read_binary(&bytes);
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Parse("grid file is neither binary nor UTF-8 text".into()))?;
    read_text(&text)
}

fn read_binary(bytes: &[u8]) -> Result<GridFunction> {
    let mut pos = BINARY_MAGIC.len();
    let n = *bytes
        .get(pos)
        .ok_or_else(|| Error::Parse("truncated binary grid header".into()))? as usize;
    pos += 1;
    if n == 0 || n > crate::grid::MAX_DIMS {
        return Err(Error::Parse(format!("unsupported dimension {n}")));
    }
    let levels = bytes
        .get(pos..pos + n)
        .ok_or_else(|| Error::Parse("truncated binary grid levels".into()))?
        .to_vec();
    pos += n;
    let mut origin = Vec::with_capacity(n);
    for _ in 0..n {
        let chunk = bytes
            .get(pos..pos + 8)
            .ok_or_else(|| Error::Parse("truncated binary grid origin".into()))?;
        origin.push(f64::from_le_bytes(chunk.try_into().unwrap()));
        pos += 8;
    }
    let body = &bytes[pos..];
    if !body.len().is_multiple_of(8) {
        return Err(Error::Parse(
            "binary grid payload is not f64-aligned".into(),
        ));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GridFunction::new(&levels, &origin, values)
}

fn read_text(text: &str) -> Result<GridFunction> {
    let mut lines = text.lines();
    let magic = lines
        .next()
        .ok_or_else(|| Error::Parse("empty grid file".into()))?;
    if magic.trim() != TEXT_MAGIC {
        return Err(Error::Parse(format!("unrecognised grid header `{magic}`")));
    }
    let n = parse_header_line(lines.next(), "n")?
        .first()
        .copied()
        .ok_or_else(|| Error::Parse("missing dimension".into()))? as usize;
    let levels: Vec<u8> = parse_header_line(lines.next(), "levels")?
        .iter()
        .map(|&v| v as u8)
        .collect();
    let origin = parse_header_floats(lines.next(), "origin")?;
    if levels.len() != n || origin.len() != n {
        return Err(Error::Parse(
            "levels/origin length does not match dimension".into(),
        ));
    }
    let mut values = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        values.push(
            line.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad cell value `{line}`")))?,
        );
    }
    GridFunction::new(&levels, &origin, values)
}

fn parse_header_line(line: Option<&str>, key: &str) -> Result<Vec<u64>> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing `{key}` line")))?;
    let rest = line
        .trim()
        .strip_prefix(key)
        .ok_or_else(|| Error::Parse(format!("expected `{key}` line, got `{line}`")))?;
    rest.split_whitespace()
        .map(|tok| {
            tok.parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad integer `{tok}` in `{key}` line")))
        })
        .collect()
}

fn parse_header_floats(line: Option<&str>, key: &str) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing `{key}` line")))?;
    let rest = line
        .trim()
        .strip_prefix(key)
        .ok_or_else(|| Error::Parse(format!("expected `{key}` line, got `{line}`")))?;
    rest.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad float `{tok}` in `{key}` line")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let dir = std::env::temp_dir().join("msmax-grid-io-text");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("g.txt");
        let f = GridFunction::new(
            &[2, 1],
            &[0.0, -1.0],
            vec![0.1, 2.0, 3.5, 0.0, 7.25, 1e-9, 4.0, 8.0],
        )
        .unwrap();
        write_grid_text(&f, &path).unwrap();
        let g = read_grid(&path).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn binary_round_trip() {
        let dir = std::env::temp_dir().join("msmax-grid-io-bin");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("g.bin");
        let f =
            GridFunction::new(&[3], &[0.5], (0..8).map(|i| (i as f64).sqrt()).collect()).unwrap();
        write_grid_binary(&f, &path).unwrap();
        let g = read_grid(&path).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn rejects_garbage() {
        let dir = std::env::temp_dir().join("msmax-grid-io-bad");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.txt");
        std::fs::write(&path, "not a grid\n1 2 3\n").unwrap();
        assert!(read_grid(&path).is_err());
    }
}
