//! Plain-text point files.
//!
//! One point per line, coordinates separated by single spaces, `#` starts a
//! comment line. Values are written in Rust's shortest round-trip decimal
//! form, so reading a written file reproduces every coordinate bit for bit.

use std::io::{BufRead, Write};

use degeneracy::PointCloud;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XyzError {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

pub fn write_xyz<W: Write>(cloud: &PointCloud, mut out: W) -> std::io::Result<()> {
    let mut line = String::new();
    for p in cloud.iter() {
        line.clear();
        for (i, c) in p.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{c}"));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

pub fn read_xyz<R: BufRead>(input: R) -> Result<PointCloud, XyzError> {
    let mut cloud: Option<PointCloud> = None;
    let mut row = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| XyzError {
            line: lineno,
            reason: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        row.clear();
        for field in trimmed.split_whitespace() {
            let v: f64 = field.parse().map_err(|_| XyzError {
                line: lineno,
                reason: format!("cannot parse {field:?} as a number"),
            })?;
            row.push(v);
        }
        let target = match &mut cloud {
            Some(c) => c,
            None => cloud.insert(PointCloud::new(row.len()).map_err(|e| XyzError {
                line: lineno,
                reason: e.to_string(),
            })?),
        };
        if row.len() != target.dim() {
            return Err(XyzError {
                line: lineno,
                reason: format!("expected {} columns, found {}", target.dim(), row.len()),
            });
        }
        target.push_coords(&row).map_err(|e| XyzError {
            line: lineno,
            reason: e.to_string(),
        })?;
    }
    cloud.map_or_else(|| Ok(PointCloud::new(3).expect("dimension 3 is valid")), Ok)
}
