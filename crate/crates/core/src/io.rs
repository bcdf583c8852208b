//! Grid file formats: 8-bit portable graymaps and plain CSV matrices.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::PmfGrid;

/// Encodes `p` as a binary graymap scaled so the largest entry maps to 255.
///
/// Rows of the image are the first grid axis, so the header reads `ly lx`.
pub fn encode_pgm(p: &PmfGrid) -> Vec<u8> {
    let max = p.max();
    let mut out = format!("P5\n{} {}\n255\n", p.ly(), p.lx()).into_bytes();
    out.extend(p.values().iter().map(|&v| {
        if max > 0.0 {
            (255.0 * v / max).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}

pub fn write_pgm(p: &PmfGrid, path: &Path) -> Result<()> {
    fs::write(path, encode_pgm(p)).map_err(|e| Error::io(path, e))
}

/// One row per line, comma separated, shortest round-trip decimal form.
pub fn encode_csv_matrix(p: &PmfGrid) -> String {
    let mut s = String::with_capacity(p.len() * 24);
    for i in 0..p.lx() {
        for k in 0..p.ly() {
            if k > 0 {
                s.push(',');
            }
            write!(s, "{}", p.get(i, k)).unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn write_csv_matrix(p: &PmfGrid, path: &Path) -> Result<()> {
    fs::write(path, encode_csv_matrix(p)).map_err(|e| Error::io(path, e))
}

/// Raw nonnegative intensities read from a grid file, before normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct RawGrid {
    pub lx: usize,
    pub ly: usize,
    pub values: Vec<f64>,
}

impl RawGrid {
    pub fn normalize(self) -> Result<PmfGrid> {
        PmfGrid::normalize(self.lx, self.ly, self.values)
    }
}

/// Reads a graymap (`P5` or `P2`, values divided by maxval) or a CSV matrix.
pub fn read_grid_file(path: &Path) -> Result<RawGrid> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let malformed = |reason: String| Error::MalformedInput {
        path: path.to_path_buf(),
        reason,
    };
    let parsed = if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        parse_pgm(&bytes)
    } else {
        std::str::from_utf8(&bytes)
            .map_err(|_| "not valid UTF-8 text".to_string())
            .and_then(parse_csv_matrix)
    };
    parsed.map_err(malformed)
}

fn parse_csv_matrix(text: &str) -> std::result::Result<RawGrid, String> {
    let mut values = Vec::new();
    let mut ly = None;
    let mut lx = 0;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("line {}: cannot parse {:?}", line_no + 1, f.trim()))
            })
            .collect::<std::result::Result<_, _>>()?;
        match ly {
            None => ly = Some(row.len()),
            Some(n) if n != row.len() => {
                return Err(format!(
                    "line {}: expected {n} columns, got {}",
                    line_no + 1,
                    row.len()
                ))
            }
            _ => {}
        }
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(format!("line {}: entries must be finite and nonnegative", line_no + 1));
        }
        values.extend(row);
        lx += 1;
    }
    let ly = ly.ok_or_else(|| "empty matrix".to_string())?;
    Ok(RawGrid { lx, ly, values })
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<RawGrid, String> {
    let binary = bytes.starts_with(b"P5");
    let mut pos = 2;
    let mut header = [0usize; 3];
    for field in header.iter_mut() {
        *field = next_header_int(bytes, &mut pos)?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 {
        return Err("zero image dimension".into());
    }
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    let n = width * height;
    let samples: Vec<u8> = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err("missing raster".into());
        }
        let raster = &bytes[pos + 1..];
        if raster.len() != n {
            return Err(format!("expected {n} raster bytes, got {}", raster.len()));
        }
        raster.to_vec()
    } else {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            let x = next_header_int(bytes, &mut pos)?;
            if x > maxval {
                return Err(format!("sample {x} exceeds maxval {maxval}"));
            }
            v.push(x as u8);
        }
        v
    };
    let scale = maxval as f64;
    Ok(RawGrid {
        lx: height,
        ly: width,
        values: samples.iter().map(|&b| b as f64 / scale).collect(),
    })
}

/// Reads the next ASCII integer, skipping whitespace and `#` comments.
fn next_header_int(bytes: &[u8], pos: &mut usize) -> std::result::Result<usize, String> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&c| c != b'\n') {
                    *pos += 1;
                }
            }
            Some(c) if c.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err("truncated header".into()),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| format!("expected integer at byte {start}"))
}
