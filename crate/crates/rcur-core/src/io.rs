//! Matrix and frame persistence: the rcur-bin binary format, CSV, and
//! 8-bit binary PGM frame sequences.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::DenseMatrix;

const MAGIC: &[u8; 4] = b"RCUR";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFormat {
    Csv,
    Bin,
}

impl MatrixFormat {
    /// Guesses the format from a path extension; `.csv` is CSV, anything
    /// else is treated as rcur-bin.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Bin,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

pub fn save_matrix(a: &DenseMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Bin => save_bin(a, path),
        MatrixFormat::Csv => save_csv(a, path),
    }
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<DenseMatrix> {
    match format {
        MatrixFormat::Bin => load_bin(path),
        MatrixFormat::Csv => load_csv(path),
    }
}

fn save_bin(a: &DenseMatrix, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| io_err(path, e));
    write(MAGIC)?;
    write(&VERSION.to_le_bytes())?;
    write(&(a.rows() as u64).to_le_bytes())?;
    write(&(a.cols() as u64).to_le_bytes())?;
    for &x in a.data() {
        write(&x.to_le_bytes())?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn load_bin(path: &Path) -> Result<DenseMatrix> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.len() < 24 {
        return Err(parse_err(
            path,
            format!("header needs 24 bytes, file has {}", bytes.len()),
        ));
    }
    if &bytes[0..4] != MAGIC {
        return Err(parse_err(path, "bad magic, expected \"RCUR\""));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(parse_err(path, format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let need = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(24))
        .ok_or_else(|| parse_err(path, "dimension overflow"))?;
    if bytes.len() != need {
        return Err(parse_err(
            path,
            format!(
                "payload truncated: {rows}x{cols} needs {need} bytes, file has {} (missing {})",
                bytes.len(),
                need.saturating_sub(bytes.len())
            ),
        ));
    }
    let data: Vec<f64> = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseMatrix::new(rows, cols, data)
}

fn save_csv(a: &DenseMatrix, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for i in 0..a.rows() {
        let line = a
            .row(i)
            .iter()
            // 17 significant digits round-trip every f64.
            .map(|x| format!("{x:.17e}"))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{line}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn load_csv(path: &Path) -> Result<DenseMatrix> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                parse_err(path, format!("line {}: bad number {field:?}", lineno + 1))
            })?;
            data.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(parse_err(
                    path,
                    format!("line {}: {count} fields, expected {c}", lineno + 1),
                ));
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse_err(path, "empty file"))?;
    DenseMatrix::new(rows, cols, data)
}

/// One grayscale 8-bit frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
}

pub fn save_pgm(frame: &Frame, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    write!(w, "P5\n{} {}\n255\n", frame.width, frame.height).map_err(|e| io_err(path, e))?;
    w.write_all(&frame.pixels).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

pub fn load_pgm(path: &Path) -> Result<Frame> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let mut pos = 0;
    let mut token = |bytes: &[u8]| -> Result<String> {
        // Skip whitespace and '#' comment lines between header tokens.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err(path, "unexpected end of header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token(&bytes)? != "P5" {
        return Err(parse_err(path, "not a binary PGM (P5) file"));
    }
    let width: usize = token(&bytes)?
        .parse()
        .map_err(|_| parse_err(path, "bad width"))?;
    let height: usize = token(&bytes)?
        .parse()
        .map_err(|_| parse_err(path, "bad height"))?;
    let maxval: usize = token(&bytes)?
        .parse()
        .map_err(|_| parse_err(path, "bad maxval"))?;
    if maxval != 255 {
        return Err(parse_err(path, format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = width * height;
    if bytes.len() < pos + need {
        return Err(parse_err(
            path,
            format!(
                "raster truncated: needs {need} bytes, has {} (missing {})",
                bytes.len().saturating_sub(pos),
                pos + need - bytes.len()
            ),
        ));
    }
    Ok(Frame {
        height,
        width,
        pixels: bytes[pos..pos + need].to_vec(),
    })
}

fn pgm_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("pgm"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Stacks the lexicographically ordered PGM frames of a directory as
/// columns: column j holds frame j's pixels in row-major order. Returns
/// the matrix with the common frame height and width.
pub fn frames_to_matrix(dir: &Path) -> Result<(DenseMatrix, usize, usize)> {
    let paths = pgm_paths(dir)?;
    if paths.is_empty() {
        return Err(parse_err(dir, "no .pgm frames found"));
    }
    let first = load_pgm(&paths[0])?;
    let (h, w) = (first.height, first.width);
    let pixels = h * w;
    let mut out = DenseMatrix::zeros(pixels, paths.len());
    for (j, p) in paths.iter().enumerate() {
        let f = load_pgm(p)?;
        if f.height != h || f.width != w {
            return Err(parse_err(
                p,
                format!("frame is {}x{}, expected {h}x{w}", f.height, f.width),
            ));
        }
        for (i, &px) in f.pixels.iter().enumerate() {
            out.set(i, j, px as f64);
        }
    }
    Ok((out, h, w))
}

fn quantize(x: f64) -> u8 {
    let clamped = x.clamp(0.0, 255.0);
    // Round half to even so quantization is bias-free and round-trips
    // integer-valued inputs bit-exactly.
    let floor = clamped.floor();
    let frac = clamped - floor;
    let rounded = if frac > 0.5 {
        floor + 1.0
    } else if frac < 0.5 {
        floor
    } else if (floor as u64) % 2 == 0 {
        floor
    } else {
        floor + 1.0
    };
    rounded as u8
}

/// Writes each column of `a` as a PGM frame `frame_XXXX.pgm` in `out_dir`,
/// clamping to [0, 255] and rounding half to even.
pub fn matrix_to_frames(a: &DenseMatrix, height: usize, width: usize, out_dir: &Path) -> Result<()> {
    if height * width != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{height}x{width} frames need {} rows, matrix has {}",
            height * width,
            a.rows()
        )));
    }
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    for j in 0..a.cols() {
        let pixels: Vec<u8> = (0..a.rows()).map(|i| quantize(a.get(i, j))).collect();
        let frame = Frame {
            height,
            width,
            pixels,
        };
        save_pgm(&frame, &out_dir.join(format!("frame_{j:04}.pgm")))?;
    }
    Ok(())
}
