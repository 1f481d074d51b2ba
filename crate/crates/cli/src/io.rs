//! Dataset and result serialization.
//!
//! Points travel as one data point per CSV row (no header) or in a
//! binary container with a "DRSC" magic that round-trips f64 bits
//! exactly. Result tables are RFC-4180 CSV with a header row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use drsc_core::{Error, Result};
use nalgebra::DMatrix;
use serde::Serialize;

const MAGIC: &[u8; 4] = b"DRSC";
const VERSION: u32 = 1;

/// One experiment measurement; field order fixes the CSV column order.
#[derive(Clone, Debug, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub algorithm: String,
    pub projection: String,
    pub p: usize,
    pub sigma: f64,
    pub trial_seed: u64,
    pub ce: f64,
    pub nfc: bool,
    pub projection_time_s: f64,
    pub adjacency_time_s: f64,
    pub spectral_time_s: f64,
}

/// Mean over all trials of one experiment cell.
#[derive(Clone, Debug, Serialize)]
pub struct MeanRow {
    pub experiment: String,
    pub algorithm: String,
    pub projection: String,
    pub p: usize,
    pub sigma: f64,
    pub trials: usize,
    pub mean_ce: f64,
    pub nfc_fraction: f64,
    pub mean_projection_time_s: f64,
    pub mean_adjacency_time_s: f64,
    pub mean_spectral_time_s: f64,
}

/// Overlay sample of the phase-transition curve.
#[derive(Clone, Debug, Serialize)]
pub struct CurveRow {
    pub sqrt_d_over_p: f64,
    pub sigma_star: f64,
}

/// One recovery-condition evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct TheoryRow {
    pub condition: String,
    pub p: usize,
    pub max_affinity: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub satisfied: bool,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
    Ok(())
}

/// Renders rows to CSV bytes without touching the filesystem; the
/// determinism self-check compares these buffers directly.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::Config(format!("csv finish failed: {e}")))
}

/// Writes points as CSV, one data point (matrix column) per row.
pub fn save_points_csv(path: &Path, points: &DMatrix<f64>) -> Result<()> {
    let file = File::create(path)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    let mut line = String::new();
    for j in 0..points.ncols() {
        line.clear();
        for i in 0..points.nrows() {
            if i > 0 {
                line.push(',');
            }
            // Shortest round-trip representation keeps load(save(x)) == x.
            line.push_str(ryu_format(points[(i, j)]).as_str());
        }
        line.push('\n');
        out.write_all(line.as_bytes())
            .map_err(|e| Error::Config(format!("write failed: {e}")))?;
    }
    out.flush()
        .map_err(|e| Error::Config(format!("flush failed: {e}")))?;
    Ok(())
}

fn ryu_format(v: f64) -> String {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.serialize(v).expect("f64 serializes");
        w.flush().expect("flush");
    }
    let s = String::from_utf8(buf).expect("utf8");
    s.trim_end().to_string()
}

/// Loads a CSV of points (one data point per row) into an m x N matrix
/// with points as columns.
pub fn load_points_csv(path: &Path) -> Result<DMatrix<f64>> {
    let file = File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| {
            Error::Validation(format!("{}:{}: read error: {e}", path.display(), lineno + 1))
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (col, field) in line.split(',').enumerate() {
            let v: f64 = field.trim().parse().map_err(|e| {
                Error::Validation(format!(
                    "{}:{}: field {}: {e}",
                    path.display(),
                    lineno + 1,
                    col + 1
                ))
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Validation(format!(
                    "{}:{}: expected {} fields, found {}",
                    path.display(),
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Validation(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let n = rows.len();
    let m = rows[0].len();
    Ok(DMatrix::from_fn(m, n, |i, j| rows[j][i]))
}

/// Binary container: magic, version, point count, dimension, then
/// row-major (point-major) little-endian f64 payload.
pub fn save_points_bin(path: &Path, points: &DMatrix<f64>) -> Result<()> {
    let file = File::create(path)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::Config(format!("write failed: {e}"));
    out.write_all(MAGIC).map_err(io_err)?;
    out.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    out.write_all(&(points.ncols() as u64).to_le_bytes())
        .map_err(io_err)?;
    out.write_all(&(points.nrows() as u64).to_le_bytes())
        .map_err(io_err)?;
    for j in 0..points.ncols() {
        for i in 0..points.nrows() {
            out.write_all(&points[(i, j)].to_le_bytes()).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

pub fn load_points_bin(path: &Path) -> Result<DMatrix<f64>> {
    let file = File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);
    let bad = |what: &str| Error::Validation(format!("{}: {what}", path.display()));
    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic bytes"));
    }
    let mut word4 = [0u8; 4];
    reader
        .read_exact(&mut word4)
        .map_err(|_| bad("truncated header"))?;
    let version = u32::from_le_bytes(word4);
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let mut word8 = [0u8; 8];
    reader
        .read_exact(&mut word8)
        .map_err(|_| bad("truncated header"))?;
    let n = u64::from_le_bytes(word8) as usize;
    reader
        .read_exact(&mut word8)
        .map_err(|_| bad("truncated header"))?;
    let m = u64::from_le_bytes(word8) as usize;
    if n == 0 || m == 0 {
        return Err(bad("empty matrix"));
    }
    let mut points = DMatrix::zeros(m, n);
    for j in 0..n {
        for i in 0..m {
            reader
                .read_exact(&mut word8)
                .map_err(|_| bad(&format!("truncated payload at point {j}")))?;
            points[(i, j)] = f64::from_le_bytes(word8);
        }
    }
    let mut rest = [0u8; 1];
    match reader.read(&mut rest) {
        Ok(0) => Ok(points),
        Ok(_) => Err(bad("trailing bytes after payload")),
        Err(e) => Err(Error::Config(format!("read failed: {e}"))),
    }
}

/// Loads points from either container, picking by file content.
pub fn load_points(path: &Path) -> Result<DMatrix<f64>> {
    let mut head = [0u8; 4];
    let mut file = File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let is_bin = matches!(file.read(&mut head), Ok(4) if &head == MAGIC);
    drop(file);
    if is_bin {
        load_points_bin(path)
    } else {
        load_points_csv(path)
    }
}

pub fn save_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let file = File::create(path)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    for l in labels {
        writeln!(out, "{l}").map_err(|e| Error::Config(format!("write failed: {e}")))?;
    }
    out.flush()
        .map_err(|e| Error::Config(format!("flush failed: {e}")))?;
    Ok(())
}

pub fn load_labels(path: &Path, expected_len: usize) -> Result<Vec<usize>> {
    let file = File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let mut labels = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| {
            Error::Validation(format!("{}:{}: read error: {e}", path.display(), lineno + 1))
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let l: usize = trimmed.parse().map_err(|e| {
            Error::Validation(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        labels.push(l);
    }
    if labels.len() != expected_len {
        return Err(Error::Validation(format!(
            "{}: {} labels for {} points",
            path.display(),
            labels.len(),
            expected_len
        )));
    }
    Ok(labels)
}
