//! Loading, validation, and persistence of activation matrices.
//!
//! Two interchange formats are supported: NPY (versions 1.0/2.0,
//! little-endian `f4`/`f8`, C order, exactly 2-D) and plain CSV with an
//! optional header row. `f4` payloads are widened to `f64` on load; all
//! downstream math is double precision.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// File format for matrix persistence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Npy,
    Csv,
}

impl Format {
    /// Guess the format from a path extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("npy") => Format::Npy,
            _ => Format::Csv,
        }
    }
}

/// A real `n x m` activation matrix: rows are samples/frames, columns are
/// neurons/units.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    data: DMatrix<f64>,
    source: String,
}

impl ActivationMatrix {
    /// Validate and wrap a matrix. All entries must be finite and both
    /// dimensions at least 1.
    pub fn new(data: DMatrix<f64>, source: impl Into<String>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::value("matrix must have at least one row and one column"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::value("matrix contains non-finite entries"));
        }
        Ok(ActivationMatrix { data, source: source.into() })
    }

    /// Number of rows (samples/frames).
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    /// Number of columns (neurons/units).
    pub fn m(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

/// Ground-truth variables annotating an [`ActivationMatrix`] row-for-row,
/// e.g. stimulus coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub values: DMatrix<f64>,
    pub names: Vec<String>,
}

impl LabeledSeries {
    pub fn new(values: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::dimension(format!(
                "{} names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        Ok(LabeledSeries { values, names })
    }
}

/// Load a 2-D matrix from `path`. 1-D arrays are rejected, not reshaped.
pub fn load_matrix(path: &Path, format: Format) -> Result<ActivationMatrix> {
    let data = match format {
        Format::Npy => read_npy(path)?,
        Format::Csv => read_csv_raw(path)?.0,
    };
    ActivationMatrix::new(data, path.display().to_string())
}

/// Save a matrix to `path`. NPY round-trips bitwise; CSV round-trips
/// exactly as well (shortest round-trip float formatting).
pub fn save_matrix(matrix: &ActivationMatrix, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Npy => write_npy(matrix.data(), path),
        Format::Csv => write_csv_raw(matrix.data(), None, path),
    }
}

/// Load a labeled series from CSV. Column names come from the header row
/// when present, otherwise `c0, c1, ...`.
pub fn load_series(path: &Path) -> Result<LabeledSeries> {
    let (values, header) = read_csv_raw(path)?;
    let names = match header {
        Some(h) => h,
        None => (0..values.ncols()).map(|i| format!("c{i}")).collect(),
    };
    LabeledSeries::new(values, names)
}

/// Save a labeled series as CSV with a header row.
pub fn save_series(series: &LabeledSeries, path: &Path) -> Result<()> {
    write_csv_raw(&series.values, Some(&series.names), path)
}

// ---------------------------------------------------------------------------
// NPY
// ---------------------------------------------------------------------------

const NPY_MAGIC: &[u8] = b"\x93NUMPY";

fn read_npy(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path)?;
    parse_npy(&bytes)
}

fn parse_npy(bytes: &[u8]) -> Result<DMatrix<f64>> {
    if bytes.len() < 10 || &bytes[..6] != NPY_MAGIC {
        return Err(Error::format("missing NPY magic"));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (header_len, header_start) = match (major, minor) {
        (1, 0) => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        (2, 0) => {
            if bytes.len() < 12 {
                return Err(Error::format("truncated NPY v2 header"));
            }
            let len = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
            (len, 12)
        }
        _ => return Err(Error::format(format!("unsupported NPY version {major}.{minor}"))),
    };
    let header_end = header_start + header_len;
    if bytes.len() < header_end {
        return Err(Error::format("truncated NPY header"));
    }
    let header = std::str::from_utf8(&bytes[header_start..header_end])
        .map_err(|_| Error::format("NPY header is not valid UTF-8"))?;

    let descr = header_field(header, "descr")?;
    let itemsize = match descr.trim_matches(|c| c == '\'' || c == '"') {
        "<f4" => 4,
        "<f8" => 8,
        other => return Err(Error::format(format!("unsupported dtype {other}"))),
    };
    let fortran = header_field(header, "fortran_order")?;
    if fortran.trim() != "False" {
        return Err(Error::format("fortran_order arrays are not supported"));
    }
    let shape = header_field(header, "shape")?;
    let dims = parse_shape(&shape)?;
    if dims.len() != 2 {
        return Err(Error::format(format!("expected a 2-D array, got {}-D", dims.len())));
    }
    let (n, m) = (dims[0], dims[1]);
    let payload = &bytes[header_end..];
    let expected = n
        .checked_mul(m)
        .and_then(|e| e.checked_mul(itemsize))
        .ok_or_else(|| Error::format("shape overflow"))?;
    if payload.len() != expected {
        return Err(Error::format(format!(
            "payload is {} bytes, header implies {}",
            payload.len(),
            expected
        )));
    }

    // C order: row-major payload.
    let mut data = DMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            let off = (i * m + j) * itemsize;
            let v = if itemsize == 4 {
                f32::from_le_bytes(payload[off..off + 4].try_into().unwrap()) as f64
            } else {
                f64::from_le_bytes(payload[off..off + 8].try_into().unwrap())
            };
            data[(i, j)] = v;
        }
    }
    Ok(data)
}

/// Extract the value string for `key` from a python-dict-literal header.
fn header_field(header: &str, key: &str) -> Result<String> {
    let needle = format!("'{key}':");
    let start = header
        .find(&needle)
        .ok_or_else(|| Error::format(format!("header missing key {key}")))?
        + needle.len();
    let rest = &header[start..];
    // Value runs to the matching top-level comma or closing brace. Only the
    // shape tuple contains nested parens.
    let mut depth = 0usize;
    let mut end = rest.len();
    for (i, c) in rest.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' | '}' if depth == 0 => {
                end = i;
                break;
            }
            _ => {}
        }
    }
    Ok(rest[..end].trim().to_string())
}

fn parse_shape(shape: &str) -> Result<Vec<usize>> {
    let inner = shape
        .trim()
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::format(format!("bad shape tuple {shape}")))?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::format(format!("bad shape entry {s}")))
        })
        .collect()
}

fn write_npy(data: &DMatrix<f64>, path: &Path) -> Result<()> {
    let mut header = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {}), }}",
        data.nrows(),
        data.ncols()
    );
    // Pad so magic + version + length field + header is a multiple of 64,
    // terminated by newline.
    let prefix = NPY_MAGIC.len() + 2 + 2;
    let total = prefix + header.len() + 1;
    let pad = (64 - total % 64) % 64;
    for _ in 0..pad {
        header.push(' ');
    }
    header.push('\n');

    let mut out = Vec::with_capacity(prefix + header.len() + data.len() * 8);
    out.extend_from_slice(NPY_MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for i in 0..data.nrows() {
        for j in 0..data.ncols() {
            out.extend_from_slice(&data[(i, j)].to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Read a CSV matrix. Returns the data and the header row, if one was
/// detected (any field of the first line failing to parse as a float).
pub(crate) fn read_csv_raw(path: &Path) -> Result<(DMatrix<f64>, Option<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut header: Option<Vec<String>> = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(vals) => rows.push(vals),
            Err(_) if rows.is_empty() && header.is_none() => {
                header = Some(fields.into_iter().map(String::from).collect());
            }
            Err(_) => {
                return Err(Error::format(format!(
                    "line {}: non-numeric field",
                    lineno + 1
                )))
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::format("no data rows"));
    }
    let m = rows[0].len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::format("ragged rows"));
    }
    let n = rows.len();
    let data = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
    Ok((data, header))
}

pub(crate) fn write_csv_raw(data: &DMatrix<f64>, header: Option<&[String]>, path: &Path) -> Result<()> {
    let mut out = String::new();
    if let Some(names) = header {
        out.push_str(&names.join(","));
        out.push('\n');
    }
    for i in 0..data.nrows() {
        for j in 0..data.ncols() {
            if j > 0 {
                out.push(',');
            }
            // Shortest round-trip representation; re-parses to the same bits.
            let _ = write!(out, "{}", data[(i, j)]);
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
