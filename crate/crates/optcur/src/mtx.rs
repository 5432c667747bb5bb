//! Matrix Market exchange format: `array` (dense) and `coordinate` (sparse)
//! flavors with `real`, `integer` and `pattern` fields and `general`,
//! `symmetric` and `skew-symmetric` storage.
//!
//! Values are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use optcur_core::{DenseMatrix, Matrix, SparseMatrix};

#[derive(Debug, thiserror::Error)]
pub enum MtxError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

/// A matrix as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub enum MtxMatrix {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl MtxMatrix {
    pub fn as_matrix(&self) -> &dyn Matrix {
        match self {
            MtxMatrix::Dense(d) => d,
            MtxMatrix::Sparse(s) => s,
        }
    }

    pub fn into_dense(self) -> DenseMatrix {
        match self {
            MtxMatrix::Dense(d) => d,
            MtxMatrix::Sparse(s) => s.to_dense(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Format {
    Array,
    Coordinate,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    path: String,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, message: impl Into<String>) -> MtxError {
        MtxError::Parse { path: self.path.clone(), line: self.line, message: message.into() }
    }

    fn raw(&mut self) -> Result<Option<String>, MtxError> {
        match self.inner.next() {
            None => Ok(None),
            Some(Err(source)) => Err(MtxError::Io { path: self.path.clone(), source }),
            Some(Ok(l)) => {
                self.line += 1;
                Ok(Some(l))
            }
        }
    }

    /// Next line that is neither blank nor a comment.
    fn data(&mut self) -> Result<Option<String>, MtxError> {
        while let Some(l) = self.raw()? {
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('%') {
                return Ok(Some(t.to_string()));
            }
        }
        Ok(None)
    }
}

fn parse_num<T: std::str::FromStr, R: BufRead>(lines: &Lines<R>, tok: Option<&str>, what: &str) -> Result<T, MtxError> {
    let tok = tok.ok_or_else(|| lines.err(format!("missing {what}")))?;
    tok.parse().map_err(|_| lines.err(format!("invalid {what} `{tok}`")))
}

fn parse_value<R: BufRead>(lines: &Lines<R>, tok: Option<&str>, field: Field) -> Result<f64, MtxError> {
    let v = match field {
        Field::Pattern => return Ok(1.0),
        Field::Integer => parse_num::<i64, R>(lines, tok, "integer value")? as f64,
        Field::Real => parse_num::<f64, R>(lines, tok, "value")?,
    };
    if !v.is_finite() {
        return Err(lines.err("non-finite value"));
    }
    Ok(v)
}

fn header<R: BufRead>(lines: &mut Lines<R>) -> Result<(Format, Field, Symmetry), MtxError> {
    let banner = lines.raw()?.ok_or_else(|| lines.err("empty file"))?;
    let toks: Vec<String> = banner.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" {
        return Err(lines.err("expected `%%MatrixMarket matrix <format> <field> <symmetry>`"));
    }
    if toks[1] != "matrix" {
        return Err(lines.err(format!("unsupported object `{}`", toks[1])));
    }
    let format = match toks[2].as_str() {
        "array" => Format::Array,
        "coordinate" => Format::Coordinate,
        f => return Err(lines.err(format!("unsupported format `{f}`"))),
    };
    let field = match toks[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" if format == Format::Coordinate => Field::Pattern,
        f => return Err(lines.err(format!("unsupported field `{f}` for {} storage", toks[2]))),
    };
    let symmetry = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        s => return Err(lines.err(format!("unsupported symmetry `{s}`"))),
    };
    Ok((format, field, symmetry))
}

/// Parses Matrix Market text from a reader; `path` only labels errors.
pub fn parse_matrix<R: BufRead>(reader: R, path: &str) -> Result<MtxMatrix, MtxError> {
    let mut lines = Lines { inner: reader.lines(), path: path.to_string(), line: 0 };
    let (format, field, symmetry) = header(&mut lines)?;
    let size = lines.data()?.ok_or_else(|| lines.err("missing size line"))?;
    let mut toks = size.split_whitespace();
    let m: usize = parse_num(&lines, toks.next(), "row count")?;
    let n: usize = parse_num(&lines, toks.next(), "column count")?;
    if symmetry != Symmetry::General && m != n {
        return Err(lines.err("symmetric storage requires a square matrix"));
    }
    let out = match format {
        Format::Array => {
            if toks.next().is_some() {
                return Err(lines.err("array size line takes two numbers"));
            }
            MtxMatrix::Dense(read_array(&mut lines, m, n, field, symmetry)?)
        }
        Format::Coordinate => {
            let nnz: usize = parse_num(&lines, toks.next(), "entry count")?;
            if toks.next().is_some() {
                return Err(lines.err("coordinate size line takes three numbers"));
            }
            MtxMatrix::Sparse(read_coordinate(&mut lines, m, n, nnz, field, symmetry)?)
        }
    };
    if lines.data()?.is_some() {
        return Err(lines.err("unexpected data after the last entry"));
    }
    Ok(out)
}

fn read_array<R: BufRead>(
    lines: &mut Lines<R>,
    m: usize,
    n: usize,
    field: Field,
    symmetry: Symmetry,
) -> Result<DenseMatrix, MtxError> {
    let mut a = DenseMatrix::zeros(m, n);
    // Column-major; symmetric storage lists the lower triangle only.
    for j in 0..n {
        let start = match symmetry {
            Symmetry::General => 0,
            Symmetry::Symmetric => j,
            Symmetry::Skew => j + 1,
        };
        for i in start..m {
            let l = lines.data()?.ok_or_else(|| lines.err(format!("missing entry ({}, {})", i + 1, j + 1)))?;
            let mut toks = l.split_whitespace();
            let v = parse_value(lines, toks.next(), field)?;
            if toks.next().is_some() {
                return Err(lines.err("array entries take one value per line"));
            }
            a[(i, j)] = v;
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => a[(j, i)] = v,
                Symmetry::Skew => a[(j, i)] = -v,
            }
        }
    }
    Ok(a)
}

fn read_coordinate<R: BufRead>(
    lines: &mut Lines<R>,
    m: usize,
    n: usize,
    nnz: usize,
    field: Field,
    symmetry: Symmetry,
) -> Result<SparseMatrix, MtxError> {
    let mut trip = Vec::with_capacity(if symmetry == Symmetry::General { nnz } else { 2 * nnz });
    for e in 0..nnz {
        let l = lines.data()?.ok_or_else(|| lines.err(format!("expected {nnz} entries, found {e}")))?;
        let mut toks = l.split_whitespace();
        let i: usize = parse_num(lines, toks.next(), "row index")?;
        let j: usize = parse_num(lines, toks.next(), "column index")?;
        if i == 0 || i > m || j == 0 || j > n {
            return Err(lines.err(format!("index ({i}, {j}) outside a {m}x{n} matrix (indices are 1-based)")));
        }
        let v = parse_value(lines, toks.next(), field)?;
        if toks.next().is_some() {
            return Err(lines.err("too many fields in entry"));
        }
        let (i, j) = (i - 1, j - 1);
        match symmetry {
            Symmetry::General => trip.push((i, j, v)),
            Symmetry::Symmetric | Symmetry::Skew => {
                if j > i || (symmetry == Symmetry::Skew && i == j) {
                    return Err(lines.err("symmetric storage lists the strict lower triangle (or diagonal) only"));
                }
                trip.push((i, j, v));
                if i != j {
                    trip.push((j, i, if symmetry == Symmetry::Skew { -v } else { v }));
                }
            }
        }
    }
    SparseMatrix::from_triplets(m, n, &trip).map_err(|e| lines.err(e.to_string()))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<MtxMatrix, MtxError> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let f = fs::File::open(path).map_err(|source| MtxError::Io { path: label.clone(), source })?;
    parse_matrix(BufReader::new(f), &label)
}

pub fn format_dense(a: &DenseMatrix) -> String {
    let mut s = String::with_capacity(24 * a.nrows() * a.ncols() + 64);
    s.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} {}", a.nrows(), a.ncols());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let _ = writeln!(s, "{:.16e}", a[(i, j)]);
        }
    }
    s
}

pub fn format_sparse(a: &SparseMatrix) -> String {
    let mut s = String::with_capacity(40 * a.nnz() + 64);
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    a.for_each_nonzero(&mut |i, j, v| {
        let _ = writeln!(s, "{} {} {:.16e}", i + 1, j + 1, v);
    });
    s
}

fn write_text(path: &Path, text: &str) -> Result<(), MtxError> {
    fs::write(path, text).map_err(|source| MtxError::Io { path: path.display().to_string(), source })
}

pub fn write_dense(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<(), MtxError> {
    write_text(path.as_ref(), &format_dense(a))
}

pub fn write_sparse(path: impl AsRef<Path>, a: &SparseMatrix) -> Result<(), MtxError> {
    write_text(path.as_ref(), &format_sparse(a))
}

pub fn write_matrix(path: impl AsRef<Path>, a: &MtxMatrix) -> Result<(), MtxError> {
    match a {
        MtxMatrix::Dense(d) => write_dense(path, d),
        MtxMatrix::Sparse(s) => write_sparse(path, s),
    }
}

/// Writes 0-based indices as a 1-based `integer` column vector.
pub fn write_indices(path: impl AsRef<Path>, idx: &[usize]) -> Result<(), MtxError> {
    let mut s = String::from("%%MatrixMarket matrix array integer general\n");
    let _ = writeln!(s, "{} 1", idx.len());
    for i in idx {
        let _ = writeln!(s, "{}", i + 1);
    }
    write_text(path.as_ref(), &s)
}

/// Reads an index vector written by [`write_indices`], back to 0-based.
pub fn read_indices(path: impl AsRef<Path>) -> Result<Vec<usize>, MtxError> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let a = read_matrix(path)?.into_dense();
    let bad = |message: String| MtxError::Parse { path: label.clone(), line: 0, message };
    if a.ncols() != 1 {
        return Err(bad("index file must hold a single column".into()));
    }
    a.as_slice()
        .iter()
        .map(|&v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize - 1)
            } else {
                Err(bad(format!("invalid 1-based index {v}")))
            }
        })
        .collect()
}
