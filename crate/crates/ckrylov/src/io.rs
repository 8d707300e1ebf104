//! File formats: Matrix Market coordinate matrices, plain-text right-hand
//! sides, and convergence-history reports.
//!
//! The matrix reader accepts the `coordinate` format with `real` or
//! `complex` fields and `general` or `symmetric` storage. Symmetric files
//! must store the lower triangle (the usual convention) and are expanded to
//! full storage on read, with the result marked complex-symmetric so the
//! symmetric-only solvers accept it without a separate declaration.
//! `array`, `pattern`, `integer`, `hermitian` and `skew-symmetric` files are
//! rejected with a message naming the unsupported tag rather than guessed
//! at. Duplicate coordinates are summed, matching common practice for
//! assembled finite-element output.
//!
//! Floating-point values are written with Rust's shortest round-trip
//! formatting, so write-then-read reproduces a matrix bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gallery;
use crate::numerics::{zeros, Real};
use crate::operator::{CsrMatrix, LinearOperator};

/// A matrix read from a Matrix Market file, together with what the file's
/// header claimed about it.
#[derive(Clone, Debug)]
pub struct LoadedMatrix<T: Real> {
    pub matrix: CsrMatrix<T>,
    /// `true` when the file was tagged `symmetric`. A `general` file may
    /// still hold a symmetric matrix; callers who care can check the
    /// entries with [`CsrMatrix::is_complex_symmetric`].
    pub declared_symmetric: bool,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_value<T: Real>(tok: &str, line: usize) -> Result<T> {
    tok.parse::<f64>()
        .map(T::of)
        .map_err(|_| parse_err(line, format!("expected a number, found {tok:?}")))
}

fn parse_index(tok: &str, line: usize, n: usize) -> Result<usize> {
    let i: usize = tok
        .parse()
        .map_err(|_| parse_err(line, format!("expected a 1-based index, found {tok:?}")))?;
    if i == 0 || i > n {
        return Err(parse_err(line, format!("index {i} out of range 1..={n}")));
    }
    Ok(i - 1)
}

/// Read a Matrix Market coordinate file describing a square matrix.
pub fn read_matrix_market<T: Real, R: BufRead>(reader: R) -> Result<LoadedMatrix<T>> {
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        None => return Err(parse_err(1, "empty file: missing %%MatrixMarket header")),
        Some((_, l)) => l?,
    };
    let lower = header.to_ascii_lowercase();
    let head: Vec<&str> = lower.split_whitespace().collect();
    if head.len() != 5 || head[0] != "%%matrixmarket" || head[1] != "matrix" {
        return Err(parse_err(
            1,
            "header must read '%%MatrixMarket matrix coordinate <field> <symmetry>'",
        ));
    }
    if head[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported format {:?}: only 'coordinate'", head[2])));
    }
    let complex_field = match head[3] {
        "complex" => true,
        "real" => false,
        other => {
            return Err(parse_err(
                1,
                format!("unsupported field {other:?}: only 'real' and 'complex'"),
            ))
        }
    };
    let symmetric = match head[4] {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(parse_err(
                1,
                format!("unsupported symmetry {other:?}: only 'general' and 'symmetric'"),
            ))
        }
    };

    // Size line: first non-comment, non-blank line after the header.
    let mut size: Option<(usize, usize, usize)> = None;
    let mut size_line = 1;
    for (idx, line) in lines.by_ref() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(lineno, "size line must read 'rows cols nnz'"));
        }
        let mut nums = [0usize; 3];
        for (slot, tok) in nums.iter_mut().zip(&toks) {
            *slot = tok
                .parse()
                .map_err(|_| parse_err(lineno, format!("expected an integer, found {tok:?}")))?;
        }
        size = Some((nums[0], nums[1], nums[2]));
        size_line = lineno;
        break;
    }
    let (rows, cols, nnz) =
        size.ok_or_else(|| parse_err(size_line + 1, "missing size line 'rows cols nnz'"))?;
    if rows != cols {
        return Err(parse_err(
            size_line,
            format!("matrix is {rows} x {cols}; only square systems are supported"),
        ));
    }
    if rows == 0 {
        return Err(parse_err(size_line, "matrix dimension must be at least 1"));
    }

    let want = if complex_field { 4 } else { 3 };
    let mut triplets: Vec<(usize, usize, Complex<T>)> = Vec::with_capacity(nnz);
    let mut seen = 0usize;
    let mut last_line = size_line;
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        last_line = lineno;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if seen == nnz {
            return Err(parse_err(
                lineno,
                format!("found an entry beyond the declared count of {nnz}"),
            ));
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != want {
            return Err(parse_err(
                lineno,
                format!("expected {want} fields per entry, found {}", toks.len()),
            ));
        }
        let i = parse_index(toks[0], lineno, rows)?;
        let j = parse_index(toks[1], lineno, cols)?;
        let re: T = parse_value(toks[2], lineno)?;
        let im: T = if complex_field { parse_value(toks[3], lineno)? } else { T::zero() };
        if symmetric && j > i {
            return Err(parse_err(
                lineno,
                format!(
                    "symmetric files store the lower triangle, but entry ({}, {}) lies above \
                     the diagonal",
                    i + 1,
                    j + 1
                ),
            ));
        }
        let v = Complex::new(re, im);
        triplets.push((i, j, v));
        if symmetric && i != j {
            triplets.push((j, i, v));
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(parse_err(
            last_line,
            format!("file declares {nnz} entries but contains {seen}"),
        ));
    }

    let mut matrix = CsrMatrix::from_triplets(rows, &triplets)?;
    if symmetric {
        matrix = matrix.into_symmetric(T::zero())?;
    }
    Ok(LoadedMatrix { matrix, declared_symmetric: symmetric })
}

/// [`read_matrix_market`] on a file path.
pub fn read_matrix_market_path<T: Real>(path: impl AsRef<Path>) -> Result<LoadedMatrix<T>> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

/// Write a matrix in Matrix Market coordinate/complex form.
///
/// With `symmetric` set, only the lower triangle is written under a
/// `symmetric` tag; the matrix must have been declared complex-symmetric
/// (see [`CsrMatrix::into_symmetric`]) so no information is dropped.
pub fn write_matrix_market<T: Real, W: Write>(
    mut w: W,
    m: &CsrMatrix<T>,
    symmetric: bool,
) -> Result<()> {
    if symmetric && !m.declared_symmetric() {
        return Err(Error::InvalidArgument(
            "symmetric output requires a matrix declared complex-symmetric".into(),
        ));
    }
    let tag = if symmetric { "symmetric" } else { "general" };
    writeln!(w, "%%MatrixMarket matrix coordinate complex {tag}")?;
    let n = m.rows();
    let count = if symmetric {
        m.iter_entries().filter(|&(i, j, _)| j <= i).count()
    } else {
        m.nnz()
    };
    writeln!(w, "{n} {n} {count}")?;
    for (i, j, v) in m.iter_entries() {
        if symmetric && j > i {
            continue;
        }
        writeln!(w, "{} {} {} {}", i + 1, j + 1, v.re, v.im)?;
    }
    Ok(())
}

/// [`write_matrix_market`] to a file path.
pub fn write_matrix_market_path<T: Real>(
    path: impl AsRef<Path>,
    m: &CsrMatrix<T>,
    symmetric: bool,
) -> Result<()> {
    write_matrix_market(BufWriter::new(File::create(path)?), m, symmetric)
}

/// Read a right-hand side: one `re im` pair per line, `%` comments and
/// blank lines ignored.
pub fn read_rhs<T: Real, R: BufRead>(reader: R) -> Result<Vec<Complex<T>>> {
    let mut v = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(lineno, "each entry must read 're im'"));
        }
        let re: T = parse_value(toks[0], lineno)?;
        let im: T = parse_value(toks[1], lineno)?;
        v.push(Complex::new(re, im));
    }
    if v.is_empty() {
        return Err(parse_err(1, "right-hand side file contains no entries"));
    }
    Ok(v)
}

/// [`read_rhs`] on a file path.
pub fn read_rhs_path<T: Real>(path: impl AsRef<Path>) -> Result<Vec<Complex<T>>> {
    read_rhs(BufReader::new(File::open(path)?))
}

/// Write a right-hand side as one `re im` pair per line.
pub fn write_rhs<T: Real, W: Write>(mut w: W, v: &[Complex<T>]) -> Result<()> {
    for z in v {
        writeln!(w, "{} {}", z.re, z.im)?;
    }
    Ok(())
}

/// [`write_rhs`] to a file path.
pub fn write_rhs_path<T: Real>(path: impl AsRef<Path>, v: &[Complex<T>]) -> Result<()> {
    write_rhs(BufWriter::new(File::create(path)?), v)
}

/// How to synthesize a right-hand side when none is supplied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhsMode {
    /// `y = A * ones`, so the exact solution is the all-ones vector.
    SolutionOfOnes,
    /// Reproducible dense random vector from the given seed.
    Seeded(u64),
}

/// Synthesize a right-hand side for the operator per [`RhsMode`].
pub fn generate_rhs<T: Real>(a: &dyn LinearOperator<T>, mode: RhsMode) -> Vec<Complex<T>> {
    let n = a.dim();
    match mode {
        RhsMode::SolutionOfOnes => {
            let ones = vec![Complex::new(T::one(), T::zero()); n];
            let mut y = zeros(n);
            a.apply(&ones, &mut y);
            y
        }
        RhsMode::Seeded(seed) => gallery::random_rhs(n, seed),
    }
}

/// Summary of one solver run in plain `f64`, ready for serialization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HistoryReport {
    pub method: String,
    pub status: String,
    pub iterations: usize,
    /// Operator products consumed, counted from outside the solver.
    pub operator_products: usize,
    /// True relative residual of the returned iterate.
    pub relative_residual: f64,
    pub elapsed_ms: f64,
    /// `(iteration, recurrence residual norm)` pairs.
    pub history: Vec<(usize, f64)>,
}

/// Write the recorded history as CSV with a `k,rnorm` header.
pub fn write_history_csv<W: Write>(mut w: W, history: &[(usize, f64)]) -> Result<()> {
    writeln!(w, "k,rnorm")?;
    for (k, r) in history {
        writeln!(w, "{k},{r}")?;
    }
    Ok(())
}

/// Write the full report as pretty-printed JSON.
pub fn write_history_json<W: Write>(mut w: W, report: &HistoryReport) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, report)
        .map_err(|e| Error::InvalidArgument(format!("serializing report: {e}")))?;
    writeln!(w)?;
    Ok(())
}
