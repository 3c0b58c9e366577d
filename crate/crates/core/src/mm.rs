//! Matrix Market coordinate files (`real`/`integer`, `general`/`symmetric`).
//!
//! Indices are 1-based on disk and 0-based in memory.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(BufReader::new(file), path)
}

pub fn write_matrix_market(a: &SparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_to(a, &mut w).map_err(|e| Error::io(path, e))
}

fn write_to(a: &SparseMatrix, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        // `{:e}` prints the shortest representation that round-trips exactly.
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    w.flush()
}

fn parse_matrix_market(reader: impl BufRead, path: &Path) -> Result<SparseMatrix> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = reader.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty file".into()))?;
    let header = header.map_err(|e| Error::io(path, e))?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(1, format!("malformed header `{header}`")));
    }
    if tokens[2] != "coordinate" {
        return Err(err(1, format!("unsupported format `{}`", tokens[2])));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(err(1, format!("unsupported field `{}`", tokens[3])));
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(err(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut seen = 0usize;
    for (lineno, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(err(lineno, "size line must have three fields".into()));
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| err(lineno, format!("invalid count `{s}`")))
                };
                let (m, n, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                if symmetric && m != n {
                    return Err(err(lineno, "symmetric matrix must be square".into()));
                }
                size = Some((m, n, nnz));
                triplets.reserve(if symmetric { 2 * nnz } else { nnz });
            }
            Some((m, n, nnz)) => {
                if fields.len() != 3 {
                    return Err(err(lineno, "entry line must have three fields".into()));
                }
                if seen == nnz {
                    return Err(err(lineno, format!("more than {nnz} entries")));
                }
                let index = |s: &str, bound: usize| -> Result<usize> {
                    let k = s
                        .parse::<usize>()
                        .map_err(|_| err(lineno, format!("invalid index `{s}`")))?;
                    if k == 0 || k > bound {
                        return Err(err(lineno, format!("index {k} outside 1..={bound}")));
                    }
                    Ok(k - 1)
                };
                let i = index(fields[0], m)?;
                let j = index(fields[1], n)?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|_| err(lineno, format!("invalid value `{}`", fields[2])))?;
                if symmetric && j > i {
                    return Err(err(
                        lineno,
                        "symmetric storage expects the lower triangle only".into(),
                    ));
                }
                triplets.push((i, j, v));
                if symmetric && i != j {
                    triplets.push((j, i, v));
                }
                seen += 1;
            }
        }
    }
    let (m, n, nnz) = size.ok_or_else(|| err(1, "missing size line".into()))?;
    if seen != nnz {
        return Err(err(0, format!("expected {nnz} entries, found {seen}")));
    }
    SparseMatrix::from_triplets(m, n, triplets)
}
