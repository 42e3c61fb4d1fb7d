//! Plain-text data files: headerless CSV matrices and vectors, draw files
//! with a fixed header, and edge lists.
//!
//! Floats are written with the shortest representation that parses back to
//! the same bits, so a file round-trips exactly.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::sampler::PosteriorDraws;
use crate::{Error, Result};

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Write bytes to `path`, creating parent directories as needed.
pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path.display().to_string(), e))
}

fn parse_field(raw: &str, path: &Path, line: usize) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        Error::invalid(format!(
            "{}:{}: cannot parse '{}' as a number",
            path.display(),
            line,
            raw.trim()
        ))
    })
}

/// Read a headerless rectangular CSV matrix.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| parse_field(f, path, idx + 1))
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::invalid(format!(
                    "{}:{}: row has {} fields, expected {}",
                    path.display(),
                    idx + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::invalid(format!("{}: file has no data", path.display())));
    }
    let ncols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Read a single-column CSV file as a vector.
pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix_csv(path)?;
    if m.ncols() != 1 {
        return Err(Error::invalid(format!(
            "{}: expected a single column, found {}",
            path.display(),
            m.ncols()
        )));
    }
    Ok(DVector::from_iterator(m.nrows(), m.iter().copied()))
}

/// Render a matrix as headerless CSV text.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

/// Render a vector as one value per line.
pub fn vector_to_csv(v: &DVector<f64>) -> String {
    let mut out = String::new();
    for x in v.iter() {
        let _ = writeln!(out, "{x}");
    }
    out
}

/// Render an edge list with a `source,target` header and 1-based indices.
pub fn edges_to_csv(edges: &[(usize, usize)]) -> String {
    let mut out = String::from("source,target\n");
    for (a, b) in edges {
        let _ = writeln!(out, "{a},{b}");
    }
    out
}

/// Render posterior draws with the header
/// `rho,sigma,beta0,...,chain`; the chain column is a 0-based label.
pub fn draws_to_csv(draws: &PosteriorDraws) -> String {
    let mut out = draws.param_names().join(",");
    out.push_str(",chain\n");
    let values = draws.values();
    for s in 0..draws.n_draws() {
        for j in 0..draws.n_params() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", values[(s, j)]);
        }
        let _ = writeln!(out, ",{}", draws.chain_ids()[s]);
    }
    out
}

/// Parse a draws file produced by [`draws_to_csv`].
pub fn read_draws_csv(path: &Path) -> Result<PosteriorDraws> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::invalid(format!("{}: file has no data", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 4
        || cols[0] != "rho"
        || cols[1] != "sigma"
        || cols.last() != Some(&"chain")
    {
        return Err(Error::invalid(format!(
            "{}: expected header rho,sigma,beta0,...,chain, got '{header}'",
            path.display()
        )));
    }
    for (j, c) in cols[2..cols.len() - 1].iter().enumerate() {
        if *c != format!("beta{j}") {
            return Err(Error::invalid(format!(
                "{}: expected column beta{j}, got '{c}'",
                path.display()
            )));
        }
    }
    let n_params = cols.len() - 1;
    let mut values = Vec::new();
    let mut chain_ids = Vec::new();
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::invalid(format!(
                "{}:{}: row has {} fields, expected {}",
                path.display(),
                idx + 1,
                fields.len(),
                cols.len()
            )));
        }
        for f in &fields[..n_params] {
            values.push(parse_field(f, path, idx + 1)?);
        }
        let chain: u32 = fields[n_params].trim().parse().map_err(|_| {
            Error::invalid(format!(
                "{}:{}: cannot parse chain label '{}'",
                path.display(),
                idx + 1,
                fields[n_params].trim()
            ))
        })?;
        chain_ids.push(chain);
    }
    if chain_ids.is_empty() {
        return Err(Error::invalid(format!("{}: no draws in file", path.display())));
    }
    let n_chains = chain_ids.iter().max().unwrap() + 1;
    let rows = chain_ids.len();
    let matrix = DMatrix::from_fn(rows, n_params, |i, j| values[i * n_params + j]);
    PosteriorDraws::from_parts(matrix, chain_ids, n_chains)
}
