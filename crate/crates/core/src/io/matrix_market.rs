//! MatrixMarket coordinate files read as undirected graphs.
//!
//! Every stored entry `(i, j)` becomes an edge; values are ignored. The
//! result is symmetrized, stripped of self-loops and duplicates, and reduced
//! to its largest connected component.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{largest_connected_component, Graph, NodeId};

pub fn read_matrix_market<R: BufRead>(r: R) -> Result<Graph> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (n, banner) = match lines.next() {
        Some((n, l)) => (n, l.map_err(|e| Error::parse(n, e.to_string()))?),
        None => return Err(Error::parse(1, "missing MatrixMarket banner")),
    };
    let fields: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.first().map(String::as_str) != Some("%%matrixmarket") || fields.len() < 5 {
        return Err(Error::parse(n, "missing MatrixMarket banner"));
    }
    if fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(Error::UnsupportedLayout(format!("{} {}", fields[1], fields[2])));
    }
    let value_fields = match fields[3].as_str() {
        "pattern" => 0,
        "real" | "integer" => 1,
        "complex" => 2,
        other => return Err(Error::UnsupportedLayout(format!("field '{other}'"))),
    };
    match fields[4].as_str() {
        "general" | "symmetric" | "skew-symmetric" | "hermitian" => {}
        other => return Err(Error::UnsupportedLayout(format!("symmetry '{other}'"))),
    }

    let mut size: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (n, line) in lines {
        let line = line.map_err(|e| Error::parse(n, e.to_string()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        let Some((rows, cols)) = size else {
            if f.len() != 3 {
                return Err(Error::parse(n, "expected 'rows cols entries'"));
            }
            let rows: usize = f[0].parse().map_err(|_| Error::parse(n, "bad row count"))?;
            let cols: usize = f[1].parse().map_err(|_| Error::parse(n, "bad column count"))?;
            let nnz: usize = f[2].parse().map_err(|_| Error::parse(n, "bad entry count"))?;
            if rows.max(cols) > NodeId::MAX as usize {
                return Err(Error::parse(n, "matrix too large"));
            }
            size = Some((rows, cols));
            edges.reserve(nnz);
            continue;
        };
        if f.len() != 2 + value_fields {
            return Err(Error::parse(n, "malformed entry"));
        }
        let i: usize = f[0].parse().map_err(|_| Error::parse(n, "bad row index"))?;
        let j: usize = f[1].parse().map_err(|_| Error::parse(n, "bad column index"))?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(Error::parse(n, "entry index out of range"));
        }
        edges.push(((i - 1) as NodeId, (j - 1) as NodeId));
    }
    let Some((rows, cols)) = size else {
        return Err(Error::parse(0, "missing size line"));
    };
    if edges.iter().all(|(u, v)| u == v) {
        return Err(Error::VanishedGraph);
    }
    let g = Graph::from_edges(rows.max(cols), edges);
    largest_connected_component(&g)
}

pub fn read_matrix_market_pattern(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix_market(BufReader::new(file))
}
