//! Plain edge-list files: one `u v` pair per line with `u < v`, ascending,
//! 0-indexed, LF endings, no header.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

pub fn write_edges<W: Write>(g: &Graph, mut w: W) -> std::io::Result<()> {
    for (u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    w.flush()
}

pub fn write_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_edges(g, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Parses an edge list. The node count is one past the largest id seen.
pub fn read_edges<R: BufRead>(r: R) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let mut max_id: Option<NodeId> = None;
    for (i, line) in r.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| Error::parse(n, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::parse(n, "malformed edge"));
        };
        let (Ok(u), Ok(v)) = (a.parse::<NodeId>(), b.parse::<NodeId>()) else {
            return Err(Error::parse(n, "malformed edge"));
        };
        if u == v {
            return Err(Error::parse(n, "self-loop"));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(Error::parse(n, "duplicate edge"));
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }
    let node_count = max_id.map_or(0, |m| m as usize + 1);
    Ok(Graph::from_edges(node_count, edges))
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_edges(BufReader::new(file))
}
