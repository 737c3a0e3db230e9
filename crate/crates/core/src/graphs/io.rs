//! Edge-list text format: a header `n m`, then `m` lines `i j w` with
//! 0-indexed vertices and `i < j`. Blank lines and `#` comments are skipped.
//! Loading rejects disconnected graphs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Edge, GraphError, Result, WeightedGraph};

fn parse_err(line: usize, msg: impl Into<String>) -> GraphError {
    GraphError::Parse {
        line,
        msg: msg.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} {tok:?}")))
}

pub fn from_text(text: &str) -> Result<WeightedGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let mut toks = header.split_whitespace();
    let n: usize = field(toks.next(), hl, "vertex count")?;
    let m: usize = field(toks.next(), hl, "edge count")?;
    if toks.next().is_some() {
        return Err(parse_err(hl, "header must be \"n m\""));
    }
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(hl, format!("expected {m} edges, found {}", edges.len())))?;
        let mut toks = line.split_whitespace();
        let i = field(toks.next(), ln, "vertex")?;
        let j = field(toks.next(), ln, "vertex")?;
        let w = field(toks.next(), ln, "weight")?;
        if toks.next().is_some() {
            return Err(parse_err(ln, "expected \"i j w\""));
        }
        edges.push(Edge { i, j, w });
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content after last edge"));
    }
    let g = WeightedGraph::new(n, edges)?;
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    Ok(g)
}

pub fn to_text(g: &WeightedGraph) -> String {
    let mut out = format!("{} {}\n", g.vertex_count(), g.edge_count());
    for e in g.edges() {
        writeln!(out, "{} {} {:?}", e.i, e.j, e.w).unwrap();
    }
    out
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<WeightedGraph> {
    from_text(&fs::read_to_string(path)?)
}

pub fn write_graph(path: impl AsRef<Path>, g: &WeightedGraph) -> Result<()> {
    fs::write(path, to_text(g))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = WeightedGraph::from_triples(4, &[(0, 1, 0.5), (1, 3, 2.0), (0, 2, 1e-3)]).unwrap();
        assert_eq!(from_text(&to_text(&g)).unwrap(), g);
    }

    #[test]
    fn malformed() {
        assert!(from_text("").is_err());
        assert!(from_text("3 1\n0 1\n").is_err());
        assert!(from_text("3 2\n0 1 1.0\n").is_err());
        assert!(from_text("3 1\n0 1 1.0\n1 2 1.0\n").is_err());
        assert!(matches!(from_text("3 1\n2 1 1.0\n"), Err(GraphError::InvalidEdge { .. })));
        assert!(from_text("# comment\n2 1\n\n0 1 1\n").is_ok());
    }
}
