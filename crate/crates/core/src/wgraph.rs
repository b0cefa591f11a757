//! The `wgraph v1` text format.
//!
//! ```text
//! n m
//! u v            (m lines, 0-based, u < v)
//! w              (n lines, one decimal weight per vertex)
//! #coords d      (optional)
//! x y [z ...]    (n lines of d coordinates)
//! ```
//!
//! Duplicate edges and loops are rejected. Weights are written with the
//! scalar's exact decimal form, so a written file reads back bit-for-bit.
//! Exact scalars compare thresholds in integer arithmetic; floating scalars
//! compare in floating point without epsilon.

use std::fmt::Write as _;

use crate::graph::{Coords, Graph, GraphError, Vertex, WeightedGraph};
use crate::scalar::Weight;

fn parse_err(line: usize, msg: impl Into<String>) -> GraphError {
    GraphError::Parse { line, msg: msg.into() }
}

/// Weight text of a `wgraph` file, before choosing a scalar type.
pub struct RawWgraph {
    pub graph: Graph,
    pub weights: Vec<String>,
}

impl RawWgraph {
    /// Whether every weight is a plain non-negative integer.
    pub fn integral(&self) -> bool {
        self.weights.iter().all(|w| !w.is_empty() && w.chars().all(|c| c.is_ascii_digit()))
    }

    pub fn into_weighted<W: Weight>(self) -> Result<WeightedGraph<W>, GraphError> {
        let mut ws = Vec::with_capacity(self.weights.len());
        for (i, s) in self.weights.iter().enumerate() {
            let w = W::parse_decimal(s).ok_or_else(|| parse_err(0, format!("weight {s:?} of vertex {i} is not a valid number")))?;
            ws.push(w);
        }
        WeightedGraph::new(self.graph, ws)
    }
}

pub fn parse_raw(text: &str) -> Result<RawWgraph, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "missing `n m` header"))?;
    let mut it = header.split_whitespace();
    let n: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(ln, "header must be `n m`"))?;
    let m: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(ln, "header must be `n m`"))?;
    if it.next().is_some() {
        return Err(parse_err(ln, "header must be `n m`"));
    }
    if n > u32::MAX as usize {
        return Err(GraphError::TooLarge(n as u128));
    }
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(0, format!("expected {m} edge lines")))?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(parse_err(ln, "edge line must be `u v`"));
        }
        let u: Vertex = parts[0].parse().map_err(|_| parse_err(ln, "bad vertex id"))?;
        let v: Vertex = parts[1].parse().map_err(|_| parse_err(ln, "bad vertex id"))?;
        if u >= v {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            return Err(parse_err(ln, "edges must be written with u < v"));
        }
        edges.push((u, v));
    }
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let (_, l) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("expected {n} weight lines, found {i}")))?;
        if l.starts_with('#') {
            return Err(parse_err(0, format!("expected {n} weight lines, found {i}")));
        }
        weights.push(l.to_string());
    }
    let mut graph = Graph::from_edges(n, &edges)?;
    if let Some((ln, l)) = lines.next() {
        let dim: usize = l
            .strip_prefix("#coords")
            .and_then(|d| d.trim().parse().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| parse_err(ln, "expected `#coords d` or end of file"))?;
        let mut data = Vec::with_capacity(n * dim);
        for _ in 0..n {
            let (ln, l) = lines.next().ok_or_else(|| parse_err(0, format!("expected {n} coordinate lines")))?;
            let row: Result<Vec<f64>, _> = l.split_whitespace().map(str::parse::<f64>).collect();
            let row = row.map_err(|_| parse_err(ln, "bad coordinate"))?;
            if row.len() != dim {
                return Err(parse_err(ln, format!("expected {dim} coordinates")));
            }
            data.extend(row);
        }
        graph = graph.with_coords(Coords { dim, data })?;
        if let Some((ln, _)) = lines.next() {
            return Err(parse_err(ln, "trailing content after coordinates"));
        }
    }
    Ok(RawWgraph { graph, weights })
}

pub fn parse<W: Weight>(text: &str) -> Result<WeightedGraph<W>, GraphError> {
    parse_raw(text)?.into_weighted()
}

pub fn write<W: Weight>(g: &WeightedGraph<W>) -> String {
    let graph = g.graph();
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", graph.n(), graph.edge_count());
    for (u, v) in graph.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    for w in g.weights() {
        let _ = writeln!(out, "{}", w.to_decimal());
    }
    if let Some(c) = graph.coords() {
        let _ = writeln!(out, "#coords {}", c.dim);
        for i in 0..c.len() {
            let row: Vec<String> = c.point(i as Vertex).iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn parses_small_file() {
        let text = "3 2\n0 1\n1 2\n1\n0\n2.5\n";
        let g: WeightedGraph<f64> = parse(text).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.weights(), &[1.0, 0.0, 2.5]);
        let raw = parse_raw(text).unwrap();
        assert!(!raw.integral());
        let exact: WeightedGraph<BigRational> = raw.into_weighted().unwrap();
        assert_eq!(exact.weight(2).to_decimal(), "2.5");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse::<u64>("2 2\n0 1\n0 1\n1\n1\n"), Err(GraphError::DuplicateEdge(0, 1))));
        assert!(parse::<u64>("2 1\n1 1\n1\n1\n").is_err());
        assert!(parse::<u64>("2 1\n0 1\n1\n").is_err());
        assert!(parse::<u64>("2 1\n0 1\n1\nx\n").is_err());
        assert!(parse::<f64>("1 0\n-1\n").is_err());
    }

    #[test]
    fn round_trip_with_coords() {
        let g = Graph::path(3)
            .with_coords(Coords { dim: 2, data: vec![0.0, 0.0, 0.1, 0.25, 1.0 / 3.0, 2.0] })
            .unwrap();
        let wg = WeightedGraph::new(g, vec![0.1f64 + 0.2, 0.0, 7.0]).unwrap();
        let text = write(&wg);
        let back: WeightedGraph<f64> = parse(&text).unwrap();
        assert_eq!(back.weights(), wg.weights());
        assert_eq!(back.graph(), wg.graph());
        assert_eq!(write(&back), text);
    }
}
