//! Graph file formats.
//!
//! Edge list: header `from,to,type`, one edge per row with type `directed`
//! (alias `->`) or `undirected` (aliases `--`, `-`). A row with empty `to`
//! and `type` declares an isolated node. Node order is order of first
//! appearance.
//!
//! Adjacency matrix: a header row of labels (first cell ignored), then one
//! row per node starting with its label. Entry `(i, j) = 1` with
//! `(j, i) = 0` encodes `i -> j`; symmetric ones encode `i - j`.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Dag, Graph, GraphKind, Pdag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    Matrix,
}

impl std::str::FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "edge-list" | "edgelist" | "edges" => Ok(GraphFormat::EdgeList),
            "matrix" | "adjacency-matrix" | "adjacency" => Ok(GraphFormat::Matrix),
            other => Err(Error::InvalidArgument(format!(
                "unknown graph format '{other}'"
            ))),
        }
    }
}

fn parse_err(line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        line: line as usize,
        msg: msg.into(),
    }
}

/// Non-empty, non-comment rows with 1-based line numbers. Quoted fields may
/// not span lines.
fn records(text: &str) -> impl Iterator<Item = Result<(u64, Vec<String>)>> + '_ {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let line = k as u64 + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            return None;
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(trimmed.as_bytes());
        Some(match rdr.records().next() {
            Some(Ok(rec)) => Ok((line, rec.iter().map(str::to_string).collect())),
            Some(Err(e)) => Err(parse_err(line, e.to_string())),
            None => Err(parse_err(line, "unreadable row")),
        })
    })
}

/// Guess the format from the first non-empty row.
pub fn detect_format(text: &str) -> GraphFormat {
    match records(text).next() {
        Some(Ok((_, f))) if f.len() == 3 && f[0].eq_ignore_ascii_case("from") => {
            GraphFormat::EdgeList
        }
        _ => GraphFormat::Matrix,
    }
}

/// Finalize a parsed graph as `kind`, or as a CPDAG exactly when it has
/// undirected edges if no kind is declared.
fn finish(g: Pdag, kind: Option<GraphKind>) -> Result<Graph> {
    let kind = kind.unwrap_or(if g.has_undirected_edges() {
        GraphKind::Cpdag
    } else {
        GraphKind::Dag
    });
    Ok(match kind {
        GraphKind::Dag => {
            if g.has_undirected_edges() {
                return Err(Error::InvalidArgument(
                    "graph declared as dag contains undirected edges".into(),
                ));
            }
            Graph::Dag(Dag::try_from(g)?)
        }
        GraphKind::Cpdag => Graph::Cpdag(g.into()),
    })
}

enum Mark {
    Directed,
    Undirected,
}

fn edge_type(token: &str) -> Option<Mark> {
    match token.to_ascii_lowercase().as_str() {
        "directed" | "->" => Some(Mark::Directed),
        "undirected" | "--" | "-" => Some(Mark::Undirected),
        _ => None,
    }
}

pub fn parse_edge_list(text: &str, kind: Option<GraphKind>) -> Result<Graph> {
    let mut rows = records(text);
    match rows.next() {
        Some(Ok((_, h)))
            if h.len() == 3
                && h.iter()
                    .map(|s| s.to_ascii_lowercase())
                    .eq(["from", "to", "type"]) => {}
        Some(Ok((line, h))) => {
            return Err(parse_err(
                line,
                format!("expected header 'from,to,type', found '{}'", h.join(",")),
            ))
        }
        Some(Err(e)) => return Err(e),
        None => return Err(parse_err(1, "empty file")),
    }

    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut node = |name: &str, labels: &mut Vec<String>| -> usize {
        *index.entry(name.to_string()).or_insert_with(|| {
            labels.push(name.to_string());
            labels.len() - 1
        })
    };
    let mut edges: Vec<(u64, usize, usize, Mark)> = Vec::new();
    for row in rows {
        let (line, f) = row?;
        if f.len() != 3 {
            return Err(parse_err(
                line,
                format!("expected 3 fields, found {}", f.len()),
            ));
        }
        if f[0].is_empty() {
            return Err(parse_err(line, "empty 'from' field"));
        }
        if f[1].is_empty() && f[2].is_empty() {
            node(&f[0], &mut labels);
            continue;
        }
        if f[1].is_empty() {
            return Err(parse_err(line, "empty 'to' field"));
        }
        let mark = edge_type(&f[2])
            .ok_or_else(|| parse_err(line, format!("unknown edge type '{}'", f[2])))?;
        let i = node(&f[0], &mut labels);
        let j = node(&f[1], &mut labels);
        edges.push((line, i, j, mark));
    }

    let mut g = Pdag::with_labels(labels)?;
    for (line, i, j, mark) in edges {
        let added = match mark {
            Mark::Directed => g.add_directed(i, j),
            Mark::Undirected => g.add_undirected(i, j),
        };
        added.map_err(|e| match e {
            Error::SelfLoop(_) => parse_err(line, format!("self-loop on '{}'", g.label(i))),
            Error::DuplicateEdge(..) => parse_err(
                line,
                format!(
                    "duplicate edge between '{}' and '{}'",
                    g.label(i),
                    g.label(j)
                ),
            ),
            other => other,
        })?;
    }
    finish(g, kind)
}

pub fn parse_matrix(text: &str, kind: Option<GraphKind>) -> Result<Graph> {
    let mut rows = records(text);
    let header = match rows.next() {
        Some(r) => r?.1,
        None => return Err(parse_err(1, "empty file")),
    };
    let labels: Vec<String> = header[1..].to_vec();
    let d = labels.len();
    let mut g = Pdag::with_labels(labels.clone()).map_err(|e| parse_err(1, e.to_string()))?;
    let mut m = vec![vec![false; d]; d];
    let mut seen = 0;
    for row in rows {
        let (line, f) = row?;
        if seen == d {
            return Err(parse_err(line, "more rows than header labels"));
        }
        if f.len() != d + 1 {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", d + 1, f.len()),
            ));
        }
        if f[0] != labels[seen] {
            return Err(parse_err(
                line,
                format!(
                    "row label '{}' does not match column label '{}'",
                    f[0], labels[seen]
                ),
            ));
        }
        for (j, cell) in f[1..].iter().enumerate() {
            m[seen][j] = match cell.as_str() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(parse_err(
                        line,
                        format!("matrix entries must be 0 or 1, found '{other}'"),
                    ))
                }
            };
        }
        if m[seen][seen] {
            return Err(parse_err(line, format!("self-loop on '{}'", labels[seen])));
        }
        seen += 1;
    }
    if seen != d {
        return Err(parse_err(
            seen as u64 + 1,
            format!("expected {d} rows, found {seen}"),
        ));
    }
    for i in 0..d {
        for j in 0..d {
            match (m[i][j], m[j][i]) {
                (true, false) => g.add_directed(i, j)?,
                (true, true) if i < j => g.add_undirected(i, j)?,
                _ => {}
            }
        }
    }
    finish(g, kind)
}

pub fn parse_graph(
    text: &str,
    format: Option<GraphFormat>,
    kind: Option<GraphKind>,
) -> Result<Graph> {
    match format.unwrap_or_else(|| detect_format(text)) {
        GraphFormat::EdgeList => parse_edge_list(text, kind),
        GraphFormat::Matrix => parse_matrix(text, kind),
    }
}

pub fn read_graph(
    path: &Path,
    format: Option<GraphFormat>,
    kind: Option<GraphKind>,
) -> Result<Graph> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_graph(&text, format, kind)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '#']) || s.starts_with(' ') || s.ends_with(' ') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Canonical edge list: every node declared in node order, then directed
/// edges and undirected edges in index order.
pub fn write_edge_list(g: &Pdag) -> String {
    let mut out = String::from("from,to,type\n");
    for l in g.labels() {
        out.push_str(&format!("{},,\n", csv_field(l)));
    }
    let mut edges: Vec<(usize, usize, &str)> = g
        .directed_edges()
        .into_iter()
        .map(|(i, j)| (i, j, "directed"))
        .chain(
            g.undirected_edges()
                .into_iter()
                .map(|(i, j)| (i, j, "undirected")),
        )
        .collect();
    edges.sort();
    for (i, j, t) in edges {
        out.push_str(&format!(
            "{},{},{t}\n",
            csv_field(g.label(i)),
            csv_field(g.label(j))
        ));
    }
    out
}

pub fn write_matrix(g: &Pdag) -> String {
    let d = g.d();
    let mut out = String::new();
    let header: Vec<String> = g.labels().iter().map(|l| csv_field(l)).collect();
    out.push_str(&format!(",{}\n", header.join(",")));
    for i in 0..d {
        let cells: Vec<&str> = (0..d)
            .map(|j| {
                if g.has_directed(i, j) || g.has_undirected(i, j) {
                    "1"
                } else {
                    "0"
                }
            })
            .collect();
        out.push_str(&format!("{},{}\n", header[i], cells.join(",")));
    }
    out
}

pub fn write_graph(g: &Pdag, format: GraphFormat) -> String {
    match format {
        GraphFormat::EdgeList => write_edge_list(g),
        GraphFormat::Matrix => write_matrix(g),
    }
}
