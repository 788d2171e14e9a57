//! Labeled DAGs and partially directed graphs.
//!
//! Node identity is positional (`0..d`); labels only matter for I/O and for
//! aligning graphs read from different files. Both [`Dag`] and [`Cpdag`]
//! dereference to the shared [`Pdag`] storage, so structural queries such as
//! [`Pdag::skeleton`] or [`Pdag::v_structures`] work on either kind.

mod cpdag;
pub(crate) mod dsep;

pub use cpdag::{dag_to_cpdag, enumerate_extensions, find_extension, DEFAULT_EXTENSION_CAP};
pub use dsep::{d_connected_from, d_separated};

pub(crate) use cpdag::apply_meek_rules;

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximal number of adjacencies among `d` nodes, `d(d-1)/2`.
pub fn max_edges(d: usize) -> usize {
    d * d.saturating_sub(1) / 2
}

/// Type of the connection between an ordered pair `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    None,
    /// `i -> j`
    Forward,
    /// `j -> i`
    Backward,
    /// `i - j`
    Undirected,
}

/// Which graph class a value claims to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Dag,
    Cpdag,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphKind::Dag => f.write_str("dag"),
            GraphKind::Cpdag => f.write_str("cpdag"),
        }
    }
}

/// Collider `a -> b <- c` with `a` and `c` non-adjacent; `a < c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VStructure {
    pub a: usize,
    pub c: usize,
    pub b: usize,
}

impl VStructure {
    pub fn new(a: usize, b: usize, c: usize) -> Self {
        let (a, c) = if a <= c { (a, c) } else { (c, a) };
        VStructure { a, c, b }
    }
}

fn default_labels(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("X{i}")).collect()
}

/// Partially directed graph over labeled nodes.
///
/// Stored as a `d x d` mark matrix: `mark[i][j] && !mark[j][i]` is `i -> j`,
/// a symmetric pair of marks is `i - j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pdag {
    labels: Vec<String>,
    mark: Vec<bool>,
}

impl Pdag {
    /// Empty graph with labels `X1..Xd`.
    pub fn empty(d: usize) -> Self {
        Self::with_labels(default_labels(d)).expect("default labels are distinct")
    }

    /// Empty graph over the given labels.
    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(Error::InvalidArgument(
                "node labels must be distinct".into(),
            ));
        }
        let d = labels.len();
        Ok(Pdag {
            labels,
            mark: vec![false; d * d],
        })
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    #[inline]
    fn m(&self, i: usize, j: usize) -> bool {
        self.mark[i * self.d() + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: bool) {
        let d = self.d();
        self.mark[i * d + j] = v;
    }

    pub(crate) fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.d() {
            Err(Error::NodeOutOfRange {
                node: i,
                d: self.d(),
            })
        } else {
            Ok(())
        }
    }

    fn check_new_pair(&self, i: usize, j: usize) -> Result<()> {
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        if self.adjacent(i, j) {
            return Err(Error::DuplicateEdge(i, j));
        }
        Ok(())
    }

    pub fn add_directed(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_new_pair(i, j)?;
        self.set(i, j, true);
        Ok(())
    }

    pub fn add_undirected(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_new_pair(i, j)?;
        self.set(i, j, true);
        self.set(j, i, true);
        Ok(())
    }

    /// Turn `i - j` (or `j -> i`) into `i -> j`.
    pub(crate) fn orient(&mut self, i: usize, j: usize) {
        debug_assert!(self.adjacent(i, j));
        self.set(i, j, true);
        self.set(j, i, false);
    }

    #[inline]
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.m(i, j) || self.m(j, i)
    }

    /// `i -> j`
    #[inline]
    pub fn has_directed(&self, i: usize, j: usize) -> bool {
        self.m(i, j) && !self.m(j, i)
    }

    #[inline]
    pub fn has_undirected(&self, i: usize, j: usize) -> bool {
        self.m(i, j) && self.m(j, i)
    }

    pub fn edge_kind(&self, i: usize, j: usize) -> EdgeKind {
        match (self.m(i, j), self.m(j, i)) {
            (false, false) => EdgeKind::None,
            (true, false) => EdgeKind::Forward,
            (false, true) => EdgeKind::Backward,
            (true, true) => EdgeKind::Undirected,
        }
    }

    /// Number of adjacent unordered pairs.
    pub fn n_edges(&self) -> usize {
        let d = self.d();
        let mut n = 0;
        for i in 0..d {
            for j in (i + 1)..d {
                if self.adjacent(i, j) {
                    n += 1;
                }
            }
        }
        n
    }

    pub fn is_empty(&self) -> bool {
        !self.mark.iter().any(|&m| m)
    }

    /// Directed parents of `i` (undirected neighbours excluded).
    pub fn parents(&self, i: usize) -> Vec<usize> {
        (0..self.d()).filter(|&k| self.has_directed(k, i)).collect()
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.d()).filter(|&k| self.has_directed(i, k)).collect()
    }

    pub fn undirected_neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.d())
            .filter(|&k| self.has_undirected(i, k))
            .collect()
    }

    pub fn adjacents(&self, i: usize) -> Vec<usize> {
        (0..self.d()).filter(|&k| self.adjacent(i, k)).collect()
    }

    /// All `i -> j` edges, sorted.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let d = self.d();
        let mut out = Vec::new();
        for i in 0..d {
            for j in 0..d {
                if self.has_directed(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// All `i - j` edges with `i < j`, sorted.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let d = self.d();
        let mut out = Vec::new();
        for i in 0..d {
            for j in (i + 1)..d {
                if self.has_undirected(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn has_undirected_edges(&self) -> bool {
        let d = self.d();
        (0..d).any(|i| ((i + 1)..d).any(|j| self.has_undirected(i, j)))
    }

    /// Unordered adjacent pairs `(i, j)` with `i < j`.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        let d = self.d();
        let mut out = BTreeSet::new();
        for i in 0..d {
            for j in (i + 1)..d {
                if self.adjacent(i, j) {
                    out.insert((i, j));
                }
            }
        }
        out
    }

    /// Colliders `a -> b <- c` built from directed edges only, with `a` and
    /// `c` non-adjacent.
    pub fn v_structures(&self) -> BTreeSet<VStructure> {
        let mut out = BTreeSet::new();
        for b in 0..self.d() {
            let pa = self.parents(b);
            for (x, &a) in pa.iter().enumerate() {
                for &c in &pa[x + 1..] {
                    if !self.adjacent(a, c) {
                        out.insert(VStructure::new(a, b, c));
                    }
                }
            }
        }
        out
    }

    /// True iff the directed part has no directed cycle.
    pub fn directed_part_is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Kahn order over the directed edges; `None` when a directed cycle exists.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let d = self.d();
        let mut indeg: Vec<usize> = (0..d).map(|i| self.parents(i).len()).collect();
        let mut stack: Vec<usize> = (0..d).rev().filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(d);
        while let Some(v) = stack.pop() {
            order.push(v);
            for c in (0..d).rev() {
                if self.has_directed(v, c) {
                    indeg[c] -= 1;
                    if indeg[c] == 0 {
                        stack.push(c);
                    }
                }
            }
        }
        (order.len() == d).then_some(order)
    }

    /// Same node set (positional labels agree).
    pub fn same_nodes(&self, other: &Pdag) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::NodeMismatch(format!(
                "[{}] vs [{}]",
                self.labels.join(","),
                other.labels.join(",")
            )));
        }
        Ok(())
    }

    /// Copy of this graph with nodes permuted to the label order in `labels`.
    pub fn reordered(&self, labels: &[String]) -> Result<Pdag> {
        let mine: BTreeSet<&String> = self.labels.iter().collect();
        let theirs: BTreeSet<&String> = labels.iter().collect();
        if mine != theirs || labels.len() != self.d() {
            let only_here: Vec<&str> = mine.difference(&theirs).map(|s| s.as_str()).collect();
            let only_there: Vec<&str> = theirs.difference(&mine).map(|s| s.as_str()).collect();
            return Err(Error::NodeMismatch(format!(
                "labels only in this graph: [{}]; labels only in the reference: [{}]",
                only_here.join(","),
                only_there.join(",")
            )));
        }
        let pos: Vec<usize> = labels
            .iter()
            .map(|l| self.index_of(l).expect("checked above"))
            .collect();
        let mut out = Pdag::with_labels(labels.to_vec())?;
        let d = self.d();
        for i in 0..d {
            for j in 0..d {
                out.set(i, j, self.m(pos[i], pos[j]));
            }
        }
        Ok(out)
    }
}

/// Directed acyclic graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag(Pdag);

impl Dag {
    pub fn empty(d: usize) -> Self {
        Dag(Pdag::empty(d))
    }

    /// DAG over `X1..Xd` with the given `i -> j` edges.
    pub fn from_edges(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::from_labeled_edges(default_labels(d), edges)
    }

    pub fn from_labeled_edges(labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Pdag::with_labels(labels)?;
        for &(i, j) in edges {
            g.add_directed(i, j)?;
        }
        Dag::try_from(g)
    }

    pub fn into_inner(self) -> Pdag {
        self.0
    }

    /// Same edges, new labels.
    pub fn relabeled(&self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.d() {
            return Err(Error::InvalidArgument(format!(
                "expected {} labels, got {}",
                self.d(),
                labels.len()
            )));
        }
        let mut g = Pdag::with_labels(labels)?;
        g.mark = self.0.mark.clone();
        Ok(Dag(g))
    }

    /// Descendants of `i`, including `i` itself.
    pub fn descendants(&self, i: usize) -> Vec<bool> {
        let mut seen = vec![false; self.d()];
        let mut stack = vec![i];
        seen[i] = true;
        while let Some(v) = stack.pop() {
            for c in self.children(v) {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        seen
    }

    /// View as a CPDAG with every edge directed (not its equivalence class).
    pub fn as_cpdag(&self) -> Cpdag {
        Cpdag(self.0.clone())
    }
}

impl TryFrom<Pdag> for Dag {
    type Error = Error;

    fn try_from(g: Pdag) -> Result<Self> {
        if g.has_undirected_edges() {
            return Err(Error::InvalidArgument(
                "a DAG cannot contain undirected edges".into(),
            ));
        }
        if !g.directed_part_is_acyclic() {
            return Err(Error::Cycle);
        }
        Ok(Dag(g))
    }
}

impl Deref for Dag {
    type Target = Pdag;
    fn deref(&self) -> &Pdag {
        &self.0
    }
}

/// Completed partially directed graph. Ingested or estimated graphs may be
/// improper; validity is only enforced where DAG extensions are needed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cpdag(Pdag);

impl Cpdag {
    pub fn empty(d: usize) -> Self {
        Cpdag(Pdag::empty(d))
    }

    pub fn from_edges(
        d: usize,
        directed: &[(usize, usize)],
        undirected: &[(usize, usize)],
    ) -> Result<Self> {
        Self::from_labeled_edges(default_labels(d), directed, undirected)
    }

    pub fn from_labeled_edges(
        labels: Vec<String>,
        directed: &[(usize, usize)],
        undirected: &[(usize, usize)],
    ) -> Result<Self> {
        let mut g = Pdag::with_labels(labels)?;
        for &(i, j) in directed {
            g.add_directed(i, j)?;
        }
        for &(i, j) in undirected {
            g.add_undirected(i, j)?;
        }
        Ok(Cpdag(g))
    }

    pub fn into_inner(self) -> Pdag {
        self.0
    }
}

impl From<Pdag> for Cpdag {
    fn from(g: Pdag) -> Self {
        Cpdag(g)
    }
}

impl Deref for Cpdag {
    type Target = Pdag;
    fn deref(&self) -> &Pdag {
        &self.0
    }
}

/// A graph of either kind, as read from a file or produced by an algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Graph {
    Dag(Dag),
    Cpdag(Cpdag),
}

impl Graph {
    pub fn kind(&self) -> GraphKind {
        match self {
            Graph::Dag(_) => GraphKind::Dag,
            Graph::Cpdag(_) => GraphKind::Cpdag,
        }
    }

    pub fn pdag(&self) -> &Pdag {
        match self {
            Graph::Dag(g) => g,
            Graph::Cpdag(g) => g,
        }
    }

    /// Reinterpret as `kind`; a DAG view requires a directed acyclic graph.
    pub fn into_kind(self, kind: GraphKind) -> Result<Graph> {
        match (self, kind) {
            (g @ Graph::Dag(_), GraphKind::Dag) | (g @ Graph::Cpdag(_), GraphKind::Cpdag) => Ok(g),
            (Graph::Dag(g), GraphKind::Cpdag) => Ok(Graph::Cpdag(Cpdag(g.0))),
            (Graph::Cpdag(g), GraphKind::Dag) => Ok(Graph::Dag(Dag::try_from(g.0)?)),
        }
    }
}

impl Deref for Graph {
    type Target = Pdag;
    fn deref(&self) -> &Pdag {
        self.pdag()
    }
}

impl From<Dag> for Graph {
    fn from(g: Dag) -> Self {
        Graph::Dag(g)
    }
}

impl From<Cpdag> for Graph {
    fn from(g: Cpdag) -> Self {
        Graph::Cpdag(g)
    }
}

/// Acyclicity of an edge list over nodes `0..d`.
pub fn is_acyclic(edges: &[(usize, usize)], d: usize) -> Result<bool> {
    let mut indeg = vec![0usize; d];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); d];
    for &(i, j) in edges {
        for v in [i, j] {
            if v >= d {
                return Err(Error::NodeOutOfRange { node: v, d });
            }
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        out[i].push(j);
        indeg[j] += 1;
    }
    let mut stack: Vec<usize> = (0..d).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for &c in &out[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                stack.push(c);
            }
        }
    }
    Ok(seen == d)
}
