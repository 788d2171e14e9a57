//! Graph-comparison metrics: adjacency and endpoint-orientation confusion
//! tables, structural Hamming distance, v-structure recovery and the
//! structural intervention distance (with bounds for CPDAG estimates).

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::dsep::AdjLists;
use crate::graph::{
    enumerate_extensions, max_edges, Dag, Graph, GraphKind, Pdag, DEFAULT_EXTENSION_CAP,
};
use crate::hypergeom::{metric_from_counts, ConfusionCounts, MetricId, MetricValue};

/// Whether small or large values of a metric indicate a better estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    SmallerFavorable,
    LargerFavorable,
}

/// Metrics reported by [`full_report`] and the negative-control pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Shd,
    AdjacencyPrecision,
    AdjacencyRecall,
    AdjacencyF1,
    AdjacencyNpv,
    AdjacencySpecificity,
    OrientationPrecision,
    OrientationRecall,
    #[serde(rename = "vstructure_recovery")]
    VStructureRecovery,
    SidLower,
    SidUpper,
}

impl Metric {
    pub const ALL: [Metric; 11] = [
        Metric::Shd,
        Metric::AdjacencyPrecision,
        Metric::AdjacencyRecall,
        Metric::AdjacencyF1,
        Metric::AdjacencyNpv,
        Metric::AdjacencySpecificity,
        Metric::OrientationPrecision,
        Metric::OrientationRecall,
        Metric::VStructureRecovery,
        Metric::SidLower,
        Metric::SidUpper,
    ];

    /// The rows of the usual PC simulation summary table.
    pub const TABLE: [Metric; 8] = [
        Metric::Shd,
        Metric::AdjacencyPrecision,
        Metric::AdjacencyRecall,
        Metric::OrientationPrecision,
        Metric::OrientationRecall,
        Metric::VStructureRecovery,
        Metric::SidLower,
        Metric::SidUpper,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Shd => "shd",
            Metric::AdjacencyPrecision => "adjacency_precision",
            Metric::AdjacencyRecall => "adjacency_recall",
            Metric::AdjacencyF1 => "adjacency_f1",
            Metric::AdjacencyNpv => "adjacency_npv",
            Metric::AdjacencySpecificity => "adjacency_specificity",
            Metric::OrientationPrecision => "orientation_precision",
            Metric::OrientationRecall => "orientation_recall",
            Metric::VStructureRecovery => "vstructure_recovery",
            Metric::SidLower => "sid_lower",
            Metric::SidUpper => "sid_upper",
        }
    }

    /// Human-readable row label.
    pub fn label(&self) -> &'static str {
        match self {
            Metric::Shd => "SHD",
            Metric::AdjacencyPrecision => "Adjacency precision",
            Metric::AdjacencyRecall => "Adjacency recall",
            Metric::AdjacencyF1 => "Adjacency F1",
            Metric::AdjacencyNpv => "Adjacency NPV",
            Metric::AdjacencySpecificity => "Adjacency specificity",
            Metric::OrientationPrecision => "Orientation precision",
            Metric::OrientationRecall => "Orientation recall",
            Metric::VStructureRecovery => "Proportion recovered v-structures",
            Metric::SidLower => "SID (lower bound)",
            Metric::SidUpper => "SID (upper bound)",
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            Metric::Shd | Metric::SidLower | Metric::SidUpper => Direction::SmallerFavorable,
            _ => Direction::LargerFavorable,
        }
    }

    fn adjacency_id(&self) -> Option<MetricId> {
        match self {
            Metric::AdjacencyPrecision => Some(MetricId::Precision),
            Metric::AdjacencyRecall => Some(MetricId::Recall),
            Metric::AdjacencyF1 => Some(MetricId::F1),
            Metric::AdjacencyNpv => Some(MetricId::Npv),
            Metric::AdjacencySpecificity => Some(MetricId::Specificity),
            _ => None,
        }
    }

    fn needs_sid(&self) -> bool {
        matches!(self, Metric::SidLower | Metric::SidUpper)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric '{s}'")))
    }
}

/// Interval of SID values over the DAGs an estimate represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidBounds {
    pub lower: u64,
    pub upper: u64,
    /// True for a DAG estimate, where the bounds coincide.
    pub exact: bool,
}

fn check_pair(a: &Pdag, b: &Pdag) -> Result<()> {
    if a.d() != b.d() {
        return Err(Error::NodeMismatch(format!(
            "graphs have {} and {} nodes",
            a.d(),
            b.d()
        )));
    }
    a.same_nodes(b)
}

/// Classify all `d(d-1)/2` unordered pairs by skeleton membership.
pub fn adjacency_confusion(truth: &Pdag, est: &Pdag) -> Result<ConfusionCounts> {
    check_pair(truth, est)?;
    let d = truth.d();
    let mut c = ConfusionCounts::default();
    for i in 0..d {
        for j in (i + 1)..d {
            match (est.adjacent(i, j), truth.adjacent(i, j)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(c)
}

/// Arrowhead at `at` on the edge between `at` and `other`?
fn arrowhead(g: &Pdag, other: usize, at: usize) -> bool {
    g.has_directed(other, at)
}

/// Endpoint classification over the adjacencies shared by both graphs.
/// Undirected edges contribute two tails.
pub fn orientation_confusion(truth: &Pdag, est: &Pdag) -> Result<ConfusionCounts> {
    check_pair(truth, est)?;
    let d = truth.d();
    let mut c = ConfusionCounts::default();
    for i in 0..d {
        for j in (i + 1)..d {
            if !(truth.adjacent(i, j) && est.adjacent(i, j)) {
                continue;
            }
            for (other, at) in [(i, j), (j, i)] {
                match (arrowhead(est, other, at), arrowhead(truth, other, at)) {
                    (true, true) => c.tp += 1,
                    (false, false) => c.tn += 1,
                    (true, false) => c.fp += 1,
                    (false, true) => c.fn_ += 1,
                }
            }
        }
    }
    Ok(c)
}

/// Structural Hamming distance: one unit per unordered pair that is an
/// edge in only one graph or whose edge type/orientation differs.
pub fn shd(a: &Pdag, b: &Pdag) -> Result<u64> {
    check_pair(a, b)?;
    let d = a.d();
    let mut s = 0;
    for i in 0..d {
        for j in (i + 1)..d {
            if a.edge_kind(i, j) != b.edge_kind(i, j) {
                s += 1;
            }
        }
    }
    Ok(s)
}

/// Share of the truth's v-structures present in the estimate; 1 when the
/// truth has none.
pub fn vstructure_recovery(truth: &Dag, est: &Pdag) -> Result<MetricValue> {
    check_pair(truth, est)?;
    let vt = truth.v_structures();
    if vt.is_empty() {
        return Ok(MetricValue::Value(1.0));
    }
    let ve = est.v_structures();
    let hit = vt.intersection(&ve).count();
    Ok(MetricValue::Value(hit as f64 / vt.len() as f64))
}

/// Does `z` identify the total effect of `i` on `j` in `g` by adjustment?
///
/// When `j` is a descendant of `i`, `z` must contain no descendant of `i`
/// and must d-separate `i` and `j` once the edges out of `i` are removed.
/// When `j` is not a descendant the true effect is null, and adjusting for
/// `z` recovers it iff `z` d-separates `i` and `j` in `g`.
pub fn valid_adjustment(g: &Dag, i: usize, j: usize, z: &[usize]) -> Result<bool> {
    g.check_node(i)?;
    g.check_node(j)?;
    if i == j {
        return Err(Error::InvalidArgument(
            "adjustment needs two distinct nodes".into(),
        ));
    }
    let mut zm = vec![false; g.d()];
    for &v in z {
        g.check_node(v)?;
        zm[v] = true;
    }
    if zm[i] || zm[j] {
        return Err(Error::InvalidArgument(
            "adjustment set must not contain the treatment or the outcome".into(),
        ));
    }
    let desc = g.descendants(i);
    if desc[j] {
        if z.iter().any(|&v| desc[v]) {
            return Ok(false);
        }
        Ok(!AdjLists::without_outgoing(g, i).reachable(i, &zm)[j])
    } else {
        Ok(!AdjLists::of(g).reachable(i, &zm)[j])
    }
}

/// Per-truth cache of SID row counts keyed by `(i, parent set of i)`.
struct SidRows<'a> {
    truth: &'a Dag,
    full: AdjLists,
    desc: Vec<Vec<bool>>,
    cache: HashMap<(usize, Vec<usize>), u64>,
}

impl<'a> SidRows<'a> {
    fn new(truth: &'a Dag) -> Self {
        let d = truth.d();
        SidRows {
            truth,
            full: AdjLists::of(truth),
            desc: (0..d).map(|i| truth.descendants(i)).collect(),
            cache: HashMap::new(),
        }
    }

    /// Number of `j` for which parent adjustment with `pa` gets the effect
    /// of `i` on `j` wrong.
    fn row(&mut self, i: usize, pa: Vec<usize>) -> u64 {
        if let Some(&v) = self.cache.get(&(i, pa.clone())) {
            return v;
        }
        let d = self.truth.d();
        let mut zm = vec![false; d];
        for &v in &pa {
            zm[v] = true;
        }
        let desc = &self.desc[i];
        let z_has_desc = pa.iter().any(|&v| desc[v]);
        let reach_full = self.full.reachable(i, &zm);
        let reach_cut = AdjLists::without_outgoing(self.truth, i).reachable(i, &zm);
        let mut errors = 0;
        for j in (0..d).filter(|&j| j != i) {
            let wrong = if zm[j] {
                // The estimate claims j causes i, i.e. no effect of i on j.
                desc[j]
            } else if desc[j] {
                z_has_desc || reach_cut[j]
            } else {
                reach_full[j]
            };
            if wrong {
                errors += 1;
            }
        }
        self.cache.insert((i, pa), errors);
        errors
    }

    fn sid(&mut self, est: &Dag) -> u64 {
        (0..est.d()).map(|i| self.row(i, est.parents(i))).sum()
    }
}

/// SID between two DAGs.
pub fn sid_dag(truth: &Dag, est: &Dag) -> Result<u64> {
    check_pair(truth, est)?;
    Ok(SidRows::new(truth).sid(est))
}

/// SID of an estimate against a true DAG. CPDAG estimates give the range
/// over all DAGs in the class, enumerated up to `cap`.
pub fn sid(truth: &Dag, est: &Graph, cap: usize) -> Result<SidBounds> {
    check_pair(truth, est)?;
    match est {
        Graph::Dag(g) => {
            let s = sid_dag(truth, g)?;
            Ok(SidBounds {
                lower: s,
                upper: s,
                exact: true,
            })
        }
        Graph::Cpdag(c) => {
            let ext = enumerate_extensions(c, cap)?;
            if ext.is_empty() {
                return Err(Error::NoExtension);
            }
            let mut rows = SidRows::new(truth);
            let mut lower = u64::MAX;
            let mut upper = 0;
            for g in &ext {
                let s = rows.sid(g);
                lower = lower.min(s);
                upper = upper.max(s);
            }
            Ok(SidBounds {
                lower,
                upper,
                exact: false,
            })
        }
    }
}

/// How [`full_report`] treats a SID computation that fails (class too large
/// or no consistent extension).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SidFailure {
    Error,
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub metrics: Vec<Metric>,
    pub sid_cap: usize,
    pub on_sid_failure: SidFailure,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            metrics: Metric::ALL.to_vec(),
            sid_cap: DEFAULT_EXTENSION_CAP,
            on_sid_failure: SidFailure::Error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub d: usize,
    pub m_true: usize,
    pub m_est: usize,
    pub truth_kind: GraphKind,
    pub estimate_kind: GraphKind,
    pub values: BTreeMap<Metric, MetricValue>,
    /// Set when SID could not be computed and was reported as missing.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sid_error: Option<String>,
}

impl MetricReport {
    pub fn get(&self, m: Metric) -> MetricValue {
        self.values.get(&m).copied().unwrap_or_default()
    }
}

/// Every requested metric for one truth/estimate pair.
pub fn full_report(truth: &Dag, est: &Graph, options: &ReportOptions) -> Result<MetricReport> {
    check_pair(truth, est)?;
    let adj = adjacency_confusion(truth, est)?;
    let orient = orientation_confusion(truth, est)?;
    let mut values = BTreeMap::new();
    let mut sid_error = None;

    let sid_bounds = if options.metrics.iter().any(Metric::needs_sid) {
        match sid(truth, est, options.sid_cap) {
            Ok(b) => Some(b),
            Err(e) if options.on_sid_failure == SidFailure::Missing && e.is_numerical() => {
                sid_error = Some(e.to_string());
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    for &m in &options.metrics {
        let v = match m {
            Metric::Shd => MetricValue::Value(shd(truth, est)? as f64),
            Metric::OrientationPrecision => metric_from_counts(MetricId::Precision, &orient),
            Metric::OrientationRecall => metric_from_counts(MetricId::Recall, &orient),
            Metric::VStructureRecovery => vstructure_recovery(truth, est)?,
            Metric::SidLower => sid_bounds.map(|b| b.lower as f64).into(),
            Metric::SidUpper => sid_bounds.map(|b| b.upper as f64).into(),
            adjacency => metric_from_counts(
                adjacency
                    .adjacency_id()
                    .expect("remaining metrics are adjacency metrics"),
                &adj,
            ),
        };
        values.insert(m, v);
    }

    debug_assert_eq!(adj.total() as usize, max_edges(truth.d()));
    Ok(MetricReport {
        d: truth.d(),
        m_true: truth.n_edges(),
        m_est: est.n_edges(),
        truth_kind: GraphKind::Dag,
        estimate_kind: est.kind(),
        values,
        sid_error,
    })
}
