//! Simulation-based negative controls.
//!
//! A study runs `b` replications of (truth, data, estimate), then draws one
//! random negative-control graph per replication whose edge count is
//! resampled from the observed estimate edge counts, and scores both against
//! the truth. The paired p-value of a metric is the fraction of replications
//! in which the negative control does at least as well as the algorithm.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    dag_to_cpdag, max_edges, Cpdag, Dag, Graph, GraphKind, Pdag, DEFAULT_EXTENSION_CAP,
};
use crate::hypergeom::MetricValue;
use crate::metrics::{full_report, Direction, Metric, ReportOptions, SidFailure};
use crate::pc::{pc, CiTestKind, DSepOracle, FisherZ, PcConfig};
use crate::random::{sample_er_dag, sample_negative_control, RngSeed};
use crate::sem::{draw_sem, simulate, DataMatrix, SemConfig};

const TAG_TRUTH: u64 = 1;
const TAG_ALGORITHM: u64 = 2;
const TAG_NC: u64 = 3;
const TAG_SINGLE: u64 = 4;

/// Printed with every study summary.
pub const METHODS_NOTE: &str = "Paired p-values are the fraction of replications in which the \
negative control performs at least as well as the algorithm: for metrics where smaller is better \
p = (1/b) * #{i : NC_i <= algo_i}, reversed for metrics where larger is better. Ties count \
against the algorithm and no +1 correction is applied. Some published statements of this \
procedure write the smaller-is-better inequality as algo_i <= NC_i; that form would reward the \
algorithm for ties and is not used here. Pairs with a missing value on either side are dropped \
per metric and the drop count is reported.";

/// Inputs handed to an algorithm for one replication.
pub struct AlgorithmInput<'a> {
    pub truth: &'a Dag,
    /// `None` when the algorithm does not need data.
    pub data: Option<&'a DataMatrix>,
}

/// A structure-learning procedure evaluated by the pipeline.
pub trait Algorithm: Sync {
    fn output_kind(&self) -> GraphKind;

    fn needs_data(&self) -> bool {
        true
    }

    fn estimate(&self, input: &AlgorithmInput<'_>, rng: &mut ChaCha8Rng) -> Result<Graph>;
}

/// Built-in algorithms selectable from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlgorithmConfig {
    Pc(PcConfig),
    /// Returns the truth (as a DAG or as its CPDAG).
    Truth {
        kind: GraphKind,
    },
    /// The empty graph.
    Empty {
        kind: GraphKind,
    },
    /// A random graph of the requested kind with `edges` edges, or as many
    /// edges as the truth when unset.
    Random {
        kind: GraphKind,
        #[serde(default)]
        edges: Option<usize>,
    },
}

impl Algorithm for AlgorithmConfig {
    fn output_kind(&self) -> GraphKind {
        match self {
            AlgorithmConfig::Pc(_) => GraphKind::Cpdag,
            AlgorithmConfig::Truth { kind }
            | AlgorithmConfig::Empty { kind }
            | AlgorithmConfig::Random { kind, .. } => *kind,
        }
    }

    fn needs_data(&self) -> bool {
        matches!(self, AlgorithmConfig::Pc(c) if c.ci_test == CiTestKind::FisherZ)
    }

    fn estimate(&self, input: &AlgorithmInput<'_>, rng: &mut ChaCha8Rng) -> Result<Graph> {
        let truth = input.truth;
        match self {
            AlgorithmConfig::Pc(cfg) => {
                let out = match cfg.ci_test {
                    CiTestKind::FisherZ => {
                        let data = input.data.ok_or_else(|| {
                            Error::InvalidArgument("Fisher z PC needs simulated data".into())
                        })?;
                        pc(&FisherZ::new(data), cfg)?
                    }
                    CiTestKind::Oracle => pc(&DSepOracle(truth), cfg)?,
                };
                Ok(Graph::Cpdag(out.cpdag))
            }
            AlgorithmConfig::Truth { kind } => Ok(match kind {
                GraphKind::Dag => Graph::Dag(truth.clone()),
                GraphKind::Cpdag => Graph::Cpdag(dag_to_cpdag(truth)),
            }),
            AlgorithmConfig::Empty { kind } => {
                let empty = Pdag::with_labels(truth.labels().to_vec())?;
                Ok(match kind {
                    GraphKind::Dag => Graph::Dag(Dag::try_from(empty)?),
                    GraphKind::Cpdag => Graph::Cpdag(Cpdag::from(empty)),
                })
            }
            AlgorithmConfig::Random { kind, edges } => {
                let m = edges.unwrap_or(truth.n_edges());
                sample_negative_control(truth.labels(), m, *kind, rng)
            }
        }
    }
}

fn default_metrics() -> Vec<Metric> {
    Metric::TABLE.to_vec()
}

fn default_sid_cap() -> usize {
    DEFAULT_EXTENSION_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Number of replications.
    pub b: usize,
    pub d: usize,
    pub m_true: usize,
    #[serde(default)]
    pub sem: SemConfig,
    pub algorithm: AlgorithmConfig,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    /// Defaults to the algorithm's output kind.
    #[serde(default)]
    pub nc_kind: Option<GraphKind>,
    pub seed: u64,
    #[serde(default = "default_sid_cap")]
    pub sid_cap: usize,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(Error::InvalidArgument("b must be at least 1".into()));
        }
        if self.d == 0 {
            return Err(Error::InvalidArgument("d must be at least 1".into()));
        }
        if self.m_true > max_edges(self.d) {
            return Err(Error::InvalidArgument(format!(
                "m_true = {} exceeds the maximum {} for d = {}",
                self.m_true,
                max_edges(self.d),
                self.d
            )));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one metric is required".into(),
            ));
        }
        self.sem.validate()?;
        if let AlgorithmConfig::Pc(pc) = &self.algorithm {
            pc.validate()?;
        }
        let algo_kind = self.algorithm.output_kind();
        if self.nc_kind.is_some_and(|k| k != algo_kind) {
            return Err(Error::InvalidArgument(format!(
                "negative-control kind {} does not match the algorithm output kind {algo_kind}",
                self.nc_kind.unwrap()
            )));
        }
        Ok(())
    }

    fn report_options(&self) -> ReportOptions {
        ReportOptions {
            metrics: self.metrics.clone(),
            sid_cap: self.sid_cap,
            on_sid_failure: SidFailure::Missing,
        }
    }
}

/// Labeled edge lists of a graph, for reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSet {
    pub kind: GraphKind,
    pub nodes: Vec<String>,
    pub directed: Vec<(String, String)>,
    pub undirected: Vec<(String, String)>,
}

impl EdgeSet {
    pub fn of(g: &Graph) -> Self {
        let label = |(i, j): (usize, usize)| (g.label(i).to_string(), g.label(j).to_string());
        EdgeSet {
            kind: g.kind(),
            nodes: g.labels().to_vec(),
            directed: g.directed_edges().into_iter().map(label).collect(),
            undirected: g.undirected_edges().into_iter().map(label).collect(),
        }
    }

    pub fn n_edges(&self) -> usize {
        self.directed.len() + self.undirected.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub index: usize,
    pub truth: EdgeSet,
    pub estimate: Option<EdgeSet>,
    pub negative_control: Option<EdgeSet>,
    pub m_est: Option<usize>,
    pub nc_edges: Option<usize>,
    /// Algorithm failure message, if any.
    pub error: Option<String>,
    pub algorithm: BTreeMap<Metric, MetricValue>,
    pub nc: BTreeMap<Metric, MetricValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub q025: Option<f64>,
    pub q975: Option<f64>,
    pub used: usize,
    pub missing: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedCounts {
    pub at_least_as_good: usize,
    pub used: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedP {
    pub p: f64,
    pub used: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: Metric,
    pub label: String,
    pub direction: Direction,
    pub algorithm: Summary,
    pub negative_control: Summary,
    pub p: Option<PairedP>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCountSummary {
    pub mean: f64,
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: PipelineConfig,
    pub nc_kind: GraphKind,
    pub rows: Vec<MetricRow>,
    pub m_est: EdgeCountSummary,
    pub failures: usize,
    pub methods_note: String,
    pub replications: Vec<Replication>,
}

impl StudyResult {
    pub fn row(&self, m: Metric) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.metric == m)
    }

    /// One line per replication, metrics in config order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("replication,m_true,m_est,nc_edges,error");
        for m in &self.config.metrics {
            out.push_str(&format!(",algo_{m}"));
        }
        for m in &self.config.metrics {
            out.push_str(&format!(",nc_{m}"));
        }
        out.push('\n');
        let opt = |v: Option<usize>| v.map_or("NA".to_string(), |x| x.to_string());
        for r in &self.replications {
            let err = r
                .error
                .as_deref()
                .map_or(String::new(), |e| format!("\"{}\"", e.replace('"', "\"\"")));
            out.push_str(&format!(
                "{},{},{},{},{}",
                r.index,
                r.truth.n_edges(),
                opt(r.m_est),
                opt(r.nc_edges),
                err
            ));
            for m in &self.config.metrics {
                out.push_str(&format!(
                    ",{}",
                    r.algorithm.get(m).copied().unwrap_or_default()
                ));
            }
            for m in &self.config.metrics {
                out.push_str(&format!(",{}", r.nc.get(m).copied().unwrap_or_default()));
            }
            out.push('\n');
        }
        out
    }
}

/// Does `nc` perform at least as well as `algo`?
fn at_least_as_good(nc: f64, algo: f64, direction: Direction) -> bool {
    match direction {
        Direction::SmallerFavorable => nc <= algo,
        Direction::LargerFavorable => nc >= algo,
    }
}

pub fn paired_counts(
    algo: &[MetricValue],
    nc: &[MetricValue],
    direction: Direction,
) -> Result<PairedCounts> {
    if algo.len() != nc.len() {
        return Err(Error::InvalidArgument(format!(
            "paired vectors differ in length: {} vs {}",
            algo.len(),
            nc.len()
        )));
    }
    let mut c = PairedCounts {
        at_least_as_good: 0,
        used: 0,
        dropped: 0,
    };
    for (a, n) in algo.iter().zip(nc) {
        match (a.value(), n.value()) {
            (Some(a), Some(n)) => {
                c.used += 1;
                if at_least_as_good(n, a, direction) {
                    c.at_least_as_good += 1;
                }
            }
            _ => c.dropped += 1,
        }
    }
    Ok(c)
}

/// Fraction of usable pairs in which the negative control performs at least
/// as well as the algorithm.
pub fn paired_p(algo: &[MetricValue], nc: &[MetricValue], direction: Direction) -> Result<PairedP> {
    let c = paired_counts(algo, nc, direction)?;
    if c.used == 0 {
        return Err(Error::NoUsablePairs { dropped: c.dropped });
    }
    Ok(PairedP {
        p: c.at_least_as_good as f64 / c.used as f64,
        used: c.used,
        dropped: c.dropped,
    })
}

/// Empirical quantile with linear interpolation between order statistics
/// (the default "type 7" definition).
pub fn empirical_quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

pub fn summarize(values: &[MetricValue]) -> Summary {
    let mut v: Vec<f64> = values.iter().filter_map(MetricValue::value).collect();
    v.sort_by(f64::total_cmp);
    let used = v.len();
    Summary {
        mean: (used > 0).then(|| v.iter().sum::<f64>() / used as f64),
        q025: empirical_quantile(&v, 0.025),
        q975: empirical_quantile(&v, 0.975),
        used,
        missing: values.len() - used,
    }
}

struct Phase1 {
    truth: Dag,
    estimate: Result<Graph>,
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Run a study with the configured built-in algorithm.
pub fn run_study(cfg: &PipelineConfig, threads: Option<usize>) -> Result<StudyResult> {
    run_study_with(cfg, &cfg.algorithm, threads)
}

/// Run a study with any algorithm. `threads` bounds the worker count and
/// never changes the result.
pub fn run_study_with<A: Algorithm + ?Sized>(
    cfg: &PipelineConfig,
    algorithm: &A,
    threads: Option<usize>,
) -> Result<StudyResult> {
    cfg.validate()?;
    let nc_kind = cfg.nc_kind.unwrap_or(algorithm.output_kind());
    if nc_kind != algorithm.output_kind() {
        return Err(Error::InvalidArgument(
            "negative-control kind does not match the algorithm output kind".into(),
        ));
    }
    let master = RngSeed::new(cfg.seed, 0);
    let options = cfg.report_options();

    with_threads(threads, || -> Result<StudyResult> {
        // Step 1: truths, data and estimates.
        let phase1: Vec<Phase1> = (0..cfg.b)
            .into_par_iter()
            .map(|i| -> Result<Phase1> {
                let mut rng = master.derive(TAG_TRUTH).with_stream(i as u64).rng();
                let truth = sample_er_dag(cfg.d, cfg.m_true, &mut rng)?;
                let data = if algorithm.needs_data() {
                    let model = draw_sem(&truth, &cfg.sem, &mut rng)?;
                    Some(simulate(&model, cfg.sem.n, &mut rng)?)
                } else {
                    None
                };
                let mut algo_rng = master.derive(TAG_ALGORITHM).with_stream(i as u64).rng();
                let input = AlgorithmInput {
                    truth: &truth,
                    data: data.as_ref(),
                };
                let estimate = algorithm.estimate(&input, &mut algo_rng).and_then(|g| {
                    if g.kind() != algorithm.output_kind() {
                        return Err(Error::InvalidArgument(format!(
                            "algorithm returned a {} but declares {} output",
                            g.kind(),
                            algorithm.output_kind()
                        )));
                    }
                    g.same_nodes(&truth)?;
                    Ok(g)
                });
                Ok(Phase1 { truth, estimate })
            })
            .collect::<Result<_>>()?;

        let observed: Vec<usize> = phase1
            .iter()
            .filter_map(|p| p.estimate.as_ref().ok().map(|g| g.n_edges()))
            .collect();
        if observed.is_empty() {
            let first = phase1[0]
                .estimate
                .as_ref()
                .err()
                .map(|e| e.to_string())
                .unwrap_or_default();
            return Err(Error::InvalidArgument(format!(
                "the algorithm failed in all {} replications; first error: {first}",
                cfg.b
            )));
        }

        // Steps 2 and 3: negative controls and scoring.
        let replications: Vec<Replication> = phase1
            .into_par_iter()
            .enumerate()
            .map(|(i, p)| -> Result<Replication> {
                let mut rng = master.derive(TAG_NC).with_stream(i as u64).rng();
                let m_nc = observed[rng.random_range(0..observed.len())];
                let nc = sample_negative_control(p.truth.labels(), m_nc, nc_kind, &mut rng)?;
                let nc_report = full_report(&p.truth, &nc, &options)?;
                let truth_set = EdgeSet::of(&Graph::Dag(p.truth.clone()));
                let (estimate, algo_values, error) = match &p.estimate {
                    Ok(g) => {
                        let report = full_report(&p.truth, g, &options)?;
                        (Some(EdgeSet::of(g)), report.values, None)
                    }
                    Err(e) => (
                        None,
                        cfg.metrics
                            .iter()
                            .map(|&m| (m, MetricValue::Missing))
                            .collect(),
                        Some(e.to_string()),
                    ),
                };
                Ok(Replication {
                    index: i,
                    truth: truth_set,
                    m_est: estimate.as_ref().map(EdgeSet::n_edges),
                    estimate,
                    negative_control: Some(EdgeSet::of(&nc)),
                    nc_edges: Some(m_nc),
                    error,
                    algorithm: algo_values,
                    nc: nc_report.values,
                })
            })
            .collect::<Result<_>>()?;

        // Step 4: aggregation in replication order.
        let rows = cfg
            .metrics
            .iter()
            .map(|&m| {
                let a: Vec<MetricValue> = replications.iter().map(|r| r.algorithm[&m]).collect();
                let n: Vec<MetricValue> = replications.iter().map(|r| r.nc[&m]).collect();
                let (p, p_error) = match paired_p(&a, &n, m.direction()) {
                    Ok(p) => (Some(p), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                MetricRow {
                    metric: m,
                    label: m.label().to_string(),
                    direction: m.direction(),
                    algorithm: summarize(&a),
                    negative_control: summarize(&n),
                    p,
                    p_error,
                }
            })
            .collect();

        let m_est = EdgeCountSummary {
            mean: observed.iter().sum::<usize>() as f64 / observed.len() as f64,
            min: *observed.iter().min().expect("non-empty"),
            max: *observed.iter().max().expect("non-empty"),
        };
        Ok(StudyResult {
            config: cfg.clone(),
            nc_kind,
            rows,
            m_est,
            failures: cfg.b - observed.len(),
            methods_note: METHODS_NOTE.to_string(),
            replications,
        })
    })?
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleTruthRow {
    pub metric: Metric,
    pub direction: Direction,
    pub observed: MetricValue,
    pub nc: Summary,
    /// Fraction of negative controls at least as good as the estimate.
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleTruthResult {
    pub nc_kind: GraphKind,
    pub m_est: usize,
    pub nc_reps: usize,
    pub rows: Vec<SingleTruthRow>,
}

impl SingleTruthResult {
    pub fn row(&self, m: Metric) -> Option<&SingleTruthRow> {
        self.rows.iter().find(|r| r.metric == m)
    }
}

/// Negative controls for one known truth: `reps` random graphs of the
/// estimate's kind and edge count, each scored like the estimate.
pub fn single_truth_nc(
    truth: &Dag,
    estimate: &Graph,
    metrics: &[Metric],
    reps: usize,
    seed: u64,
    sid_cap: usize,
    threads: Option<usize>,
) -> Result<SingleTruthResult> {
    if reps == 0 {
        return Err(Error::InvalidArgument(
            "at least one negative control is required".into(),
        ));
    }
    truth.same_nodes(estimate)?;
    let options = ReportOptions {
        metrics: metrics.to_vec(),
        sid_cap,
        on_sid_failure: SidFailure::Missing,
    };
    let observed = full_report(truth, estimate, &options)?;
    let kind = estimate.kind();
    let m_est = estimate.n_edges();
    let base = RngSeed::new(seed, 0).derive(TAG_SINGLE);

    let reports: Vec<BTreeMap<Metric, MetricValue>> = with_threads(threads, || {
        (0..reps)
            .into_par_iter()
            .map(|i| {
                let mut rng = base.with_stream(i as u64).rng();
                let nc = sample_negative_control(truth.labels(), m_est, kind, &mut rng)?;
                Ok(full_report(truth, &nc, &options)?.values)
            })
            .collect::<Result<_>>()
    })??;

    let rows = metrics
        .iter()
        .map(|&m| {
            let obs = observed.get(m);
            let values: Vec<MetricValue> = reports.iter().map(|r| r[&m]).collect();
            let p = obs.value().and_then(|o| {
                let usable: Vec<f64> = values.iter().filter_map(MetricValue::value).collect();
                (!usable.is_empty()).then(|| {
                    usable
                        .iter()
                        .filter(|&&v| at_least_as_good(v, o, m.direction()))
                        .count() as f64
                        / usable.len() as f64
                })
            });
            SingleTruthRow {
                metric: m,
                direction: m.direction(),
                observed: obs,
                nc: summarize(&values),
                p,
            }
        })
        .collect();
    Ok(SingleTruthResult {
        nc_kind: kind,
        m_est,
        nc_reps: reps,
        rows,
    })
}
