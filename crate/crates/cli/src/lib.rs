//! Commands behind the `ncdisco` binary. Each command returns a
//! serializable report with a plain-text rendering; `main.rs` only parses
//! arguments and prints.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use ncdisco::graph::{Cpdag, Dag, Graph, GraphKind};
use ncdisco::hypergeom::{
    expected_metric, expected_metric_ratio, metric_ratio_at_tp, quantile, skeleton_fit_test,
    HyperGeom, HyperParams, MetricId,
};
use ncdisco::io::{read_graph, GraphFormat};
use ncdisco::metrics::{adjacency_confusion, full_report, Metric, MetricReport, ReportOptions};
use ncdisco::pipeline::{
    run_study, single_truth_nc, EdgeCountSummary, MetricRow, PipelineConfig, SingleTruthResult,
    StudyResult,
};
use ncdisco::random::{sample_negative_control, RngSeed};
use ncdisco::sem::{draw_sem, simulate, DataMatrix, SemConfig};
use ncdisco::MetricValue;

pub const SCHEMA_VERSION: &str = "1";

/// Exit code 2 for bad input, 3 for numerical or enumeration failures.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<ncdisco::Error> for CliError {
    fn from(e: ncdisco::Error) -> Self {
        CliError {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn with_path<T>(path: &Path, r: ncdisco::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

/// Read a ground-truth graph, which must be a DAG.
pub fn load_truth(path: &Path, format: Option<GraphFormat>) -> CliResult<Dag> {
    match with_path(path, read_graph(path, format, Some(GraphKind::Dag)))? {
        Graph::Dag(g) => Ok(g),
        Graph::Cpdag(_) => unreachable!("parsed with kind dag"),
    }
}

/// Read an estimate. Without a declared kind, a graph with undirected edges
/// is a CPDAG and a fully directed one is a DAG.
pub fn load_estimate(
    path: &Path,
    format: Option<GraphFormat>,
    kind: Option<GraphKind>,
) -> CliResult<Graph> {
    with_path(path, read_graph(path, format, kind))
}

/// Reorder `est` to the truth's node order, matching nodes by label.
pub fn align(est: Graph, truth: &Dag) -> CliResult<Graph> {
    let p = est.pdag().reordered(truth.labels())?;
    Ok(match est.kind() {
        GraphKind::Dag => Graph::Dag(Dag::try_from(p)?),
        GraphKind::Cpdag => Graph::Cpdag(Cpdag::from(p)),
    })
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or("NA".to_string(), |x| format!("{x:.digits$}"))
}

// ---------------------------------------------------------------- expect

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    /// Exact fraction, e.g. `6/7`.
    pub exact: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectRow {
    pub metric: MetricId,
    pub expected: Option<Quantity>,
    pub median: Option<Quantity>,
    pub lower: Option<Quantity>,
    pub upper: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub params: HyperParams,
    pub level: f64,
    pub rows: Vec<ExpectRow>,
}

fn expect_row(metric: MetricId, p: &HyperParams, level: f64) -> ncdisco::Result<ExpectRow> {
    let at = |q: f64| -> ncdisco::Result<Quantity> {
        let r = metric_ratio_at_tp(metric, quantile(q, p)?, p)?;
        Ok(Quantity {
            value: r.value(),
            exact: r.to_string(),
        })
    };
    let e = expected_metric_ratio(metric, p)?;
    debug_assert!((e.value() - expected_metric(metric, p)?).abs() < 1e-12);
    let tail = (1.0 - level) / 2.0;
    Ok(ExpectRow {
        metric,
        expected: Some(Quantity {
            value: e.value(),
            exact: e.to_string(),
        }),
        median: Some(at(0.5)?),
        lower: Some(at(tail)?),
        upper: Some(at(1.0 - tail)?),
        error: None,
    })
}

/// Expected value, median and central interval of each metric under
/// random edge placement. Metrics undefined at these margins are reported
/// with an error; the command fails if none is defined.
pub fn cmd_expect(
    params: HyperParams,
    metrics: &[MetricId],
    level: f64,
) -> CliResult<ExpectReport> {
    params.validate()?;
    if !(level > 0.0 && level < 1.0) {
        return Err(CliError::input(format!(
            "level must lie in (0, 1), got {level}"
        )));
    }
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for &m in metrics {
        match expect_row(m, &params, level) {
            Ok(r) => rows.push(r),
            Err(e) => {
                errors.push(e.clone());
                rows.push(ExpectRow {
                    metric: m,
                    expected: None,
                    median: None,
                    lower: None,
                    upper: None,
                    error: Some(e.to_string()),
                })
            }
        }
    }
    if errors.len() == metrics.len() {
        return Err(errors.remove(0).into());
    }
    Ok(ExpectReport {
        schema_version: SCHEMA_VERSION,
        command: "expect",
        params,
        level,
        rows,
    })
}

impl ExpectReport {
    pub fn render(&self) -> String {
        let p = &self.params;
        let mut out = format!(
            "Random guessing with m_max = {}, m_true = {}, m_est = {}\n\n",
            p.m_max, p.m_true, p.m_est
        );
        let pct = format!("{}% interval", self.level * 100.0);
        let q = |x: &Option<Quantity>| {
            x.as_ref()
                .map_or("NA".into(), |q| format!("{:.3} ({})", q.value, q.exact))
        };
        writeln!(
            out,
            "{:<12} {:<18} {:<18} {}",
            "metric", "expected", "median", pct
        )
        .unwrap();
        for r in &self.rows {
            match &r.error {
                Some(e) => writeln!(out, "{:<12} undefined: {e}", r.metric.name()).unwrap(),
                None => writeln!(
                    out,
                    "{:<12} {:<18} {:<18} [{}, {}]",
                    r.metric.name(),
                    q(&r.expected),
                    q(&r.median),
                    q(&r.lower),
                    q(&r.upper)
                )
                .unwrap(),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub m_est: u64,
    pub expected: BTreeMap<MetricId, Option<f64>>,
}

/// Expected metric values for every `m_est` in `0..=m_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub m_max: u64,
    pub m_true: u64,
    pub rows: Vec<SweepRow>,
}

pub fn cmd_expect_sweep(m_max: u64, m_true: u64, metrics: &[MetricId]) -> CliResult<SweepReport> {
    HyperParams::new(m_max, m_true, 0)?;
    let rows = (0..=m_max)
        .map(|m_est| {
            let p = HyperParams::new(m_max, m_true, m_est)?;
            let expected = metrics
                .iter()
                .map(|&m| (m, expected_metric(m, &p).ok()))
                .collect();
            Ok(SweepRow { m_est, expected })
        })
        .collect::<ncdisco::Result<_>>()?;
    Ok(SweepReport {
        schema_version: SCHEMA_VERSION,
        command: "expect-sweep",
        m_max,
        m_true,
        rows,
    })
}

impl SweepReport {
    pub fn render(&self) -> String {
        let metrics: Vec<MetricId> = self
            .rows
            .first()
            .map(|r| r.expected.keys().copied().collect())
            .unwrap_or_default();
        let mut out = String::from("m_est");
        for m in &metrics {
            out.push_str(&format!(",{}", m.name()));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.m_est.to_string());
            for m in &metrics {
                out.push_str(&format!(",{}", fmt_opt(r.expected[m], 6)));
            }
            out.push('\n');
        }
        out
    }
}

// -------------------------------------------------------------- fit-test

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitTestReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub params: HyperParams,
    pub tp_obs: u64,
    pub expected_tp: f64,
    /// `P(TP >= tp_obs)` under random edge placement.
    pub p: f64,
}

pub fn cmd_fit_test_counts(params: HyperParams, tp_obs: u64) -> CliResult<FitTestReport> {
    let p = skeleton_fit_test(tp_obs, &params)?;
    Ok(FitTestReport {
        schema_version: SCHEMA_VERSION,
        command: "fit-test",
        params,
        tp_obs,
        expected_tp: HyperGeom::new(params)?.mean(),
        p,
    })
}

pub fn cmd_fit_test(truth: &Dag, est: &Graph) -> CliResult<FitTestReport> {
    let est = align(est.clone(), truth)?;
    let c = adjacency_confusion(truth, &est)?;
    cmd_fit_test_counts(c.margins(), c.tp)
}

impl FitTestReport {
    pub fn render(&self) -> String {
        let p = &self.params;
        format!(
            "Skeleton fit test\n  m_max = {}, m_true = {}, m_est = {}\n  observed TP = {} (expected under random placement {:.3})\n  p = P(TP >= {}) = {:.3} ({:e})\n",
            p.m_max, p.m_true, p.m_est, self.tp_obs, self.expected_tp, self.tp_obs, self.p, self.p
        )
    }
}

// --------------------------------------------------------------- compare

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub report: MetricReport,
    /// Absent when no negative controls were requested.
    pub negative_control: Option<SingleTruthResult>,
}

#[derive(Debug, Clone)]
pub struct CompareOptions {
    pub metrics: Vec<Metric>,
    pub nc_reps: usize,
    pub seed: u64,
    pub sid_cap: usize,
    pub threads: Option<usize>,
}

pub fn cmd_compare(truth: &Dag, est: &Graph, opts: &CompareOptions) -> CliResult<CompareReport> {
    let est = align(est.clone(), truth)?;
    let report = full_report(
        truth,
        &est,
        &ReportOptions {
            metrics: opts.metrics.clone(),
            sid_cap: opts.sid_cap,
            on_sid_failure: ncdisco::metrics::SidFailure::Missing,
        },
    )?;
    let negative_control = if opts.nc_reps == 0 {
        None
    } else {
        Some(single_truth_nc(
            truth,
            &est,
            &opts.metrics,
            opts.nc_reps,
            opts.seed,
            opts.sid_cap,
            opts.threads,
        )?)
    };
    Ok(CompareReport {
        schema_version: SCHEMA_VERSION,
        command: "compare",
        seed: opts.seed,
        report,
        negative_control,
    })
}

impl CompareReport {
    pub fn render(&self) -> String {
        let r = &self.report;
        let mut out = format!(
            "Truth: {} nodes, {} edges ({}); estimate: {} edges ({})\n",
            r.d, r.m_true, r.truth_kind, r.m_est, r.estimate_kind
        );
        if let Some(e) = &r.sid_error {
            writeln!(out, "SID unavailable: {e}").unwrap();
        }
        match &self.negative_control {
            None => {
                writeln!(out, "\n{:<36} {:>10}", "metric", "observed").unwrap();
                for (m, v) in &r.values {
                    writeln!(out, "{:<36} {:>10}", m.label(), fmt_value(*v)).unwrap();
                }
            }
            Some(nc) => {
                writeln!(
                    out,
                    "Negative controls: {} random {}s with {} edges\n",
                    nc.nc_reps, nc.nc_kind, nc.m_est
                )
                .unwrap();
                writeln!(
                    out,
                    "{:<36} {:>10} {:>10} {:>8}",
                    "metric", "observed", "NC mean", "p"
                )
                .unwrap();
                for row in &nc.rows {
                    writeln!(
                        out,
                        "{:<36} {:>10} {:>10} {:>8}",
                        row.metric.label(),
                        fmt_value(row.observed),
                        fmt_opt(row.nc.mean, 3),
                        fmt_opt(row.p, 3)
                    )
                    .unwrap();
                }
            }
        }
        out
    }
}

fn fmt_value(v: MetricValue) -> String {
    fmt_opt(v.value(), 3)
}

// -------------------------------------------------------------- pipeline

fn field_error<T: serde::de::DeserializeOwned>(
    value: &serde_json::Value,
    prefix: &str,
) -> Option<CliError> {
    serde_path_to_error::deserialize::<_, T>(value)
        .err()
        .map(|e| {
            let inner = e.path().to_string();
            let path = match (prefix, inner.as_str()) {
                ("", p) => p.to_string(),
                (pre, ".") => pre.to_string(),
                (pre, p) => format!("{pre}.{p}"),
            };
            CliError::input(format!("config field '{path}': {}", e.inner()))
        })
}

/// Parse a pipeline config, reporting the path of the offending field.
pub fn parse_config(text: &str) -> CliResult<PipelineConfig> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::input(format!("config is not valid JSON: {e}")))?;
    let cfg: PipelineConfig = match serde_json::from_value(value.clone()) {
        Ok(cfg) => cfg,
        Err(_) => {
            // Tagged algorithm variants lose the inner path; check them separately.
            let algo = value.get("algorithm").and_then(|a| {
                let mut a = a.as_object()?.clone();
                let tag = a.remove("type")?;
                (tag == "pc")
                    .then(|| field_error::<ncdisco::pc::PcConfig>(&a.into(), "algorithm"))?
            });
            return Err(algo
                .or_else(|| field_error::<PipelineConfig>(&value, ""))
                .unwrap_or_else(|| CliError::input("invalid config")));
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineSummary {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub config: PipelineConfig,
    pub nc_kind: GraphKind,
    pub m_est: EdgeCountSummary,
    pub failures: usize,
    pub methods_note: String,
    pub rows: Vec<MetricRow>,
}

impl PipelineSummary {
    pub fn of(r: &StudyResult) -> Self {
        PipelineSummary {
            schema_version: SCHEMA_VERSION,
            command: "pipeline",
            config: r.config.clone(),
            nc_kind: r.nc_kind,
            m_est: r.m_est,
            failures: r.failures,
            methods_note: r.methods_note.clone(),
            rows: r.rows.clone(),
        }
    }

    pub fn render(&self) -> String {
        let c = &self.config;
        let mut out = format!(
            "{} replications, d = {}, m_true = {}, seed = {}; estimated edges: mean {:.2} (min {}, max {})",
            c.b, c.d, c.m_true, c.seed, self.m_est.mean, self.m_est.min, self.m_est.max
        );
        if self.failures > 0 {
            write!(out, "; {} algorithm failures", self.failures).unwrap();
        }
        out.push_str("\n\n");
        writeln!(
            out,
            "{:<36} {:>24} {:>24} {:>7}",
            "metric", "algorithm mean (95%)", "negative control (95%)", "p"
        )
        .unwrap();
        for r in &self.rows {
            let cell = |s: &ncdisco::pipeline::Summary| {
                format!(
                    "{} ({}, {})",
                    fmt_opt(s.mean, 2),
                    fmt_opt(s.q025, 2),
                    fmt_opt(s.q975, 2)
                )
            };
            writeln!(
                out,
                "{:<36} {:>24} {:>24} {:>7}",
                r.metric.label(),
                cell(&r.algorithm),
                cell(&r.negative_control),
                fmt_opt(r.p.map(|p| p.p), 3)
            )
            .unwrap();
        }
        let dropped: Vec<String> = self
            .rows
            .iter()
            .filter_map(|r| {
                r.p.filter(|p| p.dropped > 0)
                    .map(|p| format!("{}: {}", r.metric, p.dropped))
            })
            .collect();
        if !dropped.is_empty() {
            writeln!(
                out,
                "\nPairs dropped for missing values: {}",
                dropped.join(", ")
            )
            .unwrap();
        }
        writeln!(out, "\n{}", self.methods_note).unwrap();
        out
    }
}

pub fn cmd_pipeline(cfg: &PipelineConfig, threads: Option<usize>) -> CliResult<StudyResult> {
    Ok(run_study(cfg, threads)?)
}

/// Write `summary.json` and `replications.csv` into `dir`.
pub fn write_study(result: &StudyResult, dir: &Path) -> CliResult<()> {
    let io_err = |e: std::io::Error| CliError::input(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let summary = serde_json::to_string_pretty(&PipelineSummary::of(result)).expect("serializable");
    std::fs::write(dir.join("summary.json"), summary + "\n").map_err(io_err)?;
    std::fs::write(dir.join("replications.csv"), result.to_csv()).map_err(io_err)?;
    Ok(())
}

// ------------------------------------------------- sample, simulate-data

/// A random graph over `X1..Xd` with exactly `m` edges.
pub fn cmd_sample(d: usize, m: usize, kind: GraphKind, seed: u64) -> CliResult<Graph> {
    let labels: Vec<String> = (1..=d).map(|i| format!("X{i}")).collect();
    Ok(sample_negative_control(
        &labels,
        m,
        kind,
        &mut RngSeed::new(seed, 0).rng(),
    )?)
}

/// Draw SEM parameters for `dag` and simulate `cfg.n` rows.
pub fn cmd_simulate(dag: &Dag, cfg: &SemConfig, seed: u64) -> CliResult<DataMatrix> {
    let mut rng = RngSeed::new(seed, 0).rng();
    let model = draw_sem(dag, cfg, &mut rng)?;
    Ok(simulate(&model, cfg.n, &mut rng)?)
}
