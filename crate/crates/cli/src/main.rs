use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ncdisco::graph::{max_edges, GraphKind};
use ncdisco::hypergeom::{HyperParams, MetricId};
use ncdisco::io::{write_graph, GraphFormat};
use ncdisco::metrics::Metric;
use ncdisco::sem::SemConfig;
use ncdisco_cli::*;

#[derive(Parser)]
#[command(
    name = "ncdisco",
    version,
    about = "Negative controls for causal discovery evaluation"
)]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, env = "NCDISCO_SEED")]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Dag,
    Cpdag,
}

impl From<Kind> for GraphKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Dag => GraphKind::Dag,
            Kind::Cpdag => GraphKind::Cpdag,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    EdgeList,
    Matrix,
}

impl From<Format> for GraphFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::EdgeList => GraphFormat::EdgeList,
            Format::Matrix => GraphFormat::Matrix,
        }
    }
}

#[derive(Args)]
struct Margins {
    /// Number of nodes (sets m_max = d(d-1)/2).
    #[arg(long, conflicts_with = "m_max")]
    d: Option<u64>,
    #[arg(long)]
    m_max: Option<u64>,
    #[arg(long)]
    m_true: Option<u64>,
    #[arg(long)]
    m_est: Option<u64>,
}

impl Margins {
    fn m_max(&self) -> CliResult<u64> {
        match (self.d, self.m_max) {
            (Some(d), _) => Ok(max_edges(d as usize) as u64),
            (None, Some(m)) => Ok(m),
            (None, None) => Err(CliError::input("one of --d or --m-max is required")),
        }
    }

    fn require(v: Option<u64>, flag: &str) -> CliResult<u64> {
        v.ok_or_else(|| CliError::input(format!("{flag} is required")))
    }

    fn params(&self) -> CliResult<HyperParams> {
        Ok(HyperParams::new(
            self.m_max()?,
            Self::require(self.m_true, "--m-true")?,
            Self::require(self.m_est, "--m-est")?,
        )?)
    }
}

#[derive(Args)]
struct GraphInputs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
    /// File format; detected from the header when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Kind of the estimate; a CPDAG exactly when it has undirected edges if omitted.
    #[arg(long, value_enum)]
    estimate_kind: Option<Kind>,
}

#[derive(Subcommand)]
enum Command {
    /// Expected value, median and interval of adjacency metrics under random guessing.
    Expect {
        #[command(flatten)]
        margins: Margins,
        #[arg(long = "metric", value_parser = parse_metric_id)]
        metrics: Vec<MetricId>,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Tabulate expectations for every m_est instead.
        #[arg(long)]
        sweep: bool,
    },
    /// Exact one-sided test of skeleton fit, from graph files or from counts.
    FitTest {
        #[arg(long, requires = "estimate")]
        truth: Option<PathBuf>,
        #[arg(long, requires = "truth")]
        estimate: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long, value_enum)]
        estimate_kind: Option<Kind>,
        #[command(flatten)]
        margins: Margins,
        /// Observed true positives (with the count flags).
        #[arg(long)]
        tp: Option<u64>,
    },
    /// Score an estimate against a truth with negative-control p-values.
    Compare {
        #[command(flatten)]
        inputs: GraphInputs,
        #[arg(long = "metric", value_parser = parse_metric)]
        metrics: Vec<Metric>,
        /// Number of negative controls (0 skips them).
        #[arg(long, default_value_t = 1000)]
        nc_reps: usize,
        #[arg(long, default_value_t = ncdisco::graph::DEFAULT_EXTENSION_CAP)]
        sid_cap: usize,
    },
    /// Run a simulation study from a JSON config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Directory for summary.json and replications.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a random DAG or CPDAG with a fixed edge count.
    Sample {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value = "dag")]
        kind: Kind,
        #[arg(long, value_enum, default_value = "edge-list")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate linear Gaussian data from a DAG file.
    SimulateData {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        weight_lo: f64,
        #[arg(long, default_value_t = 2.0)]
        weight_hi: f64,
        #[arg(long, default_value_t = 0.5)]
        variance_lo: f64,
        #[arg(long, default_value_t = 1.5)]
        variance_hi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_metric_id(s: &str) -> Result<MetricId, String> {
    s.parse().map_err(|e: ncdisco::Error| e.to_string())
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: ncdisco::Error| e.to_string())
}

fn emit<T: Serialize>(json: bool, report: &T, text: impl FnOnce(&T) -> String) {
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(report).expect("serializable")
        );
    } else {
        print!("{}", text(report));
    }
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::input(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Expect {
            margins,
            metrics,
            level,
            sweep,
        } => {
            let metrics = if metrics.is_empty() {
                MetricId::ALL.to_vec()
            } else {
                metrics
            };
            if sweep {
                let m_true = Margins::require(margins.m_true, "--m-true")?;
                let r = cmd_expect_sweep(margins.m_max()?, m_true, &metrics)?;
                emit(cli.json, &r, SweepReport::render);
            } else {
                let r = cmd_expect(margins.params()?, &metrics, level)?;
                emit(cli.json, &r, ExpectReport::render);
            }
        }
        Command::FitTest {
            truth,
            estimate,
            format,
            estimate_kind,
            margins,
            tp,
        } => {
            let r = match (truth, estimate) {
                (Some(t), Some(e)) => {
                    let truth = load_truth(&t, format.map(Into::into))?;
                    let est =
                        load_estimate(&e, format.map(Into::into), estimate_kind.map(Into::into))?;
                    cmd_fit_test(&truth, &est)?
                }
                _ => cmd_fit_test_counts(margins.params()?, Margins::require(tp, "--tp")?)?,
            };
            emit(cli.json, &r, FitTestReport::render);
        }
        Command::Compare {
            inputs,
            metrics,
            nc_reps,
            sid_cap,
        } => {
            let format = inputs.format.map(Into::into);
            let truth = load_truth(&inputs.truth, format)?;
            let est = load_estimate(
                &inputs.estimate,
                format,
                inputs.estimate_kind.map(Into::into),
            )?;
            let opts = CompareOptions {
                metrics: if metrics.is_empty() {
                    Metric::ALL.to_vec()
                } else {
                    metrics
                },
                nc_reps,
                seed,
                sid_cap,
                threads: cli.threads,
            };
            let r = cmd_compare(&truth, &est, &opts)?;
            emit(cli.json, &r, CompareReport::render);
        }
        Command::Pipeline { config, out } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::input(format!("{}: {e}", config.display())))?;
            let mut cfg = parse_config(&text)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let result = cmd_pipeline(&cfg, cli.threads)?;
            if let Some(dir) = &out {
                write_study(&result, dir)?;
            }
            emit(
                cli.json,
                &PipelineSummary::of(&result),
                PipelineSummary::render,
            );
        }
        Command::Sample {
            d,
            m,
            kind,
            format,
            out,
        } => {
            let g = cmd_sample(d, m, kind.into(), seed)?;
            write_or_print(out.as_ref(), &write_graph(&g, format.into()))?;
        }
        Command::SimulateData {
            graph,
            n,
            weight_lo,
            weight_hi,
            variance_lo,
            variance_hi,
            out,
        } => {
            let dag = load_truth(&graph, None)?;
            let cfg = SemConfig {
                n,
                weight_range: (weight_lo, weight_hi),
                variance_range: (variance_lo, variance_hi),
            };
            let data = cmd_simulate(&dag, &cfg, seed)?;
            let mut buf = Vec::new();
            data.write_csv(&mut buf)?;
            write_or_print(out.as_ref(), &String::from_utf8(buf).expect("ASCII output"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
