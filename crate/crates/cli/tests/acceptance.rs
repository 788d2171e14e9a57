//! Acceptance suite: one PASS/FAIL line per criterion, with timing against
//! its budget. Exits non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ncdisco::graph::{
    d_separated, dag_to_cpdag, enumerate_extensions, max_edges, Dag, Graph, GraphKind, Pdag,
};
use ncdisco::hypergeom::{
    expected_metric, expected_metric_ratio, metric_at_tp, metric_from_counts, metric_quantile,
    quantile, ConfusionCounts, HyperGeom, HyperParams, MetricId, Ratio,
};
use ncdisco::metrics::{shd, sid, sid_dag, Metric};
use ncdisco::pc::{pc_oracle, CiTestKind, PcConfig};
use ncdisco::pipeline::{empirical_quantile, run_study, AlgorithmConfig, PipelineConfig};
use ncdisco::random::{sample_er_dag, sample_negative_control, RngSeed};
use ncdisco::sem::SemConfig;
use ncdisco_cli::{
    cmd_compare, cmd_expect, cmd_fit_test_counts, load_estimate, load_truth, CompareOptions,
};

type Outcome = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn exact_expect_table() -> Outcome {
    let p = HyperParams::for_nodes(5, 8, 7).map_err(e)?;
    let r = cmd_expect(p, &[MetricId::Precision, MetricId::Recall], 0.95).map_err(e)?;
    let want = [("4/5", "6/7", "5/7", "1"), ("7/10", "3/4", "5/8", "7/8")];
    let mut got = Vec::new();
    for (row, w) in r.rows.iter().zip(want) {
        let s = |q: &Option<ncdisco_cli::Quantity>| {
            q.as_ref().map(|q| q.exact.clone()).unwrap_or_default()
        };
        let g = (
            s(&row.expected),
            s(&row.median),
            s(&row.lower),
            s(&row.upper),
        );
        check(
            (g.0.as_str(), g.1.as_str(), g.2.as_str(), g.3.as_str()) == w,
            || format!("{}: got {g:?}, want {w:?}", row.metric),
        )?;
        got.push(format!(
            "{} E={} med={} CI=({}, {})",
            row.metric, g.0, g.1, g.2, g.3
        ));
    }
    Ok(got.join("; "))
}

fn f1_surface() -> Outcome {
    let cases = [
        ((10, 5, 5), Ratio::new(1, 2)),
        ((10, 5, 10), Ratio::new(2, 3)),
        ((10, 8, 10), Ratio::new(8, 9)),
    ];
    let mut out = Vec::new();
    for ((a, b, c), want) in cases {
        let p = HyperParams::new(a, b, c).map_err(e)?;
        let got = expected_metric_ratio(MetricId::F1, &p).map_err(e)?;
        check(got == want, || format!("({a},{b},{c}): {got} != {want}"))?;
        out.push(format!("({a},{b},{c})={got}"));
    }
    Ok(out.join(" "))
}

fn fit_test() -> Outcome {
    let p = HyperParams::new(231, 30, 30).map_err(e)?;
    let r = cmd_fit_test_counts(p, 10).map_err(e)?;
    let oracle: f64 = (10..=30).map(|k| common::hyper_pmf(231, 30, 30, k)).sum();
    check((r.p - oracle).abs() < 1e-12, || {
        format!("p {} vs oracle {oracle}", r.p)
    })?;
    let rounded = format!("{:.3}", r.p);
    check(rounded == "0.002", || {
        format!("p = {} rounds to {rounded}", r.p)
    })?;
    Ok(format!("p = {:.7} -> {rounded}", r.p))
}

fn worked_example_medians() -> Outcome {
    let truth = load_truth(&fixture("fig1_truth.csv"), None).map_err(e)?;
    let mut out = Vec::new();
    for seed in 1..=5u64 {
        let mut rng = RngSeed::new(seed, 0).rng();
        let mut prec = Vec::with_capacity(1000);
        let mut rec = Vec::with_capacity(1000);
        for _ in 0..1000 {
            let g = sample_er_dag(5, 7, &mut rng).map_err(e)?;
            let tp = common::shared_adjacencies(&truth, &g) as f64;
            prec.push(tp / 7.0);
            rec.push(tp / 8.0);
        }
        prec.sort_by(f64::total_cmp);
        rec.sort_by(f64::total_cmp);
        let mp = empirical_quantile(&prec, 0.5).unwrap();
        let mr = empirical_quantile(&rec, 0.5).unwrap();
        check(mp == 6.0 / 7.0 && mr == 6.0 / 8.0, || {
            format!("seed {seed}: median precision {mp}, recall {mr}")
        })?;
        out.push(seed.to_string());
    }
    Ok(format!("medians 6/7 and 6/8 for seeds {}", out.join(",")))
}

fn tv_distance(
    d: usize,
    m_true: usize,
    m_est: usize,
    draws: usize,
    seed: u64,
) -> Result<f64, String> {
    let truth = sample_er_dag(d, m_true, &mut RngSeed::new(seed, 1).rng()).map_err(e)?;
    let mut counts = vec![0usize; m_true.min(m_est) + 1];
    let mut rng = RngSeed::new(seed, 2).rng();
    for _ in 0..draws {
        let g = sample_er_dag(d, m_est, &mut rng).map_err(e)?;
        counts[common::shared_adjacencies(&truth, &g)] += 1;
    }
    let m_max = max_edges(d) as u64;
    Ok(0.5
        * counts
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                (c as f64 / draws as f64
                    - common::hyper_pmf(m_max, m_true as u64, m_est as u64, k as u64))
                .abs()
            })
            .sum::<f64>())
}

fn distributional_agreement() -> Outcome {
    let mut out = Vec::new();
    for (d, t, m) in [(5, 8, 7), (10, 15, 12), (22, 30, 30)] {
        let tv = tv_distance(d, t, m, 10_000, 5)?;
        check(tv <= 0.02, || format!("({d},{t},{m}): TV {tv:.4}"))?;
        out.push(format!("({d},{t},{m}) TV={tv:.4}"));
    }
    Ok(out.join(" "))
}

fn linearity_grid() -> Outcome {
    let mut points = 0;
    for m_max in 1..=30u64 {
        for m_true in 0..=m_max {
            for m_est in 0..=m_max {
                let p = HyperParams::new(m_max, m_true, m_est).map_err(e)?;
                let h = HyperGeom::new(p).map_err(e)?;
                for k in h.support() {
                    let oracle = common::hyper_pmf(m_max, m_true, m_est, k);
                    check((h.pmf(k) - oracle).abs() < 1e-12, || {
                        format!("pmf({k}) at {p}")
                    })?;
                }
                for m in MetricId::ALL {
                    if let Ok(want) = expected_metric(m, &p) {
                        let avg: f64 = h
                            .support()
                            .map(|k| {
                                let c = ConfusionCounts::from_margins(k, &p).unwrap();
                                h.pmf(k) * metric_from_counts(m, &c).value().unwrap()
                            })
                            .sum();
                        check((want - avg).abs() <= 1e-12, || {
                            format!("{m} at {p}: {want} vs {avg}")
                        })?;
                    }
                    for level in [0.025, 0.25, 0.5, 0.75, 0.975] {
                        let q = quantile(level, &p).map_err(e)?;
                        match (metric_quantile(m, level, &p), metric_at_tp(m, q, &p)) {
                            (Ok(a), Ok(b)) => check(a == b, || format!("{m} quantile at {p}"))?,
                            (Err(_), Err(_)) => {}
                            _ => return Err(format!("{m} quantile definedness differs at {p}")),
                        }
                    }
                }
                points += 1;
            }
        }
    }
    Ok(format!("{points} grid points"))
}

fn oracle_cfg() -> PcConfig {
    PcConfig {
        ci_test: CiTestKind::Oracle,
        ..PcConfig::default()
    }
}

fn oracle_pc() -> Outcome {
    let mut n = 0;
    for d in 1..=4 {
        for g in common::all_dags(d) {
            let out = pc_oracle(&g, &oracle_cfg()).map_err(e)?;
            check(out.cpdag == dag_to_cpdag(&g), || {
                format!("d={d} {:?}", common::edges_of(&g))
            })?;
            n += 1;
        }
    }
    let mut rng = RngSeed::new(7, 0).rng();
    for k in 0..200 {
        let m = 8 + k % 13;
        let g = sample_er_dag(8, m, &mut rng).map_err(e)?;
        let out = pc_oracle(&g, &oracle_cfg()).map_err(e)?;
        check(out.cpdag == dag_to_cpdag(&g), || {
            format!("d=8 m={m} {:?}", common::edges_of(&g))
        })?;
    }
    Ok(format!(
        "{n} exhaustive DAGs (d<=4) and 200 random d=8 DAGs"
    ))
}

fn study(m_true: usize, seed: u64) -> PipelineConfig {
    PipelineConfig {
        b: 200,
        d: 10,
        m_true,
        sem: SemConfig {
            n: 400,
            ..SemConfig::default()
        },
        algorithm: AlgorithmConfig::Pc(PcConfig::default()),
        metrics: vec![
            Metric::Shd,
            Metric::AdjacencyPrecision,
            Metric::AdjacencyRecall,
        ],
        nc_kind: None,
        seed,
        sid_cap: 10_000,
    }
}

fn pc_studies() -> Outcome {
    let p =
        |r: &ncdisco::pipeline::StudyResult, m: Metric| r.row(m).and_then(|row| row.p).map(|p| p.p);
    let mut out = Vec::new();
    for seed in 1..=3 {
        let sparse = run_study(&study(15, seed), None).map_err(e)?;
        let (s, pr, re) = (
            p(&sparse, Metric::Shd).ok_or("no sparse SHD p")?,
            p(&sparse, Metric::AdjacencyPrecision).ok_or("no precision p")?,
            p(&sparse, Metric::AdjacencyRecall).ok_or("no recall p")?,
        );
        check(s < 0.05 && pr < 0.05 && re < 0.05, || {
            format!("seed {seed} sparse: SHD p {s}, precision p {pr}, recall p {re}")
        })?;
        let dense = run_study(&study(30, seed), None).map_err(e)?;
        let ds = p(&dense, Metric::Shd).ok_or("no dense SHD p")?;
        check(ds > 0.05, || format!("seed {seed} dense: SHD p {ds}"))?;
        check(dense.m_est.mean < 20.0, || {
            format!("seed {seed} dense: mean m_est {}", dense.m_est.mean)
        })?;
        out.push(format!(
            "seed {seed}: sparse p(SHD,prec,rec)=({s:.3},{pr:.3},{re:.3}) dense p(SHD)={ds:.3} m_est={:.2}",
            dense.m_est.mean
        ));
    }
    Ok(out.join("; "))
}

fn sachs() -> Outcome {
    let truth = load_truth(&fixture("sachs_truth.csv"), None).map_err(e)?;
    let empty = Pdag::with_labels(truth.labels().to_vec()).map_err(e)?;
    let empty_shd = shd(&truth, &empty).map_err(e)?;
    check(empty_shd == 20, || {
        format!("empty-estimate SHD {empty_shd}")
    })?;

    let est = load_estimate(&fixture("sachs_pc_cpdag.csv"), None, None).map_err(e)?;
    check(
        est.kind() == GraphKind::Cpdag && est.n_edges() == 24,
        || format!("fixture is a {:?} with {} edges", est.kind(), est.n_edges()),
    )?;
    let opts = CompareOptions {
        metrics: vec![Metric::Shd],
        nc_reps: 1000,
        seed: 1,
        sid_cap: 10_000,
        threads: None,
    };
    let r = cmd_compare(&truth, &est, &opts).map_err(e)?;
    let observed = r.report.get(Metric::Shd).value().ok_or("SHD missing")?;
    check(observed == 23.0, || format!("observed SHD {observed}"))?;
    let nc = r
        .negative_control
        .as_ref()
        .and_then(|n| n.row(Metric::Shd))
        .ok_or("no NC row")?;
    let mean = nc.nc.mean.ok_or("no NC mean")?;
    let p = nc.p.ok_or("no p")?;
    check((29.0..=34.0).contains(&mean) && p <= 0.01, || {
        format!("NC mean {mean}, p {p}")
    })?;
    Ok(format!(
        "empty SHD 20; observed 23, NC mean {mean:.2}, p {p:.3}"
    ))
}

fn property_checks() -> Outcome {
    // Equivalence classes against brute force.
    for d in 1..=4 {
        for class in common::brute_force_classes(d) {
            let mut want: Vec<_> = class.iter().map(|g| common::edges_of(g)).collect();
            want.sort();
            let c = dag_to_cpdag(&class[0]);
            let mut got: Vec<_> = enumerate_extensions(&c, 10_000)
                .map_err(e)?
                .iter()
                .map(|g| common::edges_of(g))
                .collect();
            got.sort();
            check(got == want, || format!("class of {:?}", want[0]))?;
        }
    }

    // SHD axioms over DAGs and CPDAGs on shared labels.
    let labels: Vec<String> = (1..=5).map(|i| format!("X{i}")).collect();
    let mut rng = RngSeed::new(10, 0).rng();
    let mut graphs = Vec::new();
    for k in 0..60 {
        let kind = if k % 2 == 0 {
            GraphKind::Dag
        } else {
            GraphKind::Cpdag
        };
        graphs.push(sample_negative_control(&labels, k % 11, kind, &mut rng).map_err(e)?);
    }
    for a in &graphs {
        check(shd(a, a).map_err(e)? == 0, || "identity".into())?;
        for b in &graphs {
            let ab = shd(a, b).map_err(e)?;
            check(ab == shd(b, a).map_err(e)?, || "symmetry".into())?;
            check(ab == common::shd_brute(a, b), || "edge-mark count".into())?;
            check(ab as usize <= a.n_edges() + b.n_edges(), || {
                "edge bound".into()
            })?;
            for c in graphs.iter().step_by(7) {
                check(shd(a, c).map_err(e)? <= ab + shd(b, c).map_err(e)?, || {
                    "triangle".into()
                })?;
            }
        }
    }

    // d-separation against path enumeration: exhaustive for d <= 4, sampled at d = 5.
    let mut dsep_cases: Vec<Dag> = (2..=4).flat_map(common::all_dags).collect();
    for k in 0..300 {
        dsep_cases.push(sample_er_dag(5, k % 11, &mut rng).map_err(e)?);
    }
    for g in &dsep_cases {
        let d = g.d();
        for i in 0..d {
            for j in (i + 1)..d {
                let rest: Vec<usize> = (0..d).filter(|&k| k != i && k != j).collect();
                for mask in 0..(1u32 << rest.len()) {
                    let z: Vec<usize> = rest
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, &v)| v)
                        .collect();
                    let got = d_separated(g, i, j, &z).map_err(e)?;
                    check(got == common::dsep_by_paths(g, i, j, &z), || {
                        format!("{:?} {i} {j} {z:?}", common::edges_of(g))
                    })?;
                }
            }
        }
    }

    // SID bounds bracket every extension: all pairs for d <= 3, sampled truths at d = 4.
    for d in 1..=4 {
        let dags = common::all_dags(d);
        let classes = common::brute_force_classes(d);
        let truths: Vec<&Dag> = if d < 4 {
            dags.iter().collect()
        } else {
            dags.iter().step_by(9).collect()
        };
        for t in truths {
            for class in &classes {
                let values: Vec<u64> = class.iter().map(|g| common::sid_brute(t, g)).collect();
                for (g, &v) in class.iter().zip(&values) {
                    check(sid_dag(t, g).map_err(e)? == v, || "sid_dag".into())?;
                }
                let b = sid(t, &Graph::Cpdag(dag_to_cpdag(&class[0])), 10_000).map_err(e)?;
                check(
                    b.lower == *values.iter().min().unwrap()
                        && b.upper == *values.iter().max().unwrap(),
                    || format!("SID bounds {:?} vs {values:?}", (b.lower, b.upper)),
                )?;
            }
        }
    }

    // Determinism across thread counts.
    let cfg = PipelineConfig {
        b: 24,
        d: 8,
        m_true: 10,
        ..study(10, 99)
    };
    let one = run_study(&cfg, Some(1)).map_err(e)?;
    for t in [2, 4, 7] {
        check(run_study(&cfg, Some(t)).map_err(e)? == one, || {
            format!("{t} threads differ")
        })?;
    }
    Ok(format!(
        "MEC d<=4, SHD axioms on {} graphs, d-separation on {} DAGs, SID bounds d<=4, threads 1/2/4/7",
        graphs.len(),
        dsep_cases.len()
    ))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        (
            "exact precision/recall table for (d=5, m_true=8, m_est=7)",
            Duration::from_secs(1),
            exact_expect_table,
        ),
        ("expected F1 surface", Duration::from_secs(1), f1_surface),
        (
            "skeleton fit test tp=10 in HyperGeom(231,30,30)",
            Duration::from_secs(1),
            fit_test,
        ),
        (
            "median precision/recall of random 5-node guesses",
            Duration::from_secs(5),
            worked_example_medians,
        ),
        (
            "empirical TP distribution vs exact pmf",
            Duration::from_secs(30),
            distributional_agreement,
        ),
        (
            "linearity and quantile transform grid, m_max <= 30",
            Duration::from_secs(60),
            linearity_grid,
        ),
        (
            "oracle PC returns the CPDAG",
            Duration::from_secs(60),
            oracle_pc,
        ),
        (
            "sparse/dense PC simulation studies",
            Duration::from_secs(600),
            pc_studies,
        ),
        ("Sachs fixtures", Duration::from_secs(30), sachs),
        (
            "property checks and determinism",
            Duration::from_secs(300),
            property_checks,
        ),
    ];
    let mut failed = 0;
    for (k, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if took <= *budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over budget of {budget:?}")),
            Err(d) => ("FAIL", d),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "{status} criterion {:>2}: {name} [{:.2}s] {detail}",
            k + 1,
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
