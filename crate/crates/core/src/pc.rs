//! Order-stable PC algorithm with a Fisher-z test and a d-separation oracle.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::graph::{apply_meek_rules, d_separated, dag_to_cpdag, find_extension, Cpdag, Dag, Pdag};
use crate::sem::DataMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiTestKind {
    FisherZ,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcConfig {
    pub alpha: f64,
    /// `None` means unlimited.
    #[serde(default)]
    pub max_cond_size: Option<usize>,
    pub ci_test: CiTestKind,
}

impl Default for PcConfig {
    fn default() -> Self {
        PcConfig {
            alpha: 0.05,
            max_cond_size: None,
            ci_test: CiTestKind::FisherZ,
        }
    }
}

impl PcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// A conditional independence test returning a p-value for `i ⟂ j | z`.
pub trait CiTest: Sync {
    fn labels(&self) -> &[String];
    fn p_value(&self, i: usize, j: usize, z: &[usize]) -> Result<f64>;
}

/// Gaussian test on the sample correlation matrix.
#[derive(Debug, Clone)]
pub struct FisherZ {
    labels: Vec<String>,
    n: usize,
    corr: DMatrix<f64>,
}

impl FisherZ {
    pub fn new(data: &DataMatrix) -> Self {
        FisherZ {
            labels: data.labels().to_vec(),
            n: data.n(),
            corr: data.correlation(),
        }
    }

    pub fn from_correlation(labels: Vec<String>, n: usize, corr: DMatrix<f64>) -> Result<Self> {
        if corr.nrows() != labels.len() || corr.ncols() != labels.len() {
            return Err(Error::InvalidArgument(
                "correlation matrix does not match labels".into(),
            ));
        }
        Ok(FisherZ { labels, n, corr })
    }

    /// Sample partial correlation of `i` and `j` given `z`.
    pub fn partial_correlation(&self, i: usize, j: usize, z: &[usize]) -> Result<f64> {
        if z.is_empty() {
            return Ok(self.corr[(i, j)]);
        }
        let idx: Vec<usize> = [i, j].iter().chain(z).copied().collect();
        let k = idx.len();
        let sub = DMatrix::from_fn(k, k, |a, b| self.corr[(idx[a], idx[b])]);
        let chol = sub.cholesky().ok_or_else(|| {
            Error::Numerical(format!(
                "singular correlation submatrix for {i}, {j} given {z:?}"
            ))
        })?;
        let prec = chol.inverse();
        Ok(-prec[(0, 1)] / (prec[(0, 0)] * prec[(1, 1)]).sqrt())
    }
}

/// Two-sided p-value of the Fisher z statistic `sqrt(n - |Z| - 3) |atanh r|`.
pub fn fisher_z_p(r: f64, n: usize, cond_size: usize) -> Result<f64> {
    if n <= cond_size + 3 {
        return Err(Error::InvalidArgument(format!(
            "Fisher z needs n > |Z| + 3, got n = {n}, |Z| = {cond_size}"
        )));
    }
    if r.is_nan() {
        return Err(Error::Numerical("partial correlation is NaN".into()));
    }
    let a = r.abs().min(1.0);
    if a == 1.0 {
        return Ok(0.0);
    }
    let z = 0.5 * ((1.0 + a) / (1.0 - a)).ln();
    let stat = ((n - cond_size - 3) as f64).sqrt() * z;
    Ok(erfc(stat / std::f64::consts::SQRT_2))
}

impl CiTest for FisherZ {
    fn labels(&self) -> &[String] {
        &self.labels
    }

    fn p_value(&self, i: usize, j: usize, z: &[usize]) -> Result<f64> {
        let r = self.partial_correlation(i, j, z)?;
        fisher_z_p(r, self.n, z.len())
    }
}

/// Fisher z p-value for columns `i`, `j` of `data` given `z`.
pub fn fisher_z_test(data: &DataMatrix, i: usize, j: usize, z: &[usize]) -> Result<f64> {
    let d = data.d();
    for &v in [i, j].iter().chain(z) {
        if v >= d {
            return Err(Error::NodeOutOfRange { node: v, d });
        }
    }
    if i == j || z.contains(&i) || z.contains(&j) {
        return Err(Error::InvalidArgument("i, j and z must be disjoint".into()));
    }
    FisherZ::new(data).p_value(i, j, z)
}

/// Perfect CI information: p = 1 when d-separated, 0 otherwise.
#[derive(Debug, Clone, Copy)]
pub struct DSepOracle<'a>(pub &'a Dag);

impl CiTest for DSepOracle<'_> {
    fn labels(&self) -> &[String] {
        self.0.labels()
    }

    fn p_value(&self, i: usize, j: usize, z: &[usize]) -> Result<f64> {
        Ok(if d_separated(self.0, i, j, z)? {
            1.0
        } else {
            0.0
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcOutput {
    pub cpdag: Cpdag,
    /// Separating set for each removed pair `(i, j)`, `i < j`.
    pub sepsets: BTreeMap<(usize, usize), Vec<usize>>,
    /// Whether the output is the CPDAG of some DAG.
    pub proper: bool,
    pub n_tests: usize,
}

/// Visit the `k`-subsets of `items` in lexicographic order until `f` returns
/// `Some`.
fn first_subset<T>(
    items: &[usize],
    k: usize,
    mut f: impl FnMut(&[usize]) -> Result<Option<T>>,
) -> Result<Option<T>> {
    let n = items.len();
    if k > n {
        return Ok(None);
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf = vec![0; k];
    loop {
        for (b, &x) in buf.iter_mut().zip(&idx) {
            *b = items[x];
        }
        if let Some(t) = f(&buf)? {
            return Ok(Some(t));
        }
        let mut p = k;
        loop {
            if p == 0 {
                return Ok(None);
            }
            p -= 1;
            if idx[p] != p + n - k {
                break;
            }
        }
        idx[p] += 1;
        for q in p + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Run PC with an arbitrary CI test.
pub fn pc<T: CiTest>(test: &T, cfg: &PcConfig) -> Result<PcOutput> {
    cfg.validate()?;
    let labels = test.labels().to_vec();
    let d = labels.len();
    let mut adj = vec![vec![true; d]; d];
    for (i, row) in adj.iter_mut().enumerate() {
        row[i] = false;
    }
    let mut sepsets = BTreeMap::new();
    let mut n_tests = 0usize;

    let mut level = 0usize;
    loop {
        if cfg.max_cond_size.is_some_and(|m| level > m) {
            break;
        }
        let frozen: Vec<Vec<usize>> = (0..d)
            .map(|i| (0..d).filter(|&k| adj[i][k]).collect())
            .collect();
        let pairs: Vec<(usize, usize)> = (0..d)
            .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
            .filter(|&(i, j)| adj[i][j])
            .collect();
        if !pairs
            .iter()
            .any(|&(i, j)| frozen[i].len() > level || frozen[j].len() > level)
        {
            break;
        }
        let results: Vec<((usize, usize), Option<Vec<usize>>, usize)> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let mut tests = 0;
                for (a, b) in [(i, j), (j, i)] {
                    let cands: Vec<usize> = frozen[a].iter().copied().filter(|&k| k != b).collect();
                    let found = first_subset(&cands, level, |z| {
                        tests += 1;
                        Ok((test.p_value(i, j, z)? > cfg.alpha).then(|| z.to_vec()))
                    })?;
                    if let Some(z) = found {
                        return Ok(((i, j), Some(z), tests));
                    }
                }
                Ok(((i, j), None, tests))
            })
            .collect::<Result<_>>()?;
        for ((i, j), sep, tests) in results {
            n_tests += tests;
            if let Some(z) = sep {
                adj[i][j] = false;
                adj[j][i] = false;
                sepsets.insert((i, j), z);
            }
        }
        level += 1;
    }

    let mut g = Pdag::with_labels(labels)?;
    for i in 0..d {
        for j in (i + 1)..d {
            if adj[i][j] {
                g.add_undirected(i, j)?;
            }
        }
    }
    orient_colliders(&mut g, &sepsets);
    apply_meek_rules(&mut g);

    let cpdag = Cpdag::from(g);
    let proper = find_extension(&cpdag).is_some_and(|ext| dag_to_cpdag(&ext) == cpdag);
    Ok(PcOutput {
        cpdag,
        sepsets,
        proper,
        n_tests,
    })
}

/// Orient `a -> c <- b` for every unshielded triple with `c` outside the
/// separating set of `a` and `b`. An edge asked for in both directions is
/// left undirected.
fn orient_colliders(g: &mut Pdag, sepsets: &BTreeMap<(usize, usize), Vec<usize>>) {
    let d = g.d();
    let mut wanted = vec![vec![false; d]; d];
    for a in 0..d {
        for b in (a + 1)..d {
            if g.adjacent(a, b) {
                continue;
            }
            let sep = sepsets.get(&(a, b));
            for c in 0..d {
                if g.adjacent(a, c) && g.adjacent(b, c) && !sep.is_some_and(|s| s.contains(&c)) {
                    wanted[a][c] = true;
                    wanted[b][c] = true;
                }
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            if wanted[i][j] && !wanted[j][i] {
                g.orient(i, j);
            }
        }
    }
}

pub fn pc_fisher_z(data: &DataMatrix, cfg: &PcConfig) -> Result<PcOutput> {
    pc(&FisherZ::new(data), cfg)
}

pub fn pc_oracle(truth: &Dag, cfg: &PcConfig) -> Result<PcOutput> {
    pc(&DSepOracle(truth), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::RngSeed;
    use crate::sem::{simulate, SemModel};

    fn oracle_cfg() -> PcConfig {
        PcConfig {
            ci_test: CiTestKind::Oracle,
            ..PcConfig::default()
        }
    }

    #[test]
    fn fisher_z_reference_value() {
        // n = 100, r = 0.3, no conditioning
        let p = fisher_z_p(0.3, 100, 0).unwrap();
        assert!((p - 0.002_300_523_143_900_677_7).abs() < 1e-12, "p = {p}");
        let stat = 97f64.sqrt() * 0.3f64.atanh();
        assert!((stat - 3.048_414_568_664_659).abs() < 1e-12);
    }

    #[test]
    fn fisher_z_zero_and_symmetry() {
        assert_eq!(fisher_z_p(0.0, 50, 2).unwrap(), 1.0);
        for r in [0.01, 0.2, 0.55, 0.97] {
            assert_eq!(
                fisher_z_p(r, 80, 1).unwrap(),
                fisher_z_p(-r, 80, 1).unwrap()
            );
        }
        assert!(fisher_z_p(0.2, 5, 2).is_err());
    }

    #[test]
    fn singular_conditioning_is_an_error() {
        let labels: Vec<String> = ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect();
        let mut corr = DMatrix::identity(4, 4);
        corr[(2, 3)] = 1.0;
        corr[(3, 2)] = 1.0;
        let t = FisherZ::from_correlation(labels, 100, corr).unwrap();
        assert!(matches!(t.p_value(0, 1, &[2, 3]), Err(Error::Numerical(_))));
    }

    #[test]
    fn subsets_are_lexicographic() {
        let mut seen = Vec::new();
        first_subset::<()>(&[3, 5, 7, 9], 2, |z| {
            seen.push(z.to_vec());
            Ok(None)
        })
        .unwrap();
        assert_eq!(
            seen,
            vec![
                vec![3, 5],
                vec![3, 7],
                vec![3, 9],
                vec![5, 7],
                vec![5, 9],
                vec![7, 9]
            ]
        );
        let mut empty = 0;
        first_subset::<()>(&[1, 2], 0, |_| {
            empty += 1;
            Ok(None)
        })
        .unwrap();
        assert_eq!(empty, 1);
    }

    #[test]
    fn oracle_on_empty_and_small_graphs() {
        let out = pc_oracle(&Dag::empty(4), &oracle_cfg()).unwrap();
        assert!(out.cpdag.is_empty());
        assert!(out.proper);
        let collider = Dag::from_edges(3, &[(0, 1), (2, 1)]).unwrap();
        assert_eq!(
            pc_oracle(&collider, &oracle_cfg()).unwrap().cpdag,
            dag_to_cpdag(&collider)
        );
        let fig1 = crate::graph::fixtures::fig1_truth();
        let out = pc_oracle(&fig1, &oracle_cfg()).unwrap();
        assert_eq!(out.cpdag, dag_to_cpdag(&fig1));
    }

    #[test]
    fn oracle_is_node_order_invariant() {
        let g = Dag::from_edges(5, &[(0, 2), (1, 2), (2, 3), (3, 4), (1, 4)]).unwrap();
        let perm = [3, 0, 4, 1, 2];
        let edges: Vec<(usize, usize)> = g
            .directed_edges()
            .into_iter()
            .map(|(i, j)| (perm[i], perm[j]))
            .collect();
        let mut labels = vec![String::new(); 5];
        for (i, &p) in perm.iter().enumerate() {
            labels[p] = g.label(i).to_string();
        }
        let h = Dag::from_labeled_edges(labels, &edges).unwrap();
        let a = pc_oracle(&g, &oracle_cfg()).unwrap().cpdag;
        let b = pc_oracle(&h, &oracle_cfg()).unwrap().cpdag;
        assert_eq!(b.reordered(a.labels()).unwrap(), *a);
    }

    #[test]
    fn max_cond_size_zero_keeps_marginally_dependent_pairs() {
        let chain = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let cfg = PcConfig {
            max_cond_size: Some(0),
            ..oracle_cfg()
        };
        assert_eq!(pc_oracle(&chain, &cfg).unwrap().cpdag.n_edges(), 3);
    }

    #[test]
    fn fisher_z_recovers_strong_collider() {
        let g = Dag::from_edges(3, &[(0, 1), (2, 1)]).unwrap();
        let model = SemModel::new(
            g.clone(),
            vec![0.0, 1.5, 0.0, 0.0, 0.0, 0.0, 0.0, -1.5, 0.0],
            vec![1.0; 3],
        )
        .unwrap();
        let target = dag_to_cpdag(&g);
        let cfg = PcConfig::default();
        let hits = (0..200)
            .filter(|&s| {
                let data = simulate(&model, 10_000, &mut RngSeed::new(77, s).rng()).unwrap();
                pc_fisher_z(&data, &cfg).unwrap().cpdag == target
            })
            .count();
        assert!(hits >= 190, "{hits} / 200");
    }
}
