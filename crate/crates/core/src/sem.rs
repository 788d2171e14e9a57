//! Linear Gaussian structural equation models over a DAG.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dag;

/// Ranges for randomly drawn edge weights (`±[lo, hi]`) and error
/// variances (`[lo, hi]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemConfig {
    pub n: usize,
    pub weight_range: (f64, f64),
    pub variance_range: (f64, f64),
}

impl Default for SemConfig {
    fn default() -> Self {
        SemConfig {
            n: 400,
            weight_range: (0.5, 2.0),
            variance_range: (0.5, 1.5),
        }
    }
}

impl SemConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.weight_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
            )));
        }
        let (vlo, vhi) = self.variance_range;
        if !(vlo > 0.0 && vlo <= vhi && vhi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "variance range must satisfy 0 < lo <= hi, got [{vlo}, {vhi}]"
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument(
                "sample size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A DAG with one weight per edge and one error variance per node.
#[derive(Debug, Clone, PartialEq)]
pub struct SemModel {
    dag: Dag,
    /// `weights[i * d + j]` is the coefficient of `X_i` in the equation of `X_j`.
    weights: Vec<f64>,
    variances: Vec<f64>,
}

impl SemModel {
    pub fn new(dag: Dag, weights: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        let d = dag.d();
        if weights.len() != d * d || variances.len() != d {
            return Err(Error::InvalidArgument(
                "weight/variance dimensions do not match the DAG".into(),
            ));
        }
        for i in 0..d {
            for j in 0..d {
                if weights[i * d + j] != 0.0 && !dag.has_directed(i, j) {
                    return Err(Error::InvalidArgument(format!(
                        "non-zero weight on non-edge {i} -> {j}"
                    )));
                }
            }
        }
        if variances.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidArgument(
                "error variances must be positive".into(),
            ));
        }
        Ok(SemModel {
            dag,
            weights,
            variances,
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.dag.d() + j]
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Edge weights in `directed_edges` order.
    pub fn edge_weights(&self) -> Vec<f64> {
        self.dag
            .directed_edges()
            .into_iter()
            .map(|(i, j)| self.weight(i, j))
            .collect()
    }

    /// Population covariance `(I - W^T)^{-1} diag(v) (I - W^T)^{-T}`.
    pub fn implied_covariance(&self) -> DMatrix<f64> {
        let d = self.dag.d();
        let w = DMatrix::from_row_slice(d, d, &self.weights);
        let a = (DMatrix::identity(d, d) - w.transpose())
            .try_inverse()
            .expect("I - W^T is unit triangular up to permutation");
        let omega = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.variances));
        &a * omega * a.transpose()
    }
}

/// Draw weights uniformly from `±[lo, hi]` and variances from `[vlo, vhi]`.
pub fn draw_sem<R: Rng + ?Sized>(g: &Dag, cfg: &SemConfig, rng: &mut R) -> Result<SemModel> {
    cfg.validate()?;
    let d = g.d();
    let (lo, hi) = cfg.weight_range;
    let (vlo, vhi) = cfg.variance_range;
    let mut weights = vec![0.0; d * d];
    for (i, j) in g.directed_edges() {
        let mag = uniform(lo, hi, rng);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        weights[i * d + j] = sign * mag;
    }
    let variances = (0..d).map(|_| uniform(vlo, vhi, rng)).collect();
    SemModel::new(g.clone(), weights, variances)
}

fn uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    if lo == hi {
        lo
    } else {
        Uniform::new_inclusive(lo, hi)
            .expect("validated range")
            .sample(rng)
    }
}

/// `n x d` matrix of observations, columns in node order.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    labels: Vec<String>,
    n: usize,
    /// Row-major values.
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(labels: Vec<String>, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * labels.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values for a {n} x {} matrix, got {}",
                n * labels.len(),
                labels.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "data matrix contains non-finite entries".into(),
            ));
        }
        Ok(DataMatrix { labels, n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.d() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let d = self.d();
        &self.values[row * d..(row + 1) * d]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, col)).collect()
    }

    /// Sample covariance (denominator `n - 1`).
    pub fn covariance(&self) -> DMatrix<f64> {
        let (n, d) = (self.n, self.d());
        let mut mean = vec![0.0; d];
        for r in 0..n {
            for (c, m) in mean.iter_mut().enumerate() {
                *m += self.get(r, c);
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut cov = DMatrix::zeros(d, d);
        for r in 0..n {
            let row = self.row(r);
            for a in 0..d {
                let xa = row[a] - mean[a];
                for b in a..d {
                    cov[(a, b)] += xa * (row[b] - mean[b]);
                }
            }
        }
        let denom = (n.max(2) - 1) as f64;
        for a in 0..d {
            for b in a..d {
                cov[(a, b)] /= denom;
                cov[(b, a)] = cov[(a, b)];
            }
        }
        cov
    }

    pub fn correlation(&self) -> DMatrix<f64> {
        let cov = self.covariance();
        let d = self.d();
        let sd: Vec<f64> = (0..d).map(|i| cov[(i, i)].sqrt()).collect();
        DMatrix::from_fn(d, d, |a, b| {
            if a == b {
                1.0
            } else {
                cov[(a, b)] / (sd[a] * sd[b])
            }
        })
    }

    /// CSV with a header of node labels.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.labels.join(","))?;
        for r in 0..self.n {
            let line: Vec<String> = self.row(r).iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// `n` i.i.d. rows of the SEM, each node evaluated in topological order.
pub fn simulate<R: Rng + ?Sized>(model: &SemModel, n: usize, rng: &mut R) -> Result<DataMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be positive".into(),
        ));
    }
    let dag = model.dag();
    let d = dag.d();
    let order = dag.topological_order().expect("DAG invariant");
    let parents: Vec<Vec<(usize, f64)>> = (0..d)
        .map(|j| {
            dag.parents(j)
                .into_iter()
                .map(|i| (i, model.weight(i, j)))
                .collect()
        })
        .collect();
    let sd: Vec<f64> = model.variances.iter().map(|v| v.sqrt()).collect();
    let mut values = vec![0.0; n * d];
    for row in values.chunks_mut(d) {
        for &j in &order {
            let z: f64 = StandardNormal.sample(rng);
            let mean: f64 = parents[j].iter().map(|&(i, w)| w * row[i]).sum();
            row[j] = mean + sd[j] * z;
        }
    }
    DataMatrix::new(dag.labels().to_vec(), n, values)
}
