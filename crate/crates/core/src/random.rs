//! Seeded Erdős–Rényi-type DAG and CPDAG samplers used as negative controls.
//!
//! A draw picks a uniformly random total order of the nodes and a uniformly
//! random `m`-subset of the `d(d-1)/2` unordered pairs, then orients every
//! chosen pair along the order. The skeleton is therefore a uniform
//! `m`-subset, which is all the hypergeometric null relies on.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{dag_to_cpdag, max_edges, Cpdag, Dag, Graph, GraphKind};

/// `(seed, stream)` pair that fully determines a random stream. Distinct
/// streams of one seed are independent ChaCha streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngSeed { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }

    /// A new master seed for an independent purpose (e.g. one pipeline
    /// phase), keeping the stream index.
    pub fn derive(&self, tag: u64) -> RngSeed {
        RngSeed {
            seed: splitmix64(self.seed ^ splitmix64(tag)),
            stream: self.stream,
        }
    }

    pub fn with_stream(&self, stream: u64) -> RngSeed {
        RngSeed {
            seed: self.seed,
            stream,
        }
    }
}

/// Erdős–Rényi-type DAG over `X1..Xd` with exactly `m` edges.
pub fn sample_er_dag<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> Result<Dag> {
    let m_max = max_edges(d);
    if m > m_max {
        return Err(Error::InvalidArgument(format!(
            "edge count {m} exceeds the maximum {m_max} for {d} nodes"
        )));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(rng);
    let mut rank = vec![0usize; d];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }

    // Pair index p enumerates (i, j), i < j, row by row.
    let mut pairs = Vec::with_capacity(m_max);
    for i in 0..d {
        for j in (i + 1)..d {
            pairs.push((i, j));
        }
    }
    let mut edges: Vec<(usize, usize)> = index::sample(rng, m_max, m)
        .into_iter()
        .map(|p| {
            let (i, j) = pairs[p];
            if rank[i] < rank[j] {
                (i, j)
            } else {
                (j, i)
            }
        })
        .collect();
    edges.sort_unstable();
    Dag::from_edges(d, &edges)
}

/// CPDAG of an Erdős–Rényi-type DAG draw.
pub fn sample_er_cpdag<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> Result<Cpdag> {
    Ok(dag_to_cpdag(&sample_er_dag(d, m, rng)?))
}

/// Negative control of the requested kind, labeled like `labels`.
pub fn sample_negative_control<R: Rng + ?Sized>(
    labels: &[String],
    m: usize,
    kind: GraphKind,
    rng: &mut R,
) -> Result<Graph> {
    let dag = sample_er_dag(labels.len(), m, rng)?.relabeled(labels.to_vec())?;
    Ok(match kind {
        GraphKind::Dag => Graph::Dag(dag),
        GraphKind::Cpdag => Graph::Cpdag(dag_to_cpdag(&dag)),
    })
}
