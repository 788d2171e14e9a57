//! Brute-force reference implementations used by the property and
//! acceptance suites. Nothing here calls the algorithms under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ncdisco::graph::{Dag, Pdag};

pub type Edges = Vec<(usize, usize)>;

/// Directed edge list of `g`.
pub fn edges_of(g: &Pdag) -> Edges {
    let d = g.d();
    let mut out = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if g.has_directed(i, j) {
                out.push((i, j));
            }
        }
    }
    out
}

fn acyclic(d: usize, edges: &[(usize, usize)]) -> bool {
    // Repeatedly strip sinks.
    let mut alive = vec![true; d];
    for _ in 0..d {
        let sink = (0..d).find(|&v| alive[v] && !edges.iter().any(|&(a, b)| a == v && alive[b]));
        match sink {
            Some(v) => alive[v] = false,
            None => return false,
        }
    }
    true
}

/// Every labelled DAG on `d` nodes (1, 1, 3, 25, 543 for d = 0..4).
pub fn all_dags(d: usize) -> Vec<Dag> {
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
        .collect();
    let mut out = Vec::new();
    let total = 3usize.pow(pairs.len() as u32);
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::new();
        for &(i, j) in &pairs {
            match c % 3 {
                1 => edges.push((i, j)),
                2 => edges.push((j, i)),
                _ => {}
            }
            c /= 3;
        }
        if acyclic(d, &edges) {
            out.push(Dag::from_edges(d, &edges).unwrap());
        }
    }
    out
}

fn adjacent(edges: &[(usize, usize)], a: usize, b: usize) -> bool {
    edges
        .iter()
        .any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
}

/// Skeleton and unshielded colliders computed from the edge list.
pub fn mec_signature(g: &Dag) -> (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize, usize)>) {
    let e = edges_of(g);
    let skel = e.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let mut vs = BTreeSet::new();
    for &(a, c) in &e {
        for &(b, c2) in &e {
            if c == c2 && a < b && !adjacent(&e, a, b) {
                vs.insert((a, c, b));
            }
        }
    }
    (skel, vs)
}

/// Markov equivalence classes of all DAGs on `d` nodes, keyed by signature.
pub fn brute_force_classes(d: usize) -> Vec<Vec<Dag>> {
    let mut classes: BTreeMap<_, Vec<Dag>> = BTreeMap::new();
    for g in all_dags(d) {
        classes.entry(mec_signature(&g)).or_default().push(g);
    }
    classes.into_values().collect()
}

fn descendants(d: usize, edges: &[(usize, usize)], v: usize) -> Vec<bool> {
    let mut seen = vec![false; d];
    seen[v] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for &(a, b) in edges {
            if seen[a] && !seen[b] {
                seen[b] = true;
                changed = true;
            }
        }
    }
    seen
}

/// d-separation by enumerating every simple path between `i` and `j`.
pub fn dsep_by_paths(g: &Dag, i: usize, j: usize, z: &[usize]) -> bool {
    let d = g.d();
    let e = edges_of(g);
    let desc: Vec<Vec<bool>> = (0..d).map(|v| descendants(d, &e, v)).collect();
    let in_z = |v: usize| z.contains(&v);
    let collider_open = |v: usize| (0..d).any(|w| desc[v][w] && in_z(w));

    let mut path = vec![i];
    let mut on_path = vec![false; d];
    on_path[i] = true;

    fn walk(
        path: &mut Vec<usize>,
        on_path: &mut Vec<bool>,
        j: usize,
        d: usize,
        e: &[(usize, usize)],
        open: &dyn Fn(&[usize]) -> bool,
    ) -> bool {
        let last = *path.last().unwrap();
        if last == j {
            return open(path);
        }
        for next in 0..d {
            if !on_path[next] && adjacent(e, last, next) {
                path.push(next);
                on_path[next] = true;
                let found = walk(path, on_path, j, d, e, open);
                path.pop();
                on_path[next] = false;
                if found {
                    return true;
                }
            }
        }
        false
    }

    let has = |a: usize, b: usize| e.contains(&(a, b));
    let open = |p: &[usize]| {
        (1..p.len() - 1).all(|k| {
            let (a, v, b) = (p[k - 1], p[k], p[k + 1]);
            if has(a, v) && has(b, v) {
                collider_open(v)
            } else {
                !in_z(v)
            }
        })
    };
    !walk(&mut path, &mut on_path, j, d, &e, &open)
}

/// SID between DAGs from its definition, with path-enumeration d-separation.
pub fn sid_brute(truth: &Dag, est: &Dag) -> u64 {
    let d = truth.d();
    let te = edges_of(truth);
    let mut count = 0;
    for i in 0..d {
        let z: Vec<usize> = (0..d).filter(|&k| est.has_directed(k, i)).collect();
        let desc = descendants(d, &te, i);
        for j in 0..d {
            if j == i {
                continue;
            }
            let ok = if z.contains(&j) {
                // The estimate implies no effect of i on j.
                !desc[j]
            } else if desc[j] {
                // Back-door: no descendants of i in Z, and Z blocks every
                // path once i's outgoing edges are removed.
                let cut: Edges = te.iter().copied().filter(|&(a, _)| a != i).collect();
                let g_cut = Dag::from_labeled_edges(truth.labels().to_vec(), &cut).unwrap();
                z.iter().all(|&k| !desc[k]) && dsep_by_paths(&g_cut, i, j, &z)
            } else {
                dsep_by_paths(truth, i, j, &z)
            };
            if !ok {
                count += 1;
            }
        }
    }
    count
}

/// Hypergeometric pmf from exact binomial coefficients.
pub fn hyper_pmf(m_max: u64, m_true: u64, m_est: u64, k: u64) -> f64 {
    fn binom(n: u64, k: u64) -> f64 {
        if k > n {
            return 0.0;
        }
        let k = k.min(n - k);
        let mut r = 1.0f64;
        for i in 0..k {
            r = r * (n - i) as f64 / (i + 1) as f64;
        }
        r
    }
    if k > m_true || k > m_est || m_est - k > m_max - m_true {
        return 0.0;
    }
    binom(m_true, k) * binom(m_max - m_true, m_est - k) / binom(m_max, m_est)
}

/// Adjacency TP between two skeletons given as edge lists.
pub fn shared_adjacencies(a: &Pdag, b: &Pdag) -> usize {
    let d = a.d();
    (0..d)
        .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
        .filter(|&(i, j)| a.adjacent(i, j) && b.adjacent(i, j))
        .count()
}

/// Count of pairs whose edge mark differs, from raw marks.
pub fn shd_brute(a: &Pdag, b: &Pdag) -> u64 {
    let d = a.d();
    let mark = |g: &Pdag, i: usize, j: usize| {
        (
            g.has_directed(i, j) || g.has_undirected(i, j),
            g.has_directed(j, i) || g.has_undirected(i, j),
        )
    };
    let mut n = 0;
    for i in 0..d {
        for j in (i + 1)..d {
            if mark(a, i, j) != mark(b, i, j) {
                n += 1;
            }
        }
    }
    n
}
