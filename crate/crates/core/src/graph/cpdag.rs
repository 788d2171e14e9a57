//! Markov equivalence classes: DAG to CPDAG and enumeration of the DAGs a
//! CPDAG represents.

use std::collections::BTreeSet;

use super::{Cpdag, Dag, Pdag, VStructure};
use crate::error::{Error, Result};

/// Default bound on the number of DAGs `enumerate_extensions` will return.
pub const DEFAULT_EXTENSION_CAP: usize = 10_000;

fn meek_r1(g: &Pdag, i: usize, j: usize) -> bool {
    // k -> i - j, k and j non-adjacent
    (0..g.d()).any(|k| g.has_directed(k, i) && k != j && !g.adjacent(k, j))
}

fn meek_r2(g: &Pdag, i: usize, j: usize) -> bool {
    // i -> k -> j
    (0..g.d()).any(|k| g.has_directed(i, k) && g.has_directed(k, j))
}

fn meek_r3(g: &Pdag, i: usize, j: usize) -> bool {
    // i - k -> j, i - l -> j, k and l non-adjacent
    let ks: Vec<usize> = (0..g.d())
        .filter(|&k| k != j && g.has_undirected(i, k) && g.has_directed(k, j))
        .collect();
    ks.iter()
        .enumerate()
        .any(|(x, &k)| ks[x + 1..].iter().any(|&l| !g.adjacent(k, l)))
}

fn meek_r4(g: &Pdag, i: usize, j: usize) -> bool {
    // i - k -> l -> j, k and j non-adjacent, i adjacent to l
    let d = g.d();
    (0..d).any(|k| {
        k != j
            && g.has_undirected(i, k)
            && !g.adjacent(k, j)
            && (0..d)
                .any(|l| l != i && g.has_directed(k, l) && g.has_directed(l, j) && g.adjacent(i, l))
    })
}

/// Close `g` under the four Meek orientation rules. Only undirected edges
/// are ever oriented.
pub(crate) fn apply_meek_rules(g: &mut Pdag) {
    let d = g.d();
    loop {
        let mut changed = false;
        for i in 0..d {
            for j in 0..d {
                if i == j || !g.has_undirected(i, j) {
                    continue;
                }
                if meek_r1(g, i, j) || meek_r2(g, i, j) || meek_r3(g, i, j) || meek_r4(g, i, j) {
                    g.orient(i, j);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// CPDAG of the Markov equivalence class of `g`.
pub fn dag_to_cpdag(g: &Dag) -> Cpdag {
    let d = g.d();
    let mut p = Pdag::with_labels(g.labels().to_vec()).expect("labels of a valid graph");
    for (i, j) in g.skeleton() {
        p.add_undirected(i, j).expect("skeleton pairs are distinct");
    }
    for v in g.v_structures() {
        p.orient(v.a, v.b);
        p.orient(v.c, v.b);
    }
    debug_assert_eq!(p.d(), d);
    apply_meek_rules(&mut p);
    Cpdag::from(p)
}

struct Enumerator {
    target: BTreeSet<VStructure>,
    cap: usize,
    stop_at_first: bool,
    found: Vec<Dag>,
}

impl Enumerator {
    fn consistent(&self, g: &Pdag) -> bool {
        g.directed_part_is_acyclic() && g.v_structures().is_subset(&self.target)
    }

    fn recurse(&mut self, mut g: Pdag) -> Result<()> {
        apply_meek_rules(&mut g);
        if !self.consistent(&g) {
            return Ok(());
        }
        let next = g.undirected_edges().first().copied();
        match next {
            None => {
                if g.v_structures() == self.target {
                    if self.found.len() == self.cap {
                        return Err(Error::ClassTooLarge { cap: self.cap });
                    }
                    self.found
                        .push(Dag::try_from(g).expect("consistent and fully directed"));
                }
            }
            Some((a, b)) => {
                for (from, to) in [(a, b), (b, a)] {
                    if self.stop_at_first && !self.found.is_empty() {
                        break;
                    }
                    let mut h = g.clone();
                    h.orient(from, to);
                    self.recurse(h)?;
                }
            }
        }
        Ok(())
    }
}

/// All DAGs with the skeleton of `p` that keep its directed edges, are
/// acyclic, and have exactly the v-structures of `p`.
///
/// Fails with [`Error::ClassTooLarge`] when more than `cap` DAGs exist.
pub fn enumerate_extensions(p: &Cpdag, cap: usize) -> Result<Vec<Dag>> {
    let mut e = Enumerator {
        target: p.v_structures(),
        cap,
        stop_at_first: false,
        found: Vec::new(),
    };
    e.recurse((**p).clone())?;
    Ok(e.found)
}

/// One consistent DAG extension of `p`, if any exists.
pub fn find_extension(p: &Cpdag) -> Option<Dag> {
    let mut e = Enumerator {
        target: p.v_structures(),
        cap: 1,
        stop_at_first: true,
        found: Vec::new(),
    };
    e.recurse((**p).clone()).ok()?;
    e.found.pop()
}
