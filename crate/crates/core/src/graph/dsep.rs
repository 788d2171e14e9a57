//! d-separation by reachability ("Bayes ball").

use super::Dag;
use crate::error::{Error, Result};

/// Parent/child lists of a DAG, optionally with the outgoing edges of one
/// node removed.
pub(crate) struct AdjLists {
    pub parents: Vec<Vec<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl AdjLists {
    pub fn of(g: &Dag) -> Self {
        let d = g.d();
        AdjLists {
            parents: (0..d).map(|i| g.parents(i)).collect(),
            children: (0..d).map(|i| g.children(i)).collect(),
        }
    }

    /// The graph with every edge `cut -> _` deleted.
    pub fn without_outgoing(g: &Dag, cut: usize) -> Self {
        let mut a = Self::of(g);
        for c in std::mem::take(&mut a.children[cut]) {
            a.parents[c].retain(|&p| p != cut);
        }
        a
    }

    /// Nodes d-connected to `source` given the conditioning mask `z`.
    /// `source` itself is reported as reachable.
    pub fn reachable(&self, source: usize, z: &[bool]) -> Vec<bool> {
        let d = self.parents.len();
        // Ancestors of Z (Z included) decide whether a collider is open.
        let mut anc = z.to_vec();
        let mut stack: Vec<usize> = (0..d).filter(|&v| z[v]).collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !anc[p] {
                    anc[p] = true;
                    stack.push(p);
                }
            }
        }

        // (node, arrived_from_child)
        let mut visited = vec![[false; 2]; d];
        let mut reach = vec![false; d];
        let mut queue = vec![(source, true)];
        while let Some((v, up)) = queue.pop() {
            let slot = usize::from(up);
            if visited[v][slot] {
                continue;
            }
            visited[v][slot] = true;
            if !z[v] {
                reach[v] = true;
            }
            if up {
                if !z[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
            } else {
                if !z[v] {
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
                if anc[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                }
            }
        }
        reach
    }
}

fn mask(d: usize, z: &[usize]) -> Result<Vec<bool>> {
    let mut m = vec![false; d];
    for &v in z {
        if v >= d {
            return Err(Error::NodeOutOfRange { node: v, d });
        }
        m[v] = true;
    }
    Ok(m)
}

/// True iff `i` and `j` are d-separated by `z` in `g`.
pub fn d_separated(g: &Dag, i: usize, j: usize, z: &[usize]) -> Result<bool> {
    g.check_node(i)?;
    g.check_node(j)?;
    if i == j {
        return Err(Error::InvalidArgument(
            "d-separation needs two distinct nodes".into(),
        ));
    }
    let zm = mask(g.d(), z)?;
    if zm[i] || zm[j] {
        return Err(Error::InvalidArgument(
            "conditioning set must not contain the tested nodes".into(),
        ));
    }
    Ok(!AdjLists::of(g).reachable(i, &zm)[j])
}

/// Every node d-connected to `source` given `z` (excluding `source`).
pub fn d_connected_from(g: &Dag, source: usize, z: &[usize]) -> Result<Vec<usize>> {
    g.check_node(source)?;
    let zm = mask(g.d(), z)?;
    let r = AdjLists::of(g).reachable(source, &zm);
    Ok((0..g.d()).filter(|&v| v != source && r[v]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_and_collider() {
        let chain = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(d_separated(&chain, 0, 2, &[1]).unwrap());
        assert!(!d_separated(&chain, 0, 2, &[]).unwrap());

        let collider = Dag::from_edges(3, &[(0, 1), (2, 1)]).unwrap();
        assert!(!d_separated(&collider, 0, 2, &[1]).unwrap());
        assert!(d_separated(&collider, 0, 2, &[]).unwrap());
    }

    #[test]
    fn descendant_of_collider_opens_path() {
        // 0 -> 1 <- 2, 1 -> 3
        let g = Dag::from_edges(4, &[(0, 1), (2, 1), (1, 3)]).unwrap();
        assert!(!d_separated(&g, 0, 2, &[3]).unwrap());
    }

    #[test]
    fn invalid_arguments() {
        let g = Dag::empty(3);
        assert!(d_separated(&g, 0, 0, &[]).is_err());
        assert!(d_separated(&g, 0, 1, &[1]).is_err());
        assert!(d_separated(&g, 0, 7, &[]).is_err());
    }

    #[test]
    fn removing_outgoing_edges() {
        // 0 -> 1, 2 -> 0, 2 -> 1: back-door 0 <- 2 -> 1
        let g = Dag::from_edges(3, &[(0, 1), (2, 0), (2, 1)]).unwrap();
        let cut = AdjLists::without_outgoing(&g, 0);
        assert!(cut.reachable(0, &[false; 3])[1]);
        assert!(!cut.reachable(0, &[false, false, true])[1]);
    }
}
