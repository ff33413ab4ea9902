//! Simple regular graphs on vertices `1..=n` and support-digraph helpers.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("edge {{{0}, {1}}} has an endpoint outside 1..={2}")]
    VertexOutOfRange(usize, usize, usize),
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} has degree {degree} ≠ {expected}")]
    WrongDegree {
        vertex: usize,
        degree: usize,
        expected: usize,
    },
    #[error("no {degree}-regular graph on {n} vertices")]
    Infeasible { n: usize, degree: usize },
    #[error("catalog enumeration limited to n <= {max} (got {n})")]
    TooLarge { n: usize, max: usize },
}

/// A simple undirected `d`-regular graph. Vertices are 1-indexed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegularGraph {
    n: usize,
    degree: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl RegularGraph {
    pub fn new(n: usize, degree: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == 0 || v == 0 || u > n || v > n {
                return Err(GraphError::VertexOutOfRange(u, v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge(key.0, key.1));
            }
            adjacency[u - 1].push(v);
            adjacency[v - 1].push(u);
        }
        for (idx, nbrs) in adjacency.iter_mut().enumerate() {
            if nbrs.len() != degree {
                return Err(GraphError::WrongDegree {
                    vertex: idx + 1,
                    degree: nbrs.len(),
                    expected: degree,
                });
            }
            nbrs.sort_unstable();
        }
        Ok(Self {
            n,
            degree,
            edges: seen.into_iter().collect(),
            adjacency,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v - 1]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u >= 1 && u <= self.n && self.adjacency[u - 1].binary_search(&v).is_ok()
    }

    pub fn is_vertex_cover(&self, cover: &[usize]) -> bool {
        self.edges
            .iter()
            .all(|&(u, v)| cover.contains(&u) || cover.contains(&v))
    }

    /// Edges with neither endpoint in `cover`.
    pub fn uncovered_edges(&self, cover: &[usize]) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .copied()
            .filter(|&(u, v)| !cover.contains(&u) && !cover.contains(&v))
            .collect()
    }

    /// Triangle on `{1, 2, 3}`.
    pub fn triangle() -> Self {
        Self::cycle(3).expect("triangle")
    }

    pub fn cycle(n: usize) -> Result<Self, GraphError> {
        if n < 3 {
            return Err(GraphError::Infeasible { n, degree: 2 });
        }
        let edges: Vec<_> = (1..=n).map(|v| (v, v % n + 1)).collect();
        Self::new(n, 2, &edges)
    }

    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for u in 1..=n {
            for v in u + 1..=n {
                edges.push((u, v));
            }
        }
        Self::new(n, n.saturating_sub(1), &edges)
    }
}

/// Strong connectivity of the digraph `i -> j` whenever `has_arc(i, j)`.
///
/// Returns the first vertex (0-based) not reachable from 0 in the forward or
/// reverse direction, or `None` if strongly connected.
pub fn first_unreachable(n: usize, has_arc: impl Fn(usize, usize) -> bool) -> Option<usize> {
    if n == 0 {
        return None;
    }
    let forward = reach(n, |i, j| has_arc(i, j));
    let backward = reach(n, |i, j| has_arc(j, i));
    (0..n).find(|&v| !forward[v] || !backward[v])
}

fn reach(n: usize, arc: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !seen[j] && arc(i, j) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// Largest `n` accepted by [`regular_graphs`].
pub const CATALOG_MAX_N: usize = 10;

/// All `d`-regular simple graphs on `n` vertices, one representative per
/// isomorphism class, in generation order (deterministic).
pub fn regular_graphs(n: usize, d: usize) -> Result<Vec<RegularGraph>, GraphError> {
    if n > CATALOG_MAX_N {
        return Err(GraphError::TooLarge {
            n,
            max: CATALOG_MAX_N,
        });
    }
    if n == 0 || d >= n || (n * d) % 2 == 1 {
        return Err(GraphError::Infeasible { n, degree: d });
    }
    let mut reps: Vec<(Invariant, Vec<u16>)> = Vec::new();
    let mut adj = vec![0u16; n];
    enumerate_labeled(n, d, &mut adj, &mut |g| {
        let inv = invariant(g);
        let known = reps
            .iter()
            .any(|(rinv, r)| *rinv == inv && isomorphic(r, g));
        if !known {
            reps.push((inv, g.to_vec()));
        }
    });
    Ok(reps
        .into_iter()
        .map(|(_, g)| {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if g[u] >> v & 1 == 1 {
                        edges.push((u + 1, v + 1));
                    }
                }
            }
            RegularGraph::new(n, d, &edges).expect("enumerated graph is regular")
        })
        .collect())
}

fn enumerate_labeled(n: usize, d: usize, adj: &mut [u16], visit: &mut impl FnMut(&[u16])) {
    let deficit = |adj: &[u16], v: usize| d - adj[v].count_ones() as usize;
    let Some(v) = (0..n).find(|&v| deficit(adj, v) > 0) else {
        visit(adj);
        return;
    };
    let need = deficit(adj, v);
    let candidates: Vec<usize> = (v + 1..n)
        .filter(|&w| adj[v] >> w & 1 == 0 && deficit(adj, w) > 0)
        .collect();
    if candidates.len() < need {
        return;
    }
    let mut chosen = Vec::with_capacity(need);
    choose(&candidates, need, 0, &mut chosen, &mut |set| {
        for &w in set {
            adj[v] |= 1 << w;
            adj[w] |= 1 << v;
        }
        enumerate_labeled(n, d, adj, visit);
        for &w in set {
            adj[v] &= !(1 << w);
            adj[w] &= !(1 << v);
        }
    });
}

fn choose(
    items: &[usize],
    k: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]),
) {
    if chosen.len() == k {
        f(chosen);
        return;
    }
    for i in start..items.len() {
        if items.len() - i < k - chosen.len() {
            break;
        }
        chosen.push(items[i]);
        choose(items, k, i + 1, chosen, f);
        chosen.pop();
    }
}

type Invariant = Vec<(u32, u32)>;

/// Per-vertex (triangles through v, vertices at distance 2), sorted.
fn invariant(adj: &[u16]) -> Invariant {
    let n = adj.len();
    let mut inv: Vec<(u32, u32)> = (0..n)
        .map(|v| {
            let nb = adj[v];
            let mut tri = 0;
            let mut second = 0u16;
            for u in 0..n {
                if nb >> u & 1 == 1 {
                    tri += (adj[u] & nb).count_ones();
                    second |= adj[u];
                }
            }
            second &= !nb & !(1 << v);
            (tri / 2, second.count_ones())
        })
        .collect();
    inv.sort_unstable();
    inv
}

fn isomorphic(a: &[u16], b: &[u16]) -> bool {
    let n = a.len();
    let mut map = vec![usize::MAX; n];
    let mut used = 0u16;
    extend_iso(a, b, 0, &mut map, &mut used)
}

fn extend_iso(a: &[u16], b: &[u16], v: usize, map: &mut [usize], used: &mut u16) -> bool {
    let n = a.len();
    if v == n {
        return true;
    }
    for w in 0..n {
        if *used >> w & 1 == 1 {
            continue;
        }
        let consistent = (0..v).all(|u| (a[v] >> u & 1) == (b[w] >> map[u] & 1));
        if !consistent {
            continue;
        }
        map[v] = w;
        *used |= 1 << w;
        if extend_iso(a, b, v + 1, map, used) {
            return true;
        }
        *used &= !(1 << w);
    }
    map[v] = usize::MAX;
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_is_rejected_with_vertex() {
        let err = RegularGraph::new(3, 2, &[(1, 2), (2, 3)]).unwrap_err();
        assert_eq!(
            err,
            GraphError::WrongDegree {
                vertex: 1,
                degree: 1,
                expected: 2
            }
        );
        assert_eq!(alloc::format!("{err}"), "vertex 1 has degree 1 ≠ 2");
    }

    #[test]
    fn malformed_edges_are_rejected() {
        assert_eq!(
            RegularGraph::new(3, 2, &[(1, 1)]),
            Err(GraphError::SelfLoop(1))
        );
        assert_eq!(
            RegularGraph::new(2, 1, &[(1, 2), (2, 1)]),
            Err(GraphError::DuplicateEdge(1, 2))
        );
        assert!(matches!(
            RegularGraph::new(2, 1, &[(1, 3)]),
            Err(GraphError::VertexOutOfRange(1, 3, 2))
        ));
    }

    #[test]
    fn cover_queries() {
        let g = RegularGraph::triangle();
        assert!(g.is_vertex_cover(&[1, 2]));
        assert!(!g.is_vertex_cover(&[1]));
        assert_eq!(g.uncovered_edges(&[1]), vec![(2, 3)]);
    }

    #[test]
    fn catalog_counts_match_known_values() {
        // 2-regular graphs are disjoint unions of cycles of length >= 3.
        let two: Vec<usize> = (3..=8).map(|n| regular_graphs(n, 2).unwrap().len()).collect();
        assert_eq!(two, vec![1, 1, 1, 2, 2, 3]);
        // Cubic graphs on 4, 6, 8 vertices (including disconnected 2K4).
        let three: Vec<usize> = [4, 6, 8]
            .iter()
            .map(|&n| regular_graphs(n, 3).unwrap().len())
            .collect();
        assert_eq!(three, vec![1, 2, 6]);
    }

    #[test]
    fn catalog_rejects_infeasible() {
        assert!(regular_graphs(5, 3).is_err());
        assert!(regular_graphs(3, 3).is_err());
    }

    #[test]
    fn strong_connectivity() {
        assert_eq!(first_unreachable(3, |i, j| (i + 1) % 3 == j), None);
        assert_eq!(first_unreachable(3, |i, j| j == i + 1), Some(1));
        assert_eq!(first_unreachable(4, |i, j| i / 2 == j / 2 && i != j), Some(2));
    }
}
