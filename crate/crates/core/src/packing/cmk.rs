//! Cuthill-McKee relabeling for bandwidth reduction, with the George-Liu
//! pseudo-peripheral start heuristic.

use crate::mesh::AdjacencyGraph;

/// Bijection between old and new vertex labels.
///
/// `forward[old] = new`, `inverse[new] = old`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Permutation {
        Permutation {
            forward: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    /// Builds a permutation from its forward map.
    ///
    /// Panics if `forward` is not a bijection on `0..forward.len()`.
    pub fn from_forward(forward: Vec<usize>) -> Permutation {
        let mut inverse = vec![usize::MAX; forward.len()];
        for (old, &new) in forward.iter().enumerate() {
            assert!(
                inverse[new] == usize::MAX,
                "forward map sends two vertices to {new}"
            );
            inverse[new] = old;
        }
        Permutation { forward, inverse }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    /// New label of vertex `old`.
    pub fn apply(&self, old: usize) -> usize {
        self.forward[old]
    }

    pub fn reversed(&self) -> Permutation {
        let n = self.len();
        Permutation::from_forward(self.forward.iter().map(|&f| n - 1 - f).collect())
    }
}

/// Maximum over edges `(i, j)` of `|perm(i) - perm(j)|`; 0 for edgeless
/// graphs.
pub fn bandwidth(graph: &AdjacencyGraph, perm: &Permutation) -> usize {
    assert_eq!(perm.len(), graph.n());
    let mut bw = 0usize;
    for i in 0..graph.n() {
        let pi = perm.apply(i);
        for &j in graph.neighbors(i) {
            let pj = perm.apply(j as usize);
            bw = bw.max(pi.abs_diff(pj));
        }
    }
    bw
}

/// Classic Cuthill-McKee: breadth-first visit from a peripheral vertex,
/// neighbors taken in ascending-degree order with ties broken by the lower
/// original index. Disconnected graphs are handled one component at a time,
/// in order of discovery.
///
/// `start` overrides the heuristic start vertex for the component that
/// contains it.
pub fn cuthill_mckee(graph: &AdjacencyGraph, start: Option<usize>) -> Permutation {
    let n = graph.n();
    let mut forward = vec![usize::MAX; n];
    let mut next_label = 0usize;
    let mut queue = std::collections::VecDeque::new();
    let mut scratch: Vec<u32> = Vec::new();

    for seed in 0..n {
        if forward[seed] != usize::MAX {
            continue;
        }
        let root = match start {
            Some(s) if forward[s] == usize::MAX && same_component(graph, seed, s, &forward) => s,
            _ => pseudo_peripheral(graph, seed, &forward),
        };
        forward[root] = next_label;
        next_label += 1;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            scratch.clear();
            scratch.extend(
                graph
                    .neighbors(v)
                    .iter()
                    .filter(|&&u| forward[u as usize] == usize::MAX),
            );
            scratch.sort_by_key(|&u| (graph.degree(u as usize), u));
            for &u in &scratch {
                forward[u as usize] = next_label;
                next_label += 1;
                queue.push_back(u as usize);
            }
        }
    }
    Permutation::from_forward(forward)
}

/// Cuthill-McKee with the final labels reversed.
pub fn reverse_cuthill_mckee(graph: &AdjacencyGraph, start: Option<usize>) -> Permutation {
    cuthill_mckee(graph, start).reversed()
}

fn same_component(
    graph: &AdjacencyGraph,
    seed: usize,
    target: usize,
    labeled: &[usize],
) -> bool {
    if seed == target {
        return true;
    }
    let mut seen = vec![false; graph.n()];
    let mut queue = std::collections::VecDeque::from([seed]);
    seen[seed] = true;
    while let Some(v) = queue.pop_front() {
        for &u in graph.neighbors(v) {
            let u = u as usize;
            if u == target {
                return true;
            }
            if !seen[u] && labeled[u] == usize::MAX {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    false
}

/// George-Liu heuristic within the unlabeled component containing `seed`:
/// walk to a minimum-degree vertex of the deepest BFS level until the
/// eccentricity stops growing.
fn pseudo_peripheral(graph: &AdjacencyGraph, seed: usize, labeled: &[usize]) -> usize {
    let mut level = vec![usize::MAX; graph.n()];
    let (mut ecc, mut last) = bfs_levels(graph, seed, labeled, &mut level);
    loop {
        let y = *last
            .iter()
            .min_by_key(|&&v| (graph.degree(v), v))
            .expect("bfs last level is never empty");
        let (ecc_y, last_y) = bfs_levels(graph, y, labeled, &mut level);
        if ecc_y > ecc {
            ecc = ecc_y;
            last = last_y;
        } else {
            return y;
        }
    }
}

/// BFS over unlabeled vertices; returns the eccentricity and the deepest
/// level's vertices (sorted by index).
fn bfs_levels(
    graph: &AdjacencyGraph,
    root: usize,
    labeled: &[usize],
    level: &mut [usize],
) -> (usize, Vec<usize>) {
    level.fill(usize::MAX);
    level[root] = 0;
    let mut queue = std::collections::VecDeque::from([root]);
    let mut depth = 0usize;
    let mut deepest = vec![root];
    while let Some(v) = queue.pop_front() {
        for &u in graph.neighbors(v) {
            let u = u as usize;
            if level[u] == usize::MAX && labeled[u] == usize::MAX {
                level[u] = level[v] + 1;
                if level[u] > depth {
                    depth = level[u];
                    deepest.clear();
                }
                if level[u] == depth {
                    deepest.push(u);
                }
                queue.push_back(u);
            }
        }
    }
    deepest.sort_unstable();
    (depth, deepest)
}
