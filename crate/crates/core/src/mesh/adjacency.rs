//! Node adjacency graph of a mesh: two nodes are adjacent when they appear
//! in at least one common element.

use super::Mesh;

/// Symmetric graph with sorted neighbor lists and no self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyGraph {
    adj: Vec<Vec<u32>>,
}

impl AdjacencyGraph {
    pub fn from_lists(mut adj: Vec<Vec<u32>>) -> AdjacencyGraph {
        for (i, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            list.retain(|&j| j as usize != i);
        }
        let g = AdjacencyGraph { adj };
        debug_assert!(g.is_symmetric());
        g
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_symmetric(&self) -> bool {
        self.adj.iter().enumerate().all(|(i, list)| {
            list.iter()
                .all(|&j| self.adj[j as usize].binary_search(&(i as u32)).is_ok())
        })
    }
}

/// Builds the node adjacency graph: vertices are mesh nodes, with an edge
/// `(i, j)` exactly when `i` and `j` share an element.
pub fn node_adjacency(mesh: &Mesh) -> AdjacencyGraph {
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); mesh.node_count()];
    for block in mesh.blocks() {
        for e in 0..block.len() {
            let conn = block.element(e);
            for (a, &na) in conn.iter().enumerate() {
                for &nb in &conn[a + 1..] {
                    adj[na as usize].push(nb);
                    adj[nb as usize].push(na);
                }
            }
        }
    }
    AdjacencyGraph::from_lists(adj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_box_mesh, Block, ElementShape, Mesh, MixPolicy};

    #[test]
    fn single_tet_is_complete_graph() {
        let nodes = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let mut b = Block::new(ElementShape::Tet4);
        b.push(&[0, 1, 2, 3]);
        let g = node_adjacency(&Mesh::new(nodes, vec![b]));
        assert_eq!(g.edge_count(), 6);
        assert!((0..4).all(|v| g.degree(v) == 3));
    }

    #[test]
    fn two_tets_sharing_a_face() {
        let nodes = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
        ];
        let mut b = Block::new(ElementShape::Tet4);
        b.push(&[0, 1, 2, 3]);
        b.push(&[1, 2, 3, 4]);
        let g = node_adjacency(&Mesh::new(nodes, vec![b]));
        assert_eq!(g.n(), 5);
        assert_eq!(g.edge_count(), 9);
    }

    #[test]
    fn hex_box_center_degree() {
        // brute-force oracle: nodes sharing an element with the center node
        let mesh = generate_box_mesh(2, 2, 2, MixPolicy::AllHex).unwrap();
        let g = node_adjacency(&mesh);
        let center = mesh
            .nodes()
            .iter()
            .position(|c| c == &[0.5, 0.5, 0.5])
            .unwrap();
        let mut expected = std::collections::BTreeSet::new();
        for block in mesh.blocks() {
            for e in 0..block.len() {
                let conn = block.element(e);
                if conn.contains(&(center as u32)) {
                    expected.extend(conn.iter().copied());
                }
            }
        }
        expected.remove(&(center as u32));
        assert_eq!(expected.len(), 26);
        assert_eq!(g.degree(center), 26);
    }
}
