//! Unstructured mixed-shape meshes: construction, generation, I/O,
//! validation, and node adjacency.
//!
//! Element connectivity is stored in per-shape blocks. Blocks are kept in a
//! fixed shape order (TET4, PYR5, PRI6, HEX8) so that global element ids are
//! stable: element `e` is the `e`-th element when blocks are enumerated in
//! that order. Node coordinates are `f64` throughout.

mod adjacency;
mod generate;
mod io;
mod validate;

pub use adjacency::{node_adjacency, AdjacencyGraph};
pub use generate::{generate_box_mesh, generate_disjoint_mesh, MixPolicy};
pub use io::{read_mesh, read_solution, write_mesh, write_solution};
pub use validate::{boundary_nodes, validate, Defect};

use thiserror::Error;

/// Geometric shape of a linear element together with its node and
/// quadrature-point counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementShape {
    Tet4,
    Pyr5,
    Pri6,
    Hex8,
}

impl ElementShape {
    /// Fixed shape order used for element-id enumeration and grouping.
    pub const ALL: [ElementShape; 4] = [
        ElementShape::Tet4,
        ElementShape::Pyr5,
        ElementShape::Pri6,
        ElementShape::Hex8,
    ];

    pub fn nnodes(self) -> usize {
        match self {
            ElementShape::Tet4 => 4,
            ElementShape::Pyr5 => 5,
            ElementShape::Pri6 => 6,
            ElementShape::Hex8 => 8,
        }
    }

    pub fn ngauss(self) -> usize {
        match self {
            ElementShape::Tet4 => 4,
            ElementShape::Pyr5 => 5,
            ElementShape::Pri6 => 6,
            ElementShape::Hex8 => 8,
        }
    }

    /// Name used in the mesh file format.
    pub fn name(self) -> &'static str {
        match self {
            ElementShape::Tet4 => "TET4",
            ElementShape::Pyr5 => "PYR5",
            ElementShape::Pri6 => "PRI6",
            ElementShape::Hex8 => "HEX8",
        }
    }

    pub fn from_name(name: &str) -> Option<ElementShape> {
        match name {
            "TET4" => Some(ElementShape::Tet4),
            "PYR5" => Some(ElementShape::Pyr5),
            "PRI6" => Some(ElementShape::Pri6),
            "HEX8" => Some(ElementShape::Hex8),
            _ => None,
        }
    }
}

impl std::fmt::Display for ElementShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Connectivity of all elements of one shape, flattened as
/// `nelems * nnodes` node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub shape: ElementShape,
    pub connectivity: Vec<u32>,
}

impl Block {
    pub fn new(shape: ElementShape) -> Block {
        Block {
            shape,
            connectivity: Vec::new(),
        }
    }

    /// Number of elements in the block.
    pub fn len(&self) -> usize {
        self.connectivity.len() / self.shape.nnodes()
    }

    pub fn is_empty(&self) -> bool {
        self.connectivity.is_empty()
    }

    /// Node indices of the local element `i`.
    pub fn element(&self, i: usize) -> &[u32] {
        let nn = self.shape.nnodes();
        &self.connectivity[i * nn..(i + 1) * nn]
    }

    pub fn push(&mut self, nodes: &[u32]) {
        debug_assert_eq!(nodes.len(), self.shape.nnodes());
        self.connectivity.extend_from_slice(nodes);
    }
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mixed-shape generation needs nz >= 3, got {0}")]
    MixedTooFlat(usize),
    #[error("box dimensions must be >= 1, got ({0}, {1}, {2})")]
    EmptyBox(usize, usize, usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Unstructured mesh of linear elements with up to four shapes.
///
/// Immutable after construction; all query methods take `&self`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<[f64; 3]>,
    blocks: Vec<Block>,
    boundary_tags: Option<Vec<i32>>,
}

impl Mesh {
    /// Builds a mesh from nodes and connectivity blocks. Blocks are merged
    /// per shape and stored in the fixed shape order; within a shape the
    /// element order of the input is preserved.
    ///
    /// No validation is performed here; see [`validate`] for defect checks.
    pub fn new(nodes: Vec<[f64; 3]>, blocks: Vec<Block>) -> Mesh {
        let mut merged: Vec<Block> = Vec::new();
        for shape in ElementShape::ALL {
            let mut out = Block::new(shape);
            for b in blocks.iter().filter(|b| b.shape == shape) {
                out.connectivity.extend_from_slice(&b.connectivity);
            }
            if !out.is_empty() {
                merged.push(out);
            }
        }
        Mesh {
            nodes,
            blocks: merged,
            boundary_tags: None,
        }
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn element_count(&self) -> usize {
        self.blocks.iter().map(Block::len).sum()
    }

    /// Per-shape element counts in fixed shape order.
    pub fn census(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for b in &self.blocks {
            let idx = ElementShape::ALL.iter().position(|&s| s == b.shape).unwrap();
            counts[idx] += b.len();
        }
        counts
    }

    /// Shape and node indices of the global element `id`.
    ///
    /// Panics if `id >= element_count()`.
    pub fn element(&self, id: usize) -> (ElementShape, &[u32]) {
        let mut rest = id;
        for b in &self.blocks {
            if rest < b.len() {
                return (b.shape, b.element(rest));
            }
            rest -= b.len();
        }
        panic!("element id {id} out of range");
    }

    /// Copies the coordinates of an element's nodes into `out`.
    pub fn element_coords(&self, conn: &[u32], out: &mut [[f64; 3]]) {
        for (c, &n) in out.iter_mut().zip(conn) {
            *c = self.nodes[n as usize];
        }
    }

    pub fn boundary_tags(&self) -> Option<&[i32]> {
        self.boundary_tags.as_deref()
    }

    pub fn set_boundary_tags(&mut self, tags: Vec<i32>) {
        assert_eq!(tags.len(), self.nodes.len());
        self.boundary_tags = Some(tags);
    }

    /// Returns a copy of the mesh with node `i` renamed to `forward[i]`:
    /// coordinates are moved to their new slots and connectivity rewritten.
    pub fn with_renumbered_nodes(&self, forward: &[usize]) -> Mesh {
        assert_eq!(forward.len(), self.nodes.len());
        let mut nodes = vec![[0.0; 3]; self.nodes.len()];
        for (old, &new) in forward.iter().enumerate() {
            nodes[new] = self.nodes[old];
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block {
                shape: b.shape,
                connectivity: b
                    .connectivity
                    .iter()
                    .map(|&n| forward[n as usize] as u32)
                    .collect(),
            })
            .collect();
        let mut mesh = Mesh::new(nodes, blocks);
        if let Some(tags) = &self.boundary_tags {
            let mut new_tags = vec![0; tags.len()];
            for (old, &new) in forward.iter().enumerate() {
                new_tags[new] = tags[old];
            }
            mesh.boundary_tags = Some(new_tags);
        }
        mesh
    }

    /// Returns a copy with the elements of each block reordered by `key`
    /// (ascending, stable). Used to improve gather locality after a node
    /// renumbering.
    pub fn with_sorted_elements<K: Fn(ElementShape, &[u32]) -> usize>(&self, key: K) -> Mesh {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let nn = b.shape.nnodes();
                let mut order: Vec<usize> = (0..b.len()).collect();
                order.sort_by_key(|&i| key(b.shape, b.element(i)));
                let mut conn = Vec::with_capacity(b.connectivity.len());
                for i in order {
                    conn.extend_from_slice(&b.connectivity[i * nn..(i + 1) * nn]);
                }
                Block {
                    shape: b.shape,
                    connectivity: conn,
                }
            })
            .collect();
        let mut mesh = Mesh::new(self.nodes.clone(), blocks);
        mesh.boundary_tags = self.boundary_tags.clone();
        mesh
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_tets() -> Mesh {
        // two tets sharing the face (1,2,3)
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
        Mesh::new(nodes, vec![b])
    }

    #[test]
    fn block_merge_and_fixed_order() {
        let nodes = vec![[0.0; 3]; 20];
        let mut hex = Block::new(ElementShape::Hex8);
        hex.push(&[0, 1, 2, 3, 4, 5, 6, 7]);
        let mut tet_a = Block::new(ElementShape::Tet4);
        tet_a.push(&[0, 1, 2, 3]);
        let mut tet_b = Block::new(ElementShape::Tet4);
        tet_b.push(&[4, 5, 6, 7]);
        let mesh = Mesh::new(nodes, vec![hex, tet_a, tet_b]);
        assert_eq!(mesh.blocks().len(), 2);
        assert_eq!(mesh.blocks()[0].shape, ElementShape::Tet4);
        assert_eq!(mesh.blocks()[0].len(), 2);
        assert_eq!(mesh.blocks()[1].shape, ElementShape::Hex8);
        // global ids enumerate tets first
        assert_eq!(mesh.element(0).1, &[0, 1, 2, 3]);
        assert_eq!(mesh.element(1).1, &[4, 5, 6, 7]);
        assert_eq!(mesh.element(2).0, ElementShape::Hex8);
    }

    #[test]
    fn element_lookup_spans_blocks() {
        let mesh = two_tets();
        assert_eq!(mesh.element_count(), 2);
        assert_eq!(mesh.element(1).1, &[1, 2, 3, 4]);
        assert_eq!(mesh.census(), [2, 0, 0, 0]);
    }

    #[test]
    fn renumbering_round_trip() {
        let mesh = two_tets();
        let forward = vec![4, 3, 2, 1, 0];
        let renum = mesh.with_renumbered_nodes(&forward);
        assert_eq!(renum.nodes()[4], [0.0, 0.0, 0.0]);
        assert_eq!(renum.element(0).1, &[4, 3, 2, 1]);
        let inverse = vec![4, 3, 2, 1, 0];
        let back = renum.with_renumbered_nodes(&inverse);
        assert_eq!(back, mesh);
    }
}
