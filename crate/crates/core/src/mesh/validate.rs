//! Mesh defect checks. Defects are reported as data rather than errors so a
//! checker can list everything wrong with a file in one pass.

use super::Mesh;
use crate::quadrature;

/// Geometric coincidence tolerance for duplicate-node detection.
const DUPLICATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Defect {
    /// Two distinct nodes closer than the coincidence tolerance.
    DuplicateNode { a: usize, b: usize },
    /// Element with a non-positive Jacobian determinant at some Gauss point.
    InvertedElement { element: usize },
    /// Element referencing a node index `>= node_count`.
    IndexOutOfRange { element: usize, index: u32 },
    /// Element listing the same node twice.
    RepeatedNode { element: usize, node: u32 },
}

impl std::fmt::Display for Defect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Defect::DuplicateNode { a, b } => write!(f, "duplicate node: {a} and {b} coincide"),
            Defect::InvertedElement { element } => write!(f, "inverted element {element}"),
            Defect::IndexOutOfRange { element, index } => {
                write!(f, "element {element} references out-of-range node {index}")
            }
            Defect::RepeatedNode { element, node } => {
                write!(f, "element {element} lists node {node} twice")
            }
        }
    }
}

/// Checks the mesh and returns every defect found; an empty list means the
/// mesh is valid.
pub fn validate(mesh: &Mesh) -> Vec<Defect> {
    let mut defects = Vec::new();
    duplicate_nodes(mesh, &mut defects);

    let node_count = mesh.node_count() as u32;
    let mut coords = vec![[0.0f64; 3]; 8];
    let mut dets = vec![0.0f64; 8];
    let mut elem = 0usize;
    for block in mesh.blocks() {
        let nn = block.shape.nnodes();
        let ng = block.shape.ngauss();
        let table = quadrature::shape_table(block.shape);
        for e in 0..block.len() {
            let conn = block.element(e);
            let mut usable = true;
            for &n in conn {
                if n >= node_count {
                    defects.push(Defect::IndexOutOfRange { element: elem, index: n });
                    usable = false;
                }
            }
            for (i, &n) in conn.iter().enumerate() {
                if conn[i + 1..].contains(&n) {
                    defects.push(Defect::RepeatedNode { element: elem, node: n });
                }
            }
            if usable {
                mesh.element_coords(conn, &mut coords[..nn]);
                quadrature::jacobian_dets(table, &coords[..nn], &mut dets[..ng]);
                if dets[..ng].iter().any(|&d| d <= 0.0) {
                    defects.push(Defect::InvertedElement { element: elem });
                }
            }
            elem += 1;
        }
    }
    defects
}

fn duplicate_nodes(mesh: &Mesh, defects: &mut Vec<Defect>) {
    let nodes = mesh.nodes();
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].partial_cmp(&nodes[b]).unwrap());
    for (pos, &a) in order.iter().enumerate() {
        for &b in &order[pos + 1..] {
            if nodes[b][0] - nodes[a][0] > DUPLICATE_TOL {
                break;
            }
            let d = [
                nodes[b][0] - nodes[a][0],
                nodes[b][1] - nodes[a][1],
                nodes[b][2] - nodes[a][2],
            ];
            if (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() <= DUPLICATE_TOL {
                defects.push(Defect::DuplicateNode {
                    a: a.min(b),
                    b: a.max(b),
                });
            }
        }
    }
}

/// Per-shape element faces as local node indices; triangles pad the fourth
/// slot with `usize::MAX`.
fn faces(shape: super::ElementShape) -> &'static [[usize; 4]] {
    use super::ElementShape::*;
    const X: usize = usize::MAX;
    match shape {
        Tet4 => &[[0, 1, 2, X], [0, 1, 3, X], [0, 2, 3, X], [1, 2, 3, X]],
        Pyr5 => &[
            [0, 1, 2, 3],
            [0, 1, 4, X],
            [1, 2, 4, X],
            [2, 3, 4, X],
            [3, 0, 4, X],
        ],
        Pri6 => &[
            [0, 1, 2, X],
            [3, 4, 5, X],
            [0, 1, 4, 3],
            [1, 2, 5, 4],
            [0, 2, 5, 3],
        ],
        Hex8 => &[
            [0, 1, 2, 3],
            [4, 5, 6, 7],
            [0, 1, 5, 4],
            [1, 2, 6, 5],
            [2, 3, 7, 6],
            [3, 0, 4, 7],
        ],
    }
}

/// Marks the nodes on the mesh boundary. Uses the stored boundary tags when
/// present; otherwise falls back to the topological definition (nodes of
/// faces that belong to exactly one element).
pub fn boundary_nodes(mesh: &Mesh) -> Vec<bool> {
    if let Some(tags) = mesh.boundary_tags() {
        return tags.iter().map(|&t| t != 0).collect();
    }
    let mut counts: std::collections::HashMap<[u32; 4], (u32, [u32; 4])> =
        std::collections::HashMap::new();
    for block in mesh.blocks() {
        for e in 0..block.len() {
            let conn = block.element(e);
            for face in faces(block.shape) {
                let mut key = [u32::MAX; 4];
                for (slot, &local) in face.iter().enumerate() {
                    if local != usize::MAX {
                        key[slot] = conn[local];
                    }
                }
                let nodes = key;
                key.sort_unstable();
                counts
                    .entry(key)
                    .and_modify(|(c, _)| *c += 1)
                    .or_insert((1, nodes));
            }
        }
    }
    let mut boundary = vec![false; mesh.node_count()];
    for (count, nodes) in counts.values() {
        if *count == 1 {
            for &n in nodes {
                if n != u32::MAX {
                    boundary[n as usize] = true;
                }
            }
        }
    }
    boundary
}
