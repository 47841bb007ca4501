//! Structured box meshes on the unit cube, subdivided into the supported
//! element shapes.
//!
//! The hexahedral cells of an `nx x ny x nz` grid are split per policy:
//!
//! * `AllHex`   - one hexahedron per cell.
//! * `AllTet`   - six tetrahedra per cell, using the corner-to-corner
//!   diagonal pattern that keeps every cell face split along the diagonal
//!   through the face's lowest-numbered node. The same pattern in every
//!   cell makes the split conforming.
//! * `Mixed`    - a lower region of hexahedra and prisms (split in the `y`
//!   direction), a single transition layer, and an upper region of
//!   tetrahedra. Above each hexahedron column the transition cell is filled
//!   with one pyramid on the quad face plus tetrahedra fanned out from an
//!   added cell-center node; above prism columns the tetrahedra start
//!   directly since the prism roof triangles already match.

use super::{Block, ElementShape, Mesh, MeshError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixPolicy {
    AllTet,
    AllHex,
    Mixed,
}

/// Local corner numbering of a grid cell: bottom face counterclockwise,
/// then the top face in the same order.
const CORNER_OFFSETS: [(usize, usize, usize); 8] = [
    (0, 0, 0),
    (1, 0, 0),
    (1, 1, 0),
    (0, 1, 0),
    (0, 0, 1),
    (1, 0, 1),
    (1, 1, 1),
    (0, 1, 1),
];

/// Six-tetrahedra split of a cell, all sharing the 0-6 diagonal. Orientation
/// is positive for every entry.
const HEX_TO_TETS: [[usize; 4]; 6] = [
    [0, 1, 2, 6],
    [0, 1, 6, 5],
    [0, 3, 6, 2],
    [0, 3, 7, 6],
    [0, 4, 5, 6],
    [0, 4, 6, 7],
];

/// The five non-base faces of a transition cell, as corner quads in cyclic
/// order: top, y-low, y-high, x-low, x-high.
const TRANSITION_FACES: [[usize; 4]; 5] = [
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [3, 2, 6, 7],
    [0, 3, 7, 4],
    [1, 2, 6, 5],
];

struct Grid {
    nx: usize,
    ny: usize,
}

impl Grid {
    fn node(&self, i: usize, j: usize, k: usize) -> u32 {
        (i + j * (self.nx + 1) + k * (self.nx + 1) * (self.ny + 1)) as u32
    }

    fn corners(&self, i: usize, j: usize, k: usize) -> [u32; 8] {
        let mut c = [0u32; 8];
        for (idx, (di, dj, dk)) in CORNER_OFFSETS.iter().enumerate() {
            c[idx] = self.node(i + di, j + dj, k + dk);
        }
        c
    }
}

/// Generates a conforming mesh of the unit cube `[0,1]^3` from an
/// `nx x ny x nz` cell grid. Boundary nodes are tagged `1`, interior
/// nodes `0`.
pub fn generate_box_mesh(
    nx: usize,
    ny: usize,
    nz: usize,
    mix: MixPolicy,
) -> Result<Mesh, MeshError> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(MeshError::EmptyBox(nx, ny, nz));
    }
    if mix == MixPolicy::Mixed && nz < 3 {
        return Err(MeshError::MixedTooFlat(nz));
    }

    let grid = Grid { nx, ny };
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    let mut tags = Vec::with_capacity(nodes.capacity());
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([
                    i as f64 / nx as f64,
                    j as f64 / ny as f64,
                    k as f64 / nz as f64,
                ]);
                let on_boundary = i == 0 || i == nx || j == 0 || j == ny || k == 0 || k == nz;
                tags.push(i32::from(on_boundary));
            }
        }
    }

    let mut tets = Block::new(ElementShape::Tet4);
    let mut pyrs = Block::new(ElementShape::Pyr5);
    let mut pris = Block::new(ElementShape::Pri6);
    let mut hexs = Block::new(ElementShape::Hex8);

    match mix {
        MixPolicy::AllHex => {
            for k in 0..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        hexs.push(&grid.corners(i, j, k));
                    }
                }
            }
        }
        MixPolicy::AllTet => {
            for k in 0..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        emit_kuhn_tets(&mut tets, &grid.corners(i, j, k));
                    }
                }
            }
        }
        MixPolicy::Mixed => {
            // Transition layer index and the y split between the hexahedron
            // and prism columns of the lower region.
            let kh = nz / 2;
            let js = ny / 2;
            let ngrid = nodes.len();
            let center_id = |i: usize, j: usize| (ngrid + j * nx + i) as u32;
            if js > 0 {
                for j in 0..js {
                    for i in 0..nx {
                        nodes.push([
                            (i as f64 + 0.5) / nx as f64,
                            (j as f64 + 0.5) / ny as f64,
                            (kh as f64 + 0.5) / nz as f64,
                        ]);
                        tags.push(0);
                    }
                }
            }

            for k in 0..kh {
                for j in 0..ny {
                    for i in 0..nx {
                        let c = grid.corners(i, j, k);
                        if j < js {
                            hexs.push(&c);
                        } else {
                            emit_prism_pair(&mut pris, &c);
                        }
                    }
                }
            }

            for j in 0..ny {
                for i in 0..nx {
                    let c = grid.corners(i, j, kh);
                    if j < js {
                        emit_transition_cell(&mut pyrs, &mut tets, &nodes, &c, center_id(i, j));
                    } else {
                        emit_kuhn_tets(&mut tets, &c);
                    }
                }
            }

            for k in kh + 1..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        emit_kuhn_tets(&mut tets, &grid.corners(i, j, k));
                    }
                }
            }
        }
    }

    let mut mesh = Mesh::new(nodes, vec![tets, pyrs, pris, hexs]);
    let tag_len = mesh.node_count();
    tags.resize(tag_len, 0);
    mesh.set_boundary_tags(tags);
    Ok(mesh)
}

/// Generates a mesh of mutually disjoint reference-shaped elements, one
/// translated copy per element. Useful as a synthetic workload whose group
/// sizes are controlled exactly.
pub fn generate_disjoint_mesh(spec: &[(ElementShape, usize)]) -> Mesh {
    let mut nodes = Vec::new();
    let mut blocks = Vec::new();
    let mut offset = 0.0f64;
    for &(shape, count) in spec {
        let reference = crate::quadrature::reference_coords(shape);
        let mut block = Block::new(shape);
        for _ in 0..count {
            let base = nodes.len() as u32;
            for c in &reference {
                nodes.push([c[0] + offset, c[1], c[2]]);
            }
            let conn: Vec<u32> = (0..shape.nnodes() as u32).map(|i| base + i).collect();
            block.push(&conn);
            offset += 2.0;
        }
        blocks.push(block);
    }
    Mesh::new(nodes, blocks)
}

fn emit_kuhn_tets(block: &mut Block, c: &[u32; 8]) {
    for t in HEX_TO_TETS {
        block.push(&[c[t[0]], c[t[1]], c[t[2]], c[t[3]]]);
    }
}

/// Two prisms per cell, cut along the bottom-face diagonal through the cell
/// origin corner. Bottom triangles are counterclockwise seen from above.
fn emit_prism_pair(block: &mut Block, c: &[u32; 8]) {
    block.push(&[c[0], c[1], c[2], c[4], c[5], c[6]]);
    block.push(&[c[0], c[2], c[3], c[4], c[6], c[7]]);
}

/// One pyramid on the bottom quad plus ten tetrahedra fanned from the cell
/// center: two per remaining face, split along the diagonal through the
/// face's lowest-numbered node so neighbors agree on the triangulation.
fn emit_transition_cell(
    pyrs: &mut Block,
    tets: &mut Block,
    nodes: &[[f64; 3]],
    c: &[u32; 8],
    center: u32,
) {
    pyrs.push(&[c[0], c[1], c[2], c[3], center]);
    for face in TRANSITION_FACES {
        let q = [c[face[0]], c[face[1]], c[face[2]], c[face[3]]];
        let m = (0..4).min_by_key(|&p| q[p]).unwrap();
        for tri in [
            [q[m], q[(m + 1) % 4], q[(m + 2) % 4]],
            [q[m], q[(m + 2) % 4], q[(m + 3) % 4]],
        ] {
            tets.push(&oriented_tet(nodes, tri, center));
        }
    }
}

/// Orders the tetrahedron (a, b, c, apex) so its signed volume is positive.
fn oriented_tet(nodes: &[[f64; 3]], tri: [u32; 3], apex: u32) -> [u32; 4] {
    let p = |n: u32| nodes[n as usize];
    let (a, b, c, d) = (p(tri[0]), p(tri[1]), p(tri[2]), p(apex));
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = [d[0] - a[0], d[1] - a[1], d[2] - a[2]];
    let det = u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0]);
    if det >= 0.0 {
        [tri[0], tri[1], tri[2], apex]
    } else {
        [tri[0], tri[2], tri[1], apex]
    }
}
