//! Preprocessing for pack-based assembly: shape grouping, node relabeling,
//! fixed-width element packs, and the gather/scatter index maps.
//!
//! Elements are grouped by shape so every element of a group shares node
//! and Gauss-point counts, then each group is cut into packs of `W`
//! elements. A group whose size is not a multiple of `W` gets padding slots
//! in its final pack; padded slots gather zeros and are masked out of every
//! scatter, so they contribute exactly nothing. All packed arrays keep the
//! pack lane as the innermost, unit-stride dimension.

mod cmk;

pub use cmk::{bandwidth, cuthill_mckee, reverse_cuthill_mckee, Permutation};

use thiserror::Error;

use crate::mesh::{node_adjacency, ElementShape, Mesh};

/// Pack widths with a specialized kernel instance in this build.
pub const SUPPORTED_WIDTHS: [usize; 10] = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512];

/// Sentinel element id for padding slots.
pub const PAD: usize = usize::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum PackError {
    #[error("pack width must be positive")]
    ZeroWidth,
    #[error("pack width {0} is not built; supported: {SUPPORTED_WIDTHS:?}")]
    UnsupportedWidth(usize),
}

/// All elements of one shape, in processing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupIndex {
    pub shape: ElementShape,
    pub element_ids: Vec<usize>,
}

impl GroupIndex {
    pub fn nnodes(&self) -> usize {
        self.shape.nnodes()
    }

    pub fn ngauss(&self) -> usize {
        self.shape.ngauss()
    }

    pub fn len(&self) -> usize {
        self.element_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.element_ids.is_empty()
    }
}

/// Partitions the mesh's elements by shape, one group per shape present, in
/// the fixed shape order; ids within a group follow mesh order.
pub fn group_elements(mesh: &Mesh) -> Vec<GroupIndex> {
    let mut groups = Vec::new();
    let mut base = 0usize;
    for block in mesh.blocks() {
        groups.push(GroupIndex {
            shape: block.shape,
            element_ids: (base..base + block.len()).collect(),
        });
        base += block.len();
    }
    groups
}

/// One shape's packs: `npacks * w` slot ids (PAD-padded suffix in the last
/// pack) and the slot-to-node map with the lane dimension innermost.
#[derive(Debug, Clone)]
pub struct PackedGroup {
    pub shape: ElementShape,
    npacks: usize,
    tail_real: usize,
    slots: Vec<usize>,
    node_map: Vec<u32>,
}

impl PackedGroup {
    pub fn npacks(&self) -> usize {
        self.npacks
    }
}

/// Borrowed view of a single pack.
#[derive(Debug, Clone, Copy)]
pub struct PackRef<'a> {
    pub shape: ElementShape,
    pub w: usize,
    /// Number of real (non-PAD) slots; PAD slots are the trailing
    /// `w - nreal` lanes.
    pub nreal: usize,
    /// Global element id per slot, `PAD` in padding lanes.
    pub slots: &'a [usize],
    /// Global node id per `(local node, lane)`, laid out `[nnodes][w]`.
    /// Entries of padding lanes are unspecified and must stay masked.
    pub node_map: &'a [u32],
}

/// The packed index structure for a whole mesh at one width.
#[derive(Debug, Clone)]
pub struct PackSet {
    w: usize,
    groups: Vec<PackedGroup>,
    pad_total: usize,
    node_count: usize,
    census: [usize; 4],
}

impl PackSet {
    pub fn w(&self) -> usize {
        self.w
    }

    pub fn pad_total(&self) -> usize {
        self.pad_total
    }

    pub fn groups(&self) -> &[PackedGroup] {
        &self.groups
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Per-shape element counts, for compatibility checks against a mesh.
    pub fn census(&self) -> [usize; 4] {
        self.census
    }

    pub fn pack_count(&self) -> usize {
        self.groups.iter().map(|g| g.npacks).sum()
    }

    /// Iterates over every pack in group order.
    pub fn packs(&self) -> impl Iterator<Item = PackRef<'_>> {
        self.groups.iter().flat_map(move |g| {
            let nn = g.shape.nnodes();
            let w = self.w;
            (0..g.npacks).map(move |p| PackRef {
                shape: g.shape,
                w,
                nreal: if p + 1 == g.npacks { g.tail_real } else { w },
                slots: &g.slots[p * w..(p + 1) * w],
                node_map: &g.node_map[p * nn * w..(p + 1) * nn * w],
            })
        })
    }
}

/// Builds packs of width `w` from the given groups.
pub fn build_packs(groups: &[GroupIndex], mesh: &Mesh, w: usize) -> Result<PackSet, PackError> {
    if w == 0 {
        return Err(PackError::ZeroWidth);
    }
    if !SUPPORTED_WIDTHS.contains(&w) {
        return Err(PackError::UnsupportedWidth(w));
    }
    let mut packed = Vec::with_capacity(groups.len());
    let mut pad_total = 0usize;
    let mut census = [0usize; 4];
    for group in groups {
        let nn = group.nnodes();
        let len = group.len();
        let npacks = len.div_ceil(w);
        let tail_real = if len % w == 0 { w } else { len % w };
        pad_total += npacks * w - len;
        let shape_idx = ElementShape::ALL
            .iter()
            .position(|&s| s == group.shape)
            .unwrap();
        census[shape_idx] += len;

        let mut slots = vec![PAD; npacks * w];
        slots[..len].copy_from_slice(&group.element_ids);
        let mut node_map = vec![0u32; npacks * nn * w];
        for (pos, &elem) in group.element_ids.iter().enumerate() {
            let (shape, conn) = mesh.element(elem);
            debug_assert_eq!(shape, group.shape);
            let (p, s) = (pos / w, pos % w);
            for (in_, &n) in conn.iter().enumerate() {
                node_map[(p * nn + in_) * w + s] = n;
            }
        }
        packed.push(PackedGroup {
            shape: group.shape,
            npacks,
            tail_real,
            slots,
            node_map,
        });
    }
    Ok(PackSet {
        w,
        groups: packed,
        pad_total,
        node_count: mesh.node_count(),
        census,
    })
}

/// Gathers a nodal field into a `[nnodes][w]` block; padding lanes receive
/// `pad` (zero in normal operation).
pub fn gather_into(field: &[f64], pack: &PackRef<'_>, pad: f64, out: &mut [f64]) {
    let (nn, w) = (pack.shape.nnodes(), pack.w);
    debug_assert_eq!(out.len(), nn * w);
    if pack.nreal == w {
        for in_ in 0..nn {
            let map = &pack.node_map[in_ * w..(in_ + 1) * w];
            let row = &mut out[in_ * w..(in_ + 1) * w];
            for s in 0..w {
                row[s] = field[map[s] as usize];
            }
        }
    } else {
        for in_ in 0..nn {
            let map = &pack.node_map[in_ * w..(in_ + 1) * w];
            let row = &mut out[in_ * w..(in_ + 1) * w];
            for s in 0..w {
                row[s] = if s < pack.nreal {
                    field[map[s] as usize]
                } else {
                    pad
                };
            }
        }
    }
}

/// Allocating convenience around [`gather_into`] with zero padding.
pub fn gather(field: &[f64], pack: &PackRef<'_>) -> Vec<f64> {
    let mut out = vec![0.0; pack.shape.nnodes() * pack.w];
    gather_into(field, pack, 0.0, &mut out);
    out
}

/// Gathers a per-node 3-vector field (coordinates, velocity) into a
/// `[3][nnodes][w]` block.
pub fn gather_vec3_into(nodes: &[[f64; 3]], pack: &PackRef<'_>, pad: f64, out: &mut [f64]) {
    let (nn, w) = (pack.shape.nnodes(), pack.w);
    debug_assert_eq!(out.len(), 3 * nn * w);
    for in_ in 0..nn {
        let map = &pack.node_map[in_ * w..(in_ + 1) * w];
        for s in 0..w {
            let value = |d: usize| {
                if s < pack.nreal {
                    nodes[map[s] as usize][d]
                } else {
                    pad
                }
            };
            out[in_ * w + s] = value(0);
            out[(nn + in_) * w + s] = value(1);
            out[(2 * nn + in_) * w + s] = value(2);
        }
    }
}

/// Accumulates a `[nnodes][w]` block into a nodal field. Padding lanes are
/// skipped entirely, so their values never reach `target`.
pub fn scatter_add(values: &[f64], pack: &PackRef<'_>, target: &mut [f64]) {
    let (nn, w) = (pack.shape.nnodes(), pack.w);
    debug_assert_eq!(values.len(), nn * w);
    for s in 0..pack.nreal {
        for in_ in 0..nn {
            target[pack.node_map[in_ * w + s] as usize] += values[in_ * w + s];
        }
    }
}

/// Node relabeling policy applied before packing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reorder {
    None,
    CuthillMckee,
    ReverseCuthillMckee,
}

/// A mesh and its pack structure, ready for assembly.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub mesh: Mesh,
    pub packset: PackSet,
    pub permutation: Option<Permutation>,
}

/// Full preprocessing pipeline: optional Cuthill-McKee node relabeling,
/// element reordering by minimum relabeled node, grouping, and packing.
pub fn prepare(mesh: &Mesh, w: usize, reorder: Reorder) -> Result<Prepared, PackError> {
    let (mesh, permutation) = match reorder {
        Reorder::None => (mesh.clone(), None),
        _ => {
            let graph = node_adjacency(mesh);
            let perm = match reorder {
                Reorder::CuthillMckee => cuthill_mckee(&graph, None),
                Reorder::ReverseCuthillMckee => reverse_cuthill_mckee(&graph, None),
                Reorder::None => unreachable!(),
            };
            let renumbered = mesh
                .with_renumbered_nodes(perm.forward())
                .with_sorted_elements(|_, conn| {
                    conn.iter().copied().min().unwrap_or(0) as usize
                });
            (renumbered, Some(perm))
        }
    };
    let groups = group_elements(&mesh);
    let packset = build_packs(&groups, &mesh, w)?;
    Ok(Prepared {
        mesh,
        packset,
        permutation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_box_mesh, generate_disjoint_mesh, MixPolicy};
    use proptest::prelude::*;

    #[test]
    fn groups_follow_fixed_shape_order() {
        let mesh = generate_disjoint_mesh(&[
            (ElementShape::Pri6, 50),
            (ElementShape::Tet4, 100),
            (ElementShape::Pyr5, 2),
        ]);
        let groups = group_elements(&mesh);
        let meta: Vec<(usize, usize, usize)> = groups
            .iter()
            .map(|g| (g.nnodes(), g.ngauss(), g.len()))
            .collect();
        assert_eq!(meta, vec![(4, 4, 100), (5, 5, 2), (6, 6, 50)]);
        // ids in mesh order: tets first
        assert_eq!(groups[0].element_ids[0], 0);
        assert_eq!(groups[1].element_ids[0], 100);
        assert_eq!(groups[2].element_ids[0], 102);
    }

    #[test]
    fn single_shape_mesh_is_one_group() {
        let mesh = generate_box_mesh(2, 2, 2, MixPolicy::AllTet).unwrap();
        let groups = group_elements(&mesh);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].len(), mesh.element_count());
    }

    #[test]
    fn pack_arithmetic() {
        let mesh = generate_disjoint_mesh(&[(ElementShape::Tet4, 10)]);
        let packset = build_packs(&group_elements(&mesh), &mesh, 4).unwrap();
        assert_eq!(packset.pack_count(), 3);
        assert_eq!(packset.pad_total(), 2);

        let w1 = build_packs(&group_elements(&mesh), &mesh, 1).unwrap();
        assert_eq!(w1.pack_count(), 10);
        assert_eq!(w1.pad_total(), 0);
    }

    #[test]
    fn width_validation() {
        let mesh = generate_disjoint_mesh(&[(ElementShape::Tet4, 3)]);
        let groups = group_elements(&mesh);
        assert_eq!(
            build_packs(&groups, &mesh, 0).unwrap_err(),
            PackError::ZeroWidth
        );
        assert_eq!(
            build_packs(&groups, &mesh, 3).unwrap_err(),
            PackError::UnsupportedWidth(3)
        );
    }

    #[test]
    fn paper_scale_padding_congruence() {
        // group sizes congruent to (30, 28, 12) mod 32 pad 26 slots in total
        let mesh = generate_disjoint_mesh(&[
            (ElementShape::Tet4, 62),
            (ElementShape::Pyr5, 28),
            (ElementShape::Pri6, 44),
        ]);
        let packset = build_packs(&group_elements(&mesh), &mesh, 32).unwrap();
        assert_eq!(packset.pad_total(), 26);
    }

    #[test]
    fn pad_slots_are_a_suffix_and_partition_holds() {
        let mesh = generate_box_mesh(3, 3, 3, MixPolicy::Mixed).unwrap();
        for &w in &SUPPORTED_WIDTHS {
            let packset = build_packs(&group_elements(&mesh), &mesh, w).unwrap();
            let mut seen = vec![0usize; mesh.element_count()];
            for pack in packset.packs() {
                let mut in_pad = false;
                for (s, &slot) in pack.slots.iter().enumerate() {
                    if slot == PAD {
                        in_pad = true;
                        assert!(s >= pack.nreal);
                    } else {
                        assert!(!in_pad, "PAD before a real slot");
                        assert!(s < pack.nreal);
                        seen[slot] += 1;
                    }
                }
            }
            assert!(seen.iter().all(|&c| c == 1), "w={w}");
        }
    }

    #[test]
    fn gather_constant_and_identity_fields() {
        let mesh = generate_disjoint_mesh(&[(ElementShape::Tet4, 5)]);
        let packset = build_packs(&group_elements(&mesh), &mesh, 4).unwrap();
        let ones = vec![1.0; mesh.node_count()];
        let ids: Vec<f64> = (0..mesh.node_count()).map(|i| i as f64).collect();
        for pack in packset.packs() {
            let block = gather(&ones, &pack);
            for in_ in 0..4 {
                for s in 0..pack.w {
                    let expected = if s < pack.nreal { 1.0 } else { 0.0 };
                    assert_eq!(block[in_ * pack.w + s], expected);
                }
            }
            let block = gather(&ids, &pack);
            for in_ in 0..4 {
                for s in 0..pack.nreal {
                    assert_eq!(
                        block[in_ * pack.w + s],
                        pack.node_map[in_ * pack.w + s] as f64
                    );
                }
            }
        }
    }

    #[test]
    fn gather_matches_per_element_lookup() {
        let mesh = generate_box_mesh(2, 2, 3, MixPolicy::Mixed).unwrap();
        let field: Vec<f64> = (0..mesh.node_count())
            .map(|i| (i as f64 * 0.7315).sin())
            .collect();
        let packset = build_packs(&group_elements(&mesh), &mesh, 8).unwrap();
        for pack in packset.packs() {
            let block = gather(&field, &pack);
            for s in 0..pack.nreal {
                let (_, conn) = mesh.element(pack.slots[s]);
                for (in_, &n) in conn.iter().enumerate() {
                    assert_eq!(block[in_ * pack.w + s], field[n as usize]);
                }
            }
        }
    }

    #[test]
    fn scatter_add_masks_padding() {
        let mesh = generate_disjoint_mesh(&[(ElementShape::Tet4, 3)]);
        let packset = build_packs(&group_elements(&mesh), &mesh, 4).unwrap();
        let pack = packset.packs().next().unwrap();
        let mut target = vec![0.0; mesh.node_count()];

        let zeros = vec![0.0; 4 * pack.w];
        scatter_add(&zeros, &pack, &mut target);
        assert!(target.iter().all(|&t| t == 0.0));

        // ones in a single real slot land on that element's nodes;
        // poison in the pad lane must never escape
        let mut values = vec![0.0; 4 * pack.w];
        for in_ in 0..4 {
            values[in_ * pack.w] = 1.0;
            values[in_ * pack.w + 3] = f64::NAN;
        }
        scatter_add(&values, &pack, &mut target);
        let (_, conn) = mesh.element(pack.slots[0]);
        for (i, &t) in target.iter().enumerate() {
            let expected = if conn.contains(&(i as u32)) { 1.0 } else { 0.0 };
            assert_eq!(t, expected);
        }
    }

    #[test]
    fn scatter_matches_serial_accumulation() {
        let mesh = generate_box_mesh(2, 2, 3, MixPolicy::Mixed).unwrap();
        let packset = build_packs(&group_elements(&mesh), &mesh, 4).unwrap();
        let mut packed_target = vec![0.0; mesh.node_count()];
        let mut serial_target = vec![0.0; mesh.node_count()];
        let mut stamp = 0.0f64;
        for pack in packset.packs() {
            let nn = pack.shape.nnodes();
            let mut values = vec![0.0; nn * pack.w];
            for (i, v) in values.iter_mut().enumerate() {
                stamp += 1.0;
                *v = (stamp * 0.01).cos() * (0.5 + (i % 7) as f64);
            }
            scatter_add(&values, &pack, &mut packed_target);
            for s in 0..pack.nreal {
                let (_, conn) = mesh.element(pack.slots[s]);
                for (in_, &n) in conn.iter().enumerate() {
                    serial_target[n as usize] += values[in_ * pack.w + s];
                }
            }
        }
        for (a, b) in packed_target.iter().zip(&serial_target) {
            assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn gather_scatter_multiplicity() {
        // scatter(gather(f)) on a zero target multiplies f by the node's
        // element incidence count
        let mesh = generate_box_mesh(2, 2, 3, MixPolicy::Mixed).unwrap();
        let field: Vec<f64> = (0..mesh.node_count()).map(|i| 1.0 + i as f64).collect();
        let packset = build_packs(&group_elements(&mesh), &mesh, 8).unwrap();
        let mut target = vec![0.0; mesh.node_count()];
        for pack in packset.packs() {
            let block = gather(&field, &pack);
            scatter_add(&block, &pack, &mut target);
        }
        let mut multiplicity = vec![0usize; mesh.node_count()];
        for block in mesh.blocks() {
            for e in 0..block.len() {
                for &n in block.element(e) {
                    multiplicity[n as usize] += 1;
                }
            }
        }
        for i in 0..mesh.node_count() {
            let expected = multiplicity[i] as f64 * field[i];
            assert!((target[i] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn prepare_reduces_bandwidth_and_keeps_census() {
        let mesh = generate_box_mesh(4, 4, 4, MixPolicy::Mixed).unwrap();
        let graph = node_adjacency(&mesh);
        let before = bandwidth(&graph, &Permutation::identity(graph.n()));
        let prepared = prepare(&mesh, 8, Reorder::CuthillMckee).unwrap();
        let after_graph = node_adjacency(&prepared.mesh);
        let after = bandwidth(&after_graph, &Permutation::identity(after_graph.n()));
        assert!(after <= before, "{after} > {before}");
        assert_eq!(prepared.mesh.census(), mesh.census());
        assert_eq!(prepared.packset.census(), mesh.census());
    }

    proptest! {
        #[test]
        fn pad_total_formula(sizes in proptest::collection::vec(1usize..600, 1..4), wi in 0usize..10) {
            let w = SUPPORTED_WIDTHS[wi];
            let shapes = [ElementShape::Tet4, ElementShape::Pyr5, ElementShape::Pri6];
            let spec: Vec<(ElementShape, usize)> = sizes
                .iter()
                .enumerate()
                .map(|(i, &n)| (shapes[i], n))
                .collect();
            let mesh = generate_disjoint_mesh(&spec);
            let packset = build_packs(&group_elements(&mesh), &mesh, w).unwrap();
            let expected: usize = sizes.iter().map(|&n| (w - n % w) % w).sum();
            prop_assert_eq!(packset.pad_total(), expected);
        }

        #[test]
        fn cmk_is_a_bijection(n in 1usize..40, edges in proptest::collection::vec((0u32..40, 0u32..40), 0..120)) {
            let edges: Vec<(u32, u32)> = edges
                .into_iter()
                .filter(|&(a, b)| (a as usize) < n && (b as usize) < n && a != b)
                .collect();
            let mut adj = vec![Vec::new(); n];
            for (a, b) in edges {
                adj[a as usize].push(b);
                adj[b as usize].push(a);
            }
            let graph = crate::mesh::AdjacencyGraph::from_lists(adj);
            let perm = cuthill_mckee(&graph, None);
            let mut seen = vec![false; n];
            for v in 0..n {
                let f = perm.apply(v);
                prop_assert!(!seen[f]);
                seen[f] = true;
                prop_assert_eq!(perm.inverse()[f], v);
            }
        }
    }
}
