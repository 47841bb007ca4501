//! packfem-core: a finite-element assembly mini-app built around a
//! pack-width-parametric data layout.
//!
//! Elements are grouped by shape, relabeled for locality, and packed into
//! fixed-width batches whose innermost loops have compile-time trip counts,
//! letting the compiler auto-vectorize the elemental kernels without any
//! intrinsics. A naive per-element route is kept as the reference; the two
//! agree bit for bit at pack width 1 and to rounding otherwise. On top of
//! the kernels sit a conjugate-gradient solver, an explicit three-stage
//! Runge-Kutta time loop with per-phase instrumentation, and a benchmark
//! harness that sweeps pack widths and derives hardware-counter metrics.

pub mod assembly;
pub mod bench;
pub mod mesh;
pub mod packing;
pub mod quadrature;
pub mod solver;
pub mod timeloop;

pub use assembly::{
    assemble_naive, assemble_packed, assemble_packed_with, sparsity_pattern, Assembler,
    AssemblyError, KernelSpec, PackedOptions, PadFill, SparseMatrix,
};
pub use mesh::{
    generate_box_mesh, node_adjacency, read_mesh, validate, write_mesh, AdjacencyGraph,
    ElementShape, Mesh, MeshError, MixPolicy,
};
pub use packing::{
    bandwidth, build_packs, cuthill_mckee, group_elements, prepare, reverse_cuthill_mckee,
    GroupIndex, PackError, PackSet, Permutation, Prepared, Reorder, SUPPORTED_WIDTHS,
};
pub use quadrature::{element_geometry, shape_table, ElementGeometry, GeometryError, ShapeTable};
pub use solver::{apply_dirichlet, cg_solve, CgConfig, SolveResult};
