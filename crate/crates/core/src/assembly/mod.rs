//! Global matrix and right-hand-side assembly from elemental kernels.
//!
//! Two routes produce the same system:
//!
//! * [`assemble_naive`] walks elements one by one in mesh order with the
//!   classic gauss-point/node loop nest.
//! * [`assemble_packed`] walks packs of `W` same-shape elements, with the
//!   lane loop innermost at a constant trip count so the compiler can
//!   vectorize it. At `W = 1` it performs the same arithmetic in the same
//!   order as the naive route and the result is bit-identical; for larger
//!   widths results agree up to floating-point reassociation.
//!
//! No SIMD intrinsics anywhere; the layout and constant trip counts are the
//! whole mechanism.

mod packed;
mod sparse;

pub use sparse::{sparsity_pattern, SparseMatrix};

use thiserror::Error;

use crate::mesh::Mesh;
use crate::packing::PackSet;
use crate::quadrature::{self, ElementGeometry, ShapeTable};

#[derive(Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error("inverted element {element}")]
    InvertedElement { element: usize },
    #[error("singular element {element}")]
    SingularElement { element: usize },
    #[error("pack set census {packset:?} does not match mesh census {mesh:?}")]
    PacksetMismatch {
        packset: [usize; 4],
        mesh: [usize; 4],
    },
    #[error("coefficient field has {got} entries, mesh has {want} nodes")]
    CoefficientSize { got: usize, want: usize },
}

/// Elemental kernel selection with the coefficients it needs.
#[derive(Debug, Clone, Copy)]
pub enum KernelSpec<'a> {
    /// `Ae(i,j) = sum_ig Jac * N_i * N_j`
    Mass,
    /// `Ae(i,j) = sum_ig Jac * kappa * grad N_i . grad N_j`
    Diffusion { kappa: f64 },
    /// `Ae(i,j) = sum_ig Jac * N_i * (u . grad N_j)` with `u` interpolated
    /// from nodal values.
    Convection { velocity: &'a [[f64; 3]] },
    /// `be(i) = sum_ig Jac * N_i * s` with `s` interpolated from nodal
    /// values; matrix untouched.
    SourceRhs { source: &'a [f64] },
}

impl KernelSpec<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Mass => "mass",
            KernelSpec::Diffusion { .. } => "diffusion",
            KernelSpec::Convection { .. } => "convection",
            KernelSpec::SourceRhs { .. } => "source_rhs",
        }
    }

    fn has_matrix(&self) -> bool {
        !matches!(self, KernelSpec::SourceRhs { .. })
    }

    fn has_rhs(&self) -> bool {
        matches!(self, KernelSpec::SourceRhs { .. })
    }

    fn check_sizes(&self, node_count: usize) -> Result<(), AssemblyError> {
        let got = match self {
            KernelSpec::Convection { velocity } => velocity.len(),
            KernelSpec::SourceRhs { source } => source.len(),
            _ => node_count,
        };
        if got != node_count {
            return Err(AssemblyError::CoefficientSize {
                got,
                want: node_count,
            });
        }
        Ok(())
    }
}

/// What padded gather lanes are filled with. `Nan` is a validation mode
/// that proves the padding mask: the final system must come out identical
/// to the `Zero` fill because padded lanes never reach a scatter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PadFill {
    #[default]
    Zero,
    Nan,
}

impl PadFill {
    pub(crate) fn value(self) -> f64 {
        match self {
            PadFill::Zero => 0.0,
            PadFill::Nan => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PackedOptions {
    /// Process packs on the rayon pool with thread-private value arrays
    /// merged by summation afterwards.
    pub parallel: bool,
    pub pad_fill: PadFill,
}

/// Reusable assembly context: the sparsity pattern is built once; each
/// assembled matrix shares its structure and only allocates fresh values.
/// Pass the same mesh the pattern was built from.
pub struct Assembler {
    pattern: SparseMatrix,
}

impl Assembler {
    pub fn new(mesh: &Mesh) -> Assembler {
        Assembler {
            pattern: sparsity_pattern(mesh),
        }
    }

    pub fn pattern(&self) -> &SparseMatrix {
        &self.pattern
    }

    /// Element-by-element assembly in mesh order.
    pub fn naive(
        &self,
        mesh: &Mesh,
        kernel: &KernelSpec,
    ) -> Result<(SparseMatrix, Vec<f64>), AssemblyError> {
        debug_assert_eq!(mesh.node_count(), self.pattern.n());
        kernel.check_sizes(mesh.node_count())?;
        let mut matrix = self.pattern.zeroed_like();
        let mut rhs = vec![0.0; mesh.node_count()];
        naive_into(mesh, kernel, &mut matrix, &mut rhs)?;
        Ok((matrix, rhs))
    }

    /// Pack-based assembly; `packset` must have been built from `mesh`.
    pub fn packed(
        &self,
        mesh: &Mesh,
        packset: &PackSet,
        kernel: &KernelSpec,
        options: &PackedOptions,
    ) -> Result<(SparseMatrix, Vec<f64>), AssemblyError> {
        debug_assert_eq!(mesh.node_count(), self.pattern.n());
        kernel.check_sizes(mesh.node_count())?;
        if packset.census() != mesh.census() || packset.node_count() != mesh.node_count() {
            return Err(AssemblyError::PacksetMismatch {
                packset: packset.census(),
                mesh: mesh.census(),
            });
        }
        let mut matrix = self.pattern.zeroed_like();
        let mut rhs = vec![0.0; mesh.node_count()];
        packed::assemble(mesh, packset, kernel, options, &mut matrix, &mut rhs)?;
        Ok((matrix, rhs))
    }
}

/// One-shot naive assembly (builds the pattern internally).
pub fn assemble_naive(
    mesh: &Mesh,
    kernel: &KernelSpec,
) -> Result<(SparseMatrix, Vec<f64>), AssemblyError> {
    Assembler::new(mesh).naive(mesh, kernel)
}

/// One-shot packed assembly with default options.
pub fn assemble_packed(
    mesh: &Mesh,
    packset: &PackSet,
    kernel: &KernelSpec,
) -> Result<(SparseMatrix, Vec<f64>), AssemblyError> {
    Assembler::new(mesh).packed(mesh, packset, kernel, &PackedOptions::default())
}

/// One-shot packed assembly with explicit options.
pub fn assemble_packed_with(
    mesh: &Mesh,
    packset: &PackSet,
    kernel: &KernelSpec,
    options: &PackedOptions,
) -> Result<(SparseMatrix, Vec<f64>), AssemblyError> {
    Assembler::new(mesh).packed(mesh, packset, kernel, options)
}

fn naive_into(
    mesh: &Mesh,
    kernel: &KernelSpec,
    matrix: &mut SparseMatrix,
    rhs: &mut [f64],
) -> Result<(), AssemblyError> {
    let mut coords = vec![[0.0f64; 3]; 8];
    let mut element = 0usize;
    for block in mesh.blocks() {
        let table = quadrature::shape_table(block.shape);
        let (nn, ng) = (table.nnodes(), table.ngauss());
        let mut geo = ElementGeometry::new(block.shape);
        let mut ae = vec![0.0f64; nn * nn];
        let mut be = vec![0.0f64; nn];
        for e in 0..block.len() {
            let conn = block.element(e);
            mesh.element_coords(conn, &mut coords[..nn]);
            quadrature::element_geometry_into(table, &coords[..nn], &mut geo)
                .map_err(|_| AssemblyError::SingularElement { element })?;
            if geo.detj.iter().any(|&d| d <= 0.0) {
                return Err(AssemblyError::InvertedElement { element });
            }
            ae.fill(0.0);
            be.fill(0.0);
            match kernel {
                KernelSpec::Mass => mass_element(table, &geo, nn, ng, &mut ae),
                KernelSpec::Diffusion { kappa } => {
                    diffusion_element(&geo, *kappa, nn, ng, &mut ae)
                }
                KernelSpec::Convection { velocity } => {
                    convection_element(table, &geo, velocity, conn, nn, ng, &mut ae)
                }
                KernelSpec::SourceRhs { source } => {
                    source_element(table, &geo, source, conn, nn, ng, &mut be)
                }
            }
            if kernel.has_matrix() {
                for in_ in 0..nn {
                    let row = conn[in_] as usize;
                    for jn in 0..nn {
                        matrix.add(row, conn[jn], ae[in_ * nn + jn]);
                    }
                }
            }
            if kernel.has_rhs() {
                for in_ in 0..nn {
                    rhs[conn[in_] as usize] += be[in_];
                }
            }
            element += 1;
        }
    }
    Ok(())
}

// The elemental loop nests below keep the gauss loop outermost and the
// node loops inside, accumulating one element at a time. The packed module
// mirrors these expressions lane for lane; any change here must be made
// there as well to preserve the W = 1 bit-identity.

fn mass_element(table: &ShapeTable, geo: &ElementGeometry, nn: usize, ng: usize, ae: &mut [f64]) {
    for ig in 0..ng {
        let jac = geo.detj(ig);
        for jn in 0..nn {
            let njn = table.n(jn, ig);
            for in_ in 0..nn {
                ae[in_ * nn + jn] += jac * table.n(in_, ig) * njn;
            }
        }
    }
}

fn diffusion_element(geo: &ElementGeometry, kappa: f64, nn: usize, ng: usize, ae: &mut [f64]) {
    for ig in 0..ng {
        let jk = geo.detj(ig) * kappa;
        for jn in 0..nn {
            let gx = geo.gradn(0, jn, ig);
            let gy = geo.gradn(1, jn, ig);
            let gz = geo.gradn(2, jn, ig);
            for in_ in 0..nn {
                let dot = geo.gradn(0, in_, ig) * gx
                    + geo.gradn(1, in_, ig) * gy
                    + geo.gradn(2, in_, ig) * gz;
                ae[in_ * nn + jn] += jk * dot;
            }
        }
    }
}

fn convection_element(
    table: &ShapeTable,
    geo: &ElementGeometry,
    velocity: &[[f64; 3]],
    conn: &[u32],
    nn: usize,
    ng: usize,
    ae: &mut [f64],
) {
    for ig in 0..ng {
        let mut u = [0.0f64; 3];
        for in_ in 0..nn {
            let nv = table.n(in_, ig);
            let un = velocity[conn[in_] as usize];
            u[0] += nv * un[0];
            u[1] += nv * un[1];
            u[2] += nv * un[2];
        }
        let jac = geo.detj(ig);
        for jn in 0..nn {
            let udotg = u[0] * geo.gradn(0, jn, ig)
                + u[1] * geo.gradn(1, jn, ig)
                + u[2] * geo.gradn(2, jn, ig);
            for in_ in 0..nn {
                ae[in_ * nn + jn] += jac * table.n(in_, ig) * udotg;
            }
        }
    }
}

fn source_element(
    table: &ShapeTable,
    geo: &ElementGeometry,
    source: &[f64],
    conn: &[u32],
    nn: usize,
    ng: usize,
    be: &mut [f64],
) {
    for ig in 0..ng {
        let mut sg = 0.0f64;
        for in_ in 0..nn {
            sg += table.n(in_, ig) * source[conn[in_] as usize];
        }
        let jac = geo.detj(ig);
        for in_ in 0..nn {
            be[in_] += jac * table.n(in_, ig) * sg;
        }
    }
}
