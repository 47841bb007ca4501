//! Pack-based assembly kernels.
//!
//! The lane count `W` is a const generic, so every inner lane loop has a
//! compile-time trip count and unit stride; one instance is materialized
//! per supported width and selected at run time. Lane `s` of a pack
//! performs exactly the arithmetic of the naive route on its element -
//! same expressions, same accumulation order - which is what makes the
//! `W = 1` instance bit-identical to [`super::assemble_naive`].
//!
//! Padded lanes gather the pad fill value, get `detj = 0` without any
//! division (the inverse is scaled by a zero factor instead), and are
//! skipped by the scatter mask.

use rayon::prelude::*;

use crate::mesh::Mesh;
use crate::packing::{gather_into, gather_vec3_into, PackRef, PackSet};
use crate::quadrature::{self, ShapeTable, MIN_JACOBIAN};

use super::{AssemblyError, KernelSpec, PackedOptions, SparseMatrix};

/// Upper bounds over all supported shapes, used to size scratch buffers.
const NN_MAX: usize = 8;
const NG_MAX: usize = 8;

pub(super) fn assemble(
    mesh: &Mesh,
    packset: &PackSet,
    kernel: &KernelSpec,
    options: &PackedOptions,
    matrix: &mut SparseMatrix,
    rhs: &mut [f64],
) -> Result<(), AssemblyError> {
    match packset.w() {
        1 => run::<1>(mesh, packset, kernel, options, matrix, rhs),
        2 => run::<2>(mesh, packset, kernel, options, matrix, rhs),
        4 => run::<4>(mesh, packset, kernel, options, matrix, rhs),
        8 => run::<8>(mesh, packset, kernel, options, matrix, rhs),
        16 => run::<16>(mesh, packset, kernel, options, matrix, rhs),
        32 => run::<32>(mesh, packset, kernel, options, matrix, rhs),
        64 => run::<64>(mesh, packset, kernel, options, matrix, rhs),
        128 => run::<128>(mesh, packset, kernel, options, matrix, rhs),
        256 => run::<256>(mesh, packset, kernel, options, matrix, rhs),
        512 => run::<512>(mesh, packset, kernel, options, matrix, rhs),
        w => unreachable!("pack width {w} has no built kernel instance"),
    }
}

fn run<const W: usize>(
    mesh: &Mesh,
    packset: &PackSet,
    kernel: &KernelSpec,
    options: &PackedOptions,
    matrix: &mut SparseMatrix,
    rhs: &mut [f64],
) -> Result<(), AssemblyError> {
    let pad = options.pad_fill.value();
    if options.parallel {
        let packs: Vec<PackRef> = packset.packs().collect();
        let threads = rayon::current_num_threads().max(1);
        let chunk = packs.len().div_ceil(threads * 4).max(1);
        let pattern = matrix.zeroed_like();
        let partials: Result<Vec<(Vec<f64>, Vec<f64>)>, AssemblyError> = packs
            .par_chunks(chunk)
            .map(|chunk_packs| {
                let mut values = vec![0.0; pattern.nnz()];
                let mut local_rhs = vec![0.0; rhs.len()];
                let mut scratch = Scratch::new(W);
                for pack in chunk_packs {
                    do_pack::<W>(
                        mesh,
                        pack,
                        kernel,
                        pad,
                        &mut scratch,
                        &pattern,
                        &mut values,
                        &mut local_rhs,
                    )?;
                }
                Ok((values, local_rhs))
            })
            .collect();
        // merge thread-private accumulators in chunk order
        for (values, local_rhs) in partials? {
            for (v, p) in matrix.values_mut().iter_mut().zip(&values) {
                *v += p;
            }
            for (r, p) in rhs.iter_mut().zip(&local_rhs) {
                *r += p;
            }
        }
        Ok(())
    } else {
        let mut scratch = Scratch::new(W);
        let pattern = matrix.zeroed_like();
        for pack in packset.packs() {
            do_pack::<W>(
                mesh,
                &pack,
                kernel,
                pad,
                &mut scratch,
                &pattern,
                matrix.values_mut(),
                rhs,
            )?;
        }
        Ok(())
    }
}

struct Scratch {
    coords: Vec<f64>,
    field3: Vec<f64>,
    field1: Vec<f64>,
    jbuf: Vec<f64>,
    invbuf: Vec<f64>,
    jk: Vec<f64>,
    u: Vec<f64>,
    udotg: Vec<f64>,
    sg: Vec<f64>,
    detj: Vec<f64>,
    gradn: Vec<f64>,
    ae: Vec<f64>,
    be: Vec<f64>,
}

impl Scratch {
    fn new(w: usize) -> Scratch {
        Scratch {
            coords: vec![0.0; 3 * NN_MAX * w],
            field3: vec![0.0; 3 * NN_MAX * w],
            field1: vec![0.0; NN_MAX * w],
            jbuf: vec![0.0; 9 * w],
            invbuf: vec![0.0; 9 * w],
            jk: vec![0.0; w],
            u: vec![0.0; 3 * w],
            udotg: vec![0.0; w],
            sg: vec![0.0; w],
            detj: vec![0.0; NG_MAX * w],
            gradn: vec![0.0; 3 * NN_MAX * NG_MAX * w],
            ae: vec![0.0; NN_MAX * NN_MAX * w],
            be: vec![0.0; NN_MAX * w],
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn do_pack<const W: usize>(
    mesh: &Mesh,
    pack: &PackRef<'_>,
    kernel: &KernelSpec,
    pad: f64,
    scratch: &mut Scratch,
    pattern: &SparseMatrix,
    values: &mut [f64],
    rhs: &mut [f64],
) -> Result<(), AssemblyError> {
    debug_assert_eq!(pack.w, W);
    let table = quadrature::shape_table(pack.shape);
    let (nn, ng) = (table.nnodes(), table.ngauss());

    gather_vec3_into(mesh.nodes(), pack, pad, &mut scratch.coords[..3 * nn * W]);
    geometry::<W>(
        table,
        &scratch.coords[..3 * nn * W],
        pack,
        &mut scratch.jbuf,
        &mut scratch.invbuf,
        &mut scratch.detj,
        &mut scratch.gradn,
    )?;

    let ae = &mut scratch.ae[..nn * nn * W];
    let be = &mut scratch.be[..nn * W];
    ae.fill(0.0);
    be.fill(0.0);
    match kernel {
        KernelSpec::Mass => mass_pack::<W>(table, &scratch.detj, nn, ng, ae),
        KernelSpec::Diffusion { kappa } => diffusion_pack::<W>(
            &scratch.detj,
            &scratch.gradn,
            *kappa,
            nn,
            ng,
            &mut scratch.jk,
            ae,
        ),
        KernelSpec::Convection { velocity } => {
            gather_vec3_into(velocity, pack, pad, &mut scratch.field3[..3 * nn * W]);
            convection_pack::<W>(
                table,
                &scratch.detj,
                &scratch.gradn,
                &scratch.field3,
                nn,
                ng,
                &mut scratch.u,
                &mut scratch.udotg,
                ae,
            );
        }
        KernelSpec::SourceRhs { source } => {
            gather_into(source, pack, pad, &mut scratch.field1[..nn * W]);
            source_pack::<W>(
                table,
                &scratch.detj,
                &scratch.field1,
                nn,
                ng,
                &mut scratch.sg,
                be,
            );
        }
    }

    // scatter, masking the padded lanes
    let offsets = pattern.offsets();
    let cols = pattern.cols();
    for s in 0..pack.nreal {
        if kernel.has_matrix() {
            for in_ in 0..nn {
                let row = pack.node_map[in_ * W + s] as usize;
                let lo = offsets[row];
                let hi = offsets[row + 1];
                for jn in 0..nn {
                    let col = pack.node_map[jn * W + s];
                    let pos = cols[lo..hi]
                        .binary_search(&col)
                        .expect("entry outside the sparsity pattern");
                    values[lo + pos] += ae[(in_ * nn + jn) * W + s];
                }
            }
        }
        if kernel.has_rhs() {
            for in_ in 0..nn {
                rhs[pack.node_map[in_ * W + s] as usize] += be[in_ * W + s];
            }
        }
    }
    Ok(())
}

/// Lane-parallel geometry; mirrors `quadrature::element_geometry_into`
/// expression for expression.
#[allow(clippy::too_many_arguments)]
fn geometry<const W: usize>(
    table: &ShapeTable,
    coords: &[f64],
    pack: &PackRef<'_>,
    jbuf: &mut [f64],
    invbuf: &mut [f64],
    detj: &mut [f64],
    gradn: &mut [f64],
) -> Result<(), AssemblyError> {
    let (nn, ng) = (table.nnodes(), table.ngauss());
    for ig in 0..ng {
        for a in 0..3 {
            for b in 0..3 {
                let jab = &mut jbuf[(a * 3 + b) * W..][..W];
                jab.fill(0.0);
                for in_ in 0..nn {
                    let d = table.dn(b, in_, ig);
                    let c = &coords[(a * nn + in_) * W..][..W];
                    for s in 0..W {
                        jab[s] += c[s] * d;
                    }
                }
            }
        }
        for s in 0..W {
            let j = [
                [jbuf[s], jbuf[W + s], jbuf[2 * W + s]],
                [jbuf[3 * W + s], jbuf[4 * W + s], jbuf[5 * W + s]],
                [jbuf[6 * W + s], jbuf[7 * W + s], jbuf[8 * W + s]],
            ];
            let inv_det = if s < pack.nreal {
                let det = quadrature::det3(&j);
                if det.abs() < MIN_JACOBIAN {
                    return Err(AssemblyError::SingularElement {
                        element: pack.slots[s],
                    });
                }
                detj[ig * W + s] = det * table.w[ig];
                1.0 / det
            } else {
                detj[ig * W + s] = 0.0;
                0.0
            };
            let inv = quadrature::inv3_scaled(&j, inv_det);
            for a in 0..3 {
                for b in 0..3 {
                    invbuf[(a * 3 + b) * W + s] = inv[a][b];
                }
            }
        }
        for d in 0..3 {
            let i0 = &invbuf[d * W..][..W];
            let i1 = &invbuf[(3 + d) * W..][..W];
            let i2 = &invbuf[(6 + d) * W..][..W];
            for in_ in 0..nn {
                let d0 = table.dn(0, in_, ig);
                let d1 = table.dn(1, in_, ig);
                let d2 = table.dn(2, in_, ig);
                let out = &mut gradn[((d * nn + in_) * ng + ig) * W..][..W];
                for s in 0..W {
                    out[s] = i0[s] * d0 + i1[s] * d1 + i2[s] * d2;
                }
            }
        }
    }
    for s in 0..pack.nreal {
        for ig in 0..ng {
            if detj[ig * W + s] <= 0.0 {
                return Err(AssemblyError::InvertedElement {
                    element: pack.slots[s],
                });
            }
        }
    }
    Ok(())
}

fn mass_pack<const W: usize>(
    table: &ShapeTable,
    detj: &[f64],
    nn: usize,
    ng: usize,
    ae: &mut [f64],
) {
    for ig in 0..ng {
        let jac = &detj[ig * W..][..W];
        for jn in 0..nn {
            let njn = table.n(jn, ig);
            for in_ in 0..nn {
                let nin = table.n(in_, ig);
                let row = &mut ae[(in_ * nn + jn) * W..][..W];
                for s in 0..W {
                    row[s] += jac[s] * nin * njn;
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn diffusion_pack<const W: usize>(
    detj: &[f64],
    gradn: &[f64],
    kappa: f64,
    nn: usize,
    ng: usize,
    jk: &mut [f64],
    ae: &mut [f64],
) {
    for ig in 0..ng {
        let jac = &detj[ig * W..][..W];
        let jk = &mut jk[..W];
        for s in 0..W {
            jk[s] = jac[s] * kappa;
        }
        for jn in 0..nn {
            let gxj = &gradn[((jn) * ng + ig) * W..][..W];
            let gyj = &gradn[((nn + jn) * ng + ig) * W..][..W];
            let gzj = &gradn[((2 * nn + jn) * ng + ig) * W..][..W];
            for in_ in 0..nn {
                let gxi = &gradn[((in_) * ng + ig) * W..][..W];
                let gyi = &gradn[((nn + in_) * ng + ig) * W..][..W];
                let gzi = &gradn[((2 * nn + in_) * ng + ig) * W..][..W];
                let row = &mut ae[(in_ * nn + jn) * W..][..W];
                for s in 0..W {
                    let dot = gxi[s] * gxj[s] + gyi[s] * gyj[s] + gzi[s] * gzj[s];
                    row[s] += jk[s] * dot;
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn convection_pack<const W: usize>(
    table: &ShapeTable,
    detj: &[f64],
    gradn: &[f64],
    velocity: &[f64],
    nn: usize,
    ng: usize,
    u: &mut [f64],
    udotg: &mut [f64],
    ae: &mut [f64],
) {
    for ig in 0..ng {
        let jac = &detj[ig * W..][..W];
        u[..3 * W].fill(0.0);
        for in_ in 0..nn {
            let nv = table.n(in_, ig);
            for d in 0..3 {
                let vb = &velocity[(d * nn + in_) * W..][..W];
                let ud = &mut u[d * W..][..W];
                for s in 0..W {
                    ud[s] += nv * vb[s];
                }
            }
        }
        let (u0, rest) = u.split_at(W);
        let (u1, u2) = rest.split_at(W);
        for jn in 0..nn {
            let gxj = &gradn[((jn) * ng + ig) * W..][..W];
            let gyj = &gradn[((nn + jn) * ng + ig) * W..][..W];
            let gzj = &gradn[((2 * nn + jn) * ng + ig) * W..][..W];
            let udotg = &mut udotg[..W];
            for s in 0..W {
                udotg[s] = u0[s] * gxj[s] + u1[s] * gyj[s] + u2[s] * gzj[s];
            }
            for in_ in 0..nn {
                let nin = table.n(in_, ig);
                let row = &mut ae[(in_ * nn + jn) * W..][..W];
                for s in 0..W {
                    row[s] += jac[s] * nin * udotg[s];
                }
            }
        }
    }
}

fn source_pack<const W: usize>(
    table: &ShapeTable,
    detj: &[f64],
    source: &[f64],
    nn: usize,
    ng: usize,
    sg: &mut [f64],
    be: &mut [f64],
) {
    for ig in 0..ng {
        let jac = &detj[ig * W..][..W];
        let sg = &mut sg[..W];
        sg.fill(0.0);
        for in_ in 0..nn {
            let nv = table.n(in_, ig);
            let sb = &source[in_ * W..][..W];
            for s in 0..W {
                sg[s] += nv * sb[s];
            }
        }
        for in_ in 0..nn {
            let nin = table.n(in_, ig);
            let row = &mut be[in_ * W..][..W];
            for s in 0..W {
                row[s] += jac[s] * nin * sg[s];
            }
        }
    }
}
