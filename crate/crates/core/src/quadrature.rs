//! Shape-function tables and per-element geometry at quadrature points.
//!
//! One fixed reference element per shape:
//!
//! * TET4 - vertices (0,0,0), (1,0,0), (0,1,0), (0,0,1); volume 1/6.
//! * PYR5 - unit square base (0,0,0)..(0,1,0) counterclockwise, apex at
//!   (1/2, 1/2, 1); volume 1/3. The basis is the usual rational pyramid
//!   basis, regular at every interior point.
//! * PRI6 - reference triangle extruded along z; volume 1/2.
//! * HEX8 - trilinear unit cube, bottom face counterclockwise then top;
//!   volume 1.
//!
//! All bases satisfy partition of unity and reproduce affine functions, so
//! affine elements have constant Jacobians. The quadrature rules are exact
//! for all products `N_i * N_j` on TET4, PRI6, and HEX8; the PYR5 rule has
//! degree-2 monomial exactness and integrates the rational basis products
//! approximately.

use std::sync::OnceLock;

use thiserror::Error;

use crate::mesh::ElementShape;

/// Jacobian determinants below this magnitude are treated as singular.
pub const MIN_JACOBIAN: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("singular jacobian at gauss point {gauss}")]
    SingularJacobian { gauss: usize },
}

/// Shape-function values, reference gradients, and weights at the Gauss
/// points of one element shape.
///
/// Layouts: `n[in * ng + ig]`, `dn[(d * nn + in) * ng + ig]`, `w[ig]`.
#[derive(Debug, Clone)]
pub struct ShapeTable {
    pub shape: ElementShape,
    pub n: Vec<f64>,
    pub dn: Vec<f64>,
    pub w: Vec<f64>,
}

impl ShapeTable {
    pub fn nnodes(&self) -> usize {
        self.shape.nnodes()
    }

    pub fn ngauss(&self) -> usize {
        self.shape.ngauss()
    }

    #[inline(always)]
    pub fn n(&self, in_: usize, ig: usize) -> f64 {
        self.n[in_ * self.shape.ngauss() + ig]
    }

    #[inline(always)]
    pub fn dn(&self, d: usize, in_: usize, ig: usize) -> f64 {
        let (nn, ng) = (self.shape.nnodes(), self.shape.ngauss());
        self.dn[(d * nn + in_) * ng + ig]
    }
}

/// Weighted Jacobian determinants and physical shape-function gradients of
/// one element.
///
/// `detj[ig]` already carries the quadrature weight, so kernels use it as a
/// single integration factor. Layout of `gradn` matches `ShapeTable::dn`.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    nn: usize,
    ng: usize,
    pub detj: Vec<f64>,
    pub gradn: Vec<f64>,
}

impl ElementGeometry {
    pub fn new(shape: ElementShape) -> ElementGeometry {
        let (nn, ng) = (shape.nnodes(), shape.ngauss());
        ElementGeometry {
            nn,
            ng,
            detj: vec![0.0; ng],
            gradn: vec![0.0; 3 * nn * ng],
        }
    }

    #[inline(always)]
    pub fn detj(&self, ig: usize) -> f64 {
        self.detj[ig]
    }

    #[inline(always)]
    pub fn gradn(&self, d: usize, in_: usize, ig: usize) -> f64 {
        self.gradn[(d * self.nn + in_) * self.ng + ig]
    }
}

/// Returns the lazily built, immutable table for `shape`.
pub fn shape_table(shape: ElementShape) -> &'static ShapeTable {
    static TABLES: [OnceLock<ShapeTable>; 4] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    let idx = ElementShape::ALL.iter().position(|&s| s == shape).unwrap();
    TABLES[idx].get_or_init(|| build_table(shape))
}

fn build_table(shape: ElementShape) -> ShapeTable {
    let (nn, ng) = (shape.nnodes(), shape.ngauss());
    let rule = gauss_rule(shape);
    assert_eq!(rule.len(), ng);
    let mut table = ShapeTable {
        shape,
        n: vec![0.0; nn * ng],
        dn: vec![0.0; 3 * nn * ng],
        w: vec![0.0; ng],
    };
    let mut values = vec![0.0; nn];
    let mut grads = vec![[0.0; 3]; nn];
    for (ig, &(point, weight)) in rule.iter().enumerate() {
        table.w[ig] = weight;
        eval_shape(shape, point, &mut values, &mut grads);
        for in_ in 0..nn {
            table.n[in_ * ng + ig] = values[in_];
            for d in 0..3 {
                table.dn[(d * nn + in_) * ng + ig] = grads[in_][d];
            }
        }
    }
    table
}

/// Gauss points and weights on the reference element, frozen per shape.
fn gauss_rule(shape: ElementShape) -> Vec<([f64; 3], f64)> {
    match shape {
        // 4-point degree-2 rule of Hammer, Marlowe & Stroud (1956) in
        // barycentric form: one coordinate (5+3*sqrt(5))/20, the rest
        // (5-sqrt(5))/20.
        ElementShape::Tet4 => {
            let a = (5.0 + 3.0 * 5.0f64.sqrt()) / 20.0;
            let b = (5.0 - 5.0f64.sqrt()) / 20.0;
            let w = 1.0 / 24.0;
            vec![
                ([b, b, b], w),
                ([a, b, b], w),
                ([b, a, b], w),
                ([b, b, a], w),
            ]
        }
        // Axis rule: 2-point Gauss-Jacobi for the weight (1-z)^2 on [0,1]
        // (cf. Bedrosian 1992; Felippa 2004). The base layer carries four
        // symmetric points whose offset reproduces the second transverse
        // moment of the pyramid.
        ElementShape::Pyr5 => {
            let r10 = 10.0f64.sqrt();
            let z_lo = 1.0 / 3.0 - r10 / 15.0;
            let z_hi = 1.0 / 3.0 + r10 / 15.0;
            let w_lo = 1.0 / 6.0 + r10 / 48.0;
            let w_hi = 1.0 / 6.0 - r10 / 48.0;
            let a = (1.0 / (60.0 * w_lo)).sqrt();
            let wq = w_lo / 4.0;
            vec![
                ([0.5 - a, 0.5 - a, z_lo], wq),
                ([0.5 + a, 0.5 - a, z_lo], wq),
                ([0.5 + a, 0.5 + a, z_lo], wq),
                ([0.5 - a, 0.5 + a, z_lo], wq),
                ([0.5, 0.5, z_hi], w_hi),
            ]
        }
        // 3-point degree-2 triangle rule (interior points) times 2-point
        // Gauss on the segment.
        ElementShape::Pri6 => {
            let tri = [
                (1.0 / 6.0, 1.0 / 6.0),
                (2.0 / 3.0, 1.0 / 6.0),
                (1.0 / 6.0, 2.0 / 3.0),
            ];
            let g = 1.0 / 3.0f64.sqrt();
            let seg = [(1.0 - g) / 2.0, (1.0 + g) / 2.0];
            let w = 1.0 / 12.0;
            let mut rule = Vec::with_capacity(6);
            for &z in &seg {
                for &(x, y) in &tri {
                    rule.push(([x, y, z], w));
                }
            }
            rule
        }
        // Tensor 2x2x2 Gauss rule on the unit cube.
        ElementShape::Hex8 => {
            let g = 1.0 / 3.0f64.sqrt();
            let pts = [(1.0 - g) / 2.0, (1.0 + g) / 2.0];
            let w = 1.0 / 8.0;
            let mut rule = Vec::with_capacity(8);
            for &z in &pts {
                for &y in &pts {
                    for &x in &pts {
                        rule.push(([x, y, z], w));
                    }
                }
            }
            rule
        }
    }
}

/// Shape-function values and reference gradients at a point of the
/// reference element.
pub fn eval_shape(shape: ElementShape, p: [f64; 3], n: &mut [f64], dn: &mut [[f64; 3]]) {
    let [x, y, z] = p;
    match shape {
        ElementShape::Tet4 => {
            n[0] = 1.0 - x - y - z;
            n[1] = x;
            n[2] = y;
            n[3] = z;
            dn[0] = [-1.0, -1.0, -1.0];
            dn[1] = [1.0, 0.0, 0.0];
            dn[2] = [0.0, 1.0, 0.0];
            dn[3] = [0.0, 0.0, 1.0];
        }
        ElementShape::Pyr5 => {
            // Scaled square coordinates of the cross-section at height z.
            let s = 1.0 - z;
            let xm = x - 0.5 * z;
            let ym = y - 0.5 * z;
            let u = xm / s;
            let v = ym / s;
            n[0] = (1.0 - u) * (1.0 - v) * s;
            n[1] = u * (1.0 - v) * s;
            n[2] = u * v * s;
            n[3] = (1.0 - u) * v * s;
            n[4] = z;
            // d/dz of u and v at fixed (x, y)
            let uz = (xm - 0.5 * s) / (s * s);
            let vz = (ym - 0.5 * s) / (s * s);
            dn[0] = [
                -(1.0 - v),
                -(1.0 - u),
                -(1.0 - v) * s * uz - (1.0 - u) * s * vz - (1.0 - u) * (1.0 - v),
            ];
            dn[1] = [
                1.0 - v,
                -u,
                (1.0 - v) * s * uz - u * s * vz - u * (1.0 - v),
            ];
            dn[2] = [v, u, v * s * uz + u * s * vz - u * v];
            dn[3] = [
                -v,
                1.0 - u,
                -v * s * uz + (1.0 - u) * s * vz - (1.0 - u) * v,
            ];
            dn[4] = [0.0, 0.0, 1.0];
        }
        ElementShape::Pri6 => {
            let t = 1.0 - x - y;
            n[0] = t * (1.0 - z);
            n[1] = x * (1.0 - z);
            n[2] = y * (1.0 - z);
            n[3] = t * z;
            n[4] = x * z;
            n[5] = y * z;
            dn[0] = [-(1.0 - z), -(1.0 - z), -t];
            dn[1] = [1.0 - z, 0.0, -x];
            dn[2] = [0.0, 1.0 - z, -y];
            dn[3] = [-z, -z, t];
            dn[4] = [z, 0.0, x];
            dn[5] = [0.0, z, y];
        }
        ElementShape::Hex8 => {
            // (sign_x, sign_y, sign_z) per corner: 0 pairs with (1-c), 1 with c
            const C: [(usize, usize, usize); 8] = [
                (0, 0, 0),
                (1, 0, 0),
                (1, 1, 0),
                (0, 1, 0),
                (0, 0, 1),
                (1, 0, 1),
                (1, 1, 1),
                (0, 1, 1),
            ];
            let f = [[1.0 - x, x], [1.0 - y, y], [1.0 - z, z]];
            let df = [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]];
            for (i, &(cx, cy, cz)) in C.iter().enumerate() {
                n[i] = f[0][cx] * f[1][cy] * f[2][cz];
                dn[i] = [
                    df[0][cx] * f[1][cy] * f[2][cz],
                    f[0][cx] * df[1][cy] * f[2][cz],
                    f[0][cx] * f[1][cy] * df[2][cz],
                ];
            }
        }
    }
}

#[inline(always)]
pub(crate) fn det3(j: &[[f64; 3]; 3]) -> f64 {
    j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
        - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0])
}

/// Inverse of `j` given `inv_det = 1/det(j)`, as adjugate times `inv_det`.
/// With `inv_det == 0` this yields an all-zero (or NaN-propagating) matrix
/// without dividing, which is what padded slots rely on.
#[inline(always)]
pub(crate) fn inv3_scaled(j: &[[f64; 3]; 3], inv_det: f64) -> [[f64; 3]; 3] {
    [
        [
            (j[1][1] * j[2][2] - j[1][2] * j[2][1]) * inv_det,
            (j[0][2] * j[2][1] - j[0][1] * j[2][2]) * inv_det,
            (j[0][1] * j[1][2] - j[0][2] * j[1][1]) * inv_det,
        ],
        [
            (j[1][2] * j[2][0] - j[1][0] * j[2][2]) * inv_det,
            (j[0][0] * j[2][2] - j[0][2] * j[2][0]) * inv_det,
            (j[0][2] * j[1][0] - j[0][0] * j[1][2]) * inv_det,
        ],
        [
            (j[1][0] * j[2][1] - j[1][1] * j[2][0]) * inv_det,
            (j[0][1] * j[2][0] - j[0][0] * j[2][1]) * inv_det,
            (j[0][0] * j[1][1] - j[0][1] * j[1][0]) * inv_det,
        ],
    ]
}

/// Reference-to-physical Jacobian at Gauss point `ig`.
#[inline]
pub(crate) fn jacobian_at(table: &ShapeTable, coords: &[[f64; 3]], ig: usize) -> [[f64; 3]; 3] {
    let mut j = [[0.0f64; 3]; 3];
    for (in_, c) in coords.iter().enumerate() {
        for b in 0..3 {
            let d = table.dn(b, in_, ig);
            j[0][b] += c[0] * d;
            j[1][b] += c[1] * d;
            j[2][b] += c[2] * d;
        }
    }
    j
}

/// Evaluates weighted determinants and physical gradients of one element.
pub fn element_geometry(
    table: &ShapeTable,
    coords: &[[f64; 3]],
) -> Result<ElementGeometry, GeometryError> {
    let mut geo = ElementGeometry::new(table.shape);
    element_geometry_into(table, coords, &mut geo)?;
    Ok(geo)
}

/// In-place variant of [`element_geometry`] for reuse across elements.
pub fn element_geometry_into(
    table: &ShapeTable,
    coords: &[[f64; 3]],
    geo: &mut ElementGeometry,
) -> Result<(), GeometryError> {
    let (nn, ng) = (table.nnodes(), table.ngauss());
    assert_eq!(coords.len(), nn);
    assert_eq!(geo.nn, nn);
    for ig in 0..ng {
        let j = jacobian_at(table, coords, ig);
        let det = det3(&j);
        if det.abs() < MIN_JACOBIAN {
            return Err(GeometryError::SingularJacobian { gauss: ig });
        }
        let inv_det = 1.0 / det;
        let inv = inv3_scaled(&j, inv_det);
        geo.detj[ig] = det * table.w[ig];
        for in_ in 0..nn {
            for d in 0..3 {
                geo.gradn[(d * nn + in_) * ng + ig] = inv[0][d] * table.dn(0, in_, ig)
                    + inv[1][d] * table.dn(1, in_, ig)
                    + inv[2][d] * table.dn(2, in_, ig);
            }
        }
    }
    Ok(())
}

/// Raw (unweighted, unchecked) Jacobian determinants, one per Gauss point.
/// Used by the mesh validator to classify inverted elements.
pub fn jacobian_dets(table: &ShapeTable, coords: &[[f64; 3]], out: &mut [f64]) {
    for (ig, d) in out.iter_mut().enumerate() {
        *d = det3(&jacobian_at(table, coords, ig));
    }
}

/// Reference-element corner coordinates, in local node order.
pub fn reference_coords(shape: ElementShape) -> Vec<[f64; 3]> {
    match shape {
        ElementShape::Tet4 => vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ],
        ElementShape::Pyr5 => vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.5, 0.5, 1.0],
        ],
        ElementShape::Pri6 => vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 1.0],
            [0.0, 1.0, 1.0],
        ],
        ElementShape::Hex8 => vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
            [0.0, 1.0, 1.0],
        ],
    }
}

/// Reference-element volume.
pub fn reference_volume(shape: ElementShape) -> f64 {
    match shape {
        ElementShape::Tet4 => 1.0 / 6.0,
        ElementShape::Pyr5 => 1.0 / 3.0,
        ElementShape::Pri6 => 0.5,
        ElementShape::Hex8 => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_counts_match_shapes() {
        for shape in ElementShape::ALL {
            let t = shape_table(shape);
            assert_eq!(t.w.len(), shape.ngauss());
        }
        assert_eq!(shape_table(ElementShape::Tet4).ngauss(), 4);
        assert_eq!(shape_table(ElementShape::Pyr5).ngauss(), 5);
        assert_eq!(shape_table(ElementShape::Pri6).ngauss(), 6);
        assert_eq!(shape_table(ElementShape::Hex8).ngauss(), 8);
    }

    #[test]
    fn weights_sum_to_reference_volume() {
        for shape in ElementShape::ALL {
            let t = shape_table(shape);
            let total: f64 = t.w.iter().sum();
            assert!(
                (total - reference_volume(shape)).abs() < 1e-14,
                "{shape}: {total}"
            );
        }
    }

    #[test]
    fn partition_of_unity_and_gradient_consistency() {
        for shape in ElementShape::ALL {
            let t = shape_table(shape);
            for ig in 0..t.ngauss() {
                let sum: f64 = (0..t.nnodes()).map(|i| t.n(i, ig)).sum();
                assert!((sum - 1.0).abs() < 1e-14, "{shape} ig={ig}: {sum}");
                for d in 0..3 {
                    let gsum: f64 = (0..t.nnodes()).map(|i| t.dn(d, i, ig)).sum();
                    assert!(gsum.abs() < 1e-13, "{shape} ig={ig} d={d}: {gsum}");
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let h = 1e-6;
        for shape in ElementShape::ALL {
            let nn = shape.nnodes();
            let mut n = vec![0.0; nn];
            let mut np = vec![0.0; nn];
            let mut nm = vec![0.0; nn];
            let mut dn = vec![[0.0; 3]; nn];
            let mut scratch = vec![[0.0; 3]; nn];
            for &(p, _) in &gauss_rule(shape) {
                eval_shape(shape, p, &mut n, &mut dn);
                for d in 0..3 {
                    let mut pp = p;
                    pp[d] += h;
                    let mut pm = p;
                    pm[d] -= h;
                    eval_shape(shape, pp, &mut np, &mut scratch);
                    eval_shape(shape, pm, &mut nm, &mut scratch);
                    for i in 0..nn {
                        let fd = (np[i] - nm[i]) / (2.0 * h);
                        assert!(
                            (dn[i][d] - fd).abs() < 1e-7,
                            "{shape} node {i} dir {d}: {} vs {}",
                            dn[i][d],
                            fd
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn pyramid_rule_has_degree_two_exactness() {
        // Analytic monomial moments over the reference pyramid.
        let cases: [(fn([f64; 3]) -> f64, f64); 10] = [
            (|_| 1.0, 1.0 / 3.0),
            (|p| p[0], 1.0 / 6.0),
            (|p| p[1], 1.0 / 6.0),
            (|p| p[2], 1.0 / 12.0),
            (|p| p[0] * p[0], 1.0 / 10.0),
            (|p| p[1] * p[1], 1.0 / 10.0),
            (|p| p[2] * p[2], 1.0 / 30.0),
            (|p| p[0] * p[1], 1.0 / 12.0),
            (|p| p[0] * p[2], 1.0 / 24.0),
            (|p| p[1] * p[2], 1.0 / 24.0),
        ];
        for (f, exact) in cases {
            let total: f64 = gauss_rule(ElementShape::Pyr5)
                .iter()
                .map(|&(p, w)| w * f(p))
                .sum();
            assert!((total - exact).abs() < 1e-14, "{total} vs {exact}");
        }
    }

    #[test]
    fn tet_rule_integrates_linear_basis_exactly() {
        // integral of N_1 over the reference tet is V/4
        let t = shape_table(ElementShape::Tet4);
        for i in 0..4 {
            let total: f64 = (0..4).map(|ig| t.w[ig] * t.n(i, ig)).sum();
            assert!((total - 1.0 / 24.0).abs() < 1e-15, "node {i}: {total}");
        }
    }

    #[test]
    fn reference_elements_reproduce_their_volume() {
        for shape in ElementShape::ALL {
            let t = shape_table(shape);
            let geo = element_geometry(t, &reference_coords(shape)).unwrap();
            let vol: f64 = geo.detj.iter().sum();
            assert!(
                (vol - reference_volume(shape)).abs() < 1e-14,
                "{shape}: {vol}"
            );
        }
    }

    #[test]
    fn scaling_by_two_scales_detj_by_eight() {
        let t = shape_table(ElementShape::Tet4);
        let base = reference_coords(ElementShape::Tet4);
        let scaled: Vec<[f64; 3]> = base
            .iter()
            .map(|c| [2.0 * c[0], 2.0 * c[1], 2.0 * c[2]])
            .collect();
        let g0 = element_geometry(t, &base).unwrap();
        let g1 = element_geometry(t, &scaled).unwrap();
        for ig in 0..4 {
            assert!((g1.detj(ig) - 8.0 * g0.detj(ig)).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_element_is_singular() {
        let t = shape_table(ElementShape::Tet4);
        let flat = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
        ];
        assert_eq!(
            element_geometry(t, &flat).unwrap_err(),
            GeometryError::SingularJacobian { gauss: 0 }
        );
    }

    #[test]
    fn linear_field_gradient_reproduced_on_reference_elements() {
        let a = [0.3, -1.7, 0.9];
        for shape in ElementShape::ALL {
            let t = shape_table(shape);
            let coords = reference_coords(shape);
            let geo = element_geometry(t, &coords).unwrap();
            for ig in 0..t.ngauss() {
                for d in 0..3 {
                    let g: f64 = (0..t.nnodes())
                        .map(|i| {
                            let f = a[0] * coords[i][0] + a[1] * coords[i][1] + a[2] * coords[i][2];
                            f * geo.gradn(d, i, ig)
                        })
                        .sum();
                    assert!((g - a[d]).abs() < 1e-12, "{shape} ig={ig} d={d}: {g}");
                }
            }
        }
    }
}
