//! Compressed sparse row matrices over the mesh node graph.
//!
//! The structure arrays (`offsets`, `cols`) are shared behind `Arc` so that
//! repeated assemblies over one pattern only allocate a fresh value array.

use std::sync::Arc;

use crate::mesh::{node_adjacency, Mesh};

#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n: usize,
    offsets: Arc<[usize]>,
    cols: Arc<[u32]>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_parts(n: usize, offsets: Vec<usize>, cols: Vec<u32>, values: Vec<f64>) -> Self {
        assert_eq!(offsets.len(), n + 1);
        assert_eq!(cols.len(), values.len());
        assert_eq!(*offsets.last().unwrap(), cols.len());
        for row in 0..n {
            let cols = &cols[offsets[row]..offsets[row + 1]];
            assert!(cols.windows(2).all(|w| w[0] < w[1]), "row {row} not sorted");
        }
        SparseMatrix {
            n,
            offsets: offsets.into(),
            cols: cols.into(),
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn set_values(&mut self, values: Vec<f64>) {
        assert_eq!(values.len(), self.cols.len());
        self.values = values;
    }

    /// A matrix sharing this structure with all-zero values.
    pub fn zeroed_like(&self) -> SparseMatrix {
        SparseMatrix {
            n: self.n,
            offsets: Arc::clone(&self.offsets),
            cols: Arc::clone(&self.cols),
            values: vec![0.0; self.cols.len()],
        }
    }

    pub fn same_pattern(&self, other: &SparseMatrix) -> bool {
        Arc::ptr_eq(&self.offsets, &other.offsets) && Arc::ptr_eq(&self.cols, &other.cols)
            || (self.offsets == other.offsets && self.cols == other.cols)
    }

    pub fn row_cols(&self, row: usize) -> &[u32] {
        &self.cols[self.offsets[row]..self.offsets[row + 1]]
    }

    pub fn row_values(&self, row: usize) -> &[f64] {
        &self.values[self.offsets[row]..self.offsets[row + 1]]
    }

    /// Value index of entry `(row, col)`, if present in the pattern.
    #[inline]
    pub fn find(&self, row: usize, col: u32) -> Option<usize> {
        let base = self.offsets[row];
        self.cols[base..self.offsets[row + 1]]
            .binary_search(&col)
            .ok()
            .map(|p| base + p)
    }

    /// Accumulates into an entry that must exist in the pattern.
    #[inline(always)]
    pub fn add(&mut self, row: usize, col: u32, value: f64) {
        let base = self.offsets[row];
        let pos = self.cols[base..self.offsets[row + 1]]
            .binary_search(&col)
            .expect("entry outside the sparsity pattern");
        self.values[base + pos] += value;
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for row in 0..self.n {
            let mut acc = 0.0;
            let lo = self.offsets[row];
            let hi = self.offsets[row + 1];
            for k in lo..hi {
                acc += self.values[k] * x[self.cols[k] as usize];
            }
            y[row] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|row| self.find(row, row as u32).map_or(0.0, |k| self.values[k]))
            .collect()
    }

    /// Visits every stored entry as `(row, col, &mut value)`.
    pub fn for_each_entry_mut(&mut self, mut f: impl FnMut(usize, u32, &mut f64)) {
        for row in 0..self.n {
            for k in self.offsets[row]..self.offsets[row + 1] {
                f(row, self.cols[k], &mut self.values[k]);
            }
        }
    }

    /// Adds another matrix with the same pattern into this one.
    pub fn add_assign(&mut self, other: &SparseMatrix) {
        assert!(self.same_pattern(other), "pattern mismatch");
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += o;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Dense `n x n` copy, row major. Intended for small test systems.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n * self.n];
        for row in 0..self.n {
            for k in self.offsets[row]..self.offsets[row + 1] {
                dense[row * self.n + self.cols[k] as usize] = self.values[k];
            }
        }
        dense
    }
}

/// Builds the zero-valued matrix whose entry `(i, j)` is present exactly
/// when nodes `i` and `j` share an element, plus the diagonal.
pub fn sparsity_pattern(mesh: &Mesh) -> SparseMatrix {
    let graph = node_adjacency(mesh);
    let n = mesh.node_count();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    let mut cols = Vec::new();
    for i in 0..n {
        let neighbors = graph.neighbors(i);
        let i32col = i as u32;
        let insert = neighbors.partition_point(|&j| j < i32col);
        cols.extend_from_slice(&neighbors[..insert]);
        cols.push(i32col);
        cols.extend_from_slice(&neighbors[insert..]);
        offsets.push(cols.len());
    }
    let values = vec![0.0; cols.len()];
    SparseMatrix::from_parts(n, offsets, cols, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_box_mesh, Block, ElementShape, Mesh, MixPolicy};

    fn tet_pair_mesh(disjoint: bool) -> Mesh {
        let mut nodes = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let mut b = Block::new(ElementShape::Tet4);
        b.push(&[0, 1, 2, 3]);
        if disjoint {
            for c in 0..4 {
                let mut shifted = nodes[c];
                shifted[0] += 5.0;
                nodes.push(shifted);
            }
            b.push(&[4, 5, 6, 7]);
        }
        Mesh::new(nodes, vec![b])
    }

    #[test]
    fn single_tet_pattern_is_dense() {
        let a = sparsity_pattern(&tet_pair_mesh(false));
        assert_eq!(a.n(), 4);
        assert_eq!(a.nnz(), 16);
    }

    #[test]
    fn disjoint_tets_give_block_diagonal() {
        let a = sparsity_pattern(&tet_pair_mesh(true));
        assert_eq!(a.nnz(), 32);
        assert!(a.find(0, 5).is_none());
        assert!(a.find(5, 4).is_some());
    }

    #[test]
    fn pattern_size_matches_adjacency_degrees() {
        let mesh = generate_box_mesh(2, 2, 2, MixPolicy::AllHex).unwrap();
        let graph = node_adjacency(&mesh);
        let expected: usize = (0..mesh.node_count()).map(|i| 1 + graph.degree(i)).sum();
        assert_eq!(sparsity_pattern(&mesh).nnz(), expected);
    }

    #[test]
    fn spmv_identity_and_dense_oracle() {
        let offsets = vec![0, 1, 2, 3];
        let cols = vec![0, 1, 2];
        let a = SparseMatrix::from_parts(3, offsets, cols, vec![1.0; 3]);
        let x = vec![3.0, -1.0, 0.5];
        let mut y = vec![0.0; 3];
        a.spmv(&x, &mut y);
        assert_eq!(y, x);

        let mesh = tet_pair_mesh(false);
        let mut a = sparsity_pattern(&mesh);
        for (k, v) in a.values_mut().iter_mut().enumerate() {
            *v = (k as f64 * 1.3).sin();
        }
        let x: Vec<f64> = (0..4).map(|i| 0.25 * i as f64 - 0.4).collect();
        let mut y = vec![0.0; 4];
        a.spmv(&x, &mut y);
        let dense = a.to_dense();
        for row in 0..4 {
            let expect: f64 = (0..4).map(|c| dense[row * 4 + c] * x[c]).sum();
            assert!((y[row] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn add_uses_binary_search_within_rows() {
        let mesh = tet_pair_mesh(true);
        let mut a = sparsity_pattern(&mesh);
        a.add(3, 1, 2.5);
        a.add(3, 1, 0.5);
        assert_eq!(a.values()[a.find(3, 1).unwrap()], 3.0);
    }

    #[test]
    #[should_panic(expected = "outside the sparsity pattern")]
    fn add_outside_pattern_panics() {
        let mesh = tet_pair_mesh(true);
        let mut a = sparsity_pattern(&mesh);
        a.add(0, 7, 1.0);
    }
}
