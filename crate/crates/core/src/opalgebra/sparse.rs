//! Compressed sparse row matrices for the large, very sparse operators that
//! appear in the claim checks (extended isometries with record slots).

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{CMatrix, C64, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let d = diag.len();
        Self::from_triplets(d, d, diag.iter().enumerate().map(|(i, &z)| (i, i, z)))
    }

    /// Duplicate coordinates are summed; explicit zeros are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut per_row: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); rows];
        for (i, j, z) in triplets {
            assert!(i < rows && j < cols, "triplet ({i}, {j}) outside {rows}x{cols}");
            *per_row[i].entry(j).or_insert(ZERO) += z;
        }
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in per_row {
            for (j, z) in row {
                if z != ZERO {
                    indices.push(j);
                    values.push(z);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let mut trip = Vec::new();
        for i in 0..m.rows() {
            for (j, &z) in m.row(i).iter().enumerate() {
                if z != ZERO {
                    trip.push((i, j, z));
                }
            }
        }
        Self::from_triplets(m.rows(), m.cols(), trip)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[s..e].iter().copied().zip(self.values[s..e].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row_entries(i).map(move |(j, z)| (i, j, z)))
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.rows, self.cols);
        for (i, j, z) in self.triplets() {
            m[(i, j)] = z;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.cols,
            self.rows,
            self.triplets().map(|(i, j, z)| (j, i, z.conj())),
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sparse sum shape mismatch");
        Self::from_triplets(self.rows, self.cols, self.triplets().chain(other.triplets()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Row-by-row (Gustavson) product.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "sparse product shape mismatch");
        let mut indptr = Vec::with_capacity(self.rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        let mut acc = vec![ZERO; other.cols];
        let mut touched = vec![false; other.cols];
        let mut cols_hit: Vec<usize> = Vec::new();
        for i in 0..self.rows {
            for (k, a) in self.row_entries(i) {
                for (j, b) in other.row_entries(k) {
                    if !touched[j] {
                        touched[j] = true;
                        cols_hit.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols_hit.sort_unstable();
            for &j in &cols_hit {
                if acc[j] != ZERO {
                    indices.push(j);
                    values.push(acc[j]);
                }
                acc[j] = ZERO;
                touched[j] = false;
            }
            cols_hit.clear();
            indptr.push(indices.len());
        }
        Self {
            rows: self.rows,
            cols: other.cols,
            indptr,
            indices,
            values,
        }
    }

    /// `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut trip = Vec::with_capacity(self.nnz() * other.nnz());
        for (i1, j1, a) in self.triplets() {
            for (i2, j2, b) in other.triplets() {
                trip.push((i1 * other.rows + i2, j1 * other.cols + j2, a * b));
            }
        }
        Self::from_triplets(self.rows * other.rows, self.cols * other.cols, trip)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "sparse matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| self.row_entries(i).map(|(j, z)| z * v[j]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    ///
    /// Forms the Gram matrix on the smaller side, splits it into connected
    /// components of its sparsity graph and diagonalizes each block densely.
    /// The operators of interest decompose into many small blocks, so this
    /// is exact up to dense eigensolver accuracy.
    pub fn spectral_norm(&self) -> f64 {
        if self.nnz() == 0 {
            return 0.0;
        }
        let gram = if self.rows <= self.cols {
            self.mul(&self.adjoint())
        } else {
            self.adjoint().mul(self)
        };
        let blocks = components(&gram);
        let mut best: f64 = 0.0;
        for block in blocks {
            let lambda = if block.len() == 1 {
                let i = block[0];
                gram.row_entries(i)
                    .find(|&(j, _)| j == i)
                    .map_or(0.0, |(_, z)| z.re)
            } else {
                let pos: BTreeMap<usize, usize> =
                    block.iter().enumerate().map(|(k, &i)| (i, k)).collect();
                let m = block.len();
                let mut dense = DMatrix::<C64>::zeros(m, m);
                for (k, &i) in block.iter().enumerate() {
                    for (j, z) in gram.row_entries(i) {
                        dense[(k, pos[&j])] = z;
                    }
                }
                let herm = (&dense + dense.adjoint()) * C64::new(0.5, 0.0);
                herm.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max)
            };
            best = best.max(lambda);
        }
        best.max(0.0).sqrt()
    }
}

/// Connected components of the symmetric sparsity pattern, each sorted.
fn components(gram: &SparseMatrix) -> Vec<Vec<usize>> {
    let n = gram.rows;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut active = vec![false; n];
    for (i, j, _) in gram.triplets() {
        active[i] = true;
        active[j] = true;
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        if active[i] {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
    }
    groups.into_values().collect()
}
