//! Dense complex linear algebra for query-register operators.
//!
//! # Basis conventions
//!
//! The query register `Q = Q_i ⊗ Q_o` of an `n`-element search instance has
//! dimension `2n`. The basis state `|x, y⟩` (index `x ∈ [n]`, target bit `y`)
//! sits at position `2x + y`. Tensor slots are ordered with the index qubits
//! first, most significant bit first, and the target qubit last. Since
//! `x = Σ_j 2^{j-1} x_{b,j}`, query qubit `j` (with `j = 0` the target) is
//! exactly bit `j` of the position `2x + y`.
//!
//! Larger registers compose left to right: `T ⊗ Q ⊗ W ⊗ R` places the truth
//! register in the most significant position.

mod sparse;

pub use sparse::SparseMatrix;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Dense row-major complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(16) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(16) {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!(
                "entry ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let d = diag.len();
        let mut m = Self::zeros(d, d);
        for (i, &z) in diag.iter().enumerate() {
            m.data[i * d + i] = z;
        }
        m
    }

    /// `|i⟩⟨i|` on a `dim`-dimensional space.
    pub fn basis_projector(dim: usize, i: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        m.data[i * dim + i] = ONE;
        m
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(re(s))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in max_abs_diff");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        let n = other.cols;
        for i in 0..self.rows {
            let orow = &mut out.data[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = other.shape();
        let mut out = Self::zeros(self.rows * r2, self.cols * c2);
        let oc = out.cols;
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                let a = self[(i1, j1)];
                if a == ZERO {
                    continue;
                }
                for i2 in 0..r2 {
                    let base = (i1 * r2 + i2) * oc + j1 * c2;
                    for j2 in 0..c2 {
                        out.data[base + j2] = a * other.data[i2 * c2 + j2];
                    }
                }
            }
        }
        out
    }

    /// Traces out the trailing factor of dimension `d_traced`.
    pub fn partial_trace_last(&self, d_traced: usize) -> Result<Self> {
        if !self.is_square() || self.rows % d_traced != 0 {
            return Err(Error::Dimension(format!(
                "cannot trace a {d_traced}-dimensional factor from {}x{}",
                self.rows, self.cols
            )));
        }
        let keep = self.rows / d_traced;
        Ok(Self::from_fn(keep, keep, |a, b| {
            (0..d_traced)
                .map(|k| self[(a * d_traced + k, b * d_traced + k)])
                .sum()
        }))
    }

    /// Traces out the leading factor of dimension `d_traced`.
    pub fn partial_trace_first(&self, d_traced: usize) -> Result<Self> {
        if !self.is_square() || self.rows % d_traced != 0 {
            return Err(Error::Dimension(format!(
                "cannot trace a {d_traced}-dimensional factor from {}x{}",
                self.rows, self.cols
            )));
        }
        let keep = self.rows / d_traced;
        Ok(Self::from_fn(keep, keep, |a, b| {
            (0..d_traced).map(|k| self[(k * keep + a, k * keep + b)]).sum()
        }))
    }

    /// `‖A*A − I‖_max`, the distance from being a column isometry.
    pub fn isometry_defect(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.cols))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square()
            && self.isometry_defect() <= tol
            && (self * &self.adjoint()).max_abs_diff(&Self::identity(self.rows)) <= tol
    }

    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square(), "hermitian_defect on a non-square matrix");
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermitian_defect() <= tol
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul<&CMatrix> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.try_mul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add<&CMatrix> for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix sum shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub<&CMatrix> for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix difference shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale(-ONE)
    }
}

/// Largest singular value.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.rows == 0 || a.cols == 0 {
        return 0.0;
    }
    a.to_nalgebra()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a non-square {}x{} matrix",
            a.rows, a.cols
        )));
    }
    if a.rows == 0 {
        return Ok(Vec::new());
    }
    // Symmetrize so round-off in the input does not leak into the solver.
    let h = (a + &a.adjoint()).scale_re(0.5);
    let mut ev: Vec<f64> = h.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Numerical rank of a Hermitian matrix.
pub fn hermitian_rank(a: &CMatrix, tol: f64) -> Result<usize> {
    Ok(hermitian_eigenvalues(a)?.iter().filter(|&&l| l.abs() > tol).count())
}

/// Trace distance `½‖ρ − σ‖₁` between Hermitian matrices.
pub fn trace_distance(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let ev = hermitian_eigenvalues(&(rho - sigma))?;
    Ok(0.5 * ev.iter().map(|l| l.abs()).sum::<f64>())
}

/// Pauli operator label, ordered `I < X < Y < Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliLabel {
    I,
    X,
    Y,
    Z,
}

impl PauliLabel {
    pub const ALL: [PauliLabel; 4] = [PauliLabel::I, PauliLabel::X, PauliLabel::Y, PauliLabel::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn matrix(self) -> CMatrix {
        let d = |a: C64, b: C64, c: C64, e: C64| CMatrix {
            rows: 2,
            cols: 2,
            data: vec![a, b, c, e],
        };
        match self {
            PauliLabel::I => d(ONE, ZERO, ZERO, ONE),
            PauliLabel::X => d(ZERO, ONE, ONE, ZERO),
            PauliLabel::Y => d(ZERO, -I, I, ZERO),
            PauliLabel::Z => d(ONE, ZERO, ZERO, -ONE),
        }
    }

    /// Action on a computational basis bit: `σ|b⟩ = phase · |b'⟩`.
    #[inline]
    pub fn act(self, bit: usize) -> (usize, C64) {
        match (self, bit) {
            (PauliLabel::I, b) => (b, ONE),
            (PauliLabel::X, b) => (b ^ 1, ONE),
            (PauliLabel::Y, 0) => (1, I),
            (PauliLabel::Y, _) => (0, -I),
            (PauliLabel::Z, 0) => (0, ONE),
            (PauliLabel::Z, _) => (1, -ONE),
        }
    }

    /// Whether the operator flips the computational basis bit.
    pub fn flips(self) -> bool {
        matches!(self, PauliLabel::X | PauliLabel::Y)
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PauliLabel::I => "I",
            PauliLabel::X => "X",
            PauliLabel::Y => "Y",
            PauliLabel::Z => "Z",
        };
        f.write_str(s)
    }
}

/// A query qubit of an `n`-element instance: `j = 0` is the target qubit,
/// `1 ≤ j ≤ log₂ n` are the index qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QubitIndex {
    n: usize,
    j: usize,
}

impl QubitIndex {
    pub fn new(n: usize, j: usize) -> Result<Self> {
        check_power_of_two(n)?;
        let log_n = n.trailing_zeros() as usize;
        if j > log_n {
            return Err(Error::Index(format!(
                "qubit {j} out of range for n = {n} (valid 0..={log_n})"
            )));
        }
        Ok(Self { n, j })
    }

    pub fn target(n: usize) -> Result<Self> {
        Self::new(n, 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn log_n(&self) -> usize {
        self.n.trailing_zeros() as usize
    }

    pub fn is_target(&self) -> bool {
        self.j == 0
    }

    /// Dimension `2n` of the query register.
    pub fn query_dim(&self) -> usize {
        2 * self.n
    }

    /// Mask of this qubit within a query basis position `2x + y`.
    #[inline]
    pub fn query_mask(&self) -> usize {
        1 << self.j
    }

    /// `x^j`: `x` with its `j`-th bit flipped. Only meaningful for index qubits.
    #[inline]
    pub fn flip_index(&self, x: usize) -> usize {
        debug_assert!(self.j >= 1);
        x ^ (1 << (self.j - 1))
    }

    /// `x_{b,j}`.
    #[inline]
    pub fn index_bit(&self, x: usize) -> usize {
        debug_assert!(self.j >= 1);
        (x >> (self.j - 1)) & 1
    }
}

pub fn check_power_of_two(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Domain(format!("n = {n} is not a power of two ≥ 2")));
    }
    Ok(())
}

/// `σ_P` acting on query qubit `q.j()`, identity on the rest of `Q`.
pub fn embed_on_qubit(p: PauliLabel, q: QubitIndex) -> CMatrix {
    let d = q.query_dim();
    let mut m = CMatrix::zeros(d, d);
    for_each_pauli_entry(p, q, |row, col, z| m[(row, col)] = z);
    m
}

/// Sparse form of [`embed_on_qubit`].
pub fn embed_on_qubit_sparse(p: PauliLabel, q: QubitIndex) -> SparseMatrix {
    let d = q.query_dim();
    let mut trip = Vec::with_capacity(d);
    for_each_pauli_entry(p, q, |row, col, z| trip.push((row, col, z)));
    SparseMatrix::from_triplets(d, d, trip)
}

fn for_each_pauli_entry(p: PauliLabel, q: QubitIndex, mut f: impl FnMut(usize, usize, C64)) {
    let mask = q.query_mask();
    for col in 0..q.query_dim() {
        let bit = usize::from(col & mask != 0);
        let (nb, phase) = p.act(bit);
        let row = (col & !mask) | if nb == 1 { mask } else { 0 };
        f(row, col, phase);
    }
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::identity(1), |acc, f| acc.kron(f))
}

/// Normalized computational basis vector.
pub fn basis_vector(dim: usize, i: usize) -> Vec<C64> {
    let mut v = vec![ZERO; dim];
    v[i] = ONE;
    v
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}
