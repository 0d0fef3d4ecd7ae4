//! Progress projectors on `T ⊗ Q`.
//!
//! Every projector used here is block diagonal in the query basis:
//! `Π = Σ_q T_q ⊗ |q⟩⟨q|` with `T_q` acting on the truth register. The
//! record factor `Λ^{AB}` is implicit; it is attached when a record slot
//! is materialized (see [`super::claims`]).

use nalgebra::DMatrix;

use super::space::{truth, ExtendedSpace, ScenarioKind};
use crate::opalgebra::{re, CMatrix, SparseMatrix, C64, ZERO};

#[derive(Clone, Debug)]
pub struct QBlockProjector {
    pub n: usize,
    /// `T_q` for `q ∈ [2n]`, each `n × n`.
    pub blocks: Vec<CMatrix>,
}

fn outer_real(u: &[f64], v: &[f64]) -> CMatrix {
    CMatrix::from_fn(u.len(), v.len(), |i, j| re(u[i] * v[j]))
}

fn proj(v: &[f64]) -> CMatrix {
    outer_real(v, v)
}

impl QBlockProjector {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            blocks: vec![CMatrix::zeros(n, n); 2 * n],
        }
    }

    pub fn sum(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect(),
        }
    }

    /// Explicit sparse form on `T ⊗ Q` (position `t·2n + q`).
    pub fn to_sparse(&self) -> SparseMatrix {
        let dq = 2 * self.n;
        let mut trip = Vec::new();
        for (q, b) in self.blocks.iter().enumerate() {
            for t in 0..self.n {
                for tp in 0..self.n {
                    let z = b[(t, tp)];
                    if z.norm() > 1e-15 {
                        trip.push((t * dq + q, tp * dq + q, z));
                    }
                }
            }
        }
        SparseMatrix::from_triplets(self.n * dq, self.n * dq, trip)
    }

    /// Orthonormal basis of the range, as sparse columns on `T ⊗ Q`.
    pub fn range_basis(&self) -> Vec<Vec<(usize, C64)>> {
        let dq = 2 * self.n;
        let mut cols = Vec::new();
        for (q, b) in self.blocks.iter().enumerate() {
            if b.max_abs() < 1e-14 {
                continue;
            }
            let herm = (b + &b.adjoint()).scale_re(0.5);
            let eig = DMatrix::from_row_slice(self.n, self.n, herm.as_slice()).symmetric_eigen();
            for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
                if lambda > 0.5 {
                    let v = eig.eigenvectors.column(k);
                    cols.push(
                        (0..self.n)
                            .filter(|&t| v[t].norm() > 1e-15)
                            .map(|t| (t * dq + q, v[t]))
                            .collect(),
                    );
                }
            }
        }
        cols
    }

    pub fn rank(&self) -> usize {
        self.range_basis().len()
    }

    /// `tr((Π ⊗ I_W) ρ)` for `ρ` on `T ⊗ Q ⊗ W` with workspace dimension `w`.
    pub fn expectation(&self, rho: &CMatrix, w: usize) -> f64 {
        let dq = 2 * self.n;
        let mut acc = ZERO;
        for (q, b) in self.blocks.iter().enumerate() {
            for t in 0..self.n {
                for tp in 0..self.n {
                    let z = b[(t, tp)];
                    if z == ZERO {
                        continue;
                    }
                    let (row, col) = ((tp * dq + q) * w, (t * dq + q) * w);
                    for k in 0..w {
                        acc += z * rho[(row + k, col + k)];
                    }
                }
            }
        }
        acc.re
    }
}

#[derive(Clone, Debug)]
pub struct ProgressProjectors {
    pub a: QBlockProjector,
    pub b_act: QBlockProjector,
    pub b_pas: QBlockProjector,
}

/// `Π^A`, `Π^{B,act}`, `Π^{B,pas}` for the scenario of `space`.
pub fn progress_projectors(space: &ExtendedSpace) -> ProgressProjectors {
    let n = space.n;
    let id = CMatrix::identity(n);
    let u = truth::uniform(n);
    let pu = proj(&u);
    let mut a = QBlockProjector::zeros(n);
    let mut act = QBlockProjector::zeros(n);
    let mut pas = QBlockProjector::zeros(n);
    for x in 0..n {
        let fx = truth::basis(n, x);
        for y in 0..2 {
            let q = 2 * x + y;
            a.blocks[q] = pu.clone();
            match space.scenario {
                ScenarioKind::Target => {
                    act.blocks[q] = proj(&truth::approx_basis(n, x));
                    pas.blocks[q] = &(&id - &proj(&truth::uniform_except(n, &[x]))) - &proj(&fx);
                }
                ScenarioKind::Index(j) if y == 1 => {
                    let xj = x ^ (1 << (j - 1));
                    let three = &(&proj(&truth::uniform_except(n, &[x, xj])) + &proj(&fx))
                        + &proj(&truth::basis(n, xj));
                    act.blocks[q] = &three - &pu;
                    pas.blocks[q] = &id - &three;
                }
                ScenarioKind::Negligent if y == 1 => {
                    act.blocks[q] = proj(&truth::approx_basis(n, x));
                    pas.blocks[q] = &(&id - &proj(&truth::uniform_except(n, &[x]))) - &proj(&fx);
                }
                _ => {
                    pas.blocks[q] = &id - &pu;
                }
            }
        }
    }
    ProgressProjectors { a, b_act: act, b_pas: pas }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalgebra::{embed_on_qubit, PauliLabel};

    fn spaces(n: usize) -> Vec<ExtendedSpace> {
        let mut v = vec![ExtendedSpace::main(n, 0).unwrap(), ExtendedSpace::negligent(n).unwrap()];
        for j in 1..=n.trailing_zeros() as usize {
            v.push(ExtendedSpace::main(n, j).unwrap());
        }
        v
    }

    #[test]
    fn resolution_of_identity() {
        for n in [2usize, 4, 8] {
            for s in spaces(n) {
                let pp = progress_projectors(&s);
                let (a, b, c) = (pp.a.to_sparse().to_dense(), pp.b_act.to_sparse().to_dense(), pp.b_pas.to_sparse().to_dense());
                let d = s.tq_dim();
                let total = &(&a + &b) + &c;
                assert!(total.max_abs_diff(&CMatrix::identity(d)) < 1e-12, "{}", s.label());
                for (p, q) in [(&a, &b), (&a, &c), (&b, &c)] {
                    assert!((p * q).max_abs() < 1e-12);
                }
                for p in [&a, &b, &c] {
                    assert!((p * p).max_abs_diff(p) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn active_ranks() {
        let n = 4;
        assert_eq!(progress_projectors(&ExtendedSpace::negligent(n).unwrap()).b_act.rank(), n);
        assert_eq!(progress_projectors(&ExtendedSpace::main(n, 0).unwrap()).b_act.rank(), 2 * n);
        assert_eq!(progress_projectors(&ExtendedSpace::main(n, 1).unwrap()).b_act.rank(), 2 * n);
        let dense = progress_projectors(&ExtendedSpace::negligent(n).unwrap()).b_act.to_sparse().to_dense();
        assert_eq!(crate::opalgebra::hermitian_rank(&dense, 1e-9).unwrap(), n);
    }

    #[test]
    fn projectors_commute_with_noisy_qubit_paulis() {
        let n = 8;
        for s in spaces(n) {
            let Some(q) = s.qubit() else { continue };
            let pp = progress_projectors(&s);
            for proj in [&pp.b_act, &pp.b_pas] {
                let m = proj.to_sparse().to_dense();
                for p in PauliLabel::ALL {
                    let sigma = CMatrix::identity(n).kron(&embed_on_qubit(p, q));
                    assert!(m.commutator(&sigma).max_abs() < 1e-12, "{} {p}", s.label());
                }
            }
        }
    }

    #[test]
    fn expectation_matches_trace() {
        let s = ExtendedSpace::main(4, 1).unwrap().with_workspace(2).unwrap();
        let d = s.dim();
        let rho = CMatrix::from_fn(d, d, |i, j| C64::new(((i * 7 + j * 3) % 5) as f64, (i as f64 - j as f64) * 0.1));
        let pp = progress_projectors(&s);
        let big = pp.b_act.to_sparse().to_dense().kron(&CMatrix::identity(2));
        let direct = (&big * &rho).trace().re;
        assert!((pp.b_act.expectation(&rho, 2) - direct).abs() < 1e-10);
    }
}
