//! Transition norms of one extended oracle call.
//!
//! The extended call `V: T⊗Q → T⊗Q⊗R₁` stores `|P,β⟩` (main model, slot
//! value `2P + β`) or `|β⟩` (negligent) in a fresh record slot. Output
//! projectors carry the slot factor: `Π^{B,·}₊ = Π^{B,·} ⊗ Λ^{AB}` (β = 0)
//! and `Π^C₊ = I ⊗ Λ^C` (β = 1).
//!
//! Two routes evaluate the four transition norms. The reduced route
//! restricts `V` to an orthonormal basis of the input range, which is
//! small (rank ≤ 2n); the explicit route multiplies the full sparse
//! operators. Identities are always evaluated on the explicit operators.

use nalgebra::DMatrix;

use super::projectors::{progress_projectors, QBlockProjector};
use super::space::{ExtendedSpace, RecordKraus};
use crate::channels::{channels_equal, Completeness, KrausChannel};
use crate::opalgebra::{CMatrix, SparseMatrix, C64, ONE, ZERO};
use crate::oracle_kraus::KrausCoefficients;
use crate::report::{CheckLine, Report};
use crate::{check_rate, Error, Result};

/// Tolerance on the claimed inequalities.
pub const BOUND_TOL: f64 = 1e-12;
/// Tolerance on identities and on the negligent closed forms.
pub const IDENTITY_TOL: f64 = 1e-10;
pub const CLOSED_FORM_TOL: f64 = 1e-9;

/// Largest `n` for which the dense isometry is materialized.
pub const DENSE_ISOMETRY_MAX_N: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Reduced,
    Explicit,
}

/// `V` as a sparse matrix with output position `(t·2n + q)·R + s`.
pub fn extended_oracle_sparse(space: &ExtendedSpace, rate: f64) -> Result<SparseMatrix> {
    let kraus = RecordKraus::new(space, rate)?;
    Ok(sparse_from_kraus(space, &kraus))
}

fn sparse_from_kraus(space: &ExtendedSpace, kraus: &RecordKraus) -> SparseMatrix {
    let (n, dq, rd) = (space.n, space.query_dim(), space.record_dim());
    let mut trip = Vec::with_capacity(n * dq * rd);
    for t in 0..n {
        for (s, m) in kraus.ops[t].iter().enumerate() {
            for q in 0..dq {
                if m.coeff[q] != ZERO {
                    trip.push(((t * dq + m.target[q]) * rd + s, t * dq + q, m.coeff[q]));
                }
            }
        }
    }
    SparseMatrix::from_triplets(n * dq * rd, n * dq, trip)
}

/// Dense `V` (for `n ≤ 16`).
pub fn extended_oracle_isometry(space: &ExtendedSpace, rate: f64) -> Result<CMatrix> {
    check_rate("rate", rate)?;
    if space.n > DENSE_ISOMETRY_MAX_N {
        return Err(Error::Domain(format!(
            "dense extended isometry capped at n = {DENSE_ISOMETRY_MAX_N}"
        )));
    }
    Ok(extended_oracle_sparse(space, rate)?.to_dense())
}

fn slot_projector(space: &ExtendedSpace, beta: usize) -> SparseMatrix {
    let rd = space.record_dim();
    SparseMatrix::from_diag(
        &(0..rd)
            .map(|s| if space.slot_beta(s) == beta { ONE } else { ZERO })
            .collect::<Vec<_>>(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClaimValues {
    pub act_from_a: f64,
    pub act_from_act: f64,
    pub c_from_act: f64,
    pub c_from_a: f64,
}

/// The four transition norms of a single extended call.
pub fn transition_norms(space: &ExtendedSpace, rate: f64, route: Route) -> Result<ClaimValues> {
    check_rate("rate", rate)?;
    let kraus = RecordKraus::new(space, rate)?;
    let v = sparse_from_kraus(space, &kraus);
    let pp = progress_projectors(space);
    Ok(match route {
        Route::Reduced => {
            let from_a = restrict(space, &v, &pp.a);
            let from_act = restrict(space, &v, &pp.b_act);
            ClaimValues {
                act_from_a: active_block_norm(space, &from_a, &pp.b_act),
                act_from_act: active_block_norm(space, &from_act, &pp.b_act),
                c_from_act: jump_block_norm(space, &from_act),
                c_from_a: jump_block_norm(space, &from_a),
            }
        }
        Route::Explicit => {
            let a = pp.a.to_sparse();
            let act = pp.b_act.to_sparse();
            let act_out = act.kron(&slot_projector(space, 0));
            let c_out = SparseMatrix::identity(space.tq_dim()).kron(&slot_projector(space, 1));
            ClaimValues {
                act_from_a: act_out.mul(&v).mul(&a).spectral_norm(),
                act_from_act: act_out.mul(&v).mul(&act).spectral_norm(),
                c_from_act: c_out.mul(&v).mul(&act).spectral_norm(),
                c_from_a: c_out.mul(&v).mul(&a).spectral_norm(),
            }
        }
    })
}

/// `V·B_in` as a dense matrix, `B_in` an orthonormal basis of the input range.
fn restrict(space: &ExtendedSpace, v: &SparseMatrix, input: &QBlockProjector) -> DMatrix<C64> {
    let basis = input.range_basis();
    let rows = space.tq_dim() * space.record_dim();
    let vt = v.adjoint();
    let mut m = DMatrix::<C64>::zeros(rows, basis.len());
    // V column `c` is row `c` of V*.
    for (k, col) in basis.iter().enumerate() {
        for &(c, z) in col {
            for (i, w) in vt.row_entries(c) {
                m[(i, k)] += w.conj() * z;
            }
        }
    }
    m
}

fn active_block_norm(space: &ExtendedSpace, m: &DMatrix<C64>, output: &QBlockProjector) -> f64 {
    let rd = space.record_dim();
    let slots: Vec<usize> = (0..rd).filter(|&s| space.slot_beta(s) == 0).collect();
    let basis = output.range_basis();
    let mut n_mat = DMatrix::<C64>::zeros(basis.len() * slots.len(), m.ncols());
    for (b, col) in basis.iter().enumerate() {
        for (si, &s) in slots.iter().enumerate() {
            let row = b * slots.len() + si;
            for &(i, z) in col {
                for c in 0..m.ncols() {
                    n_mat[(row, c)] += z.conj() * m[(i * rd + s, c)];
                }
            }
        }
    }
    largest_singular_value(&n_mat)
}

fn jump_block_norm(space: &ExtendedSpace, m: &DMatrix<C64>) -> f64 {
    let rd = space.record_dim();
    let mut masked = m.clone();
    for i in 0..m.nrows() {
        if space.slot_beta(i % rd) == 0 {
            masked.row_mut(i).fill(ZERO);
        }
    }
    let gram = masked.adjoint() * &masked;
    let herm = (&gram + gram.adjoint()) * C64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max).max(0.0).sqrt()
}

fn largest_singular_value(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Deviation of an operator that should vanish: the Frobenius norm when it is
/// already below `tol` (an upper bound on the spectral norm), otherwise the
/// exact spectral norm.
fn vanishing_norm(m: &SparseMatrix, tol: f64) -> f64 {
    let f = m.frobenius_norm();
    if f <= tol {
        f
    } else {
        m.spectral_norm()
    }
}

/// `‖V Π^{B,pas} − (Π^{B,pas} ⊗ Λ^{AB}) V‖`.
pub fn passive_invariance_defect(space: &ExtendedSpace, rate: f64) -> Result<f64> {
    let v = extended_oracle_sparse(space, rate)?;
    let pas = progress_projectors(space).b_pas.to_sparse();
    let lifted = pas.kron(&slot_projector(space, 0));
    Ok(vanishing_norm(&v.mul(&pas).sub(&lifted.mul(&v)), IDENTITY_TOL))
}

/// Second call on `T⊗Q⊗R₁ → T⊗Q⊗R₁⊗R₂`: returns the defect of
/// `Π^C₂ V₂ Π^C₁ = V₂ Π^C₁` and the overlap norm
/// `‖(Π^C₂ V₂ Λ^{AB}₁)* (Π^C₂ V₂ Π^C₁)‖`.
pub fn jump_record_persistence(space: &ExtendedSpace, rate: f64) -> Result<(f64, f64)> {
    let v = extended_oracle_sparse(space, rate)?;
    let rd = space.record_dim();
    let tq = space.tq_dim();
    let mut trip = Vec::with_capacity(v.nnz() * rd);
    for (i, c, z) in v.triplets() {
        let (tqp, s2) = (i / rd, i % rd);
        for s1 in 0..rd {
            trip.push(((tqp * rd + s1) * rd + s2, c * rd + s1, z));
        }
    }
    let v2 = SparseMatrix::from_triplets(tq * rd * rd, tq * rd, trip);
    let beta = |s: usize| space.slot_beta(s);
    let diag = |dim: usize, f: &dyn Fn(usize) -> bool| {
        SparseMatrix::from_diag(&(0..dim).map(|i| if f(i) { ONE } else { ZERO }).collect::<Vec<_>>())
    };
    let c1 = diag(tq * rd, &|i| beta(i % rd) == 1);
    let ab1 = diag(tq * rd, &|i| beta(i % rd) == 0);
    let c2 = diag(tq * rd * rd, &|i| beta(i % rd) == 1 || beta((i / rd) % rd) == 1);
    let fixed = v2.mul(&c1);
    let projected = c2.mul(&fixed);
    let identity_defect = vanishing_norm(&fixed.sub(&projected), IDENTITY_TOL);
    let other = c2.mul(&v2).mul(&ab1);
    let overlap = vanishing_norm(&other.adjoint().mul(&projected), IDENTITY_TOL);
    Ok((identity_defect, overlap))
}

/// `V*V = I`, and discarding `R₁` reproduces the noisy call for every `x`.
pub fn isometry_checks(space: &ExtendedSpace, rate: f64) -> Result<Report> {
    let params = claim_params(space, rate);
    let kraus = RecordKraus::new(space, rate)?;
    let v = sparse_from_kraus(space, &kraus);
    let defect = v.adjoint().mul(&v).sub(&SparseMatrix::identity(space.tq_dim()));
    let mut rep = Report::new();
    rep.push(CheckLine::within("ext-isometry", params.clone(), vanishing_norm(&defect, IDENTITY_TOL), IDENTITY_TOL));
    let mut worst: f64 = 0.0;
    for x in 0..space.n {
        let ops: Vec<CMatrix> = kraus.ops[x].iter().map(|m| m.to_dense()).collect();
        let from_record = KrausChannel::unchecked(ops, (0..space.record_dim()).map(|s| s.to_string()).collect(), Completeness::ExactCptp);
        let direct = super::space::noisy_call_channel(space, x, rate)?;
        worst = worst.max(channels_equal(&from_record, &direct, IDENTITY_TOL)?.1);
    }
    rep.push(CheckLine::within("ext-purification", params, worst, IDENTITY_TOL));
    Ok(rep)
}

fn claim_params(space: &ExtendedSpace, rate: f64) -> String {
    let name = if space.is_negligent() { "p" } else { "r" };
    format!("n={},{},{}={}", space.n, space.label(), name, rate)
}

/// Closed forms of the negligent transition norms.
pub fn negligent_closed_forms(n: usize, p: f64) -> ClaimValues {
    let nf = n as f64;
    ClaimValues {
        act_from_a: 2.0 * (1.0 - p) * (nf - 1.0).sqrt() / nf,
        act_from_act: (1.0 - 2.0 * (1.0 - p) * (1.0 - 1.0 / nf)).abs(),
        c_from_act: 2.0 * (p * (1.0 - p) * (1.0 - 1.0 / nf)).sqrt(),
        c_from_a: 2.0 * (p * (1.0 - p) / nf).sqrt(),
    }
}

/// Every transition-norm claim at one rate, via the reduced route.
pub fn claim_norms(space: &ExtendedSpace, rate: f64) -> Result<Report> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::Domain(format!("claims need a rate in (0, 1), got {rate}")));
    }
    let params = claim_params(space, rate);
    let vals = transition_norms(space, rate, Route::Reduced)?;
    let mut rep = Report::new();
    let pas = passive_invariance_defect(space, rate)?;
    rep.push(CheckLine::within("claim-passive-invariant", params.clone(), pas, IDENTITY_TOL));
    let (fixed, overlap) = jump_record_persistence(space, rate)?;
    rep.push(CheckLine::within("claim-jump-fixed", params.clone(), fixed, IDENTITY_TOL));
    rep.push(CheckLine::within("claim-jump-orthogonal", params.clone(), overlap, IDENTITY_TOL));
    let n = space.n as f64;
    if space.is_negligent() {
        let exact = negligent_closed_forms(space.n, rate);
        for (id, got, want) in [
            ("negl-act-from-A", vals.act_from_a, exact.act_from_a),
            ("negl-act-from-act", vals.act_from_act, exact.act_from_act),
            ("negl-C-from-act", vals.c_from_act, exact.c_from_act),
            ("negl-C-from-A", vals.c_from_a, exact.c_from_a),
        ] {
            rep.push(CheckLine::within(id, params.clone(), (got - want).abs(), CLOSED_FORM_TOL));
        }
    } else {
        let r = rate;
        rep.push(CheckLine::bound("claim-act-from-A", params.clone(), vals.act_from_a, 2.0 / n.sqrt(), BOUND_TOL));
        if space.n >= 12 {
            rep.push(CheckLine::bound("claim-act-from-act", params.clone(), vals.act_from_act, 1.0 - r / 9.0, BOUND_TOL));
        } else {
            rep.push(CheckLine::skip("claim-act-from-act", params.clone(), "needs n >= 12"));
        }
        rep.push(CheckLine::bound("claim-C-from-act", params.clone(), vals.c_from_act, (2.0 * r).sqrt(), BOUND_TOL));
        rep.push(CheckLine::bound("claim-C-from-A", params, vals.c_from_a, 2.0 * (r / n).sqrt(), BOUND_TOL));
    }
    Ok(rep)
}

/// `Σ_{P∈{I,Z}} max{a_P², b_P²} + (4/n²) Σ_{P∈{X,Y}} a_P²` against `(1 − r/9)²`.
pub fn corollary_bound_check(n: usize, r: f64) -> Result<Report> {
    if n < 12 {
        return Err(Error::Domain(format!("the corollary bound needs n >= 12, got {n}")));
    }
    let (lhs, rhs) = corollary_sides(n, r)?;
    let mut rep = Report::new();
    rep.push(
        CheckLine::bound("corollary", format!("n={n},r={r}"), lhs, rhs, BOUND_TOL)
            .with_note(format!("slack {:.3e}", rhs - lhs)),
    );
    Ok(rep)
}

/// `(lhs, rhs)` of the corollary inequality.
pub fn corollary_sides(n: usize, r: f64) -> Result<(f64, f64)> {
    use crate::opalgebra::PauliLabel::{I, X, Y, Z};
    let co = KrausCoefficients::new(r)?;
    let nf = n as f64;
    let lhs = [I, Z].iter().map(|&p| co.a(p).powi(2).max(co.b(p).powi(2))).sum::<f64>()
        + 4.0 / (nf * nf) * [X, Y].iter().map(|&p| co.a(p).powi(2)).sum::<f64>();
    Ok((lhs, (1.0 - r / 9.0).powi(2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_isometry_is_isometric() {
        let s = ExtendedSpace::main(4, 0).unwrap();
        let v = extended_oracle_isometry(&s, 0.5).unwrap();
        assert!(v.isometry_defect() < 1e-12);
        let v0 = extended_oracle_isometry(&s, 0.0).unwrap();
        // r = 0: only the |I,0⟩ slot is populated.
        for i in 0..v0.rows() {
            if i % 8 != 0 {
                assert!(v0.row(i).iter().all(|z| *z == ZERO));
            }
        }
        assert!(isometry_checks(&s, 0.5).unwrap().all_passed());
        assert!(isometry_checks(&ExtendedSpace::negligent(4).unwrap(), 0.3).unwrap().all_passed());
    }

    #[test]
    fn negligent_n4_half() {
        let s = ExtendedSpace::negligent(4).unwrap();
        let v = transition_norms(&s, 0.5, Route::Reduced).unwrap();
        assert!((v.act_from_a - 3f64.sqrt() / 4.0).abs() < 1e-10);
        let e = transition_norms(&s, 0.5, Route::Explicit).unwrap();
        assert!((e.act_from_a - 3f64.sqrt() / 4.0).abs() < 1e-10);
    }

    #[test]
    fn routes_agree() {
        for s in [
            ExtendedSpace::main(4, 0).unwrap(),
            ExtendedSpace::main(4, 2).unwrap(),
            ExtendedSpace::main(8, 1).unwrap(),
            ExtendedSpace::negligent(8).unwrap(),
        ] {
            for r in [0.1, 0.6] {
                let a = transition_norms(&s, r, Route::Reduced).unwrap();
                let b = transition_norms(&s, r, Route::Explicit).unwrap();
                for (x, y) in [
                    (a.act_from_a, b.act_from_a),
                    (a.act_from_act, b.act_from_act),
                    (a.c_from_act, b.c_from_act),
                    (a.c_from_a, b.c_from_a),
                ] {
                    assert!((x - y).abs() < 1e-10, "{} r={r}: {x} vs {y}", s.label());
                }
            }
        }
    }

    #[test]
    fn main_claims_hold_at_sixteen() {
        for j in 0..=4 {
            let s = ExtendedSpace::main(16, j).unwrap();
            let rep = claim_norms(&s, 0.5).unwrap();
            assert!(rep.all_passed(), "{rep}");
        }
        let v = transition_norms(&ExtendedSpace::main(16, 0).unwrap(), 0.5, Route::Reduced).unwrap();
        assert!(v.c_from_a <= 2.0 * (0.5f64 / 16.0).sqrt() + 1e-12);
    }

    #[test]
    fn negligent_claims_match_closed_forms() {
        for n in [4, 8] {
            for p in [0.2, 0.5, 0.9] {
                let rep = claim_norms(&ExtendedSpace::negligent(n).unwrap(), p).unwrap();
                assert!(rep.all_passed(), "{rep}");
            }
        }
    }

    #[test]
    fn corollary() {
        assert!(corollary_bound_check(8, 0.5).is_err());
        assert!(corollary_bound_check(12, 1.0).unwrap().all_passed());
        let (lhs, rhs) = corollary_sides(1024, 0.01).unwrap();
        assert!(rhs - lhs >= 0.01 / 9.0);
    }
}
