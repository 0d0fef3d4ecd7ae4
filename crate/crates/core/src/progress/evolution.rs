//! No-jump evolution of the extended computation and the progress measure.
//!
//! Only the `β = 0` branches of each oracle call are kept. Different noise
//! histories occupy orthogonal record states, so every functional restricted
//! to `Λ^{AB}` is a trace against `Σ_h |ψ_h⟩⟨ψ_h|`, which is what `rho` holds.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::projectors::{progress_projectors, ProgressProjectors};
use super::space::{ExtendedSpace, RecordKraus};
use crate::opalgebra::{re, CMatrix, C64, ONE, ZERO};
use crate::{check_rate, Error, Result};

/// A unitary on `Q ⊗ W`.
#[derive(Clone, Debug)]
pub struct AlgorithmStep {
    unitary: CMatrix,
}

impl AlgorithmStep {
    pub fn new(unitary: CMatrix) -> Result<Self> {
        if !unitary.is_unitary(1e-10) {
            return Err(Error::Domain("algorithm step is not unitary".into()));
        }
        Ok(Self { unitary })
    }

    pub fn identity(space: &ExtendedSpace) -> Self {
        Self {
            unitary: CMatrix::identity(space.qw_dim()),
        }
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }
}

#[derive(Clone, Debug)]
pub struct NoJumpState {
    pub rho: CMatrix,
    pub t: usize,
    pub trace_history: Vec<f64>,
}

impl NoJumpState {
    /// `|u⟩⟨u| ⊗ |ψ⁰⟩⟨ψ⁰|` with `ψ⁰` on `Q ⊗ W`.
    pub fn initial(space: &ExtendedSpace, psi0: &[C64]) -> Result<Self> {
        if psi0.len() != space.qw_dim() {
            return Err(Error::Dimension(format!(
                "initial state has length {}, expected {}",
                psi0.len(),
                space.qw_dim()
            )));
        }
        let norm = crate::opalgebra::vec_norm(psi0);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("initial state has norm {norm}")));
        }
        let u = re(1.0 / (space.n as f64).sqrt());
        let phi: Vec<C64> = (0..space.n).flat_map(|_| psi0.iter().map(move |&a| u * a)).collect();
        Ok(Self {
            rho: CMatrix::outer(&phi, &phi),
            t: 0,
            trace_history: vec![1.0],
        })
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }
}

/// One extended noisy call followed by `step`, keeping the no-jump branches.
pub fn evolve_no_jump(
    state: &NoJumpState,
    step: &AlgorithmStep,
    space: &ExtendedSpace,
    kraus: &RecordKraus,
) -> Result<NoJumpState> {
    let d = space.dim();
    if state.rho.shape() != (d, d) || step.unitary.shape() != (space.qw_dim(), space.qw_dim()) {
        return Err(Error::Dimension(format!(
            "state {:?} / step {:?} do not fit {}",
            state.rho.shape(),
            step.unitary.shape(),
            space.label()
        )));
    }
    let called = apply_no_jump_call(&state.rho, space, kraus);
    let rho = conjugate_blockwise(&called, &step.unitary, space.n);
    let mut trace_history = state.trace_history.clone();
    trace_history.push(rho.trace().re);
    Ok(NoJumpState {
        rho,
        t: state.t + 1,
        trace_history,
    })
}

/// `Σ_{s: β=0} 𝒦_s ρ 𝒦_s*` with each `𝒦_s` block diagonal in `T` and monomial on `Q`.
fn apply_no_jump_call(rho: &CMatrix, space: &ExtendedSpace, kraus: &RecordKraus) -> CMatrix {
    let (dq, w) = (space.query_dim(), space.w_dim);
    let d = space.dim();
    // Map of a basis column under 𝒦_s: position and coefficient.
    let image = |s: usize, col: usize| -> (usize, C64) {
        let t = col / (dq * w);
        let q = (col / w) % dq;
        let k = col % w;
        let m = &kraus.ops[t][s];
        ((t * dq + m.target[q]) * w + k, m.coeff[q])
    };
    let mut out = vec![ZERO; d * d];
    for s in kraus.no_jump_slots() {
        let map: Vec<(usize, C64)> = (0..d).map(|c| image(s, c)).collect();
        for (i, &(ti, ci)) in map.iter().enumerate() {
            if ci == ZERO {
                continue;
            }
            let src = rho.row(i);
            let dst = &mut out[ti * d..(ti + 1) * d];
            for (&z, &(tj, cj)) in src.iter().zip(&map) {
                if z != ZERO && cj != ZERO {
                    dst[tj] += ci * z * cj.conj();
                }
            }
        }
    }
    CMatrix::from_vec(d, d, out).expect("finite")
}

/// `(I_T ⊗ U) ρ (I_T ⊗ U)*` for `U` on the trailing factor of dimension `D`.
pub(crate) fn conjugate_blockwise(rho: &CMatrix, u: &CMatrix, blocks: usize) -> CMatrix {
    let dd = u.rows();
    let d = blocks * dd;
    let un = u.to_nalgebra();
    let ua = un.adjoint();
    let src = rho.to_nalgebra();
    let results: Vec<(usize, usize, DMatrix<C64>)> = (0..blocks * blocks)
        .into_par_iter()
        .map(|b| {
            let (bi, bj) = (b / blocks, b % blocks);
            let blk = src.view((bi * dd, bj * dd), (dd, dd));
            (bi, bj, &un * blk * &ua)
        })
        .collect();
    let mut out = DMatrix::<C64>::zeros(d, d);
    for (bi, bj, m) in results {
        out.view_mut((bi * dd, bj * dd), (dd, dd)).copy_from(&m);
    }
    CMatrix::from_nalgebra(&out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProgressRow {
    pub t: usize,
    pub psi: f64,
    pub w_a: f64,
    pub w_b_act: f64,
    pub w_b_pas: f64,
    pub w_c: f64,
    pub delta_psi: f64,
    pub bound: f64,
}

impl ProgressRow {
    /// `wA + wB_act + wB_pas + wC − 1`.
    pub fn resolution_defect(&self) -> f64 {
        (self.w_a + self.w_b_act + self.w_b_pas + self.w_c - 1.0).abs()
    }
}

/// Progress functionals of `state`; `delta_psi` and `bound` are left at zero.
pub fn progress_measure(state: &NoJumpState, space: &ExtendedSpace, proj: &ProgressProjectors) -> ProgressRow {
    let w = space.w_dim;
    let w_a = proj.a.expectation(&state.rho, w);
    let w_b_act = proj.b_act.expectation(&state.rho, w);
    let w_b_pas = proj.b_pas.expectation(&state.rho, w);
    let w_c = 1.0 - state.trace();
    ProgressRow {
        t: state.t,
        psi: w_c + space.weight * (w_b_act + w_b_pas),
        w_a,
        w_b_act,
        w_b_pas,
        w_c,
        delta_psi: 0.0,
        bound: 0.0,
    }
}

#[derive(Clone, Debug, Default)]
pub struct ProgressTrace {
    pub rows: Vec<ProgressRow>,
    /// `Ψ₀` evaluated through the projectors. Row 0 itself holds the exact
    /// values: before any query the truth register is exactly uniform and no
    /// record slot exists, so the state lies in `Π^A` by construction.
    pub psi0_numeric: f64,
}

impl ProgressTrace {
    pub const CSV_HEADER: &'static str = "t,psi,wA,wB_act,wB_pas,wC,delta_psi,bound";

    pub fn max_delta(&self) -> f64 {
        self.rows.iter().map(|r| r.delta_psi).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn final_psi(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.psi)
    }

    /// Rows whose `ΔΨ` exceeds the per-query bound.
    pub fn bound_violations(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.t > 0 && r.delta_psi > r.bound)
            .map(|r| r.t)
            .collect()
    }

    pub fn max_resolution_defect(&self) -> f64 {
        self.rows.iter().map(ProgressRow::resolution_defect).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t, r.psi, r.w_a, r.w_b_act, r.w_b_pas, r.w_c, r.delta_psi, r.bound
            );
        }
        s
    }
}

/// Runs `steps` from `psi0`, recording the progress measure after every query.
pub fn progress_trace(
    space: &ExtendedSpace,
    rate: f64,
    psi0: &[C64],
    steps: &[AlgorithmStep],
) -> Result<ProgressTrace> {
    check_rate("rate", rate)?;
    let kraus = RecordKraus::new(space, rate)?;
    let proj = progress_projectors(space);
    let bound = space.step_bound(rate);
    let mut state = NoJumpState::initial(space, psi0)?;
    let numeric = progress_measure(&state, space, &proj);
    let mut trace = ProgressTrace {
        rows: vec![ProgressRow {
            t: 0,
            psi: 0.0,
            w_a: 1.0,
            w_b_act: 0.0,
            w_b_pas: 0.0,
            w_c: 0.0,
            delta_psi: 0.0,
            bound: 0.0,
        }],
        psi0_numeric: numeric.psi,
    };
    for step in steps {
        state = evolve_no_jump(&state, step, space, &kraus)?;
        let mut row = progress_measure(&state, space, &proj);
        row.delta_psi = row.psi - trace.rows.last().unwrap().psi;
        row.bound = bound;
        trace.rows.push(row);
    }
    Ok(trace)
}

/// Grover's algorithm on `Q = Q_i ⊗ Q_o` (no workspace): start in `|s⟩|1⟩` and
/// apply the diffusion `(2|s⟩⟨s| − I) ⊗ I` after every query.
pub fn grover_schedule(n: usize, iterations: usize) -> (Vec<C64>, Vec<AlgorithmStep>) {
    let s = re(1.0 / (n as f64).sqrt());
    let psi0: Vec<C64> = (0..2 * n).map(|q| if q % 2 == 1 { s } else { ZERO }).collect();
    let diffusion = CMatrix::from_fn(2 * n, 2 * n, |a, b| {
        if a % 2 != b % 2 {
            return ZERO;
        }
        let v = re(2.0 / n as f64);
        if a == b {
            v - ONE
        } else {
            v
        }
    });
    let step = AlgorithmStep { unitary: diffusion };
    (psi0, vec![step; iterations])
}

/// Which part of `Q ⊗ W` announces the answer.
#[derive(Clone, Debug)]
pub enum Readout {
    /// Measure the index register `Q_i`; success when it equals `x`.
    QueryIndex,
    /// Measure the workspace; success when it equals `x` (requires `w_dim ≥ n`).
    Workspace,
}

/// Exact `q_succ` averaged over the marked element, by full-channel density
/// evolution on `Q ⊗ W` separately for every `x`.
pub fn success_probability(
    space: &ExtendedSpace,
    rate: f64,
    psi0: &[C64],
    steps: &[AlgorithmStep],
    readout: &Readout,
) -> Result<f64> {
    check_rate("rate", rate)?;
    let (dq, w) = (space.query_dim(), space.w_dim);
    if psi0.len() != dq * w {
        return Err(Error::Dimension("initial state does not match Q ⊗ W".into()));
    }
    if matches!(readout, Readout::Workspace) && w < space.n {
        return Err(Error::Dimension("workspace readout needs w_dim ≥ n".into()));
    }
    let per_x: Vec<Result<f64>> = (0..space.n)
        .into_par_iter()
        .map(|x| {
            let call = super::space::noisy_call_channel(space, x, rate)?;
            let id_w = CMatrix::identity(w);
            let ops: Vec<CMatrix> = call.ops().iter().map(|k| k.kron(&id_w)).collect();
            let mut rho = CMatrix::outer(psi0, psi0);
            for step in steps {
                rho = ops
                    .iter()
                    .fold(CMatrix::zeros(dq * w, dq * w), |acc, k| &acc + &(&(k * &rho) * &k.adjoint()));
                rho = &(&step.unitary * &rho) * &step.unitary.adjoint();
            }
            let mut p = 0.0;
            for q in 0..dq {
                for k in 0..w {
                    let hit = match readout {
                        Readout::QueryIndex => q / 2 == x,
                        Readout::Workspace => k == x,
                    };
                    if hit {
                        let i = q * w + k;
                        p += rho[(i, i)].re;
                    }
                }
            }
            Ok(p)
        })
        .collect();
    let mut total = 0.0;
    for p in per_x {
        total += p?;
    }
    Ok(total / space.n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_progress_is_zero() {
        for s in [ExtendedSpace::main(8, 0).unwrap(), ExtendedSpace::main(8, 2).unwrap(), ExtendedSpace::negligent(8).unwrap()] {
            let (psi0, _) = grover_schedule(8, 0);
            let tr = progress_trace(&s, 0.3, &psi0, &[]).unwrap();
            assert_eq!(tr.rows[0].psi, 0.0);
            assert!(tr.psi0_numeric.abs() < 1e-13);
        }
    }

    #[test]
    fn grover_progress_stays_within_step_bound() {
        let (n, r) = (16, 0.25);
        let s = ExtendedSpace::main(n, 0).unwrap();
        let (psi0, steps) = grover_schedule(n, 40);
        let tr = progress_trace(&s, r, &psi0, &steps).unwrap();
        assert!(tr.bound_violations().is_empty());
        assert!((tr.rows[1].bound - 500.0).abs() < 1e-12);
        assert!(tr.max_resolution_defect() < 1e-8);
        let traces: Vec<f64> = tr.rows.iter().map(|r| 1.0 - r.w_c).collect();
        assert!(traces.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn noiseless_trace_is_preserved() {
        let s = ExtendedSpace::main(4, 1).unwrap();
        let (psi0, steps) = grover_schedule(4, 3);
        let tr = progress_trace(&s, 0.0, &psi0, &steps).unwrap();
        assert!(tr.rows.iter().all(|r| r.w_c.abs() < 1e-13));
    }

    #[test]
    fn faultless_grover_at_four_succeeds() {
        let s = ExtendedSpace::main(4, 0).unwrap();
        let (psi0, steps) = grover_schedule(4, 1);
        let q = success_probability(&s, 0.0, &psi0, &steps, &Readout::QueryIndex).unwrap();
        assert!((q - 1.0).abs() < 1e-10);
        let q0 = success_probability(&s, 0.4, &psi0, &[], &Readout::QueryIndex).unwrap();
        assert!((q0 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn success_bounded_by_progress() {
        for (s, r) in [
            (ExtendedSpace::main(8, 0).unwrap(), 0.2),
            (ExtendedSpace::main(8, 3).unwrap(), 0.5),
            (ExtendedSpace::negligent(8).unwrap(), 0.3),
        ] {
            let (psi0, steps) = grover_schedule(8, 4);
            let tr = progress_trace(&s, r, &psi0, &steps).unwrap();
            let q = success_probability(&s, r, &psi0, &steps, &Readout::QueryIndex).unwrap();
            assert!(q <= tr.final_psi() + 2.0 / 8.0 + 1e-8, "{} {q} {}", s.label(), tr.final_psi());
        }
    }

    #[test]
    fn single_call_decay_envelope() {
        let (n, r) = (8, 0.3);
        let s = ExtendedSpace::main(n, 0).unwrap();
        let (psi0, _) = grover_schedule(n, 0);
        let tr = progress_trace(&s, r, &psi0, &[AlgorithmStep::identity(&s)]).unwrap();
        let env = 4.0 * r / n as f64 + 2.0 * r * tr.rows[0].w_b_act;
        assert!(tr.rows[1].w_c <= env + 1e-12);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let s = ExtendedSpace::main(4, 0).unwrap();
        let (psi0, steps) = grover_schedule(4, 2);
        let csv = progress_trace(&s, 0.1, &psi0, &steps).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], ProgressTrace::CSV_HEADER);
        assert_eq!(lines.len(), 4);
    }
}
