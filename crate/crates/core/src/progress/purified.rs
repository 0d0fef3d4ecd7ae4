//! The full purified extended computation, with one record slot per query.
//!
//! Exponential in the number of queries; only meant to cross-check the
//! no-jump compression on small instances.

use super::evolution::{AlgorithmStep, ProgressRow};
use super::projectors::progress_projectors;
use super::space::{ExtendedSpace, RecordKraus};
use crate::opalgebra::{re, CMatrix, C64, ZERO};
use crate::{Error, Result};

/// `|φ_τ⟩` on `T⊗Q⊗W⊗R₁⊗…⊗R_τ`, record slots last.
#[derive(Clone, Debug)]
pub struct PurifiedState {
    pub space: ExtendedSpace,
    pub slots: usize,
    pub amplitudes: Vec<C64>,
}

pub const MAX_PURIFIED_DIM: usize = 1 << 22;

impl PurifiedState {
    pub fn initial(space: &ExtendedSpace, psi0: &[C64]) -> Result<Self> {
        if psi0.len() != space.qw_dim() {
            return Err(Error::Dimension("initial state does not match Q ⊗ W".into()));
        }
        let u = re(1.0 / (space.n as f64).sqrt());
        Ok(Self {
            space: *space,
            slots: 0,
            amplitudes: (0..space.n).flat_map(|_| psi0.iter().map(move |&a| u * a)).collect(),
        })
    }

    fn records(&self) -> usize {
        self.space.record_dim().pow(self.slots as u32)
    }

    /// Applies the extended call `V`, appending a slot.
    pub fn call(&self, kraus: &RecordKraus) -> Result<Self> {
        let sp = &self.space;
        let (dq, w, rd) = (sp.query_dim(), sp.w_dim, sp.record_dim());
        let recs = self.records();
        let new_len = self.amplitudes.len() * rd;
        if new_len > MAX_PURIFIED_DIM {
            return Err(Error::Domain(format!("purified state of dimension {new_len} is too large")));
        }
        let mut out = vec![ZERO; new_len];
        for (idx, &a) in self.amplitudes.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let (base, rec) = (idx / recs, idx % recs);
            let (t, q, k) = (base / (dq * w), (base / w) % dq, base % w);
            for (s, m) in kraus.ops[t].iter().enumerate() {
                let c = m.coeff[q];
                if c != ZERO {
                    let nb = (t * dq + m.target[q]) * w + k;
                    out[(nb * recs + rec) * rd + s] += c * a;
                }
            }
        }
        Ok(Self {
            space: *sp,
            slots: self.slots + 1,
            amplitudes: out,
        })
    }

    /// Applies `I_T ⊗ U ⊗ I_R`.
    pub fn step(&self, step: &AlgorithmStep) -> Self {
        let sp = &self.space;
        let dd = sp.qw_dim();
        let recs = self.records();
        let u = step.unitary();
        let mut out = vec![ZERO; self.amplitudes.len()];
        for t in 0..sp.n {
            for rec in 0..recs {
                let at = |b: usize| (t * dd + b) * recs + rec;
                for i in 0..dd {
                    let mut acc = ZERO;
                    for (j, &uij) in u.row(i).iter().enumerate() {
                        acc += uij * self.amplitudes[at(j)];
                    }
                    out[at(i)] = acc;
                }
            }
        }
        Self {
            space: *sp,
            slots: self.slots,
            amplitudes: out,
        }
    }

    fn all_no_jump(&self, mut rec: usize) -> bool {
        let rd = self.space.record_dim();
        for _ in 0..self.slots {
            if self.space.slot_beta(rec % rd) == 1 {
                return false;
            }
            rec /= rd;
        }
        true
    }

    /// Progress functionals: project the record onto `Λ^{AB}`, trace it out and
    /// evaluate the `T⊗Q` projectors; `wC` is the weight outside `Λ^{AB}`.
    pub fn functionals(&self) -> ProgressRow {
        let sp = &self.space;
        let d = sp.dim();
        let recs = self.records();
        let mut rho = CMatrix::zeros(d, d);
        let mut w_c = 0.0;
        for rec in 0..recs {
            let psi: Vec<C64> = (0..d).map(|b| self.amplitudes[b * recs + rec]).collect();
            if self.all_no_jump(rec) {
                rho = &rho + &CMatrix::outer(&psi, &psi);
            } else {
                w_c += psi.iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }
        let pp = progress_projectors(sp);
        let (w_a, w_b_act, w_b_pas) = (
            pp.a.expectation(&rho, sp.w_dim),
            pp.b_act.expectation(&rho, sp.w_dim),
            pp.b_pas.expectation(&rho, sp.w_dim),
        );
        ProgressRow {
            t: self.slots,
            psi: w_c + sp.weight * (w_b_act + w_b_pas),
            w_a,
            w_b_act,
            w_b_pas,
            w_c,
            delta_psi: 0.0,
            bound: 0.0,
        }
    }
}

/// Functionals after every query of the purified run.
pub fn purified_trace(space: &ExtendedSpace, rate: f64, psi0: &[C64], steps: &[AlgorithmStep]) -> Result<Vec<ProgressRow>> {
    let kraus = RecordKraus::new(space, rate)?;
    let mut st = PurifiedState::initial(space, psi0)?;
    let mut rows = vec![st.functionals()];
    for s in steps {
        st = st.call(&kraus)?.step(s);
        rows.push(st.functionals());
    }
    Ok(rows)
}

/// Largest deviation of any functional between the purified and no-jump runs.
pub fn compression_defect(space: &ExtendedSpace, rate: f64, psi0: &[C64], steps: &[AlgorithmStep]) -> Result<f64> {
    let full = purified_trace(space, rate, psi0, steps)?;
    let compressed = super::evolution::progress_trace(space, rate, psi0, steps)?;
    Ok(full
        .iter()
        .zip(&compressed.rows)
        .map(|(a, b)| {
            [a.w_a - b.w_a, a.w_b_act - b.w_b_act, a.w_b_pas - b.w_b_pas, a.w_c - b.w_c]
                .iter()
                .map(|d| d.abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::progress::evolution::grover_schedule;

    #[test]
    fn compression_is_exact_on_small_runs() {
        for (s, r) in [
            (ExtendedSpace::main(4, 0).unwrap(), 0.4),
            (ExtendedSpace::main(4, 1).unwrap(), 0.7),
            (ExtendedSpace::main(4, 2).unwrap(), 0.2),
            (ExtendedSpace::negligent(4).unwrap(), 0.5),
        ] {
            let (psi0, steps) = grover_schedule(4, 3);
            let dev = compression_defect(&s, r, &psi0, &steps).unwrap();
            assert!(dev < 1e-9, "{}: {dev}", s.label());
        }
    }

    #[test]
    fn purified_norm_is_preserved() {
        let s = ExtendedSpace::main(4, 0).unwrap();
        let kraus = RecordKraus::new(&s, 0.6).unwrap();
        let (psi0, steps) = grover_schedule(4, 2);
        let mut st = PurifiedState::initial(&s, &psi0).unwrap();
        for step in &steps {
            st = st.call(&kraus).unwrap().step(step);
        }
        let norm: f64 = st.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
