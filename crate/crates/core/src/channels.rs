//! Kraus channels, Choi fingerprints and channel equality.

use crate::opalgebra::{embed_on_qubit, check_power_of_two, re, CMatrix, PauliLabel, QubitIndex, C64, ONE};
use crate::{check_rate, Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Completeness {
    ExactCptp,
    SubCptp,
}

/// An ordered Kraus family. Zero operators are kept so that labels stay
/// aligned with the families they come from.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
    labels: Vec<String>,
    completeness: Completeness,
}

impl KrausChannel {
    /// Validates shapes, and completeness for [`Completeness::ExactCptp`].
    pub fn new(ops: Vec<CMatrix>, labels: Vec<String>, completeness: Completeness) -> Result<Self> {
        Self::with_tol(ops, labels, completeness, DEFAULT_TOL)
    }

    pub fn with_tol(
        ops: Vec<CMatrix>,
        labels: Vec<String>,
        completeness: Completeness,
        tol: f64,
    ) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::Dimension("empty Kraus family".into()))?;
        let shape = first.shape();
        if let Some(bad) = ops.iter().find(|k| k.shape() != shape) {
            return Err(Error::Dimension(format!(
                "Kraus operators of shapes {:?} and {:?}",
                shape,
                bad.shape()
            )));
        }
        if labels.len() != ops.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} operators",
                labels.len(),
                ops.len()
            )));
        }
        let ch = Self {
            ops,
            labels,
            completeness,
        };
        match completeness {
            Completeness::ExactCptp => {
                let defect = ch.completeness_defect();
                if defect > tol {
                    return Err(Error::Domain(format!(
                        "Kraus family is not trace preserving (defect {defect:.3e})"
                    )));
                }
            }
            Completeness::SubCptp => {
                let ev = crate::opalgebra::hermitian_eigenvalues(&ch.kraus_sum())?;
                if ev.last().copied().unwrap_or(0.0) > 1.0 + tol {
                    return Err(Error::Domain("Kraus family increases trace".into()));
                }
            }
        }
        Ok(ch)
    }

    /// Skips the completeness validation; shapes must still agree.
    pub fn unchecked(ops: Vec<CMatrix>, labels: Vec<String>, completeness: Completeness) -> Self {
        assert!(!ops.is_empty() && ops.iter().all(|k| k.shape() == ops[0].shape()));
        assert_eq!(ops.len(), labels.len());
        Self {
            ops,
            labels,
            completeness,
        }
    }

    /// Unlabelled family; labels are the operator positions.
    pub fn unlabelled(ops: Vec<CMatrix>, completeness: Completeness) -> Result<Self> {
        let labels = (0..ops.len()).map(|i| i.to_string()).collect();
        Self::new(ops, labels, completeness)
    }

    pub fn identity(dim: usize) -> Self {
        Self::unitary(CMatrix::identity(dim))
    }

    /// The channel `ρ ↦ UρU*`. The caller vouches that `u` is unitary.
    pub fn unitary(u: CMatrix) -> Self {
        Self {
            ops: vec![u],
            labels: vec!["U".into()],
            completeness: Completeness::ExactCptp,
        }
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn completeness(&self) -> Completeness {
        self.completeness
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn d_in(&self) -> usize {
        self.ops[0].cols()
    }

    pub fn d_out(&self) -> usize {
        self.ops[0].rows()
    }

    /// Operator with the given label.
    pub fn get(&self, label: &str) -> Option<&CMatrix> {
        self.labels.iter().position(|l| l == label).map(|i| &self.ops[i])
    }

    /// `Σ K*K`.
    pub fn kraus_sum(&self) -> CMatrix {
        let d = self.d_in();
        self.ops
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, k| &acc + &(&k.adjoint() * k))
    }

    /// `‖Σ K*K − I‖_max`.
    pub fn completeness_defect(&self) -> f64 {
        self.kraus_sum().max_abs_diff(&CMatrix::identity(self.d_in()))
    }

    /// `Σ K ρ K*`.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if !rho.is_square() || rho.rows() != self.d_in() {
            return Err(Error::Dimension(format!(
                "state of shape {:?} for a channel on dimension {}",
                rho.shape(),
                self.d_in()
            )));
        }
        if rho.hermitian_defect() > DEFAULT_TOL * rho.max_abs().max(1.0) {
            return Err(Error::Domain("input state is not Hermitian".into()));
        }
        let d = self.d_out();
        Ok(self.ops.iter().fold(CMatrix::zeros(d, d), |acc, k| {
            &acc + &(&(k * rho) * &k.adjoint())
        }))
    }

    /// Copy with every operator scaled by `s`. Used for sub-channels.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            ops: self.ops.iter().map(|k| k.scale_re(s)).collect(),
            labels: self.labels.clone(),
            completeness: Completeness::SubCptp,
        }
    }

    /// Family formed by `left · K · right` for each operator `K`.
    pub fn sandwich(&self, left: &CMatrix, right: &CMatrix) -> Self {
        Self {
            ops: self.ops.iter().map(|k| &(left * k) * right).collect(),
            labels: self.labels.clone(),
            completeness: Completeness::SubCptp,
        }
    }

    /// Concatenation of two families with the same shape.
    pub fn union(&self, other: &Self, completeness: Completeness) -> Result<Self> {
        let mut ops = self.ops.clone();
        ops.extend(other.ops.iter().cloned());
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        Self::new(ops, labels, completeness)
    }
}

/// `𝒩_{j,r}` with Kraus operators `d_{P,r} σ_P^{(j)}`, labelled by `P`.
pub fn depolarizing_noise(q: QubitIndex, r: f64) -> Result<KrausChannel> {
    check_rate("r", r)?;
    let ops = PauliLabel::ALL
        .iter()
        .map(|&p| embed_on_qubit(p, q).scale_re(depolarizing_weight(p, r)))
        .collect();
    let labels = PauliLabel::ALL.iter().map(|p| p.to_string()).collect();
    KrausChannel::new(ops, labels, Completeness::ExactCptp)
}

/// `d_{P,r}`: `√(4−3r)/2` for `I`, `√r/2` otherwise.
pub fn depolarizing_weight(p: PauliLabel, r: f64) -> f64 {
    match p {
        PauliLabel::I => (4.0 - 3.0 * r).sqrt() / 2.0,
        _ => r.sqrt() / 2.0,
    }
}

/// `O_f = Σ (−1)^{f(x)y} |x,y⟩⟨x,y|` on the `2n`-dimensional query space.
pub fn phase_oracle(n: usize, marked: &[usize]) -> Result<CMatrix> {
    check_power_of_two(n)?;
    if let Some(&bad) = marked.iter().find(|&&x| x >= n) {
        return Err(Error::Domain(format!("marked index {bad} ≥ n = {n}")));
    }
    let mut diag = vec![ONE; 2 * n];
    for &x in marked {
        diag[2 * x + 1] = -ONE;
    }
    Ok(CMatrix::from_diag(&diag))
}

/// `outer ∘ inner`: all pairwise products `A_a B_b`, labelled `a·b`.
pub fn compose(outer: &KrausChannel, inner: &KrausChannel) -> Result<KrausChannel> {
    if inner.d_out() != outer.d_in() {
        return Err(Error::Dimension(format!(
            "cannot compose a channel into dimension {} with one from dimension {}",
            inner.d_out(),
            outer.d_in()
        )));
    }
    let mut ops = Vec::with_capacity(outer.len() * inner.len());
    let mut labels = Vec::with_capacity(ops.capacity());
    for (a, la) in outer.ops.iter().zip(&outer.labels) {
        for (b, lb) in inner.ops.iter().zip(&inner.labels) {
            ops.push(a * b);
            labels.push(format!("{la}{lb}"));
        }
    }
    let completeness = match (outer.completeness, inner.completeness) {
        (Completeness::ExactCptp, Completeness::ExactCptp) => Completeness::ExactCptp,
        _ => Completeness::SubCptp,
    };
    Ok(KrausChannel {
        ops,
        labels,
        completeness,
    })
}

/// Choi–Jamiołkowski matrix with the unnormalized maximally entangled vector.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    pub matrix: CMatrix,
    pub d_in: usize,
    pub d_out: usize,
}

/// `Σᵢ (Kᵢ ⊗ I)|Ω⟩⟨Ω|(Kᵢ ⊗ I)*`, indexed as (output, input).
pub fn choi(ch: &KrausChannel) -> ChoiMatrix {
    let (d_out, d_in) = (ch.d_out(), ch.d_in());
    let dim = d_out * d_in;
    let mut m = CMatrix::zeros(dim, dim);
    for k in &ch.ops {
        // (K ⊗ I)|Ω⟩ is the row-major flattening of K.
        let v = k.as_slice();
        for (a, &va) in v.iter().enumerate() {
            if va == C64::new(0.0, 0.0) {
                continue;
            }
            for (b, &vb) in v.iter().enumerate() {
                m[(a, b)] += va * vb.conj();
            }
        }
    }
    ChoiMatrix {
        matrix: m,
        d_in,
        d_out,
    }
}

/// Entrywise max deviation of the Choi matrices, and whether it is within `tol`.
pub fn channels_equal(a: &KrausChannel, b: &KrausChannel, tol: f64) -> Result<(bool, f64)> {
    if (a.d_in(), a.d_out()) != (b.d_in(), b.d_out()) {
        return Err(Error::Dimension(format!(
            "channels {}→{} and {}→{}",
            a.d_in(),
            a.d_out(),
            b.d_in(),
            b.d_out()
        )));
    }
    let dev = choi(a).matrix.max_abs_diff(&choi(b).matrix);
    Ok((dev <= tol, dev))
}

/// Density matrix of a pure state.
pub fn pure_state(psi: &[C64]) -> CMatrix {
    CMatrix::outer(psi, psi)
}

/// `ρ` with every entry scaled; convenience for mixtures.
pub fn mix(weights_and_states: &[(f64, &CMatrix)]) -> CMatrix {
    let d = weights_and_states[0].1.rows();
    weights_and_states
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, (w, s)| &acc + &s.scale(re(*w)))
}
