//! Registers of the extended computation and the record-slot Kraus data.

use crate::channels::{compose, depolarizing_noise, phase_oracle, KrausChannel};
use crate::opalgebra::{check_power_of_two, CMatrix, QubitIndex, C64, ZERO};
use crate::oracle_kraus::{build_geometry, build_k_family, negligent_kraus};
use crate::{check_rate, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Noisy target qubit.
    Target,
    /// Noisy index qubit `j ≥ 1`.
    Index(usize),
    /// Negligent oracle: `O_f` with probability `1 − p`, identity otherwise.
    Negligent,
}

/// `T ⊗ Q ⊗ W`, with record slots appended by each extended oracle call.
///
/// Basis position of `|t, q, k⟩` is `(t·2n + q)·w + k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendedSpace {
    pub n: usize,
    pub w_dim: usize,
    pub scenario: ScenarioKind,
    /// Weight of the `B` subspace in the progress measure.
    pub weight: f64,
}

pub const MAIN_WEIGHT: f64 = 40.0;
pub const NEGLIGENT_WEIGHT: f64 = 2.0;

impl ExtendedSpace {
    pub fn new(n: usize, scenario: ScenarioKind) -> Result<Self> {
        check_power_of_two(n)?;
        match scenario {
            ScenarioKind::Index(j) => {
                let q = QubitIndex::new(n, j)?;
                if q.is_target() {
                    return Err(Error::Domain("index scenario needs j ≥ 1".into()));
                }
            }
            ScenarioKind::Target | ScenarioKind::Negligent => {}
        }
        let weight = match scenario {
            ScenarioKind::Negligent => NEGLIGENT_WEIGHT,
            _ => MAIN_WEIGHT,
        };
        Ok(Self {
            n,
            w_dim: 1,
            scenario,
            weight,
        })
    }

    /// Main model with noise on query qubit `j` (target for `j = 0`).
    pub fn main(n: usize, j: usize) -> Result<Self> {
        Self::new(n, if j == 0 { ScenarioKind::Target } else { ScenarioKind::Index(j) })
    }

    pub fn negligent(n: usize) -> Result<Self> {
        Self::new(n, ScenarioKind::Negligent)
    }

    pub fn with_workspace(mut self, w_dim: usize) -> Result<Self> {
        if w_dim == 0 {
            return Err(Error::Domain("workspace dimension must be ≥ 1".into()));
        }
        self.w_dim = w_dim;
        Ok(self)
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn is_negligent(&self) -> bool {
        self.scenario == ScenarioKind::Negligent
    }

    /// The noisy qubit, for the main model.
    pub fn qubit(&self) -> Option<QubitIndex> {
        match self.scenario {
            ScenarioKind::Target => QubitIndex::target(self.n).ok(),
            ScenarioKind::Index(j) => QubitIndex::new(self.n, j).ok(),
            ScenarioKind::Negligent => None,
        }
    }

    pub fn j(&self) -> usize {
        match self.scenario {
            ScenarioKind::Index(j) => j,
            _ => 0,
        }
    }

    pub fn query_dim(&self) -> usize {
        2 * self.n
    }

    /// `dim(Q ⊗ W)`.
    pub fn qw_dim(&self) -> usize {
        2 * self.n * self.w_dim
    }

    /// `dim(T ⊗ Q)`.
    pub fn tq_dim(&self) -> usize {
        2 * self.n * self.n
    }

    /// `dim(T ⊗ Q ⊗ W)`.
    pub fn dim(&self) -> usize {
        self.n * self.qw_dim()
    }

    /// Dimension of one record slot: `|P, β⟩ ↦ 2P + β` (8) or `β` (2).
    pub fn record_dim(&self) -> usize {
        if self.is_negligent() {
            2
        } else {
            8
        }
    }

    /// The `β` bit of a record slot value.
    pub fn slot_beta(&self, s: usize) -> usize {
        if self.is_negligent() {
            s
        } else {
            s & 1
        }
    }

    /// Per-query bound on the growth of the progress measure.
    pub fn step_bound(&self, rate: f64) -> f64 {
        let n = self.n as f64;
        if self.is_negligent() {
            28.0 * (1.0 - rate) / (n * rate)
        } else {
            2000.0 / (n * rate)
        }
    }

    /// Name used in reports and CSV files.
    pub fn label(&self) -> String {
        match self.scenario {
            ScenarioKind::Target => "target".into(),
            ScenarioKind::Index(j) => format!("index{j}"),
            ScenarioKind::Negligent => "negligent".into(),
        }
    }
}

/// An operator with at most one nonzero per column: `M|i⟩ = coeff[i]·|target[i]⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub target: Vec<usize>,
    pub coeff: Vec<C64>,
}

impl Monomial {
    pub fn from_dense(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension("monomial operators are square".into()));
        }
        let d = m.cols();
        let mut target = vec![0; d];
        let mut coeff = vec![ZERO; d];
        for j in 0..d {
            let mut seen = false;
            for i in 0..d {
                let z = m[(i, j)];
                if z != ZERO {
                    if seen {
                        return Err(Error::Domain(format!("column {j} has several nonzeros")));
                    }
                    seen = true;
                    target[j] = i;
                    coeff[j] = z;
                }
            }
            if !seen {
                target[j] = j;
            }
        }
        Ok(Self { target, coeff })
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    pub fn to_dense(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for (j, (&i, &z)) in self.target.iter().zip(&self.coeff).enumerate() {
            if z != ZERO {
                m[(i, j)] += z;
            }
        }
        m
    }
}

/// Kraus operators of the noisy call for every truth value, as
/// `ops[x][s]` with `s` the record-slot value.
#[derive(Clone, Debug)]
pub struct RecordKraus {
    pub space: ExtendedSpace,
    pub rate: f64,
    pub ops: Vec<Vec<Monomial>>,
}

impl RecordKraus {
    pub fn new(space: &ExtendedSpace, rate: f64) -> Result<Self> {
        check_rate("rate", rate)?;
        let mut ops = Vec::with_capacity(space.n);
        for x in 0..space.n {
            let fam = record_family(space, x, rate)?;
            let per_slot = fam.iter().map(Monomial::from_dense).collect::<Result<Vec<_>>>()?;
            ops.push(per_slot);
        }
        Ok(Self {
            space: *space,
            rate,
            ops,
        })
    }

    /// Slot values whose `β` is 0.
    pub fn no_jump_slots(&self) -> Vec<usize> {
        (0..self.space.record_dim())
            .filter(|&s| self.space.slot_beta(s) == 0)
            .collect()
    }
}

/// The `K` operators for truth value `x`, indexed by record slot value.
pub fn record_family(space: &ExtendedSpace, x: usize, rate: f64) -> Result<Vec<CMatrix>> {
    match space.scenario {
        ScenarioKind::Negligent => {
            let (_, k) = negligent_kraus(space.n, x, rate)?;
            Ok(k.ops().to_vec())
        }
        _ => {
            let geom = build_geometry(space.n, x, space.j())?;
            let k = build_k_family(&geom, rate)?;
            // build_k_family lists β = 0 first, then β = 1, each in Pauli order.
            let mut out = vec![CMatrix::zeros(1, 1); 8];
            for (i, op) in k.ops().iter().enumerate() {
                let (beta, p) = (i / 4, i % 4);
                out[2 * p + beta] = op.clone();
            }
            Ok(out)
        }
    }
}

/// The noisy oracle call for truth value `x` as a channel on `Q`, built
/// from the noise and oracle channels directly.
pub fn noisy_call_channel(space: &ExtendedSpace, x: usize, rate: f64) -> Result<KrausChannel> {
    match space.qubit() {
        Some(q) => {
            let noise = depolarizing_noise(q, rate)?;
            let o = KrausChannel::unitary(phase_oracle(space.n, &[x])?);
            compose(&noise, &compose(&o, &noise)?)
        }
        None => Ok(negligent_kraus(space.n, x, rate)?.0),
    }
}

/// Truth-register vectors.
pub mod truth {
    /// `|u⟩`.
    pub fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / (n as f64).sqrt(); n]
    }

    /// Uniform superposition over `[n]` minus `excluded` (zero if empty).
    pub fn uniform_except(n: usize, excluded: &[usize]) -> Vec<f64> {
        let m = (0..n).filter(|t| !excluded.contains(t)).count();
        if m == 0 {
            return vec![0.0; n];
        }
        let a = 1.0 / (m as f64).sqrt();
        (0..n).map(|t| if excluded.contains(&t) { 0.0 } else { a }).collect()
    }

    /// `|f_x⟩`.
    pub fn basis(n: usize, x: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[x] = 1.0;
        v
    }

    /// `|f̃_x⟩ = (√n|f_x⟩ − |u⟩)/√(n−1)`.
    pub fn approx_basis(n: usize, x: usize) -> Vec<f64> {
        let nf = n as f64;
        let u = 1.0 / nf.sqrt();
        (0..n)
            .map(|t| ((if t == x { nf.sqrt() } else { 0.0 }) - u) / (nf - 1.0).sqrt())
            .collect()
    }
}
