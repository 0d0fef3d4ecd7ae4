//! Pure states of the query register `Q = Q_i ⊗ Q_o`.
//!
//! [`DenseState`] stores all `2n` amplitudes and supports any marked set.
//! [`ClassState`] is exact for a single marked element `x*`: every operation
//! the strategies use (oracle, Paulis on the target or on one split index
//! qubit `s`, diffusion, measurements) keeps amplitudes constant on the
//! classes `{x*}`, `{x*⊕e_s}`, `{x ≠ x*: x_s = x*_s}`, `{x ≠ x*⊕e_s: x_s ≠ x*_s}`,
//! so eight amplitudes describe the state.

use rand::Rng;

use crate::opalgebra::{check_power_of_two, PauliLabel, C64, ZERO};
use crate::{Error, Result};

pub trait QueryState: Clone + Send {
    fn n(&self) -> usize;
    fn is_marked(&self, x: usize) -> bool;
    /// Uniform superposition over the index register (or over the half with
    /// `qubit = bit` when `fixed` is given), target in `|y⟩`.
    fn prepare(&mut self, fixed: Option<(usize, usize)>, y: usize);
    /// Pauli on query qubit `qubit` (0 is the target).
    fn pauli(&mut self, qubit: usize, p: PauliLabel);
    /// `O_f`.
    fn oracle(&mut self);
    /// `2|s⟩⟨s| − I` on the index register, or on all index qubits except
    /// `except` (acting separately for each value of that qubit).
    fn diffuse(&mut self, except: Option<usize>);
    fn prob_one(&self, qubit: usize) -> f64;
    /// Collapse onto `qubit = bit` and renormalize.
    fn project(&mut self, qubit: usize, bit: usize);
    /// Draw `x` from the index-register marginal.
    fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize;
    fn norm(&self) -> f64;
    /// All `2n` amplitudes, position `2x + y`.
    fn to_dense(&self) -> Vec<C64>;
}

fn bit_of(q: usize, qubit: usize) -> usize {
    (q >> qubit) & 1
}

#[derive(Clone, Debug)]
pub struct DenseState {
    n: usize,
    marked: Vec<bool>,
    amp: Vec<C64>,
}

impl DenseState {
    pub fn new(n: usize, marked: &[usize]) -> Result<Self> {
        check_power_of_two(n)?;
        let mut m = vec![false; n];
        for &x in marked {
            if x >= n {
                return Err(Error::Index(format!("marked element {x} ≥ n = {n}")));
            }
            m[x] = true;
        }
        let mut amp = vec![ZERO; 2 * n];
        amp[1] = C64::new(1.0, 0.0);
        Ok(Self { n, marked: m, amp })
    }

    /// A state with the given `2n` amplitudes (normalized within 1e−10).
    pub fn with_amplitudes(n: usize, marked: &[usize], amp: &[C64]) -> Result<Self> {
        let mut s = Self::new(n, marked)?;
        if amp.len() != 2 * n {
            return Err(Error::Dimension(format!("{} amplitudes for n = {n}", amp.len())));
        }
        s.amp = amp.to_vec();
        if (s.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("state norm {}", s.norm())));
        }
        Ok(s)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }
}

impl QueryState for DenseState {
    fn n(&self) -> usize {
        self.n
    }

    fn is_marked(&self, x: usize) -> bool {
        self.marked[x]
    }

    fn prepare(&mut self, fixed: Option<(usize, usize)>, y: usize) {
        let members = match fixed {
            None => self.n,
            Some(_) => self.n / 2,
        };
        let a = C64::new(1.0 / (members as f64).sqrt(), 0.0);
        for (q, z) in self.amp.iter_mut().enumerate() {
            let keep = q & 1 == y && fixed.is_none_or(|(j, b)| bit_of(q, j) == b);
            *z = if keep { a } else { ZERO };
        }
    }

    fn pauli(&mut self, qubit: usize, p: PauliLabel) {
        if p == PauliLabel::I {
            return;
        }
        let mask = 1 << qubit;
        if p.flips() {
            for q in 0..2 * self.n {
                if q & mask == 0 {
                    let (_, ph0) = p.act(0);
                    let (_, ph1) = p.act(1);
                    let (a0, a1) = (self.amp[q], self.amp[q | mask]);
                    self.amp[q | mask] = ph0 * a0;
                    self.amp[q] = ph1 * a1;
                }
            }
        } else {
            for q in 0..2 * self.n {
                if q & mask != 0 {
                    self.amp[q] = -self.amp[q];
                }
            }
        }
    }

    fn oracle(&mut self) {
        for x in 0..self.n {
            if self.marked[x] {
                self.amp[2 * x + 1] = -self.amp[2 * x + 1];
            }
        }
    }

    fn diffuse(&mut self, except: Option<usize>) {
        let groups: &[usize] = if except.is_some() { &[0, 1] } else { &[0] };
        for y in 0..2 {
            for &g in groups {
                let member = |q: usize| q & 1 == y && except.is_none_or(|j| bit_of(q, j) == g);
                let (mut sum, mut count) = (ZERO, 0usize);
                for q in (0..2 * self.n).filter(|&q| member(q)) {
                    sum += self.amp[q];
                    count += 1;
                }
                let mean = sum / count as f64;
                for q in (0..2 * self.n).filter(|&q| member(q)) {
                    self.amp[q] = 2.0 * mean - self.amp[q];
                }
            }
        }
    }

    fn prob_one(&self, qubit: usize) -> f64 {
        self.amp
            .iter()
            .enumerate()
            .filter(|(q, _)| bit_of(*q, qubit) == 1)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    fn project(&mut self, qubit: usize, bit: usize) {
        let mut w = 0.0;
        for (q, z) in self.amp.iter_mut().enumerate() {
            if bit_of(q, qubit) != bit {
                *z = ZERO;
            } else {
                w += z.norm_sqr();
            }
        }
        let s = 1.0 / w.sqrt();
        for z in &mut self.amp {
            *z *= s;
        }
    }

    fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.norm().powi(2);
        let mut acc = 0.0;
        for (q, z) in self.amp.iter().enumerate() {
            acc += z.norm_sqr();
            if u < acc {
                return q / 2;
            }
        }
        // Rounding left `u` past the end: return the last populated element.
        self.amp.iter().rposition(|z| *z != ZERO).unwrap_or(0) / 2
    }

    fn norm(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn to_dense(&self) -> Vec<C64> {
        self.amp.clone()
    }
}

/// Exact eight-amplitude state for one marked element.
#[derive(Clone, Debug)]
pub struct ClassState {
    n: usize,
    x_star: usize,
    /// Split index qubit `s ≥ 1`; its bit is bit `s` of the query index.
    split: usize,
    amp: [[C64; 2]; 4],
}

impl ClassState {
    /// `split` is the noisy index qubit, or any index qubit when the noise
    /// sits on the target.
    pub fn new(n: usize, x_star: usize, split: usize) -> Result<Self> {
        check_power_of_two(n)?;
        if n < 2 || x_star >= n {
            return Err(Error::Index(format!("marked element {x_star} with n = {n}")));
        }
        if split == 0 || (1usize << (split - 1)) >= n {
            return Err(Error::Index(format!("split qubit {split} outside the index register")));
        }
        let mut amp = [[ZERO; 2]; 4];
        amp[0][1] = C64::new(1.0, 0.0);
        Ok(Self {
            n,
            x_star,
            split,
            amp,
        })
    }

    pub fn split(&self) -> usize {
        self.split
    }

    /// Whether the compressed form supports Paulis on `qubit`.
    pub fn supports_qubit(&self, qubit: usize) -> bool {
        qubit == 0 || qubit == self.split
    }

    fn mask(&self) -> usize {
        1 << (self.split - 1)
    }

    fn sizes(&self) -> [f64; 4] {
        let h = (self.n / 2 - 1) as f64;
        [1.0, 1.0, h, h]
    }

    /// Split-bit value of a class.
    fn class_bit(&self, c: usize) -> usize {
        let b = usize::from(self.x_star & self.mask() != 0);
        if c == 0 || c == 2 {
            b
        } else {
            1 - b
        }
    }

    fn class_of(&self, x: usize) -> usize {
        let m = self.mask();
        if x == self.x_star {
            0
        } else if x == self.x_star ^ m {
            1
        } else if (x & m) == (self.x_star & m) {
            2
        } else {
            3
        }
    }

    fn class_weight(&self, c: usize) -> f64 {
        self.sizes()[c] * (self.amp[c][0].norm_sqr() + self.amp[c][1].norm_sqr())
    }
}

impl QueryState for ClassState {
    fn n(&self) -> usize {
        self.n
    }

    fn is_marked(&self, x: usize) -> bool {
        x == self.x_star
    }

    fn prepare(&mut self, fixed: Option<(usize, usize)>, y: usize) {
        if let Some((q, _)) = fixed {
            assert_eq!(q, self.split, "half-space preparation must fix the split qubit");
        }
        let members = if fixed.is_some() { self.n / 2 } else { self.n };
        let a = C64::new(1.0 / (members as f64).sqrt(), 0.0);
        for c in 0..4 {
            let keep = fixed.is_none_or(|(_, b)| self.class_bit(c) == b);
            self.amp[c] = [ZERO; 2];
            if keep {
                self.amp[c][y] = a;
            }
        }
    }

    fn pauli(&mut self, qubit: usize, p: PauliLabel) {
        assert!(self.supports_qubit(qubit), "qubit {qubit} breaks the class symmetry");
        if p == PauliLabel::I {
            return;
        }
        let old = self.amp;
        let mut new = [[ZERO; 2]; 4];
        if qubit == 0 {
            for c in 0..4 {
                for y in 0..2 {
                    let (y2, ph) = p.act(y);
                    new[c][y2] = ph * old[c][y];
                }
            }
        } else {
            const PARTNER: [usize; 4] = [1, 0, 3, 2];
            for c in 0..4 {
                let (b2, ph) = p.act(self.class_bit(c));
                let c2 = if b2 != self.class_bit(c) { PARTNER[c] } else { c };
                for y in 0..2 {
                    new[c2][y] = ph * old[c][y];
                }
            }
        }
        self.amp = new;
    }

    fn oracle(&mut self) {
        self.amp[0][1] = -self.amp[0][1];
    }

    fn diffuse(&mut self, except: Option<usize>) {
        let sizes = self.sizes();
        let groups: Vec<Vec<usize>> = match except {
            None => vec![vec![0, 1, 2, 3]],
            Some(q) => {
                assert_eq!(q, self.split, "half-space diffusion must spare the split qubit");
                vec![vec![0, 2], vec![1, 3]]
            }
        };
        for y in 0..2 {
            for g in &groups {
                let total: f64 = g.iter().map(|&c| sizes[c]).sum();
                let mean = g.iter().map(|&c| sizes[c] * self.amp[c][y]).sum::<C64>() / total;
                for &c in g {
                    self.amp[c][y] = 2.0 * mean - self.amp[c][y];
                }
            }
        }
    }

    fn prob_one(&self, qubit: usize) -> f64 {
        let sizes = self.sizes();
        let mut p = 0.0;
        for c in 0..4 {
            for y in 0..2 {
                let bit = if qubit == 0 { y } else { self.class_bit(c) };
                if bit == 1 {
                    p += sizes[c] * self.amp[c][y].norm_sqr();
                }
            }
        }
        p
    }

    fn project(&mut self, qubit: usize, bit: usize) {
        for c in 0..4 {
            for y in 0..2 {
                let b = if qubit == 0 { y } else { self.class_bit(c) };
                if b != bit {
                    self.amp[c][y] = ZERO;
                }
            }
        }
        let s = 1.0 / self.norm();
        for row in &mut self.amp {
            for z in row {
                *z *= s;
            }
        }
    }

    fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let w: Vec<f64> = (0..4).map(|c| self.class_weight(c)).collect();
        let total: f64 = w.iter().sum();
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut class = 3;
        for (c, wc) in w.iter().enumerate() {
            acc += wc;
            if u < acc && *wc > 0.0 {
                class = c;
                break;
            }
        }
        if w[class] == 0.0 {
            class = (0..4).rev().find(|&c| w[c] > 0.0).unwrap_or(0);
        }
        let m = self.mask();
        match class {
            0 => self.x_star,
            1 => self.x_star ^ m,
            _ => {
                // Uniform over the half with the class's split bit, minus the
                // one member that belongs to class 0 or 1.
                let half = self.n / 2;
                let low = m - 1;
                let squeeze = |x: usize| (x & low) | ((x >> 1) & !low);
                let expand = |z: usize, b: usize| (z & low) | (b * m) | ((z & !low) << 1);
                let excluded = squeeze(self.x_star);
                let mut z = rng.random_range(0..half - 1);
                if z >= excluded {
                    z += 1;
                }
                expand(z, self.class_bit(class))
            }
        }
    }

    fn norm(&self) -> f64 {
        (0..4).map(|c| self.class_weight(c)).sum::<f64>().sqrt()
    }

    fn to_dense(&self) -> Vec<C64> {
        let mut v = vec![ZERO; 2 * self.n];
        for x in 0..self.n {
            let c = self.class_of(x);
            v[2 * x] = self.amp[c][0];
            v[2 * x + 1] = self.amp[c][1];
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[derive(Clone, Debug)]
    enum Op {
        Pauli(bool, usize),
        Oracle,
        Diffuse(bool),
        Project(bool, usize),
    }

    fn arb_op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (any::<bool>(), 0usize..4).prop_map(|(t, p)| Op::Pauli(t, p)),
            Just(Op::Oracle),
            any::<bool>().prop_map(Op::Diffuse),
            (any::<bool>(), 0usize..2).prop_map(|(t, b)| Op::Project(t, b)),
        ]
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn class_state_tracks_dense(
            log_n in 1usize..5,
            xs in 0usize..16,
            split_sel in 0usize..4,
            half in any::<bool>(),
            ops in proptest::collection::vec(arb_op(), 0..30),
        ) {
            let n = 1usize << log_n;
            let x_star = xs % n;
            let split = 1 + split_sel % log_n;
            let mut d = DenseState::new(n, &[x_star]).unwrap();
            let mut c = ClassState::new(n, x_star, split).unwrap();
            let fixed = if half { Some((split, 1)) } else { None };
            d.prepare(fixed, 1);
            c.prepare(fixed, 1);
            for op in ops {
                match op {
                    Op::Pauli(t, p) => {
                        let q = if t { 0 } else { split };
                        d.pauli(q, PauliLabel::from_index(p));
                        c.pauli(q, PauliLabel::from_index(p));
                    }
                    Op::Oracle => { d.oracle(); c.oracle(); }
                    Op::Diffuse(h) => {
                        let e = if h { Some(split) } else { None };
                        d.diffuse(e);
                        c.diffuse(e);
                    }
                    Op::Project(t, b) => {
                        let q = if t { 0 } else { split };
                        if d.prob_one(q) > 1e-6 && d.prob_one(q) < 1.0 - 1e-6 {
                            d.project(q, b);
                            c.project(q, b);
                        }
                    }
                }
                prop_assert!((d.norm() - 1.0).abs() < 1e-10);
                prop_assert!((c.norm() - 1.0).abs() < 1e-10);
                prop_assert!(max_diff(&d.to_dense(), &c.to_dense()) < 1e-10);
                prop_assert!((d.prob_one(0) - c.prob_one(0)).abs() < 1e-10);
                prop_assert!((d.prob_one(split) - c.prob_one(split)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn class_sampling_matches_marginal() {
        let (n, x_star, split) = (16, 5, 2);
        let mut c = ClassState::new(n, x_star, split).unwrap();
        c.prepare(None, 1);
        c.oracle();
        c.pauli(split, PauliLabel::Y);
        c.diffuse(None);
        let dense = c.to_dense();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 200_000;
        let mut counts = vec![0usize; n];
        for _ in 0..trials {
            counts[c.sample_index(&mut rng)] += 1;
        }
        for x in 0..n {
            let p = dense[2 * x].norm_sqr() + dense[2 * x + 1].norm_sqr();
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((counts[x] as f64 / trials as f64 - p).abs() < 5.0 * se + 1e-9, "x={x}");
        }
    }

    #[test]
    fn grover_on_four_is_exact() {
        for x in 0..4 {
            let mut d = DenseState::new(4, &[x]).unwrap();
            d.prepare(None, 1);
            d.oracle();
            d.diffuse(None);
            assert!((d.amplitudes()[2 * x + 1].norm() - 1.0).abs() < 1e-12);
        }
    }
}
