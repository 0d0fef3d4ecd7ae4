//! Single Monte-Carlo trajectories with classical control.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::state::QueryState;
use crate::opalgebra::PauliLabel;
use crate::{check_rate, Result};

/// How noise enters an oracle call on query qubit `qubit`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseFlavor {
    None,
    /// `𝒩 ∘ O_f ∘ 𝒩`, errors concealed.
    TwoSided,
    /// Noise before `O_f` only.
    Before,
    /// Noise after `O_f` only.
    After,
    /// Two-sided noise emitting the flag pair `(β, β')`.
    Signaling,
    /// `O_f` with probability `1 − p`, identity otherwise.
    Negligent,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Noise {
    pub flavor: NoiseFlavor,
    pub qubit: usize,
    pub rate: f64,
}

impl Noise {
    pub fn new(flavor: NoiseFlavor, qubit: usize, rate: f64) -> Result<Self> {
        check_rate("rate", rate)?;
        Ok(Self { flavor, qubit, rate })
    }
}

/// Flag pair of one signaling call: `(error before, error after)`.
pub type Flags = (u8, u8);

#[derive(Clone, Debug)]
pub struct Trajectory<S: QueryState> {
    pub state: S,
    pub rng: ChaCha8Rng,
    pub query_count: u64,
    pub flag_log: Vec<Flags>,
    pub seed: u64,
    /// Keep every flag pair in `flag_log` (off for long runs).
    pub log_flags: bool,
}

impl<S: QueryState> Trajectory<S> {
    pub fn new(state: S, seed: u64) -> Self {
        Self {
            state,
            rng: ChaCha8Rng::seed_from_u64(seed),
            query_count: 0,
            flag_log: Vec::new(),
            seed,
            log_flags: false,
        }
    }

    pub fn with_flag_log(mut self) -> Self {
        self.log_flags = true;
        self
    }

    pub fn random_pauli(&mut self) -> PauliLabel {
        PauliLabel::from_index(self.rng.random_range(0..4))
    }

    /// Uniformly random Pauli on `qubit`: complete depolarization, unraveled.
    pub fn depolarize(&mut self, qubit: usize) {
        let p = self.random_pauli();
        self.state.pauli(qubit, p);
    }

    /// With probability `r`, a uniformly random Pauli; returns whether it fired.
    fn maybe_error(&mut self, qubit: usize, r: f64) -> bool {
        if r > 0.0 && self.rng.random::<f64>() < r {
            self.depolarize(qubit);
            true
        } else {
            false
        }
    }

    /// Measures `qubit` in the standard basis.
    pub fn measure(&mut self, qubit: usize) -> usize {
        let p1 = self.state.prob_one(qubit).clamp(0.0, 1.0);
        let bit = usize::from(self.rng.random::<f64>() < p1);
        self.state.project(qubit, bit);
        bit
    }

    /// Measures `qubit` and flips it to `bit` (a fresh preparation for a
    /// qubit that is unentangled, as in every use here).
    pub fn reset(&mut self, qubit: usize, bit: usize) {
        if self.measure(qubit) != bit {
            self.state.pauli(qubit, PauliLabel::X);
        }
    }

    /// One noisy oracle call; the flags are `(0, 0)` unless signaling.
    pub fn noisy_call(&mut self, noise: &Noise) -> Flags {
        self.query_count += 1;
        let (q, r) = (noise.qubit, noise.rate);
        let flags = match noise.flavor {
            NoiseFlavor::None => {
                self.state.oracle();
                (0, 0)
            }
            NoiseFlavor::TwoSided | NoiseFlavor::Signaling => {
                let b = self.maybe_error(q, r);
                self.state.oracle();
                let a = self.maybe_error(q, r);
                (u8::from(b), u8::from(a))
            }
            NoiseFlavor::Before => {
                self.maybe_error(q, r);
                self.state.oracle();
                (0, 0)
            }
            NoiseFlavor::After => {
                self.state.oracle();
                self.maybe_error(q, r);
                (0, 0)
            }
            NoiseFlavor::Negligent => {
                if self.rng.random::<f64>() >= r {
                    self.state.oracle();
                }
                (0, 0)
            }
        };
        if noise.flavor == NoiseFlavor::Signaling && self.log_flags {
            self.flag_log.push(flags);
        }
        flags
    }

    pub fn sample_index(&mut self) -> usize {
        self.state.sample_index(&mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{compose, depolarizing_noise, phase_oracle, KrausChannel};
    use crate::opalgebra::{trace_distance, CMatrix, QubitIndex, C64};
    use crate::search_sim::state::DenseState;

    fn random_state(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<C64> = (0..2 * n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let norm = crate::opalgebra::vec_norm(&v);
        v.into_iter().map(|z| z / norm).collect()
    }

    #[test]
    fn two_sided_trajectories_average_to_channel() {
        let (n, x, r, trials) = (4, 2, 0.6, 100_000);
        for j in [0usize, 2] {
            let psi = random_state(n, 11 + j as u64);
            let noise = Noise::new(NoiseFlavor::TwoSided, j, r).unwrap();
            let mut acc = CMatrix::zeros(2 * n, 2 * n);
            let start = DenseState::with_amplitudes(n, &[x], &psi).unwrap();
            let mut traj = Trajectory::new(start.clone(), 99);
            for _ in 0..trials {
                traj.state = start.clone();
                traj.noisy_call(&noise);
                let v = traj.state.to_dense();
                acc = &acc + &CMatrix::outer(&v, &v);
            }
            let mc = acc.scale_re(1.0 / trials as f64);
            let q = QubitIndex::new(n, j).unwrap();
            let nz = depolarizing_noise(q, r).unwrap();
            let ch = compose(&nz, &compose(&KrausChannel::unitary(phase_oracle(n, &[x]).unwrap()), &nz).unwrap()).unwrap();
            let exact = ch.apply(&CMatrix::outer(&psi, &psi)).unwrap();
            assert!(trace_distance(&mc, &exact).unwrap() < 0.02);
        }
    }

    #[test]
    fn full_depolarization_of_one_qubit() {
        let trials = 100_000;
        let mut traj = Trajectory::new(DenseState::new(2, &[]).unwrap(), 5);
        let mut acc = CMatrix::zeros(4, 4);
        for _ in 0..trials {
            traj.state.prepare(Some((1, 0)), 0);
            traj.depolarize(0);
            let v = traj.state.to_dense();
            acc = &acc + &CMatrix::outer(&v, &v);
        }
        let rho = acc.scale_re(1.0 / trials as f64).partial_trace_first(2).unwrap();
        let half = CMatrix::identity(2).scale_re(0.5);
        assert!(trace_distance(&rho, &half).unwrap() < 0.01);
    }

    #[test]
    fn signaling_flags_are_independent_bernoulli() {
        let (r, trials) = (0.3, 100_000);
        let noise = Noise::new(NoiseFlavor::Signaling, 0, r).unwrap();
        let mut traj = Trajectory::new(DenseState::new(4, &[1]).unwrap(), 17).with_flag_log();
        traj.state.prepare(None, 1);
        for _ in 0..trials {
            traj.noisy_call(&noise);
        }
        let mut table = [[0f64; 2]; 2];
        for &(a, b) in &traj.flag_log {
            table[a as usize][b as usize] += 1.0;
        }
        let expected = [[(1.0 - r) * (1.0 - r), (1.0 - r) * r], [r * (1.0 - r), r * r]];
        let chi2: f64 = (0..2)
            .flat_map(|a| (0..2).map(move |b| (a, b)))
            .map(|(a, b)| {
                let e = expected[a][b] * trials as f64;
                (table[a][b] - e).powi(2) / e
            })
            .sum();
        // 3 degrees of freedom, 99.9% quantile.
        assert!(chi2 < 16.27, "chi2 = {chi2}");
        assert_eq!(traj.query_count, trials as u64);
    }

    #[test]
    fn noiseless_call_is_the_oracle() {
        let psi = random_state(8, 3);
        let mut traj = Trajectory::new(DenseState::with_amplitudes(8, &[6], &psi).unwrap(), 1);
        traj.noisy_call(&Noise::new(NoiseFlavor::TwoSided, 0, 0.0).unwrap());
        let want = phase_oracle(8, &[6]).unwrap().mul_vec(&psi);
        let got = traj.state.to_dense();
        assert!(got.iter().zip(&want).all(|(a, b)| (a - b).norm() < 1e-15));
    }
}
