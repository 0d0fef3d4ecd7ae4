//! Search strategies: Grover baselines, one-sided-noise procedures and the
//! flag-bit framework.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::state::QueryState;
use super::trajectory::{Noise, NoiseFlavor, Trajectory};
use crate::opalgebra::{check_power_of_two, QubitIndex};
use crate::{check_rate, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    GroverFaultless,
    GroverTwoSided,
    OneSidedAfterTarget,
    OneSidedAfterIndex,
    OneSidedBeforeTarget,
    OneSidedBeforeIndex,
    FlagBitSearch,
    NegligentGrover,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 8] = [
        StrategyKind::GroverFaultless,
        StrategyKind::GroverTwoSided,
        StrategyKind::OneSidedAfterTarget,
        StrategyKind::OneSidedAfterIndex,
        StrategyKind::OneSidedBeforeTarget,
        StrategyKind::OneSidedBeforeIndex,
        StrategyKind::FlagBitSearch,
        StrategyKind::NegligentGrover,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::GroverFaultless => "grover_faultless",
            StrategyKind::GroverTwoSided => "grover_two_sided",
            StrategyKind::OneSidedAfterTarget => "one_sided_after_target",
            StrategyKind::OneSidedAfterIndex => "one_sided_after_index",
            StrategyKind::OneSidedBeforeTarget => "one_sided_before_target",
            StrategyKind::OneSidedBeforeIndex => "one_sided_before_index",
            StrategyKind::FlagBitSearch => "flag_bit_search",
            StrategyKind::NegligentGrover => "negligent_grover",
        }
    }

    pub fn is_index(self) -> bool {
        matches!(self, StrategyKind::OneSidedAfterIndex | StrategyKind::OneSidedBeforeIndex)
    }

    pub fn is_target(self) -> bool {
        matches!(self, StrategyKind::OneSidedAfterTarget | StrategyKind::OneSidedBeforeTarget)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown strategy `{s}`")))
    }
}

/// Tunable constants of the strategies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    /// Grover iterations are `⌊grover·√(n/|M|)⌋`.
    pub grover: f64,
    /// Flag-bit instances `⌈instances·max(1, n r⁴)⌉`.
    pub instances: f64,
    /// Flag-bit iterations capped at `⌈iterations / r²⌉`.
    pub iterations: f64,
    /// Loops abort after `loop_cap` times their expected length.
    pub loop_cap: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            grover: FRAC_PI_4,
            instances: 8.0,
            iterations: 0.5,
            loop_cap: 64.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub n: usize,
    /// Noisy query qubit (0 = target).
    pub j: usize,
    /// Noise rate `r`, or `p` for the negligent oracle.
    pub rate: f64,
    /// Marked elements; `None` draws one uniformly per trial.
    pub marked: Option<Vec<usize>>,
    pub constants: Constants,
}

impl StrategySpec {
    pub fn new(kind: StrategyKind, n: usize, j: usize, rate: f64) -> Result<Self> {
        let spec = Self {
            kind,
            n,
            j,
            rate,
            marked: None,
            constants: Constants::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_marked(mut self, marked: Vec<usize>) -> Result<Self> {
        self.marked = Some(marked);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_power_of_two(self.n)?;
        if self.n < 2 {
            return Err(Error::Domain("search needs n ≥ 2".into()));
        }
        check_rate("rate", self.rate)?;
        QubitIndex::new(self.n, self.j)?;
        if self.kind.is_index() && self.j == 0 {
            return Err(Error::Domain(format!("{} needs an index qubit j ≥ 1", self.kind)));
        }
        if self.kind.is_target() && self.j != 0 {
            return Err(Error::Domain(format!("{} acts on the target qubit (j = 0)", self.kind)));
        }
        if let Some(m) = &self.marked {
            if let Some(&bad) = m.iter().find(|&&x| x >= self.n) {
                return Err(Error::Index(format!("marked element {bad} ≥ n = {}", self.n)));
            }
        }
        Ok(())
    }

    /// Number of marked elements used for the iteration count.
    fn marked_count(&self) -> usize {
        self.marked.as_ref().map_or(1, |m| m.len())
    }

    /// `⌊grover·√(size/|M|)⌋`, at least 1; size `n` or `n/2`.
    pub fn grover_iterations(&self, size: usize) -> usize {
        let m = self.marked_count().max(1) as f64;
        ((self.constants.grover * (size as f64 / m).sqrt()).floor() as usize).max(1)
    }

    /// Round length of the concealing-noise baseline in repeated-round mode:
    /// Grover iterations capped at `⌈1/r⌉`, beyond which coherence is lost.
    pub fn two_sided_round(&self) -> usize {
        let full = self.grover_iterations(self.n);
        if self.rate > 0.0 {
            full.min((1.0 / self.rate).ceil() as usize).max(1)
        } else {
            full
        }
    }

    /// `(K, L)` of the flag-bit framework.
    pub fn flag_bit_schedule(&self) -> (usize, usize) {
        let (n, r, c) = (self.n as f64, self.rate, self.constants);
        let k = (c.instances * (n * r.powi(4)).max(1.0)).ceil() as usize;
        let grover = (c.grover * (n / 2.0).sqrt()).ceil() as usize;
        let l = if r > 0.0 {
            grover.min((c.iterations / (r * r)).ceil() as usize)
        } else {
            grover
        };
        (k.max(1), l.max(1))
    }

    fn cap(&self, expected: f64) -> u64 {
        (self.constants.loop_cap * expected).ceil() as u64
    }
}

/// Result of one attempt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Attempt {
    pub found: bool,
    pub candidate: Option<usize>,
    /// A retry loop ran past its cap.
    pub cap_hit: bool,
}

impl Attempt {
    fn aborted() -> Self {
        Self {
            found: false,
            candidate: None,
            cap_hit: true,
        }
    }
}

/// Which reflection a repeated-call procedure is after.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Reflection about the marked elements on `Q_i`.
    Target,
    /// `R_{j,b}`: reflection about the marked elements with `x_j = b`, on
    /// the index qubits other than `j`.
    Index { j: usize, b: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReflectionOutcome {
    Certified { calls: u64 },
    DoubleError { calls: u64 },
    CapHit { calls: u64 },
}

impl ReflectionOutcome {
    pub fn calls(self) -> u64 {
        match self {
            ReflectionOutcome::Certified { calls }
            | ReflectionOutcome::DoubleError { calls }
            | ReflectionOutcome::CapHit { calls } => calls,
        }
    }
}

/// Parity bookkeeping for index-qubit reflections: done once `b` has been
/// seen an odd number of times and `1 − b` an even number of times.
#[derive(Clone, Copy, Debug, Default)]
struct Parity([u64; 2]);

impl Parity {
    fn record(&mut self, bit: usize) {
        self.0[bit] += 1;
    }

    fn done(&self, b: usize) -> bool {
        self.0[b] % 2 == 1 && self.0[1 - b] % 2 == 0
    }
}

/// Reflection with noise only before the call: deliberately depolarize the
/// noisy qubit, call, measure it. Target: done when the measurement reads 1
/// (expected 2 calls). Index: parity rule (expected 3 calls).
pub fn one_sided_before_reflection<S: QueryState>(
    traj: &mut Trajectory<S>,
    noise: &Noise,
    side: Side,
    cap: u64,
) -> ReflectionOutcome {
    let mut parity = Parity::default();
    let mut calls = 0;
    loop {
        if calls >= cap {
            return ReflectionOutcome::CapHit { calls };
        }
        traj.depolarize(noise.qubit);
        traj.noisy_call(noise);
        calls += 1;
        let m = traj.measure(noise.qubit);
        match side {
            Side::Target if m == 1 => return ReflectionOutcome::Certified { calls },
            Side::Target => {}
            Side::Index { b, .. } => {
                parity.record(m);
                if parity.done(b) {
                    return ReflectionOutcome::Certified { calls };
                }
            }
        }
    }
}

/// Flag-bit reflection with the signaling oracle.
///
/// Each try prepares the noisy qubit in a random `|β⟩`, calls, and measures
/// `β'`. Unless the flags are `(1, 1)`, the bit seen by `O_f` is `β` when the
/// first flag is 0 and `β'` when only the first flag is set.
pub fn flag_bit_reflection<S: QueryState>(
    traj: &mut Trajectory<S>,
    noise: &Noise,
    side: Side,
    cap: u64,
) -> ReflectionOutcome {
    flag_bit_reflection_with(traj, noise, side, cap, true)
}

/// As [`flag_bit_reflection`]; with `abort_on_double` off, a double-error
/// call is ignored and the loop goes on (for call-count statistics).
pub(crate) fn flag_bit_reflection_with<S: QueryState>(
    traj: &mut Trajectory<S>,
    noise: &Noise,
    side: Side,
    cap: u64,
    abort_on_double: bool,
) -> ReflectionOutcome {
    let q = noise.qubit;
    let mut parity = Parity::default();
    let mut calls = 0;
    loop {
        if calls >= cap {
            return ReflectionOutcome::CapHit { calls };
        }
        let beta = traj.rng.random_range(0..2usize);
        traj.reset(q, beta);
        let flags = traj.noisy_call(noise);
        calls += 1;
        if flags == (1, 1) {
            if abort_on_double {
                return ReflectionOutcome::DoubleError { calls };
            }
            continue;
        }
        let beta_out = traj.measure(q);
        let seen = if flags.0 == 0 { beta } else { beta_out };
        match side {
            Side::Target if seen == 1 => return ReflectionOutcome::Certified { calls },
            Side::Target => {}
            Side::Index { b, .. } => {
                parity.record(seen);
                if parity.done(b) {
                    return ReflectionOutcome::Certified { calls };
                }
            }
        }
    }
}

/// Checking a candidate with the signaling oracle: repeat calls until one
/// whose flags make the readout trustworthy, then read `f(x)`.
///
/// The readout places the target in `|+⟩`, so for target noise any error
/// spoils it and a clean call `(0, 0)` is needed; for an index qubit holding
/// `x_j`, only an error before `O_f` can change the queried element. The
/// returned pair is `(f(x), calls)`.
pub fn signaling_check<S: QueryState>(traj: &mut Trajectory<S>, noise: &Noise, x: usize, cap: u64) -> Option<(bool, u64)> {
    let mut calls = 0;
    while calls < cap {
        traj.query_count += 1;
        calls += 1;
        let before = traj.rng.random::<f64>() < noise.rate;
        let after = traj.rng.random::<f64>() < noise.rate;
        let clean = if noise.qubit == 0 { !before && !after } else { !before };
        if clean {
            return Some((traj.state.is_marked(x), calls));
        }
    }
    None
}

/// Expected calls of [`signaling_check`].
pub fn signaling_check_expectation(j: usize, r: f64) -> f64 {
    if j == 0 {
        1.0 / ((1.0 - r) * (1.0 - r))
    } else {
        1.0 / (1.0 - r)
    }
}

fn noise_for(spec: &StrategySpec) -> Noise {
    let flavor = match spec.kind {
        StrategyKind::GroverFaultless => NoiseFlavor::None,
        StrategyKind::GroverTwoSided => NoiseFlavor::TwoSided,
        StrategyKind::OneSidedAfterTarget | StrategyKind::OneSidedAfterIndex => NoiseFlavor::After,
        StrategyKind::OneSidedBeforeTarget | StrategyKind::OneSidedBeforeIndex => NoiseFlavor::Before,
        StrategyKind::FlagBitSearch => NoiseFlavor::Signaling,
        StrategyKind::NegligentGrover => NoiseFlavor::Negligent,
    };
    Noise {
        flavor,
        qubit: spec.j,
        rate: spec.rate,
    }
}

/// Grover with the strategy's oracle: uniform start, `iterations` rounds of
/// call + diffusion, then measure.
pub fn grover_run<S: QueryState>(traj: &mut Trajectory<S>, spec: &StrategySpec, iterations: usize) -> Attempt {
    let noise = noise_for(spec);
    traj.state.prepare(None, 1);
    for _ in 0..iterations {
        traj.noisy_call(&noise);
        traj.state.diffuse(None);
    }
    let x = traj.sample_index();
    Attempt {
        found: traj.state.is_marked(x),
        candidate: Some(x),
        cap_hit: false,
    }
}

/// Noise after the call only. Target: reset the target to `|1⟩` before each
/// call. Index half `b`: reset `x_j` to `b` before each call and diffuse over
/// the remaining index qubits.
pub fn one_sided_after_half<S: QueryState>(traj: &mut Trajectory<S>, spec: &StrategySpec, half: Option<usize>) -> Attempt {
    let noise = noise_for(spec);
    let (fixed, size) = match half {
        None => (None, spec.n),
        Some(b) => (Some((spec.j, b)), spec.n / 2),
    };
    traj.state.prepare(fixed, 1);
    for _ in 0..spec.grover_iterations(size) {
        match half {
            None => traj.reset(0, 1),
            Some(b) => traj.reset(spec.j, b),
        }
        traj.noisy_call(&noise);
        traj.state.diffuse(half.map(|_| spec.j));
    }
    finish_half(traj, spec, half)
}

fn finish_half<S: QueryState>(traj: &mut Trajectory<S>, spec: &StrategySpec, half: Option<usize>) -> Attempt {
    let mut x = traj.sample_index();
    if let Some(b) = half {
        let m = 1 << (spec.j - 1);
        x = (x & !m) | (b * m);
    }
    Attempt {
        found: traj.state.is_marked(x),
        candidate: Some(x),
        cap_hit: false,
    }
}

/// Noise before the call only, with the repeated-call reflections.
pub fn one_sided_before_half<S: QueryState>(traj: &mut Trajectory<S>, spec: &StrategySpec, half: Option<usize>) -> Attempt {
    let noise = noise_for(spec);
    let (fixed, size, side, expected) = match half {
        None => (None, spec.n, Side::Target, 2.0),
        Some(b) => (Some((spec.j, b)), spec.n / 2, Side::Index { j: spec.j, b }, 3.0),
    };
    traj.state.prepare(fixed, 1);
    let cap = spec.cap(expected);
    for _ in 0..spec.grover_iterations(size) {
        match one_sided_before_reflection(traj, &noise, side, cap) {
            ReflectionOutcome::Certified { .. } => {}
            _ => return Attempt::aborted(),
        }
        traj.state.diffuse(half.map(|_| spec.j));
    }
    finish_half(traj, spec, half)
}

/// One flag-bit instance of `L` iterations; `None` after a double error.
fn flag_bit_instance<S: QueryState>(
    traj: &mut Trajectory<S>,
    spec: &StrategySpec,
    half: Option<usize>,
    iterations: usize,
) -> std::result::Result<Option<usize>, ()> {
    let noise = noise_for(spec);
    let (fixed, side, expected) = match half {
        None => (None, Side::Target, 2.0),
        Some(b) => (Some((spec.j, b)), Side::Index { j: spec.j, b }, 3.0),
    };
    traj.state.prepare(fixed, 1);
    let cap = spec.cap(expected);
    for _ in 0..iterations {
        match flag_bit_reflection(traj, &noise, side, cap) {
            ReflectionOutcome::Certified { .. } => {}
            ReflectionOutcome::DoubleError { .. } => return Ok(None),
            ReflectionOutcome::CapHit { .. } => return Err(()),
        }
        traj.state.diffuse(half.map(|_| spec.j));
    }
    Ok(finish_half(traj, spec, half).candidate)
}

/// `K` instances of `L` flag-bit iterations run one after another, each
/// candidate checked with the signaling oracle; stops at the first
/// certified marked element. Index noise searches both halves.
pub fn flag_bit_search<S: QueryState>(traj: &mut Trajectory<S>, spec: &StrategySpec) -> Attempt {
    if spec.rate == 0.0 {
        let it = spec.grover_iterations(spec.n);
        return grover_run(traj, &StrategySpec { kind: StrategyKind::GroverFaultless, ..spec.clone() }, it);
    }
    let noise = noise_for(spec);
    let (k, l) = spec.flag_bit_schedule();
    let halves: Vec<Option<usize>> = if spec.j == 0 { vec![None] } else { vec![Some(0), Some(1)] };
    let check_cap = spec.cap(signaling_check_expectation(spec.j, spec.rate));
    for _ in 0..k {
        for &half in &halves {
            let candidate = match flag_bit_instance(traj, spec, half, l) {
                Ok(c) => c,
                Err(()) => return Attempt::aborted(),
            };
            if let Some(x) = candidate {
                match signaling_check(traj, &noise, x, check_cap) {
                    Some((true, _)) => {
                        return Attempt {
                            found: true,
                            candidate: Some(x),
                            cap_hit: false,
                        }
                    }
                    Some((false, _)) => {}
                    None => return Attempt::aborted(),
                }
            }
        }
    }
    Attempt {
        found: false,
        candidate: None,
        cap_hit: false,
    }
}

/// Whether an attempt already includes its own result check.
pub fn self_checking(kind: StrategyKind) -> bool {
    matches!(
        kind,
        StrategyKind::FlagBitSearch | StrategyKind::OneSidedAfterIndex | StrategyKind::OneSidedBeforeIndex
    )
}

/// One attempt of a strategy. In repeated-round mode the concealing baseline
/// uses its short round; index strategies run both halves and check them.
pub fn attempt<S: QueryState>(traj: &mut Trajectory<S>, spec: &StrategySpec, repeated: bool) -> Attempt {
    match spec.kind {
        StrategyKind::GroverFaultless | StrategyKind::NegligentGrover => {
            let it = spec.grover_iterations(spec.n);
            grover_run(traj, spec, it)
        }
        StrategyKind::GroverTwoSided => {
            let it = if repeated { spec.two_sided_round() } else { spec.grover_iterations(spec.n) };
            grover_run(traj, spec, it)
        }
        StrategyKind::OneSidedAfterTarget => one_sided_after_half(traj, spec, None),
        StrategyKind::OneSidedBeforeTarget => one_sided_before_half(traj, spec, None),
        StrategyKind::OneSidedAfterIndex | StrategyKind::OneSidedBeforeIndex => {
            // Each half yields a candidate; telling which one is marked costs
            // one check query per half.
            let mut last = Attempt::aborted();
            for b in 0..2 {
                last = if spec.kind == StrategyKind::OneSidedAfterIndex {
                    one_sided_after_half(traj, spec, Some(b))
                } else {
                    one_sided_before_half(traj, spec, Some(b))
                };
                if last.cap_hit {
                    return last;
                }
                traj.query_count += 1;
                if last.found {
                    return last;
                }
            }
            last
        }
        StrategyKind::FlagBitSearch => flag_bit_search(traj, spec),
    }
}

/// Simulated unbiased coin tosses until odd heads and even tails; returns the count.
pub fn coin_toss_run<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    let mut parity = Parity::default();
    let mut tosses = 0;
    loop {
        tosses += 1;
        parity.record(rng.random_range(0..2usize));
        if parity.done(1) {
            return tosses;
        }
    }
}
