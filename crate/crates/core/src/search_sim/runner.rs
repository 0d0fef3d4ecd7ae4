//! Trials: seeding, the two run modes and parallel aggregation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::state::{ClassState, DenseState, QueryState};
use super::stats::{mean_se, RunStatistics, TrialOutcome};
use super::strategies::{
    attempt, coin_toss_run, flag_bit_reflection_with, one_sided_before_reflection, self_checking, ReflectionOutcome, Side,
    StrategySpec,
};
use super::trajectory::{Noise, NoiseFlavor, Trajectory};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// One attempt; success means the measured element is marked.
    SingleShot,
    /// Attempts with result checks until a marked element is certified.
    UntilSuccess,
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x6A09_E667_F3BC_C908)))
}

/// Attempts allowed in [`Mode::UntilSuccess`] before giving up.
pub fn attempt_cap(spec: &StrategySpec) -> u64 {
    (spec.constants.loop_cap * spec.n as f64).ceil() as u64
}

fn drive<S: QueryState>(mut traj: Trajectory<S>, spec: &StrategySpec, mode: Mode) -> TrialOutcome {
    match mode {
        Mode::SingleShot => {
            let a = attempt(&mut traj, spec, false);
            TrialOutcome {
                success: a.found,
                queries: traj.query_count,
                cap_hit: a.cap_hit,
            }
        }
        Mode::UntilSuccess => {
            for _ in 0..attempt_cap(spec) {
                let a = attempt(&mut traj, spec, true);
                if a.cap_hit {
                    return TrialOutcome {
                        success: false,
                        queries: traj.query_count,
                        cap_hit: true,
                    };
                }
                if !self_checking(spec.kind) {
                    traj.query_count += 1;
                }
                if a.found {
                    return TrialOutcome {
                        success: true,
                        queries: traj.query_count,
                        cap_hit: false,
                    };
                }
            }
            TrialOutcome {
                success: false,
                queries: traj.query_count,
                cap_hit: true,
            }
        }
    }
}

/// One trial. Without a fixed marked set, one element is drawn from the seed.
/// A single marked element runs on the compressed state.
pub fn run_trial(spec: &StrategySpec, mode: Mode, seed: u64) -> Result<TrialOutcome> {
    spec.validate()?;
    let marked = match &spec.marked {
        Some(m) => m.clone(),
        None => vec![(splitmix64(seed) % spec.n as u64) as usize],
    };
    let traj_seed = splitmix64(seed ^ 0xA5A5_A5A5_A5A5_A5A5);
    if let [x] = marked[..] {
        let split = if spec.j == 0 { 1 } else { spec.j };
        let state = ClassState::new(spec.n, x, split)?;
        Ok(drive(Trajectory::new(state, traj_seed), spec, mode))
    } else {
        let state = DenseState::new(spec.n, &marked)?;
        Ok(drive(Trajectory::new(state, traj_seed), spec, mode))
    }
}

/// Runs `trials` trials in parallel; the outcomes are in trial order.
pub fn run_outcomes(spec: &StrategySpec, mode: Mode, trials: usize, master_seed: u64) -> Result<Vec<TrialOutcome>> {
    if trials == 0 {
        return Err(Error::Domain("trials must be ≥ 1".into()));
    }
    (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(spec, mode, trial_seed(master_seed, i)))
        .collect()
}

pub fn run_trials(spec: &StrategySpec, mode: Mode, trials: usize, master_seed: u64) -> Result<(RunStatistics, Vec<TrialOutcome>)> {
    let outcomes = run_outcomes(spec, mode, trials, master_seed)?;
    let stats = RunStatistics::from_outcomes(spec.kind.name(), spec.n, spec.rate, spec.j, master_seed, &outcomes);
    Ok((stats, outcomes))
}

/// Toss counts of `trials` independent runs.
pub fn coin_toss_counts(trials: usize, seed: u64) -> Result<Vec<u64>> {
    if trials == 0 {
        return Err(Error::Domain("trials must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..trials).map(|_| coin_toss_run(&mut rng)).collect())
}

/// Mean and standard error of the coin-toss count.
pub fn coin_toss_expectation(trials: usize, seed: u64) -> Result<(f64, f64)> {
    let counts: Vec<f64> = coin_toss_counts(trials, seed)?.into_iter().map(|c| c as f64).collect();
    Ok(mean_se(&counts))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReflectionKind {
    BeforeTarget,
    BeforeIndex,
    FlagTarget,
    FlagIndex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReflectionSample {
    /// Calls of every certified reflection; for the flag-bit kinds,
    /// double-error calls are left out, i.e. the count is conditioned on
    /// calls without a double error.
    pub calls: Vec<u64>,
    /// Double-error calls (flag-bit kinds).
    pub double_errors: usize,
    pub cap_hits: usize,
    /// Oracle calls made in total, aborted reflections included.
    pub total_calls: u64,
}

/// Runs `reps` reflections back to back on an `n`-element instance and
/// records their call counts.
pub fn reflection_calls(kind: ReflectionKind, n: usize, r: f64, reps: usize, seed: u64) -> Result<ReflectionSample> {
    let (flavor, j, side) = match kind {
        ReflectionKind::BeforeTarget => (NoiseFlavor::Before, 0, Side::Target),
        ReflectionKind::BeforeIndex => (NoiseFlavor::Before, 1, Side::Index { j: 1, b: 0 }),
        ReflectionKind::FlagTarget => (NoiseFlavor::Signaling, 0, Side::Target),
        ReflectionKind::FlagIndex => (NoiseFlavor::Signaling, 1, Side::Index { j: 1, b: 0 }),
    };
    let noise = Noise::new(flavor, j, r)?;
    let expected = if j == 0 { 2.0 } else { 3.0 };
    let cap = (64.0 * expected) as u64;
    let fixed = if j == 0 { None } else { Some((1, 0)) };
    let mut traj = Trajectory::new(ClassState::new(n, 1, 1)?, seed).with_flag_log();
    traj.state.prepare(fixed, 1);
    let mut sample = ReflectionSample {
        calls: Vec::with_capacity(reps),
        double_errors: 0,
        cap_hits: 0,
        total_calls: 0,
    };
    for _ in 0..reps {
        traj.flag_log.clear();
        let out = match flavor {
            NoiseFlavor::Signaling => flag_bit_reflection_with(&mut traj, &noise, side, cap, false),
            _ => one_sided_before_reflection(&mut traj, &noise, side, cap),
        };
        let doubles = traj.flag_log.iter().filter(|&&f| f == (1, 1)).count();
        sample.double_errors += doubles;
        sample.total_calls += out.calls();
        match out {
            ReflectionOutcome::Certified { calls } => sample.calls.push(calls - doubles as u64),
            _ => sample.cap_hits += 1,
        }
        if doubles > 0 {
            traj.state.prepare(fixed, 1);
        }
        traj.state.diffuse(fixed.map(|f| f.0));
    }
    Ok(sample)
}
