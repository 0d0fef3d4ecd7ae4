use std::fmt::Write as _;
use std::io::Write as _;

use nqsearch::oracle_kraus::Fault;
use nqsearch::progress::claims::BOUND_TOL;
use nqsearch::progress::{grover_schedule, progress_trace, success_probability, ExtendedSpace, Readout};
use nqsearch::report::Status;
use nqsearch::search_sim::runner::splitmix64;
use nqsearch::search_sim::{coin_toss_counts, run_trials, stats, Mode, StrategyKind, StrategySpec};
use nqsearch::suite::{run_suite, SuiteConfig, DENSITY_MAX_N};

use crate::config::Flags;
use crate::{LabError, Outcome};

/// Largest `n` for trajectory simulation.
pub const TRAJECTORY_MAX_N: usize = 1 << 20;

type CmdResult = Result<Outcome, LabError>;

fn usage(msg: impl Into<String>) -> LabError {
    LabError::Usage(msg.into())
}

/// `# nqlab <version>, git-ish=<rev>, master_seed=<seed>, timestamp=<t>`.
/// Both the revision and the timestamp come from the environment, so runs
/// with the same config and environment are byte-identical.
fn provenance(seed: Option<u64>) -> String {
    let rev = std::env::var("NQLAB_GIT_REV").unwrap_or_else(|_| "unknown".into());
    let ts = std::env::var("SOURCE_DATE_EPOCH").unwrap_or_else(|_| "unset".into());
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    format!("# nqlab {}, git-ish={rev}, master_seed={seed}, timestamp={ts}\n", env!("CARGO_PKG_VERSION"))
}

fn emit(flags: &Flags, text: &str) -> Result<(), LabError> {
    match &flags.out {
        Some(path) => std::fs::write(path, text).map_err(|e| LabError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| LabError::Io(e.to_string()))
        }
    }
}

fn check_ns(ns: &[usize], cap: usize, what: &str) -> Result<(), LabError> {
    for &n in ns {
        if n < 2 || !n.is_power_of_two() {
            return Err(usage(format!("n = {n} must be a power of two ≥ 2")));
        }
        if n > cap {
            return Err(usage(format!(
                "n = {n} exceeds the {what} cap of {cap}; memory would grow beyond what this tool is sized for"
            )));
        }
    }
    Ok(())
}

fn check_rates(rs: &[f64]) -> Result<(), LabError> {
    match rs.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        Some(r) => Err(usage(format!("rate {r} outside [0, 1]"))),
        None => Ok(()),
    }
}

fn single<T: Copy>(v: &Option<Vec<T>>, name: &str, default: T) -> Result<T, LabError> {
    match v.as_deref() {
        None => Ok(default),
        Some([x]) => Ok(*x),
        Some(_) => Err(usage(format!("--{name} takes a single value for this command"))),
    }
}

pub fn verify(flags: &Flags) -> CmdResult {
    let mut cfg = SuiteConfig::default();
    if let Some(ns) = &flags.n {
        check_ns(ns, DENSITY_MAX_N, "density-matrix")?;
        cfg.kraus_ns = ns.clone();
        cfg.claim_ns = ns.clone();
    }
    if let Some(rs) = &flags.r {
        check_rates(rs)?;
        cfg.rates = rs.clone();
    }
    if flags.n.is_some() || flags.r.is_some() {
        cfg.corollary = cfg
            .claim_ns
            .iter()
            .filter(|&&n| n >= 12)
            .flat_map(|&n| cfg.rates.iter().filter(|&&r| r > 0.0 && r < 1.0).map(move |&r| (n, r)))
            .collect();
    }
    cfg.js = flags.j.clone();
    if let Some(tol) = flags.tol {
        cfg.tol = tol;
    }
    cfg.fault = match flags.inject_fault.as_deref() {
        None | Some("none") => Fault::None,
        Some("k1x-sign") => Fault::K1xSign,
        Some(other) => return Err(usage(format!("unknown fault `{other}` (known: k1x-sign)"))),
    };
    let rep = run_suite(&cfg).map_err(|e| usage(e.to_string()))?;
    let mut text = provenance(None);
    text.push_str(&rep.to_string());
    let _ = writeln!(
        text,
        "summary: {} PASS, {} FAIL, {} SKIP",
        rep.count(Status::Pass),
        rep.count(Status::Fail),
        rep.count(Status::Skip)
    );
    emit(flags, &text)?;
    for line in rep.failures() {
        eprintln!("{line}");
    }
    Ok(if rep.all_passed() { Outcome::Pass } else { Outcome::Fail })
}

pub fn progress(flags: &Flags) -> CmdResult {
    let n = single(&flags.n, "n", 16)?;
    check_ns(&[n], DENSITY_MAX_N, "density-matrix")?;
    let rate = single(&flags.r, "r", 0.25)?;
    check_rates(&[rate])?;
    let j = single(&flags.j, "j", 0)?;
    let scenario = flags.scenario.as_deref().unwrap_or(if j == 0 { "target" } else { "index" });
    let space = match scenario {
        "target" => ExtendedSpace::main(n, 0),
        "index" => ExtendedSpace::main(n, if j == 0 { 1 } else { j }),
        "negligent" => ExtendedSpace::negligent(n),
        other => return Err(usage(format!("unknown scenario `{other}` (target, index, negligent)"))),
    }
    .map_err(|e| usage(e.to_string()))?;
    if rate == 0.0 {
        return Err(usage(if space.is_negligent() {
            "progress needs p > 0: the per-query bound 28(1−p)/(np) is undefined at p = 0"
        } else {
            "progress needs r > 0 for the main model: the per-query bound 2000/(nr) is undefined at r = 0"
        }));
    }
    let steps_n = flags
        .steps
        .unwrap_or_else(|| (std::f64::consts::FRAC_PI_4 * (n as f64).sqrt()).floor() as usize);
    let (psi0, steps) = grover_schedule(n, steps_n);
    let trace = progress_trace(&space, rate, &psi0, &steps).map_err(|e| usage(e.to_string()))?;
    let q_succ = success_probability(&space, rate, &psi0, &steps, &Readout::QueryIndex).map_err(|e| usage(e.to_string()))?;

    let psi0_ok = trace.rows[0].psi == 0.0 && trace.psi0_numeric.abs() <= 1e-12;
    let bound = space.step_bound(rate);
    let max_delta = trace.rows.iter().skip(1).map(|r| r.delta_psi).fold(f64::NEG_INFINITY, f64::max);
    let delta_ok = trace.rows.iter().skip(1).all(|r| r.delta_psi <= bound + BOUND_TOL);
    let cap = trace.final_psi() + 2.0 / n as f64;
    let succ_ok = q_succ <= cap + 1e-8;
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };

    let mut text = provenance(None);
    text.push_str(&trace.to_csv());
    let _ = writeln!(
        text,
        "# psi0 {:.16e} (projector evaluation {:.3e}) {}",
        trace.rows[0].psi,
        trace.psi0_numeric,
        verdict(psi0_ok)
    );
    if steps_n > 0 {
        let _ = writeln!(text, "# max_delta {max_delta:.16e} bound {bound:.16e} {}", verdict(delta_ok));
    }
    let _ = writeln!(text, "# q_succ {q_succ:.16e} psi_tau+2/n {cap:.16e} {}", verdict(succ_ok));
    emit(flags, &text)?;
    Ok(if psi0_ok && delta_ok && succ_ok { Outcome::Pass } else { Outcome::Fail })
}

fn parse_mode(mode: Option<&str>) -> Result<Mode, LabError> {
    match mode.unwrap_or("until-success") {
        "single-shot" => Ok(Mode::SingleShot),
        "until-success" => Ok(Mode::UntilSuccess),
        other => Err(usage(format!("unknown mode `{other}` (single-shot, until-success)"))),
    }
}

/// Seed of one grid cell, independent of the rest of the grid.
fn cell_seed(master: u64, strategy: &str, n: usize, r: f64, j: usize) -> u64 {
    let mut h = splitmix64(master);
    for b in strategy.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    for v in [n as u64, r.to_bits(), j as u64] {
        h = splitmix64(h ^ v);
    }
    h
}

struct CoinStats {
    mean: f64,
    se: f64,
    twos: usize,
}

impl CoinStats {
    fn run(trials: usize, seed: u64) -> Result<Self, LabError> {
        let counts = coin_toss_counts(trials, seed).map_err(|e| usage(e.to_string()))?;
        let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let (mean, se) = stats::mean_se(&xs);
        let twos = counts.iter().filter(|&&c| c == 2).count();
        Ok(Self { mean, se, twos })
    }

    /// Mean within 4 standard errors of 3 and no run of length 2.
    fn ok(&self) -> bool {
        self.twos == 0 && (self.mean - 3.0).abs() <= 4.0 * self.se.max(f64::EPSILON)
    }
}

pub fn experiment(flags: &Flags) -> CmdResult {
    let names = flags
        .strategy
        .clone()
        .unwrap_or_else(|| vec!["one_sided_before_target".into(), "grover_two_sided".into()]);
    let ns = flags.n.clone().unwrap_or_else(|| vec![64, 256, 1024, 4096]);
    let rs = flags.r.clone().unwrap_or_else(|| vec![0.25]);
    check_rates(&rs)?;
    let trials = flags.trials.unwrap_or(2000);
    if trials == 0 {
        return Err(usage("trials must be ≥ 1"));
    }
    let master = flags.seed.unwrap_or(0);
    let mode = parse_mode(flags.mode.as_deref())?;

    let mut text = provenance(Some(master));
    text.push_str(stats::CSV_HEADER);
    text.push('\n');
    let mut ok = true;
    for name in &names {
        if name == "coin_toss" {
            let c = CoinStats::run(trials, cell_seed(master, name, 0, 0.0, 0))?;
            ok &= c.ok();
            let _ = writeln!(
                text,
                "coin_toss,0,{:.16e},0,{trials},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{master}",
                0.0, 1.0, 1.0, 1.0, c.mean, c.se
            );
            continue;
        }
        let kind: StrategyKind = name.parse().map_err(|e: nqsearch::Error| usage(e.to_string()))?;
        check_ns(&ns, TRAJECTORY_MAX_N, "trajectory")?;
        let js: Vec<usize> = match &flags.j {
            _ if kind.is_target() => vec![0],
            None if kind.is_index() => vec![1],
            None => vec![0],
            Some(js) if kind.is_index() => js.iter().copied().filter(|&j| j >= 1).collect(),
            Some(js) => js.clone(),
        };
        if js.is_empty() {
            return Err(usage(format!("{kind} needs an index qubit j ≥ 1")));
        }
        for &n in &ns {
            for &r in &rs {
                for &j in &js {
                    let spec = StrategySpec::new(kind, n, j, r).map_err(|e| usage(format!("{kind}, n={n}, j={j}: {e}")))?;
                    let seed = cell_seed(master, name, n, r, j);
                    let (mut st, _) = run_trials(&spec, mode, trials, seed).map_err(|e| usage(e.to_string()))?;
                    if st.cap_hits > 0 {
                        eprintln!("nqlab: {kind} n={n} r={r} j={j}: {} trials hit a loop cap", st.cap_hits);
                    }
                    st.seed = master;
                    text.push_str(&st.csv_row());
                    text.push('\n');
                }
            }
        }
    }
    emit(flags, &text)?;
    Ok(if ok { Outcome::Pass } else { Outcome::Fail })
}

pub fn coin_toss(flags: &Flags) -> CmdResult {
    let trials = flags.trials.unwrap_or(1_000_000);
    if trials == 0 {
        return Err(usage("trials must be ≥ 1"));
    }
    let seed = flags.seed.unwrap_or(0);
    let c = CoinStats::run(trials, seed)?;
    let ok = c.ok();
    let mut text = provenance(Some(seed));
    text.push_str("trials,mean_tosses,se_tosses,count_two,seed\n");
    let _ = writeln!(text, "{trials},{:.16e},{:.16e},{},{seed}", c.mean, c.se, c.twos);
    let _ = writeln!(text, "# mean vs 3 within 4 se, no run of length 2: {}", if ok { "PASS" } else { "FAIL" });
    emit(flags, &text)?;
    Ok(if ok { Outcome::Pass } else { Outcome::Fail })
}
