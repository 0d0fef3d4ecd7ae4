//! The full verification sweep, as one ordered report.

use crate::channels::{channels_equal, compose, depolarizing_noise, phase_oracle, KrausChannel, DEFAULT_TOL};
use crate::opalgebra::{QubitIndex, C64};
use crate::oracle_kraus::{build_g_family, build_geometry, build_k_family, grids, verify, verify_coefficient_bounds, Fault};
use crate::progress::claims::{claim_norms, corollary_bound_check};
use crate::progress::purified::compression_defect;
use crate::progress::{grover_schedule, ExtendedSpace};
use crate::report::{CheckLine, Report};
use crate::{Error, Result};

/// Largest `n` for Choi-based checks (Choi matrices are `(2n)² × (2n)²`).
pub const CHOI_MAX_N: usize = 16;
/// Largest `n` for the density-based commands.
pub const DENSITY_MAX_N: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    /// Sizes for the Kraus-family checks.
    pub kraus_ns: Vec<usize>,
    /// Sizes for the transition-norm checks.
    pub claim_ns: Vec<usize>,
    pub rates: Vec<f64>,
    /// Noisy qubits; `None` means all of `0..=log n`.
    pub js: Option<Vec<usize>>,
    pub tol: f64,
    pub fault: Fault,
    /// `(n, r)` points of the corollary inequality.
    pub corollary: Vec<(usize, f64)>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            kraus_ns: vec![2, 4, 8],
            claim_ns: vec![4, 8, 16],
            rates: grids::coarse_grid(),
            js: None,
            tol: DEFAULT_TOL,
            fault: Fault::None,
            corollary: vec![(1024, 0.01), (16, 0.5), (4096, 0.001)],
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        for &n in self.kraus_ns.iter().chain(&self.claim_ns) {
            crate::opalgebra::check_power_of_two(n)?;
            if n > DENSITY_MAX_N {
                return Err(Error::Domain(format!(
                    "n = {n} exceeds the density-matrix cap {DENSITY_MAX_N}"
                )));
            }
        }
        for &r in &self.rates {
            crate::check_rate("r", r)?;
        }
        if !(self.tol > 0.0) {
            return Err(Error::Domain("tolerance must be positive".into()));
        }
        Ok(())
    }

    fn js_for(&self, n: usize) -> Vec<usize> {
        let all = (0..=n.trailing_zeros() as usize).collect::<Vec<_>>();
        match &self.js {
            None => all,
            Some(js) => js.iter().copied().filter(|j| all.contains(j)).collect(),
        }
    }
}

fn failed(id: &str, params: String, e: Error) -> CheckLine {
    CheckLine::within(id, params, f64::INFINITY, 0.0).with_note(e.to_string())
}

fn push_result(rep: &mut Report, id: &str, params: String, r: Result<Vec<CheckLine>>) {
    match r {
        Ok(lines) => rep.lines.extend(lines),
        Err(e) => rep.push(failed(id, params, e)),
    }
}

fn two_sided_channel(n: usize, x: usize, j: usize, r: f64) -> Result<KrausChannel> {
    let nz = depolarizing_noise(QubitIndex::new(n, j)?, r)?;
    compose(&nz, &compose(&KrausChannel::unitary(phase_oracle(n, &[x])?), &nz)?)
}

/// Runs every check in order: completeness, `G`/`K` equivalence, Table 1,
/// coefficient bounds, geometry, transition norms, the corollary and the
/// no-jump compression.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Report> {
    cfg.validate()?;
    let tol = cfg.tol;
    let mut rep = Report::new();
    let kraus_ns: Vec<usize> = cfg.kraus_ns.iter().copied().filter(|&n| n <= CHOI_MAX_N).collect();
    for &n in cfg.kraus_ns.iter().filter(|&&n| n > CHOI_MAX_N) {
        rep.push(CheckLine::skip("kraus-checks", format!("n={n}"), "Choi checks capped at n=16"));
    }

    // Completeness of every family.
    for &n in &kraus_ns {
        for j in cfg.js_for(n) {
            for &r in &cfg.rates {
                let p = format!("n={n},j={j},r={r}");
                push_result(&mut rep, "completeness", p.clone(), (|| {
                    let mut out = vec![];
                    let nz = depolarizing_noise(QubitIndex::new(n, j)?, r)?;
                    out.push(CheckLine::within("complete-noise", p.clone(), nz.completeness_defect(), tol));
                    for x in 0..n {
                        let geom = build_geometry(n, x, j)?;
                        let px = format!("n={n},j={j},x={x},r={r}");
                        out.push(CheckLine::within("complete-G", px.clone(), build_g_family(&geom, r)?.completeness_defect(), tol));
                        out.push(CheckLine::within("complete-K", px, build_k_family(&geom, r)?.completeness_defect(), tol));
                    }
                    Ok(out)
                })());
            }
        }
    }

    // G ≡ K ≡ 𝒩 ∘ 𝒪 ∘ 𝒩.
    for &n in &kraus_ns {
        for j in cfg.js_for(n) {
            for x in 0..n {
                for &r in &cfg.rates {
                    let p = format!("n={n},j={j},x={x},r={r}");
                    push_result(&mut rep, "gk-choi", p.clone(), (|| {
                        let mut out = vec![verify::gk_equivalence(n, x, j, r, tol)?, verify::g_direct_product(n, x, j, r)?];
                        let k = build_k_family(&build_geometry(n, x, j)?, r)?;
                        let (_, dev) = channels_equal(&k, &two_sided_channel(n, x, j, r)?, tol)?;
                        out.push(CheckLine::within("k-vs-composition", p.clone(), dev, tol));
                        Ok(out)
                    })());
                }
            }
        }
    }

    // Table 1.
    for &r in &cfg.rates {
        if r == 0.0 {
            rep.push(CheckLine::skip("table1", "r=0".into(), "blocks degenerate at r=0; endpoint checks only"));
            continue;
        }
        push_result(&mut rep, "table1-unitary", format!("r={r}"), verify::table1_unitarity(r, cfg.fault));
        for &n in kraus_ns.iter().take(2) {
            for j in cfg.js_for(n) {
                for x in 0..n {
                    push_result(
                        &mut rep,
                        "table1-reconstruct",
                        format!("n={n},j={j},x={x},r={r}"),
                        verify::table1_reconstruction(n, x, j, r, cfg.fault, tol),
                    );
                }
            }
        }
    }

    // Coefficient Claim.
    for &r in &cfg.rates {
        push_result(&mut rep, "coef", format!("r={r}"), verify_coefficient_bounds(r).map(|r| r.lines));
    }

    // Π/Ξ geometry.
    for &n in &kraus_ns {
        for j in cfg.js_for(n) {
            for x in 0..n {
                push_result(&mut rep, "geom", format!("n={n},j={j},x={x}"), verify::geometry(n, x, j));
            }
        }
    }

    // Transition norms, main and negligent.
    for &n in &cfg.claim_ns {
        for &r in &cfg.rates {
            if r <= 0.0 || r >= 1.0 {
                rep.push(CheckLine::skip("claims", format!("n={n},r={r}"), "transition norms need 0 < r < 1"));
                continue;
            }
            for j in cfg.js_for(n) {
                let p = format!("n={n},j={j},r={r}");
                push_result(&mut rep, "claims", p, ExtendedSpace::main(n, j).and_then(|s| claim_norms(&s, r)).map(|r| r.lines));
            }
            push_result(
                &mut rep,
                "claims-negligent",
                format!("n={n},p={r}"),
                ExtendedSpace::negligent(n).and_then(|s| claim_norms(&s, r)).map(|r| r.lines),
            );
        }
    }

    for &(n, r) in &cfg.corollary {
        push_result(&mut rep, "corollary", format!("n={n},r={r}"), corollary_bound_check(n, r).map(|r| r.lines));
    }

    // No-jump compression against the explicit record register.
    for n in [2usize, 4] {
        for &r in cfg.rates.iter().take(3) {
            let mut spaces: Vec<ExtendedSpace> = (0..=n.trailing_zeros() as usize)
                .filter_map(|j| ExtendedSpace::main(n, j).ok())
                .collect();
            spaces.extend(ExtendedSpace::negligent(n));
            for s in spaces {
                let (psi0, steps): (Vec<C64>, _) = grover_schedule(n, 3);
                let p = format!("n={n},{},r={r},t=3", s.label());
                match compression_defect(&s, r, &psi0, &steps) {
                    Ok(d) => rep.push(CheckLine::within("nojump-exact", p, d, 1e-9)),
                    Err(e) => rep.push(failed("nojump-exact", p, e)),
                }
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Status;

    #[test]
    fn endpoint_run() {
        let cfg = SuiteConfig {
            kraus_ns: vec![4],
            claim_ns: vec![4],
            rates: vec![0.0],
            corollary: vec![],
            ..SuiteConfig::default()
        };
        let rep = run_suite(&cfg).unwrap();
        assert!(rep.all_passed(), "{}", rep.failures().map(|l| l.to_string()).collect::<Vec<_>>().join("\n"));
        assert!(rep.lines.iter().any(|l| l.id == "table1" && l.status == Status::Skip));
    }

    #[test]
    fn injected_fault_is_caught() {
        let cfg = SuiteConfig {
            kraus_ns: vec![2],
            claim_ns: vec![],
            rates: vec![0.3],
            corollary: vec![],
            fault: Fault::K1xSign,
            ..SuiteConfig::default()
        };
        let rep = run_suite(&cfg).unwrap();
        let worst = rep.lines.iter().filter(|l| l.id == "table1-choi").map(|l| l.deviation).fold(0.0, f64::max);
        assert!(worst > 1e-3, "{worst}");
        assert!(!rep.all_passed());
    }

    #[test]
    fn oversize_is_refused() {
        let cfg = SuiteConfig {
            claim_ns: vec![64],
            ..SuiteConfig::default()
        };
        assert!(run_suite(&cfg).is_err());
    }
}
