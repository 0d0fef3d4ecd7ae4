//! Aggregation of trial outcomes.

use std::collections::BTreeMap;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

pub const CSV_HEADER: &str = "strategy,n,r,j,trials,success_rate,ci_lo,ci_hi,mean_queries,se_queries,seed";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    pub success: bool,
    pub queries: u64,
    pub cap_hit: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunStatistics {
    pub strategy: String,
    pub n: usize,
    pub r: f64,
    pub j: usize,
    pub seed: u64,
    pub trials: usize,
    pub successes: usize,
    pub cap_hits: usize,
    pub success_rate: f64,
    pub ci: (f64, f64),
    pub mean_queries: f64,
    pub se_queries: f64,
    /// Query count → number of trials.
    pub query_histogram: BTreeMap<u64, usize>,
}

/// Wilson score interval.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Smallest value `v` with at least a `q` fraction of samples `≤ v`.
pub fn quantile(values: &[u64], q: f64) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let k = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[k - 1])
}

impl RunStatistics {
    pub fn from_outcomes(strategy: &str, n: usize, r: f64, j: usize, seed: u64, outcomes: &[TrialOutcome]) -> Self {
        let trials = outcomes.len();
        let successes = outcomes.iter().filter(|o| o.success).count();
        let queries: Vec<f64> = outcomes.iter().map(|o| o.queries as f64).collect();
        let (mean_queries, se_queries) = mean_se(&queries);
        let mut query_histogram = BTreeMap::new();
        for o in outcomes {
            *query_histogram.entry(o.queries).or_insert(0) += 1;
        }
        Self {
            strategy: strategy.to_string(),
            n,
            r,
            j,
            seed,
            trials,
            successes,
            cap_hits: outcomes.iter().filter(|o| o.cap_hit).count(),
            success_rate: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
            ci: wilson_interval(successes, trials, Z95),
            mean_queries,
            se_queries,
            query_histogram,
        }
    }

    /// Queries needed for a `target` fraction of trials to have succeeded;
    /// `None` when fewer than that succeeded at all.
    pub fn queries_to_success(&self, outcomes: &[TrialOutcome], target: f64) -> Option<u64> {
        let needed = (target * outcomes.len() as f64).ceil() as usize;
        let mut q: Vec<u64> = outcomes.iter().filter(|o| o.success).map(|o| o.queries).collect();
        if needed == 0 || q.len() < needed {
            return None;
        }
        q.sort_unstable();
        Some(q[needed - 1])
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.16e},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            self.strategy,
            self.n,
            self.r,
            self.j,
            self.trials,
            self.success_rate,
            self.ci.0,
            self.ci.1,
            self.mean_queries,
            self.se_queries,
            self.seed
        )
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wilson_reference_values() {
        // 8 of 10 at 95%: statsmodels `proportion_confint(8, 10, method="wilson")`.
        let (lo, hi) = wilson_interval(8, 10, Z95);
        assert!((lo - 0.4901624).abs() < 1e-6 && (hi - 0.9433178).abs() < 1e-6, "{lo} {hi}");
        assert_eq!(wilson_interval(0, 5, Z95).0, 0.0);
    }

    #[test]
    fn exponent_of_power_law() {
        let pts: Vec<(f64, f64)> = [64.0, 256.0, 1024.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(0.5))).collect();
        assert!((fit_exponent(&pts).unwrap() - 0.5).abs() < 1e-12);
        assert!(fit_exponent(&pts[..1]).is_none());
    }

    #[test]
    fn quantile_is_an_order_statistic() {
        assert_eq!(quantile(&[5, 1, 4, 2, 3], 0.8), Some(4));
        assert_eq!(quantile(&[7], 0.1), Some(7));
        assert_eq!(quantile(&[], 0.5), None);
    }

    proptest! {
        #[test]
        fn interval_contains_estimate(trials in 1usize..5000, frac in 0.0f64..=1.0) {
            let s = ((trials as f64) * frac).floor() as usize;
            let (lo, hi) = wilson_interval(s, trials, Z95);
            let p = s as f64 / trials as f64;
            prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
            prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
        }

        #[test]
        fn success_rate_in_unit_interval(flags in proptest::collection::vec((any::<bool>(), 0u64..100), 1..50)) {
            let outs: Vec<TrialOutcome> = flags.iter().map(|&(s, q)| TrialOutcome { success: s, queries: q, cap_hit: false }).collect();
            let st = RunStatistics::from_outcomes("x", 4, 0.0, 0, 0, &outs);
            prop_assert!((0.0..=1.0).contains(&st.success_rate));
            prop_assert_eq!(st.query_histogram.values().sum::<usize>(), outs.len());
        }
    }
}
