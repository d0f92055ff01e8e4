//! Empirical running-time estimation across sizes. Trials run in parallel
//! but draw from per-trial seeded streams, so reports are reproducible
//! regardless of thread interleaving.

use rayon::prelude::*;

use crate::analysis::runner::{run, ConnectivityMonitor, Driver, Monitor, Outcome, StopWhen};
use crate::protocols::{seeded_initial, CatalogEntry};
use crate::topology::TopologyFamily;

#[derive(Clone, Debug)]
pub struct SizeStats {
    pub n: usize,
    pub trials: usize,
    pub exhausted: usize,
    pub violations: usize,
    /// Mean steps over the trials that reached the stop condition.
    pub mean: f64,
    pub sd: f64,
    /// Half-width of the 95% confidence interval on the mean.
    pub ci95: f64,
    /// Mean divided by the claimed growth at this n; absent for stabilizing
    /// protocols and for sizes with no completed trial.
    pub constant: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ScalingReport {
    pub protocol: String,
    pub family: String,
    pub per_size: Vec<SizeStats>,
    /// Spread of the normalized constants, largest over smallest.
    pub constant_ratio: Option<f64>,
    /// Set as soon as any trial anywhere ran out of budget; the means then
    /// understate the truth and the report says so instead of hiding it.
    pub tainted: bool,
}

/// Run `trials` seeded runs per size and normalize the mean stopping times
/// by the protocol's claimed growth. Budgets follow the claimed growth with
/// a wide safety factor; exhausted trials taint the report.
pub fn estimate_runtime(
    entry: &CatalogEntry,
    family: TopologyFamily,
    sizes: &[usize],
    trials: usize,
    seed_base: u64,
) -> ScalingReport {
    assert!(trials >= 30, "need at least 30 trials per size");
    let spec = &entry.spec;
    let stop = if spec.has_halting_states() {
        StopWhen::Halted
    } else {
        StopWhen::FixedPoint
    };

    let mut per_size = Vec::with_capacity(sizes.len());
    let mut tainted = false;
    for (si, &n) in sizes.iter().enumerate() {
        let budget = entry.claimed_time.step_budget(n);
        let outcomes: Vec<(Option<u64>, usize)> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let seed = seed_base + (si * trials + t) as u64;
                let cfg =
                    seeded_initial(spec, n, family, seed).expect("requested size fits the family");
                let mut monitors: Vec<Box<dyn Monitor>> = if entry.preserves_connectivity {
                    vec![Box::new(ConnectivityMonitor::new())]
                } else {
                    Vec::new()
                };
                let (report, _, _) = run(
                    spec,
                    cfg,
                    Driver::Uniform { seed },
                    stop,
                    budget,
                    &mut monitors,
                    &family.label(),
                    false,
                );
                debug_assert!(report.outcome != Outcome::RanAllSteps);
                (report.steps, report.violations.len())
            })
            .collect();

        let completed: Vec<f64> = outcomes
            .iter()
            .filter_map(|(s, _)| s.map(|s| s as f64))
            .collect();
        let exhausted = trials - completed.len();
        let violations = outcomes.iter().map(|(_, v)| v).sum();
        tainted |= exhausted > 0;

        let (mean, sd, ci95) = if completed.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let mean = completed.iter().sum::<f64>() / completed.len() as f64;
            let sd = if completed.len() < 2 {
                0.0
            } else {
                (completed.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
                    / (completed.len() - 1) as f64)
                    .sqrt()
            };
            (mean, sd, 1.96 * sd / (completed.len() as f64).sqrt())
        };
        let constant = if completed.is_empty() {
            None
        } else {
            entry.claimed_time.normalizer(n).map(|f| mean / f)
        };
        per_size.push(SizeStats {
            n,
            trials,
            exhausted,
            violations,
            mean,
            sd,
            ci95,
            constant,
        });
    }

    let constants: Vec<f64> = per_size.iter().filter_map(|s| s.constant).collect();
    let constant_ratio = if constants.len() == sizes.len() && !constants.is_empty() {
        let max = constants.iter().cloned().fold(f64::MIN, f64::max);
        let min = constants.iter().cloned().fold(f64::MAX, f64::min);
        (min > 0.0).then(|| max / min)
    } else {
        None
    };

    ScalingReport {
        protocol: spec.name.clone(),
        family: family.label(),
        per_size,
        constant_ratio,
        tainted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{line_transformer, star_transformer};

    #[test]
    fn line_former_constants_are_finite_and_clean() {
        let entry = line_transformer();
        let report = estimate_runtime(&entry, TopologyFamily::Clique, &[4, 6], 30, 1000);
        assert!(!report.tainted);
        assert_eq!(report.per_size.len(), 2);
        for stats in &report.per_size {
            assert_eq!(stats.exhausted, 0);
            assert_eq!(stats.violations, 0);
            assert!(stats.mean > 0.0);
            assert!(stats.ci95 > 0.0);
            let c = stats.constant.expect("cubic claim normalizes");
            assert!(c.is_finite() && c > 0.0);
        }
        let ratio = report.constant_ratio.unwrap();
        assert!(ratio >= 1.0);
    }

    #[test]
    fn stabilizing_protocols_report_no_constants() {
        let entry = star_transformer();
        let report = estimate_runtime(&entry, TopologyFamily::Clique, &[4, 5], 30, 2000);
        assert!(!report.tainted);
        assert!(report.per_size.iter().all(|s| s.constant.is_none()));
        assert!(report.constant_ratio.is_none());
        assert!(report.per_size.iter().all(|s| s.exhausted == 0));
    }

    #[test]
    fn reports_are_reproducible_across_runs() {
        let entry = line_transformer();
        let a = estimate_runtime(&entry, TopologyFamily::RandomConnected(0.3), &[5], 30, 42);
        let b = estimate_runtime(&entry, TopologyFamily::RandomConnected(0.3), &[5], 30, 42);
        assert_eq!(a.per_size[0].mean.to_bits(), b.per_size[0].mean.to_bits());
        assert_eq!(a.per_size[0].sd.to_bits(), b.per_size[0].sd.to_bits());
    }

    #[test]
    #[should_panic(expected = "at least 30 trials")]
    fn thin_samples_are_rejected() {
        let entry = star_transformer();
        estimate_runtime(&entry, TopologyFamily::Clique, &[4], 5, 0);
    }
}
