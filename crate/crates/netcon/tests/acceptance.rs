//! Release gate. Each test prints one PASS/FAIL line for its criterion and
//! fails with the collected counterexamples when the bar is missed. Numeric
//! bars (tolerances, trial counts, size ranges, wall-clock limits) are pinned
//! here on purpose; loosening them is a release decision, not a test fix.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use netcon::analysis::{
    estimate_runtime, exhaustive_verify, expected_steps, replay_impossibility, run, sample_mean,
    BaselineKind, ConnectivityMonitor, Driver, LiftSource, LiftVerdict, Monitor, Outcome,
    Property, StopWhen, Trace,
};
use netcon::protocols::{
    catalog, line_around_a_star, line_transformer, naive_cycle_breaker,
    online_cycle_elimination, seeded_initial, stable_2cycle_detection, star_transformer,
    CatalogEntry, Target,
};
use netcon::scheduler::uniform_next;
use netcon::tm::{compute_predicate, Decision, TMDescription};
use netcon::topology::{has_directed_2cycle, ActiveGraph, TopologyFamily};
use netcon::{apply_interaction, apply_recorded, Configuration};

fn gate(name: &str, failures: &[String]) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("acceptance {name}: {verdict}");
    assert!(
        failures.is_empty(),
        "{name}: {} failure(s)\n{}",
        failures.len(),
        failures.join("\n")
    );
}

#[test]
fn baseline_means_match_closed_forms() {
    let started = Instant::now();
    let mut failures = Vec::new();

    // Quoted values for the two processes at n = 4.
    let quoted = [
        (BaselineKind::EdgeCover, 14.70),
        (BaselineKind::MeetEverybody, 11.00),
    ];
    for (kind, value) in quoted {
        let expected = expected_steps(kind, 4);
        if (expected - value).abs() > 0.005 {
            failures.push(format!(
                "{} closed form at n=4 is {expected:.4}, quoted {value}",
                kind.label()
            ));
        }
    }

    for kind in [BaselineKind::EdgeCover, BaselineKind::MeetEverybody] {
        for n in 3..=6 {
            let expected = expected_steps(kind, n);
            let (mean, _se) = sample_mean(kind, n, 100_000, 0xBA5E + n as u64);
            let rel = (mean - expected).abs() / expected;
            if rel > 0.02 {
                failures.push(format!(
                    "{} n={n}: sampled {mean:.3} vs {expected:.3}, off by {:.2}%",
                    kind.label(),
                    100.0 * rel
                ));
            }
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    if elapsed > 60.0 {
        failures.push(format!("calibration took {elapsed:.1}s, limit 60s"));
    }
    gate("baseline-calibration", &failures);
}

#[test]
fn exhaustive_small_graphs_prove_targets() {
    let started = Instant::now();
    let mut failures = Vec::new();

    let mut sweep = |entry: &CatalogEntry, property: Property| {
        for n in 2..=4 {
            match exhaustive_verify(&entry.spec, n, property) {
                Ok(report) if report.holds => {}
                Ok(report) => failures.push(format!(
                    "{} n={n} {}: {}",
                    entry.spec.name,
                    property.label(),
                    report.counterexample.as_deref().unwrap_or("violated")
                )),
                Err(e) => failures.push(format!(
                    "{} n={n} {}: sweep refused: {e}",
                    entry.spec.name,
                    property.label()
                )),
            }
        }
    };

    let star = star_transformer();
    sweep(&star, Property::FixedPointImpliesSpanningStar);
    sweep(&star, Property::ConnectivityPreserved);
    for entry in [
        online_cycle_elimination(),
        line_around_a_star(),
        line_transformer(),
    ] {
        sweep(&entry, Property::HaltImpliesSpanningLine);
        sweep(&entry, Property::ConnectivityPreserved);
    }

    let elapsed = started.elapsed().as_secs_f64();
    if elapsed > 600.0 {
        failures.push(format!("sweeps took {elapsed:.1}s, limit 600s"));
    }
    gate("exhaustive-small-graphs", &failures);
}

#[test]
fn random_runs_terminate_clean() {
    let families = [
        TopologyFamily::Clique,
        TopologyFamily::Ring,
        TopologyFamily::RandomConnected(0.3),
    ];
    let mut failures = Vec::new();

    for entry in catalog() {
        if entry.target == Target::TwoCyclePredicate {
            continue;
        }
        let stop = if entry.spec.has_halting_states() {
            StopWhen::Halted
        } else {
            StopWhen::FixedPoint
        };
        let want = match entry.target {
            Target::SpanningLine => "spanning_line",
            Target::SpanningStar => "spanning_star",
            Target::TwoCyclePredicate => unreachable!(),
        };

        let cases: Vec<(usize, usize, u64)> = (5..=16)
            .flat_map(|n| {
                (0..families.len()).flat_map(move |f| {
                    (0..1000u64).map(move |t| (n, f, ((n as u64) << 40) ^ ((f as u64) << 32) ^ t))
                })
            })
            .collect();

        let spec = &entry.spec;
        let mut batch: Vec<String> = cases
            .par_iter()
            .filter_map(|&(n, f, seed)| {
                let family = families[f];
                let cfg = seeded_initial(spec, n, family, seed).expect("size fits family");
                let mut monitors: Vec<Box<dyn Monitor>> =
                    vec![Box::new(ConnectivityMonitor::new())];
                let budget = entry.claimed_time.step_budget(n);
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
                let case = format!("{} n={n} {} seed={seed}", spec.name, family.label());
                if !report.violations.is_empty() {
                    return Some(format!(
                        "{case}: {} monitor violation(s)",
                        report.violations.len()
                    ));
                }
                if report.outcome == Outcome::Exhausted {
                    return Some(format!("{case}: no termination within {budget}"));
                }
                if report.topology.label() != want {
                    return Some(format!(
                        "{case}: recognizer saw {}, wanted {want}",
                        report.topology.label()
                    ));
                }
                None
            })
            .collect();
        failures.append(&mut batch);
    }
    gate("random-runs", &failures);
}

#[test]
fn scaling_constants_stay_flat() {
    let mut failures = Vec::new();
    let cases: [(CatalogEntry, &[usize]); 3] = [
        (line_around_a_star(), &[8, 16, 32, 64]),
        (line_transformer(), &[8, 12, 16, 24]),
        (online_cycle_elimination(), &[6, 10, 14]),
    ];

    for (entry, sizes) in cases {
        let name = entry.spec.name.clone();
        let report = estimate_runtime(&entry, TopologyFamily::Clique, sizes, 200, 0x5CA1E);
        if report.tainted {
            failures.push(format!("{name}: some trials ran out of budget"));
        }
        for s in &report.per_size {
            if s.violations > 0 {
                failures.push(format!("{name} n={}: {} violations", s.n, s.violations));
            }
        }
        match report.constant_ratio {
            Some(ratio) if ratio <= 2.0 => {}
            Some(ratio) => failures.push(format!(
                "{name}: normalized constants spread by {ratio:.3}, limit 2"
            )),
            None => failures.push(format!("{name}: no normalized constants")),
        }
        if name == "line-around-a-star" {
            for s in &report.per_size {
                let baseline = expected_steps(BaselineKind::EdgeCover, s.n);
                let ratio = s.mean / baseline;
                if !(0.25..=4.0).contains(&ratio) {
                    failures.push(format!(
                        "{name} n={}: mean {:.1} is {ratio:.2}x the edge-cover {baseline:.1}",
                        s.n, s.mean
                    ));
                }
            }
        }
    }
    gate("scaling-constants", &failures);
}

/// Every weakly connected arc subset on n nodes.
fn all_connected_digraphs(n: usize, q0: netcon::StateId) -> Vec<Configuration> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let arcs: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask >> i & 1 == 1)
            .map(|(_, &p)| p)
            .collect();
        if arcs.is_empty() {
            continue;
        }
        let cfg = Configuration::from_arcs(vec![q0; n], &arcs);
        if ActiveGraph::of(&cfg).count_components() == 1 {
            out.push(cfg);
        }
    }
    out
}

fn random_connected_digraph(n: usize, q0: netcon::StateId, rng: &mut ChaCha8Rng) -> Configuration {
    loop {
        let arcs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))
            .filter(|_| rng.gen_bool(0.5))
            .collect();
        if arcs.is_empty() {
            continue;
        }
        let cfg = Configuration::from_arcs(vec![q0; n], &arcs);
        if ActiveGraph::of(&cfg).count_components() == 1 {
            return cfg;
        }
    }
}

#[test]
fn two_cycle_outputs_stabilize_to_oracle() {
    const TOTAL: u64 = 1_000_000;
    const WINDOW: u64 = 100_000;
    let entry = stable_2cycle_detection();
    let spec = &entry.spec;

    let mut instances: Vec<(String, Configuration)> = Vec::new();
    for n in [2, 3] {
        for (i, cfg) in all_connected_digraphs(n, spec.q0).into_iter().enumerate() {
            instances.push((format!("n={n} exhaustive #{i}"), cfg));
        }
    }
    for n in [4, 5, 6] {
        let mut rng = ChaCha8Rng::seed_from_u64(0x2CC + n as u64);
        for i in 0..100 {
            let cfg = random_connected_digraph(n, spec.q0, &mut rng);
            instances.push((format!("n={n} random #{i}"), cfg));
        }
    }

    let failures: Vec<String> = instances
        .par_iter()
        .filter_map(|(label, start)| {
            let mut cfg = start.clone();
            let n = cfg.len();
            let oracle = has_directed_2cycle(&cfg);
            let mut rng = ChaCha8Rng::seed_from_u64(0xD1CE ^ label.len() as u64);
            let settled = |cfg: &Configuration, node: usize| {
                spec.output_bit(cfg.state(node)) == Some(oracle)
            };
            for step in 0..TOTAL {
                if step == TOTAL - WINDOW {
                    for v in 0..n {
                        if !settled(&cfg, v) {
                            return Some(format!(
                                "{label}: node {v} output wrong entering the window \
                                 (oracle {oracle})"
                            ));
                        }
                    }
                }
                let (u, v) = uniform_next(n, &mut rng);
                apply_interaction(spec, &mut cfg, u, v, &mut rng);
                if step >= TOTAL - WINDOW && (!settled(&cfg, u) || !settled(&cfg, v)) {
                    return Some(format!(
                        "{label}: output changed at step {step} (oracle {oracle})"
                    ));
                }
            }
            None
        })
        .collect();
    gate("two-cycle-stabilization", &failures);
}

#[test]
fn lifted_replay_splits_every_time() {
    let spec = naive_cycle_breaker();
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        for k in [2usize, 3] {
            let report = match replay_impossibility(&spec, &LiftSource::Triangle, k, seed, 100_000)
            {
                Ok(r) => r,
                Err(e) => {
                    failures.push(format!("seed={seed} k={k}: {e}"));
                    continue;
                }
            };
            if report.deactivation_step.is_none() {
                failures.push(format!("seed={seed} k={k}: source never cut an edge"));
                continue;
            }
            if !report.copies_agree {
                failures.push(format!(
                    "seed={seed} k={k}: copies diverged before the deactivation"
                ));
            }
            match report.verdict {
                LiftVerdict::Split { components } if components >= k => {}
                other => failures.push(format!(
                    "seed={seed} k={k}: wanted a split into >= {k}, got {other:?} \
                     ({} components)",
                    report.final_components
                )),
            }
        }
    }
    gate("lifted-replay", &failures);
}

#[test]
fn tm_decisions_match_direct_evaluation() {
    let parity = TMDescription::parse(include_str!("../fixtures/parity.tm")).expect("fixture");
    let product = TMDescription::parse(include_str!("../fixtures/product.tm")).expect("fixture");
    let families = [
        TopologyFamily::Clique,
        TopologyFamily::Ring,
        TopologyFamily::RandomConnected(0.3),
        TopologyFamily::Star,
        TopologyFamily::Line,
    ];
    let mut failures = Vec::new();

    let mut check = |tm: &TMDescription, multiset: &[char], want: Decision| {
        let n = multiset.len();
        for draw in 0..10u64 {
            let family = families[draw as usize % families.len()];
            let seed = 0x71AE ^ ((n as u64) << 16) ^ (draw << 8) ^ multiset.len() as u64;
            let mut inputs = multiset.to_vec();
            // a fresh permutation per draw; the decision must not care
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..inputs.len()).rev() {
                inputs.swap(i, rng.gen_range(0..=i));
            }
            match compute_predicate(tm, n, &inputs, family, seed) {
                Ok(report) => {
                    if report.decision == Decision::TapeExhausted {
                        failures.push(format!(
                            "{} n={n} {:?}: tape exhausted",
                            tm.name, inputs
                        ));
                    } else if report.decision != want {
                        failures.push(format!(
                            "{} n={n} {:?}: decided {}, oracle {}",
                            tm.name,
                            inputs,
                            report.decision.label(),
                            want.label()
                        ));
                    }
                }
                Err(e) => failures.push(format!("{} n={n} {:?}: {e}", tm.name, inputs)),
            }
        }
    };

    for n in 4..=10usize {
        for a_count in 0..=n {
            let mut multiset = vec!['b'; n];
            for slot in multiset.iter_mut().take(a_count) {
                *slot = 'a';
            }
            let want = if a_count % 2 == 0 {
                Decision::Accept
            } else {
                Decision::Reject
            };
            check(&parity, &multiset, want);
        }
    }

    for n in 4..=10usize {
        for a in 1..n {
            for b in 1..(n - a) {
                let c = n - a - b;
                let mut multiset = Vec::with_capacity(n);
                multiset.extend(std::iter::repeat('a').take(a));
                multiset.extend(std::iter::repeat('b').take(b));
                multiset.extend(std::iter::repeat('c').take(c));
                let want = if a * b == c {
                    Decision::Accept
                } else {
                    Decision::Reject
                };
                check(&product, &multiset, want);
            }
        }
    }
    gate("tm-pipeline", &failures);
}

#[test]
fn saved_traces_replay_bit_exact() {
    let families = [
        TopologyFamily::Clique,
        TopologyFamily::Ring,
        TopologyFamily::RandomConnected(0.3),
        TopologyFamily::Star,
        TopologyFamily::Line,
    ];
    let mut failures = Vec::new();

    fn check(
        failures: &mut Vec<String>,
        name: &str,
        initial: Configuration,
        recorded_final: &Configuration,
        trace: Trace,
        spec: &netcon::ProtocolSpec,
    ) {
        let text = trace.serialize();
        let parsed = match Trace::parse(&text) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("{name}: trace did not parse back: {e}"));
                return;
            }
        };
        let mut cfg = initial;
        for (i, e) in parsed.events.iter().enumerate() {
            if let Err(err) = apply_recorded(spec, &mut cfg, e.u, e.v, e.coin) {
                failures.push(format!("{name}: event {i} diverged: {err}"));
                return;
            }
        }
        if &cfg != recorded_final {
            failures.push(format!("{name}: replayed configuration differs"));
        }
    }

    for entry in catalog() {
        let spec = &entry.spec;
        if entry.target == Target::TwoCyclePredicate {
            for t in 0..50u64 {
                let n = 4 + (t % 3) as usize;
                let mut rng = ChaCha8Rng::seed_from_u64(0x7AC3 + t);
                let initial = random_connected_digraph(n, spec.q0, &mut rng);
                let (_, final_cfg, trace) = run(
                    spec,
                    initial.clone(),
                    Driver::Uniform { seed: t },
                    StopWhen::Steps,
                    3_000,
                    &mut [],
                    "digraph",
                    true,
                );
                let trace = trace.expect("recording was requested");
                check(
                    &mut failures,
                    &format!("{} trace {t}", spec.name),
                    initial,
                    &final_cfg,
                    trace,
                    spec,
                );
            }
            continue;
        }

        let stop = if spec.has_halting_states() {
            StopWhen::Halted
        } else {
            StopWhen::FixedPoint
        };
        for t in 0..50u64 {
            let n = 5 + (t % 6) as usize;
            let family = families[t as usize % families.len()];
            let initial = seeded_initial(spec, n, family, 0xF00D + t).expect("size fits");
            let (report, final_cfg, trace) = run(
                spec,
                initial.clone(),
                Driver::Uniform { seed: 0xF00D + t },
                stop,
                entry.claimed_time.step_budget(n),
                &mut [],
                &family.label(),
                true,
            );
            if report.outcome == Outcome::Exhausted {
                failures.push(format!("{} trace {t}: run was cut off", spec.name));
                continue;
            }
            let trace = trace.expect("recording was requested");
            check(
                &mut failures,
                &format!("{} trace {t}", spec.name),
                initial,
                &final_cfg,
                trace,
                spec,
            );
        }
    }
    gate("trace-replay", &failures);
}
