//! Run driver: executes a protocol under a selection source until a stop
//! condition holds, with passive observers and optional trace retention.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scheduler::{uniform_next, Provenance, Schedule, ScheduleError};
use crate::topology::ActiveGraph;
use crate::{apply_interaction, is_fixed_point, Configuration, InteractionEvent, ProtocolSpec};

/// Stop predicate, checked before every selection.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StopWhen {
    /// Every node is in a halting state.
    Halted,
    /// No selectable pair can change the configuration.
    FixedPoint,
    /// No predicate; the run consumes its whole budget (or script).
    Steps,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Outcome {
    Halted,
    FixedPoint,
    RanAllSteps,
    /// The budget (or script) ran out before the stop predicate held. The
    /// report withholds its step count rather than passing off the cutoff
    /// as a stopping time.
    Exhausted,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Violation {
    pub step: u64,
    pub message: String,
}

/// Passive observer of applied interactions. Observers never touch the run's
/// randomness, so a monitored run follows the exact trace of a bare one.
pub trait Monitor {
    fn observe(&mut self, step: u64, event: &InteractionEvent, after: &Configuration);
    fn violations(&self) -> &[Violation];
}

/// Flags every edge deactivation that increases the number of connected
/// components of the active graph.
#[derive(Default)]
pub struct ConnectivityMonitor {
    violations: Vec<Violation>,
}

impl ConnectivityMonitor {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Monitor for ConnectivityMonitor {
    fn observe(&mut self, step: u64, event: &InteractionEvent, after: &Configuration) {
        if event.deactivated_edge() && !connected_between(after, event.u, event.v) {
            self.violations.push(Violation {
                step,
                message: format!(
                    "deactivating ({}, {}) split the active graph",
                    event.u, event.v
                ),
            });
        }
    }

    fn violations(&self) -> &[Violation] {
        &self.violations
    }
}

/// Component-count phrasing of the same predicate, for callers that keep the
/// pre-step configuration around.
pub fn connectivity_violation(
    step: u64,
    event: &InteractionEvent,
    before: &Configuration,
    after: &Configuration,
) -> Option<Violation> {
    if event.deactivated_edge() && after.component_count() > before.component_count() {
        Some(Violation {
            step,
            message: format!(
                "deactivating ({}, {}) split the active graph",
                event.u, event.v
            ),
        })
    } else {
        None
    }
}

// A cut split the graph exactly when its endpoints ended up in different
// components, so the monitor checks reachability on the post-step state.
fn connected_between(cfg: &Configuration, u: usize, v: usize) -> bool {
    let n = cfg.len();
    let mut seen = vec![false; n];
    let mut stack = vec![u];
    seen[u] = true;
    while let Some(x) = stack.pop() {
        if x == v {
            return true;
        }
        for y in 0..n {
            if y != x && !seen[y] && (cfg.edge(x, y) || cfg.edge(y, x)) {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    false
}

/// Selection source for a run.
pub enum Driver<'a> {
    /// Fresh uniform scheduler seeded here; orientation coins come from the
    /// same stream.
    Uniform { seed: u64 },
    /// Fixed selection sequence; orientation coins still need their own seed.
    Scripted { schedule: &'a Schedule, coin_seed: u64 },
}

/// Recognizer verdicts on a final active graph.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TopologyClass {
    pub components: usize,
    pub spanning_line: bool,
    pub spanning_star: bool,
}

impl TopologyClass {
    pub fn of(cfg: &Configuration) -> Self {
        let g = ActiveGraph::of(cfg);
        TopologyClass {
            components: g.count_components(),
            spanning_line: g.is_spanning_line(),
            spanning_star: g.is_spanning_star(),
        }
    }

    /// Stable one-token label for CSV output.
    pub fn label(&self) -> String {
        if self.spanning_line {
            "spanning_line".into()
        } else if self.spanning_star {
            "spanning_star".into()
        } else if self.components == 1 {
            "connected".into()
        } else {
            format!("split:{}", self.components)
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub protocol: String,
    pub n: usize,
    /// Scheduler seed for uniform runs; scripted drives have none.
    pub seed: Option<u64>,
    pub family: String,
    pub outcome: Outcome,
    /// Selections consumed up to the stop condition; None when the run was
    /// cut off instead.
    pub steps: Option<u64>,
    pub violations: Vec<Violation>,
    pub topology: TopologyClass,
}

pub const CSV_HEADER: &str = "protocol,n,seed,family,steps,violations,topology_class";

impl RunReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.protocol,
            self.n,
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.family,
            self.steps
                .map(|s| s.to_string())
                .unwrap_or_else(|| "inf".into()),
            self.violations.len(),
            self.topology.label()
        )
    }
}

/// Retained run history: the selection sequence with per-step rule and coin
/// annotations, replayable step for step.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Trace {
    pub provenance: Provenance,
    pub events: Vec<TraceEvent>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TraceEvent {
    pub u: usize,
    pub v: usize,
    pub rule: Option<usize>,
    pub coin: Option<bool>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

impl Trace {
    /// The bare selection sequence, annotations dropped.
    pub fn schedule(&self) -> Schedule {
        Schedule {
            provenance: self.provenance.clone(),
            steps: self.events.iter().map(|e| (e.u, e.v)).collect(),
        }
    }

    /// Schedule line format under a `@trace` header, each step carrying the
    /// rule it fired and the orientation coin when one was drawn.
    pub fn serialize(&self) -> String {
        let mut out = format!("@trace {}\n", self.provenance.tag());
        for e in &self.events {
            out.push_str(&format!("step {} {}", e.u, e.v));
            if let Some(r) = e.rule {
                out.push_str(&format!(" rule {r}"));
            }
            if let Some(c) = e.coin {
                out.push_str(&format!(" coin {}", c as u8));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Trace, TraceError> {
        let syntax = |line: usize, msg: String| TraceError::Syntax { line, msg };
        let mut provenance = None;
        let mut events = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("@trace") {
                provenance = Some(Provenance::parse_tag(rest).ok_or_else(|| {
                    syntax(line, format!("unknown provenance {:?}", rest.trim()))
                })?);
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.first() != Some(&"step") || fields.len() < 3 {
                return Err(syntax(line, format!("expected `step u v ...`, got {trimmed:?}")));
            }
            let node = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| syntax(line, format!("bad node id {s:?}: {e}")))
            };
            let (u, v) = (node(fields[1])?, node(fields[2])?);
            if u == v {
                return Err(syntax(line, format!("self-pair ({u}, {v})")));
            }
            let mut rule = None;
            let mut coin = None;
            let mut rest = fields[3..].iter();
            while let Some(&key) = rest.next() {
                let val = rest
                    .next()
                    .ok_or_else(|| syntax(line, format!("dangling annotation {key:?}")))?;
                match key {
                    "rule" => {
                        rule = Some(val.parse::<usize>().map_err(|e| {
                            syntax(line, format!("bad rule index {val:?}: {e}"))
                        })?)
                    }
                    "coin" => {
                        coin = Some(match *val {
                            "0" => false,
                            "1" => true,
                            _ => return Err(syntax(line, format!("bad coin {val:?}"))),
                        })
                    }
                    _ => return Err(syntax(line, format!("unknown annotation {key:?}"))),
                }
            }
            events.push(TraceEvent { u, v, rule, coin });
        }
        Ok(Trace {
            provenance: provenance.ok_or_else(|| syntax(0, "missing @trace header".into()))?,
            events,
        })
    }
}

/// Drive one run to its stop condition. Steps count every selection,
/// effective or not. Returns the report, the final configuration, and the
/// trace when retention was requested.
#[allow(clippy::too_many_arguments)]
pub fn run(
    spec: &ProtocolSpec,
    mut cfg: Configuration,
    driver: Driver,
    stop: StopWhen,
    budget: u64,
    monitors: &mut [Box<dyn Monitor>],
    family: &str,
    record_trace: bool,
) -> (RunReport, Configuration, Option<Trace>) {
    let n = cfg.len();
    let (provenance, seed) = match &driver {
        Driver::Uniform { seed } => (Provenance::Random { seed: *seed }, Some(*seed)),
        Driver::Scripted { schedule, .. } => (schedule.provenance.clone(), None),
    };
    let mut rng = match &driver {
        Driver::Uniform { seed } => ChaCha8Rng::seed_from_u64(*seed),
        Driver::Scripted { coin_seed, .. } => ChaCha8Rng::seed_from_u64(*coin_seed),
    };
    let mut script = match &driver {
        Driver::Scripted { schedule, .. } => Some(schedule.steps.iter().copied()),
        Driver::Uniform { .. } => None,
    };

    let can_halt = spec.has_halting_states();
    let mut halted = cfg
        .states()
        .iter()
        .filter(|&&s| spec.is_halting(s))
        .count();
    // A fixed point can only begin at the start or right after an effective
    // step, so the scan is skipped while nothing changed.
    let mut recheck = true;
    let mut settled = false;
    let mut events = Vec::new();
    let mut steps_done: u64 = 0;

    let outcome = loop {
        match stop {
            StopWhen::Halted => {
                if can_halt && halted == n {
                    break Outcome::Halted;
                }
            }
            StopWhen::FixedPoint => {
                if recheck {
                    settled = is_fixed_point(spec, &cfg);
                    recheck = false;
                }
                if settled {
                    break Outcome::FixedPoint;
                }
            }
            StopWhen::Steps => {}
        }
        if steps_done == budget {
            break if stop == StopWhen::Steps {
                Outcome::RanAllSteps
            } else {
                Outcome::Exhausted
            };
        }
        let (u, v) = match &mut script {
            Some(it) => match it.next() {
                Some(pair) => pair,
                None => {
                    break if stop == StopWhen::Steps {
                        Outcome::RanAllSteps
                    } else {
                        Outcome::Exhausted
                    }
                }
            },
            None => uniform_next(n, &mut rng),
        };
        let ev = apply_interaction(spec, &mut cfg, u, v, &mut rng);
        steps_done += 1;
        if ev.effective() {
            recheck = true;
            // Halting states are inert, so nodes only ever enter them.
            for (b, a) in [(ev.before.0, ev.after.0), (ev.before.1, ev.after.1)] {
                if spec.is_halting(a) && !spec.is_halting(b) {
                    halted += 1;
                }
            }
        }
        for m in monitors.iter_mut() {
            m.observe(steps_done, &ev, &cfg);
        }
        if record_trace {
            events.push(TraceEvent {
                u,
                v,
                rule: ev.rule,
                coin: ev.coin,
            });
        }
    };

    let steps = match outcome {
        Outcome::Exhausted => None,
        _ => Some(steps_done),
    };
    let violations = monitors
        .iter()
        .flat_map(|m| m.violations().iter().cloned())
        .collect();
    let report = RunReport {
        protocol: spec.name.clone(),
        n,
        seed,
        family: family.to_string(),
        outcome,
        steps,
        violations,
        topology: TopologyClass::of(&cfg),
    };
    let trace = record_trace.then_some(Trace { provenance, events });
    (report, cfg, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{naive_cycle_breaker, online_cycle_elimination, star_transformer};
    use crate::scheduler::Schedule;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn budget_exhaustion_is_reported_not_truncated() {
        let entry = star_transformer();
        let spec = &entry.spec;
        let cfg = Configuration::clique(3, spec.q0);
        let (report, _, _) = run(
            spec,
            cfg,
            Driver::Uniform { seed: 5 },
            StopWhen::FixedPoint,
            0,
            &mut [],
            "clique",
            false,
        );
        assert_eq!(report.outcome, Outcome::Exhausted);
        assert_eq!(report.steps, None);
        assert!(report.csv_row().contains(",inf,"), "{}", report.csv_row());
    }

    #[test]
    fn settled_inputs_stop_at_zero_steps() {
        let entry = star_transformer();
        let spec = &entry.spec;
        let center = spec.state("l").unwrap();
        let leaf = spec.state("p").unwrap();
        let settled = Configuration::from_edges(
            vec![center, leaf, leaf, leaf],
            &[(0, 1), (0, 2), (0, 3)],
        );
        let (report, _, _) = run(
            spec,
            settled,
            Driver::Uniform { seed: 0 },
            StopWhen::FixedPoint,
            1000,
            &mut [],
            "star",
            false,
        );
        assert_eq!(report.outcome, Outcome::FixedPoint);
        assert_eq!(report.steps, Some(0));
        assert!(report.topology.spanning_star);

        let entry = online_cycle_elimination();
        let spec = &entry.spec;
        let halted = spec.state("qh").unwrap();
        let terminal = spec.state("hl").unwrap();
        let cfg = Configuration::from_edges(vec![terminal, halted], &[(0, 1)]);
        let (report, _, _) = run(
            spec,
            cfg,
            Driver::Uniform { seed: 0 },
            StopWhen::Halted,
            1000,
            &mut [],
            "line",
            false,
        );
        assert_eq!(report.outcome, Outcome::Halted);
        assert_eq!(report.steps, Some(0));
    }

    #[test]
    fn star_formation_reaches_a_fixed_point_with_the_report_agreeing() {
        let entry = star_transformer();
        let spec = &entry.spec;
        for seed in 0..10 {
            let cfg = Configuration::clique(5, spec.q0);
            let (report, final_cfg, _) = run(
                spec,
                cfg,
                Driver::Uniform { seed },
                StopWhen::FixedPoint,
                200_000,
                &mut [],
                "clique",
                false,
            );
            assert_eq!(report.outcome, Outcome::FixedPoint);
            assert!(report.topology.spanning_star, "seed {seed}");
            assert!(is_fixed_point(spec, &final_cfg));
            assert!(report.steps.unwrap() > 0);
        }
    }

    #[test]
    fn monitored_and_bare_runs_share_a_trace() {
        let entry = star_transformer();
        let spec = &entry.spec;
        let mut monitors: Vec<Box<dyn Monitor>> = vec![Box::new(ConnectivityMonitor::new())];
        let (bare_report, _, bare_trace) = run(
            spec,
            Configuration::clique(4, spec.q0),
            Driver::Uniform { seed: 11 },
            StopWhen::FixedPoint,
            100_000,
            &mut [],
            "clique",
            true,
        );
        let (watched_report, _, watched_trace) = run(
            spec,
            Configuration::clique(4, spec.q0),
            Driver::Uniform { seed: 11 },
            StopWhen::FixedPoint,
            100_000,
            &mut monitors,
            "clique",
            true,
        );
        assert_eq!(bare_trace, watched_trace);
        assert_eq!(bare_report.steps, watched_report.steps);
        assert!(watched_report.violations.is_empty());
    }

    #[test]
    fn bridge_cuts_trip_the_connectivity_monitor() {
        let spec = naive_cycle_breaker();
        // On a path every cut is a bridge cut; on a ring the one cut is safe.
        let mut tripped = false;
        for seed in 0..40 {
            let path = Configuration::from_edges(vec![spec.q0; 3], &[(0, 1), (1, 2)]);
            let mut monitors: Vec<Box<dyn Monitor>> =
                vec![Box::new(ConnectivityMonitor::new())];
            let (report, _, _) = run(
                &spec,
                path,
                Driver::Uniform { seed },
                StopWhen::Steps,
                60,
                &mut monitors,
                "line",
                false,
            );
            if !report.violations.is_empty() {
                tripped = true;
                assert!(report.topology.components > 1);
                break;
            }
        }
        assert!(tripped, "no path cut observed in 40 seeds");

        // On a triangle the only reachable cut removes a cycle edge: marks
        // land on one pair and every other pair keeps an unmarked node.
        for seed in 0..10 {
            let triangle = Configuration::clique(3, spec.q0);
            let mut monitors: Vec<Box<dyn Monitor>> =
                vec![Box::new(ConnectivityMonitor::new())];
            let (report, _, _) = run(
                &spec,
                triangle,
                Driver::Uniform { seed },
                StopWhen::Steps,
                500,
                &mut monitors,
                "ring",
                false,
            );
            assert!(report.violations.is_empty(), "seed {seed}");
        }
    }

    #[test]
    fn the_two_violation_phrasings_agree() {
        let spec = naive_cycle_breaker();
        for seed in 0..20 {
            let mut cfg = Configuration::from_edges(vec![spec.q0; 4], &[(0, 1), (1, 2), (2, 3)]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for step in 1..=80u64 {
                let before = cfg.clone();
                let (u, v) = uniform_next(4, &mut rng);
                let ev = apply_interaction(&spec, &mut cfg, u, v, &mut rng);
                let by_counts = connectivity_violation(step, &ev, &before, &cfg).is_some();
                let by_reach =
                    ev.deactivated_edge() && !connected_between(&cfg, ev.u, ev.v);
                assert_eq!(by_counts, by_reach, "seed {seed} step {step}");
            }
        }
    }

    #[test]
    fn scripted_drives_follow_the_script() {
        let entry = star_transformer();
        let spec = &entry.spec;
        let leader = spec.state("l").unwrap();
        let p = spec.state("p").unwrap();
        let mut cfg = Configuration::from_edges(vec![leader, p, p], &[(0, 1), (0, 2)]);
        cfg.set_edge(1, 2, true);
        // Deactivate 1-2 through the guarded rule, then stop.
        let schedule = Schedule::scripted(vec![(1, 2)]);
        let (report, final_cfg, _) = run(
            spec,
            cfg,
            Driver::Scripted { schedule: &schedule, coin_seed: 0 },
            StopWhen::Steps,
            10,
            &mut [],
            "scripted",
            false,
        );
        assert_eq!(report.outcome, Outcome::RanAllSteps);
        assert_eq!(report.steps, Some(1));
        assert_eq!(report.seed, None);
        assert!(!final_cfg.edge(1, 2));
        assert!(report.topology.spanning_star);
    }

    #[test]
    fn traces_round_trip_through_text() {
        let entry = star_transformer();
        let spec = &entry.spec;
        let (_, _, trace) = run(
            spec,
            Configuration::clique(4, spec.q0),
            Driver::Uniform { seed: 3 },
            StopWhen::FixedPoint,
            100_000,
            &mut [],
            "clique",
            true,
        );
        let trace = trace.unwrap();
        assert!(trace.events.iter().any(|e| e.coin.is_some()));
        let text = trace.serialize();
        assert_eq!(Trace::parse(&text).unwrap(), trace);
        assert_eq!(trace.schedule().steps.len(), trace.events.len());
        assert!(Trace::parse("step 0 1\n").is_err());
        assert!(Trace::parse("@trace scripted\nstep 0 1 coin 2\n").is_err());
        assert!(Trace::parse("@trace scripted\nstep 0 0\n").is_err());
    }
}
