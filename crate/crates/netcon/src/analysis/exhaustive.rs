//! Exhaustive reachability checking on small instances: every connected
//! labeled graph of the requested size, every leader placement, and both
//! branches of every orientation coin. Properties hold only if they hold at
//! every reachable configuration.

use std::collections::{HashSet, VecDeque};

use thiserror::Error;

use crate::topology::{connected_graphs, ActiveGraph};
use crate::{branch_outcomes, is_fixed_point, is_halted, Configuration, ProtocolSpec, StateId};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Property {
    /// Whenever every node has halted, the active graph is a spanning line.
    HaltImpliesSpanningLine,
    /// Whenever no pair can act, the active graph is a spanning star.
    FixedPointImpliesSpanningStar,
    /// The active graph is connected at every reachable configuration.
    ConnectivityPreserved,
}

impl Property {
    pub fn label(self) -> &'static str {
        match self {
            Property::HaltImpliesSpanningLine => "halt_implies_spanning_line",
            Property::FixedPointImpliesSpanningStar => "fixed_point_implies_spanning_star",
            Property::ConnectivityPreserved => "connectivity_preserved",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub protocol: String,
    pub n: usize,
    pub property: Property,
    /// Distinct starting configurations seeded into the search.
    pub initials: usize,
    /// Distinct configurations reached.
    pub visited: usize,
    pub holds: bool,
    /// Human-readable render of the first violating configuration.
    pub counterexample: Option<String>,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("about {estimate:.2e} possible configurations at n = {n}; enumeration refused")]
    TooLarge { n: usize, estimate: f64 },
    #[error("reachable set passed {visited} configurations with {frontier} still open; aborting")]
    Blowup { visited: usize, frontier: usize },
}

const ESTIMATE_CAP: f64 = 5e8;
const VISITED_CAP: usize = 5_000_000;

/// Breadth-first sweep of everything the protocol can reach from every
/// connected starting graph of size n, checking the property everywhere.
/// Stops at the first violation.
pub fn exhaustive_verify(
    spec: &ProtocolSpec,
    n: usize,
    property: Property,
) -> Result<SweepReport, SweepError> {
    assert!(
        !spec.directed,
        "the sweep enumerates undirected configurations"
    );
    assert!(n >= 2);
    let q = spec.state_count() as f64;
    let pairs = n * (n - 1) / 2;
    let estimate = q.powi(n as i32) * (pairs as f64).exp2();
    if estimate > ESTIMATE_CAP {
        return Err(SweepError::TooLarge { n, estimate });
    }

    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut queue: VecDeque<Configuration> = VecDeque::new();
    let mut initials = 0;
    let admit = |cfg: Configuration,
                     seen: &mut HashSet<Vec<u8>>,
                     queue: &mut VecDeque<Configuration>|
     -> Option<String> {
        if !seen.insert(encode(&cfg)) {
            return None;
        }
        let bad = violates(spec, &cfg, property).then(|| render(spec, &cfg));
        queue.push_back(cfg);
        bad
    };

    let report = |seen: &HashSet<Vec<u8>>, initials, holds, counterexample| SweepReport {
        protocol: spec.name.clone(),
        n,
        property,
        initials,
        visited: seen.len(),
        holds,
        counterexample,
    };

    for graph in connected_graphs(n) {
        for states in starting_states(spec, n) {
            initials += 1;
            let cfg = Configuration::from_edges(states, &graph.edges());
            if let Some(bad) = admit(cfg, &mut seen, &mut queue) {
                return Ok(report(&seen, initials, false, Some(bad)));
            }
        }
    }

    while let Some(cfg) = queue.pop_front() {
        if seen.len() > VISITED_CAP {
            return Err(SweepError::Blowup {
                visited: seen.len(),
                frontier: queue.len(),
            });
        }
        for u in 0..n {
            for v in (u + 1)..n {
                let cur = (cfg.state(u), cfg.state(v), cfg.edge(u, v));
                for out in branch_outcomes(spec, &cfg, u, v) {
                    if out == cur {
                        continue;
                    }
                    let mut next = cfg.clone();
                    next.set_state(u, out.0);
                    next.set_state(v, out.1);
                    next.set_edge(u, v, out.2);
                    if let Some(bad) = admit(next, &mut seen, &mut queue) {
                        return Ok(report(&seen, initials, false, Some(bad)));
                    }
                }
            }
        }
    }

    Ok(report(&seen, initials, true, None))
}

// All-q0 states, with the leader tried at every position when one exists.
fn starting_states(spec: &ProtocolSpec, n: usize) -> Vec<Vec<StateId>> {
    match spec.leader {
        None => vec![vec![spec.q0; n]],
        Some(l) => (0..n)
            .map(|pos| {
                let mut states = vec![spec.q0; n];
                states[pos] = l;
                states
            })
            .collect(),
    }
}

fn violates(spec: &ProtocolSpec, cfg: &Configuration, property: Property) -> bool {
    match property {
        Property::ConnectivityPreserved => !cfg.is_connected(),
        Property::HaltImpliesSpanningLine => {
            is_halted(spec, cfg) && !ActiveGraph::of(cfg).is_spanning_line()
        }
        Property::FixedPointImpliesSpanningStar => {
            is_fixed_point(spec, cfg) && !ActiveGraph::of(cfg).is_spanning_star()
        }
    }
}

fn encode(cfg: &Configuration) -> Vec<u8> {
    let n = cfg.len();
    let mut key = Vec::with_capacity(n + (n * n + 7) / 8);
    for &s in cfg.states() {
        debug_assert!(s.0 < 256);
        key.push(s.0 as u8);
    }
    let mut bits = 0u8;
    let mut filled = 0;
    for u in 0..n {
        for v in (u + 1)..n {
            bits = (bits << 1) | cfg.edge(u, v) as u8;
            filled += 1;
            if filled == 8 {
                key.push(bits);
                bits = 0;
                filled = 0;
            }
        }
    }
    if filled > 0 {
        key.push(bits);
    }
    key
}

fn render(spec: &ProtocolSpec, cfg: &Configuration) -> String {
    let states: Vec<&str> = cfg.states().iter().map(|&s| spec.state_name(s)).collect();
    let edges: Vec<String> = cfg
        .active_edges()
        .iter()
        .map(|(u, v)| format!("({u},{v})"))
        .collect();
    format!("states [{}] edges [{}]", states.join(" "), edges.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{
        line_around_a_star, line_transformer, naive_cycle_breaker, online_cycle_elimination,
        star_transformer, stable_2cycle_detection,
    };

    #[test]
    fn star_fixed_points_on_three_nodes_are_stars() {
        let entry = star_transformer();
        let report =
            exhaustive_verify(&entry.spec, 3, Property::FixedPointImpliesSpanningStar).unwrap();
        assert!(report.holds, "{:?}", report.counterexample);
        assert!(report.visited > report.initials);
    }

    #[test]
    fn line_formers_only_halt_on_spanning_lines_at_three_nodes() {
        for entry in [
            online_cycle_elimination(),
            line_around_a_star(),
            line_transformer(),
        ] {
            let report =
                exhaustive_verify(&entry.spec, 3, Property::HaltImpliesSpanningLine).unwrap();
            assert!(
                report.holds,
                "{}: {:?}",
                entry.spec.name, report.counterexample
            );
        }
    }

    #[test]
    fn the_catalog_preserves_connectivity_at_three_nodes() {
        for entry in [
            online_cycle_elimination(),
            line_around_a_star(),
            line_transformer(),
            star_transformer(),
        ] {
            let report =
                exhaustive_verify(&entry.spec, 3, Property::ConnectivityPreserved).unwrap();
            assert!(
                report.holds,
                "{}: {:?}",
                entry.spec.name, report.counterexample
            );
        }
    }

    #[test]
    fn the_blind_breaker_is_caught_cutting_bridges() {
        let spec = naive_cycle_breaker();
        let report = exhaustive_verify(&spec, 3, Property::ConnectivityPreserved).unwrap();
        assert!(!report.holds);
        let bad = report.counterexample.unwrap();
        assert!(bad.contains("states"), "{bad}");
    }

    #[test]
    fn leader_protocols_seed_every_placement() {
        let entry = online_cycle_elimination();
        let report = exhaustive_verify(&entry.spec, 3, Property::ConnectivityPreserved).unwrap();
        // 4 connected labeled graphs on 3 nodes, 3 leader placements each.
        assert_eq!(report.initials, 12);
    }

    #[test]
    fn oversized_sweeps_are_refused_with_an_estimate() {
        let entry = online_cycle_elimination();
        match exhaustive_verify(&entry.spec, 5, Property::ConnectivityPreserved) {
            Err(SweepError::TooLarge { n, estimate }) => {
                assert_eq!(n, 5);
                assert!(estimate > ESTIMATE_CAP);
            }
            other => panic!("expected a size refusal, got {other:?}"),
        }
    }

    #[test]
    #[should_panic(expected = "undirected")]
    fn directed_tables_are_rejected() {
        let entry = stable_2cycle_detection();
        let _ = exhaustive_verify(&entry.spec, 3, Property::ConnectivityPreserved);
    }
}
