//! Bundled protocol definitions.
//!
//! Every protocol ships as a plain-text rule table compiled into the binary,
//! so the tables stay inspectable data rather than code. The accessors pair
//! each parsed table with its published metadata; tests diff the tables
//! against frozen listings and re-derive the sensor requirements.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::topology::{generate_initial, TopologyError, TopologyFamily};
use crate::{parse_rules, Configuration, ProtocolSpec, StateId};

/// Shape the protocol is meant to converge on.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Target {
    SpanningLine,
    SpanningStar,
    TwoCyclePredicate,
}

/// Published running-time class, used for step budgets and for normalizing
/// measured means.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ClaimedTime {
    Quartic,
    QuadraticLog,
    Cubic,
    Stabilizing,
}

impl ClaimedTime {
    /// f(n) to divide measured means by; stabilizing protocols have none.
    pub fn normalizer(self, n: usize) -> Option<f64> {
        let n = n as f64;
        match self {
            ClaimedTime::Quartic => Some(n.powi(4)),
            ClaimedTime::QuadraticLog => Some(n * n * n.ln()),
            ClaimedTime::Cubic => Some(n.powi(3)),
            ClaimedTime::Stabilizing => None,
        }
    }

    /// Default step budget before a run is declared stuck.
    pub fn step_budget(self, n: usize) -> u64 {
        let n = n as u64;
        match self {
            ClaimedTime::Quartic => 50 * n * n * n * n,
            _ => 50 * n * n * n,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ClaimedTime::Quartic => "n^4",
            ClaimedTime::QuadraticLog => "n^2 log n",
            ClaimedTime::Cubic => "n^3",
            ClaimedTime::Stabilizing => "stabilizing",
        }
    }
}

pub struct CatalogEntry {
    pub spec: ProtocolSpec,
    pub requires_leader: bool,
    pub target: Target,
    pub claimed_time: ClaimedTime,
    pub preserves_connectivity: bool,
}

const ONLINE_CYCLE_ELIMINATION: &str = include_str!("../fixtures/online-cycle-elimination.rules");
const LINE_AROUND_A_STAR: &str = include_str!("../fixtures/line-around-a-star.rules");
const LINE_TRANSFORMER: &str = include_str!("../fixtures/line-transformer.rules");
const STAR_TRANSFORMER: &str = include_str!("../fixtures/star-transformer.rules");
const STABLE_2CYCLE_DETECTION: &str = include_str!("../fixtures/stable-2cycle-detection.rules");
const NAIVE_CYCLE_BREAKER: &str = include_str!("../fixtures/naive-cycle-breaker.rules");

fn parse(text: &str) -> ProtocolSpec {
    parse_rules(text).expect("bundled table is valid")
}

pub fn online_cycle_elimination() -> CatalogEntry {
    CatalogEntry {
        spec: parse(ONLINE_CYCLE_ELIMINATION),
        requires_leader: true,
        target: Target::SpanningLine,
        claimed_time: ClaimedTime::Quartic,
        preserves_connectivity: true,
    }
}

pub fn line_around_a_star() -> CatalogEntry {
    CatalogEntry {
        spec: parse(LINE_AROUND_A_STAR),
        requires_leader: true,
        target: Target::SpanningLine,
        claimed_time: ClaimedTime::QuadraticLog,
        preserves_connectivity: true,
    }
}

pub fn line_transformer() -> CatalogEntry {
    CatalogEntry {
        spec: parse(LINE_TRANSFORMER),
        requires_leader: false,
        target: Target::SpanningLine,
        claimed_time: ClaimedTime::Cubic,
        preserves_connectivity: true,
    }
}

pub fn star_transformer() -> CatalogEntry {
    CatalogEntry {
        spec: parse(STAR_TRANSFORMER),
        requires_leader: false,
        target: Target::SpanningStar,
        claimed_time: ClaimedTime::Stabilizing,
        preserves_connectivity: true,
    }
}

pub fn stable_2cycle_detection() -> CatalogEntry {
    CatalogEntry {
        spec: parse(STABLE_2CYCLE_DETECTION),
        requires_leader: false,
        target: Target::TwoCyclePredicate,
        claimed_time: ClaimedTime::Stabilizing,
        preserves_connectivity: true,
    }
}

/// Deliberately unsound cycle breaker used by the replay harness; not part
/// of the shipped catalog.
pub fn naive_cycle_breaker() -> ProtocolSpec {
    parse(NAIVE_CYCLE_BREAKER)
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        online_cycle_elimination(),
        line_around_a_star(),
        line_transformer(),
        star_transformer(),
        stable_2cycle_detection(),
    ]
}

pub fn by_name(name: &str) -> Option<CatalogEntry> {
    catalog().into_iter().find(|e| e.spec.name == name)
}

/// Initial node states for an n-node run: the leader state on node 0 when the
/// protocol uses one, the common initial state everywhere else.
pub fn initial_states(spec: &ProtocolSpec, n: usize) -> Vec<StateId> {
    let mut states = vec![spec.q0; n];
    if let Some(l) = spec.leader {
        states[0] = l;
    }
    states
}

/// Initial configuration for a seeded run. Topology draws come from their
/// own stream of `seed`, leaving the run's selection stream untouched, so a
/// family change never shifts the schedule randomness and vice versa.
pub fn seeded_initial(
    spec: &ProtocolSpec,
    n: usize,
    family: TopologyFamily,
    seed: u64,
) -> Result<Configuration, TopologyError> {
    let mut topo_rng = ChaCha8Rng::seed_from_u64(seed);
    topo_rng.set_stream(1);
    let mut cfg = generate_initial(n, family, spec.q0, &mut topo_rng)?;
    for (i, s) in initial_states(spec, n).into_iter().enumerate() {
        cfg.set_state(i, s);
    }
    Ok(cfg)
}
