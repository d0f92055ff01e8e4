//! Lifting a recorded cut onto chained-copy graphs. A protocol that cannot
//! see common neighbors resolves identically on a base graph and on k
//! chained copies driven through the mimic schedule, because the expansion
//! preserves every state, every degree class, and every recorded coin. When
//! the base run cuts the tracked cycle edge, each copy cuts its chain edge
//! and the copy ring falls apart, which is the disconnection witness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::protocols::initial_states;
use crate::scheduler::{mimic_to_family, uniform_next, Provenance, Schedule};
use crate::topology::{build_family_graph, ActiveGraph, FamilyGraph, TopologyError};
use crate::{apply_interaction, apply_recorded, Configuration, InteractionEvent, ProtocolSpec};

/// Base instance for a lifting experiment.
#[derive(Clone, Debug)]
pub enum LiftSource {
    /// Length-3 cycle; the tracked edge is whichever one the base run cuts.
    Triangle,
    /// Explicit connected base graph with a named non-bridge edge to track.
    Graph { base: ActiveGraph, edge: (usize, usize) },
}

#[derive(Clone, PartialEq, Debug)]
pub enum LiftVerdict {
    /// Copies stayed in lockstep and the lifted cut split the graph into
    /// this many components.
    Split { components: usize },
    /// The lifted run ended connected; the lifting argument does not apply
    /// to this protocol.
    StayedConnected,
    /// A copy resolved a step differently from the base run, so the lift
    /// proves nothing. Carries the 1-based base step and the reason.
    Inapplicable { block: u64, reason: String },
    /// The base run never cut the tracked edge within budget.
    NoDeactivation,
}

#[derive(Clone, Debug)]
pub struct ImpossibilityReport {
    pub protocol: String,
    pub k: usize,
    /// Oriented as selected by the cutting step; None when no cut happened.
    pub tracked_edge: Option<(usize, usize)>,
    /// 1-based base-run step that cut the tracked edge.
    pub deactivation_step: Option<u64>,
    /// Mimic blocks fully applied on the lifted graph.
    pub blocks_checked: u64,
    /// Copies held identical states, copy-local edges, and chain edges after
    /// every applied block.
    pub copies_agree: bool,
    pub final_components: usize,
    pub verdict: LiftVerdict,
    pub mimic: Schedule,
}

/// Drive the base instance with a seeded uniform scheduler until it cuts the
/// tracked edge, expand that history onto k chained copies, replay it with
/// the recorded coins, and report whether the copies stayed in lockstep and
/// what the final cut did to the lifted graph.
pub fn replay_impossibility(
    spec: &ProtocolSpec,
    source: &LiftSource,
    k: usize,
    seed: u64,
    budget: u64,
) -> Result<ImpossibilityReport, TopologyError> {
    assert!(
        !spec.sensors.common_neighbor,
        "the lift only preserves what a common-neighbor-blind protocol can see"
    );

    let (base, tracked) = match source {
        LiftSource::Triangle => (
            ActiveGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]),
            None,
        ),
        LiftSource::Graph { base, edge } => (base.clone(), Some(*edge)),
    };
    let bn = base.len();
    let base_states = initial_states(spec, bn);
    let mut cfg = Configuration::from_edges(base_states.clone(), &base.edges());

    // Base run, recording every selection and coin until the tracked cut.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut recorded: Vec<InteractionEvent> = Vec::new();
    let mut steps: Vec<(usize, usize)> = Vec::new();
    let mut cut_edge = None;
    for _ in 0..budget {
        let (u, v) = uniform_next(bn, &mut rng);
        let ev = apply_interaction(spec, &mut cfg, u, v, &mut rng);
        steps.push((u, v));
        recorded.push(ev);
        if ev.deactivated_edge() {
            let hit = match tracked {
                None => true,
                Some((a, b)) => (u.min(v), u.max(v)) == (a.min(b), a.max(b)),
            };
            if hit {
                cut_edge = Some((u, v));
                break;
            }
        }
    }

    let Some(removed) = cut_edge else {
        return Ok(ImpossibilityReport {
            protocol: spec.name.clone(),
            k,
            tracked_edge: None,
            deactivation_step: None,
            blocks_checked: 0,
            copies_agree: true,
            final_components: 1,
            verdict: LiftVerdict::NoDeactivation,
            mimic: Schedule::scripted(Vec::new()),
        });
    };
    let deactivation_step = Some(steps.len() as u64);

    let fam = build_family_graph(&base, removed, k)?;
    let base_schedule = Schedule {
        provenance: Provenance::Random { seed },
        steps,
    };
    let mimic = mimic_to_family(&base_schedule, &fam);

    // Lifted run: every copy starts from the base initial states.
    let mut lifted_states = Vec::with_capacity(k * bn);
    for _ in 0..k {
        lifted_states.extend(base_states.iter().cloned());
    }
    let mut lcfg = Configuration::from_edges(lifted_states, &fam.graph.edges());

    let mut copies_agree = true;
    let mut blocks_checked = 0u64;
    let mut failure = None;
    'blocks: for (bi, ev) in recorded.iter().enumerate() {
        for &(x, y) in &mimic.steps[bi * k..(bi + 1) * k] {
            let lifted = match apply_recorded(spec, &mut lcfg, x, y, ev.coin) {
                Ok(l) => l,
                Err(div) => {
                    failure = Some((bi as u64 + 1, div.to_string()));
                    break 'blocks;
                }
            };
            if lifted.rule != ev.rule {
                failure = Some((
                    bi as u64 + 1,
                    format!(
                        "pair ({x}, {y}) resolved rule {:?}, base step resolved {:?}",
                        lifted.rule, ev.rule
                    ),
                ));
                break 'blocks;
            }
        }
        blocks_checked += 1;
        copies_agree &= copies_in_lockstep(&lcfg, &fam);
    }

    let final_components = lcfg.component_count();
    let verdict = match failure {
        Some((block, reason)) => LiftVerdict::Inapplicable { block, reason },
        None if final_components > 1 => LiftVerdict::Split {
            components: final_components,
        },
        None => LiftVerdict::StayedConnected,
    };
    Ok(ImpossibilityReport {
        protocol: spec.name.clone(),
        k,
        tracked_edge: Some(removed),
        deactivation_step,
        blocks_checked,
        copies_agree,
        final_components,
        verdict,
        mimic,
    })
}

/// All copies identical: states, copy-local edges, and the chain edges.
pub fn copies_in_lockstep(lcfg: &Configuration, fam: &FamilyGraph) -> bool {
    let bn = fam.base.len();
    let (ri, rj) = fam.removed_edge;
    let chain0 = lcfg.edge(fam.node(0, ri), fam.node(1 % fam.k, rj));
    for h in 1..fam.k {
        for i in 0..bn {
            if lcfg.state(fam.node(h, i)) != lcfg.state(fam.node(0, i)) {
                return false;
            }
        }
        for i in 0..bn {
            for j in (i + 1)..bn {
                if (i, j) == (ri.min(rj), ri.max(rj)) {
                    continue;
                }
                if lcfg.edge(fam.node(h, i), fam.node(h, j))
                    != lcfg.edge(fam.node(0, i), fam.node(0, j))
                {
                    return false;
                }
            }
        }
        if lcfg.edge(fam.node(h, ri), fam.node((h + 1) % fam.k, rj)) != chain0 {
            return false;
        }
    }
    true
}
