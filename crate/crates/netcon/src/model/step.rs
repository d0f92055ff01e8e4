//! Interaction semantics: context sampling, rule resolution, and application
//! of one scheduled interaction.

use rand::Rng;
use thiserror::Error;

use crate::model::config::{Configuration, EdgeKind};
use crate::model::spec::{DegreeClass, ProtocolSpec, StateId};

/// Local context of a selected pair, sampled before any rule fires. Degrees
/// count active edges including the pair's own edge when active.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct InteractionContext {
    pub deg_u: DegreeClass,
    pub deg_v: DegreeClass,
    pub cnd: bool,
    pub edge: bool,
}

pub fn observe_context(cfg: &Configuration, u: usize, v: usize) -> InteractionContext {
    InteractionContext {
        deg_u: DegreeClass::of(cfg.degree(u)),
        deg_v: DegreeClass::of(cfg.degree(v)),
        cnd: cfg.common_neighbor(u, v),
        edge: cfg.edge(u, v),
    }
}

/// What one scheduled interaction did. `before == after` means the selection
/// was ineffective; such steps still count towards running time.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct InteractionEvent {
    pub u: usize,
    pub v: usize,
    pub rule: Option<usize>,
    /// Recorded orientation toss for a symmetric match: `false` put u in the
    /// rule's first slot.
    pub coin: Option<bool>,
    pub before: (StateId, StateId, bool),
    pub after: (StateId, StateId, bool),
}

impl InteractionEvent {
    pub fn effective(&self) -> bool {
        self.before != self.after
    }

    pub fn deactivated_edge(&self) -> bool {
        self.before.2 && !self.after.2
    }
}

#[derive(Error, Debug)]
pub enum ReplayDivergence {
    #[error("recorded coin for pair ({0}, {1}) but resolution is deterministic")]
    UnexpectedCoin(usize, usize),
    #[error("pair ({0}, {1}) resolves by coin but none was recorded")]
    MissingCoin(usize, usize),
}

enum Resolution {
    NoMatch,
    Unique {
        rule: usize,
        out: (StateId, StateId, bool),
    },
    /// Both orientations of one rule admit with different outcomes; the coin
    /// picks. Index 0 holds the outcome with u in the first slot.
    Coin {
        rule: usize,
        outs: [(StateId, StateId, bool); 2],
    },
}

fn resolve(spec: &ProtocolSpec, cfg: &Configuration, u: usize, v: usize, ctx: &InteractionContext) -> Resolution {
    let (qu, qv) = (cfg.state(u), cfg.state(v));
    let mut first: Option<(usize, bool, (StateId, StateId, bool))> = None;
    for &(ri, swapped) in spec.candidates(qu, qv, ctx.edge) {
        let rule = &spec.rules[ri];
        let (ga, gb) = if swapped {
            (ctx.deg_v, ctx.deg_u)
        } else {
            (ctx.deg_u, ctx.deg_v)
        };
        if !rule.guard.admits(ga, gb, ctx.cnd) {
            continue;
        }
        let out = if swapped {
            (rule.rhs.1, rule.rhs.0, rule.rhs_edge(ctx.edge))
        } else {
            (rule.rhs.0, rule.rhs.1, rule.rhs_edge(ctx.edge))
        };
        match first {
            None => first = Some((ri, swapped, out)),
            Some((pi, pswapped, prev)) => {
                if prev == out {
                    continue;
                }
                // Table validation leaves exactly one shape of double match:
                // the same symmetric rule in both orientations.
                debug_assert!(pi == ri && qu == qv && pswapped != swapped);
                let mut outs = [prev, out];
                if pswapped {
                    outs.swap(0, 1);
                }
                return Resolution::Coin { rule: ri, outs };
            }
        }
    }
    match first {
        None => Resolution::NoMatch,
        Some((ri, _, out)) => Resolution::Unique { rule: ri, out },
    }
}

fn finish(cfg: &mut Configuration, u: usize, v: usize, ctx: &InteractionContext, rule: Option<usize>, coin: Option<bool>, out: (StateId, StateId, bool)) -> InteractionEvent {
    let before = (cfg.state(u), cfg.state(v), ctx.edge);
    cfg.set_state(u, out.0);
    cfg.set_state(v, out.1);
    cfg.set_edge(u, v, out.2);
    InteractionEvent {
        u,
        v,
        rule,
        coin,
        before,
        after: out,
    }
}

fn no_op(cfg: &Configuration, u: usize, v: usize, ctx: &InteractionContext) -> InteractionEvent {
    let cur = (cfg.state(u), cfg.state(v), ctx.edge);
    InteractionEvent {
        u,
        v,
        rule: None,
        coin: None,
        before: cur,
        after: cur,
    }
}

/// Run one interaction on the selected pair, drawing the orientation coin
/// from `rng` when resolution is symmetric.
pub fn apply_interaction<R: Rng>(
    spec: &ProtocolSpec,
    cfg: &mut Configuration,
    u: usize,
    v: usize,
    rng: &mut R,
) -> InteractionEvent {
    let ctx = observe_context(cfg, u, v);
    match resolve(spec, cfg, u, v, &ctx) {
        Resolution::NoMatch => no_op(cfg, u, v, &ctx),
        Resolution::Unique { rule, out } => finish(cfg, u, v, &ctx, Some(rule), None, out),
        Resolution::Coin { rule, outs } => {
            let c = rng.gen::<bool>();
            finish(cfg, u, v, &ctx, Some(rule), Some(c), outs[c as usize])
        }
    }
}

/// Replay one interaction with a previously recorded coin, verifying that
/// the resolution still needs exactly the recorded randomness.
pub fn apply_recorded(
    spec: &ProtocolSpec,
    cfg: &mut Configuration,
    u: usize,
    v: usize,
    coin: Option<bool>,
) -> Result<InteractionEvent, ReplayDivergence> {
    let ctx = observe_context(cfg, u, v);
    match resolve(spec, cfg, u, v, &ctx) {
        Resolution::NoMatch => match coin {
            Some(_) => Err(ReplayDivergence::UnexpectedCoin(u, v)),
            None => Ok(no_op(cfg, u, v, &ctx)),
        },
        Resolution::Unique { rule, out } => match coin {
            Some(_) => Err(ReplayDivergence::UnexpectedCoin(u, v)),
            None => Ok(finish(cfg, u, v, &ctx, Some(rule), None, out)),
        },
        Resolution::Coin { rule, outs } => match coin {
            None => Err(ReplayDivergence::MissingCoin(u, v)),
            Some(c) => Ok(finish(cfg, u, v, &ctx, Some(rule), Some(c), outs[c as usize])),
        },
    }
}

/// Every outcome the selected pair can produce: empty when no rule admits,
/// one entry when resolution is deterministic, both orientations when a coin
/// would decide. Exhaustive search expands each entry as its own branch.
pub fn branch_outcomes(
    spec: &ProtocolSpec,
    cfg: &Configuration,
    u: usize,
    v: usize,
) -> Vec<(StateId, StateId, bool)> {
    let ctx = observe_context(cfg, u, v);
    match resolve(spec, cfg, u, v, &ctx) {
        Resolution::NoMatch => Vec::new(),
        Resolution::Unique { out, .. } => vec![out],
        Resolution::Coin { outs, .. } => outs.to_vec(),
    }
}

/// All nodes in halting states. Vacuously false for protocols without any.
pub fn is_halted(spec: &ProtocolSpec, cfg: &Configuration) -> bool {
    spec.has_halting_states() && cfg.states().iter().all(|&s| spec.is_halting(s))
}

/// No selectable pair can change anything in the current configuration.
pub fn is_fixed_point(spec: &ProtocolSpec, cfg: &Configuration) -> bool {
    let n = cfg.len();
    let ordered = cfg.kind() == EdgeKind::Directed;
    for u in 0..n {
        for v in 0..n {
            if v <= u && !ordered {
                continue;
            }
            if v == u {
                continue;
            }
            if spec.pair_inert(cfg.state(u), cfg.state(v)) {
                continue;
            }
            let ctx = observe_context(cfg, u, v);
            let cur = (cfg.state(u), cfg.state(v), ctx.edge);
            match resolve(spec, cfg, u, v, &ctx) {
                Resolution::NoMatch => {}
                Resolution::Unique { out, .. } => {
                    if out != cur {
                        return false;
                    }
                }
                Resolution::Coin { outs, .. } => {
                    if outs[0] != cur || outs[1] != cur {
                        return false;
                    }
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spec::{Guard, Rule};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn star_like() -> ProtocolSpec {
        let states: Vec<String> = ["l", "p"].iter().map(|s| s.to_string()).collect();
        let l = StateId(0);
        let p = StateId(1);
        let rules = vec![
            Rule {
                lhs: (l, l, None),
                guard: Guard::default(),
                rhs: (l, p, Some(true)),
                derived: false,
            },
            Rule {
                lhs: (l, p, Some(false)),
                guard: Guard::default(),
                rhs: (l, p, Some(true)),
                derived: false,
            },
            Rule {
                lhs: (p, p, Some(true)),
                guard: Guard {
                    cnd: Some(true),
                    ..Guard::default()
                },
                rhs: (p, p, Some(false)),
                derived: false,
            },
        ];
        ProtocolSpec::build("star-like", states, "l", Some("l"), &[], None, rules, false).unwrap()
    }

    #[test]
    fn coin_decides_orientation_on_equal_states() {
        let spec = star_like();
        let l = spec.state("l").unwrap();
        let p = spec.state("p").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut saw = [false, false];
        for _ in 0..64 {
            let mut cfg = Configuration::clique(3, l);
            let ev = apply_interaction(&spec, &mut cfg, 0, 1, &mut rng);
            let c = ev.coin.expect("symmetric match needs a coin");
            saw[c as usize] = true;
            if c {
                assert_eq!((cfg.state(0), cfg.state(1)), (p, l));
            } else {
                assert_eq!((cfg.state(0), cfg.state(1)), (l, p));
            }
            assert!(cfg.edge(0, 1));
        }
        assert!(saw[0] && saw[1]);
    }

    #[test]
    fn guarded_rule_reads_presampled_context() {
        let spec = star_like();
        let l = spec.state("l").unwrap();
        let p = spec.state("p").unwrap();
        // triangle: p-p edge has the leader as a common neighbor
        let mut cfg = Configuration::clique(3, p);
        cfg.set_state(0, l);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ev = apply_interaction(&spec, &mut cfg, 1, 2, &mut rng);
        assert!(ev.effective());
        assert!(ev.deactivated_edge());
        assert!(ev.coin.is_none());
        // without the common neighbor the guard blocks the rule
        let mut path = Configuration::from_edges(vec![p, p, p], &[(0, 1), (1, 2)]);
        path.set_state(0, l);
        let ev = apply_interaction(&spec, &mut path, 1, 2, &mut rng);
        assert!(!ev.effective());
        assert_eq!(ev.rule, None);
    }

    #[test]
    fn ineffective_selection_is_reported_not_skipped() {
        let spec = star_like();
        let l = spec.state("l").unwrap();
        let p = spec.state("p").unwrap();
        let mut cfg = Configuration::from_edges(vec![l, p], &[(0, 1)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // (l, p) on an active edge matches no rule
        let ev = apply_interaction(&spec, &mut cfg, 0, 1, &mut rng);
        assert!(!ev.effective());
        assert_eq!(ev.before, ev.after);
    }

    #[test]
    fn fixed_point_detection_on_a_settled_star() {
        let spec = star_like();
        let l = spec.state("l").unwrap();
        let p = spec.state("p").unwrap();
        let mut cfg = Configuration::from_edges(
            vec![l, p, p, p],
            &[(0, 1), (0, 2), (0, 3)],
        );
        assert!(is_fixed_point(&spec, &cfg));
        cfg.set_edge(1, 2, true);
        assert!(!is_fixed_point(&spec, &cfg));
    }

    #[test]
    fn replay_rejects_coin_mismatches() {
        let spec = star_like();
        let l = spec.state("l").unwrap();
        let mut cfg = Configuration::clique(2, l);
        assert!(matches!(
            apply_recorded(&spec, &mut cfg, 0, 1, None),
            Err(ReplayDivergence::MissingCoin(0, 1))
        ));
        let ev = apply_recorded(&spec, &mut cfg, 0, 1, Some(true)).unwrap();
        assert!(ev.effective());
        // now deterministic: l meets p on an inactive edge after a cut
        cfg.set_edge(0, 1, false);
        assert!(matches!(
            apply_recorded(&spec, &mut cfg, 0, 1, Some(false)),
            Err(ReplayDivergence::UnexpectedCoin(0, 1))
        ));
        let ev = apply_recorded(&spec, &mut cfg, 0, 1, None).unwrap();
        assert!(ev.effective());
        assert!(cfg.edge(0, 1));
    }

    #[test]
    fn halting_requires_declared_states() {
        let spec = star_like();
        let l = spec.state("l").unwrap();
        let cfg = Configuration::clique(2, l);
        assert!(!is_halted(&spec, &cfg));
    }
}
