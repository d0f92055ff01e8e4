//! Protocol descriptions: interned state sets, guarded rewrite rules, and the
//! load-time checks that keep a rule table unambiguous.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Index into a protocol's state table.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u16);

impl fmt::Debug for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Active-degree class as seen by the degree sensor. Nodes can distinguish
/// degrees 0, 1, 2; everything above collapses to `ThreePlus`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum DegreeClass {
    Zero,
    One,
    Two,
    ThreePlus,
}

impl DegreeClass {
    pub fn of(degree: usize) -> Self {
        match degree {
            0 => DegreeClass::Zero,
            1 => DegreeClass::One,
            2 => DegreeClass::Two,
            _ => DegreeClass::ThreePlus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DegreeClass::Zero => "0",
            DegreeClass::One => "1",
            DegreeClass::Two => "2",
            DegreeClass::ThreePlus => "3+",
        }
    }
}

/// Optional constraints on the local context of an interaction. `deg_a` and
/// `deg_b` are positional: they bind to whichever concrete node matched the
/// corresponding left-hand-side slot, in either orientation.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Guard {
    pub deg_a: Option<DegreeClass>,
    pub deg_b: Option<DegreeClass>,
    pub cnd: Option<bool>,
}

impl Guard {
    pub fn is_trivial(&self) -> bool {
        self.deg_a.is_none() && self.deg_b.is_none() && self.cnd.is_none()
    }

    pub fn admits(&self, deg_a: DegreeClass, deg_b: DegreeClass, cnd: bool) -> bool {
        self.deg_a.map_or(true, |d| d == deg_a)
            && self.deg_b.map_or(true, |d| d == deg_b)
            && self.cnd.map_or(true, |c| c == cnd)
    }
}

/// One rewrite rule. A `None` edge on the left-hand side matches either edge
/// state; a `None` edge on the right-hand side preserves it. Rules of
/// undirected protocols are matched in both orientations, directed ones only
/// as written (first slot = initiator).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rule {
    pub lhs: (StateId, StateId, Option<bool>),
    pub guard: Guard,
    pub rhs: (StateId, StateId, Option<bool>),
    /// Marked in the fixture as not forced by the source description.
    pub derived: bool,
}

impl Rule {
    pub fn rhs_edge(&self, lhs_edge: bool) -> bool {
        self.rhs.2.unwrap_or(lhs_edge)
    }

    /// True if applying the rule to a pair in the given concrete edge state
    /// changes nothing.
    pub fn is_identity_on(&self, edge: bool) -> bool {
        self.lhs.0 == self.rhs.0 && self.lhs.1 == self.rhs.1 && self.rhs_edge(edge) == edge
    }
}

/// Which local sensors a rule table actually needs: a degree-1 detector, a
/// degree-2 detector, and the common-neighbor bit. Derived from behavior, not
/// from guard spelling: a sensor counts only if some reachable dispatch entry
/// produces different outcomes when that reading flips, so complementary
/// guards that funnel into the same right-hand side cost nothing.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct SensorSet {
    pub degree_one: bool,
    pub degree_two: bool,
    pub common_neighbor: bool,
}

/// Behavioral effect of one dispatch entry under a fixed context: nothing,
/// one outcome, or a fair choice between two (stored sorted).
#[derive(Clone, PartialEq, Eq, Debug)]
enum Effect {
    Identity,
    Unique((StateId, StateId, bool)),
    Choice((StateId, StateId, bool), (StateId, StateId, bool)),
}

#[derive(Error, Debug)]
pub enum SpecError {
    #[error("protocol `{0}` declares no states")]
    EmptyStateSet(String),
    #[error("unknown state `{0}` referenced")]
    UnknownState(String),
    #[error("duplicate state name `{0}`")]
    DuplicateState(String),
    #[error(
        "ambiguous rule table: states ({a}, {b}) edge {edge} context deg=({da},{db}) cnd={cnd} \
         match rules {r1} and {r2} with different outcomes"
    )]
    AmbiguousRuleTable {
        a: String,
        b: String,
        edge: bool,
        da: &'static str,
        db: &'static str,
        cnd: bool,
        r1: usize,
        r2: usize,
    },
    #[error("rule {0} rewrites halting state `{1}`")]
    EffectiveHaltingRule(usize, String),
    #[error("rules over directed graphs must be guard-free (rule {0})")]
    DirectedGuard(usize),
}

/// A complete protocol description: interned states, rule table, initial and
/// halting conventions, and the compiled dispatch used by the stepper.
#[derive(Clone, Debug)]
pub struct ProtocolSpec {
    pub name: String,
    states: Vec<String>,
    index: HashMap<String, StateId>,
    pub q0: StateId,
    pub leader: Option<StateId>,
    halting: Vec<bool>,
    output: Vec<bool>,
    pub rules: Vec<Rule>,
    pub directed: bool,
    pub sensors: SensorSet,
    // dispatch[(a * |Q| + b) * 2 + edge] lists candidate rules oriented so the
    // lhs first slot is `a`; `bool` = true when the stored rule was written
    // with its slots swapped relative to this key.
    dispatch: Vec<Vec<(usize, bool)>>,
}

impl ProtocolSpec {
    pub fn build(
        name: &str,
        states: Vec<String>,
        q0: &str,
        leader: Option<&str>,
        halting: &[&str],
        output: Option<&[&str]>,
        rules: Vec<Rule>,
        directed: bool,
    ) -> Result<Self, SpecError> {
        if states.is_empty() {
            return Err(SpecError::EmptyStateSet(name.to_string()));
        }
        let mut index = HashMap::new();
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.clone(), StateId(i as u16)).is_some() {
                return Err(SpecError::DuplicateState(s.clone()));
            }
        }
        let look = |s: &str| -> Result<StateId, SpecError> {
            index
                .get(s)
                .copied()
                .ok_or_else(|| SpecError::UnknownState(s.to_string()))
        };
        let q0 = look(q0)?;
        let leader = leader.map(look).transpose()?;
        let mut halt_mask = vec![false; states.len()];
        for h in halting {
            halt_mask[look(h)?.0 as usize] = true;
        }
        let mut out_mask = vec![true; states.len()];
        if let Some(out) = output {
            out_mask = vec![false; states.len()];
            for o in out {
                out_mask[look(o)?.0 as usize] = true;
            }
        }

        let mut spec = ProtocolSpec {
            name: name.to_string(),
            states,
            index,
            q0,
            leader,
            halting: halt_mask,
            output: out_mask,
            rules,
            directed,
            sensors: SensorSet::default(),
            dispatch: Vec::new(),
        };
        spec.compile()?;
        spec.validate()?;
        spec.sensors = spec.derive_sensors();
        Ok(spec)
    }

    fn compile(&mut self) -> Result<(), SpecError> {
        let q = self.states.len();
        self.dispatch = vec![Vec::new(); q * q * 2];
        for (i, r) in self.rules.iter().enumerate() {
            if self.directed && !r.guard.is_trivial() {
                return Err(SpecError::DirectedGuard(i));
            }
            let edges: &[bool] = match r.lhs.2 {
                Some(true) => &[true],
                Some(false) => &[false],
                None => &[false, true],
            };
            for &e in edges {
                let key = |a: StateId, b: StateId| (a.0 as usize * q + b.0 as usize) * 2 + e as usize;
                self.dispatch[key(r.lhs.0, r.lhs.1)].push((i, false));
                // Equal-state rules are stored in both orientations on the
                // same key so asymmetric guards and coin outcomes are matched
                // from either side.
                if !self.directed {
                    self.dispatch[key(r.lhs.1, r.lhs.0)].push((i, true));
                }
            }
        }
        Ok(())
    }

    /// Net effect of the rule table on ordered states (a, b) over `edge` in
    /// the given context. Requires a validated dispatch table, so at most two
    /// distinct outcomes (the two orientations of one coin rule) can remain.
    fn effect_at(
        &self,
        a: StateId,
        b: StateId,
        edge: bool,
        da: DegreeClass,
        db: DegreeClass,
        cnd: bool,
    ) -> Effect {
        let mut outs: Vec<(StateId, StateId, bool)> = Vec::new();
        for &(ri, swapped) in self.candidates(a, b, edge) {
            let r = &self.rules[ri];
            let (ga, gb) = if swapped { (db, da) } else { (da, db) };
            if !r.guard.admits(ga, gb, cnd) {
                continue;
            }
            let out = if swapped {
                (r.rhs.1, r.rhs.0, r.rhs_edge(edge))
            } else {
                (r.rhs.0, r.rhs.1, r.rhs_edge(edge))
            };
            if !outs.contains(&out) {
                outs.push(out);
            }
        }
        match outs.len() {
            0 => Effect::Identity,
            // A rule that rewrites the pair to itself is indistinguishable
            // from no rule at all.
            1 if outs[0] == (a, b, edge) => Effect::Identity,
            1 => Effect::Unique(outs[0]),
            _ => {
                outs.sort();
                Effect::Choice(outs[0], outs[1])
            }
        }
    }

    /// A degree sensor is needed exactly when some entry behaves differently
    /// across the readings it separates; the degree-1 detector separates 1
    /// from both higher classes, the degree-2 detector separates 2 from 3+.
    /// Degree 0 is excluded: no table in this catalog branches on it and a
    /// zero reading never coexists with an active pair edge.
    fn derive_sensors(&self) -> SensorSet {
        const VARIED: [DegreeClass; 3] =
            [DegreeClass::One, DegreeClass::Two, DegreeClass::ThreePlus];
        let mut sensors = SensorSet::default();
        let q = self.states.len() as u16;
        for a in (0..q).map(StateId) {
            for b in (0..q).map(StateId) {
                for edge in [false, true] {
                    if self.candidates(a, b, edge).is_empty() {
                        continue;
                    }
                    for db in VARIED {
                        for cnd in [false, true] {
                            let at = |da| self.effect_at(a, b, edge, da, db, cnd);
                            let (o1, o2, o3) = (
                                at(DegreeClass::One),
                                at(DegreeClass::Two),
                                at(DegreeClass::ThreePlus),
                            );
                            if o1 != o2 || o1 != o3 {
                                sensors.degree_one = true;
                            }
                            if o2 != o3 {
                                sensors.degree_two = true;
                            }
                        }
                    }
                    for da in VARIED {
                        for db in VARIED {
                            if self.effect_at(a, b, edge, da, db, false)
                                != self.effect_at(a, b, edge, da, db, true)
                            {
                                sensors.common_neighbor = true;
                            }
                        }
                    }
                }
            }
        }
        sensors
    }

    /// Every concrete (states, edge, context) situation must resolve to at
    /// most one outcome, and halting states must be inert.
    fn validate(&self) -> Result<(), SpecError> {
        const CLASSES: [DegreeClass; 4] = [
            DegreeClass::Zero,
            DegreeClass::One,
            DegreeClass::Two,
            DegreeClass::ThreePlus,
        ];
        let q = self.states.len();
        for a in 0..q {
            for b in 0..q {
                for edge in [false, true] {
                    let cands = &self.dispatch[(a * q + b) * 2 + edge as usize];
                    if cands.len() < 2 {
                        continue;
                    }
                    for da in CLASSES {
                        for db in CLASSES {
                            for cnd in [false, true] {
                                let mut admitted: Vec<(usize, (StateId, StateId, bool))> =
                                    Vec::new();
                                for &(ri, swapped) in cands {
                                    let r = &self.rules[ri];
                                    let (ga, gb) = if swapped { (db, da) } else { (da, db) };
                                    if !r.guard.admits(ga, gb, cnd) {
                                        continue;
                                    }
                                    let out = if swapped {
                                        (r.rhs.1, r.rhs.0, r.rhs_edge(edge))
                                    } else {
                                        (r.rhs.0, r.rhs.1, r.rhs_edge(edge))
                                    };
                                    admitted.push((ri, out));
                                }
                                // One rule matching in both orientations with
                                // different outcomes is the coin case; any
                                // disagreement across distinct rules is a
                                // conflict.
                                for (i, &(r1, o1)) in admitted.iter().enumerate() {
                                    for &(r2, o2) in &admitted[i + 1..] {
                                        if o1 != o2 && r1 != r2 {
                                            return Err(SpecError::AmbiguousRuleTable {
                                                a: self.states[a].clone(),
                                                b: self.states[b].clone(),
                                                edge,
                                                da: da.label(),
                                                db: db.label(),
                                                cnd,
                                                r1,
                                                r2,
                                            });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        for (i, r) in self.rules.iter().enumerate() {
            for edge in [false, true] {
                if r.lhs.2.map_or(false, |e| e != edge) {
                    continue;
                }
                if r.is_identity_on(edge) {
                    continue;
                }
                for side in [r.lhs.0, r.lhs.1] {
                    if self.halting[side.0 as usize] {
                        return Err(SpecError::EffectiveHaltingRule(
                            i,
                            self.states[side.0 as usize].clone(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.0 as usize]
    }

    pub fn state(&self, name: &str) -> Option<StateId> {
        self.index.get(name).copied()
    }

    pub fn is_halting(&self, s: StateId) -> bool {
        self.halting[s.0 as usize]
    }

    pub fn has_halting_states(&self) -> bool {
        self.halting.iter().any(|&h| h)
    }

    pub fn in_output_set(&self, s: StateId) -> bool {
        self.output[s.0 as usize]
    }

    /// Decision bit of a state for predicate protocols, encoded as a `.0` /
    /// `.1` suffix on the state name.
    pub fn output_bit(&self, s: StateId) -> Option<bool> {
        let n = self.state_name(s);
        n.strip_suffix(".1")
            .map(|_| true)
            .or_else(|| n.strip_suffix(".0").map(|_| false))
    }

    pub(crate) fn candidates(&self, a: StateId, b: StateId, edge: bool) -> &[(usize, bool)] {
        let q = self.states.len();
        &self.dispatch[(a.0 as usize * q + b.0 as usize) * 2 + edge as usize]
    }

    /// True when the pair of states can never change anything, regardless of
    /// edge state and context. Used by the fixed-point scan.
    pub fn pair_inert(&self, a: StateId, b: StateId) -> bool {
        for edge in [false, true] {
            for &(ri, _) in self.candidates(a, b, edge) {
                if !self.rules[ri].is_identity_on(edge) {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(
        lhs: (&str, &str, Option<bool>),
        guard: Guard,
        rhs: (&str, &str, Option<bool>),
        states: &[&str],
    ) -> Rule {
        let id = |n: &str| StateId(states.iter().position(|s| *s == n).unwrap() as u16);
        Rule {
            lhs: (id(lhs.0), id(lhs.1), lhs.2),
            guard,
            rhs: (id(rhs.0), id(rhs.1), rhs.2),
            derived: false,
        }
    }

    #[test]
    fn ambiguous_orientations_rejected() {
        let states = ["a", "b"];
        let rules = vec![
            rule(("a", "b", Some(true)), Guard::default(), ("a", "a", Some(true)), &states),
            rule(("b", "a", Some(true)), Guard::default(), ("b", "b", Some(true)), &states),
        ];
        let err = ProtocolSpec::build(
            "bad",
            states.iter().map(|s| s.to_string()).collect(),
            "a",
            None,
            &[],
            None,
            rules,
            false,
        );
        assert!(matches!(err, Err(SpecError::AmbiguousRuleTable { .. })));
    }

    #[test]
    fn mirrored_symmetric_guards_are_not_ambiguous() {
        // Same unordered outcome written from both sides.
        let states = ["p"];
        let g1 = Guard { deg_a: Some(DegreeClass::Two), deg_b: Some(DegreeClass::ThreePlus), cnd: None };
        let g2 = Guard { deg_a: Some(DegreeClass::ThreePlus), deg_b: Some(DegreeClass::Two), cnd: None };
        let rules = vec![
            rule(("p", "p", Some(true)), g1, ("p", "p", Some(false)), &states),
            rule(("p", "p", Some(true)), g2, ("p", "p", Some(false)), &states),
        ];
        let spec = ProtocolSpec::build(
            "ok",
            states.iter().map(|s| s.to_string()).collect(),
            "p",
            None,
            &[],
            None,
            rules,
            false,
        );
        assert!(spec.is_ok(), "{spec:?}");
    }

    #[test]
    fn halting_states_must_be_inert() {
        let states = ["h", "q"];
        let rules = vec![rule(
            ("h", "q", Some(true)),
            Guard::default(),
            ("h", "h", Some(true)),
            &states,
        )];
        let err = ProtocolSpec::build(
            "bad",
            states.iter().map(|s| s.to_string()).collect(),
            "q",
            None,
            &["h"],
            None,
            rules,
            false,
        );
        assert!(matches!(err, Err(SpecError::EffectiveHaltingRule(..))));
    }

    #[test]
    fn directed_tables_reject_guards() {
        let states = ["x"];
        let g = Guard { cnd: Some(true), ..Guard::default() };
        let rules = vec![rule(("x", "x", Some(true)), g, ("x", "x", Some(false)), &states)];
        let err = ProtocolSpec::build(
            "bad",
            states.iter().map(|s| s.to_string()).collect(),
            "x",
            None,
            &[],
            None,
            rules,
            true,
        );
        assert!(matches!(err, Err(SpecError::DirectedGuard(0))));
    }

    #[test]
    fn equal_state_asymmetric_rhs_is_a_coin_not_a_conflict() {
        let states = ["l", "p"];
        let rules = vec![rule(("l", "l", None), Guard::default(), ("l", "p", Some(true)), &states)];
        let spec = ProtocolSpec::build(
            "coin",
            states.iter().map(|s| s.to_string()).collect(),
            "l",
            None,
            &[],
            None,
            rules,
            false,
        );
        assert!(spec.is_ok(), "{spec:?}");
    }

    fn build(states: &[&str], rules: Vec<Rule>) -> ProtocolSpec {
        ProtocolSpec::build(
            "t",
            states.iter().map(|s| s.to_string()).collect(),
            states[0],
            None,
            &[],
            None,
            rules,
            false,
        )
        .unwrap()
    }

    #[test]
    fn complement_guards_with_equal_outcomes_need_only_the_split_they_act_on() {
        // degv=1 branches away, degv=2 and degv=3+ agree: a degree-1 detector
        // suffices even though higher classes are spelled out.
        let states = ["l", "q", "p", "r"];
        let g = |d| Guard { deg_a: None, deg_b: Some(d), cnd: None };
        let spec = build(
            &states,
            vec![
                rule(("l", "q", Some(true)), g(DegreeClass::One), ("l", "p", None), &states),
                rule(("l", "q", Some(true)), g(DegreeClass::Two), ("l", "r", None), &states),
                rule(("l", "q", Some(true)), g(DegreeClass::ThreePlus), ("l", "r", None), &states),
            ],
        );
        assert_eq!(
            spec.sensors,
            SensorSet { degree_one: true, degree_two: false, common_neighbor: false }
        );
    }

    #[test]
    fn three_way_degree_splits_need_both_detectors() {
        let states = ["l", "q", "p", "r", "s"];
        let g = |d| Guard { deg_a: Some(d), deg_b: None, cnd: None };
        let spec = build(
            &states,
            vec![
                rule(("l", "q", Some(true)), g(DegreeClass::One), ("l", "p", None), &states),
                rule(("l", "q", Some(true)), g(DegreeClass::Two), ("l", "r", None), &states),
                rule(("l", "q", Some(true)), g(DegreeClass::ThreePlus), ("l", "s", None), &states),
            ],
        );
        assert!(spec.sensors.degree_one && spec.sensors.degree_two);
        assert!(!spec.sensors.common_neighbor);
    }

    #[test]
    fn conditional_cut_needs_only_the_common_neighbor_bit() {
        let states = ["p"];
        let g = Guard { deg_a: None, deg_b: None, cnd: Some(true) };
        let spec = build(
            &states,
            vec![rule(("p", "p", Some(true)), g, ("p", "p", Some(false)), &states)],
        );
        assert_eq!(
            spec.sensors,
            SensorSet { degree_one: false, degree_two: false, common_neighbor: true }
        );
    }

    #[test]
    fn guarded_identity_rules_consume_no_sensors() {
        let states = ["a", "b"];
        let g = Guard { deg_a: Some(DegreeClass::One), deg_b: None, cnd: None };
        let spec = build(
            &states,
            vec![rule(("a", "b", Some(true)), g, ("a", "b", Some(true)), &states)],
        );
        assert_eq!(spec.sensors, SensorSet::default());
    }

    #[test]
    fn distinct_equal_state_rules_with_mirrored_rhs_conflict() {
        let states = ["m", "a"];
        let rules = vec![
            rule(("m", "m", Some(true)), Guard::default(), ("m", "a", Some(true)), &states),
            rule(("m", "m", Some(true)), Guard::default(), ("a", "m", Some(true)), &states),
        ];
        let err = ProtocolSpec::build(
            "bad",
            states.iter().map(|s| s.to_string()).collect(),
            "m",
            None,
            &[],
            None,
            rules,
            false,
        );
        assert!(matches!(err, Err(SpecError::AmbiguousRuleTable { .. })));
    }
}
