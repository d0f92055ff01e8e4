//! Interaction-pair selection.
//!
//! The uniform scheduler draws one ordered pair per step, which is exactly a
//! uniform unordered pair with a fair orientation choice, so the same draw
//! serves both the undirected and the directed interaction models. Schedules
//! can also be scripted, or derived from a recorded run by the mimic
//! constructors that drive every copy of a chained-copy graph through the
//! same local history.

use crate::topology::{ActiveGraph, FamilyGraph};
use rand::Rng;
use thiserror::Error;

/// Uniform over the n(n-1) ordered pairs; one rng draw per step.
pub fn uniform_next<R: Rng>(n: usize, rng: &mut R) -> (usize, usize) {
    debug_assert!(n >= 2);
    let idx = rng.gen_range(0..n * (n - 1));
    let u = idx / (n - 1);
    let r = idx % (n - 1);
    let v = if r < u { r } else { r + 1 };
    (u, v)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Random { seed: u64 },
    Scripted,
    Mimic { source: String },
}

impl Provenance {
    pub(crate) fn tag(&self) -> String {
        match self {
            Provenance::Random { seed } => format!("random {seed}"),
            Provenance::Scripted => "scripted".into(),
            Provenance::Mimic { source } => format!("mimic {source}"),
        }
    }

    /// Inverse of `tag`. None on an unrecognized form.
    pub(crate) fn parse_tag(rest: &str) -> Option<Provenance> {
        let rest = rest.trim();
        if rest == "scripted" {
            Some(Provenance::Scripted)
        } else if let Some(seed) = rest.strip_prefix("random") {
            seed.trim().parse().ok().map(|seed| Provenance::Random { seed })
        } else {
            rest.strip_prefix("mimic").map(|source| Provenance::Mimic {
                source: source.trim().to_string(),
            })
        }
    }

    fn short(&self) -> String {
        match self {
            Provenance::Random { seed } => format!("random:{seed}"),
            Provenance::Scripted => "scripted".into(),
            Provenance::Mimic { source } => format!("mimic:{source}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

/// An ordered list of oriented interaction pairs with a provenance header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub provenance: Provenance,
    pub steps: Vec<(usize, usize)>,
}

impl Schedule {
    pub fn scripted(steps: Vec<(usize, usize)>) -> Self {
        debug_assert!(steps.iter().all(|&(u, v)| u != v));
        Schedule {
            provenance: Provenance::Scripted,
            steps,
        }
    }

    /// One `step u v` line per event under a `@schedule <provenance>` header.
    pub fn serialize(&self) -> String {
        let mut out = format!("@schedule {}\n", self.provenance.tag());
        for &(u, v) in &self.steps {
            out.push_str(&format!("step {u} {v}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ScheduleError> {
        let syntax = |line: usize, msg: String| ScheduleError::Syntax { line, msg };
        let mut provenance = None;
        let mut steps = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("@schedule") {
                provenance = Some(
                    Provenance::parse_tag(rest)
                        .ok_or_else(|| syntax(line, format!("unknown provenance {:?}", rest.trim())))?,
                );
                continue;
            }
            let mut it = trimmed.split_whitespace();
            match (it.next(), it.next(), it.next(), it.next()) {
                (Some("step"), Some(u), Some(v), None) => {
                    let u: usize = u
                        .parse()
                        .map_err(|e| syntax(line, format!("bad node id {u:?}: {e}")))?;
                    let v: usize = v
                        .parse()
                        .map_err(|e| syntax(line, format!("bad node id {v:?}: {e}")))?;
                    if u == v {
                        return Err(syntax(line, format!("self-pair ({u}, {v})")));
                    }
                    steps.push((u, v));
                }
                _ => return Err(syntax(line, format!("expected `step u v`, got {trimmed:?}"))),
            }
        }
        Ok(Schedule {
            provenance: provenance
                .ok_or_else(|| syntax(0, "missing @schedule header".into()))?,
            steps,
        })
    }
}

/// Expand a base-graph schedule to the k-copy family graph. A step on the
/// removed edge maps to the k inter-copy chain edges in chain order; any
/// other step maps to its image in each copy, copies in ascending order.
/// Orientation is preserved so replayed roles stay aligned.
pub fn mimic_to_family(trace: &Schedule, fam: &FamilyGraph) -> Schedule {
    let (i, j) = fam.removed_edge;
    let mut steps = Vec::with_capacity(trace.steps.len() * fam.k);
    for &(u, v) in &trace.steps {
        if (u, v) == (i, j) {
            for h in 0..fam.k {
                steps.push((fam.node(h, i), fam.node((h + 1) % fam.k, j)));
            }
        } else if (u, v) == (j, i) {
            for h in 0..fam.k {
                steps.push((fam.node((h + 1) % fam.k, j), fam.node(h, i)));
            }
        } else {
            for h in 0..fam.k {
                steps.push((fam.node(h, u), fam.node(h, v)));
            }
        }
    }
    Schedule {
        provenance: Provenance::Mimic {
            source: format!("{} x{}", trace.provenance.short(), fam.k),
        },
        steps,
    }
}

/// The classic 3-to-6 instance: triangle steps map to hexagon step pairs,
/// with the closing triangle edge mapping to the two inter-copy edges.
pub fn mimic_triangle_to_hexagon(trace: &Schedule) -> Schedule {
    debug_assert!(trace.steps.iter().all(|&(u, v)| u < 3 && v < 3));
    let triangle = ActiveGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
    let fam = crate::topology::build_family_graph(&triangle, (2, 0), 2)
        .expect("triangle edge lies on its cycle");
    mimic_to_family(trace, &fam)
}
