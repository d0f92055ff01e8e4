//! Simulation and verification of pairwise-interaction protocols that
//! rewrite both node states and the edges between them.
//!
//! Nodes hold states from a finite set; every unordered pair of nodes owns a
//! persistent binary edge. A scheduler repeatedly selects a pair, the
//! matching rule rewrites the two states and the edge, and optional guards
//! let rules read local degree classes and a common-neighbor bit before
//! firing. The crate provides the execution model, graph generators and
//! recognizers, schedulers with recorded and replayable traces, a catalog of
//! transformation and detection protocols, measurement and verification
//! harnesses, and a Turing-machine pipeline built on top of the line-forming
//! transformer.

pub mod analysis;
pub mod model;
pub mod protocols;
pub mod scheduler;
pub mod tm;
pub mod topology;

pub use model::config::{Configuration, EdgeKind};
pub use model::format::{load_rules, parse_rules, write_rules, FormatError};
pub use model::spec::{DegreeClass, Guard, ProtocolSpec, Rule, SensorSet, SpecError, StateId};
pub use model::step::{
    apply_interaction, apply_recorded, branch_outcomes, is_fixed_point, is_halted,
    observe_context, InteractionContext, InteractionEvent, ReplayDivergence,
};
