//! Turing machine front end for the line-based simulator.
//!
//! A finished spanning line is split into a working half and a memory bank:
//! the kept half records the input multiset, the detached half stores one
//! bit per pair through its matching edges. A machine loaded from a text
//! table then runs over that memory, and the composition decides symmetric
//! predicates end to end starting from any connected topology.

pub mod layout;
pub mod machine;
pub mod pipeline;

pub use layout::{
    cell_address, cell_count, cell_from_address, head_from_rank, head_rank, head_start,
    move_head, partition_line, read_cell, write_cell, EdgeCell, LayoutError, LineLayout,
};
pub use machine::{MachineError, Move, TMDescription};
pub use pipeline::{
    compute_predicate, run_tm, Decision, PipelineError, PipelineReport, TmRun, LEFT_END,
    RIGHT_END,
};
