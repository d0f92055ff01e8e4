//! Runs a loaded machine on the memory carved out of a finished line, and
//! the full composition from an arbitrary connected start to a decision.
//!
//! The tape the machine sees is virtual but every symbol lives in the
//! network: an end marker on each side, the recorded input multiset in
//! canonical sorted order across the kept half, then one bit per matched-bank
//! edge in head-walk order. Running off either end marker is tape
//! exhaustion, a decision in its own right rather than an error.

use thiserror::Error;

use super::layout::{
    head_from_rank, partition_line, read_cell, write_cell, LayoutError, LineLayout,
};
use super::machine::{Move, TMDescription};
use crate::analysis::{run, Driver, Outcome, StopWhen};
use crate::protocols;
use crate::topology::{TopologyError, TopologyFamily};
use crate::Configuration;

pub const LEFT_END: char = '^';
pub const RIGHT_END: char = '$';

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Decision {
    Accept,
    Reject,
    TapeExhausted,
}

impl Decision {
    pub fn label(self) -> &'static str {
        match self {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
            Decision::TapeExhausted => "tape-exhausted",
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input symbol {0:?} is outside the machine's input alphabet")]
    BadInput(char),
    #[error("need one input per node: {nodes} nodes but {inputs} inputs")]
    InputCount { nodes: usize, inputs: usize },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("transformation did not halt within {budget} selections at n={n}")]
    TransformExhausted { n: usize, budget: u64 },
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("tape symbol {0:?} is outside the machine's tape alphabet")]
    TapeAlphabet(char),
    #[error("machine wrote {0:?} onto a memory cell; cells hold only 0 and 1")]
    CellWrite(char),
    #[error("machine tried to overwrite the {0} end marker")]
    SentinelWrite(&'static str),
    #[error("machine passed {0} steps without halting")]
    StepLimit(u64),
}

#[derive(Clone, Copy, Debug)]
pub struct TmRun {
    pub decision: Decision,
    pub tm_steps: u64,
    pub interactions: u64,
}

/// Drives `tm` over the tape backed by `cfg` and `layout` until it enters a
/// terminal state, walks off an end marker, or passes `max_steps`.
///
/// Input-section writes rewrite the recorded symbol in place, so marking
/// machines work. Cell writes go through the mark-then-commit edge protocol
/// and must be 0 or 1. A step that enters a terminal state halts in place
/// without moving, so a decision at the edge of the tape is not exhaustion.
pub fn run_tm(
    tm: &TMDescription,
    cfg: &mut Configuration,
    layout: &mut LineLayout,
    max_steps: u64,
) -> Result<TmRun, PipelineError> {
    let in_len = layout.tape_input.len();
    let cells = layout.cells();
    let m = layout.m_count();
    let last = in_len + cells + 1;

    for c in [LEFT_END, RIGHT_END] {
        if !tm.has_tape_symbol(c) {
            return Err(PipelineError::TapeAlphabet(c));
        }
    }
    if cells > 0 {
        for c in ['0', '1'] {
            if !tm.has_tape_symbol(c) {
                return Err(PipelineError::TapeAlphabet(c));
            }
        }
    }
    for &c in &layout.tape_input {
        if !tm.has_tape_symbol(c) {
            return Err(PipelineError::TapeAlphabet(c));
        }
    }

    let mut state = tm.start;
    let mut pos = 0usize;
    let mut steps = 0u64;
    let mut interactions = 0u64;
    loop {
        if tm.is_terminal(state) {
            let decision = if state == tm.accept {
                Decision::Accept
            } else {
                Decision::Reject
            };
            return Ok(TmRun {
                decision,
                tm_steps: steps,
                interactions,
            });
        }
        if steps == max_steps {
            return Err(PipelineError::StepLimit(max_steps));
        }
        steps += 1;

        let symbol = if pos == 0 {
            LEFT_END
        } else if pos <= in_len {
            layout.tape_input[pos - 1]
        } else if pos < last {
            let cell = head_from_rank(pos - in_len - 1, m).expect("pos is a cell");
            if read_cell(cfg, layout, cell)? {
                '1'
            } else {
                '0'
            }
        } else {
            RIGHT_END
        };
        interactions += 1;

        let (next, write, mv) = tm.step(state, symbol);
        if write != symbol {
            if pos == 0 {
                return Err(PipelineError::SentinelWrite("left"));
            } else if pos <= in_len {
                layout.tape_input[pos - 1] = write;
                interactions += 1;
            } else if pos < last {
                let bit = match write {
                    '0' => false,
                    '1' => true,
                    other => return Err(PipelineError::CellWrite(other)),
                };
                let cell = head_from_rank(pos - in_len - 1, m).expect("pos is a cell");
                interactions += write_cell(cfg, layout, cell, bit)?;
            } else {
                return Err(PipelineError::SentinelWrite("right"));
            }
        }
        state = next;
        if tm.is_terminal(state) {
            continue;
        }
        match mv {
            Move::R => {
                if pos == last {
                    return Ok(TmRun {
                        decision: Decision::TapeExhausted,
                        tm_steps: steps,
                        interactions,
                    });
                }
                pos += 1;
            }
            Move::L => {
                if pos == 0 {
                    return Ok(TmRun {
                        decision: Decision::TapeExhausted,
                        tm_steps: steps,
                        interactions,
                    });
                }
                pos -= 1;
            }
        }
        interactions += 1;
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PipelineReport {
    pub decision: Decision,
    pub n: usize,
    pub seed: u64,
    pub transform_steps: u64,
    pub layout_interactions: u64,
    pub tm_steps: u64,
    pub tm_interactions: u64,
}

const TM_STEP_CAP: u64 = 1_000_000;

/// End-to-end decision: run the line former from a connected start, split the
/// finished line into working half and memory bank, then run the machine on
/// the inputs that rode along.
///
/// Only the input multiset can influence the decision: the tape's input
/// section is sorted canonically, so any permutation of `inputs` and any
/// starting family with the same multiset reaches the same verdict.
pub fn compute_predicate(
    tm: &TMDescription,
    n: usize,
    inputs: &[char],
    family: TopologyFamily,
    seed: u64,
) -> Result<PipelineReport, PipelineError> {
    if inputs.len() != n {
        return Err(PipelineError::InputCount {
            nodes: n,
            inputs: inputs.len(),
        });
    }
    for &c in inputs {
        if !tm.input_alphabet.contains(&c) {
            return Err(PipelineError::BadInput(c));
        }
    }

    let entry = protocols::line_transformer();
    let spec = &entry.spec;
    let budget = entry.claimed_time.step_budget(n);
    let cfg = protocols::seeded_initial(spec, n, family, seed)?;
    let (report, halted, _) = run(
        spec,
        cfg,
        Driver::Uniform { seed },
        StopWhen::Halted,
        budget,
        &mut [],
        &family.label(),
        false,
    );
    if report.outcome != Outcome::Halted {
        return Err(PipelineError::TransformExhausted { n, budget });
    }
    let transform_steps = report.steps.expect("halted runs report their step count");

    let leader = spec.state("hl").expect("the line former marks its leader");
    let (mut cfg, mut layout) = partition_line(&halted, leader, inputs)?;
    let tm_run = run_tm(tm, &mut cfg, &mut layout, TM_STEP_CAP)?;

    Ok(PipelineReport {
        decision: tm_run.decision,
        n,
        seed,
        transform_steps,
        layout_interactions: layout.script_interactions,
        tm_steps: tm_run.tm_steps,
        tm_interactions: tm_run.interactions,
    })
}
