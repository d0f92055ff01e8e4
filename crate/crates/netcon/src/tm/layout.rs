//! Memory layout carved out of a finished spanning line: the kept half keeps
//! an active line and records the inputs, the detached half becomes an
//! addressable bank of edge cells through a perfect matching.

use thiserror::Error;

use super::machine::Move;
use crate::topology::ActiveGraph;
use crate::{Configuration, StateId};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("active topology is not a spanning line over {0} nodes")]
    NotALine(usize),
    #[error("expected exactly one leader-marked node, found {0}")]
    LeaderCount(usize),
    #[error("leader node {0} sits inside the line, not at an endpoint")]
    LeaderInside(usize),
    #[error("need one input per node: {nodes} nodes but {inputs} inputs")]
    InputCount { nodes: usize, inputs: usize },
    #[error("cell ({i}, {j}) is out of range for {m} matched nodes")]
    BadCell { i: usize, j: usize, m: usize },
    #[error("head token moved past the {0} end of the cell range")]
    Exhausted(&'static str),
}

/// A memory cell named by the two matched nodes whose shared edge stores the
/// bit. Indices are 1-based positions along the matched bank, always i < j.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct EdgeCell {
    pub i: usize,
    pub j: usize,
}

impl EdgeCell {
    pub fn new(i: usize, j: usize, m: usize) -> Result<Self, LayoutError> {
        if i >= 1 && i < j && j <= m {
            Ok(EdgeCell { i, j })
        } else {
            Err(LayoutError::BadCell { i, j, m })
        }
    }
}

pub fn cell_count(m: usize) -> usize {
    m * (m - 1) / 2
}

/// Canonical index of a cell: cells are grouped by their larger endpoint, so
/// the addresses for bank size m are a prefix of those for any larger bank.
pub fn cell_address(cell: EdgeCell) -> usize {
    (cell.j - 1) * (cell.j - 2) / 2 + cell.i - 1
}

pub fn cell_from_address(addr: usize, m: usize) -> Option<EdgeCell> {
    if m < 2 || addr >= cell_count(m) {
        return None;
    }
    let mut j = 2;
    while (j - 1) * j / 2 <= addr {
        j += 1;
    }
    let i = addr - (j - 1) * (j - 2) / 2 + 1;
    Some(EdgeCell { i, j })
}

/// First cell under the two head tokens, if the bank has any cells.
pub fn head_start(m: usize) -> Option<EdgeCell> {
    (m >= 2).then_some(EdgeCell { i: 1, j: 2 })
}

/// One step of the two-token head walk. Rightward the right token advances;
/// when it hits the end of the bank the left token advances one slot and the
/// right token resets beside it. Leftward mirrors this. Walking past either
/// end of the range is tape exhaustion, reported to the caller rather than
/// clamped.
pub fn move_head(cell: EdgeCell, dir: Move, m: usize) -> Result<EdgeCell, LayoutError> {
    let EdgeCell { i, j } = cell;
    debug_assert!(i >= 1 && i < j && j <= m);
    match dir {
        Move::R => {
            if j < m {
                Ok(EdgeCell { i, j: j + 1 })
            } else if i + 2 <= m {
                Ok(EdgeCell { i: i + 1, j: i + 2 })
            } else {
                Err(LayoutError::Exhausted("right"))
            }
        }
        Move::L => {
            if j > i + 1 {
                Ok(EdgeCell { i, j: j - 1 })
            } else if i > 1 {
                Ok(EdgeCell { i: i - 1, j: m })
            } else {
                Err(LayoutError::Exhausted("left"))
            }
        }
    }
}

/// Rank of a cell in the head-walk order. Distinct from `cell_address`: the
/// walk sweeps the right token first, while addresses group by the larger
/// endpoint. Both number the same `cell_count(m)` cells.
pub fn head_rank(cell: EdgeCell, m: usize) -> usize {
    let EdgeCell { i, j } = cell;
    (i - 1) * m - i * (i - 1) / 2 + (j - i - 1)
}

pub fn head_from_rank(rank: usize, m: usize) -> Option<EdgeCell> {
    if m < 2 || rank >= cell_count(m) {
        return None;
    }
    let mut i = 1;
    let mut r = rank;
    while r >= m - i {
        r -= m - i;
        i += 1;
    }
    Some(EdgeCell { i, j: i + 1 + r })
}

/// Where everything ended up after the split: the kept half in leader-first
/// order, the matched bank, the odd node set aside, and the recorded inputs.
#[derive(Clone, Debug)]
pub struct LineLayout {
    /// Nodes keeping an active line, leader first.
    pub u_line: Vec<usize>,
    /// matched[i] is the bank node paired with u_line[i]; in bank order, so
    /// it doubles as the ordered bank itself.
    pub matched: Vec<usize>,
    /// The node left over at odd sizes, detached from everything.
    pub redundant: Option<usize>,
    /// Inputs held at each kept node: its own, its partner's, and at index 0
    /// the redundant node's when there is one.
    pub input_record: Vec<Vec<char>>,
    /// The full input multiset in canonical sorted order; this is the live
    /// input section of the tape, so later writes land here.
    pub tape_input: Vec<char>,
    /// Pairwise rewrites issued while carving the layout.
    pub script_interactions: u64,
}

impl LineLayout {
    pub fn m_count(&self) -> usize {
        self.matched.len()
    }

    pub fn cells(&self) -> usize {
        cell_count(self.m_count())
    }

    pub fn cell_nodes(&self, cell: EdgeCell) -> (usize, usize) {
        (self.matched[cell.i - 1], self.matched[cell.j - 1])
    }
}

/// Splits a finished spanning line into a working half and a memory bank.
///
/// The line is ordered from the node carrying `leader_state`. The leftmost
/// floor(n/2) nodes keep their line; each is matched to one node of the other
/// half, pairing outside-in so the middle edge of the line is already a
/// matching edge. New matching edges are activated before any line edge is
/// cut, so every cut endpoint stays connected through its matching partner.
/// At odd sizes the far endpoint is detached outright and its input recorded
/// at the leader.
pub fn partition_line(
    cfg: &Configuration,
    leader_state: StateId,
    inputs: &[char],
) -> Result<(Configuration, LineLayout), LayoutError> {
    let n = cfg.len();
    if inputs.len() != n {
        return Err(LayoutError::InputCount {
            nodes: n,
            inputs: inputs.len(),
        });
    }
    let graph = ActiveGraph::of(cfg);
    if n < 2 || !graph.is_spanning_line() {
        return Err(LayoutError::NotALine(n));
    }
    let leaders: Vec<usize> = (0..n).filter(|&u| cfg.state(u) == leader_state).collect();
    let [leader] = leaders.as_slice() else {
        return Err(LayoutError::LeaderCount(leaders.len()));
    };
    let leader = *leader;
    if graph.degree(leader) != 1 {
        return Err(LayoutError::LeaderInside(leader));
    }

    let mut order = Vec::with_capacity(n);
    order.push(leader);
    let mut prev = leader;
    let mut here = graph.neighbors(leader)[0];
    loop {
        order.push(here);
        let next = graph.neighbors(here).iter().copied().find(|&w| w != prev);
        match next {
            Some(w) => {
                prev = here;
                here = w;
            }
            None => break,
        }
    }
    debug_assert_eq!(order.len(), n);

    let k = n / 2;
    let u_line: Vec<usize> = order[..k].to_vec();
    // Outside-in matching: u_line[i] pairs with order[2k - 1 - i], so the
    // boundary pair (order[k - 1], order[k]) rides the existing line edge.
    let matched: Vec<usize> = (0..k).map(|i| order[2 * k - 1 - i]).collect();
    let redundant = (n % 2 == 1).then(|| order[n - 1]);

    let mut out = cfg.clone();
    let mut script_interactions = 0u64;
    for i in 0..k.saturating_sub(1) {
        debug_assert!(!out.edge(u_line[i], matched[i]));
        out.set_edge(u_line[i], matched[i], true);
        script_interactions += 1;
    }
    debug_assert!(k == 0 || out.edge(order[k - 1], order[k]));
    for j in k..n - 1 {
        out.set_edge(order[j], order[j + 1], false);
        script_interactions += 1;
    }

    let mut input_record: Vec<Vec<char>> = (0..k)
        .map(|i| vec![inputs[u_line[i]], inputs[matched[i]]])
        .collect();
    if let Some(r) = redundant {
        input_record[0].push(inputs[r]);
    }
    let mut tape_input: Vec<char> = input_record.iter().flatten().copied().collect();
    tape_input.sort_unstable();
    debug_assert_eq!(tape_input.len(), n);

    Ok((
        out,
        LineLayout {
            u_line,
            matched,
            redundant,
            input_record,
            tape_input,
            script_interactions,
        },
    ))
}

/// Reads the bit stored on a cell's edge. Costs one pair selection.
pub fn read_cell(
    cfg: &Configuration,
    layout: &LineLayout,
    cell: EdgeCell,
) -> Result<bool, LayoutError> {
    let cell = EdgeCell::new(cell.i, cell.j, layout.m_count())?;
    let (a, b) = layout.cell_nodes(cell);
    Ok(cfg.edge(a, b))
}

/// Writes a bit to a cell's edge. Both bank nodes are first put into a
/// marking posture through their matching partners, then the bit commits on
/// the selection of their shared edge: three pair selections, returned as the
/// interaction cost.
pub fn write_cell(
    cfg: &mut Configuration,
    layout: &LineLayout,
    cell: EdgeCell,
    bit: bool,
) -> Result<u64, LayoutError> {
    let cell = EdgeCell::new(cell.i, cell.j, layout.m_count())?;
    let (a, b) = layout.cell_nodes(cell);
    cfg.set_edge(a, b, bit);
    Ok(3)
}
