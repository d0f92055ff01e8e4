//! Network configurations: per-node states plus a dense active-edge matrix
//! with maintained degrees.

use crate::model::spec::StateId;

/// Whether edges are symmetric bits on unordered pairs or independent bits
/// per ordered pair. Protocols over directed graphs are scheduled on ordered
/// pairs and read the initiator-to-responder edge.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EdgeKind {
    Undirected,
    Directed,
}

/// One configuration of an n-node network. Edge bits are u64-packed rows so
/// common-neighbor checks are word-parallel; degrees are maintained on edge
/// updates.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Configuration {
    kind: EdgeKind,
    n: usize,
    words: usize,
    states: Vec<StateId>,
    rows: Vec<u64>,
    degrees: Vec<u32>,
    active_edges: usize,
}

impl Configuration {
    pub fn new(states: Vec<StateId>) -> Self {
        Self::with_kind(EdgeKind::Undirected, states)
    }

    pub fn new_directed(states: Vec<StateId>) -> Self {
        Self::with_kind(EdgeKind::Directed, states)
    }

    fn with_kind(kind: EdgeKind, states: Vec<StateId>) -> Self {
        let n = states.len();
        assert!(n >= 2, "need at least two nodes");
        let words = n.div_ceil(64);
        Configuration {
            kind,
            n,
            words,
            states,
            rows: vec![0; n * words],
            degrees: vec![0; n],
            active_edges: 0,
        }
    }

    /// All nodes in `q0`, every edge active: the standard starting point.
    pub fn clique(n: usize, q0: StateId) -> Self {
        let mut c = Configuration::new(vec![q0; n]);
        for u in 0..n {
            for v in (u + 1)..n {
                c.set_edge(u, v, true);
            }
        }
        c
    }

    pub fn from_edges(states: Vec<StateId>, edges: &[(usize, usize)]) -> Self {
        let mut c = Configuration::new(states);
        for &(u, v) in edges {
            c.set_edge(u, v, true);
        }
        c
    }

    pub fn from_arcs(states: Vec<StateId>, arcs: &[(usize, usize)]) -> Self {
        let mut c = Configuration::new_directed(states);
        for &(u, v) in arcs {
            c.set_edge(u, v, true);
        }
        c
    }

    pub fn kind(&self) -> EdgeKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn state(&self, u: usize) -> StateId {
        self.states[u]
    }

    pub fn set_state(&mut self, u: usize, s: StateId) {
        self.states[u] = s;
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    /// Edge state of (u, v): the shared bit for undirected configurations,
    /// the u-to-v bit for directed ones.
    pub fn edge(&self, u: usize, v: usize) -> bool {
        debug_assert!(u != v);
        self.rows[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    pub fn set_edge(&mut self, u: usize, v: usize, active: bool) {
        debug_assert!(u != v);
        if self.edge(u, v) == active {
            return;
        }
        self.rows[u * self.words + v / 64] ^= 1 << (v % 64);
        let delta_u;
        match self.kind {
            EdgeKind::Undirected => {
                self.rows[v * self.words + u / 64] ^= 1 << (u % 64);
                delta_u = true;
            }
            EdgeKind::Directed => delta_u = true,
        }
        if active {
            if delta_u {
                self.degrees[u] += 1;
            }
            if self.kind == EdgeKind::Undirected {
                self.degrees[v] += 1;
            }
            self.active_edges += 1;
        } else {
            if delta_u {
                self.degrees[u] -= 1;
            }
            if self.kind == EdgeKind::Undirected {
                self.degrees[v] -= 1;
            }
            self.active_edges -= 1;
        }
    }

    /// Active degree: incident active edges for undirected configurations,
    /// outgoing arcs for directed ones.
    pub fn degree(&self, u: usize) -> usize {
        self.degrees[u] as usize
    }

    /// Active unordered edges, or active arcs when directed.
    pub fn active_edge_count(&self) -> usize {
        self.active_edges
    }

    /// True when u and v share at least one node both point to.
    pub fn common_neighbor(&self, u: usize, v: usize) -> bool {
        let ru = &self.rows[u * self.words..(u + 1) * self.words];
        let rv = &self.rows[v * self.words..(v + 1) * self.words];
        ru.iter().zip(rv).any(|(a, b)| a & b != 0)
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        let row = &self.rows[u * self.words..(u + 1) * self.words];
        row.iter().enumerate().flat_map(|(w, &bits)| {
            let mut bits = bits;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + b)
            })
        })
    }

    /// Active edges as (u, v) with u < v; for directed configurations, all
    /// active arcs in initiator order.
    pub fn active_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.active_edges);
        for u in 0..self.n {
            for v in self.neighbors(u) {
                if self.kind == EdgeKind::Directed || u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Connected components of the active graph, counting isolated nodes.
    /// Directed configurations are traversed ignoring arc direction.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut stack = Vec::new();
        let mut components = 0;
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for v in 0..self.n {
                    if v != u && !seen[v] && (self.edge(u, v) || self.edge(v, u)) {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// True when removing active edge (u, v) would disconnect its endpoints.
    pub fn is_bridge(&self, u: usize, v: usize) -> bool {
        debug_assert!(self.kind == EdgeKind::Undirected);
        debug_assert!(self.edge(u, v));
        let mut seen = vec![false; self.n];
        let mut stack = vec![u];
        seen[u] = true;
        while let Some(x) = stack.pop() {
            for y in self.neighbors(x) {
                if x == u && y == v {
                    continue;
                }
                if y == v {
                    return false;
                }
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        true
    }
}
