//! Active-topology queries and generators.
//!
//! The recognizers answer shape questions about the active subgraph (connected,
//! acyclic, spanning line, spanning star, directed 2-cycle). The generators
//! produce the standard initial families, and [`build_family_graph`] constructs
//! the chained-copy graphs used by the replay harness: `k` copies of a base
//! graph, each missing one cycle edge, closed into a single cycle of copies by
//! `k` inter-copy edges.

use crate::model::config::{Configuration, EdgeKind};
use crate::model::spec::StateId;
use rand::Rng;
use std::collections::BinaryHeap;
use std::cmp::Reverse;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("family {family} needs at least {min} nodes, got {n}")]
    TooSmall {
        family: &'static str,
        n: usize,
        min: usize,
    },
    #[error("edge ({0}, {1}) is not present in the base graph")]
    MissingEdge(usize, usize),
    #[error("edge ({0}, {1}) is a bridge; a copy without it would be disconnected")]
    BridgeEdge(usize, usize),
    #[error("base graph must be connected")]
    DisconnectedBase,
    #[error("need at least 2 copies, got {0}")]
    TooFewCopies(usize),
    #[error("bad edge list: {0}")]
    Parse(String),
}

/// Undirected view of a configuration's active edges, with per-node sorted
/// adjacency lists. For directed configurations the view ignores orientation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveGraph {
    n: usize,
    adj: Vec<Vec<usize>>,
}

impl ActiveGraph {
    pub fn of(cfg: &Configuration) -> Self {
        let n = cfg.len();
        let mut adj = vec![Vec::new(); n];
        for u in 0..n {
            for v in (u + 1)..n {
                if cfg.edge(u, v) || cfg.edge(v, u) {
                    adj[u].push(v);
                    adj[v].push(u);
                }
            }
        }
        ActiveGraph { n, adj }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            assert!(u != v && u < n && v < n, "bad edge ({u}, {v}) for n={n}");
            if !adj[u].contains(&v) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        ActiveGraph { n, adj }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as (u, v) pairs with u < v, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn count_components(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.count_components() == 1
    }

    // A graph is a forest iff every component contributes exactly
    // (size - 1) edges, i.e. |E| = n - components.
    pub fn is_acyclic(&self) -> bool {
        self.edge_count() == self.n - self.count_components()
    }

    pub fn is_spanning_line(&self) -> bool {
        if self.n < 2 {
            return false;
        }
        let ones = (0..self.n).filter(|&u| self.degree(u) == 1).count();
        let twos = (0..self.n).filter(|&u| self.degree(u) == 2).count();
        ones == 2 && twos == self.n - 2 && self.edge_count() == self.n - 1 && self.is_connected()
    }

    pub fn is_spanning_star(&self) -> bool {
        if self.n < 2 {
            return false;
        }
        let centers = (0..self.n).filter(|&u| self.degree(u) == self.n - 1).count();
        let leaves = (0..self.n).filter(|&u| self.degree(u) == 1).count();
        // n = 2 is the single edge: both nodes qualify as center and leaf.
        if self.n == 2 {
            return self.edge_count() == 1;
        }
        centers == 1 && leaves == self.n - 1
    }

    /// Serialize as an edge list: first line `n`, then one `u v` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self, TopologyError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| TopologyError::Parse("empty input".into()))?
            .trim()
            .parse()
            .map_err(|e| TopologyError::Parse(format!("bad node count: {e}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let (u, v) = match (it.next(), it.next(), it.next()) {
                (Some(u), Some(v), None) => (u, v),
                _ => return Err(TopologyError::Parse(format!("expected `u v`, got {line:?}"))),
            };
            let u: usize = u
                .parse()
                .map_err(|e| TopologyError::Parse(format!("bad node id {u:?}: {e}")))?;
            let v: usize = v
                .parse()
                .map_err(|e| TopologyError::Parse(format!("bad node id {v:?}: {e}")))?;
            if u == v || u >= n || v >= n {
                return Err(TopologyError::Parse(format!("edge ({u}, {v}) out of range for n={n}")));
            }
            edges.push((u, v));
        }
        Ok(ActiveGraph::from_edges(n, &edges))
    }

    pub fn configuration(&self, q0: StateId) -> Configuration {
        Configuration::from_edges(vec![q0; self.n], &self.edges())
    }
}

/// True iff some pair of nodes has both directed edges active.
pub fn has_directed_2cycle(cfg: &Configuration) -> bool {
    debug_assert_eq!(cfg.kind(), EdgeKind::Directed);
    let n = cfg.len();
    for u in 0..n {
        for v in (u + 1)..n {
            if cfg.edge(u, v) && cfg.edge(v, u) {
                return true;
            }
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopologyFamily {
    Clique,
    Line,
    Ring,
    Star,
    /// Uniform random spanning tree plus each remaining edge independently
    /// with the given probability.
    RandomConnected(f64),
}

impl TopologyFamily {
    pub fn label(&self) -> String {
        match self {
            TopologyFamily::Clique => "clique".into(),
            TopologyFamily::Line => "line".into(),
            TopologyFamily::Ring => "ring".into(),
            TopologyFamily::Star => "star".into(),
            TopologyFamily::RandomConnected(p) => format!("random({p:.2})"),
        }
    }
}

impl std::str::FromStr for TopologyFamily {
    type Err = TopologyError;

    /// Accepts the `label()` spellings plus `random_connected(p)` and a
    /// bare `random(p)` with any probability in [0, 1].
    fn from_str(s: &str) -> Result<Self, TopologyError> {
        let s = s.trim();
        match s {
            "clique" => return Ok(TopologyFamily::Clique),
            "line" => return Ok(TopologyFamily::Line),
            "ring" => return Ok(TopologyFamily::Ring),
            "star" => return Ok(TopologyFamily::Star),
            _ => {}
        }
        let inner = s
            .strip_prefix("random_connected")
            .or_else(|| s.strip_prefix("random"))
            .and_then(|rest| rest.strip_prefix('('))
            .and_then(|rest| rest.strip_suffix(')'))
            .ok_or_else(|| TopologyError::Parse(format!("unknown family {s:?}")))?;
        let p: f64 = inner
            .trim()
            .parse()
            .map_err(|e| TopologyError::Parse(format!("bad probability {inner:?}: {e}")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(TopologyError::Parse(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        Ok(TopologyFamily::RandomConnected(p))
    }
}

/// Build a connected initial configuration of the requested family with all
/// nodes in state `q0`. The rng is consumed only for `RandomConnected`.
pub fn generate_initial<R: Rng>(
    n: usize,
    family: TopologyFamily,
    q0: StateId,
    rng: &mut R,
) -> Result<Configuration, TopologyError> {
    let need = |family: &'static str, min: usize| {
        if n < min {
            Err(TopologyError::TooSmall { family, n, min })
        } else {
            Ok(())
        }
    };
    match family {
        TopologyFamily::Clique => {
            need("clique", 2)?;
            Ok(Configuration::clique(n, q0))
        }
        TopologyFamily::Line => {
            need("line", 2)?;
            let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            Ok(Configuration::from_edges(vec![q0; n], &edges))
        }
        TopologyFamily::Ring => {
            need("ring", 3)?;
            let mut edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            edges.push((n - 1, 0));
            Ok(Configuration::from_edges(vec![q0; n], &edges))
        }
        TopologyFamily::Star => {
            need("star", 2)?;
            let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
            Ok(Configuration::from_edges(vec![q0; n], &edges))
        }
        TopologyFamily::RandomConnected(p) => {
            need("random_connected", 2)?;
            let tree = random_tree(n, rng);
            let mut cfg = Configuration::from_edges(vec![q0; n], &tree);
            for u in 0..n {
                for v in (u + 1)..n {
                    if !cfg.edge(u, v) && rng.gen_bool(p) {
                        cfg.set_edge(u, v, true);
                    }
                }
            }
            Ok(cfg)
        }
    }
}

// Uniform spanning tree on n labeled nodes via a random Prüfer sequence.
fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Vec<(usize, usize)> {
    if n == 2 {
        return vec![(0, 1)];
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut degree = vec![1u32; n];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<usize>> = (0..n)
        .filter(|&u| degree[u] == 1)
        .map(Reverse)
        .collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &s in &seq {
        let Reverse(leaf) = leaves.pop().expect("prufer decode keeps a leaf available");
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.push(Reverse(s));
        }
    }
    let Reverse(a) = leaves.pop().expect("two nodes remain");
    let Reverse(b) = leaves.pop().expect("two nodes remain");
    edges.push((a, b));
    edges
}

/// `k` copies of a base graph, each missing `removed_edge`, chained into one
/// cycle of copies: copy h's side `i` of the removed edge connects to copy
/// (h+1)'s side `j`.
#[derive(Debug, Clone)]
pub struct FamilyGraph {
    pub base: ActiveGraph,
    pub removed_edge: (usize, usize),
    pub k: usize,
    pub graph: ActiveGraph,
}

impl FamilyGraph {
    pub fn n(&self) -> usize {
        self.base.len() * self.k
    }

    /// Global id of `base_node`'s image in copy `copy`.
    pub fn node(&self, copy: usize, base_node: usize) -> usize {
        debug_assert!(copy < self.k && base_node < self.base.len());
        copy * self.base.len() + base_node
    }

    /// Inverse of [`FamilyGraph::node`]: (copy, base node).
    pub fn base_of(&self, node: usize) -> (usize, usize) {
        (node / self.base.len(), node % self.base.len())
    }

    /// The k inter-copy edges in chain order: h joins (h, i) to (h+1 mod k, j).
    pub fn chain_edges(&self) -> Vec<(usize, usize)> {
        let (i, j) = self.removed_edge;
        (0..self.k)
            .map(|h| (self.node(h, i), self.node((h + 1) % self.k, j)))
            .collect()
    }

    pub fn configuration(&self, q0: StateId) -> Configuration {
        self.graph.configuration(q0)
    }
}

pub fn build_family_graph(
    base: &ActiveGraph,
    cycle_edge: (usize, usize),
    k: usize,
) -> Result<FamilyGraph, TopologyError> {
    let (i, j) = cycle_edge;
    if k < 2 {
        return Err(TopologyError::TooFewCopies(k));
    }
    if !base.is_connected() {
        return Err(TopologyError::DisconnectedBase);
    }
    if !base.has_edge(i, j) {
        return Err(TopologyError::MissingEdge(i, j));
    }
    let kept: Vec<(usize, usize)> = base
        .edges()
        .into_iter()
        .filter(|&(u, v)| (u, v) != (i.min(j), i.max(j)))
        .collect();
    if !ActiveGraph::from_edges(base.len(), &kept).is_connected() {
        return Err(TopologyError::BridgeEdge(i, j));
    }
    let bn = base.len();
    let mut edges = Vec::with_capacity(k * kept.len() + k);
    for h in 0..k {
        for &(u, v) in &kept {
            edges.push((h * bn + u, h * bn + v));
        }
    }
    for h in 0..k {
        edges.push((h * bn + i, ((h + 1) % k) * bn + j));
    }
    Ok(FamilyGraph {
        base: base.clone(),
        removed_edge: cycle_edge,
        k,
        graph: ActiveGraph::from_edges(k * bn, &edges),
    })
}

/// Every labeled graph on n nodes. Exponential; capped to keep misuse loud.
pub fn all_graphs(n: usize) -> Vec<ActiveGraph> {
    assert!((1..=6).contains(&n), "graph enumeration is exponential; n={n} refused");
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .collect();
    let m = pairs.len();
    (0u32..(1 << m))
        .map(|mask| {
            let edges: Vec<_> = pairs
                .iter()
                .enumerate()
                .filter(|&(b, _)| mask >> b & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            ActiveGraph::from_edges(n, &edges)
        })
        .collect()
}

/// Every connected labeled graph on n nodes.
pub fn connected_graphs(n: usize) -> Vec<ActiveGraph> {
    all_graphs(n).into_iter().filter(ActiveGraph::is_connected).collect()
}
