//! Undirected agent networks: construction, validation and the canonical
//! edge ordering used by the consensus variables.
//!
//! Every edge is stored once as `(l, j)` with `l < j`, sorted
//! lexicographically; adjacency lists are sorted. Consensus variables in
//! the solver are indexed by position in `edge_list`.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// An immutable, validated undirected graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    adjacency: Vec<Vec<usize>>,
    edge_list: Vec<(usize, usize)>,
    coords: Option<Vec<(f64, f64)>>,
}

/// Outcome of [`Graph::validate`]: pass/fail with the first violation.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphReport {
    pub pass: bool,
    pub violation: Option<String>,
}

impl Graph {
    /// Builds a graph from an undirected edge set, canonicalizing order
    /// and rejecting self-loops, duplicates, out-of-range endpoints and
    /// disconnected topologies.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if num_nodes < 1 {
            return Err(Error::Dimension("graph needs at least one node".into()));
        }
        let mut canon: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::Dimension(format!("self-loop at node {a}")));
            }
            if a >= num_nodes || b >= num_nodes {
                return Err(Error::Dimension(format!(
                    "edge ({a},{b}) out of range for {num_nodes} nodes"
                )));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        canon.dedup();
        if canon.len() != edges.len() {
            return Err(Error::Dimension("duplicate edges".into()));
        }
        let mut adjacency = vec![Vec::new(); num_nodes];
        for &(l, j) in &canon {
            adjacency[l].push(j);
            adjacency[j].push(l);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        let g = Self {
            num_nodes,
            adjacency,
            edge_list: canon,
            coords: None,
        };
        if num_nodes > 1 && !g.is_connected() {
            return Err(Error::Dimension("graph is disconnected".into()));
        }
        Ok(g)
    }

    /// Assembles a graph from already-built parts without any checks.
    /// Intended for diagnostics and tests of [`Graph::validate`]; solver
    /// entry points only accept graphs built through checked constructors.
    #[doc(hidden)]
    pub fn from_raw_parts(
        num_nodes: usize,
        adjacency: Vec<Vec<usize>>,
        edge_list: Vec<(usize, usize)>,
    ) -> Self {
        Self {
            num_nodes,
            adjacency,
            edge_list,
            coords: None,
        }
    }

    /// Nodes placed uniformly at random in `[0, side]^2` with an edge
    /// whenever the Euclidean distance is at most `radius`. The whole
    /// placement is resampled until the graph is connected and every
    /// degree lies in `[degree_min, degree_max]`; deterministic in `seed`.
    pub fn random_geometric(
        num_nodes: usize,
        side: f64,
        radius: f64,
        degree_min: usize,
        degree_max: usize,
        seed: u64,
    ) -> Result<Self> {
        if num_nodes < 2 {
            return Err(Error::Dimension("geometric graph needs at least 2 nodes".into()));
        }
        if !(side > 0.0) || !(radius > 0.0) {
            return Err(Error::Domain(format!(
                "side and radius must be positive, got side={side} radius={radius}"
            )));
        }
        if degree_min < 1 || degree_min > degree_max || degree_max >= num_nodes {
            return Err(Error::Domain(format!(
                "need 1 <= degree_min <= degree_max < num_nodes, got [{degree_min},{degree_max}] with {num_nodes} nodes"
            )));
        }
        const BUDGET: usize = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut last_violation = "none".to_string();
        for _ in 0..BUDGET {
            let coords: Vec<(f64, f64)> = (0..num_nodes)
                .map(|_| (rng.random::<f64>() * side, rng.random::<f64>() * side))
                .collect();
            let mut edges = Vec::new();
            for l in 0..num_nodes {
                for j in (l + 1)..num_nodes {
                    let dx = coords[l].0 - coords[j].0;
                    let dy = coords[l].1 - coords[j].1;
                    if (dx * dx + dy * dy).sqrt() <= radius {
                        edges.push((l, j));
                    }
                }
            }
            let mut degree = vec![0usize; num_nodes];
            for &(l, j) in &edges {
                degree[l] += 1;
                degree[j] += 1;
            }
            let dmin = degree.iter().copied().min().unwrap_or(0);
            let dmax = degree.iter().copied().max().unwrap_or(0);
            if dmin < degree_min {
                last_violation = format!("minimum degree {dmin} < {degree_min}");
                continue;
            }
            if dmax > degree_max {
                last_violation = format!("maximum degree {dmax} > {degree_max}");
                continue;
            }
            match Self::from_edges(num_nodes, &edges) {
                Ok(mut graph) => {
                    graph.coords = Some(coords);
                    return Ok(graph);
                }
                Err(_) => {
                    last_violation = "connectivity".into();
                }
            }
        }
        Err(Error::InfeasibleTopology {
            attempts: BUDGET,
            constraint: last_violation,
        })
    }

    /// Complete graph on `num_nodes` nodes.
    pub fn complete(num_nodes: usize) -> Result<Self> {
        if num_nodes < 2 {
            return Err(Error::Dimension("complete graph needs at least 2 nodes".into()));
        }
        let mut edges = Vec::new();
        for l in 0..num_nodes {
            for j in (l + 1)..num_nodes {
                edges.push((l, j));
            }
        }
        Self::from_edges(num_nodes, &edges)
    }

    /// Path graph 0 - 1 - ... - (num_nodes-1).
    pub fn path(num_nodes: usize) -> Result<Self> {
        if num_nodes < 2 {
            return Err(Error::Dimension("path graph needs at least 2 nodes".into()));
        }
        let edges: Vec<_> = (0..num_nodes - 1).map(|l| (l, l + 1)).collect();
        Self::from_edges(num_nodes, &edges)
    }

    /// Single node, no edges. Used for centralized (L=1) runs.
    pub fn singleton() -> Self {
        Self {
            num_nodes: 1,
            adjacency: vec![Vec::new()],
            edge_list: Vec::new(),
            coords: None,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edge_list.len()
    }

    pub fn neighbors(&self, l: usize) -> &[usize] {
        &self.adjacency[l]
    }

    pub fn degree(&self, l: usize) -> usize {
        self.adjacency[l].len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edge_list
    }

    /// Node coordinates when the graph came from a geometric placement.
    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        self.coords.as_deref()
    }

    pub fn is_connected(&self) -> bool {
        if self.num_nodes == 0 {
            return false;
        }
        let mut seen = vec![false; self.num_nodes];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &u in self.adjacency.get(v).map(|n| n.as_slice()).unwrap_or(&[]) {
                if u < self.num_nodes && !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.num_nodes
    }

    /// Re-checks the structural invariants, reporting the first violation
    /// instead of erroring.
    pub fn validate(&self) -> GraphReport {
        let fail = |msg: String| GraphReport {
            pass: false,
            violation: Some(msg),
        };
        if self.adjacency.len() != self.num_nodes {
            return fail(format!(
                "adjacency has {} entries for {} nodes",
                self.adjacency.len(),
                self.num_nodes
            ));
        }
        for (l, nbrs) in self.adjacency.iter().enumerate() {
            for &j in nbrs {
                if j >= self.num_nodes {
                    return fail(format!("neighbor {j} of node {l} out of range"));
                }
                if j == l {
                    return fail(format!("self-loop at node {l}"));
                }
                if !self.adjacency[j].contains(&l) {
                    return fail(format!("asymmetry: {j} in N_{l} but {l} not in N_{j}"));
                }
            }
            let mut sorted = nbrs.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != nbrs.len() {
                return fail(format!("duplicate neighbors at node {l}"));
            }
        }
        let mut expect: Vec<(usize, usize)> = Vec::new();
        for (l, nbrs) in self.adjacency.iter().enumerate() {
            for &j in nbrs {
                if l < j {
                    expect.push((l, j));
                }
            }
        }
        expect.sort_unstable();
        if expect != self.edge_list {
            return fail("edge_list inconsistent with adjacency".into());
        }
        if self.num_nodes > 1 && !self.is_connected() {
            return fail("graph is disconnected".into());
        }
        GraphReport {
            pass: true,
            violation: None,
        }
    }

    /// Writes the plain-text edge-list format: first line `L`, then one
    /// 1-indexed `l j` pair per line, sorted.
    pub fn write_edge_list(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{}", self.num_nodes)?;
        for &(l, j) in &self.edge_list {
            writeln!(w, "{} {}", l + 1, j + 1)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`Graph::write_edge_list`].
    pub fn read_edge_list(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge-list file".into()))??;
        let num_nodes: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad node count line: {header:?}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let a: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad edge line: {line:?}")))?;
            let b: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad edge line: {line:?}")))?;
            if a == 0 || b == 0 {
                return Err(Error::Parse("edge-list files are 1-indexed".into()));
            }
            edges.push((a - 1, b - 1));
        }
        Self::from_edges(num_nodes, &edges)
    }
}
