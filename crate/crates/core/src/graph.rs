//! Static interaction network shared by both dynamical layers.
//!
//! Networks are grown with the Holme-Kim model: Barabási-Albert preferential
//! attachment with an extra triad-formation step that closes triangles and
//! raises clustering. Once built a [`Graph`] is immutable.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n_nodes: usize,
    /// Edges added per new node.
    pub m_attach: usize,
    /// Probability of a triad-formation step for each edge after the first.
    pub p_triad: f64,
    pub seed: u64,
}

impl Default for GraphSpec {
    fn default() -> Self {
        GraphSpec {
            n_nodes: 1000,
            m_attach: 10,
            p_triad: 0.01,
            seed: 0,
        }
    }
}

impl GraphSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::config("graph.n_nodes", "must be positive"));
        }
        if u32::try_from(self.n_nodes).is_err() {
            return Err(Error::config("graph.n_nodes", "exceeds u32 node id range"));
        }
        if self.m_attach == 0 {
            return Err(Error::config("graph.m_attach", "must be positive"));
        }
        if self.m_attach >= self.n_nodes {
            return Err(Error::config(
                "graph.m_attach",
                format!("must be < n_nodes ({})", self.n_nodes),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_triad) {
            return Err(Error::config("graph.p_triad", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Undirected simple graph stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<NodeId>>,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Self-loops and duplicate
    /// edges are rejected.
    pub fn from_edges(n_nodes: usize, edges: &[(NodeId, NodeId)]) -> Result<Graph> {
        let mut adjacency = vec![Vec::new(); n_nodes];
        for &(a, b) in edges {
            if a as usize >= n_nodes || b as usize >= n_nodes {
                return Err(Error::Usage(format!(
                    "edge ({a}, {b}) references a node outside 0..{n_nodes}"
                )));
            }
            if a == b {
                return Err(Error::Usage(format!("self-loop on node {a}")));
            }
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        for (i, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            if list.len() != before {
                return Err(Error::Usage(format!("duplicate edge at node {i}")));
            }
        }
        Ok(Graph { adjacency })
    }

    pub fn complete(n_nodes: usize) -> Graph {
        let adjacency = (0..n_nodes as NodeId)
            .map(|i| (0..n_nodes as NodeId).filter(|&j| j != i).collect())
            .collect();
        Graph { adjacency }
    }

    pub fn star(n_nodes: usize) -> Graph {
        let edges: Vec<_> = (1..n_nodes as NodeId).map(|leaf| (0, leaf)).collect();
        Graph::from_edges(n_nodes, &edges).expect("star edges are valid")
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn degree(&self, i: usize) -> Result<usize> {
        self.adjacency
            .get(i)
            .map(Vec::len)
            .ok_or_else(|| Error::Usage(format!("node {i} out of range 0..{}", self.node_count())))
    }

    /// Sorted neighbour list. Panics on an out-of-range id; use [`Graph::degree`]
    /// for a checked lookup.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[NodeId] {
        &self.adjacency[i]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, list)| {
            let i = i as NodeId;
            list.iter().copied().filter(move |&j| i < j).map(move |j| (i, j))
        })
    }

    pub fn min_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_symmetric(&self) -> bool {
        self.adjacency.iter().enumerate().all(|(i, list)| {
            list.iter()
                .all(|&j| self.adjacency[j as usize].binary_search(&(i as NodeId)).is_ok())
        })
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adjacency[u] {
                let v = v as usize;
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    stack.push(v);
                }
            }
        }
        reached == n
    }

    /// Writes the `# nodes=<N>` header followed by one `i j` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# nodes={}", self.node_count())?;
        for (i, j) in self.edges() {
            writeln!(out, "{i} {j}")?;
        }
        Ok(())
    }

    pub fn save_edge_list(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_edge_list(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_edge_list<R: BufRead>(input: R, origin: &Path) -> Result<Graph> {
        let schema = |reason: String| Error::Schema {
            path: origin.to_path_buf(),
            reason,
        };
        let mut lines = input.lines();
        let header = match lines.next() {
            Some(line) => line.map_err(|e| Error::io(origin, e))?,
            None => return Err(schema("empty edge list".into())),
        };
        let n_nodes: usize = header
            .trim()
            .strip_prefix("# nodes=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| schema(format!("expected `# nodes=<N>` header, got `{header}`")))?;
        let mut edges = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |tok: Option<&str>| tok.and_then(|t| t.parse::<NodeId>().ok());
            match (parse(parts.next()), parse(parts.next()), parts.next()) {
                (Some(a), Some(b), None) => edges.push((a, b)),
                _ => {
                    return Err(schema(format!(
                        "line {}: expected `i j`, got `{line}`",
                        lineno + 2
                    )))
                }
            }
        }
        Graph::from_edges(n_nodes, &edges).map_err(|e| schema(e.to_string()))
    }

    pub fn load_edge_list(path: &Path) -> Result<Graph> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Graph::read_edge_list(BufReader::new(file), path)
    }
}

/// Grows a Holme-Kim network.
///
/// Starts from a clique on `m_attach + 1` nodes. Every later node links to
/// `m_attach` distinct existing nodes: the first by degree-proportional
/// choice, each further one by a triad step with probability `p_triad`
/// (a uniformly chosen neighbour of the previous target that is not yet
/// linked), falling back to preferential attachment otherwise or when no
/// such neighbour exists.
pub fn generate_holme_kim(spec: &GraphSpec) -> Result<Graph> {
    spec.validate()?;
    let n = spec.n_nodes;
    let m = spec.m_attach;
    let mut rng = Pcg64::seed_from_u64(spec.seed);

    let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    // Each edge contributes both endpoints, so a uniform draw is degree-proportional.
    let mut endpoints: Vec<NodeId> = Vec::with_capacity(2 * (m * (m + 1) / 2 + m * n));

    let seed_size = m + 1;
    for a in 0..seed_size {
        for b in (a + 1)..seed_size {
            adjacency[a].push(b as NodeId);
            adjacency[b].push(a as NodeId);
            endpoints.push(a as NodeId);
            endpoints.push(b as NodeId);
        }
    }

    let mut targets: Vec<NodeId> = Vec::with_capacity(m);
    let mut candidates: Vec<NodeId> = Vec::new();
    for new in seed_size..n {
        targets.clear();
        for edge in 0..m {
            let triad_target = if edge > 0 && rng.gen_bool(spec.p_triad) {
                let previous = *targets.last().expect("at least one target");
                candidates.clear();
                candidates.extend(
                    adjacency[previous as usize]
                        .iter()
                        .copied()
                        .filter(|v| !targets.contains(v)),
                );
                if candidates.is_empty() {
                    None
                } else {
                    Some(candidates[rng.gen_range(0..candidates.len())])
                }
            } else {
                None
            };
            let target = match triad_target {
                Some(t) => t,
                None => loop {
                    let t = endpoints[rng.gen_range(0..endpoints.len())];
                    if !targets.contains(&t) {
                        break t;
                    }
                },
            };
            targets.push(target);
        }
        for &t in &targets {
            adjacency[new].push(t);
            adjacency[t as usize].push(new as NodeId);
            endpoints.push(new as NodeId);
            endpoints.push(t);
        }
    }

    for list in &mut adjacency {
        list.sort_unstable();
    }
    let graph = Graph { adjacency };
    debug_assert!(graph.is_symmetric());
    Ok(graph)
}
