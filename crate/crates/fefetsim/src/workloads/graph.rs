//! Dense adjacency-matrix graphs, SNAP edge-list parsing, BFS queries, and
//! the graph fault-injection pipeline.
//!
//! Graphs are stored as dense row-major bit matrices so every flipped bit in
//! memory is an edge erasure or an erroneous addition.

use std::collections::BTreeMap;
use std::io::BufRead;

use rand::Rng;

use crate::programming::MemConfig;
use crate::seed::{stream_rng, Purpose};

use super::{store_and_readback, BitBuffer, InjectionReport, WorkloadError};

/// Unreachable-node sentinel in BFS distance vectors.
pub const UNREACHABLE: u32 = u32::MAX;

/// Graph as a dense adjacency bit matrix; bit (u,v) = edge u -> v.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub n_nodes: usize,
    pub directed: bool,
    adjacency: BitBuffer,
    /// Compacted id -> original id, ascending.
    pub original_ids: Vec<u64>,
}

impl Graph {
    pub fn empty(n_nodes: usize, directed: bool) -> Graph {
        Graph {
            n_nodes,
            directed,
            adjacency: BitBuffer::zeros(n_nodes * n_nodes),
            original_ids: (0..n_nodes as u64).collect(),
        }
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency.get(u * self.n_nodes + v)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        self.adjacency.set(u * self.n_nodes + v, true);
        if !self.directed {
            self.adjacency.set(v * self.n_nodes + u, true);
        }
    }

    pub fn n_edges_bits(&self) -> usize {
        self.adjacency.count_ones()
    }

    /// The adjacency matrix as the bit payload stored in memory.
    pub fn bits(&self) -> &BitBuffer {
        &self.adjacency
    }

    /// Rebuild a graph from a (possibly corrupted) readback of the
    /// adjacency bits.
    pub fn from_bits(bits: BitBuffer, like: &Graph) -> Result<Graph, WorkloadError> {
        if bits.len() != like.n_nodes * like.n_nodes {
            return Err(WorkloadError::SizeMismatch(
                bits.len(),
                like.n_nodes * like.n_nodes,
            ));
        }
        Ok(Graph {
            n_nodes: like.n_nodes,
            directed: like.directed,
            adjacency: bits,
            original_ids: like.original_ids.clone(),
        })
    }

    /// Storage requirement of the dense adjacency matrix in MiB.
    pub fn capacity_mib(n_nodes: usize) -> f64 {
        (n_nodes as f64 * n_nodes as f64) / 8.0 / (1u64 << 20) as f64
    }
}

/// Parse a SNAP-format edge list: '#' comment lines and whitespace-separated
/// non-negative integer id pairs. Ids are compacted to 0..N-1 in ascending
/// order of original id; duplicate edges collapse; self-loops stay on the
/// diagonal; undirected inputs are symmetrized.
pub fn load_edge_list<R: BufRead>(reader: R, directed: bool) -> Result<Graph, WorkloadError> {
    let mut edges: Vec<(u64, u64)> = Vec::new();
    let mut ids: BTreeMap<u64, usize> = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<u64, WorkloadError> {
            tok.ok_or(())
                .and_then(|t| t.parse::<u64>().map_err(|_| ()))
                .map_err(|_| WorkloadError::Parse {
                    line: lineno + 1,
                    msg: format!("expected two non-negative integers, got '{trimmed}'"),
                })
        };
        let u = parse(it.next())?;
        let v = parse(it.next())?;
        if it.next().is_some() {
            return Err(WorkloadError::Parse {
                line: lineno + 1,
                msg: format!("trailing tokens in '{trimmed}'"),
            });
        }
        ids.entry(u).or_insert(0);
        ids.entry(v).or_insert(0);
        edges.push((u, v));
    }
    if ids.is_empty() {
        return Err(WorkloadError::EmptyGraph);
    }
    for (compact, (_, slot)) in ids.iter_mut().enumerate() {
        *slot = compact;
    }
    let mut g = Graph::empty(ids.len(), directed);
    g.original_ids = ids.keys().copied().collect();
    for (u, v) in edges {
        g.add_edge(ids[&u], ids[&v]);
    }
    Ok(g)
}

/// Erdos-Renyi G(n, p) with a seeded stream.
pub fn generate_er(n_nodes: usize, p: f64, master_seed: u64) -> Graph {
    let mut rng = stream_rng(master_seed, Purpose::GraphGen, 0);
    let mut g = Graph::empty(n_nodes, true);
    for u in 0..n_nodes {
        for v in 0..n_nodes {
            if u != v && rng.random::<f64>() < p {
                g.add_edge(u, v);
            }
        }
    }
    g
}

/// Clustered synthetic graph: dense within equally-sized clusters, sparse
/// between them.
pub fn generate_clustered(
    n_nodes: usize,
    n_clusters: usize,
    p_in: f64,
    p_out: f64,
    master_seed: u64,
) -> Graph {
    let mut rng = stream_rng(master_seed, Purpose::GraphGen, 1);
    let mut g = Graph::empty(n_nodes, true);
    let cluster = |u: usize| u * n_clusters / n_nodes;
    for u in 0..n_nodes {
        for v in 0..n_nodes {
            if u == v {
                continue;
            }
            let p = if cluster(u) == cluster(v) { p_in } else { p_out };
            if rng.random::<f64>() < p {
                g.add_edge(u, v);
            }
        }
    }
    g
}

/// BFS hop distances from `source` over directed edges; unreachable nodes
/// get [`UNREACHABLE`].
pub fn bfs_distances(graph: &Graph, source: usize) -> Vec<u32> {
    assert!(source < graph.n_nodes);
    let n = graph.n_nodes;
    let mut dist = vec![UNREACHABLE; n];
    dist[source] = 0;
    let mut frontier = vec![source];
    let mut next = Vec::new();
    let mut d = 0u32;
    while !frontier.is_empty() {
        d += 1;
        for &u in &frontier {
            for v in 0..n {
                if dist[v] == UNREACHABLE && graph.has_edge(u, v) {
                    dist[v] = d;
                    next.push(v);
                }
            }
        }
        std::mem::swap(&mut frontier, &mut next);
        next.clear();
    }
    dist
}

/// Mean BFS accuracy over `n_queries` seeded source nodes sampled without
/// replacement: per query, the fraction of nodes whose hop distance matches
/// the golden graph (unreachable matches unreachable).
pub fn graph_query_score(
    golden: &Graph,
    faulty: &Graph,
    n_queries: usize,
    master_seed: u64,
) -> Result<f64, WorkloadError> {
    if golden.n_nodes != faulty.n_nodes {
        return Err(WorkloadError::SizeMismatch(golden.n_nodes, faulty.n_nodes));
    }
    let n = golden.n_nodes;
    let n_queries = n_queries.min(n).max(1);
    // Partial Fisher-Yates for sampling without replacement.
    let mut rng = stream_rng(master_seed, Purpose::Query, 0);
    let mut pool: Vec<usize> = (0..n).collect();
    let mut sources = Vec::with_capacity(n_queries);
    for i in 0..n_queries {
        let j = i + rng.random_range(0..(n - i));
        pool.swap(i, j);
        sources.push(pool[i]);
    }
    let mut total = 0.0;
    for &s in &sources {
        let a = bfs_distances(golden, s);
        let b = bfs_distances(faulty, s);
        let matches = a.iter().zip(&b).filter(|(x, y)| x == y).count();
        total += matches as f64 / n as f64;
    }
    Ok(total / n_queries as f64)
}

/// Push a graph's adjacency matrix through program -> sense and score BFS
/// query accuracy against the golden graph.
pub fn run_graph_injection(
    golden: &Graph,
    mem: &MemConfig,
    n_queries: usize,
    master_seed: u64,
) -> Result<InjectionReport, WorkloadError> {
    let (bits_out, stats) = store_and_readback(golden.bits(), mem, master_seed)?;
    let faulty = Graph::from_bits(bits_out, golden)?;
    let metric_after = graph_query_score(golden, &faulty, n_queries, master_seed)?;
    Ok(InjectionReport::new("graph", &stats, 1.0, metric_after))
}
