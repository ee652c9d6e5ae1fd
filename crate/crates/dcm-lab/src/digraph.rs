//! Structural analysis of a generated multigraph: directed neighborhoods
//! and their tree excess, distances and diameter, strong connectivity,
//! locally-tree-like classification, small cycles, and vertex merging.

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dcm::MultiDigraph;
use crate::rng::{stream_rng, SALT_PAIRS};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// Neighborhood of paths terminating at the center (distances to it).
    In,
    /// Neighborhood of paths starting at the center (distances from it).
    Out,
}

/// Breadth-first layers around a center, with the edge count and tree excess
/// of the traversed neighborhood (multiplicities included).
#[derive(Clone, Debug, Serialize)]
pub struct NeighborhoodLayers {
    pub center: u32,
    pub direction: Direction,
    pub depth: usize,
    /// layers[t] = vertices at exact directed distance t, t = 0..=depth.
    pub layers: Vec<Vec<u32>>,
    /// Edges of the neighborhood subgraph, parallel copies counted.
    pub edge_count: u64,
    /// 1 + |E| - |V| of the neighborhood subgraph.
    pub tree_excess: i64,
}

impl NeighborhoodLayers {
    pub fn vertex_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn boundary(&self) -> &[u32] {
        self.layers.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn is_tree(&self) -> bool {
        self.tree_excess == 0
    }

    pub fn contains(&self, v: u32) -> bool {
        self.layers.iter().any(|l| l.contains(&v))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("layers serialize")
    }
}

/// The h-neighborhood of `center`. The neighborhood subgraph is the union of
/// all directed paths of length at most `depth` ending at the center (`In`)
/// or starting at it (`Out`); an edge belongs to it, copy by copy, exactly
/// when its inner endpoint sits at distance <= depth - 1.
pub fn bfs_layers(
    g: &MultiDigraph,
    center: u32,
    direction: Direction,
    depth: usize,
) -> NeighborhoodLayers {
    assert!((center as usize) < g.n(), "center out of range");
    let mut dist: HashMap<u32, usize> = HashMap::new();
    dist.insert(center, 0);
    let mut layers: Vec<Vec<u32>> = vec![vec![center]];
    let mut edge_count = 0u64;
    for t in 0..depth {
        let mut next = Vec::new();
        for &v in &layers[t] {
            // Every edge incident to a vertex at distance <= depth-1 lies on
            // a qualifying path.
            edge_count += match direction {
                Direction::In => g.in_degree(v) as u64,
                Direction::Out => g.out_degree(v) as u64,
            };
            let nbrs = match direction {
                Direction::In => g.in_of(v),
                Direction::Out => g.out(v),
            };
            for &u in nbrs {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(u) {
                    e.insert(t + 1);
                    next.push(u);
                }
            }
        }
        layers.push(next);
    }
    let vertex_count: usize = layers.iter().map(Vec::len).sum();
    NeighborhoodLayers {
        center,
        direction,
        depth,
        tree_excess: 1 + edge_count as i64 - vertex_count as i64,
        layers,
        edge_count,
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DistanceReport {
    pub source: u32,
    pub target: u32,
    /// None when the target is unreachable.
    pub distance: Option<u32>,
}

/// Directed distance from `x` to `y` (minimal number of traversed edges).
pub fn distance(g: &MultiDigraph, x: u32, y: u32) -> DistanceReport {
    let mut buf = Vec::new();
    let dist = bfs_distances_from_buf(g, x, &mut buf);
    DistanceReport {
        source: x,
        target: y,
        distance: dist[y as usize],
    }
}

/// Distances from `x` to every vertex (None = unreachable).
pub fn bfs_distances_from(g: &MultiDigraph, x: u32) -> Vec<Option<u32>> {
    let mut buf = Vec::new();
    bfs_distances_from_buf(g, x, &mut buf);
    buf
}

#[derive(Debug, Error)]
pub enum DiameterError {
    #[error("graph is not strongly connected: no path from {from} to {to}")]
    NotStronglyConnected { from: u32, to: u32 },
    #[error("n = {n} exceeds the exact-diameter cap {cap}; use diameter_sampled")]
    CapExceeded { n: usize, cap: usize },
}

pub const DEFAULT_DIAMETER_CAP: usize = 20_000;

/// Exact diameter by all-pairs BFS, parallelized over sources. Errors on a
/// disconnected graph, naming a witness pair.
pub fn diameter_exact(g: &MultiDigraph, cap: Option<usize>) -> Result<u32, DiameterError> {
    let cap = cap.unwrap_or(DEFAULT_DIAMETER_CAP);
    if g.n() > cap {
        return Err(DiameterError::CapExceeded { n: g.n(), cap });
    }
    let scc = is_strongly_connected(g);
    if let Some((from, to)) = scc.witness {
        return Err(DiameterError::NotStronglyConnected { from, to });
    }
    let ecc: Vec<u32> = (0..g.n() as u32)
        .into_par_iter()
        .map_init(Vec::new, |buf, x| {
            let dist = bfs_distances_from_buf(g, x, buf);
            dist.iter().map(|d| d.unwrap()).max().unwrap()
        })
        .collect();
    Ok(ecc.into_iter().max().unwrap())
}

fn bfs_distances_from_buf<'a>(
    g: &MultiDigraph,
    x: u32,
    dist: &'a mut Vec<Option<u32>>,
) -> &'a Vec<Option<u32>> {
    dist.clear();
    dist.resize(g.n(), None);
    let mut queue = VecDeque::new();
    dist[x as usize] = Some(0);
    queue.push_back(x);
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize].unwrap();
        for &u in g.out(v) {
            if dist[u as usize].is_none() {
                dist[u as usize] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Pairwise distances over sampled ordered pairs.
#[derive(Clone, Debug, Serialize)]
pub struct DistanceSample {
    pub samples: Vec<DistanceReport>,
    pub unreached: u64,
}

impl DistanceSample {
    pub fn reached(&self) -> impl Iterator<Item = u32> + '_ {
        self.samples.iter().filter_map(|s| s.distance)
    }

    pub fn mean(&self) -> f64 {
        let mut k = 0u64;
        let mut sum = 0u64;
        for d in self.reached() {
            k += 1;
            sum += d as u64;
        }
        sum as f64 / k as f64
    }

    /// Max over the sample; a lower bound on the diameter.
    pub fn max(&self) -> Option<u32> {
        self.reached().max()
    }

    /// Fraction of reached pairs with |d - center| <= width.
    pub fn fraction_within(&self, center: f64, width: f64) -> f64 {
        let mut total = 0u64;
        let mut inside = 0u64;
        for d in self.reached() {
            total += 1;
            if (d as f64 - center).abs() <= width {
                inside += 1;
            }
        }
        inside as f64 / total as f64
    }

    /// CSV export: source,target,distance (blank when unreachable).
    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "source,target,distance")?;
        for s in &self.samples {
            match s.distance {
                Some(d) => writeln!(w, "{},{},{}", s.source, s.target, d)?,
                None => writeln!(w, "{},{},", s.source, s.target)?,
            }
        }
        Ok(())
    }
}

/// Sample `num_pairs` ordered pairs x != y and record d(x, y). Pairs are
/// drawn in batches sharing a BFS source, which keeps the cost at one BFS
/// per ~64 pairs without biasing the per-pair law.
pub fn diameter_sampled(g: &MultiDigraph, num_pairs: usize, seed: u64) -> DistanceSample {
    assert!(g.n() >= 2);
    let mut rng = stream_rng(seed, SALT_PAIRS, 0);
    let mut samples = Vec::with_capacity(num_pairs);
    let mut unreached = 0u64;
    let mut buf: Vec<Option<u32>> = Vec::new();
    let mut remaining = num_pairs;
    while remaining > 0 {
        let source = rng.random_range(0..g.n() as u32);
        let dist = bfs_distances_from_buf(g, source, &mut buf);
        let batch = remaining.min(64);
        for _ in 0..batch {
            let mut target = rng.random_range(0..g.n() as u32);
            while target == source {
                target = rng.random_range(0..g.n() as u32);
            }
            let d = dist[target as usize];
            if d.is_none() {
                unreached += 1;
            }
            samples.push(DistanceReport {
                source,
                target,
                distance: d,
            });
        }
        remaining -= batch;
    }
    DistanceSample { samples, unreached }
}

#[derive(Clone, Copy, Debug)]
pub struct ConnectivityReport {
    pub connected: bool,
    /// An ordered pair (from, to) with no directed path, when disconnected.
    pub witness: Option<(u32, u32)>,
}

/// Forward plus reverse reachability from vertex 0.
pub fn is_strongly_connected(g: &MultiDigraph) -> ConnectivityReport {
    if g.n() == 0 {
        return ConnectivityReport {
            connected: true,
            witness: None,
        };
    }
    let fwd = bfs_distances_from(g, 0);
    if let Some(u) = fwd.iter().position(|d| d.is_none()) {
        return ConnectivityReport {
            connected: false,
            witness: Some((0, u as u32)),
        };
    }
    // Reverse reachability: BFS over in-edges.
    let mut seen = vec![false; g.n()];
    let mut queue = VecDeque::new();
    seen[0] = true;
    queue.push_back(0u32);
    while let Some(v) = queue.pop_front() {
        for &u in g.in_of(v) {
            if !seen[u as usize] {
                seen[u as usize] = true;
                queue.push_back(u);
            }
        }
    }
    if let Some(u) = seen.iter().position(|&s| !s) {
        return ConnectivityReport {
            connected: false,
            witness: Some((u as u32, 0)),
        };
    }
    ConnectivityReport {
        connected: true,
        witness: None,
    }
}

/// The depth used for the locally-tree-like classification:
/// max(1, floor(log log log n)), so the notion stays non-vacuous at
/// desk-scale n.
pub fn theta_depth(n: usize) -> usize {
    if n < 16 {
        return 1;
    }
    let t = (n as f64).ln().ln().ln().floor();
    (t as i64).max(1) as usize
}

/// Partition into locally-tree-like vertices and the rest.
#[derive(Clone, Debug)]
pub struct LtlPartition {
    pub theta: usize,
    /// V1: both depth-theta neighborhoods are trees meeting only at the center.
    pub ltl: Vec<u32>,
    /// V2: everything else.
    pub non_ltl: Vec<u32>,
}

/// A vertex is locally tree-like when its depth-theta in- and
/// out-neighborhoods are both directed trees intersecting only at the vertex.
pub fn classify_ltl(g: &MultiDigraph, theta: usize) -> LtlPartition {
    let flags: Vec<bool> = (0..g.n() as u32)
        .into_par_iter()
        .map(|v| is_ltl(g, v, theta))
        .collect();
    let mut ltl = Vec::new();
    let mut non_ltl = Vec::new();
    for (v, &f) in flags.iter().enumerate() {
        if f {
            ltl.push(v as u32);
        } else {
            non_ltl.push(v as u32);
        }
    }
    LtlPartition {
        theta,
        ltl,
        non_ltl,
    }
}

pub fn is_ltl(g: &MultiDigraph, v: u32, theta: usize) -> bool {
    let inn = bfs_layers(g, v, Direction::In, theta);
    if !inn.is_tree() {
        return false;
    }
    let out = bfs_layers(g, v, Direction::Out, theta);
    if !out.is_tree() {
        return false;
    }
    let in_set: HashSet<u32> = inn.layers.iter().flatten().copied().collect();
    out.layers
        .iter()
        .flatten()
        .all(|&u| u == v || !in_set.contains(&u))
}

#[derive(Debug, Error)]
pub enum CycleError {
    #[error("small-cycle scan over budget: n * (2 Delta)^(3 theta) = {estimate} > {cap}")]
    WorkCapExceeded { estimate: u128, cap: u128 },
}

/// Small cycles: edge collections of length l <= 3 theta whose undirected
/// projection is a simple cycle (loops count as length 1, antiparallel or
/// doubled pairs as length 2).
#[derive(Clone, Debug, Serialize)]
pub struct SmallCycles {
    pub theta: usize,
    /// Canonical vertex cycles: minimal rotation/reflection, so each
    /// undirected cycle is listed once.
    pub cycles: Vec<Vec<u32>>,
    /// Minimal undirected distance between two distinct small cycles.
    pub min_pairwise_distance: Option<u32>,
}

impl SmallCycles {
    pub fn count(&self) -> usize {
        self.cycles.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("cycles serialize")
    }
}

pub const DEFAULT_CYCLE_WORK_CAP: u128 = 2_000_000_000;

/// Enumerate small cycles by bounded-depth search from every vertex, with
/// canonical deduplication, and report the minimum undirected distance
/// between distinct cycles.
pub fn count_small_cycles(
    g: &MultiDigraph,
    theta: usize,
    work_cap: Option<u128>,
) -> Result<SmallCycles, CycleError> {
    let max_len = 3 * theta;
    let cap = work_cap.unwrap_or(DEFAULT_CYCLE_WORK_CAP);
    let max_deg = (0..g.n() as u32)
        .map(|v| g.in_degree(v) + g.out_degree(v))
        .max()
        .unwrap_or(0) as u128;
    let estimate = (g.n() as u128).saturating_mul(max_deg.saturating_pow(max_len as u32));
    if estimate > cap {
        return Err(CycleError::WorkCapExceeded { estimate, cap });
    }

    // Undirected projection: multiplicity per unordered pair, plus loops.
    let mut loops: HashSet<u32> = HashSet::new();
    let mut multi: HashMap<(u32, u32), u32> = HashMap::new();
    for (x, y) in g.edges() {
        if x == y {
            loops.insert(x);
        } else {
            let key = (x.min(y), x.max(y));
            *multi.entry(key).or_insert(0) += 1;
        }
    }
    // Simple undirected adjacency (deduplicated), sorted for determinism.
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); g.n()];
    for &(a, b) in multi.keys() {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }

    let mut cycles: Vec<Vec<u32>> = Vec::new();
    if max_len >= 1 {
        let mut ls: Vec<u32> = loops.iter().copied().collect();
        ls.sort_unstable();
        cycles.extend(ls.into_iter().map(|v| vec![v]));
    }
    if max_len >= 2 {
        let mut pairs: Vec<(u32, u32)> = multi
            .iter()
            .filter(|(_, &c)| c >= 2)
            .map(|(&k, _)| k)
            .collect();
        pairs.sort_unstable();
        cycles.extend(pairs.into_iter().map(|(a, b)| vec![a, b]));
    }
    if max_len >= 3 {
        // Canonical enumeration: root = minimal vertex of the cycle, second
        // vertex smaller than the last (kills rotations and reflections).
        let mut path: Vec<u32> = Vec::with_capacity(max_len);
        let mut on_path = vec![false; g.n()];
        for root in 0..g.n() as u32 {
            path.push(root);
            on_path[root as usize] = true;
            dfs_cycles(&adj, root, max_len, &mut path, &mut on_path, &mut cycles);
            on_path[root as usize] = false;
            path.pop();
        }
    }

    let min_pairwise_distance = min_cycle_distance(&adj, &cycles);
    Ok(SmallCycles {
        theta,
        cycles,
        min_pairwise_distance,
    })
}

fn dfs_cycles(
    adj: &[Vec<u32>],
    root: u32,
    max_len: usize,
    path: &mut Vec<u32>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<u32>>,
) {
    let last = *path.last().unwrap();
    for &next in &adj[last as usize] {
        if next == root {
            if path.len() >= 3 && path[1] < *path.last().unwrap() {
                out.push(path.clone());
            }
            continue;
        }
        if next < root || on_path[next as usize] || path.len() == max_len {
            continue;
        }
        path.push(next);
        on_path[next as usize] = true;
        dfs_cycles(adj, root, max_len, path, on_path, out);
        on_path[next as usize] = false;
        path.pop();
    }
}

fn min_cycle_distance(adj: &[Vec<u32>], cycles: &[Vec<u32>]) -> Option<u32> {
    if cycles.len() < 2 {
        return None;
    }
    let mut owner: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, c) in cycles.iter().enumerate() {
        for &v in c {
            owner.entry(v).or_default().push(i);
        }
    }
    // A vertex shared by two cycles puts them at distance zero.
    if owner.values().any(|cs| cs.len() > 1) {
        return Some(0);
    }
    let mut best: Option<u32> = None;
    for (i, c) in cycles.iter().enumerate() {
        // Undirected BFS from the whole cycle.
        let mut dist: HashMap<u32, u32> = HashMap::new();
        let mut queue = VecDeque::new();
        for &v in c {
            dist.insert(v, 0);
            queue.push_back(v);
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            if let Some(b) = best {
                if d >= b {
                    continue;
                }
            }
            if let Some(owners) = owner.get(&v) {
                if owners.iter().any(|&j| j != i) {
                    best = Some(best.map_or(d, |b| b.min(d)));
                    continue;
                }
            }
            for &u in &adj[v as usize] {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(u) {
                    e.insert(d + 1);
                    queue.push_back(u);
                }
            }
        }
    }
    best
}

/// Outcome of merging two vertices.
#[derive(Clone, Debug)]
pub struct MergeOutcome {
    pub graph: MultiDigraph,
    /// relabel[old] = new vertex id; both merged vertices map to the same id.
    pub relabel: Vec<u32>,
    pub merged: u32,
}

/// Merge `y` and `y_prime` into one vertex carrying the degree sums; every
/// edge is retargeted, so m is conserved and loops may appear.
pub fn merge_vertices(g: &MultiDigraph, y: u32, y_prime: u32) -> MergeOutcome {
    assert_ne!(y, y_prime, "merge needs two distinct vertices");
    let n = g.n();
    let removed = y.max(y_prime);
    let kept = y.min(y_prime);
    let mut relabel = Vec::with_capacity(n);
    for v in 0..n as u32 {
        relabel.push(if v == removed {
            kept
        } else if v > removed {
            v - 1
        } else {
            v
        });
    }
    let edges: Vec<(u32, u32)> = g
        .edges()
        .map(|(a, b)| (relabel[a as usize], relabel[b as usize]))
        .collect();
    MergeOutcome {
        graph: MultiDigraph::from_edges(n - 1, &edges, g.seed()),
        merged: kept,
        relabel,
    }
}

/// Convenience fixtures used across tests and examples.
pub mod fixtures {
    use super::MultiDigraph;

    /// 0 -> 1 -> ... -> n-1 -> 0.
    pub fn directed_cycle(n: usize) -> MultiDigraph {
        let edges: Vec<(u32, u32)> = (0..n as u32).map(|v| (v, (v + 1) % n as u32)).collect();
        MultiDigraph::from_edges(n, &edges, 0)
    }

    /// All ordered pairs (i, j), i != j.
    pub fn complete_digraph(n: usize) -> MultiDigraph {
        let mut edges = Vec::new();
        for i in 0..n as u32 {
            for j in 0..n as u32 {
                if i != j {
                    edges.push((i, j));
                }
            }
        }
        MultiDigraph::from_edges(n, &edges, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::{complete_digraph, directed_cycle};
    use super::*;
    use crate::dcm::generate;
    use crate::degseq::{materialize, scales, BalanceMode, DegreeModel};

    #[test]
    fn cycle_in_layers_and_excess() {
        let g = directed_cycle(3);
        let nb = bfs_layers(&g, 0, Direction::In, 3);
        let sizes: Vec<usize> = nb.layers.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![1, 1, 1, 0]);
        assert_eq!(nb.edge_count, 3);
        assert_eq!(nb.tree_excess, 1);
    }

    #[test]
    fn binary_in_tree_is_a_tree() {
        // Depth-2 binary in-tree: 7 vertices, edges point toward the root 0.
        let edges = vec![
            (1u32, 0u32),
            (2, 0),
            (3, 1),
            (4, 1),
            (5, 2),
            (6, 2),
        ];
        let g = MultiDigraph::from_edges(7, &edges, 0);
        let nb = bfs_layers(&g, 0, Direction::In, 2);
        let sizes: Vec<usize> = nb.layers.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![1, 2, 4]);
        assert_eq!(nb.tree_excess, 0);
    }

    #[test]
    fn double_edge_counts_as_excess() {
        let g = MultiDigraph::from_edges(2, &[(1, 0), (1, 0)], 0);
        let nb = bfs_layers(&g, 0, Direction::In, 1);
        assert_eq!(nb.vertex_count(), 2);
        assert_eq!(nb.edge_count, 2);
        assert_eq!(nb.tree_excess, 1);
    }

    #[test]
    fn distances_and_diameter_on_fixtures() {
        let g = directed_cycle(9);
        assert_eq!(distance(&g, 0, 5).distance, Some(5));
        assert_eq!(distance(&g, 5, 0).distance, Some(4));
        assert_eq!(diameter_exact(&g, None).unwrap(), 8);
        let k4 = complete_digraph(4);
        assert_eq!(diameter_exact(&k4, None).unwrap(), 1);
    }

    #[test]
    fn diameter_errors() {
        // Two disjoint 2-cycles.
        let g = MultiDigraph::from_edges(4, &[(0, 1), (1, 0), (2, 3), (3, 2)], 0);
        match diameter_exact(&g, None).unwrap_err() {
            DiameterError::NotStronglyConnected { from: 0, to } => assert!(to >= 2),
            other => panic!("unexpected {other:?}"),
        }
        let c = directed_cycle(30);
        assert!(matches!(
            diameter_exact(&c, Some(10)),
            Err(DiameterError::CapExceeded { .. })
        ));
    }

    #[test]
    fn sampled_distances_on_cycle_match_closed_form() {
        let n = 500;
        let g = directed_cycle(n);
        let s = diameter_sampled(&g, 4000, 11);
        assert_eq!(s.unreached, 0);
        // Uniform ordered pair on the cycle: distance uniform on 1..n-1,
        // mean n/2.
        let exact = n as f64 / 2.0;
        let sd = n as f64 / 12f64.sqrt() / (4000f64).sqrt();
        assert!((s.mean() - exact).abs() < 5.0 * sd, "mean {}", s.mean());
        assert!(s.max().unwrap() <= diameter_exact(&g, None).unwrap());
    }

    #[test]
    fn sampled_distances_concentrate() {
        let n = 100_000;
        let seq = materialize(&DegreeModel::two_three(), n, BalanceMode::Reject)
            .unwrap()
            .sequence;
        let g = generate(&seq, 1);
        let sc = scales(&seq);
        let s = diameter_sampled(&g, 10_000, 4);
        assert_eq!(s.unreached, 0);
        // Typical distances pile up around d_star; the left tail below it
        // is geometric (~ nu^-j at d_star - j), so a +-5 window captures
        // nearly everything.
        assert!(s.fraction_within(sc.d_star, 5.0) >= 0.98);
        assert!((s.mean() - sc.d_star).abs() < 2.0);
    }

    #[test]
    fn connectivity_witnesses() {
        assert!(is_strongly_connected(&directed_cycle(5)).connected);
        let g = MultiDigraph::from_edges(4, &[(0, 1), (1, 0), (2, 3), (3, 2)], 0);
        let r = is_strongly_connected(&g);
        assert!(!r.connected);
        assert!(r.witness.is_some());
    }

    #[test]
    fn typical_instances_are_strongly_connected() {
        let seq = materialize(&DegreeModel::two_three(), 10_000, BalanceMode::Reject)
            .unwrap()
            .sequence;
        let mut ok = 0;
        for seed in 0..50 {
            if is_strongly_connected(&generate(&seq, seed)).connected {
                ok += 1;
            }
        }
        assert!(ok >= 49, "only {ok}/50 strongly connected");
    }

    #[test]
    fn ltl_fixtures() {
        // Glued in/out trees at the root: LTL at depth 1.
        let edges = vec![(1u32, 0u32), (2, 0), (0, 3), (0, 4)];
        let g = MultiDigraph::from_edges(5, &edges, 0);
        assert!(is_ltl(&g, 0, 1));
        // A vertex on a 2-cycle is not LTL: neighborhoods meet beyond it.
        let g2 = MultiDigraph::from_edges(2, &[(0, 1), (1, 0)], 0);
        assert!(!is_ltl(&g2, 0, 1));
        // Self-loop: not LTL either.
        let g3 = MultiDigraph::from_edges(1, &[(0, 0)], 0);
        assert!(!is_ltl(&g3, 0, 1));
    }

    #[test]
    fn ltl_envelope_on_model_instance() {
        let n = 10_000;
        let seq = materialize(&DegreeModel::two_three(), n, BalanceMode::Reject)
            .unwrap()
            .sequence;
        let g = generate(&seq, 1);
        let theta = theta_depth(n);
        assert_eq!(theta, 1);
        let part = classify_ltl(&g, theta);
        assert_eq!(part.ltl.len() + part.non_ltl.len(), n);
        let envelope = (seq.max_degree() as f64).powi(15 * theta as i32);
        assert!((part.non_ltl.len() as f64) <= envelope);
        // Most vertices are LTL at this scale.
        assert!(part.ltl.len() as f64 > 0.9 * n as f64);
    }

    #[test]
    fn ltl_is_relabel_invariant() {
        let seq = materialize(&DegreeModel::two_three(), 100, BalanceMode::Reject)
            .unwrap()
            .sequence;
        let g = generate(&seq, 9);
        // Relabel v -> (v + 37) mod n.
        let n = g.n() as u32;
        let perm = |v: u32| (v + 37) % n;
        let edges: Vec<(u32, u32)> = g.edges().map(|(a, b)| (perm(a), perm(b))).collect();
        let h = MultiDigraph::from_edges(n as usize, &edges, 0);
        let pg = classify_ltl(&g, 1);
        let mut mapped: Vec<u32> = pg.ltl.iter().map(|&v| perm(v)).collect();
        mapped.sort_unstable();
        let ph = classify_ltl(&h, 1);
        assert_eq!(mapped, ph.ltl);
    }

    #[test]
    fn small_cycle_fixtures() {
        // One directed 3-cycle with tree hair.
        let edges = vec![(0u32, 1u32), (1, 2), (2, 0), (3, 0), (4, 0), (5, 3)];
        let g = MultiDigraph::from_edges(6, &edges, 0);
        let sc = count_small_cycles(&g, 1, None).unwrap();
        assert_eq!(sc.count(), 1);
        assert_eq!(sc.cycles[0], vec![0, 1, 2]);
        assert!(sc.min_pairwise_distance.is_none());

        // Two 2-cycles joined by an undirected path of length 5.
        let mut edges = vec![(0u32, 1u32), (1, 0), (6, 7), (7, 6)];
        edges.extend([(1, 2), (2, 3), (3, 4), (4, 5), (5, 6)]);
        let g = MultiDigraph::from_edges(8, &edges, 0);
        let sc = count_small_cycles(&g, 1, None).unwrap();
        assert_eq!(sc.count(), 2);
        assert_eq!(sc.min_pairwise_distance, Some(5));
    }

    #[test]
    fn small_cycles_on_model_instance() {
        let n = 10_000;
        let seq = materialize(&DegreeModel::two_three(), n, BalanceMode::Reject)
            .unwrap()
            .sequence;
        let g = generate(&seq, 2);
        let sc = count_small_cycles(&g, 1, None).unwrap();
        let envelope = (seq.max_degree() as f64).powi(9);
        assert!((sc.count() as f64) <= envelope);
    }

    #[test]
    fn cycle_work_cap_refusal() {
        let g = complete_digraph(20);
        assert!(matches!(
            count_small_cycles(&g, 2, Some(1000)),
            Err(CycleError::WorkCapExceeded { .. })
        ));
    }

    #[test]
    fn merge_two_cycle_gives_double_loop() {
        let g = MultiDigraph::from_edges(2, &[(0, 1), (1, 0)], 0);
        let out = merge_vertices(&g, 0, 1);
        assert_eq!(out.graph.n(), 1);
        assert_eq!(out.graph.m(), 2);
        assert_eq!(out.graph.multiplicity(0, 0), 2);
    }

    #[test]
    fn merge_conserves_degree_census() {
        let g = directed_cycle(4);
        let out = merge_vertices(&g, 0, 2);
        assert_eq!(out.graph.n(), 3);
        assert_eq!(out.graph.m(), 4);
        let star = out.merged;
        assert_eq!(out.graph.in_degree(star), 2);
        assert_eq!(out.graph.out_degree(star), 2);
        for v in 0..3u32 {
            if v != star {
                assert_eq!(out.graph.in_degree(v), 1);
                assert_eq!(out.graph.out_degree(v), 1);
            }
        }

        let seq = materialize(&DegreeModel::two_three(), 100, BalanceMode::Reject)
            .unwrap()
            .sequence;
        let big = generate(&seq, 4);
        let merged = merge_vertices(&big, 10, 70);
        assert_eq!(merged.graph.m(), big.m());
        assert_eq!(
            merged.graph.in_degree(merged.merged) as u64,
            big.in_degree(10) as u64 + big.in_degree(70) as u64
        );
        assert_eq!(
            merged.graph.out_degree(merged.merged) as u64,
            big.out_degree(10) as u64 + big.out_degree(70) as u64
        );
    }

    #[test]
    fn boundary_growth_envelope() {
        // |dB_h| / nu^h stays within a polylog envelope for overwhelmingly
        // many sampled (y, h) with h in the clamped admissible window.
        let n = 10_000;
        let seq = materialize(&DegreeModel::two_three(), n, BalanceMode::Reject)
            .unwrap()
            .sequence;
        let g = generate(&seq, 3);
        let sc = scales(&seq);
        let h_hi = sc.h_eta(0.5).floor() as usize;
        let h_lo = (sc.ell0.floor() as usize).min(h_hi).max(1);
        let mut rng = stream_rng(999, SALT_PAIRS, 1);
        let mut ok = 0;
        let total = 200;
        for _ in 0..total {
            let y = rng.random_range(0..n as u32);
            let h = rng.random_range(h_lo..=h_hi);
            let nb = bfs_layers(&g, y, Direction::In, h);
            let ratio = nb.boundary().len() as f64 / sc.nu.powi(h as i32);
            if (0.0316..=31.6).contains(&ratio) {
                ok += 1;
            }
        }
        assert!(ok * 100 >= total * 99, "only {ok}/{total} in envelope");
    }
}
