//! Slow, independent reference computations used by the test suites.
//! Everything here recomputes quantities along a different route than the
//! library implementation it validates: dense eliminations, subset dynamic
//! programming, exhaustive path enumeration, exact rational arithmetic.
//!
//! Not part of the supported API surface.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::dcm::MultiDigraph;
use crate::digraph::Direction;

/// Expected hitting times E_x[H_target] for every x, by the dense
/// (I - Q) h = 1 absorption solve on the non-target states.
pub fn expected_hitting_times(g: &MultiDigraph, target: u32) -> Vec<f64> {
    let n = g.n();
    assert!(n <= 2000, "dense absorption oracle capped");
    let others: Vec<u32> = (0..n as u32).filter(|&v| v != target).collect();
    let index: HashMap<u32, usize> = others.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let k = others.len();
    let mut a = DMatrix::<f64>::identity(k, k);
    for (i, &v) in others.iter().enumerate() {
        let w = 1.0 / g.out_degree(v) as f64;
        for &t in g.out(v) {
            if let Some(&j) = index.get(&t) {
                a[(i, j)] -= w;
            }
        }
    }
    let b = DVector::from_element(k, 1.0);
    let h = a.lu().solve(&b).expect("absorbing chain is nonsingular");
    let mut out = vec![0.0; n];
    for (i, &v) in others.iter().enumerate() {
        out[v as usize] = h[i];
    }
    out
}

/// Exact expected cover time E_start[tau_cov] by dynamic programming over
/// (visited set, position) states, solving one small linear system per
/// visited set in decreasing-popcount order.
pub fn expected_cover_time(g: &MultiDigraph, start: u32) -> f64 {
    let n = g.n();
    assert!(n <= 14, "subset oracle is exponential in n");
    let full: u32 = (1u32 << n) - 1;
    // h[mask] holds E[time to cover | visited = mask, position = v] for
    // v in mask, indexed by vertex id.
    let mut h: Vec<Vec<f64>> = vec![Vec::new(); 1 << n];
    let mut masks: Vec<u32> = (1..=full).collect();
    masks.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
    for mask in masks {
        let members: Vec<u32> = (0..n as u32).filter(|v| mask >> v & 1 == 1).collect();
        if mask == full {
            h[mask as usize] = vec![0.0; n];
            continue;
        }
        let k = members.len();
        let index: HashMap<u32, usize> =
            members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut a = DMatrix::<f64>::identity(k, k);
        let mut b = DVector::from_element(k, 1.0);
        for (i, &v) in members.iter().enumerate() {
            let w = 1.0 / g.out_degree(v) as f64;
            for &t in g.out(v) {
                if mask >> t & 1 == 1 {
                    a[(i, index[&t])] -= w;
                } else {
                    let next = mask | 1 << t;
                    b[i] += w * h[next as usize][t as usize];
                }
            }
        }
        let sol = a.lu().solve(&b).expect("cover chain is nonsingular");
        let mut row = vec![0.0; n];
        for (i, &v) in members.iter().enumerate() {
            row[v as usize] = sol[i];
        }
        h[mask as usize] = row;
    }
    h[1 << start][start as usize]
}

/// Spectral radius of the walk operator with `y` removed, by power
/// iteration: the survival probability of the no-visit event decays like
/// rho^t.
pub fn quasi_stationary_rate(g: &MultiDigraph, y: u32, iters: usize) -> f64 {
    let n = g.n();
    let mut w = vec![1.0 / (n as f64 - 1.0); n];
    w[y as usize] = 0.0;
    let mut rho = 0.0;
    for _ in 0..iters {
        let mut next = vec![0.0f64; n];
        for v in 0..n as u32 {
            let mass = w[v as usize];
            if mass == 0.0 || v == y {
                continue;
            }
            let share = mass / g.out_degree(v) as f64;
            for &t in g.out(v) {
                next[t as usize] += share;
            }
        }
        next[y as usize] = 0.0;
        let total: f64 = next.iter().sum();
        rho = total;
        for x in next.iter_mut() {
            *x /= total;
        }
        w = next;
    }
    rho
}

/// Everything the path-enumeration oracle knows about one neighborhood.
pub struct EnumeratedNeighborhood {
    /// Exact distance per vertex (None = no path within depth).
    pub dist: Vec<Option<usize>>,
    /// Distinct edge instances on qualifying paths, multiplicities counted.
    pub edge_count: u64,
    pub vertex_count: usize,
    pub tree_excess: i64,
}

/// Exhaustively enumerate all directed paths of length <= depth ending at
/// (In) or starting from (Out) the center, touching every parallel copy,
/// and derive layers, edge multiset, and tree excess. Exponential; for tiny
/// graphs only.
pub fn enumerate_neighborhood(
    g: &MultiDigraph,
    center: u32,
    direction: Direction,
    depth: usize,
) -> EnumeratedNeighborhood {
    let n = g.n();
    let mut dist: Vec<Option<usize>> = vec![None; n];
    dist[center as usize] = Some(0);
    // Edge instances are (vertex, slot-in-adjacency) pairs.
    let mut edges: std::collections::HashSet<(u32, usize)> = std::collections::HashSet::new();

    // DFS over reversed (In) or forward (Out) edge instances.
    #[allow(clippy::too_many_arguments)]
    fn explore(
        g: &MultiDigraph,
        direction: Direction,
        v: u32,
        used: usize,
        depth: usize,
        dist: &mut Vec<Option<usize>>,
        edges: &mut std::collections::HashSet<(u32, usize)>,
        path_edges: &mut Vec<(u32, usize)>,
    ) {
        if used == depth {
            return;
        }
        let nbrs: Vec<u32> = match direction {
            Direction::In => g.in_of(v).to_vec(),
            Direction::Out => g.out(v).to_vec(),
        };
        for (slot, &u) in nbrs.iter().enumerate() {
            // Identify the concrete parallel copy by its slot in the
            // adjacency of the inner endpoint. Every partial path is itself
            // a qualifying path, so recording the appended edge suffices.
            let inst = (v, slot);
            path_edges.push(inst);
            edges.insert(inst);
            let better = match dist[u as usize] {
                None => true,
                Some(d) => used + 1 < d,
            };
            if better {
                dist[u as usize] = Some(used + 1);
            }
            explore(g, direction, u, used + 1, depth, dist, edges, path_edges);
            path_edges.pop();
        }
    }

    let mut path_edges = Vec::new();
    explore(
        g,
        direction,
        center,
        0,
        depth,
        &mut dist,
        &mut edges,
        &mut path_edges,
    );
    let vertex_count = dist.iter().filter(|d| d.is_some()).count();
    let edge_count = edges.len() as u64;
    EnumeratedNeighborhood {
        dist,
        edge_count,
        vertex_count,
        tree_excess: 1 + edge_count as i64 - vertex_count as i64,
    }
}

/// Gamma_h(y) in exact rational arithmetic by enumerating every directed
/// path of length exactly h into y (h <= 8). The per-start weights are the
/// products of 1/d+ along the path; starts strictly closer than h are
/// excluded, mirroring the exact-distance boundary.
pub fn gamma_exact(g: &MultiDigraph, y: u32, h: usize) -> BigRational {
    assert!(h <= 8, "rational oracle capped at depth 8");
    // weights[z] = sum over length-h paths z -> y of the path weight; also
    // track the minimal path length per start to know the true boundary.
    let mut weights: HashMap<u32, BigRational> = HashMap::new();
    let mut min_len: HashMap<u32, usize> = HashMap::new();
    min_len.insert(y, 0);

    fn backward(
        g: &MultiDigraph,
        v: u32,
        len: usize,
        h: usize,
        weight: BigRational,
        weights: &mut HashMap<u32, BigRational>,
        min_len: &mut HashMap<u32, usize>,
    ) {
        if len == h {
            *weights
                .entry(v)
                .or_insert_with(|| BigRational::from(BigInt::from(0))) += weight;
            return;
        }
        for &u in g.in_of(v) {
            // One more edge u -> v on the path; its weight contributes 1/d_u+.
            let w = weight.clone()
                / BigRational::from(BigInt::from(g.out_degree(u) as u64));
            let e = min_len.entry(u).or_insert(usize::MAX);
            *e = (*e).min(len + 1);
            backward(g, u, len + 1, h, w, weights, min_len);
        }
    }

    backward(
        g,
        y,
        0,
        h,
        BigRational::from(BigInt::from(1)),
        &mut weights,
        &mut min_len,
    );
    let mut total = BigRational::from(BigInt::from(0));
    for (z, w) in weights {
        if min_len.get(&z) == Some(&h) {
            total += BigRational::from(BigInt::from(g.in_degree(z) as u64)) * w;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::fixtures::{complete_digraph, directed_cycle};

    #[test]
    fn hitting_on_cycle_is_distance() {
        let g = directed_cycle(9);
        let h = expected_hitting_times(&g, 4);
        for x in 0..9u32 {
            let d = (4 + 9 - x as i32) as usize % 9;
            assert!((h[x as usize] - d as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn cover_of_complete_k3_is_three() {
        let g = complete_digraph(3);
        assert!((expected_cover_time(&g, 0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cover_of_cycle_is_n_minus_one() {
        let g = directed_cycle(6);
        assert!((expected_cover_time(&g, 2) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn quasi_stationary_rate_on_complete_k3() {
        // Avoiding one vertex of K3: each step stays away w.p. 1/2.
        let g = complete_digraph(3);
        let rho = quasi_stationary_rate(&g, 0, 500);
        assert!((rho - 0.5).abs() < 1e-10);
    }
}
