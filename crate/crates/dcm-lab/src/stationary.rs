//! The walk operator P(y,x) = m(y,x)/d_y+ and everything computed from it:
//! stationary distribution (sparse iteration and a dense oracle), total
//! variation distances, the uniform-start profile lambda_t, the in-boundary
//! functional Gamma_h, and cutoff profiles on the entropic time scale.

use std::io::{self, Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dcm::MultiDigraph;
use crate::degseq::{scales, DegreeSequence};
use crate::digraph::{bfs_layers, is_strongly_connected, Direction};
use crate::rng::{stream_rng, SALT_SOURCES};
use crate::util::{ksum, l1_distance, Kahan};

/// Sparse action of the walk operator on row and column vectors.
/// Row weights m(y,x)/d_y+ are implied by adjacency multiplicity, so each
/// row sums to exactly 1.
pub struct Transition<'a> {
    g: &'a MultiDigraph,
    inv_out: Vec<f64>,
}

impl<'a> Transition<'a> {
    pub fn new(g: &'a MultiDigraph) -> Self {
        let inv_out = (0..g.n() as u32)
            .map(|v| 1.0 / g.out_degree(v) as f64)
            .collect();
        Transition { g, inv_out }
    }

    pub fn graph(&self) -> &MultiDigraph {
        self.g
    }

    /// mu -> mu P. Gathered over in-edges with compensated per-entry sums;
    /// O(m), deterministic order.
    pub fn step_row(&self, mu: &[f64]) -> Vec<f64> {
        let n = self.g.n();
        debug_assert_eq!(mu.len(), n);
        let scaled: Vec<f64> = mu
            .iter()
            .zip(&self.inv_out)
            .map(|(&m, &w)| m * w)
            .collect();
        (0..n as u32)
            .map(|x| {
                let mut acc = Kahan::default();
                for &y in self.g.in_of(x) {
                    acc.add(scaled[y as usize]);
                }
                acc.value()
            })
            .collect()
    }

    /// v -> P v (column action): (Pv)(y) = (1/d_y+) sum over out-edges v(x).
    pub fn step_col(&self, v: &[f64]) -> Vec<f64> {
        let n = self.g.n();
        debug_assert_eq!(v.len(), n);
        (0..n as u32)
            .map(|y| {
                let mut acc = Kahan::default();
                for &x in self.g.out(y) {
                    acc.add(v[x as usize]);
                }
                acc.value() * self.inv_out[y as usize]
            })
            .collect()
    }

    /// Apply `steps` row steps.
    pub fn evolve_row(&self, mu: &[f64], steps: usize) -> Vec<f64> {
        let mut cur = mu.to_vec();
        for _ in 0..steps {
            cur = self.step_row(&cur);
        }
        cur
    }

    /// The in-degree distribution mu_in(x) = d_x- / m.
    pub fn mu_in(&self) -> Vec<f64> {
        let m = self.g.m() as f64;
        (0..self.g.n() as u32)
            .map(|x| self.g.in_degree(x) as f64 / m)
            .collect()
    }

    pub fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.g.n() as f64; self.g.n()]
    }

    /// Point mass at `x`.
    pub fn delta(&self, x: u32) -> Vec<f64> {
        let mut v = vec![0.0; self.g.n()];
        v[x as usize] = 1.0;
        v
    }
}

/// Half the L1 distance between two probability vectors.
pub fn tv_distance(mu: &[f64], nu: &[f64]) -> f64 {
    0.5 * l1_distance(mu, nu)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveMethod {
    Power,
    Cesaro,
    Direct,
}

/// A stationary distribution with its quality metrics and extremes.
#[derive(Clone, Debug)]
pub struct StationaryResult {
    pub pi: Vec<f64>,
    /// L1 norm of pi P - pi.
    pub residual: f64,
    pub iterations: u32,
    pub method: SolveMethod,
    pub pi_min: f64,
    pub pi_max: f64,
    pub argmin: u32,
    pub argmax: u32,
}

impl StationaryResult {
    fn from_pi(mut pi: Vec<f64>, op: &Transition, iterations: u32, method: SolveMethod) -> Self {
        let total = ksum(&pi);
        for p in pi.iter_mut() {
            *p /= total;
        }
        let residual = l1_distance(&op.step_row(&pi), &pi);
        let (mut argmin, mut argmax) = (0u32, 0u32);
        for (i, &p) in pi.iter().enumerate() {
            if p < pi[argmin as usize] {
                argmin = i as u32;
            }
            if p > pi[argmax as usize] {
                argmax = i as u32;
            }
        }
        StationaryResult {
            pi_min: pi[argmin as usize],
            pi_max: pi[argmax as usize],
            argmin,
            argmax,
            pi,
            residual,
            iterations,
            method,
        }
    }

    /// CSV export: vertex,pi with full float precision.
    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "vertex,pi")?;
        for (v, p) in self.pi.iter().enumerate() {
            writeln!(w, "{v},{p:.16e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("graph is not strongly connected (no path from {from} to {to})")]
    NotStronglyConnected { from: u32, to: u32 },
    #[error("no convergence after {iterations} iterations; last successive L1 difference {last_diff:.3e}")]
    NoConvergence { iterations: u32, last_diff: f64 },
    #[error("converged but residual {residual:.3e} exceeds {limit:.3e}")]
    ResidualTooLarge { residual: f64, limit: f64 },
    #[error("dense solve hit a singular system")]
    Singular,
    #[error("dense solve capped at n = {cap}, got n = {n}")]
    TooLargeForDirect { n: usize, cap: usize },
}

/// Iteration controls for `solve`.
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Successive-difference convergence threshold (L1).
    pub tolerance: f64,
    /// Acceptance threshold on the final residual ||pi P - pi||_1.
    pub residual_tolerance: f64,
    pub max_iters: u32,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: 1e-12,
            residual_tolerance: 1e-10,
            max_iters: 200_000,
        }
    }
}

const CESARO_WINDOW: usize = 8;

/// Stationary distribution by sparse iteration started from mu_in.
///
/// Power steps are declared converged when the successive L1 difference
/// drops below tolerance. If the differences fail to decrease over a window
/// of 8 consecutive iterations (a periodic chain), the solver switches to
/// comparing window averages and returns the averaged vector instead.
pub fn solve(g: &MultiDigraph, opts: &SolveOptions) -> Result<StationaryResult, SolveError> {
    let conn = is_strongly_connected(g);
    if let Some((from, to)) = conn.witness {
        return Err(SolveError::NotStronglyConnected { from, to });
    }
    let op = Transition::new(g);
    let mut mu = op.mu_in();
    let mut recent_diffs: Vec<f64> = Vec::new();
    let mut window: Vec<Vec<f64>> = Vec::new();
    let mut cesaro = false;
    let mut prev_avg: Option<Vec<f64>> = None;
    let mut last_diff = f64::INFINITY;

    for iter in 1..=opts.max_iters {
        let next = op.step_row(&mu);
        let diff = l1_distance(&next, &mu);
        mu = next;
        last_diff = diff;

        if !cesaro {
            if diff < opts.tolerance {
                return finalize(mu, &op, iter, SolveMethod::Power, opts);
            }
            recent_diffs.push(diff);
            if recent_diffs.len() > CESARO_WINDOW {
                recent_diffs.remove(0);
            }
            // Stalled differences mean the powers oscillate instead of
            // converging (periodic chain): no meaningful decrease across a
            // full window.
            if recent_diffs.len() == CESARO_WINDOW
                && recent_diffs[CESARO_WINDOW - 1] >= recent_diffs[0] * (1.0 - 1e-3)
            {
                cesaro = true;
            }
        }
        if cesaro {
            window.push(mu.clone());
            if window.len() > CESARO_WINDOW {
                window.remove(0);
            }
            if window.len() == CESARO_WINDOW {
                let avg = average(&window);
                if let Some(prev) = &prev_avg {
                    if l1_distance(&avg, prev) < opts.tolerance {
                        return finalize(avg, &op, iter, SolveMethod::Cesaro, opts);
                    }
                }
                prev_avg = Some(avg);
            }
        }
    }
    Err(SolveError::NoConvergence {
        iterations: opts.max_iters,
        last_diff,
    })
}

fn finalize(
    pi: Vec<f64>,
    op: &Transition,
    iterations: u32,
    method: SolveMethod,
    opts: &SolveOptions,
) -> Result<StationaryResult, SolveError> {
    let res = StationaryResult::from_pi(pi, op, iterations, method);
    if res.residual > opts.residual_tolerance {
        return Err(SolveError::ResidualTooLarge {
            residual: res.residual,
            limit: opts.residual_tolerance,
        });
    }
    Ok(res)
}

fn average(vs: &[Vec<f64>]) -> Vec<f64> {
    let n = vs[0].len();
    let k = vs.len() as f64;
    (0..n)
        .map(|i| {
            let mut acc = Kahan::default();
            for v in vs {
                acc.add(v[i]);
            }
            acc.value() / k
        })
        .collect()
}

pub const DIRECT_SOLVE_CAP: usize = 2000;

/// Dense ground-truth solve of the stationarity system with normalization,
/// by LU elimination. Test oracle; capped at n = 2000.
pub fn direct_solve(g: &MultiDigraph) -> Result<StationaryResult, SolveError> {
    let n = g.n();
    if n > DIRECT_SOLVE_CAP {
        return Err(SolveError::TooLargeForDirect {
            n,
            cap: DIRECT_SOLVE_CAP,
        });
    }
    let conn = is_strongly_connected(g);
    if let Some((from, to)) = conn.witness {
        return Err(SolveError::NotStronglyConnected { from, to });
    }
    // A = P^T - I with the first row replaced by the normalization sum = 1.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for y in 0..n as u32 {
        let w = 1.0 / g.out_degree(y) as f64;
        for &x in g.out(y) {
            a[(x as usize, y as usize)] += w;
        }
    }
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(0, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[0] = 1.0;
    let lu = a.lu();
    let x = lu.solve(&b).ok_or(SolveError::Singular)?;
    if x.iter().any(|v| !v.is_finite() || *v < -1e-9) {
        return Err(SolveError::Singular);
    }
    let op = Transition::new(g);
    let pi: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
    Ok(StationaryResult::from_pi(pi, &op, 0, SolveMethod::Direct))
}

/// lambda_t(y) = (1/n) sum_x P^t(x,y): t sparse steps from the uniform row.
pub fn lambda_t(g: &MultiDigraph, t: usize) -> Vec<f64> {
    let op = Transition::new(g);
    op.evolve_row(&op.uniform(), t)
}

/// Gamma_h(y): the h-step arrival mass at y from its exact-distance-h
/// in-boundary, weighted by in-degrees. Computed exactly from h column
/// steps applied to the indicator of y.
pub fn gamma_h(g: &MultiDigraph, y: u32, h: usize) -> f64 {
    let seq = realized_sequence(g);
    let hslash = scales(&seq).hslash;
    if (h as f64) > hslash {
        log::warn!(
            "gamma_h at depth {h} exceeds the near-tree depth hslash = {hslash:.2}; \
             the local approximation degrades beyond it"
        );
    }
    let op = Transition::new(g);
    let mut v = op.delta(y);
    for _ in 0..h {
        v = op.step_col(&v);
    }
    let boundary = bfs_layers(g, y, Direction::In, h);
    let mut acc = Kahan::default();
    for &z in boundary.boundary() {
        acc.add(g.in_degree(z) as f64 * v[z as usize]);
    }
    acc.value()
}

/// The realized degree sequence of a generated graph.
pub fn realized_sequence(g: &MultiDigraph) -> DegreeSequence {
    let (din, dout) = g.realized_degrees();
    DegreeSequence::new(din, dout).expect("generated graphs have balanced degrees")
}

/// Worst-case-over-sources TV distance to pi at times floor(s * T_ent).
#[derive(Clone, Debug, Serialize)]
pub struct CutoffProfile {
    pub s_grid: Vec<f64>,
    /// Steps corresponding to each s.
    pub t_grid: Vec<usize>,
    /// Max over sampled sources of TV(P^t(x, .), pi).
    pub tv_values: Vec<f64>,
    pub sources: Vec<u32>,
    pub t_ent: f64,
}

impl CutoffProfile {
    /// CSV export: s,tv.
    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "s,tv")?;
        for (s, tv) in self.s_grid.iter().zip(&self.tv_values) {
            writeln!(w, "{s:.16e},{tv:.16e}")?;
        }
        Ok(())
    }
}

/// Evolve point masses from sampled sources and record the worst TV distance
/// to pi at each grid time. `num_sources >= n` switches to the exact
/// maximum over all sources.
pub fn cutoff_profile(
    g: &MultiDigraph,
    pi: &[f64],
    s_grid: &[f64],
    num_sources: usize,
    seed: u64,
) -> CutoffProfile {
    let n = g.n();
    let seq = realized_sequence(g);
    let t_ent = scales(&seq).t_ent;
    let t_grid: Vec<usize> = s_grid.iter().map(|&s| (s * t_ent).floor() as usize).collect();

    let sources: Vec<u32> = if num_sources >= n {
        (0..n as u32).collect()
    } else {
        let mut rng = stream_rng(seed, SALT_SOURCES, 0);
        let mut picked = Vec::with_capacity(num_sources);
        while picked.len() < num_sources {
            let x = rng.random_range(0..n as u32);
            if !picked.contains(&x) {
                picked.push(x);
            }
        }
        picked
    };

    // Each source walks once to the largest grid time, recording TV at all
    // grid times; sorted order of (t, slot) makes a single pass suffice.
    let mut order: Vec<(usize, usize)> = t_grid.iter().copied().zip(0..t_grid.len()).collect();
    order.sort_unstable();
    let per_source: Vec<Vec<f64>> = sources
        .par_iter()
        .map(|&x| {
            let op = Transition::new(g);
            let mut mu = op.delta(x);
            let mut out = vec![0.0; t_grid.len()];
            let mut t_cur = 0usize;
            for &(t, slot) in &order {
                while t_cur < t {
                    mu = op.step_row(&mu);
                    t_cur += 1;
                }
                out[slot] = tv_distance(&mu, pi);
            }
            out
        })
        .collect();
    let tv_values: Vec<f64> = (0..t_grid.len())
        .map(|slot| {
            per_source
                .iter()
                .map(|v| v[slot])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    CutoffProfile {
        s_grid: s_grid.to_vec(),
        t_grid,
        tv_values,
        sources,
        t_ent,
    }
}

const PI_MAGIC: &[u8; 4] = b"PIV1";

/// Binary export of a probability vector: magic, n, FNV-1a checksum of the
/// raw bits, then little-endian f64s.
pub fn write_pi_binary(pi: &[f64], w: &mut impl Write) -> io::Result<()> {
    w.write_all(PI_MAGIC)?;
    w.write_all(&(pi.len() as u64).to_le_bytes())?;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &p in pi {
        for b in p.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    w.write_all(&h.to_le_bytes())?;
    for &p in pi {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_pi_binary(r: &mut impl Read) -> io::Result<Vec<f64>> {
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() < 20 || &buf[0..4] != PI_MAGIC {
        return Err(bad("bad pi header"));
    }
    let n = u64::from_le_bytes(buf[4..12].try_into().unwrap()) as usize;
    let checksum = u64::from_le_bytes(buf[12..20].try_into().unwrap());
    if buf.len() != 20 + 8 * n {
        return Err(bad("bad pi payload length"));
    }
    let mut pi = Vec::with_capacity(n);
    for i in 0..n {
        let start = 20 + 8 * i;
        pi.push(f64::from_le_bytes(buf[start..start + 8].try_into().unwrap()));
    }
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &p in &pi {
        for b in p.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    if h != checksum {
        return Err(bad("pi checksum mismatch"));
    }
    Ok(pi)
}
