//! Sampling the directed configuration model.
//!
//! Each vertex owns `d+` tails and `d-` heads; a uniformly random bijection
//! from tails to heads defines the edge multiset. We realize the bijection by
//! shuffling the tail array (Fisher-Yates via `rand`, driven by a ChaCha8
//! stream) and pairing it positionally with the head array in canonical
//! order, which is distributed identically to picking one of the m! maps
//! uniformly. Self-loops and parallel edges are kept; `generate_simple`
//! rejection-samples them away.

use std::io::{self, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::degseq::DegreeSequence;
use crate::rng::{stream_rng, SALT_GENERATE};

/// A directed multigraph in CSR form, both directions materialized.
/// Multiplicity is expressed by repetition: vertex `x` appears in the
/// out-list of `y` once per parallel edge, so a uniform index into the
/// out-slice realizes the walk kernel m(y,x)/d_y+ with a single draw.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiDigraph {
    n: usize,
    m: u64,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
    seed: u64,
    simple: bool,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("simple-graph rejection exhausted after {attempts} attempts")]
    RejectionExhausted { attempts: u64 },
    #[error("graph dump is malformed: {0}")]
    BadDump(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl MultiDigraph {
    /// Build from an explicit edge list (used by tests and fixtures).
    /// Degrees are inferred; edge order within a source is preserved.
    pub fn from_edges(n: usize, edges: &[(u32, u32)], seed: u64) -> Self {
        let mut out_deg = vec![0usize; n];
        for &(u, _) in edges {
            out_deg[u as usize] += 1;
        }
        let mut out_offsets = vec![0usize; n + 1];
        for v in 0..n {
            out_offsets[v + 1] = out_offsets[v] + out_deg[v];
        }
        let mut cursor = out_offsets.clone();
        let mut out_targets = vec![0u32; edges.len()];
        for &(u, v) in edges {
            out_targets[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
        }
        Self::from_csr(n, out_offsets, out_targets, seed)
    }

    fn from_csr(n: usize, out_offsets: Vec<usize>, out_targets: Vec<u32>, seed: u64) -> Self {
        let m = out_targets.len() as u64;
        let (in_offsets, in_sources) = transpose(n, &out_offsets, &out_targets);
        let mut g = MultiDigraph {
            n,
            m,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
            seed,
            simple: false,
        };
        g.simple = g.compute_simple();
        g
    }

    fn compute_simple(&self) -> bool {
        let mut seen: Vec<u32> = Vec::new();
        for y in 0..self.n {
            seen.clear();
            for &x in self.out(y as u32) {
                if x as usize == y || seen.contains(&x) {
                    return false;
                }
                seen.push(x);
            }
        }
        true
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// No self-loops and no parallel edges.
    pub fn is_simple(&self) -> bool {
        self.simple
    }

    /// Out-neighbors of `y`, one entry per parallel edge.
    pub fn out(&self, y: u32) -> &[u32] {
        &self.out_targets[self.out_offsets[y as usize]..self.out_offsets[y as usize + 1]]
    }

    /// In-neighbors of `x`, one entry per parallel edge.
    pub fn in_of(&self, x: u32) -> &[u32] {
        &self.in_sources[self.in_offsets[x as usize]..self.in_offsets[x as usize + 1]]
    }

    pub fn out_degree(&self, y: u32) -> usize {
        self.out_offsets[y as usize + 1] - self.out_offsets[y as usize]
    }

    pub fn in_degree(&self, x: u32) -> usize {
        self.in_offsets[x as usize + 1] - self.in_offsets[x as usize]
    }

    /// Multiplicity of the edge (x, y).
    pub fn multiplicity(&self, x: u32, y: u32) -> usize {
        self.out(x).iter().filter(|&&t| t == y).count()
    }

    /// Rebuild the in-CSR from the out-CSR and compare; the stored transpose
    /// must match bit for bit.
    pub fn transpose_is_consistent(&self) -> bool {
        let (off, src) = transpose(self.n, &self.out_offsets, &self.out_targets);
        off == self.in_offsets && src == self.in_sources
    }

    /// The degree sequence realized by the adjacency.
    pub fn realized_degrees(&self) -> (Vec<u16>, Vec<u16>) {
        let din = (0..self.n).map(|v| self.in_degree(v as u32) as u16).collect();
        let dout = (0..self.n).map(|v| self.out_degree(v as u32) as u16).collect();
        (din, dout)
    }

    /// Iterate all edges (source, target) in canonical out-CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n as u32).flat_map(move |y| self.out(y).iter().map(move |&x| (y, x)))
    }

    /// Textual edge list, one `x y` line per edge, multiplicity by repetition.
    pub fn write_edge_list(&self, w: &mut impl Write) -> io::Result<()> {
        let mut buf = String::new();
        for (x, y) in self.edges() {
            buf.push_str(&format!("{x} {y}\n"));
            if buf.len() > 1 << 16 {
                w.write_all(buf.as_bytes())?;
                buf.clear();
            }
        }
        w.write_all(buf.as_bytes())
    }

    pub fn read_edge_list(r: &mut impl Read, n: usize, seed: u64) -> Result<Self, GraphError> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<u32, GraphError> {
                s.and_then(|v| v.parse().ok())
                    .ok_or_else(|| GraphError::BadDump(format!("edge list line {}", lineno + 1)))
            };
            edges.push((parse(it.next())?, parse(it.next())?));
        }
        Ok(Self::from_edges(n, &edges, seed))
    }

    /// Versioned binary dump: header (magic, version, n, m, seed, simple,
    /// degree checksum) followed by the out-CSR. Round-trips losslessly.
    pub fn write_binary(&self, w: &mut impl Write) -> io::Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&self.m.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&[self.simple as u8])?;
        w.write_all(&self.degree_checksum().to_le_bytes())?;
        for &o in &self.out_offsets {
            w.write_all(&(o as u64).to_le_bytes())?;
        }
        for &t in &self.out_targets {
            w.write_all(&t.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self, GraphError> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        let mut pos = 0usize;
        let take = |pos: &mut usize, k: usize| -> Result<&[u8], GraphError> {
            if *pos + k > buf.len() {
                return Err(GraphError::BadDump("truncated".into()));
            }
            let s = &buf[*pos..*pos + k];
            *pos += k;
            Ok(s)
        };
        if take(&mut pos, 4)? != DUMP_MAGIC {
            return Err(GraphError::BadDump("bad magic".into()));
        }
        let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
        if version != DUMP_VERSION {
            return Err(GraphError::BadDump(format!("unsupported version {version}")));
        }
        let n = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
        let m = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let seed = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let simple_flag = take(&mut pos, 1)?[0] != 0;
        let checksum = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let mut out_offsets = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            out_offsets.push(u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize);
        }
        if *out_offsets.last().unwrap() as u64 != m {
            return Err(GraphError::BadDump("offsets do not close at m".into()));
        }
        let mut out_targets = Vec::with_capacity(m as usize);
        for _ in 0..m {
            out_targets.push(u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()));
        }
        if pos != buf.len() {
            return Err(GraphError::BadDump("trailing bytes".into()));
        }
        let g = Self::from_csr(n, out_offsets, out_targets, seed);
        if g.degree_checksum() != checksum {
            return Err(GraphError::BadDump("degree checksum mismatch".into()));
        }
        if g.simple != simple_flag {
            return Err(GraphError::BadDump("simple flag mismatch".into()));
        }
        Ok(g)
    }

    pub fn write_binary_file(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        let mut f = io::BufWriter::new(std::fs::File::create(path)?);
        self.write_binary(&mut f)?;
        Ok(())
    }

    pub fn read_binary_file(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let mut f = io::BufReader::new(std::fs::File::open(path)?);
        Self::read_binary(&mut f)
    }

    /// FNV-1a over both realized degree arrays.
    pub fn degree_checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for v in 0..self.n as u32 {
            eat(self.in_degree(v) as u64);
            eat(self.out_degree(v) as u64);
        }
        h
    }
}

const DUMP_MAGIC: &[u8; 4] = b"DCM1";
const DUMP_VERSION: u32 = 1;

fn transpose(n: usize, out_offsets: &[usize], out_targets: &[u32]) -> (Vec<usize>, Vec<u32>) {
    let mut in_deg = vec![0usize; n];
    for &t in out_targets {
        in_deg[t as usize] += 1;
    }
    let mut in_offsets = vec![0usize; n + 1];
    for v in 0..n {
        in_offsets[v + 1] = in_offsets[v] + in_deg[v];
    }
    // Stable counting sort by target: sources of each vertex appear in
    // out-CSR order, which makes the transpose canonical.
    let mut cursor = in_offsets.clone();
    let mut in_sources = vec![0u32; out_targets.len()];
    for y in 0..n {
        for &x in &out_targets[out_offsets[y]..out_offsets[y + 1]] {
            in_sources[cursor[x as usize]] = y as u32;
            cursor[x as usize] += 1;
        }
    }
    (in_offsets, in_sources)
}

/// Sample one multigraph from the model with the given seed.
pub fn generate(seq: &DegreeSequence, seed: u64) -> MultiDigraph {
    generate_attempt(seq, seed, 0)
}

fn generate_attempt(seq: &DegreeSequence, seed: u64, attempt: u64) -> MultiDigraph {
    let n = seq.n();
    let m = seq.m() as usize;
    let mut tails: Vec<u32> = Vec::with_capacity(m);
    let mut heads: Vec<u32> = Vec::with_capacity(m);
    for v in 0..n {
        for _ in 0..seq.out_degrees()[v] {
            tails.push(v as u32);
        }
        for _ in 0..seq.in_degrees()[v] {
            heads.push(v as u32);
        }
    }
    let mut rng = stream_rng(seed, SALT_GENERATE, attempt);
    tails.shuffle(&mut rng);

    // Pair tails[i] -> heads[i]; heads are in vertex-block order, so edges
    // grouped by source require one counting pass.
    let mut out_deg = vec![0usize; n];
    for &t in &tails {
        out_deg[t as usize] += 1;
    }
    debug_assert!(out_deg
        .iter()
        .zip(seq.out_degrees())
        .all(|(&a, &b)| a == b as usize));
    let mut out_offsets = vec![0usize; n + 1];
    for v in 0..n {
        out_offsets[v + 1] = out_offsets[v] + out_deg[v];
    }
    let mut cursor = out_offsets.clone();
    let mut out_targets = vec![0u32; m];
    for (i, &t) in tails.iter().enumerate() {
        out_targets[cursor[t as usize]] = heads[i];
        cursor[t as usize] += 1;
    }
    MultiDigraph::from_csr(n, out_offsets, out_targets, seed)
}

/// Outcome of rejection sampling to a simple digraph.
#[derive(Clone, Debug)]
pub struct SimpleSample {
    pub graph: MultiDigraph,
    /// Number of generations used, counting the accepted one.
    pub attempts: u64,
}

/// Resample until the digraph is simple. Each attempt uses the stream id
/// equal to the attempt index, so attempt 0 coincides with `generate`.
pub fn generate_simple(
    seq: &DegreeSequence,
    seed: u64,
    max_attempts: u64,
) -> Result<SimpleSample, GraphError> {
    for attempt in 0..max_attempts {
        let g = generate_attempt(seq, seed, attempt);
        if g.is_simple() {
            return Ok(SimpleSample {
                graph: g,
                attempts: attempt + 1,
            });
        }
    }
    Err(GraphError::RejectionExhausted {
        attempts: max_attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degseq::{materialize, BalanceMode, DegreeModel};
    use std::collections::BTreeMap;

    fn two_three(n: usize) -> DegreeSequence {
        materialize(&DegreeModel::two_three(), n, BalanceMode::Reject)
            .unwrap()
            .sequence
    }

    #[test]
    fn degrees_are_conserved() {
        let seq = two_three(10);
        let g = generate(&seq, 42);
        let (din, dout) = g.realized_degrees();
        assert_eq!(din, seq.in_degrees());
        assert_eq!(dout, seq.out_degrees());
        assert_eq!(g.m(), 25);
    }

    #[test]
    fn single_vertex_double_loop_is_forced() {
        let seq = DegreeSequence::new(vec![2], vec![2]).unwrap();
        let g = generate(&seq, 7);
        assert_eq!(g.out(0), &[0, 0]);
        assert_eq!(g.multiplicity(0, 0), 2);
        assert!(!g.is_simple());
    }

    #[test]
    fn two_degree_one_vertices_split_evenly() {
        // Either a 2-cycle or two self-loops, each with probability 1/2.
        let seq = DegreeSequence::new(vec![1, 1], vec![1, 1]).unwrap();
        let trials = 4000u64;
        let mut loops = 0u64;
        for seed in 0..trials {
            let g = generate(&seq, seed);
            if g.multiplicity(0, 0) == 1 {
                loops += 1;
            } else {
                assert_eq!(g.multiplicity(0, 1), 1);
                assert_eq!(g.multiplicity(1, 0), 1);
            }
        }
        // 4 sigma around 1/2.
        let sd = (trials as f64 * 0.25).sqrt();
        assert!((loops as f64 - trials as f64 / 2.0).abs() < 4.0 * sd);
    }

    #[test]
    fn matching_frequencies_match_enumeration() {
        // n = 4, all vertices (2,2): enumerate all 8! tail->head bijections,
        // collect the exact law on edge multisets, and compare sampled
        // frequencies within 4 sigma.
        let seq = DegreeSequence::new(vec![2; 4], vec![2; 4]).unwrap();
        let stubs: Vec<u32> = vec![0, 0, 1, 1, 2, 2, 3, 3];
        let mut law: BTreeMap<Vec<(u32, u32)>, u64> = BTreeMap::new();
        let mut perm: Vec<usize> = (0..8).collect();
        // Heap's algorithm over tail positions.
        fn heaps(
            k: usize,
            perm: &mut Vec<usize>,
            stubs: &[u32],
            law: &mut BTreeMap<Vec<(u32, u32)>, u64>,
        ) {
            if k == 1 {
                let mut edges: Vec<(u32, u32)> = perm
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| (stubs[p], stubs[i]))
                    .collect();
                edges.sort_unstable();
                *law.entry(edges).or_insert(0) += 1;
                return;
            }
            for i in 0..k {
                heaps(k - 1, perm, stubs, law);
                if k.is_multiple_of(2) {
                    perm.swap(i, k - 1);
                } else {
                    perm.swap(0, k - 1);
                }
            }
        }
        heaps(8, &mut perm, &stubs, &mut law);
        let total: u64 = law.values().sum();
        assert_eq!(total, 40320);

        let trials = 20_000u64;
        let mut counts: BTreeMap<Vec<(u32, u32)>, u64> = BTreeMap::new();
        for seed in 0..trials {
            let g = generate(&seq, seed);
            let mut edges: Vec<(u32, u32)> = g.edges().collect();
            edges.sort_unstable();
            *counts.entry(edges).or_insert(0) += 1;
        }
        for (outcome, &c) in &counts {
            assert!(law.contains_key(outcome), "impossible outcome sampled");
            let _ = c;
        }
        for (outcome, &w) in &law {
            let p = w as f64 / total as f64;
            let expect = trials as f64 * p;
            let sd = (trials as f64 * p * (1.0 - p)).sqrt();
            let got = *counts.get(outcome).unwrap_or(&0) as f64;
            assert!(
                (got - expect).abs() <= 4.0 * sd,
                "outcome {outcome:?}: got {got}, expected {expect:.1} +- {sd:.1}"
            );
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let seq = two_three(100);
        let a = generate(&seq, 123);
        let b = generate(&seq, 123);
        assert_eq!(a, b);
        let c = generate(&seq, 124);
        assert_ne!(a, c);
    }

    #[test]
    fn transpose_consistency() {
        let seq = two_three(200);
        let g = generate(&seq, 5);
        assert!(g.transpose_is_consistent());
    }

    #[test]
    fn simple_rejection_accepts_at_scale() {
        // Acceptance probability is Theta(1), so the attempt count is tens
        // and stays of the same order as n grows.
        let mut means = Vec::new();
        for n in [500usize, 1000] {
            let seq = two_three(n);
            let mut attempts = Vec::new();
            for seed in 0..30 {
                let s = generate_simple(&seq, seed, 5000).unwrap();
                assert!(s.graph.is_simple());
                attempts.push(s.attempts);
            }
            means.push(attempts.iter().sum::<u64>() as f64 / attempts.len() as f64);
        }
        for &m in &means {
            assert!(m > 1.0 && m < 1000.0, "mean attempts {m}");
        }
        let ratio = means[1] / means[0];
        assert!((1.0 / 3.0..=3.0).contains(&ratio), "rate drifts: {means:?}");
    }

    #[test]
    fn simple_rejection_impossible_cases() {
        // Single vertex with d = 2: self-loops forced.
        let seq = DegreeSequence::new(vec![2], vec![2]).unwrap();
        let err = generate_simple(&seq, 1, 50).unwrap_err();
        assert!(matches!(err, GraphError::RejectionExhausted { attempts: 50 }));
        // Two vertices of type (2,2): pigeonhole forbids a simple outcome.
        let seq = DegreeSequence::new(vec![2, 2], vec![2, 2]).unwrap();
        assert!(generate_simple(&seq, 1, 50).is_err());
    }

    #[test]
    fn binary_dump_round_trip() {
        let seq = two_three(50);
        let g = generate(&seq, 99);
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        let back = MultiDigraph::read_binary(&mut &buf[..]).unwrap();
        assert_eq!(g, back);
        let mut buf2 = Vec::new();
        back.write_binary(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn edge_list_round_trip() {
        let seq = two_three(30);
        let g = generate(&seq, 3);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let back = MultiDigraph::read_edge_list(&mut &buf[..], g.n(), g.seed()).unwrap();
        assert_eq!(g, back);
    }
}
