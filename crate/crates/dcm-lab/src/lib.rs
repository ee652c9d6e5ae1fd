//! Sparse directed configuration-model digraphs and the quantitative theory
//! of their random walks: extremal stationary values, diameter, mixing-time
//! cutoff, cover times, return times, and the limiting distributional
//! recursion for the bulk of n pi.
//!
//! The crate is organized around the pipeline
//!
//! 1. [`degseq`]: declare a degree family, materialize a per-n sequence,
//!    and read off its deterministic exponents and time scales;
//! 2. [`dcm`]: sample a multigraph by uniform tail-to-head matching;
//! 3. [`digraph`], [`stationary`], [`walk`]: analyze structure, the
//!    stationary distribution, and walk observables;
//! 4. [`rde`]: approximate the limiting law of n pi by population dynamics;
//! 5. [`experiment`]: batch (n, seed) grids into reproducible CSV reports.
//!
//! Every random operation takes an explicit 64-bit seed and draws from
//! named ChaCha8 streams (see [`rng`]), so identical inputs give identical
//! outputs on any platform and thread count.
//!
//! The `examples/` directory holds one runnable program per capability;
//! `dcm-lab` is the batch CLI over the same library calls.

pub mod dcm;
pub mod degseq;
pub mod digraph;
pub mod experiment;
pub mod rde;
pub mod rng;
pub mod stationary;
pub mod util;
pub mod walk;

#[doc(hidden)]
pub mod oracle;

pub use dcm::{generate, generate_simple, MultiDigraph};
pub use degseq::{
    exponents, materialize, scales, BalanceMode, DegreeModel, DegreeSequence, DegreeType,
    Exponents, ModelScales,
};
pub use digraph::{
    bfs_layers, classify_ltl, count_small_cycles, diameter_exact, diameter_sampled, distance,
    is_strongly_connected, merge_vertices, theta_depth, Direction, NeighborhoodLayers,
};
pub use rde::{fit_left_tail, fit_right_tail, RdePopulation, TailFit};
pub use stationary::{
    cutoff_profile, direct_solve, gamma_h, lambda_t, solve, tv_distance, CutoffProfile,
    SolveOptions, StationaryResult, Transition,
};
pub use walk::{
    estimate_tcov, hitting_time, no_visit_tail, return_profile, simulate_cover, ReturnProfile,
    WalkStats,
};
