//! Merging two locally tree-like vertices with nearly equal stationary mass
//! barely perturbs the stationary distribution: pi*(y*) tracks
//! pi(y) + pi(y') to within a small multiple of pi_min / log n.
//!
//! ```bash
//! cargo run --release --example merge_experiment
//! ```

use dcm_lab::dcm::generate;
use dcm_lab::degseq::{materialize, BalanceMode, DegreeModel};
use dcm_lab::digraph::{merge_vertices, theta_depth};
use dcm_lab::experiment::eligible_merge_pairs;
use dcm_lab::stationary::{solve, SolveOptions};

fn main() {
    let n = 10_000usize;
    let model = DegreeModel::two_three();
    let seq = materialize(&model, n, BalanceMode::Reject).unwrap().sequence;
    let g = generate(&seq, 1);
    let pi = solve(&g, &SolveOptions::default()).unwrap();
    let scale = pi.pi_min / (n as f64).ln();

    let pairs = eligible_merge_pairs(&g, &pi, theta_depth(n), 10);
    println!(
        "{} eligible pairs (LTL, |pi(y) - pi(y')| <= pi_min/log n, far apart)",
        pairs.len()
    );
    println!(
        "{:>6} {:>6} {:>12} {:>12} {:>12} {:>10}",
        "y", "y'", "pi(y)+pi(y')", "pi*(y*)", "|error|", "err/scale"
    );
    for (y, y2) in pairs {
        let merged = merge_vertices(&g, y, y2);
        let star = solve(&merged.graph, &SolveOptions::default()).unwrap();
        let sum = pi.pi[y as usize] + pi.pi[y2 as usize];
        let got = star.pi[merged.merged as usize];
        println!(
            "{y:>6} {y2:>6} {sum:>12.4e} {got:>12.4e} {:>12.2e} {:>10.3}",
            (sum - got).abs(),
            (sum - got).abs() / scale
        );
    }
    println!("\nscale = pi_min / log n = {scale:.3e}");
}
