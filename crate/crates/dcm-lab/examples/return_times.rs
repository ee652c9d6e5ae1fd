//! Exact return profiles at locally tree-like vertices and the no-visit
//! tail whose decay rate tracks pi(y) / R_y(1).
//!
//! ```bash
//! cargo run --release --example return_times
//! ```

use dcm_lab::dcm::generate;
use dcm_lab::degseq::{materialize, BalanceMode, DegreeModel};
use dcm_lab::digraph::{classify_ltl, theta_depth};
use dcm_lab::rng::{stream_rng, SALT_SAMPLE};
use dcm_lab::stationary::{solve, SolveOptions};
use dcm_lab::walk::{no_visit_tail, return_profile};
use rand::Rng;

fn main() {
    let n = 10_000usize;
    let model = DegreeModel::two_three();
    let seq = materialize(&model, n, BalanceMode::Reject).unwrap().sequence;
    let g = generate(&seq, 1);

    let theta = theta_depth(n);
    let part = classify_ltl(&g, theta);
    println!(
        "theta = {theta}: {} locally tree-like vertices, {} not",
        part.ltl.len(),
        part.non_ltl.len()
    );

    // Exact expected returns R within the horizon T = ceil(log^3 n): close
    // to 1 plus the stationary mass accumulated over the horizon.
    let horizon = (n as f64).ln().powi(3).ceil() as usize;
    let mut rng = stream_rng(5, SALT_SAMPLE, 0);
    let mut r1s = Vec::new();
    for _ in 0..30 {
        let y = part.ltl[rng.random_range(0..part.ltl.len())];
        r1s.push(return_profile(&g, y, horizon).r1);
    }
    r1s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!(
        "R over 30 LTL vertices at T = {horizon}: min {:.4}, median {:.4}, max {:.4}",
        r1s[0],
        r1s[r1s.len() / 2],
        r1s[r1s.len() - 1]
    );

    // The no-visit probability decays exponentially at rate ~ pi(y) / R.
    let pi = solve(&g, &SolveOptions::default()).unwrap();
    let y = part.ltl[0];
    let t_start = 200u64;
    let grid: Vec<u64> = (0..12).map(|k| t_start + k * 5_000).collect();
    let tail = no_visit_tail(&g, y, t_start, &grid, 4000, 9, Some(pi.pi[y as usize]));
    println!("\nno-visit tail at y = {y} (T = {t_start}):");
    for (t, s) in tail.t_grid.iter().zip(&tail.survival) {
        println!("  P(no visit in [T, {t:>6}]) = {s:.4}");
    }
    println!(
        "fitted rate {:.3e} vs pi(y)/R = {:.3e} (ratio {:.3}, r2 = {:.4})",
        tail.p_hat,
        tail.expected_rate.unwrap(),
        tail.p_hat / tail.expected_rate.unwrap(),
        tail.fit_r2
    );
}
