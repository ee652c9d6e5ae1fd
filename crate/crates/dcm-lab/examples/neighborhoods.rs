//! Directed neighborhoods under the microscope: layer growth at rate nu,
//! tree excess, locally tree-like classification, and small cycles.
//!
//! ```bash
//! cargo run --release --example neighborhoods
//! ```

use dcm_lab::dcm::generate;
use dcm_lab::degseq::{materialize, scales, BalanceMode, DegreeModel};
use dcm_lab::digraph::{
    bfs_layers, classify_ltl, count_small_cycles, theta_depth, Direction,
};

fn main() {
    let n = 10_000usize;
    let model = DegreeModel::two_three();
    let seq = materialize(&model, n, BalanceMode::Reject).unwrap().sequence;
    let sc = scales(&seq);
    let g = generate(&seq, 3);

    println!("boundary growth around vertex 0 (nu = {:.2}):", sc.nu);
    println!("{:>6} {:>10} {:>10} {:>9} {:>7}", "depth", "|dB_in|", "|dB_out|", "nu^h", "tx_in");
    for h in 1..=6usize {
        let inn = bfs_layers(&g, 0, Direction::In, h);
        let out = bfs_layers(&g, 0, Direction::Out, h);
        println!(
            "{h:>6} {:>10} {:>10} {:>9.1} {:>7}",
            inn.boundary().len(),
            out.boundary().len(),
            sc.nu.powi(h as i32),
            inn.tree_excess
        );
    }

    let theta = theta_depth(n);
    let part = classify_ltl(&g, theta);
    println!(
        "\nLTL at depth theta = {theta}: {} of {} vertices ({:.1}%)",
        part.ltl.len(),
        n,
        100.0 * part.ltl.len() as f64 / n as f64
    );

    let cycles = count_small_cycles(&g, theta, None).unwrap();
    println!(
        "small cycles (length <= {}): {} found, min pairwise distance {:?}",
        3 * theta,
        cycles.count(),
        cycles.min_pairwise_distance
    );
    for c in cycles.cycles.iter().take(5) {
        println!("  cycle through {c:?}");
    }
    println!("report as JSON: {}", cycles.to_json());
}
