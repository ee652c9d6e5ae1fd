//! Solve the stationary distribution, inspect its extremes, and check the
//! local in-neighborhood functional Gamma_h against the stationary mass.
//!
//! ```bash
//! cargo run --release --example stationary_pi
//! ```

use dcm_lab::dcm::generate;
use dcm_lab::degseq::{materialize, scales, BalanceMode, DegreeModel};
use dcm_lab::digraph::{bfs_layers, Direction};
use dcm_lab::stationary::{direct_solve, gamma_h, realized_sequence, solve, SolveOptions, Transition};

fn main() {
    let n = 10_000usize;
    let model = DegreeModel::two_three();
    let seq = materialize(&model, n, BalanceMode::Reject).unwrap().sequence;
    let g = generate(&seq, 1);

    let pi = solve(&g, &SolveOptions::default()).unwrap();
    println!(
        "solved in {} iterations ({:?}), residual {:.2e}",
        pi.iterations, pi.method, pi.residual
    );
    println!(
        "n pi_min = {:.4} at vertex {} (type ({},{}))",
        n as f64 * pi.pi_min,
        pi.argmin,
        g.in_degree(pi.argmin),
        g.out_degree(pi.argmin),
    );
    println!(
        "n pi_max = {:.4} at vertex {} (type ({},{}))",
        n as f64 * pi.pi_max,
        pi.argmax,
        g.in_degree(pi.argmax),
        g.out_degree(pi.argmax),
    );

    // The minimum sits at a vertex whose in-neighborhood is a thin tree of
    // low in-degrees; peek at its layers.
    let nb = bfs_layers(&g, pi.argmin, Direction::In, 4);
    let sizes: Vec<usize> = nb.layers.iter().map(Vec::len).collect();
    println!("argmin in-layer sizes to depth 4: {sizes:?}");

    // Gamma_h(y) approximates n pi(y) for h around log log n.
    let sc = scales(&realized_sequence(&g));
    println!("\nGamma_h vs n pi (hslash = {:.2}):", sc.hslash);
    for &y in &[pi.argmin, pi.argmax, 0, 1234] {
        let gamma = gamma_h(&g, y, 3);
        println!(
            "  y = {y:<5} Gamma_3 = {:.4}   n pi(y) = {:.4}",
            gamma,
            n as f64 * pi.pi[y as usize]
        );
    }

    // On a small instance the dense elimination agrees with the sparse path.
    let small_seq = materialize(&model, 200, BalanceMode::Reject).unwrap().sequence;
    let small = generate(&small_seq, 5);
    let a = solve(&small, &SolveOptions::default()).unwrap();
    let b = direct_solve(&small).unwrap();
    let linf = a
        .pi
        .iter()
        .zip(&b.pi)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    println!("\nn = 200: sparse vs dense max gap = {linf:.2e}");

    // Stationarity is a fixed point of the operator.
    let op = Transition::new(&g);
    let stepped = op.step_row(&pi.pi);
    let drift: f64 = stepped
        .iter()
        .zip(&pi.pi)
        .map(|(a, b)| (a - b).abs())
        .sum();
    println!("one more step moves pi by {drift:.2e} in L1");
}
