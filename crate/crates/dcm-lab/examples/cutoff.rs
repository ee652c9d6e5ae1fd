//! The total-variation profile on the entropic time scale: TV stays near 1
//! before T_ent and collapses right after it.
//!
//! ```bash
//! cargo run --release --example cutoff
//! ```

use dcm_lab::dcm::generate;
use dcm_lab::degseq::{materialize, BalanceMode, DegreeModel};
use dcm_lab::stationary::{cutoff_profile, solve, SolveOptions};

fn main() {
    let n = 10_000usize;
    let model = DegreeModel::two_three();
    let seq = materialize(&model, n, BalanceMode::Reject).unwrap().sequence;
    let g = generate(&seq, 1);
    let pi = solve(&g, &SolveOptions::default()).unwrap();

    let s_grid: Vec<f64> = (1..=16).map(|k| k as f64 * 0.125).collect();
    let prof = cutoff_profile(&g, &pi.pi, &s_grid, 20, 7);

    println!(
        "n = {n}, T_ent = {:.2}, worst TV over {} sources:",
        prof.t_ent,
        prof.sources.len()
    );
    println!("{:>6} {:>5} {:>8}  profile", "s", "t", "tv");
    for ((s, t), tv) in prof.s_grid.iter().zip(&prof.t_grid).zip(&prof.tv_values) {
        let bar = "#".repeat((tv * 50.0).round() as usize);
        println!("{s:>6.3} {t:>5} {tv:>8.4}  {bar}");
    }

    let mut csv = Vec::new();
    prof.write_csv(&mut csv).unwrap();
    println!(
        "\nCSV head:\n{}",
        String::from_utf8_lossy(&csv).lines().take(3).collect::<Vec<_>>().join("\n")
    );
}
