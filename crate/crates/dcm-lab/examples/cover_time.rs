//! Monte Carlo cover times across sizes, normalized by n log^gamma n, plus
//! the sharper Eulerian constant beta.
//!
//! ```bash
//! cargo run --release --example cover_time
//! ```

use dcm_lab::dcm::generate;
use dcm_lab::degseq::{exponents, materialize, BalanceMode, DegreeModel};
use dcm_lab::rng::{stream_rng, SALT_SAMPLE};
use dcm_lab::walk::{default_step_cap, estimate_tcov};
use rand::Rng;

fn run_family(name: &str, model: &DegreeModel, norm: impl Fn(f64, f64) -> f64) {
    println!("{name}:");
    println!(
        "{:>8} {:>12} {:>12} {:>10} {:>9}",
        "n", "tcov_hat", "ci95(worst)", "normalized", "censored"
    );
    for k in [10u32, 11, 12] {
        let n = 1usize << k;
        let seq = materialize(model, n, BalanceMode::Reject).unwrap().sequence;
        let g = generate(&seq, 1);
        let mut rng = stream_rng(1, SALT_SAMPLE, 0);
        let starts: Vec<u32> = (0..5).map(|_| rng.random_range(0..n as u32)).collect();
        let est = estimate_tcov(&g, &starts, 100, 1, default_step_cap(n));
        let worst = est
            .per_start
            .iter()
            .max_by(|a, b| a.mean.partial_cmp(&b.mean).unwrap())
            .unwrap();
        println!(
            "{:>8} {:>12.0} {:>12.0} {:>10.4} {:>9}",
            n,
            est.tcov_hat,
            worst.ci95,
            norm(est.tcov_hat, n as f64),
            est.censored_total
        );
    }
}

fn main() {
    let model = DegreeModel::two_three();
    let gamma = exponents(&model).gamma1;
    println!("gamma = {gamma:.5}\n");
    run_family("(2,3)(3,2), tcov / (n log^gamma n)", &model, |t, n| {
        t / (n * n.ln().powf(gamma))
    });

    let eul = DegreeModel::eulerian_two_three();
    let beta = exponents(&eul).beta_euler.unwrap();
    println!("\nbeta = {beta:.3} (Eulerian refinement)\n");
    run_family("Eulerian {2,3}, tcov / (beta n log n)", &eul, move |t, n| {
        t / (beta * n * n.ln())
    });
}
