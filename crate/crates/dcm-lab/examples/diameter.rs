//! Exact and sampled diameters against the log_nu n prediction.
//!
//! ```bash
//! cargo run --release --example diameter
//! ```

use dcm_lab::dcm::generate;
use dcm_lab::degseq::{materialize, scales, BalanceMode, DegreeModel};
use dcm_lab::digraph::{diameter_exact, diameter_sampled};

fn main() {
    let model = DegreeModel::two_three();

    // Exact all-pairs diameter at moderate n, a few seeds.
    let n = 10_000usize;
    let seq = materialize(&model, n, BalanceMode::Reject).unwrap().sequence;
    let d_star = scales(&seq).d_star;
    println!("n = {n}: d_star = log_nu n = {d_star:.2}");
    for seed in 1..=5u64 {
        let g = generate(&seq, seed);
        let diam = diameter_exact(&g, None).unwrap();
        println!(
            "  seed {seed}: diameter = {diam}  (ratio {:.3})",
            diam as f64 / d_star
        );
    }

    // At larger n, sample pairwise distances: the typical distance
    // concentrates at d_star and the sampled max lower-bounds the diameter.
    let n = 100_000usize;
    let seq = materialize(&model, n, BalanceMode::Reject).unwrap().sequence;
    let d_star = scales(&seq).d_star;
    let g = generate(&seq, 1);
    let sample = diameter_sampled(&g, 10_000, 1);
    let mut ds: Vec<u32> = sample.reached().collect();
    ds.sort_unstable();
    let q = |p: f64| ds[(p * (ds.len() - 1) as f64) as usize];
    println!("\nn = {n}: d_star = {d_star:.2}, 10^4 sampled pairs");
    println!(
        "  mean = {:.2}, p50 = {}, p98 = {}, max = {}, unreached = {}",
        sample.mean(),
        q(0.5),
        q(0.98),
        sample.max().unwrap(),
        sample.unreached
    );
    println!(
        "  fraction within d_star +- 3: {:.3}",
        sample.fraction_within(d_star, 3.0)
    );
}
