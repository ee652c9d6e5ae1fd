//! Declare a degree family, materialize it at several sizes, and read off
//! the deterministic exponents and time scales.
//!
//! ```bash
//! cargo run --release --example degree_models
//! ```

use dcm_lab::degseq::{
    exponents, materialize, scales, BalanceMode, DegreeModel,
};

fn main() {
    let model = DegreeModel::two_three();
    println!("model: {}", model.to_json_string().unwrap());

    let e = exponents(&model);
    println!("\nexponents:");
    println!("  gamma0 = {:.5}   gamma1 = {:.5}", e.gamma0, e.gamma1);
    println!("  kappa0 = {:.5}   kappa1 = {:.5}", e.kappa0, e.kappa1);
    println!("  alpha (left-tail) = {:.5}", e.alpha.unwrap());

    println!("\nper-n scales:");
    println!(
        "{:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "n", "nu", "H", "T_ent", "d_star", "hslash"
    );
    for k in [10u32, 12, 14, 16] {
        let n = 1usize << k;
        let seq = materialize(&model, n, BalanceMode::Reject).unwrap().sequence;
        let s = scales(&seq);
        println!(
            "{:>8} {:>8.4} {:>8.4} {:>8.2} {:>8.2} {:>8.2}",
            n, s.nu, s.entropy, s.t_ent, s.d_star, s.hslash
        );
    }

    // Odd sizes are parity-blocked for this family; the shrink mode drops to
    // the nearest feasible size instead of failing.
    let m = materialize(&model, 1001, BalanceMode::ShrinkToFeasible).unwrap();
    println!(
        "\nn = 1001 infeasible; shrunk to n = {} (m = {})",
        m.sequence.n(),
        m.sequence.m()
    );

    // An Eulerian family carries the refined cover-time constant.
    let eul = DegreeModel::eulerian_two_three();
    println!(
        "eulerian {{2,3}} family: beta = {:.3}",
        exponents(&eul).beta_euler.unwrap()
    );
}
