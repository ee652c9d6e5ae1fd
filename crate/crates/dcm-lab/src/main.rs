//! Thin batch CLI over the library. Exit codes: 0 ok, 1 experiment
//! assertion or cell failure, 2 input error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dcm_lab::degseq::{materialize, scales, BalanceMode, DegreeModel};
use dcm_lab::experiment::{run, ExperimentConfig};
use dcm_lab::rde::{fit_left_tail, RdePopulation};
use dcm_lab::stationary::{solve, write_pi_binary, SolveOptions};
use dcm_lab::walk::{default_step_cap, estimate_tcov};
use dcm_lab::{dcm, exponents};

#[derive(Parser)]
#[command(name = "dcm-lab", version, about = "configuration-model digraph experiments")]
struct Cli {
    /// Worker threads (default: DCM_LAB_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate one graph and dump it.
    Gen {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Rejection-sample to a simple digraph.
        #[arg(long)]
        simple: bool,
        #[arg(long, default_value_t = 10_000)]
        max_attempts: u64,
        /// Binary dump path.
        #[arg(long)]
        out: PathBuf,
        /// Optional textual edge-list path.
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Solve the stationary distribution of one instance.
    Pi {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        /// CSV output path (vertex,pi).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Binary output path (f64 array + checksum).
        #[arg(long)]
        bin: Option<PathBuf>,
    },
    /// Monte Carlo cover times on one instance.
    Cover {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: u32,
        #[arg(long, default_value_t = 5)]
        starts: usize,
        #[arg(long)]
        step_cap: Option<u64>,
        /// Per-trial CSV for the worst start.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Population dynamics and left-tail fit.
    Rde {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        pool: usize,
        #[arg(long, default_value_t = 60)]
        rounds: u32,
        #[arg(long, default_value_t = 10_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Fit JSON output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Pool snapshot output path.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("DCM_LAB_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(k) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("dcm-lab: thread pool: {e}");
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("dcm-lab: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, String> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::from_json_file(&config).map_err(|e| e.to_string())?;
            let report = run(&cfg, out.as_deref()).map_err(|e| e.to_string())?;
            println!(
                "wrote {} rows to {}",
                report.rows,
                report.csv_path.display()
            );
            for f in &report.failures {
                eprintln!(
                    "cell (n={}, seed={}) failed at {}: {}",
                    f.n, f.seed, f.stage, f.message
                );
            }
            for a in &report.assertion_failures {
                eprintln!("assertion failed: {a}");
            }
            Ok(ExitCode::from(report.exit_code() as u8))
        }
        Command::Gen {
            model,
            n,
            seed,
            simple,
            max_attempts,
            out,
            edges,
        } => {
            let model = DegreeModel::from_json_file(&model).map_err(|e| e.to_string())?;
            let seq = materialize(&model, n, BalanceMode::Reject)
                .map_err(|e| e.to_string())?
                .sequence;
            let g = if simple {
                let s = dcm::generate_simple(&seq, seed, max_attempts).map_err(|e| e.to_string())?;
                println!("simple after {} attempts", s.attempts);
                s.graph
            } else {
                dcm::generate(&seq, seed)
            };
            g.write_binary_file(&out).map_err(|e| e.to_string())?;
            if let Some(path) = edges {
                let mut f = std::io::BufWriter::new(
                    std::fs::File::create(path).map_err(|e| e.to_string())?,
                );
                g.write_edge_list(&mut f).map_err(|e| e.to_string())?;
            }
            println!("n={} m={} simple={}", g.n(), g.m(), g.is_simple());
            Ok(ExitCode::SUCCESS)
        }
        Command::Pi {
            model,
            n,
            seed,
            tolerance,
            out,
            bin,
        } => {
            let model = DegreeModel::from_json_file(&model).map_err(|e| e.to_string())?;
            let seq = materialize(&model, n, BalanceMode::Reject)
                .map_err(|e| e.to_string())?
                .sequence;
            let sc = scales(&seq);
            let g = dcm::generate(&seq, seed);
            let opts = SolveOptions {
                tolerance,
                ..SolveOptions::default()
            };
            let pi = solve(&g, &opts).map_err(|e| e.to_string())?;
            println!(
                "n={} iterations={} residual={:.3e} n*pi_min={:.6} (vertex {}) n*pi_max={:.6} (vertex {}) t_ent={:.3}",
                n,
                pi.iterations,
                pi.residual,
                n as f64 * pi.pi_min,
                pi.argmin,
                n as f64 * pi.pi_max,
                pi.argmax,
                sc.t_ent,
            );
            if let Some(path) = out {
                let mut f = std::io::BufWriter::new(
                    std::fs::File::create(path).map_err(|e| e.to_string())?,
                );
                pi.write_csv(&mut f).map_err(|e| e.to_string())?;
            }
            if let Some(path) = bin {
                let mut f = std::io::BufWriter::new(
                    std::fs::File::create(path).map_err(|e| e.to_string())?,
                );
                write_pi_binary(&pi.pi, &mut f).map_err(|e| e.to_string())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Cover {
            model,
            n,
            seed,
            trials,
            starts,
            step_cap,
            out,
        } => {
            let model = DegreeModel::from_json_file(&model).map_err(|e| e.to_string())?;
            let exps = exponents(&model);
            let seq = materialize(&model, n, BalanceMode::Reject)
                .map_err(|e| e.to_string())?
                .sequence;
            let g = dcm::generate(&seq, seed);
            let cap = step_cap.unwrap_or_else(|| default_step_cap(n));
            use dcm_lab::rng::{stream_rng, SALT_SAMPLE};
            use rand::Rng;
            let mut rng = stream_rng(seed, SALT_SAMPLE, 0);
            let start_list: Vec<u32> = (0..starts).map(|_| rng.random_range(0..n as u32)).collect();
            let est = estimate_tcov(&g, &start_list, trials, seed, cap);
            let ln_n = (n as f64).ln();
            println!(
                "tcov_hat={:.1} tcov/(n log^g1 n)={:.4} censored={}",
                est.tcov_hat,
                est.tcov_hat / (n as f64 * ln_n.powf(exps.gamma1)),
                est.censored_total,
            );
            if let Some(path) = out {
                let worst = est
                    .per_start
                    .iter()
                    .max_by(|a, b| a.mean.partial_cmp(&b.mean).unwrap())
                    .unwrap();
                let mut f = std::io::BufWriter::new(
                    std::fs::File::create(path).map_err(|e| e.to_string())?,
                );
                worst.write_csv(&mut f).map_err(|e| e.to_string())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Rde {
            model,
            pool,
            rounds,
            samples,
            seed,
            out,
            snapshot,
        } => {
            let model = DegreeModel::from_json_file(&model).map_err(|e| e.to_string())?;
            let exps = exponents(&model);
            let mut pop = RdePopulation::new(&model, pool, seed);
            pop.iterate(rounds);
            println!(
                "round={} mean={:.5} variance={:.5}",
                pop.round(),
                pop.mean(),
                pop.variance()
            );
            if let Some(path) = snapshot {
                let mut f = std::io::BufWriter::new(
                    std::fs::File::create(path).map_err(|e| e.to_string())?,
                );
                pop.write_snapshot(&mut f).map_err(|e| e.to_string())?;
            }
            let mut xs = pop.sample_x(samples, seed.wrapping_add(1));
            match fit_left_tail(&mut xs, None, None) {
                Ok(fit) => {
                    let target = exps.alpha.unwrap_or(f64::NAN);
                    println!(
                        "alpha_hat={:.4} target={:.4} r2={:.4} window=[{:.3},{:.3}]",
                        fit.alpha_hat, target, fit.r2, fit.window.0, fit.window.1
                    );
                    if let Some(path) = out {
                        std::fs::write(path, fit.to_json().to_string())
                            .map_err(|e| e.to_string())?;
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("tail fit refused: {e}");
                    Ok(ExitCode::from(1))
                }
            }
        }
    }
}
