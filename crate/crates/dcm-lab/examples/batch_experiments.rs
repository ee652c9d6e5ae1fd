//! Drive the batch harness from code: the same entry point the `dcm-lab run`
//! subcommand uses, producing deterministic CSV + JSON reports.
//!
//! ```bash
//! cargo run --release --example batch_experiments
//! ```

use dcm_lab::degseq::DegreeModel;
use dcm_lab::experiment::{run, ExperimentConfig, ExperimentKind, OutputFormat, Seeds};

fn main() {
    let dir = std::env::temp_dir().join("dcm-lab-batch-example");
    std::fs::create_dir_all(&dir).unwrap();
    let model_path = dir.join("model.json");
    std::fs::write(&model_path, DegreeModel::two_three().to_json_string().unwrap()).unwrap();

    let cfg = ExperimentConfig {
        model: model_path,
        n_grid: vec![1 << 10, 1 << 11, 1 << 12],
        seeds: Seeds::Count(3),
        experiment: ExperimentKind::ScalingPimin,
        trials: None,
        starts: None,
        num_sources: None,
        s_grid: None,
        pairs: None,
        tolerance: None,
        pool: None,
        rounds: None,
        tail_samples: None,
        window: None,
        step_cap: None,
        vertices: None,
        horizon: None,
        max_spread: Some(3.0),
        out: None,
        format: OutputFormat::Csv,
    };

    let report = run(&cfg, Some(&dir)).unwrap();
    println!(
        "wrote {} rows to {} (exit code {})",
        report.rows,
        report.csv_path.display(),
        report.exit_code()
    );
    let text = std::fs::read_to_string(&report.csv_path).unwrap();
    println!("\n{text}");
    println!("metadata: {}", report.meta_path.display());
}
