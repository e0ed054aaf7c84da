//! A miniature input-multiplicity sweep through the experiment runner,
//! followed by the aggregated report.
//!
//! Pass a directory to keep the output; otherwise a temporary one is used.

use std::path::PathBuf;

use ri_reservoir::runner::{self, ExperimentConfig, RunOptions};

fn main() -> ri_reservoir::Result<()> {
    let mut cfg = ExperimentConfig::reduced();
    cfg.network.n_neurons = 12;
    cfg.ri.block_steps = 5_000;
    cfg.ri.settle_steps = 2_000;
    cfg.ri.n_blocks = 20;
    cfg.benchmark.washout = 5_000;
    cfg.benchmark.learning = 800;
    cfg.benchmark.testing = 800;
    cfg.benchmark.tau_max = 8;
    cfg.benchmark.mi_probe = 5_000;
    cfg.experiment.k_sweep = vec![1, 5, 12];
    cfg.experiment.n_trials = 2;
    cfg.experiment.eval_every = 10;
    cfg.experiment.checkpoint_every = 10;
    cfg.experiment.out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join(format!("ri-k-sweep-{}", std::process::id())));
    cfg.validate()?;

    let trace = runner::run_experiment_with(&cfg, &RunOptions::default())?;
    let report = runner::report::aggregate(&trace)?;
    println!("{:>3} {:>6} {:>8} {:>8} {:>8}", "K", "block", "MC", "BC2", "BC3");
    for row in &report.scores {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!("{:>3} {:>6} {:>8} {:>8} {:>8}", row.k_multiplicity, row.block, f(row.mc_mean), f(row.bc2_mean), f(row.bc3_mean));
    }
    runner::write_report(&cfg.experiment.out_dir, &report)?;
    println!("output in {}", cfg.experiment.out_dir.display());
    Ok(())
}
