//! Saves a network to a snapshot directory, reloads it bit for bit and
//! scores the frozen copy.

use ri_reservoir::reservoir::{init_network, NetworkState};
use ri_reservoir::runner::{evaluate_checkpoint, ExperimentConfig};
use ri_reservoir::snapshot::{read_snapshot, write_snapshot, SnapshotTag};

fn main() -> ri_reservoir::Result<()> {
    let dir = std::env::temp_dir().join(format!("ri-snapshot-{}", std::process::id()));
    let params = init_network(15, 0.5, 4)?;
    let tag = SnapshotTag {
        seed: 4,
        block: 0,
        trial: 0,
        k_multiplicity: 1,
        skipped_blocks: 0,
    };
    write_snapshot(&dir, &params, &NetworkState::silent(15), tag)?;
    let back = read_snapshot(&dir)?;
    println!("reloaded {} neurons, identical: {}", back.params.n_neurons(), back.params == params);

    let mut bench = ExperimentConfig::reduced().benchmark;
    bench.washout = 10_000;
    bench.tau_max = 10;
    let eval = evaluate_checkpoint(&dir, &bench, 1)?;
    let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
    println!("MC {}  BC2 {}  BC3 {}", f(eval.mc()), f(eval.bc(2)), f(eval.bc(3)));
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
