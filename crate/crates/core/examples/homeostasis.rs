//! Bias homeostasis pulls every neuron's firing rate to its target.
//!
//! Run with `cargo run --release --example homeostasis`.

use ri_reservoir::reservoir::{init_network, InputSource, Reservoir};
use ri_reservoir::rng::stream;

fn main() -> ri_reservoir::Result<()> {
    let params = init_network(30, 0.01, 7)?;
    let target = params.p_bar[0];
    let mut reservoir = Reservoir::new(params);
    let mut input = InputSource::bernoulli(reservoir.params.p0_bar, stream(7, &[1]));
    let mut rng = stream(7, &[2]);

    println!("{:>8} {:>10} {:>10} {:>10}", "steps", "min rate", "mean rate", "max rate");
    for window in 0..8 {
        let trace = reservoir.record(10_000, &mut input, &mut rng, true)?;
        let rates: Vec<f64> = (0..trace.n_neurons)
            .map(|i| (0..trace.len()).map(|k| trace.row(k)[i] as f64).sum::<f64>() / trace.len() as f64)
            .collect();
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        let (lo, hi) = rates.iter().fold((1.0f64, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        println!("{:>8} {lo:>10.4} {mean:>10.4} {hi:>10.4}", (window + 1) * 10_000);
    }
    println!("target rate {target}");
    Ok(())
}
