//! Memory capacity: how well linear readouts recover past inputs, per delay,
//! before and after recurrent-infomax training.

use ri_reservoir::benchmarks::{memory_capacity, BenchmarkPhases};
use ri_reservoir::infomax::{run_ri_block, RIConfig};
use ri_reservoir::reservoir::{init_network, InputSource, NetworkParams, Reservoir};
use ri_reservoir::rng::stream;

fn report(name: &str, params: &NetworkParams) -> ri_reservoir::Result<()> {
    let phases = BenchmarkPhases {
        washout: 20_000,
        ..BenchmarkPhases::default()
    };
    let mut input = InputSource::bernoulli(params.p0_bar, stream(5, &[3]));
    let score = memory_capacity(params, &phases, 10, &mut input, &mut stream(5, &[4]))?;
    let curve: Vec<String> = score.per_delay.iter().map(|r| format!("{r:.2}")).collect();
    println!("{name:<9} MC {:.3}  per delay [{}]", score.total, curve.join(" "));
    Ok(())
}

fn main() -> ri_reservoir::Result<()> {
    let cfg = RIConfig {
        eta: 2.0,
        input_multiplicity: 5,
        block_steps: 20_000,
        settle_steps: 10_000,
        n_blocks: 60,
    };
    let mut reservoir = Reservoir::new(init_network(30, 0.01, 5)?);
    report("initial", &reservoir.params)?;
    let mut input = InputSource::bernoulli(reservoir.params.p0_bar, stream(5, &[1]));
    let mut rng = stream(5, &[2]);
    for _ in 0..cfg.n_blocks {
        run_ri_block(&mut reservoir, &cfg, &mut input, &mut rng)?;
    }
    report("trained", &reservoir.params)
}
