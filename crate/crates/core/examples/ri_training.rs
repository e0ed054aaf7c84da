//! Trains a small reservoir by recurrent infomax and prints the information
//! estimate block by block.

use ri_reservoir::infomax::{run_ri_block, RIConfig};
use ri_reservoir::reservoir::{init_network, InputSource, Reservoir};
use ri_reservoir::rng::stream;

fn main() -> ri_reservoir::Result<()> {
    let cfg = RIConfig {
        eta: 2.0,
        input_multiplicity: 5,
        block_steps: 20_000,
        settle_steps: 10_000,
        n_blocks: 40,
    };
    let mut reservoir = Reservoir::new(init_network(20, 0.01, 11)?);
    let mut input = InputSource::bernoulli(reservoir.params.p0_bar, stream(11, &[1]));
    let mut rng = stream(11, &[2]);

    for block in 0..cfg.n_blocks {
        let outcome = run_ri_block(&mut reservoir, &cfg, &mut input, &mut rng)?;
        if block % 5 == 0 || block + 1 == cfg.n_blocks {
            let w = &reservoir.params;
            println!(
                "block {block:>3}  MI {:.4} nats  mean|W| {:.3}  mean|w_in| {:.3}",
                outcome.mi.mi,
                w.w_recurrent.abs().mean(),
                w.w_input.abs().mean()
            );
        }
    }
    Ok(())
}
