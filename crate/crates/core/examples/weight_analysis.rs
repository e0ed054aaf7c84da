//! Structure of a trained network: strongest connections, the balance
//! between internal and input weights, and how much each neuron says about
//! the previous input.

use ri_reservoir::analysis::{median, neuron_input_mi, top_connections, weight_summary};
use ri_reservoir::infomax::{run_ri_block, RIConfig};
use ri_reservoir::reservoir::{init_network, InputSource, Reservoir};
use ri_reservoir::rng::stream;

fn main() -> ri_reservoir::Result<()> {
    let cfg = RIConfig {
        eta: 2.0,
        input_multiplicity: 20,
        block_steps: 20_000,
        settle_steps: 10_000,
        n_blocks: 30,
    };
    let mut reservoir = Reservoir::new(init_network(20, 0.01, 21)?);
    let mut input = InputSource::bernoulli(reservoir.params.p0_bar, stream(21, &[1]));
    let mut rng = stream(21, &[2]);
    for _ in 0..cfg.n_blocks {
        run_ri_block(&mut reservoir, &cfg, &mut input, &mut rng)?;
    }

    let summary = weight_summary(&reservoir.params, cfg.n_blocks);
    println!(
        "mean |w| top-50 internal {:.3}, input {:.3}, ratio {:.2}",
        summary.mean_abs_internal_top50,
        summary.mean_abs_input,
        summary.internal_to_input_ratio()
    );
    for c in top_connections(&reservoir.params, 8)? {
        let src = if c.src == 0 { "input".to_string() } else { format!("x{}", c.src) };
        println!("  #{:<2} {src:>6} -> x{:<3} {:+.3}", c.abs_rank, c.dst, c.weight);
    }

    let probe = reservoir.record(30_000, &mut input, &mut rng, false)?;
    let mi = neuron_input_mi(&probe)?;
    println!("I(x_i(t); u(t-1)) median {:.4} nats, max {:.4}", median(&mi), mi.iter().cloned().fold(0.0, f64::max));
    Ok(())
}
