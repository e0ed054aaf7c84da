//! Gaussian estimate of the one-step mutual information of a reservoir and
//! the gradient that recurrent infomax follows.

use ri_reservoir::infomax::{accumulate_stats, gaussian_mi, mi_gradient};
use ri_reservoir::reservoir::{init_network, InputSource, Reservoir};
use ri_reservoir::rng::stream;

fn main() -> ri_reservoir::Result<()> {
    for sigma2 in [0.01, 0.1, 1.0] {
        let mut reservoir = Reservoir::new(init_network(20, sigma2, 3)?);
        let mut input = InputSource::bernoulli(0.5, stream(3, &[1]));
        let mut rng = stream(3, &[2]);
        reservoir.drive(20_000, &mut input, &mut rng, true, |_, _| {})?;
        let trace = reservoir.record(50_000, &mut input, &mut rng, true)?;

        let rates = reservoir.params.rates_with_input();
        let stats = accumulate_stats(&trace, &rates)?;
        let mi = gaussian_mi(&stats)?;
        let grad = mi_gradient(&stats, &rates)?;
        println!(
            "sigma2 {sigma2:<5} MI {:.4} nats (log|C| {:.2}, log|D| {:.2})  |grad| input {:.3e}, recurrent {:.3e}",
            mi.mi,
            mi.log_det_c,
            mi.log_det_d,
            grad.input_column().norm(),
            grad.recurrent_block().norm(),
        );
    }
    Ok(())
}
