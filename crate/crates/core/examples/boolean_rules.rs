//! Boolean rules of two and three lagged inputs, their linear
//! separability, and the capacity of a reservoir to compute them.

use ri_reservoir::benchmarks::{boolean_capacity, enumerate_rules, BenchmarkPhases, BooleanRule};
use ri_reservoir::reservoir::{init_network, InputSource};
use ri_reservoir::rng::stream;

fn main() -> ri_reservoir::Result<()> {
    for arity in [2, 3] {
        let rules = enumerate_rules(arity)?;
        let separable = rules.iter().filter(|r| r.separable).count();
        println!("arity {arity}: {} rules, {separable} linearly separable", rules.len());
    }
    let xor = BooleanRule::from_id(2, 6)?;
    println!("rule 6 is XOR: table {:?}, separable {}", xor.truth_table, xor.separable);

    let mut params = init_network(30, 0.01, 9)?;
    params.w_input.fill(3.0);
    let rules = enumerate_rules(2)?;
    let phases = BenchmarkPhases {
        washout: 20_000,
        ..BenchmarkPhases::default()
    };
    let mut input = InputSource::bernoulli(params.p0_bar, stream(9, &[1]));
    let score = boolean_capacity(&params, &phases, &rules, 8, &mut input, &mut stream(9, &[2]))?;
    println!("BC2 {:.3} (mean over rules)", score.score.total);
    let mut best = score.per_rule.clone();
    best.sort_by(|a, b| b.total.total_cmp(&a.total));
    for r in best.iter().take(4) {
        println!("  rule {:>2} separable {:<5} {:.3}", r.rule_id, r.separable, r.total);
    }
    Ok(())
}
