//! Deduction to a fixpoint with either agenda policy; results are the same
//! whatever the worker count.

use metagraph::rewrite::{forward_chain, rules_in, ForwardConfig, Policy};
use metagraph::store::Store;
use metagraph::surface::load_str;

const KB: &str = include_str!("../fixtures/taxonomy.scm");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut dumps = Vec::new();
    for (policy, workers) in [
        (Policy::Fifo, 1),
        (Policy::ExhaustiveToFixpoint, 1),
        (Policy::ExhaustiveToFixpoint, 4),
    ] {
        let store = Store::new();
        load_str(KB, &store)?;
        let rules = rules_in(&store.snapshot())?;
        let cfg = ForwardConfig {
            max_steps: 100,
            policy,
            workers,
        };
        let trace = forward_chain(&store, &rules, cfg)?;
        println!(
            "{policy:?} x{workers}: {:?} after {} steps, {} derived",
            trace.outcome,
            trace.steps_taken,
            trace.derived().count()
        );
        if dumps.is_empty() {
            print!("{}", trace.render(&store.snapshot()));
        }
        dumps.push(store.snapshot().dump());
    }
    assert!(dumps.windows(2).all(|w| w[0] == w[1]));
    println!("all three stores are identical");
    Ok(())
}
