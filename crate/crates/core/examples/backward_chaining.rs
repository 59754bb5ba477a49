//! Goal-directed proofs from the same rules, with the supporting derivation.

use metagraph::rewrite::{backward_chain, rules_in};
use metagraph::store::Store;
use metagraph::surface::{load_str, parse, pattern_form};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = Store::new();
    load_str(include_str!("../fixtures/taxonomy.scm"), &store)?;
    let snap = store.snapshot();
    let rules = rules_in(&snap)?;
    let goal = pattern_form(&parse(r#"(Inheritance (Concept "cat") $what)"#)?[0])?;
    for depth in 0..=2 {
        let proofs = backward_chain(&snap, &goal, &rules, depth)?;
        println!("depth {depth}: {} answers", proofs.len());
        for p in &proofs {
            println!("  {}", p.bindings.render(&snap));
            for step in &p.trace {
                for d in &step.derived {
                    println!("    derived {} {}", snap.render_spec(&d.spec)?, d.tv);
                }
            }
        }
    }
    Ok(())
}
