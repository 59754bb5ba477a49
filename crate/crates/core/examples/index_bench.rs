//! Work counts on a large store: a typed clause inspects only atoms of its
//! type, however big the store is.

use metagraph::harness::bench_fixture;
use metagraph::pattern::{query, Pattern};
use metagraph::store::AtomSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for total in [1_000, 10_000, 100_000] {
        let store = bench_fixture(1, total, 50);
        let snap = store.snapshot();
        let p = Pattern::single(AtomSpec::link(
            "Inheritance",
            vec![AtomSpec::var("$x"), AtomSpec::var("$y")],
        ));
        snap.stats().reset();
        let hits = query(&p, &snap)?.len();
        println!(
            "{:>7} atoms: {hits} results, {} index inspections, {} match attempts",
            snap.len(),
            snap.stats().index_inspections(),
            snap.stats().match_attempts()
        );
    }
    Ok(())
}
