//! Multi-clause patterns with shared variables, checked against the
//! brute-force enumerator, and the index counters that back them.

use metagraph::pattern::{brute_force_query, query, query_parallel, Pattern, BRUTE_FORCE_CAP};
use metagraph::store::{AtomSpec, Store};
use metagraph::surface::load_str;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = Store::new();
    load_str(
        r#"(Inheritance (Concept "cat") (Concept "mammal"))
           (Inheritance (Concept "dog") (Concept "mammal"))
           (Inheritance (Concept "mammal") (Concept "animal"))
           (Evaluation (Predicate "purrs") (List (Concept "cat")))"#,
        &store,
    )?;
    let inh = |a: AtomSpec, b: AtomSpec| AtomSpec::link("Inheritance", vec![a, b]);
    let v = AtomSpec::var;

    // ?x is a mammal that purrs
    let p = Pattern::new(vec![
        inh(v("$x"), AtomSpec::node("Concept", "mammal")),
        AtomSpec::link(
            "Evaluation",
            vec![
                AtomSpec::node("Predicate", "purrs"),
                AtomSpec::link("List", vec![v("$x")]),
            ],
        ),
    ])?;
    let snap = store.snapshot();
    snap.stats().reset();
    let found = query(&p, &snap)?;
    for b in &found {
        println!("{}", b.render(&snap));
    }
    println!(
        "{} inspections, {} match attempts",
        snap.stats().index_inspections(),
        snap.stats().match_attempts()
    );

    // two hops
    let chain = Pattern::new(vec![inh(v("$a"), v("$b")), inh(v("$b"), v("$c"))])?;
    let fast = query_parallel(&chain, &snap, 4)?;
    assert_eq!(fast, brute_force_query(&chain, &snap, BRUTE_FORCE_CAP)?);
    for b in &fast {
        println!("{}", b.render(&snap));
    }
    Ok(())
}
