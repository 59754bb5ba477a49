//! Content-addressed atoms, truth-value revision, snapshots and batch commits.

use metagraph::store::{AtomSpec, NewAtom, Store};
use metagraph::truth::TruthValue;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = Store::new();
    let cat = store.add_node("Concept", "cat", None)?;
    let animal = store.add_node("Concept", "animal", None)?;
    let weak = TruthValue::from_fractions((4, 5), (1, 4));
    let link = store.add_link("Inheritance", &[cat, animal], Some(weak))?;

    // same content, same id; the more confident truth value wins
    let strong = TruthValue::from_fractions((9, 10), (3, 4));
    let again = store.add_link("Inheritance", &[cat, animal], Some(strong))?;
    assert_eq!(link, again);
    let tv = store.resolve(link)?.tv.expect("link has a truth value");
    println!("one link, tv now {tv}");

    // a snapshot is frozen; later commits do not show up in it
    let before = store.snapshot();
    let batch = ["dog", "cow"].map(|n| {
        NewAtom::new(AtomSpec::link(
            "Inheritance",
            vec![AtomSpec::node("Concept", n), AtomSpec::node("Concept", "animal")],
        ))
    });
    let committed = store.commit(&before, &batch, &[])?;
    println!(
        "batch added {} atoms; snapshot still has {}",
        committed.created.len(),
        before.len()
    );

    // links with incoming links can't be removed
    match store.remove(cat) {
        Err(e) => println!("remove cat: {e}"),
        Ok(()) => unreachable!(),
    }
    store.remove(link)?;
    store.remove(cat)?;

    print!("{}", store.snapshot().dump());
    Ok(())
}
