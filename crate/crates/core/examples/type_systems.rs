//! Pluggable type systems: annotations are atoms, verdicts come from plugins.

use std::sync::Arc;

use metagraph::store::Store;
use metagraph::typesys::{SimpleArity, TypeRegistry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = Store::new();
    let mut types = TypeRegistry::new();
    let arity = types.register(&store, Arc::new(SimpleArity::standard()))?;

    let a = store.add_node("Concept", "a", None)?;
    let b = store.add_node("Concept", "b", None)?;
    let c = store.add_node("Concept", "c", None)?;
    let good = store.add_link("Inheritance", &[a, b], None)?;
    let bad = store.add_link("Inheritance", &[a, b, c], None)?;
    let plain = store.add_link("List", &[a, b, c], None)?;
    let tag = store.add_node("Concept", "checked", None)?;
    for atom in [good, bad] {
        types.annotate(&store, atom, arity, tag)?;
    }

    let snap = store.snapshot();
    for atom in [good, bad, plain] {
        println!(
            "{:<8} {}",
            types.check_atom(atom, arity, &snap)?.to_string(),
            snap.render(atom)?
        );
    }
    Ok(())
}
