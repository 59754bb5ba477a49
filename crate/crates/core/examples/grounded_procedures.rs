//! Procedures called from atoms. Pure results are returned; impure ones are
//! committed to the store under a lock.

use metagraph::grounded::{GroundedProcedure, GroundedRegistry, GroundedValue};
use metagraph::store::{AtomSpec, Store};
use metagraph::surface::load_str;
use metagraph::truth::TruthValue;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut reg = GroundedRegistry::with_builtins();
    reg.register(GroundedProcedure::predicate("longer-than", 2, true, |snap, args| {
        let a = snap.resolve(args[0]).map_err(|e| e.to_string())?;
        let b = snap.resolve(args[1]).map_err(|e| e.to_string())?;
        Ok(if a.name().len() > b.name().len() {
            TruthValue::certain()
        } else {
            TruthValue::falsehood()
        })
    }))?;
    reg.register(GroundedProcedure::schema("shout", 1, false, |snap, args| {
        let a = snap.resolve(args[0]).map_err(|e| e.to_string())?;
        Ok(AtomSpec::node("Concept", a.name().to_uppercase()))
    }))?;
    println!("registered: {}", reg.names().join(", "));

    let store = Store::new();
    let calls = load_str(
        r#"(Execution (GroundedSchema "num:add") (Number 1/2) (Number 3))
           (Execution (GroundedSchema "num:mul") (Number 2/3) (Number 9))
           (Evaluation (GroundedPredicate "longer-than") (Concept "giraffe") (Concept "cat"))
           (Execution (GroundedSchema "shout") (Concept "hello"))
           (Execution (GroundedSchema "counter"))
           (Execution (GroundedSchema "num:add") (Number 1))"#,
        &store,
    )?;
    for call in calls {
        let rendered = store.snapshot().render(call)?;
        match reg.execute_and_commit(call, &store) {
            Ok(out) => {
                let value = match out.value {
                    GroundedValue::Atom(spec) => store.snapshot().render_spec(&spec)?,
                    GroundedValue::Truth(tv) => tv.to_string(),
                };
                println!(
                    "{rendered}\n  => {value}{}",
                    if out.commit { " (committed)" } else { "" }
                );
            }
            Err(e) => println!("{rendered}\n  => error: {e}"),
        }
    }
    println!("counter called {} time(s)", reg.counter_value());
    Ok(())
}
