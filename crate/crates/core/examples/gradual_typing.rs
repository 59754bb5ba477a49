//! Constants without an annotation are dynamic. Removing annotations never
//! turns an accepted atom into a rejected one.

use std::sync::Arc;

use metagraph::lambda::{app, cnst, declare_const, encode_term, pi, LambdaPlugin, Mult, Term};
use metagraph::store::Store;
use metagraph::typesys::{TypeRegistry, TypeVerdict};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = Store::new();
    let mut types = TypeRegistry::new();
    let lambda = types.register(&store, Arc::new(LambdaPlugin))?;
    declare_const(&store, &types, "Bool", &Term::Star)?;
    declare_const(&store, &types, "tt", &cnst("Bool"))?;
    let not = declare_const(&store, &types, "not", &pi("x", Mult::One, cnst("Bool"), cnst("Bool")))?;

    let bool_ty = encode_term(&store, &cnst("Bool"))?;
    let subject = encode_term(&store, &app(cnst("not"), cnst("tt")))?;
    types.annotate(&store, subject, lambda, bool_ty)?;
    let untyped = encode_term(&store, &app(cnst("not"), app(cnst("mystery"), cnst("tt"))))?;
    types.annotate(&store, untyped, lambda, bool_ty)?;
    let wrong = encode_term(&store, &app(cnst("tt"), cnst("tt")))?;
    types.annotate(&store, wrong, lambda, bool_ty)?;

    let report = |label: &str| -> Result<Vec<TypeVerdict>, Box<dyn std::error::Error>> {
        let snap = store.snapshot();
        println!("{label}");
        let mut out = Vec::new();
        for atom in [subject, untyped, wrong] {
            let v = types.check_atom(atom, lambda, &snap)?;
            println!("  {v:<7} {}", snap.render(atom)?);
            out.push(v);
        }
        Ok(out)
    };
    let before = report("with `not : Bool -> Bool`")?;

    // drop the signature entry for `not`: it becomes dynamic
    let not_ty = types.annotations(&store.snapshot(), not, lambda)?[0];
    types.unannotate(&store, not, lambda, not_ty)?;
    let after = report("with `not` dynamic")?;
    for (b, a) in before.iter().zip(&after) {
        assert!(!(*b == TypeVerdict::Accept && *a == TypeVerdict::Reject));
    }
    Ok(())
}
