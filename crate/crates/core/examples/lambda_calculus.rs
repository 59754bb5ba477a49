//! Bidirectional checking with multiplicities and explicit one-step casts.

use metagraph::lambda::{
    ann, app, cast_down, cast_up, cnst, lam, parse_term, pi, typecheck, typecheck_against, var, Mult, Signature, Term,
};

fn main() {
    let b = || cnst("Bool");
    let sig = Signature::new()
        .with("Bool", Term::Star)
        .with("tt", b())
        .with("pair", pi("a", Mult::One, b(), pi("b", Mult::One, b(), b())))
        .with("f", pi("x", Mult::Many, b(), b()))
        // a type that is Bool only after one beta step
        .with("r", app(lam("A", Mult::Many, Some(Term::Star), var("A")), b()));

    let show = |label: &str, t: &Term| match typecheck(&sig, t) {
        Ok(ty) => println!("{label:<22} {t}  :  {}", ty.ty.map_or("?".into(), |t| t.to_string())),
        Err(ill) => println!("{label:<22} {t}  :  {ill}"),
    };

    let poly = parse_term("(lam (A many *) (lam (x lin A) x))").expect("well formed");
    show(
        "polymorphic identity",
        &ann(poly, parse_term("(pi (A many *) (pi (x lin A) A))").expect("type")),
    );
    show("no cast", &app(cnst("f"), cnst("r")));
    show("cast-down", &app(cnst("f"), cast_down(cnst("r"))));
    show(
        "cast-up",
        &ann(cast_up(cnst("tt")), sig.get("r").cloned().expect("declared")),
    );
    show("cast with no step", &cast_down(cnst("tt")));

    let dup_ty = pi("x", Mult::One, b(), b());
    let dup = lam("x", Mult::One, None, app(app(cnst("pair"), var("x")), var("x")));
    match typecheck_against(&sig, &dup, &dup_ty) {
        Ok(_) => println!("unexpected: {dup} accepted"),
        Err(ill) => println!("{:<22} {dup}  :  {ill}", "linear used twice"),
    }
    let erased = lam("x", Mult::Zero, None, cnst("tt"));
    let erased_ty = pi("x", Mult::Zero, b(), b());
    println!(
        "{:<22} {erased}  :  {}",
        "erased argument",
        typecheck_against(&sig, &erased, &erased_ty).map_or_else(|e| e.to_string(), |_| "ok".into())
    );
}
