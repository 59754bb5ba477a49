//! Terms as ordinary atoms.
//!
//! | term            | atom                                                        |
//! |-----------------|-------------------------------------------------------------|
//! | `*`             | `(LambdaStar "*")`                                          |
//! | variable `x`    | `(LambdaVar "x")`                                           |
//! | constant `c`    | `(LambdaConst "c")`                                         |
//! | `lam`           | `(Lam (Multiplicity m) ann-or-(LambdaNoAnn "_") (Abs x body))` |
//! | `pi`            | `(Pi (Multiplicity m) dom (Abs x cod))`                     |
//! | `app`/`ann`     | `(App f a)`, `(Ann t T)`                                    |
//! | casts           | `(CastUp t)`, `(CastDown t)`                                |
//! | `choice`        | `(Choice (Probability "p") l r)`                            |

use super::{LambdaError, Mult, Term};
use crate::store::{AtomId, AtomSpec, NewAtom, Snapshot, Store};
use crate::truth::{format_ratio, parse_ratio};

pub const STAR: &str = "LambdaStar";
pub const VAR: &str = "LambdaVar";
pub const CONST: &str = "LambdaConst";
pub const LAM: &str = "Lam";
pub const PI: &str = "Pi";
pub const ABS: &str = "Abs";
pub const APP: &str = "App";
pub const ANN: &str = "Ann";
pub const CAST_UP: &str = "CastUp";
pub const CAST_DOWN: &str = "CastDown";
pub const CHOICE: &str = "Choice";
pub const MULTIPLICITY: &str = "Multiplicity";
pub const NO_ANN: &str = "LambdaNoAnn";
pub const PROBABILITY: &str = "Probability";

fn mult_node(m: Mult) -> AtomSpec {
    AtomSpec::node(MULTIPLICITY, m.keyword())
}

fn abs(binder: &str, body: &Term) -> AtomSpec {
    AtomSpec::link(ABS, vec![AtomSpec::node(VAR, binder), term_spec(body)])
}

/// The atom specification of a term; structurally equal terms give equal specs.
pub fn term_spec(t: &Term) -> AtomSpec {
    match t {
        Term::Star => AtomSpec::node(STAR, "*"),
        Term::Var(x) => AtomSpec::node(VAR, x.as_str()),
        Term::Const(c) => AtomSpec::node(CONST, c.as_str()),
        Term::Lam {
            binder,
            mult,
            ann,
            body,
        } => AtomSpec::link(
            LAM,
            vec![
                mult_node(*mult),
                ann.as_ref()
                    .map_or_else(|| AtomSpec::node(NO_ANN, "_"), |a| term_spec(a)),
                abs(binder, body),
            ],
        ),
        Term::Pi { binder, mult, dom, cod } => {
            AtomSpec::link(PI, vec![mult_node(*mult), term_spec(dom), abs(binder, cod)])
        }
        Term::App(f, a) => AtomSpec::link(APP, vec![term_spec(f), term_spec(a)]),
        Term::Ann(a, b) => AtomSpec::link(ANN, vec![term_spec(a), term_spec(b)]),
        Term::CastUp(a) => AtomSpec::link(CAST_UP, vec![term_spec(a)]),
        Term::CastDown(a) => AtomSpec::link(CAST_DOWN, vec![term_spec(a)]),
        Term::Choice(p, l, r) => AtomSpec::link(
            CHOICE,
            vec![AtomSpec::node(PROBABILITY, format_ratio(p)), term_spec(l), term_spec(r)],
        ),
    }
}

pub fn encode_term(store: &Store, t: &Term) -> Result<AtomId, LambdaError> {
    Ok(store.add(NewAtom::new(term_spec(t)))?)
}

fn malformed<T>(snap: &Snapshot, id: AtomId, why: &str) -> Result<T, LambdaError> {
    let shown = snap.render(id).unwrap_or_else(|_| id.to_string());
    Err(LambdaError::MalformedEncoding(format!("{shown}: {why}")))
}

fn binder_of(snap: &Snapshot, abs_id: AtomId) -> Result<(String, AtomId), LambdaError> {
    let a = snap.resolve(abs_id)?;
    match a.targets() {
        [v, body] if a.type_name() == ABS => {
            let v_atom = snap.resolve(*v)?;
            if v_atom.type_name() != VAR {
                return malformed(snap, abs_id, "binder must be a LambdaVar");
            }
            Ok((v_atom.name().to_string(), *body))
        }
        _ => malformed(snap, abs_id, "expected (Abs var body)"),
    }
}

fn mult_of(snap: &Snapshot, id: AtomId) -> Result<Mult, LambdaError> {
    let a = snap.resolve(id)?;
    if a.type_name() != MULTIPLICITY {
        return malformed(snap, id, "expected a Multiplicity node");
    }
    match Mult::from_keyword(a.name()) {
        Some(m) => Ok(m),
        None => malformed(snap, id, "multiplicity must be zero, lin or many"),
    }
}

/// Inverse of [`encode_term`]; atoms outside the vocabulary are rejected.
pub fn decode_term(snap: &Snapshot, id: AtomId) -> Result<Term, LambdaError> {
    let atom = snap.resolve(id)?;
    let ts = atom.targets();
    let sub = |i: usize| decode_term(snap, ts[i]).map(Box::new);
    match (atom.type_name(), ts.len(), atom.is_node()) {
        (STAR, 0, true) if atom.name() == "*" => Ok(Term::Star),
        (VAR, 0, true) => Ok(Term::Var(atom.name().to_string())),
        (CONST, 0, true) => Ok(Term::Const(atom.name().to_string())),
        (LAM, 3, false) => {
            let mult = mult_of(snap, ts[0])?;
            let ann_atom = snap.resolve(ts[1])?;
            let ann = if ann_atom.type_name() == NO_ANN && ann_atom.is_node() {
                None
            } else {
                Some(sub(1)?)
            };
            let (binder, body) = binder_of(snap, ts[2])?;
            Ok(Term::Lam {
                binder,
                mult,
                ann,
                body: Box::new(decode_term(snap, body)?),
            })
        }
        (PI, 3, false) => {
            let mult = mult_of(snap, ts[0])?;
            let (binder, cod) = binder_of(snap, ts[2])?;
            Ok(Term::Pi {
                binder,
                mult,
                dom: sub(1)?,
                cod: Box::new(decode_term(snap, cod)?),
            })
        }
        (APP, 2, false) => Ok(Term::App(sub(0)?, sub(1)?)),
        (ANN, 2, false) => Ok(Term::Ann(sub(0)?, sub(1)?)),
        (CAST_UP, 1, false) => Ok(Term::CastUp(sub(0)?)),
        (CAST_DOWN, 1, false) => Ok(Term::CastDown(sub(0)?)),
        (CHOICE, 3, false) => {
            let p_atom = snap.resolve(ts[0])?;
            if p_atom.type_name() != PROBABILITY {
                return malformed(snap, id, "expected a Probability node");
            }
            match parse_ratio(p_atom.name()) {
                Ok(p) if super::valid_probability(&p) => Ok(Term::Choice(p, sub(1)?, sub(2)?)),
                _ => malformed(snap, id, "probability must be a rational strictly between 0 and 1"),
            }
        }
        _ => malformed(snap, id, "not a lambda term encoding"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::{ann, app, choice, cnst, lam, pi, var};
    use crate::pattern::{query, Pattern};
    use crate::truth::ratio;

    fn poly_id() -> Term {
        ann(
            lam(
                "A",
                Mult::Many,
                Some(Term::Star),
                lam("x", Mult::One, Some(var("A")), var("x")),
            ),
            pi("A", Mult::Many, Term::Star, pi("x", Mult::One, var("A"), var("A"))),
        )
    }

    #[test]
    fn round_trip() {
        let store = Store::new();
        let terms = [
            Term::Star,
            poly_id(),
            app(lam("x", Mult::Zero, None, var("x")), cnst("c")),
            choice(
                ratio(1, 3),
                cnst("a"),
                crate::lambda::cast_down(crate::lambda::cast_up(cnst("b"))),
            )
            .unwrap(),
        ];
        for t in terms {
            let id = encode_term(&store, &t).unwrap();
            assert_eq!(decode_term(&store.snapshot(), id).unwrap(), t);
        }
    }

    #[test]
    fn star_is_a_node() {
        let store = Store::new();
        let id = encode_term(&store, &Term::Star).unwrap();
        let snap = store.snapshot();
        assert_eq!(snap.render(id).unwrap(), "(LambdaStar \"*\")");
    }

    #[test]
    fn encoded_lambdas_are_queryable() {
        let store = Store::new();
        encode_term(&store, &poly_id()).unwrap();
        let p = Pattern::single(AtomSpec::link(
            LAM,
            vec![AtomSpec::var("$m"), AtomSpec::var("$ty"), AtomSpec::var("$body")],
        ));
        assert_eq!(query(&p, &store.snapshot()).unwrap().len(), 2);
    }

    #[test]
    fn foreign_atoms_are_malformed() {
        let store = Store::new();
        let cat = store.add_node("Concept", "cat", None).unwrap();
        assert!(matches!(
            decode_term(&store.snapshot(), cat),
            Err(LambdaError::MalformedEncoding(_))
        ));
        let bad = store
            .add(NewAtom::new(AtomSpec::link(
                CHOICE,
                vec![
                    AtomSpec::node(PROBABILITY, "3/2"),
                    AtomSpec::node(CONST, "a"),
                    AtomSpec::node(CONST, "b"),
                ],
            )))
            .unwrap();
        assert!(decode_term(&store.snapshot(), bad).is_err());
    }
}
