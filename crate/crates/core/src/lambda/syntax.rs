//! Surface forms: `(lam (x lin T) body)`, `(pi (x many T) U)`,
//! `(app f x ...)`, `(choice 1/2 a b)`, `(cast-up t)`, `(cast-down t)`,
//! `(ann t T)` and `*`. Symbols bound by an enclosing `lam`/`pi` are
//! variables; every other symbol is a constant.

use super::{LambdaError, Mult, Term};
use crate::surface::sexpr::{parse, SExpr, SExprKind};

/// Heads that begin a lambda form.
pub const HEADS: [&str; 7] = ["lam", "pi", "app", "ann", "cast-up", "cast-down", "choice"];

fn syntax<T>(e: &SExpr, msg: impl std::fmt::Display) -> Result<T, LambdaError> {
    Err(LambdaError::Syntax(format!("{}: {msg} in `{e}`", e.pos)))
}

pub fn parse_term(text: &str) -> Result<Term, LambdaError> {
    let exprs = parse(text).map_err(|e| LambdaError::Syntax(e.to_string()))?;
    match exprs.as_slice() {
        [one] => term_from_sexpr(one),
        _ => Err(LambdaError::Syntax(format!(
            "expected exactly one term, found {}",
            exprs.len()
        ))),
    }
}

pub fn term_from_sexpr(e: &SExpr) -> Result<Term, LambdaError> {
    from(e, &mut Vec::new())
}

fn binder_spec(e: &SExpr, need_type: bool) -> Result<(&str, Mult, Option<&SExpr>), LambdaError> {
    if let Some(x) = e.as_symbol() {
        if need_type {
            return syntax(e, "pi binder needs `(x mult T)`");
        }
        return Ok((x, Mult::Many, None));
    }
    let Some(items) = e.as_list() else {
        return syntax(e, "expected a binder");
    };
    let (x, m, ty) = match items {
        [x, m] if !need_type => (x, m, None),
        [x, m, ty] => (x, m, Some(ty)),
        _ => return syntax(e, "expected `(x mult T)`"),
    };
    let Some(x) = x.as_symbol() else {
        return syntax(e, "binder name must be a symbol");
    };
    let mult = match &m.kind {
        SExprKind::Symbol(s) => Mult::from_keyword(s),
        SExprKind::Num(r) if r == &num_traits::Zero::zero() => Some(Mult::Zero),
        SExprKind::Num(r) if r == &num_traits::One::one() => Some(Mult::One),
        _ => None,
    };
    let Some(mult) = mult else {
        return syntax(m, "multiplicity must be zero, lin or many");
    };
    Ok((x, mult, ty))
}

fn from(e: &SExpr, bound: &mut Vec<String>) -> Result<Term, LambdaError> {
    if let Some(s) = e.as_symbol() {
        return Ok(if s == "*" {
            Term::Star
        } else if bound.iter().any(|b| b == s) {
            Term::Var(s.to_string())
        } else {
            Term::Const(s.to_string())
        });
    }
    let Some(items) = e.as_list() else {
        return syntax(e, "expected a term");
    };
    let Some(head) = items.first().and_then(SExpr::as_symbol) else {
        return syntax(e, "expected a lambda form");
    };
    let args = &items[1..];
    let one = |bound: &mut Vec<String>| match args {
        [t] => from(t, bound).map(Box::new),
        _ => syntax(e, format!("`{head}` takes one argument")),
    };
    match head {
        "lam" | "pi" => {
            let [b, body] = args else {
                return syntax(e, format!("`{head}` takes a binder and a body"));
            };
            let (x, mult, ty) = binder_spec(b, head == "pi")?;
            let ty = ty.map(|t| from(t, bound)).transpose()?;
            bound.push(x.to_string());
            let body = from(body, bound);
            bound.pop();
            let body = Box::new(body?);
            Ok(if head == "lam" {
                Term::Lam {
                    binder: x.to_string(),
                    mult,
                    ann: ty.map(Box::new),
                    body,
                }
            } else {
                Term::Pi {
                    binder: x.to_string(),
                    mult,
                    dom: Box::new(ty.expect("pi binders carry a type")),
                    cod: body,
                }
            })
        }
        "app" => {
            if args.len() < 2 {
                return syntax(e, "`app` needs a function and at least one argument");
            }
            let mut t = from(&args[0], bound)?;
            for a in &args[1..] {
                t = Term::App(Box::new(t), Box::new(from(a, bound)?));
            }
            Ok(t)
        }
        "ann" => {
            let [t, ty] = args else {
                return syntax(e, "`ann` takes a term and a type");
            };
            Ok(Term::Ann(Box::new(from(t, bound)?), Box::new(from(ty, bound)?)))
        }
        "cast-up" => Ok(Term::CastUp(one(bound)?)),
        "cast-down" => Ok(Term::CastDown(one(bound)?)),
        "choice" => {
            let [p, l, r] = args else {
                return syntax(e, "`choice` takes a probability and two terms");
            };
            match p.as_num() {
                Some(p) if super::valid_probability(p) => Ok(Term::Choice(
                    p.clone(),
                    Box::new(from(l, bound)?),
                    Box::new(from(r, bound)?),
                )),
                _ => syntax(p, "choice probability must be a rational strictly between 0 and 1"),
            }
        }
        other => syntax(e, format!("unknown lambda form `{other}`")),
    }
}

/// Pretty-printer; the output parses back to the same term when no bound
/// name shadows a constant.
pub fn term_to_sexpr(t: &Term) -> SExpr {
    let sym = SExpr::symbol;
    let list = SExpr::list;
    match t {
        Term::Star => sym("*"),
        Term::Var(x) | Term::Const(x) => sym(x.as_str()),
        Term::Lam {
            binder,
            mult,
            ann,
            body,
        } => {
            let mut b = vec![sym(binder.as_str()), sym(mult.keyword())];
            if let Some(a) = ann {
                b.push(term_to_sexpr(a));
            }
            list(vec![sym("lam"), list(b), term_to_sexpr(body)])
        }
        Term::Pi { binder, mult, dom, cod } => list(vec![
            sym("pi"),
            list(vec![sym(binder.as_str()), sym(mult.keyword()), term_to_sexpr(dom)]),
            term_to_sexpr(cod),
        ]),
        Term::App(..) => {
            let mut spine = Vec::new();
            let mut cur = t;
            while let Term::App(f, a) = cur {
                spine.push(term_to_sexpr(a));
                cur = f;
            }
            spine.push(term_to_sexpr(cur));
            spine.push(sym("app"));
            spine.reverse();
            list(spine)
        }
        Term::Ann(a, b) => list(vec![sym("ann"), term_to_sexpr(a), term_to_sexpr(b)]),
        Term::CastUp(a) => list(vec![sym("cast-up"), term_to_sexpr(a)]),
        Term::CastDown(a) => list(vec![sym("cast-down"), term_to_sexpr(a)]),
        Term::Choice(p, l, r) => list(vec![
            sym("choice"),
            SExpr::num(p.clone()),
            term_to_sexpr(l),
            term_to_sexpr(r),
        ]),
    }
}
