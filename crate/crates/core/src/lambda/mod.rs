//! Dependently typed lambda calculus with {0,1,ω} multiplicities, explicit
//! one-step casts for type conversion, and probabilistic choice evaluated
//! call-by-value to exact distributions.

mod encode;
mod plugin;
mod reduce;
mod syntax;
mod typecheck;

pub use encode::{decode_term, encode_term, term_spec};
pub use plugin::{declare_const, LambdaPlugin};
pub use reduce::{eval_distribution, eval_distribution_dfs, is_value, reduce_step, Distribution};
pub use syntax::{parse_term, term_from_sexpr, term_to_sexpr, HEADS};
pub use typecheck::{typecheck, typecheck_against, Ill, IllReason, Signature, Typed};

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::store::StoreError;
use crate::truth::Ratio;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LambdaError {
    #[error("malformed lambda encoding: {0}")]
    MalformedEncoding(String),
    #[error("lambda syntax: {0}")]
    Syntax(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mult {
    /// Erased: usable only in types.
    Zero,
    /// Linear: exactly one use.
    One,
    /// Unrestricted.
    Many,
}

impl Mult {
    pub fn keyword(self) -> &'static str {
        match self {
            Mult::Zero => "zero",
            Mult::One => "lin",
            Mult::Many => "many",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "zero" | "0" => Some(Mult::Zero),
            "lin" | "1" => Some(Mult::One),
            "many" | "ω" | "w" => Some(Mult::Many),
            _ => None,
        }
    }

    /// Semiring addition: 1 + 1 = ω.
    pub fn plus(self, other: Mult) -> Mult {
        match (self, other) {
            (Mult::Zero, m) | (m, Mult::Zero) => m,
            _ => Mult::Many,
        }
    }

    pub fn times(self, other: Mult) -> Mult {
        match (self, other) {
            (Mult::Zero, _) | (_, Mult::Zero) => Mult::Zero,
            (Mult::One, m) | (m, Mult::One) => m,
            _ => Mult::Many,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
    Star,
    Lam {
        binder: String,
        mult: Mult,
        ann: Option<Box<Term>>,
        body: Box<Term>,
    },
    App(Box<Term>, Box<Term>),
    Pi {
        binder: String,
        mult: Mult,
        dom: Box<Term>,
        cod: Box<Term>,
    },
    Ann(Box<Term>, Box<Term>),
    CastUp(Box<Term>),
    CastDown(Box<Term>),
    /// Left with probability p, right with 1 - p; 0 < p < 1.
    Choice(Ratio, Box<Term>, Box<Term>),
}

pub fn var(name: &str) -> Term {
    Term::Var(name.to_string())
}

pub fn cnst(name: &str) -> Term {
    Term::Const(name.to_string())
}

pub fn lam(binder: &str, mult: Mult, ann: Option<Term>, body: Term) -> Term {
    Term::Lam {
        binder: binder.to_string(),
        mult,
        ann: ann.map(Box::new),
        body: Box::new(body),
    }
}

pub fn pi(binder: &str, mult: Mult, dom: Term, cod: Term) -> Term {
    Term::Pi {
        binder: binder.to_string(),
        mult,
        dom: Box::new(dom),
        cod: Box::new(cod),
    }
}

pub fn app(f: Term, a: Term) -> Term {
    Term::App(Box::new(f), Box::new(a))
}

/// Left-nested application of `f` to every argument.
pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
    args.into_iter().fold(f, app)
}

pub fn ann(t: Term, ty: Term) -> Term {
    Term::Ann(Box::new(t), Box::new(ty))
}

pub fn cast_up(t: Term) -> Term {
    Term::CastUp(Box::new(t))
}

pub fn cast_down(t: Term) -> Term {
    Term::CastDown(Box::new(t))
}

pub fn valid_probability(p: &Ratio) -> bool {
    p > &Ratio::zero() && p < &Ratio::one()
}

/// Choice node; `None` unless 0 < p < 1.
pub fn choice(p: Ratio, l: Term, r: Term) -> Option<Term> {
    valid_probability(&p).then(|| Term::Choice(p, Box::new(l), Box::new(r)))
}

impl Term {
    /// Number of constructors.
    pub fn size(&self) -> usize {
        1 + match self {
            Term::Var(_) | Term::Const(_) | Term::Star => 0,
            Term::Lam { ann, body, .. } => ann.as_ref().map_or(0, |a| a.size()) + body.size(),
            Term::Pi { dom, cod, .. } => dom.size() + cod.size(),
            Term::App(a, b) | Term::Ann(a, b) | Term::Choice(_, a, b) => a.size() + b.size(),
            Term::CastUp(t) | Term::CastDown(t) => t.size(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                if !bound.contains(&x.as_str()) {
                    out.insert(x.clone());
                }
            }
            Term::Const(_) | Term::Star => {}
            Term::Lam { binder, ann, body, .. } => {
                if let Some(a) = ann {
                    a.collect_free(bound, out);
                }
                bound.push(binder);
                body.collect_free(bound, out);
                bound.pop();
            }
            Term::Pi { binder, dom, cod, .. } => {
                dom.collect_free(bound, out);
                bound.push(binder);
                cod.collect_free(bound, out);
                bound.pop();
            }
            Term::App(a, b) | Term::Ann(a, b) | Term::Choice(_, a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Term::CastUp(t) | Term::CastDown(t) => t.collect_free(bound, out),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Free occurrences of `x`, counting every syntactic position.
    pub fn occurrences(&self, x: &str) -> usize {
        match self {
            Term::Var(y) => usize::from(y == x),
            Term::Const(_) | Term::Star => 0,
            Term::Lam { binder, ann, body, .. } => {
                ann.as_ref().map_or(0, |a| a.occurrences(x)) + if binder == x { 0 } else { body.occurrences(x) }
            }
            Term::Pi { binder, dom, cod, .. } => dom.occurrences(x) + if binder == x { 0 } else { cod.occurrences(x) },
            Term::App(a, b) | Term::Ann(a, b) | Term::Choice(_, a, b) => a.occurrences(x) + b.occurrences(x),
            Term::CastUp(t) | Term::CastDown(t) => t.occurrences(x),
        }
    }

    /// Capture-avoiding substitution `self[x := v]`.
    pub fn subst(&self, x: &str, v: &Term) -> Term {
        let fv = v.free_vars();
        self.subst_with(x, v, &fv)
    }

    fn subst_with(&self, x: &str, v: &Term, fv: &BTreeSet<String>) -> Term {
        match self {
            Term::Var(y) if y == x => v.clone(),
            Term::Var(_) | Term::Const(_) | Term::Star => self.clone(),
            Term::Lam {
                binder,
                mult,
                ann,
                body,
            } => {
                let ann = ann.as_ref().map(|a| Box::new(a.subst_with(x, v, fv)));
                let (binder, body) = under_binder(binder, body, x, v, fv);
                Term::Lam {
                    binder,
                    mult: *mult,
                    ann,
                    body: Box::new(body),
                }
            }
            Term::Pi { binder, mult, dom, cod } => {
                let dom = Box::new(dom.subst_with(x, v, fv));
                let (binder, cod) = under_binder(binder, cod, x, v, fv);
                Term::Pi {
                    binder,
                    mult: *mult,
                    dom,
                    cod: Box::new(cod),
                }
            }
            Term::App(a, b) => app(a.subst_with(x, v, fv), b.subst_with(x, v, fv)),
            Term::Ann(a, b) => ann(a.subst_with(x, v, fv), b.subst_with(x, v, fv)),
            Term::Choice(p, a, b) => Term::Choice(
                p.clone(),
                Box::new(a.subst_with(x, v, fv)),
                Box::new(b.subst_with(x, v, fv)),
            ),
            Term::CastUp(t) => cast_up(t.subst_with(x, v, fv)),
            Term::CastDown(t) => cast_down(t.subst_with(x, v, fv)),
        }
    }

    /// Equality up to renaming of bound variables.
    pub fn alpha_eq(&self, other: &Term) -> bool {
        alpha(self, other, &mut Vec::new())
    }

    /// One leftmost-outermost beta step, reducing anywhere including under binders.
    pub fn beta_step(&self) -> Option<Term> {
        match self {
            Term::App(f, a) => {
                if let Term::Lam { binder, body, .. } = f.as_ref() {
                    return Some(body.subst(binder, a));
                }
                if let Some(f2) = f.beta_step() {
                    return Some(app(f2, (**a).clone()));
                }
                a.beta_step().map(|a2| app((**f).clone(), a2))
            }
            Term::Var(_) | Term::Const(_) | Term::Star => None,
            Term::Lam {
                binder,
                mult,
                ann,
                body,
            } => {
                if let Some(a) = ann.as_ref().and_then(|a| a.beta_step()) {
                    return Some(lam(binder, *mult, Some(a), (**body).clone()));
                }
                body.beta_step()
                    .map(|b| lam(binder, *mult, ann.as_ref().map(|a| (**a).clone()), b))
            }
            Term::Pi { binder, mult, dom, cod } => {
                if let Some(d) = dom.beta_step() {
                    return Some(pi(binder, *mult, d, (**cod).clone()));
                }
                cod.beta_step().map(|c| pi(binder, *mult, (**dom).clone(), c))
            }
            Term::Ann(t, ty) => {
                if let Some(t2) = t.beta_step() {
                    return Some(ann(t2, (**ty).clone()));
                }
                ty.beta_step().map(|ty2| ann((**t).clone(), ty2))
            }
            Term::Choice(p, l, r) => {
                if let Some(l2) = l.beta_step() {
                    return Some(Term::Choice(p.clone(), Box::new(l2), r.clone()));
                }
                r.beta_step().map(|r2| Term::Choice(p.clone(), l.clone(), Box::new(r2)))
            }
            Term::CastUp(t) => t.beta_step().map(cast_up),
            Term::CastDown(t) => t.beta_step().map(cast_down),
        }
    }
}

/// Name not in `avoid`, derived from `base` by priming.
pub(crate) fn fresh_name(base: &str, avoid: impl Fn(&str) -> bool) -> String {
    let mut name = format!("{base}'");
    while avoid(&name) {
        name.push('\'');
    }
    name
}

fn under_binder(binder: &str, body: &Term, x: &str, v: &Term, fv: &BTreeSet<String>) -> (String, Term) {
    if binder == x {
        return (binder.to_string(), body.clone());
    }
    if fv.contains(binder) && body.occurrences(x) > 0 {
        let body_fv = body.free_vars();
        let fresh = fresh_name(binder, |n| fv.contains(n) || body_fv.contains(n) || n == x);
        let renamed = body.subst(binder, &Term::Var(fresh.clone()));
        return (fresh, renamed.subst_with(x, v, fv));
    }
    (binder.to_string(), body.subst_with(x, v, fv))
}

fn alpha<'a>(a: &'a Term, b: &'a Term, env: &mut Vec<(&'a str, &'a str)>) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => {
            for (l, r) in env.iter().rev() {
                if *l == x || *r == y {
                    return *l == x && *r == y;
                }
            }
            x == y
        }
        (Term::Const(x), Term::Const(y)) => x == y,
        (Term::Star, Term::Star) => true,
        (
            Term::Lam {
                binder: x,
                mult: m,
                ann: a1,
                body: b1,
            },
            Term::Lam {
                binder: y,
                mult: n,
                ann: a2,
                body: b2,
            },
        ) => {
            let anns = match (a1, a2) {
                (None, None) => true,
                (Some(p), Some(q)) => alpha(p, q, env),
                _ => false,
            };
            m == n && anns && {
                env.push((x, y));
                let ok = alpha(b1, b2, env);
                env.pop();
                ok
            }
        }
        (
            Term::Pi {
                binder: x,
                mult: m,
                dom: d1,
                cod: c1,
            },
            Term::Pi {
                binder: y,
                mult: n,
                dom: d2,
                cod: c2,
            },
        ) => {
            m == n && alpha(d1, d2, env) && {
                env.push((x, y));
                let ok = alpha(c1, c2, env);
                env.pop();
                ok
            }
        }
        (Term::App(f1, a1), Term::App(f2, a2)) | (Term::Ann(f1, a1), Term::Ann(f2, a2)) => {
            alpha(f1, f2, env) && alpha(a1, a2, env)
        }
        (Term::Choice(p, l1, r1), Term::Choice(q, l2, r2)) => p == q && alpha(l1, l2, env) && alpha(r1, r2, env),
        (Term::CastUp(s), Term::CastUp(t)) | (Term::CastDown(s), Term::CastDown(t)) => alpha(s, t, env),
        _ => false,
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", term_to_sexpr(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truth::ratio;

    #[test]
    fn semiring() {
        use Mult::*;
        assert_eq!(One.plus(One), Many);
        assert_eq!(Zero.plus(One), One);
        assert_eq!(Many.times(Zero), Zero);
        assert_eq!(One.times(Many), Many);
        assert_eq!(One.times(One), One);
    }

    #[test]
    fn substitution_avoids_capture() {
        // (λy. x y)[x := y] must not capture the free y
        let t = lam("y", Mult::Many, None, app(var("x"), var("y")));
        let got = t.subst("x", &var("y"));
        let Term::Lam { binder, body, .. } = &got else { panic!() };
        assert_ne!(binder, "y");
        assert_eq!(**body, app(var("y"), var(binder)));
        assert!(got.free_vars().contains("y"));
    }

    #[test]
    fn substitution_respects_shadowing() {
        let t = lam("x", Mult::Many, Some(var("x")), var("x"));
        // the annotation is outside the binder's scope
        assert_eq!(
            t.subst("x", &cnst("c")),
            lam("x", Mult::Many, Some(cnst("c")), var("x"))
        );
    }

    #[test]
    fn alpha_equality() {
        let a = pi("A", Mult::Many, Term::Star, pi("x", Mult::One, var("A"), var("A")));
        let b = pi("B", Mult::Many, Term::Star, pi("y", Mult::One, var("B"), var("B")));
        assert!(a.alpha_eq(&b));
        let c = pi("B", Mult::Many, Term::Star, pi("y", Mult::One, var("B"), var("y")));
        assert!(!a.alpha_eq(&c));
        assert!(!var("x").alpha_eq(&var("y")));
        // a bound name must not match a free one
        let d = lam("x", Mult::Many, None, var("y"));
        let e = lam("y", Mult::Many, None, var("y"));
        assert!(!d.alpha_eq(&e));
    }

    #[test]
    fn beta_is_leftmost_outermost() {
        let idf = lam("A", Mult::Many, Some(Term::Star), var("A"));
        let t = app(idf.clone(), app(idf.clone(), cnst("Bool")));
        assert_eq!(t.beta_step(), Some(app(idf, cnst("Bool"))));
        assert_eq!(cnst("Bool").beta_step(), None);
    }

    #[test]
    fn choice_validates_probability() {
        assert!(choice(ratio(1, 2), cnst("a"), cnst("b")).is_some());
        assert!(choice(ratio(0, 1), cnst("a"), cnst("b")).is_none());
        assert!(choice(ratio(1, 1), cnst("a"), cnst("b")).is_none());
    }
}
