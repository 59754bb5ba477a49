//! Bidirectional checking with syntactic (alpha) type equality.
//!
//! There is no implicit conversion: a type that needs a beta step to match
//! must be reached through `cast-down` (step the inferred type) or `cast-up`
//! (step the expected type). Constants missing from the signature have the
//! dynamic type, which is consistent with every type; usage through a
//! dynamically typed function is only known to lie in [0, ω].

use std::collections::BTreeMap;
use std::fmt;

use super::{pi, Mult, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IllReason {
    UnboundVar,
    NotAFunction,
    TypeMismatch,
    LinearityViolation,
    CastStepUnavailable,
}

impl fmt::Display for IllReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IllReason::UnboundVar => "UnboundVar",
            IllReason::NotAFunction => "NotAFunction",
            IllReason::TypeMismatch => "TypeMismatch",
            IllReason::LinearityViolation => "LinearityViolation",
            IllReason::CastStepUnavailable => "CastStepUnavailable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ill {
    pub reason: IllReason,
    pub detail: String,
    /// Checker steps taken before giving up.
    pub steps: usize,
}

impl fmt::Display for Ill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ill({}): {}", self.reason, self.detail)
    }
}

impl std::error::Error for Ill {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Typed {
    /// `None` is the dynamic type.
    pub ty: Option<Term>,
    /// Checker steps (one per infer/check visit).
    pub steps: usize,
}

/// Types of global constants. Every entry is unrestricted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    consts: BTreeMap<String, Term>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: &str, ty: Term) -> &mut Self {
        self.consts.insert(name.to_string(), ty);
        self
    }

    pub fn with(mut self, name: &str, ty: Term) -> Self {
        self.declare(name, ty);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Term> {
        self.consts.get(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<Term> {
        self.consts.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Term)> {
        self.consts.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Checks that every declared type is a type.
    pub fn validate(&self) -> Result<(), (String, Ill)> {
        for (name, ty) in &self.consts {
            let mut c = Checker::new(self);
            c.check_type(ty).map_err(|e| (name.clone(), c.fail(e)))?;
        }
        Ok(())
    }
}

/// Usage known to lie in `lo..=hi`, ordered 0 < 1 < ω.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Use {
    lo: Mult,
    hi: Mult,
}

const UNUSED: Use = Use {
    lo: Mult::Zero,
    hi: Mult::Zero,
};
const ANY: Use = Use {
    lo: Mult::Zero,
    hi: Mult::Many,
};

impl Use {
    fn exact(m: Mult) -> Self {
        Use { lo: m, hi: m }
    }

    fn add(self, o: Use) -> Use {
        Use {
            lo: self.lo.plus(o.lo),
            hi: self.hi.plus(o.hi),
        }
    }

    fn scale(self, by: Use) -> Use {
        Use {
            lo: self.lo.times(by.lo),
            hi: self.hi.times(by.hi),
        }
    }

    fn allows(self, m: Mult) -> bool {
        match m {
            Mult::Zero => self.lo == Mult::Zero,
            Mult::One => self.lo <= Mult::One && Mult::One <= self.hi,
            Mult::Many => true,
        }
    }
}

type Uses = Vec<Use>;

struct Entry {
    name: String,
    ty: Option<Term>,
    mult: Mult,
}

struct Err0 {
    reason: IllReason,
    detail: String,
}

fn err<T>(reason: IllReason, detail: impl Into<String>) -> Result<T, Err0> {
    Err(Err0 {
        reason,
        detail: detail.into(),
    })
}

fn consistent(a: &Option<Term>, b: &Option<Term>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a.alpha_eq(b),
        _ => true,
    }
}

fn show(t: &Option<Term>) -> String {
    t.as_ref().map_or_else(|| "?".to_string(), ToString::to_string)
}

struct Checker<'a> {
    sig: &'a Signature,
    ctx: Vec<Entry>,
    steps: usize,
}

impl<'a> Checker<'a> {
    fn new(sig: &'a Signature) -> Self {
        Self {
            sig,
            ctx: Vec::new(),
            steps: 0,
        }
    }

    fn fail(&self, e: Err0) -> Ill {
        Ill {
            reason: e.reason,
            detail: e.detail,
            steps: self.steps,
        }
    }

    fn unused(&self) -> Uses {
        vec![UNUSED; self.ctx.len()]
    }

    fn sum(mut a: Uses, b: &Uses) -> Uses {
        for (x, y) in a.iter_mut().zip(b) {
            *x = x.add(*y);
        }
        a
    }

    /// Pushes a binder, renaming it when it would shadow a context entry.
    fn enter(&mut self, binder: &str, body: &Term, ty: Option<Term>, mult: Mult) -> (String, Term) {
        let taken = |n: &str| self.ctx.iter().any(|e| e.name == n);
        let (name, body) = if taken(binder) {
            let fresh = super::fresh_name(binder, |n| taken(n) || body.free_vars().contains(n));
            let renamed = body.subst(binder, &Term::Var(fresh.clone()));
            (fresh, renamed)
        } else {
            (binder.to_string(), body.clone())
        };
        self.ctx.push(Entry {
            name: name.clone(),
            ty,
            mult,
        });
        (name, body)
    }

    /// Pops the innermost binder and enforces its multiplicity.
    fn leave(&mut self, mut uses: Uses) -> Result<Uses, Err0> {
        let entry = self.ctx.pop().expect("balanced enter/leave");
        let used = uses.pop().expect("uses track the context");
        if !used.allows(entry.mult) {
            let count = match (used.lo, used.hi) {
                (Mult::Zero, Mult::Zero) => "never",
                (Mult::One, Mult::One) => "once",
                (Mult::Many, _) => "more than once",
                _ => "an unknown number of times",
            };
            return err(
                IllReason::LinearityViolation,
                format!(
                    "`{}` has multiplicity {} but is used {count}",
                    entry.name,
                    entry.mult.keyword()
                ),
            );
        }
        Ok(uses)
    }

    /// `t : *`, with usage discarded (types are erased).
    fn check_type(&mut self, t: &Term) -> Result<(), Err0> {
        self.check(t, &Some(Term::Star)).map(|_| ())
    }

    fn infer(&mut self, t: &Term) -> Result<(Option<Term>, Uses), Err0> {
        self.steps += 1;
        match t {
            Term::Var(x) => {
                let Some(i) = self.ctx.iter().rposition(|e| &e.name == x) else {
                    return err(IllReason::UnboundVar, format!("unbound variable `{x}`"));
                };
                let mut uses = self.unused();
                uses[i] = Use::exact(Mult::One);
                Ok((self.ctx[i].ty.clone(), uses))
            }
            Term::Const(c) => Ok((self.sig.get(c).cloned(), self.unused())),
            Term::Star => Ok((Some(Term::Star), self.unused())),
            Term::Pi { binder, dom, cod, .. } => {
                self.check_type(dom)?;
                let (_, cod) = self.enter(binder, cod, Some((**dom).clone()), Mult::Many);
                let r = self.check_type(&cod);
                self.ctx.pop();
                r?;
                Ok((Some(Term::Star), self.unused()))
            }
            Term::Lam {
                binder,
                mult,
                ann: Some(a),
                body,
            } => {
                self.check_type(a)?;
                let (name, body) = self.enter(binder, body, Some((**a).clone()), *mult);
                let (bty, uses) = match self.infer(&body) {
                    Ok(r) => r,
                    Err(e) => {
                        self.ctx.pop();
                        return Err(e);
                    }
                };
                let uses = self.leave(uses)?;
                Ok((bty.map(|b| pi(&name, *mult, (**a).clone(), b)), uses))
            }
            Term::Lam { binder, ann: None, .. } => err(
                IllReason::TypeMismatch,
                format!("cannot infer the type of unannotated `lam {binder}`; check it against a pi type"),
            ),
            Term::App(f, a) => {
                let (fty, uf) = self.infer(f)?;
                match fty {
                    None => {
                        let ua = self.check(a, &None)?;
                        let ua: Uses = ua.into_iter().map(|u| u.scale(ANY)).collect();
                        Ok((None, Self::sum(uf, &ua)))
                    }
                    Some(Term::Pi { binder, mult, dom, cod }) => {
                        let ua = self.check(a, &Some(*dom))?;
                        let ua: Uses = ua.into_iter().map(|u| u.scale(Use::exact(mult))).collect();
                        Ok((Some(cod.subst(&binder, a)), Self::sum(uf, &ua)))
                    }
                    Some(other) => err(
                        IllReason::NotAFunction,
                        format!("`{f}` has type `{other}`, not a pi type"),
                    ),
                }
            }
            Term::Ann(inner, ty) => {
                self.check_type(ty)?;
                let ty = Some((**ty).clone());
                let uses = self.check(inner, &ty)?;
                Ok((ty, uses))
            }
            Term::CastDown(inner) => {
                let (ty, uses) = self.infer(inner)?;
                match ty {
                    None => Ok((None, uses)),
                    Some(ty) => match ty.beta_step() {
                        Some(next) => Ok((Some(next), uses)),
                        None => err(
                            IllReason::CastStepUnavailable,
                            format!("cast-down: type `{ty}` has no beta step"),
                        ),
                    },
                }
            }
            Term::CastUp(_) => err(
                IllReason::TypeMismatch,
                "cannot infer the type of a cast-up; annotate it with the target type",
            ),
            Term::Choice(p, l, r) => {
                if !super::valid_probability(p) {
                    return err(
                        IllReason::TypeMismatch,
                        format!("choice probability {p} is not in (0, 1)"),
                    );
                }
                let (lty, ul) = self.infer(l)?;
                let ur = self.check(r, &lty)?;
                // branch uses add up: a linear variable mentioned in both branches counts twice
                Ok((lty, Self::sum(ul, &ur)))
            }
        }
    }

    fn check(&mut self, t: &Term, expected: &Option<Term>) -> Result<Uses, Err0> {
        self.steps += 1;
        match (t, expected) {
            (
                Term::Lam {
                    binder,
                    mult,
                    ann,
                    body,
                },
                Some(Term::Pi {
                    binder: y,
                    mult: m2,
                    dom,
                    cod,
                }),
            ) => {
                if mult != m2 {
                    return err(
                        IllReason::TypeMismatch,
                        format!(
                            "`lam {binder}` has multiplicity {} but the expected pi has {}",
                            mult.keyword(),
                            m2.keyword()
                        ),
                    );
                }
                if let Some(a) = ann {
                    self.check_type(a)?;
                    if !a.alpha_eq(dom) {
                        return err(
                            IllReason::TypeMismatch,
                            format!("annotation `{a}` on `lam {binder}` differs from expected domain `{dom}`"),
                        );
                    }
                }
                let (name, body) = self.enter(binder, body, Some((**dom).clone()), *mult);
                let expected_body = Some(cod.subst(y, &Term::Var(name)));
                let uses = match self.check(&body, &expected_body) {
                    Ok(u) => u,
                    Err(e) => {
                        self.ctx.pop();
                        return Err(e);
                    }
                };
                self.leave(uses)
            }
            (Term::Lam { binder, .. }, Some(other)) => err(
                IllReason::TypeMismatch,
                format!("`lam {binder}` checked against non-pi type `{other}`"),
            ),
            (
                Term::Lam {
                    binder,
                    mult,
                    ann,
                    body,
                },
                None,
            ) => {
                if let Some(a) = ann {
                    self.check_type(a)?;
                }
                let (_, body) = self.enter(binder, body, ann.as_deref().cloned(), *mult);
                let uses = match self.check(&body, &None) {
                    Ok(u) => u,
                    Err(e) => {
                        self.ctx.pop();
                        return Err(e);
                    }
                };
                self.leave(uses)
            }
            (Term::CastUp(inner), Some(ty)) => match ty.beta_step() {
                Some(next) => self.check(inner, &Some(next)),
                None => err(
                    IllReason::CastStepUnavailable,
                    format!("cast-up: expected type `{ty}` has no beta step"),
                ),
            },
            (Term::CastUp(inner), None) => self.check(inner, &None),
            (Term::Choice(p, l, r), _) => {
                if !super::valid_probability(p) {
                    return err(
                        IllReason::TypeMismatch,
                        format!("choice probability {p} is not in (0, 1)"),
                    );
                }
                let ul = self.check(l, expected)?;
                let ur = self.check(r, expected)?;
                Ok(Self::sum(ul, &ur))
            }
            _ => {
                let (ty, uses) = self.infer(t)?;
                if consistent(&ty, expected) {
                    Ok(uses)
                } else {
                    err(
                        IllReason::TypeMismatch,
                        format!("`{t}` has type `{}` but `{}` was expected", show(&ty), show(expected)),
                    )
                }
            }
        }
    }
}

/// Infers the type of a closed term.
pub fn typecheck(sig: &Signature, t: &Term) -> Result<Typed, Ill> {
    let mut c = Checker::new(sig);
    match c.infer(t) {
        Ok((ty, _)) => Ok(Typed { ty, steps: c.steps }),
        Err(e) => Err(c.fail(e)),
    }
}

/// Checks a closed term against `ty`, after checking that `ty` is a type.
pub fn typecheck_against(sig: &Signature, t: &Term, ty: &Term) -> Result<Typed, Ill> {
    let mut c = Checker::new(sig);
    let r = c.check_type(ty).and_then(|()| c.check(t, &Some(ty.clone())));
    match r {
        Ok(_) => Ok(Typed {
            ty: Some(ty.clone()),
            steps: c.steps,
        }),
        Err(e) => Err(c.fail(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::{ann, app, apps, cast_down, cast_up, choice, cnst, lam, var};
    use crate::truth::ratio;
    use Mult::*;

    fn bool_sig() -> Signature {
        let b = || cnst("Bool");
        Signature::new()
            .with("Bool", Term::Star)
            .with("tt", b())
            .with("ff", b())
            .with("BPair", Term::Star)
            .with("pair", pi("a", Many, b(), pi("b", Many, b(), cnst("BPair"))))
            .with("lpair", pi("a", One, b(), pi("b", One, b(), cnst("BPair"))))
            .with("f", pi("x", Many, b(), b()))
            .with("redex", app(lam("A", Many, Some(Term::Star), var("A")), b()))
    }

    fn poly_id() -> (Term, Term) {
        let ty = pi("A", Many, Term::Star, pi("x", One, var("A"), var("A")));
        let t = lam("A", Many, Some(Term::Star), lam("x", One, Some(var("A")), var("x")));
        (t, ty)
    }

    #[test]
    fn polymorphic_identity() {
        let (t, ty) = poly_id();
        let got = typecheck(&bool_sig(), &ann(t.clone(), ty.clone())).unwrap();
        assert!(got.ty.unwrap().alpha_eq(&ty));
        // inferred directly from the annotations too
        assert!(typecheck(&bool_sig(), &t).unwrap().ty.unwrap().alpha_eq(&ty));
        let applied = apps(ann(t, ty), [cnst("Bool"), cnst("tt")]);
        assert_eq!(typecheck(&bool_sig(), &applied).unwrap().ty, Some(cnst("Bool")));
    }

    #[test]
    fn signature_is_well_formed() {
        bool_sig().validate().unwrap();
        let bad = Signature::new()
            .with("oops", cnst("tt"))
            .with("tt", cnst("Bool"))
            .with("Bool", Term::Star);
        assert_eq!(bad.validate().unwrap_err().0, "oops");
    }

    #[test]
    fn linear_double_use_is_rejected() {
        let t = lam("x", One, Some(cnst("Bool")), apps(cnst("pair"), [var("x"), var("x")]));
        let e = typecheck(&bool_sig(), &t).unwrap_err();
        assert_eq!(e.reason, IllReason::LinearityViolation);
        let unused = lam("x", One, Some(cnst("Bool")), cnst("tt"));
        assert_eq!(
            typecheck(&bool_sig(), &unused).unwrap_err().reason,
            IllReason::LinearityViolation
        );
        let ok = lam(
            "x",
            One,
            Some(cnst("Bool")),
            apps(cnst("lpair"), [var("x"), cnst("tt")]),
        );
        typecheck(&bool_sig(), &ok).unwrap();
        // ω argument position multiplies a single use up to ω
        let via_many = lam("x", One, Some(cnst("Bool")), app(cnst("f"), var("x")));
        assert_eq!(
            typecheck(&bool_sig(), &via_many).unwrap_err().reason,
            IllReason::LinearityViolation
        );
    }

    #[test]
    fn erased_binders() {
        // A is used only in types
        let (t, _) = poly_id();
        let erased = match t {
            Term::Lam { binder, ann, body, .. } => Term::Lam {
                binder,
                mult: Zero,
                ann,
                body,
            },
            _ => unreachable!(),
        };
        typecheck(&bool_sig(), &erased).unwrap();
        let misuse = lam("x", Zero, Some(cnst("Bool")), var("x"));
        assert_eq!(
            typecheck(&bool_sig(), &misuse).unwrap_err().reason,
            IllReason::LinearityViolation
        );
    }

    #[test]
    fn cast_triple() {
        let base = bool_sig();
        let redex = base.get("redex").unwrap().clone();
        let sig = base.with("redex_val", redex);
        let plain = app(cnst("f"), cnst("redex_val"));
        assert_eq!(typecheck(&sig, &plain).unwrap_err().reason, IllReason::TypeMismatch);
        let down = app(cnst("f"), cast_down(cnst("redex_val")));
        assert_eq!(typecheck(&sig, &down).unwrap().ty, Some(cnst("Bool")));
        let up = ann(cast_up(cnst("tt")), sig.get("redex").unwrap().clone());
        typecheck(&sig, &up).unwrap();
        let no_step = cast_down(cnst("tt"));
        assert_eq!(
            typecheck(&sig, &no_step).unwrap_err().reason,
            IllReason::CastStepUnavailable
        );
    }

    #[test]
    fn errors() {
        let sig = bool_sig();
        assert_eq!(typecheck(&sig, &var("nope")).unwrap_err().reason, IllReason::UnboundVar);
        assert_eq!(
            typecheck(&sig, &app(cnst("tt"), cnst("ff"))).unwrap_err().reason,
            IllReason::NotAFunction
        );
        assert_eq!(
            typecheck(&sig, &app(cnst("f"), cnst("Bool"))).unwrap_err().reason,
            IllReason::TypeMismatch
        );
    }

    #[test]
    fn choice_needs_one_type() {
        let sig = bool_sig();
        let ok = choice(ratio(1, 3), cnst("tt"), cnst("ff")).unwrap();
        assert_eq!(typecheck(&sig, &ok).unwrap().ty, Some(cnst("Bool")));
        let bad = choice(ratio(1, 3), cnst("tt"), cnst("Bool")).unwrap();
        assert_eq!(typecheck(&sig, &bad).unwrap_err().reason, IllReason::TypeMismatch);
    }

    #[test]
    fn unknown_constants_are_dynamic() {
        let sig = bool_sig();
        let t = app(cnst("mystery"), cnst("tt"));
        assert_eq!(typecheck(&sig, &t).unwrap().ty, None);
        typecheck_against(&sig, &t, &cnst("Bool")).unwrap();
        // a linear variable passed to an untyped function might be used once
        let lin = lam("x", One, Some(cnst("Bool")), app(cnst("mystery"), var("x")));
        typecheck(&sig, &lin).unwrap();
    }

    #[test]
    fn shadowing_is_handled() {
        // λA:*. λA:A. A  -- inner A has type (outer) A
        let t = lam("A", Many, Some(Term::Star), lam("A", Many, Some(var("A")), var("A")));
        let ty = typecheck(&Signature::new(), &t).unwrap().ty.unwrap();
        let expect = pi("A", Many, Term::Star, pi("B", Many, var("A"), var("A")));
        assert!(ty.alpha_eq(&expect), "{ty}");
    }
}
