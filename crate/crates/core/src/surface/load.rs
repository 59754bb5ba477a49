//! Atom grammar.
//!
//! ```text
//! atom  := (Type "name" [tv]) | (Type number [tv]) | (Type atom... [tv]) | $var
//!        | lambda-form | (Rule (And atom...) atom [(Formula "min")] [tv])
//!        | (Rule (atom...) atom ...) | (Typed x system T)
//! tv    := (tv strength confidence)
//! query := (Query atom...) | (Query (atom...))
//! ```
//!
//! In `(Typed x system T)` a bare `system` symbol names a `TypeSystem` node,
//! and `x`/`T` may be lambda terms written with bare symbols.

use std::fmt;

use thiserror::Error;

use super::sexpr::{parse, ParseError, Pos, SExpr, SExprKind};
use crate::lambda::{term_from_sexpr, term_spec, HEADS};
use crate::pattern::Pattern;
use crate::rewrite::{RewriteRule, TvFormula, RULE};
use crate::store::{AtomId, AtomSpec, NewAtom, Store, StoreError, TYPED, TYPE_SYSTEM, VARIABLE};
use crate::truth::{format_ratio, TruthValue};

pub const QUERY: &str = "Query";
pub const TV: &str = "tv";

/// Types that are always nodes; `(Concept)` is an error rather than an empty link.
pub const NODE_TYPES: &[&str] = &[
    "Concept",
    "Predicate",
    "Schema",
    "Number",
    "Variable",
    "SubgraphVariable",
    "GroundedSchema",
    "GroundedPredicate",
    "TypeSystem",
    "LambdaConst",
    "LambdaVar",
    "LambdaStar",
    "LambdaNoAnn",
    "Multiplicity",
    "Probability",
    "Formula",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct GrammarError {
    pub pos: Pos,
    /// The offending form, printed canonically.
    pub form: String,
    pub message: String,
}

impl fmt::Display for GrammarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} in `{}`", self.pos, self.message, self.form)
    }
}

fn grammar<T>(e: &SExpr, message: impl Into<String>) -> Result<T, GrammarError> {
    Err(GrammarError {
        pos: e.pos,
        form: e.to_string(),
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("grammar error at {0}")]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// A top-level form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Form {
    Atom(NewAtom),
    Query(Pattern),
}

pub fn is_tv(e: &SExpr) -> bool {
    e.head() == Some(TV)
}

pub fn parse_tv(e: &SExpr) -> Result<TruthValue, GrammarError> {
    match e.as_list() {
        Some([_, s, c]) => match (s.as_num(), c.as_num()) {
            (Some(s), Some(c)) => TruthValue::new(s.clone(), c.clone()).or_else(|err| grammar(e, err.to_string())),
            _ => grammar(e, "tv components must be rationals"),
        },
        _ => grammar(e, "expected `(tv strength confidence)`"),
    }
}

fn split_tv(items: &[SExpr]) -> Result<(&[SExpr], Option<TruthValue>), GrammarError> {
    match items.split_last() {
        Some((last, rest)) if is_tv(last) => Ok((rest, Some(parse_tv(last)?))),
        _ => Ok((items, None)),
    }
}

fn is_lambda_form(e: &SExpr) -> bool {
    e.head().is_some_and(|h| HEADS.contains(&h))
}

fn lambda_spec(e: &SExpr) -> Result<AtomSpec, GrammarError> {
    term_from_sexpr(e)
        .map(|t| term_spec(&t))
        .or_else(|err| grammar(e, err.to_string()))
}

/// Specification of one atom form, plus its truth value if one is attached.
pub fn atom_form(e: &SExpr) -> Result<NewAtom, GrammarError> {
    match &e.kind {
        SExprKind::Symbol(s) if s.starts_with('$') && s.len() > 1 => {
            Ok(NewAtom::new(AtomSpec::node(VARIABLE, s.as_str())))
        }
        SExprKind::Symbol(s) => grammar(
            e,
            format!("bare symbol `{s}`; variables start with `$`, nodes are written (Type \"name\")"),
        ),
        SExprKind::Str(_) | SExprKind::Num(_) => grammar(e, "expected an atom, found a literal"),
        SExprKind::List(items) => {
            let Some(head) = items.first() else {
                return grammar(e, "empty form");
            };
            let Some(type_name) = head.as_symbol() else {
                return grammar(e, "expected a type name at the head of the form");
            };
            if HEADS.contains(&type_name) {
                return Ok(NewAtom::new(lambda_spec(e)?));
            }
            if type_name == TV {
                return grammar(e, "a truth value must follow an atom");
            }
            if type_name == QUERY {
                return grammar(e, "a query is not an atom");
            }
            let (args, tv) = split_tv(&items[1..])?;
            let spec = match type_name {
                RULE => rule_spec(e, args)?,
                TYPED => typed_spec(e, args)?,
                _ => plain_spec(e, type_name, args)?,
            };
            Ok(NewAtom { spec, tv })
        }
    }
}

fn plain_spec(e: &SExpr, type_name: &str, args: &[SExpr]) -> Result<AtomSpec, GrammarError> {
    match args {
        [one] if one.as_str().is_some() => Ok(AtomSpec::node(type_name, one.as_str().unwrap_or_default())),
        [one] if one.as_num().is_some() => Ok(AtomSpec::node(type_name, format_ratio(one.as_num().expect("checked")))),
        [] if NODE_TYPES.contains(&type_name) => grammar(e, format!("`{type_name}` node needs a name")),
        _ => {
            if NODE_TYPES.contains(&type_name) {
                return grammar(e, format!("`{type_name}` is a node type and takes exactly one name"));
            }
            let mut targets = Vec::with_capacity(args.len());
            for a in args {
                if is_tv(a) {
                    return grammar(a, "truth value must be the last element");
                }
                if a.as_str().is_some() || a.as_num().is_some() {
                    return grammar(a, "link targets must be atoms");
                }
                targets.push(target(a)?);
            }
            Ok(AtomSpec::link(type_name, targets))
        }
    }
}

fn target(e: &SExpr) -> Result<AtomSpec, GrammarError> {
    let atom = atom_form(e)?;
    if atom.tv.is_some() {
        return grammar(e, "truth values may only be attached to top-level atoms");
    }
    Ok(atom.spec)
}

fn rule_spec(e: &SExpr, args: &[SExpr]) -> Result<AtomSpec, GrammarError> {
    let (premises, conclusion, formula) = match args {
        [p, c] => (p, c, TvFormula::Product),
        [p, c, f] => {
            let formula = match (f.head(), f.as_list()) {
                (Some("Formula"), Some([_, name])) => name.as_str().and_then(|n| n.parse().ok()),
                _ => None,
            };
            let Some(formula) = formula else {
                return grammar(f, "expected (Formula \"product\") or (Formula \"min\")");
            };
            (p, c, formula)
        }
        _ => return grammar(e, "expected `(Rule (premise...) conclusion [(Formula name)] [tv])`"),
    };
    let premise_forms: &[SExpr] = match premises.as_list() {
        Some([head, rest @ ..]) if head.as_symbol() == Some("And") => rest,
        Some(items) if items.first().is_some_and(|i| i.as_list().is_some()) => items,
        _ => return grammar(premises, "premises must be `(And atom...)` or a list of atoms"),
    };
    let premise_specs = premise_forms.iter().map(target).collect::<Result<Vec<_>, _>>()?;
    let conclusion = target(conclusion)?;
    RewriteRule::spec(&premise_specs, &conclusion, formula).or_else(|err| grammar(e, err.to_string()))
}

fn typed_part(e: &SExpr) -> Result<AtomSpec, GrammarError> {
    match &e.kind {
        SExprKind::Symbol(s) if !s.starts_with('$') => lambda_spec(e),
        _ if is_lambda_form(e) => lambda_spec(e),
        _ => target(e),
    }
}

fn typed_spec(e: &SExpr, args: &[SExpr]) -> Result<AtomSpec, GrammarError> {
    let [x, sys, ty] = args else {
        return grammar(e, "expected `(Typed atom system type)`");
    };
    let sys = match &sys.kind {
        SExprKind::Symbol(s) => AtomSpec::node(TYPE_SYSTEM, s.as_str()),
        SExprKind::Str(s) => AtomSpec::node(TYPE_SYSTEM, s.as_str()),
        _ => target(sys)?,
    };
    Ok(AtomSpec::link(TYPED, vec![typed_part(x)?, sys, typed_part(ty)?]))
}

/// A query: `(Query clause...)` or a single clause.
pub fn pattern_form(e: &SExpr) -> Result<Pattern, GrammarError> {
    let clauses = match e.as_list() {
        Some([head, rest @ ..]) if head.as_symbol() == Some(QUERY) => {
            // `(Query c...)` or `(Query (c...))`
            let rest = match rest {
                [only] if only.as_list().is_some_and(|l| l.first().is_some_and(|f| f.as_list().is_some())) => {
                    only.as_list().unwrap_or_default()
                }
                _ => rest,
            };
            if rest.is_empty() {
                return grammar(e, "a query needs at least one clause");
            }
            rest.iter().map(target).collect::<Result<Vec<_>, _>>()?
        }
        _ => vec![target(e)?],
    };
    Pattern::new(clauses).or_else(|err| grammar(e, err.to_string()))
}

pub fn form(e: &SExpr) -> Result<Form, GrammarError> {
    if e.head() == Some(QUERY) {
        return pattern_form(e).map(Form::Query);
    }
    atom_form(e).map(Form::Atom)
}

/// Validates every expression, then commits them in order. Nothing is
/// committed if any expression is malformed.
pub fn load(exprs: &[SExpr], store: &Store) -> Result<Vec<AtomId>, LoadError> {
    let atoms = exprs.iter().map(atom_form).collect::<Result<Vec<_>, _>>()?;
    let mut ids = Vec::with_capacity(atoms.len());
    for a in atoms {
        ids.push(store.add(a)?);
    }
    Ok(ids)
}

pub fn load_str(text: &str, store: &Store) -> Result<Vec<AtomId>, LoadError> {
    load(&parse(text)?, store)
}
