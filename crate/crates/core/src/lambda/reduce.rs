//! Call-by-value probabilistic reduction.
//!
//! Evaluation contexts are `(app E t)`, `(app v E)`, `(ann E T)`,
//! `(cast-up E)` and `(cast-down E)`, leftmost first. A choice is never a
//! value, so it is resolved before it can be substituted anywhere.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use super::{ann, app, cast_down, cast_up, Term};
use crate::truth::{format_ratio, Ratio};

fn map(succ: Vec<(Term, Ratio)>, wrap: impl Fn(Term) -> Term) -> Vec<(Term, Ratio)> {
    succ.into_iter().map(|(t, w)| (wrap(t), w)).collect()
}

/// Weighted one-step successors; empty exactly when `t` is a value.
pub fn reduce_step(t: &Term) -> Vec<(Term, Ratio)> {
    match t {
        Term::Choice(p, l, r) => vec![((**l).clone(), p.clone()), ((**r).clone(), Ratio::one() - p)],
        Term::App(f, a) => {
            let s = reduce_step(f);
            if !s.is_empty() {
                return map(s, |f2| app(f2, (**a).clone()));
            }
            let s = reduce_step(a);
            if !s.is_empty() {
                return map(s, |a2| app((**f).clone(), a2));
            }
            match f.as_ref() {
                Term::Lam { binder, body, .. } => vec![(body.subst(binder, a), Ratio::one())],
                Term::Ann(inner, ty) => match (inner.as_ref(), ty.as_ref()) {
                    (Term::Lam { binder, body, .. }, Term::Pi { binder: y, cod, .. }) => {
                        vec![(ann(body.subst(binder, a), cod.subst(y, a)), Ratio::one())]
                    }
                    _ => Vec::new(),
                },
                _ => Vec::new(),
            }
        }
        Term::Ann(inner, ty) => {
            let s = reduce_step(inner);
            if !s.is_empty() {
                return map(s, |i2| ann(i2, (**ty).clone()));
            }
            match inner.as_ref() {
                // kept: the annotation types a later application
                Term::Lam { .. } | Term::CastUp(_) => Vec::new(),
                _ => vec![((**inner).clone(), Ratio::one())],
            }
        }
        Term::CastUp(inner) => map(reduce_step(inner), cast_up),
        Term::CastDown(inner) => {
            let s = reduce_step(inner);
            if !s.is_empty() {
                return map(s, cast_down);
            }
            match inner.as_ref() {
                Term::CastUp(v) => vec![((**v).clone(), Ratio::one())],
                Term::Ann(a, _) => match a.as_ref() {
                    Term::CastUp(v) => vec![((**v).clone(), Ratio::one())],
                    _ => Vec::new(),
                },
                _ => Vec::new(),
            }
        }
        Term::Var(_) | Term::Const(_) | Term::Star | Term::Lam { .. } | Term::Pi { .. } => Vec::new(),
    }
}

pub fn is_value(t: &Term) -> bool {
    reduce_step(t).is_empty()
}

/// Exact distribution over values, plus the mass still reducing when the
/// step budget ran out.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Distribution {
    pub outcomes: BTreeMap<Term, Ratio>,
    pub residual: Ratio,
}

impl Distribution {
    pub fn total(&self) -> Ratio {
        self.outcomes.values().fold(self.residual.clone(), |acc, p| acc + p)
    }

    pub fn get(&self, t: &Term) -> Ratio {
        self.outcomes.get(t).cloned().unwrap_or_else(Ratio::zero)
    }

    fn add(&mut self, t: Term, p: Ratio) {
        *self.outcomes.entry(t).or_insert_with(Ratio::zero) += p;
    }
}

/// `a:1/4 b:1/4 c:1/2`, sorted by printed term; a nonzero residual is appended.
impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut rows: Vec<(String, &Ratio)> = self.outcomes.iter().map(|(t, p)| (t.to_string(), p)).collect();
        rows.sort();
        let mut parts: Vec<String> = rows
            .into_iter()
            .map(|(t, p)| format!("{t}:{}", format_ratio(p)))
            .collect();
        if !self.residual.is_zero() {
            parts.push(format!("residual:{}", format_ratio(&self.residual)));
        }
        f.write_str(&parts.join(" "))
    }
}

/// Breadth-first expansion, merging identical terms at each depth.
/// At most `max_steps` reduction steps are taken along any path.
pub fn eval_distribution(t: &Term, max_steps: usize) -> Distribution {
    let mut dist = Distribution::default();
    let mut frontier: BTreeMap<Term, Ratio> = BTreeMap::new();
    frontier.insert(t.clone(), Ratio::one());
    for _ in 0..max_steps {
        if frontier.is_empty() {
            break;
        }
        let mut next: BTreeMap<Term, Ratio> = BTreeMap::new();
        for (term, p) in frontier {
            let succ = reduce_step(&term);
            if succ.is_empty() {
                dist.add(term, p);
                continue;
            }
            for (t2, w) in succ {
                *next.entry(t2).or_insert_with(Ratio::zero) += &p * w;
            }
        }
        frontier = next;
    }
    for (term, p) in frontier {
        if is_value(&term) {
            dist.add(term, p);
        } else {
            dist.residual += p;
        }
    }
    dist
}

/// Depth-first expansion without merging; same budget semantics as
/// [`eval_distribution`].
pub fn eval_distribution_dfs(t: &Term, max_steps: usize) -> Distribution {
    let mut dist = Distribution::default();
    let mut stack = vec![(t.clone(), Ratio::one(), max_steps)];
    while let Some((term, p, budget)) = stack.pop() {
        let succ = reduce_step(&term);
        if succ.is_empty() {
            dist.add(term, p);
        } else if budget == 0 {
            dist.residual += p;
        } else {
            // reversed so the left branch is explored first
            for (t2, w) in succ.into_iter().rev() {
                stack.push((t2, &p * w, budget - 1));
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::{apps, choice, cnst, lam, pi, var, Mult};
    use crate::truth::ratio;

    fn half(a: Term, b: Term) -> Term {
        choice(ratio(1, 2), a, b).unwrap()
    }

    #[test]
    fn beta() {
        let id = lam("x", Mult::Many, None, var("x"));
        assert_eq!(reduce_step(&app(id, cnst("v"))), vec![(cnst("v"), Ratio::one())]);
        assert!(reduce_step(&cnst("v")).is_empty());
    }

    #[test]
    fn choice_splits() {
        assert_eq!(
            reduce_step(&half(cnst("a"), cnst("b"))),
            vec![(cnst("a"), ratio(1, 2)), (cnst("b"), ratio(1, 2))]
        );
    }

    #[test]
    fn nested_choice_distribution() {
        let t = half(half(cnst("a"), cnst("b")), cnst("c"));
        let d = eval_distribution(&t, 100);
        assert_eq!(d.to_string(), "a:1/4 b:1/4 c:1/2");
        assert!(d.residual.is_zero());
        assert_eq!(d, eval_distribution_dfs(&t, 100));
    }

    #[test]
    fn call_by_value_duplicates_the_resolved_value() {
        let dup = lam("x", Mult::Many, None, apps(cnst("pair"), [var("x"), var("x")]));
        let t = app(dup, half(cnst("a"), cnst("b")));
        let d = eval_distribution(&t, 100);
        assert_eq!(d.get(&apps(cnst("pair"), [cnst("a"), cnst("a")])), ratio(1, 2));
        assert_eq!(d.get(&apps(cnst("pair"), [cnst("b"), cnst("b")])), ratio(1, 2));
        assert_eq!(d.get(&apps(cnst("pair"), [cnst("a"), cnst("b")])), Ratio::zero());
        assert_eq!(d.outcomes.len(), 2);
    }

    #[test]
    fn divergence_is_residual() {
        let w = lam("x", Mult::Many, None, app(var("x"), var("x")));
        let omega = app(w.clone(), w);
        for budget in [0, 1, 7, 50] {
            let d = eval_distribution(&omega, budget);
            assert!(d.outcomes.is_empty());
            assert_eq!(d.residual, Ratio::one());
            assert_eq!(d, eval_distribution_dfs(&omega, budget));
        }
    }

    #[test]
    fn values_are_their_own_distribution() {
        let d = eval_distribution(&cnst("v"), 0);
        assert_eq!(d.to_string(), "v:1");
    }

    #[test]
    fn annotated_beta_and_casts() {
        let ty = pi("x", Mult::Many, cnst("B"), cnst("B"));
        let f = crate::lambda::ann(lam("x", Mult::Many, None, var("x")), ty);
        let got = eval_distribution(&app(f, cnst("b")), 10);
        assert_eq!(got.to_string(), "b:1");
        let c = cast_down(cast_up(cnst("v")));
        assert_eq!(reduce_step(&c), vec![(cnst("v"), Ratio::one())]);
        let c = cast_down(ann(cast_up(cnst("v")), cnst("R")));
        assert_eq!(reduce_step(&c), vec![(cnst("v"), Ratio::one())]);
        assert!(is_value(&cast_up(cnst("v"))));
    }
}
