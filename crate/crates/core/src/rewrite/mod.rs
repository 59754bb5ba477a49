//! Rewrite rules stored in the metagraph, their local application, and
//! forward/backward chaining built from the pattern primitives.

mod backward;
mod forward;
mod rule;

pub use backward::{backward_chain, Proof};
pub use forward::{forward_chain, ForwardConfig, Policy};
pub use rule::{rules_in, RewriteRule, TvFormula, RULE};

use thiserror::Error;

use crate::pattern::{match_at, query_seeded, Bindings, PatternError};
use crate::store::{AtomId, AtomSpec, NewAtom, Snapshot, Store, StoreError, Variable};
use crate::truth::TruthValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("variable {0} is not bound")]
    UnboundVariable(Variable),
    #[error("conclusion variable {0} does not occur in the premise")]
    InventedVariable(Variable),
    #[error("malformed rule: {0}")]
    MalformedRule(String),
}

pub type Result<T, E = RewriteError> = std::result::Result<T, E>;

/// Substitutes `bindings` into `template`. Fails on any unbound variable.
pub fn instantiate(template: &AtomSpec, bindings: &Bindings) -> Result<AtomSpec> {
    match template {
        AtomSpec::Node { .. } => match template.as_variable() {
            Some(v) => bindings
                .get(&v)
                .map(AtomSpec::Existing)
                .ok_or(RewriteError::UnboundVariable(v)),
            None => Ok(template.clone()),
        },
        AtomSpec::Link { type_name, targets } => Ok(AtomSpec::link(
            type_name.clone(),
            targets
                .iter()
                .map(|t| instantiate(t, bindings))
                .collect::<Result<_>>()?,
        )),
        AtomSpec::Existing(_) => Ok(template.clone()),
    }
}

/// One way a rule fires at a locus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Application {
    pub bindings: Bindings,
    /// Stored atoms matched by each premise clause, in premise order.
    pub premises: Vec<AtomId>,
    pub conclusion: AtomSpec,
    pub tv: TruthValue,
}

/// Matches the premise with some clause anchored at `locus`, completes the
/// remaining clauses by search, and instantiates the conclusion for every
/// resulting binding. Pure: nothing is committed.
pub fn apply_rule_at(rule: &RewriteRule, locus: AtomId, snap: &Snapshot) -> Result<Vec<Application>> {
    snap.resolve(locus)?;
    let premises = rule.premises();
    let mut complete = std::collections::BTreeSet::new();
    for (i, clause) in premises.iter().enumerate() {
        let Some(seed) = match_at(clause, locus, &Bindings::new(), snap)? else {
            continue;
        };
        let others: Vec<AtomSpec> = premises
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, c)| c.clone())
            .collect();
        if others.is_empty() {
            complete.insert(seed);
        } else {
            complete.extend(query_seeded(&others, &seed, snap)?);
        }
    }
    complete
        .into_iter()
        .map(|bindings| {
            let matched = premises
                .iter()
                .map(|p| {
                    snap.lookup_spec(&bindings.substitute(p))
                        .ok_or_else(|| RewriteError::MalformedRule("premise match vanished".into()))
                })
                .collect::<Result<Vec<_>>>()?;
            let tvs: Vec<TruthValue> = matched
                .iter()
                .map(|id| {
                    snap.resolve(*id)
                        .map(|a| a.tv.clone().unwrap_or_else(TruthValue::certain))
                })
                .collect::<Result<_, _>>()?;
            Ok(Application {
                conclusion: instantiate(rule.conclusion(), &bindings)?,
                tv: rule.formula().apply(rule.tv(), &tvs),
                premises: matched,
                bindings,
            })
        })
        .collect()
}

/// An atom produced by a rule application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derived {
    /// Fully structural form, valid in any store.
    pub spec: AtomSpec,
    pub tv: TruthValue,
    /// Id in the store it was committed to; `None` for backward-chaining derivations.
    pub id: Option<AtomId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: AtomId,
    pub bindings: Bindings,
    pub derived: Vec<Derived>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainOutcome {
    Fixpoint,
    /// The step budget ran out before a fixpoint was reached.
    NoProgressBudget,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainTrace {
    pub steps: Vec<TraceStep>,
    pub initial_version: u64,
    pub final_version: u64,
    /// Rounds (exhaustive policy) or agenda pops (FIFO) performed.
    pub steps_taken: usize,
    pub outcome: ChainOutcome,
}

impl ChainTrace {
    pub fn derived(&self) -> impl Iterator<Item = &Derived> {
        self.steps.iter().flat_map(|s| s.derived.iter())
    }

    /// Commits every derived atom, in order, on top of `initial`.
    pub fn replay(&self, initial: &Snapshot) -> Result<Store> {
        let store = Store::from_snapshot(initial);
        for d in self.derived() {
            store.add(NewAtom::with_tv(d.spec.clone(), d.tv.clone()))?;
        }
        Ok(store)
    }

    /// S-expression log, one `(Step ...)` per application.
    pub fn render(&self, snap: &Snapshot) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let rule = snap.render(s.rule).unwrap_or_else(|_| s.rule.to_string());
            let derived: Vec<String> = s
                .derived
                .iter()
                .map(|d| format!("{} {}", snap.render_spec(&d.spec).unwrap_or_default(), d.tv))
                .collect();
            out.push_str(&format!(
                "(Step {rule} (Bindings \"{}\") {})\n",
                s.bindings.render(snap).replace('"', "'"),
                derived.join(" ")
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truth::TruthValue;

    fn concept(n: &str) -> AtomSpec {
        AtomSpec::node("Concept", n)
    }

    fn inh(a: AtomSpec, b: AtomSpec) -> AtomSpec {
        AtomSpec::link("Inheritance", vec![a, b])
    }

    fn var(n: &str) -> AtomSpec {
        AtomSpec::var(n)
    }

    #[test]
    fn instantiate_substitutes() {
        let store = Store::new();
        let cat = store.add(concept("cat").into()).unwrap();
        let organism = store.add(concept("organism").into()).unwrap();
        let b = Bindings::new()
            .with(Variable::new("$x"), cat)
            .with(Variable::new("$z"), organism);
        let got = instantiate(&inh(var("$x"), var("$z")), &b).unwrap();
        assert_eq!(got, inh(AtomSpec::Existing(cat), AtomSpec::Existing(organism)));
        let partial = Bindings::new().with(Variable::new("$x"), cat);
        assert_eq!(
            instantiate(&inh(var("$x"), var("$z")), &partial),
            Err(RewriteError::UnboundVariable(Variable::new("$z")))
        );
    }

    #[test]
    fn instantiate_with_link_binding() {
        let store = Store::new();
        let premise = store.add(inh(concept("cat"), concept("animal")).into()).unwrap();
        let b = Bindings::new().with(Variable::new("$p"), premise);
        let template = AtomSpec::link("Implication", vec![var("$p"), concept("q")]);
        let got = instantiate(&template, &b).unwrap();
        let snap = store.snapshot();
        assert_eq!(
            snap.expand(&got).unwrap(),
            AtomSpec::link(
                "Implication",
                vec![inh(concept("cat"), concept("animal")), concept("q")]
            )
        );
    }

    fn deduction(store: &Store) -> RewriteRule {
        RewriteRule::store(
            store,
            vec![inh(var("$x"), var("$y")), inh(var("$y"), var("$z"))],
            inh(var("$x"), var("$z")),
            TruthValue::certain(),
            TvFormula::Product,
        )
        .unwrap()
    }

    #[test]
    fn deduction_at_a_locus() {
        let store = Store::new();
        let rule = deduction(&store);
        let l1 = store
            .add(NewAtom::with_tv(
                inh(concept("cat"), concept("animal")),
                TruthValue::from_fractions((9, 10), (8, 10)),
            ))
            .unwrap();
        store
            .add(NewAtom::with_tv(
                inh(concept("animal"), concept("organism")),
                TruthValue::from_fractions((8, 10), (5, 10)),
            ))
            .unwrap();
        let lone = store.add(concept("rock").into()).unwrap();
        let snap = store.snapshot();
        let apps = apply_rule_at(&rule, l1, &snap).unwrap();
        assert_eq!(apps.len(), 1);
        assert_eq!(
            snap.expand(&apps[0].conclusion).unwrap(),
            inh(concept("cat"), concept("organism"))
        );
        assert_eq!(apps[0].tv, TruthValue::from_fractions((72, 100), (4, 10)));
        assert!(apply_rule_at(&rule, lone, &snap).unwrap().is_empty());
    }

    #[test]
    fn premise_order_does_not_matter_at_the_locus() {
        // the locus can match either premise clause
        let store = Store::new();
        let rule = deduction(&store);
        store.add(inh(concept("cat"), concept("animal")).into()).unwrap();
        let l2 = store.add(inh(concept("animal"), concept("organism")).into()).unwrap();
        let snap = store.snapshot();
        let apps = apply_rule_at(&rule, l2, &snap).unwrap();
        assert_eq!(apps.len(), 1);
        assert_eq!(
            snap.expand(&apps[0].conclusion).unwrap(),
            inh(concept("cat"), concept("organism"))
        );
    }
}
