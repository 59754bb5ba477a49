use std::collections::{BTreeMap, HashMap};

use super::{Derived, Result, RewriteRule, TraceStep};
use crate::pattern::{query, Bindings, Pattern};
use crate::store::{AtomSpec, Snapshot, Variable};
use crate::truth::TruthValue;

/// One way to establish the goal, with the derivation that supports it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proof {
    pub bindings: Bindings,
    /// Rule applications, premises before the conclusions that use them.
    /// Empty when the goal holds directly in the store.
    pub trace: Vec<TraceStep>,
}

type Subst = BTreeMap<Variable, AtomSpec>;

fn walk(spec: &AtomSpec, s: &Subst) -> AtomSpec {
    match spec {
        AtomSpec::Node { .. } => match spec.as_variable().and_then(|v| s.get(&v)) {
            Some(bound) => walk(bound, s),
            None => spec.clone(),
        },
        AtomSpec::Link { type_name, targets } => {
            AtomSpec::link(type_name.clone(), targets.iter().map(|t| walk(t, s)).collect())
        }
        AtomSpec::Existing(_) => spec.clone(),
    }
}

fn unify(a: &AtomSpec, b: &AtomSpec, s: &mut Subst) -> bool {
    let a = walk(a, s);
    let b = walk(b, s);
    match (a.as_variable(), b.as_variable()) {
        (Some(x), Some(y)) if x == y => true,
        (Some(x), _) => bind(x, b, s),
        (_, Some(y)) => bind(y, a, s),
        _ => match (&a, &b) {
            (AtomSpec::Node { .. }, AtomSpec::Node { .. }) => a == b,
            (
                AtomSpec::Link {
                    type_name: ta,
                    targets: xs,
                },
                AtomSpec::Link {
                    type_name: tb,
                    targets: ys,
                },
            ) => ta == tb && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| unify(x, y, s)),
            _ => false,
        },
    }
}

fn bind(v: Variable, value: AtomSpec, s: &mut Subst) -> bool {
    if value.variables().contains(&v) {
        return false;
    }
    s.insert(v, value);
    true
}

fn rename(spec: &AtomSpec, suffix: usize) -> AtomSpec {
    match spec {
        AtomSpec::Node { .. } => match spec.as_variable() {
            Some(v) => Variable {
                subgraph: v.subgraph,
                name: format!("{}#{suffix}", v.name),
            }
            .to_spec(),
            None => spec.clone(),
        },
        AtomSpec::Link { type_name, targets } => {
            AtomSpec::link(type_name.clone(), targets.iter().map(|t| rename(t, suffix)).collect())
        }
        AtomSpec::Existing(_) => spec.clone(),
    }
}

#[derive(Clone)]
enum Task {
    Prove(AtomSpec, usize),
    /// Fires once the premises pushed after it are proven.
    Conclude {
        rule: usize,
        premises: Vec<AtomSpec>,
        conclusion: AtomSpec,
        vars: Vec<(Variable, Variable)>,
    },
}

struct Search<'a> {
    snap: &'a Snapshot,
    rules: &'a [RewriteRule],
    fresh: usize,
    out: Vec<(Subst, Vec<TraceStep>)>,
}

impl Search<'_> {
    fn tv_of(&self, spec: &AtomSpec, steps: &[TraceStep]) -> TruthValue {
        let derived = steps
            .iter()
            .rev()
            .flat_map(|s| &s.derived)
            .find(|d| &d.spec == spec)
            .map(|d| d.tv.clone());
        derived.unwrap_or_else(|| {
            self.snap
                .lookup_spec(spec)
                .and_then(|id| self.snap.resolve(id).ok())
                .and_then(|a| a.tv.clone())
                .unwrap_or_else(TruthValue::certain)
        })
    }

    fn solve(&mut self, mut tasks: Vec<Task>, s: Subst, steps: Vec<TraceStep>) -> Result<()> {
        let Some(task) = tasks.pop() else {
            self.out.push((s, steps));
            return Ok(());
        };
        match task {
            Task::Conclude {
                rule,
                premises,
                conclusion,
                vars,
            } => {
                let conclusion = walk(&conclusion, &s);
                if !conclusion.is_ground() {
                    return Ok(());
                }
                let tvs: Vec<TruthValue> = premises.iter().map(|p| self.tv_of(&walk(p, &s), &steps)).collect();
                let r = &self.rules[rule];
                let tv = r.formula().apply(r.tv(), &tvs);
                // report bindings under the rule's own variable names, when they name stored atoms
                let bindings = vars
                    .iter()
                    .filter_map(|(orig, renamed)| {
                        let value = walk(&renamed.to_spec(), &s);
                        self.snap.lookup_spec(&value).map(|id| (orig.clone(), id))
                    })
                    .collect();
                let mut steps = steps;
                steps.push(TraceStep {
                    rule: r.atom(),
                    bindings,
                    derived: vec![Derived {
                        spec: conclusion,
                        tv,
                        id: None,
                    }],
                });
                self.solve(tasks, s, steps)
            }
            Task::Prove(goal, depth) => {
                let g = walk(&goal, &s);
                if g.is_ground() {
                    if self.snap.lookup_spec(&g).is_some() {
                        self.solve(tasks.clone(), s.clone(), steps.clone())?;
                    }
                } else {
                    for b in query(&Pattern::single(g.clone()), self.snap)? {
                        let mut s2 = s.clone();
                        let mut ok = true;
                        for (v, id) in b.iter() {
                            let value = self.snap.spec_of(id)?;
                            if !value.is_ground() {
                                ok = false;
                                break;
                            }
                            s2.insert(v.clone(), value);
                        }
                        if ok {
                            self.solve(tasks.clone(), s2, steps.clone())?;
                        }
                    }
                }
                if depth == 0 {
                    return Ok(());
                }
                for (ri, rule) in self.rules.iter().enumerate() {
                    self.fresh += 1;
                    let suffix = self.fresh;
                    let conclusion = rename(rule.conclusion(), suffix);
                    let mut s2 = s.clone();
                    if !unify(&conclusion, &g, &mut s2) {
                        continue;
                    }
                    let premises: Vec<AtomSpec> = rule.premises().iter().map(|p| rename(p, suffix)).collect();
                    let mut vars: Vec<(Variable, Variable)> = Vec::new();
                    for p in rule.premises() {
                        for v in p.variables() {
                            if !vars.iter().any(|(o, _)| o == &v) {
                                let renamed = rename(&v.to_spec(), suffix).as_variable().expect("still a variable");
                                vars.push((v, renamed));
                            }
                        }
                    }
                    let mut next = tasks.clone();
                    next.push(Task::Conclude {
                        rule: ri,
                        premises: premises.clone(),
                        conclusion,
                        vars,
                    });
                    // first premise on top of the stack
                    for p in premises.into_iter().rev() {
                        next.push(Task::Prove(p, depth - 1));
                    }
                    self.solve(next, s2, steps.clone())?;
                }
                Ok(())
            }
        }
    }
}

/// Proves the goal's clauses from stored atoms and rules, subgoaling through
/// at most `max_depth` nested rule applications. One proof per distinct
/// binding of the goal variables, keeping the shortest derivation; results
/// are ordered by bindings.
pub fn backward_chain(snap: &Snapshot, goal: &Pattern, rules: &[RewriteRule], max_depth: usize) -> Result<Vec<Proof>> {
    let clauses: Vec<AtomSpec> = goal
        .clauses()
        .iter()
        .map(|c| snap.expand(c))
        .collect::<Result<_, _>>()?;
    let mut search = Search {
        snap,
        rules,
        fresh: 0,
        out: Vec::new(),
    };
    let tasks = clauses.into_iter().rev().map(|c| Task::Prove(c, max_depth)).collect();
    search.solve(tasks, Subst::new(), Vec::new())?;

    let mut best: HashMap<Bindings, Vec<TraceStep>> = HashMap::new();
    'outer: for (s, steps) in search.out {
        let mut b = Bindings::new();
        for v in goal.variables() {
            match snap.lookup_spec(&walk(&v.to_spec(), &s)) {
                Some(id) => {
                    b.bind(v.clone(), id);
                }
                None => continue 'outer,
            }
        }
        match best.get(&b) {
            Some(existing) if existing.len() <= steps.len() => {}
            _ => {
                best.insert(b, steps);
            }
        }
    }
    let mut proofs: Vec<Proof> = best
        .into_iter()
        .map(|(bindings, trace)| Proof { bindings, trace })
        .collect();
    proofs.sort_by(|a, b| a.bindings.cmp(&b.bindings));
    Ok(proofs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::TvFormula;
    use crate::store::Store;

    fn concept(n: &str) -> AtomSpec {
        AtomSpec::node("Concept", n)
    }

    fn inh(a: AtomSpec, b: AtomSpec) -> AtomSpec {
        AtomSpec::link("Inheritance", vec![a, b])
    }

    fn setup() -> (Store, RewriteRule) {
        let store = Store::new();
        let rule = RewriteRule::store(
            &store,
            vec![
                inh(AtomSpec::var("$x"), AtomSpec::var("$y")),
                inh(AtomSpec::var("$y"), AtomSpec::var("$z")),
            ],
            inh(AtomSpec::var("$x"), AtomSpec::var("$z")),
            TruthValue::certain(),
            TvFormula::Product,
        )
        .unwrap();
        store
            .add(NewAtomExt::tv(inh(concept("cat"), concept("animal")), (9, 10), (8, 10)))
            .unwrap();
        store
            .add(NewAtomExt::tv(
                inh(concept("animal"), concept("organism")),
                (8, 10),
                (5, 10),
            ))
            .unwrap();
        (store, rule)
    }

    struct NewAtomExt;
    impl NewAtomExt {
        fn tv(spec: AtomSpec, s: (i64, i64), c: (i64, i64)) -> crate::store::NewAtom {
            crate::store::NewAtom::with_tv(spec, TruthValue::from_fractions(s, c))
        }
    }

    #[test]
    fn one_step_derivation() {
        let (store, rule) = setup();
        let snap = store.snapshot();
        let goal = Pattern::single(inh(concept("cat"), concept("organism")));
        let proofs = backward_chain(&snap, &goal, &[rule], 2).unwrap();
        assert_eq!(proofs.len(), 1);
        assert_eq!(proofs[0].trace.len(), 1);
        let d = &proofs[0].trace[0].derived[0];
        assert_eq!(d.spec, inh(concept("cat"), concept("organism")));
        assert_eq!(d.tv, TruthValue::from_fractions((72, 100), (4, 10)));
    }

    #[test]
    fn depth_zero_needs_a_stored_goal() {
        let (store, rule) = setup();
        let snap = store.snapshot();
        let derived = Pattern::single(inh(concept("cat"), concept("organism")));
        assert!(backward_chain(&snap, &derived, std::slice::from_ref(&rule), 0)
            .unwrap()
            .is_empty());
        let present = Pattern::single(inh(concept("cat"), concept("animal")));
        let proofs = backward_chain(&snap, &present, &[rule], 0).unwrap();
        assert_eq!(proofs.len(), 1);
        assert!(proofs[0].trace.is_empty());
    }

    #[test]
    fn variables_in_goals() {
        let (store, rule) = setup();
        let snap = store.snapshot();
        let goal = Pattern::single(inh(concept("cat"), AtomSpec::var("$what")));
        let proofs = backward_chain(&snap, &goal, &[rule], 1).unwrap();
        let found: Vec<String> = proofs.iter().map(|p| p.bindings.render(&snap)).collect();
        assert_eq!(
            found,
            vec![
                "$what=(Concept \"animal\")".to_string(),
                "$what=(Concept \"organism\")".to_string()
            ]
        );
    }

    #[test]
    fn unification_occurs_check() {
        let mut s = Subst::new();
        let x = AtomSpec::var("$x");
        assert!(!unify(&x, &inh(x.clone(), concept("a")), &mut s));
        let mut s = Subst::new();
        assert!(unify(
            &inh(x.clone(), AtomSpec::var("$y")),
            &inh(concept("a"), x.clone()),
            &mut s
        ));
        assert_eq!(walk(&AtomSpec::var("$y"), &s), concept("a"));
    }
}
