//! Static pattern matching over snapshots.
//!
//! Matching is split into small primitives: [`match_at`] checks one clause
//! anchored at one atom, [`candidate_roots`] proposes anchors from the type
//! index, and [`move_locus`] walks to a neighbouring atom. [`query`] composes
//! them into a conjunctive search; [`brute_force_query`] is the independent
//! enumeration oracle used to verify it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::store::{AtomId, AtomKey, AtomSpec, Snapshot, StoreError, Variable};

/// Default atom cap for [`brute_force_query`].
pub const BRUTE_FORCE_CAP: usize = 2_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("invalid step: {0}")]
    InvalidStep(String),
    #[error("snapshot holds {atoms} atoms, brute force is capped at {cap}")]
    CapExceeded { atoms: usize, cap: usize },
    #[error("a pattern needs at least one clause")]
    EmptyPattern,
}

pub type Result<T, E = PatternError> = std::result::Result<T, E>;

/// Consistent assignment of variables to stored atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bindings(BTreeMap<Variable, AtomId>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &Variable) -> Option<AtomId> {
        self.0.get(var).copied()
    }

    /// Binds `var`; returns false when it is already bound elsewhere.
    pub fn bind(&mut self, var: Variable, value: AtomId) -> bool {
        match self.0.get(&var) {
            Some(existing) => *existing == value,
            None => {
                self.0.insert(var, value);
                true
            }
        }
    }

    pub fn with(mut self, var: Variable, value: AtomId) -> Self {
        self.0.insert(var, value);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, AtomId)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, var: &Variable) -> bool {
        self.0.contains_key(var)
    }

    /// Keeps only the listed variables.
    pub fn restricted_to(&self, vars: &BTreeSet<Variable>) -> Bindings {
        Bindings(
            self.0
                .iter()
                .filter(|(k, _)| vars.contains(*k))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        )
    }

    /// Substitutes bound variables by `Existing` leaves; unbound ones stay.
    pub fn substitute(&self, spec: &AtomSpec) -> AtomSpec {
        match spec {
            AtomSpec::Node { .. } => match spec.as_variable().and_then(|v| self.get(&v)) {
                Some(id) => AtomSpec::Existing(id),
                None => spec.clone(),
            },
            AtomSpec::Link { type_name, targets } => {
                AtomSpec::link(type_name.clone(), targets.iter().map(|t| self.substitute(t)).collect())
            }
            AtomSpec::Existing(_) => spec.clone(),
        }
    }

    /// `$x=(Concept "cat") $y=...`, or `{}` when empty.
    pub fn render(&self, snap: &Snapshot) -> String {
        if self.is_empty() {
            return "{}".to_string();
        }
        self.iter()
            .map(|(v, id)| {
                let value = snap.render(id).unwrap_or_else(|_| id.to_string());
                format!("{v}={value}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl FromIterator<(Variable, AtomId)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (Variable, AtomId)>>(iter: I) -> Self {
        Bindings(iter.into_iter().collect())
    }
}

impl fmt::Display for Bindings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(v, id)| format!("{v}={id}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// A conjunction of clauses. Variables are the variable nodes occurring in the clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    clauses: Vec<AtomSpec>,
    variables: BTreeSet<Variable>,
}

impl Pattern {
    pub fn new(clauses: Vec<AtomSpec>) -> Result<Self> {
        if clauses.is_empty() {
            return Err(PatternError::EmptyPattern);
        }
        let mut variables = BTreeSet::new();
        for c in &clauses {
            c.collect_variables(&mut variables);
        }
        Ok(Self { clauses, variables })
    }

    pub fn single(clause: AtomSpec) -> Self {
        Self::new(vec![clause]).expect("one clause")
    }

    /// Builds a pattern from clause atoms stored in the metagraph.
    pub fn from_atoms(snap: &Snapshot, clauses: &[AtomId]) -> Result<Self> {
        Self::new(clauses.iter().map(|c| snap.spec_of(*c)).collect::<Result<_, _>>()?)
    }

    pub fn clauses(&self) -> &[AtomSpec] {
        &self.clauses
    }

    pub fn variables(&self) -> &BTreeSet<Variable> {
        &self.variables
    }

    /// The same pattern with its clauses reordered.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            clauses: order.iter().map(|&i| self.clauses[i].clone()).collect(),
            variables: self.variables.clone(),
        }
    }
}

/// Anchored structural match of one clause against one atom. No search.
pub fn match_at(clause: &AtomSpec, target: AtomId, seed: &Bindings, snap: &Snapshot) -> Result<Option<Bindings>> {
    snap.resolve(target)?;
    snap.stats().record_match_attempt();
    let mut b = seed.clone();
    Ok(unify_into(clause, target, &mut b, snap)?.then_some(b))
}

fn unify_into(spec: &AtomSpec, target: AtomId, b: &mut Bindings, snap: &Snapshot) -> Result<bool> {
    let atom = snap.resolve(target)?;
    Ok(match spec {
        // id leaves are concrete, even when they point at a variable node
        AtomSpec::Existing(id) => *id == target,
        AtomSpec::Node { type_name, name } => match spec.as_variable() {
            Some(v) => !atom.is_variable() && b.bind(v, target),
            None => matches!(&atom.key, AtomKey::Node { type_name: t, name: n } if t == type_name && n == name),
        },
        AtomSpec::Link { type_name, targets } => {
            let AtomKey::Link {
                type_name: t,
                targets: actual,
            } = &atom.key
            else {
                return Ok(false);
            };
            if t != type_name || actual.len() != targets.len() {
                return Ok(false);
            }
            for (s, a) in targets.iter().zip(actual) {
                if !unify_into(s, *a, b, snap)? {
                    return Ok(false);
                }
            }
            true
        }
    })
}

/// Index-driven anchors for a clause. Every true match of the clause root is
/// among them.
pub fn candidate_roots<'a>(clause: &AtomSpec, snap: &'a Snapshot) -> Box<dyn Iterator<Item = AtomId> + 'a> {
    if clause.is_ground() {
        return Box::new(snap.lookup_spec(clause).into_iter());
    }
    match clause {
        AtomSpec::Link { type_name, .. } => Box::new(snap.atoms_of_type(type_name)),
        _ => Box::new(snap.atoms().filter(|(_, a)| !a.is_variable()).map(|(id, _)| id)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    ToTarget(usize),
    ToIncoming(AtomId),
}

/// Position of a decomposed match: the current anchor plus the work still to do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchCursor {
    pub locus: AtomId,
    pub partial: Bindings,
    pub remaining: Vec<AtomSpec>,
}

impl MatchCursor {
    pub fn new(locus: AtomId) -> Self {
        Self {
            locus,
            partial: Bindings::new(),
            remaining: Vec::new(),
        }
    }
}

/// Moves the locus to an adjacent atom, carrying the partial state along.
pub fn move_locus(cursor: &MatchCursor, step: Step, snap: &Snapshot) -> Result<MatchCursor> {
    let atom = snap.resolve(cursor.locus)?;
    let locus = match step {
        Step::ToTarget(i) => *atom.targets().get(i).ok_or_else(|| {
            PatternError::InvalidStep(format!(
                "target {i} out of range for {} with {} target(s)",
                cursor.locus,
                atom.targets().len()
            ))
        })?,
        Step::ToIncoming(link) => {
            let ok = snap
                .resolve(link)
                .map(|l| l.targets().contains(&cursor.locus))
                .unwrap_or(false);
            if !ok {
                return Err(PatternError::InvalidStep(format!(
                    "{link} is not incoming to {}",
                    cursor.locus
                )));
            }
            link
        }
    };
    Ok(MatchCursor {
        locus,
        partial: cursor.partial.clone(),
        remaining: cursor.remaining.clone(),
    })
}

enum Plan {
    /// The substituted clause cannot match anything.
    Empty,
    /// Exactly this atom.
    Exact(AtomId),
    /// Links of the clause's type that contain `anchor` at `position`.
    Incoming {
        anchor: AtomId,
        position: usize,
        cost: usize,
    },
    /// Scan the type index.
    TypeScan(usize),
    /// Every non-variable atom.
    All(usize),
}

impl Plan {
    fn cost(&self) -> usize {
        match self {
            Plan::Empty => 0,
            Plan::Exact(_) => 1,
            Plan::Incoming { cost, .. } | Plan::TypeScan(cost) | Plan::All(cost) => *cost,
        }
    }
}

fn plan(clause: &AtomSpec, b: &Bindings, snap: &Snapshot) -> Plan {
    let sub = b.substitute(clause);
    if sub.is_ground() {
        return match snap.lookup_spec(&sub) {
            Some(id) => Plan::Exact(id),
            None => Plan::Empty,
        };
    }
    match &sub {
        AtomSpec::Link { type_name, targets } => {
            let mut best: Option<Plan> = None;
            for (i, t) in targets.iter().enumerate() {
                if !t.is_ground() {
                    continue;
                }
                let Some(anchor) = snap.lookup_spec(t) else {
                    return Plan::Empty;
                };
                let cost = snap.incoming_count(anchor);
                if best.as_ref().is_none_or(|p| cost < p.cost()) {
                    best = Some(Plan::Incoming {
                        anchor,
                        position: i,
                        cost,
                    });
                }
            }
            let scan = Plan::TypeScan(snap.type_count(type_name));
            match best {
                Some(p) if p.cost() <= scan.cost() => p,
                _ => scan,
            }
        }
        _ => Plan::All(snap.len()),
    }
}

fn candidates(plan: &Plan, clause: &AtomSpec, snap: &Snapshot) -> Result<Vec<AtomId>> {
    Ok(match plan {
        Plan::Empty => Vec::new(),
        Plan::Exact(id) => vec![*id],
        Plan::Incoming { anchor, position, .. } => {
            let type_name = clause.type_name().unwrap_or_default();
            let here = MatchCursor::new(*anchor);
            let mut out = Vec::new();
            for link in snap.incoming(*anchor)? {
                let atom = snap.resolve(link)?;
                if atom.type_name() != type_name {
                    continue;
                }
                let at_link = move_locus(&here, Step::ToIncoming(link), snap)?;
                match move_locus(&at_link, Step::ToTarget(*position), snap) {
                    Ok(back) if back.locus == *anchor => out.push(link),
                    _ => {}
                }
            }
            out
        }
        Plan::TypeScan(..) | Plan::All(_) => candidate_roots(clause, snap).collect(),
    })
}

fn search(remaining: &[&AtomSpec], b: Bindings, snap: &Snapshot, out: &mut BTreeSet<Bindings>) -> Result<()> {
    if remaining.is_empty() {
        out.insert(b);
        return Ok(());
    }
    let (pick, best) = remaining
        .iter()
        .enumerate()
        .map(|(i, c)| (i, plan(c, &b, snap)))
        .min_by_key(|(_, p)| p.cost())
        .expect("nonempty");
    let clause = remaining[pick];
    let rest: Vec<&AtomSpec> = remaining
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != pick)
        .map(|(_, c)| *c)
        .collect();
    for cand in candidates(&best, clause, snap)? {
        if let Some(next) = match_at(clause, cand, &b, snap)? {
            search(&rest, next, snap, out)?;
        }
    }
    Ok(())
}

/// Every binding, extending `seed`, under which all clauses match.
pub fn query_seeded(clauses: &[AtomSpec], seed: &Bindings, snap: &Snapshot) -> Result<BTreeSet<Bindings>> {
    let refs: Vec<&AtomSpec> = clauses.iter().collect();
    let mut out = BTreeSet::new();
    search(&refs, seed.clone(), snap, &mut out)?;
    Ok(out)
}

/// All complete, consistent bindings of the pattern's variables.
pub fn query(pattern: &Pattern, snap: &Snapshot) -> Result<BTreeSet<Bindings>> {
    query_seeded(pattern.clauses(), &Bindings::new(), snap)
}

/// [`query`] with the first clause's candidates split across worker threads.
/// The result set does not depend on `workers`.
pub fn query_parallel(pattern: &Pattern, snap: &Snapshot, workers: usize) -> Result<BTreeSet<Bindings>> {
    let workers = workers.max(1);
    if workers == 1 {
        return query(pattern, snap);
    }
    let clauses: Vec<&AtomSpec> = pattern.clauses().iter().collect();
    let empty = Bindings::new();
    let (pick, best) = clauses
        .iter()
        .enumerate()
        .map(|(i, c)| (i, plan(c, &empty, snap)))
        .min_by_key(|(_, p)| p.cost())
        .expect("patterns are nonempty");
    let first = clauses[pick];
    let rest: Vec<&AtomSpec> = clauses
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != pick)
        .map(|(_, c)| *c)
        .collect();
    let cands = candidates(&best, first, snap)?;
    let chunk = cands.len().div_ceil(workers).max(1);
    let parts: Vec<Result<BTreeSet<Bindings>>> = std::thread::scope(|s| {
        let handles: Vec<_> = cands
            .chunks(chunk)
            .map(|part| {
                let rest = &rest;
                s.spawn(move || {
                    let mut out = BTreeSet::new();
                    for &cand in part {
                        if let Some(b) = match_at(first, cand, &Bindings::new(), snap)? {
                            search(rest, b, snap, &mut out)?;
                        }
                    }
                    Ok(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("query worker panicked"))
            .collect()
    });
    let mut out = BTreeSet::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Ground-truth semantics: enumerate every assignment of the pattern's
/// variables to non-variable atoms, substitute, and keep the assignments
/// under which every clause equals some stored atom.
///
/// A clause is tested as soon as its last variable is assigned, which prunes
/// the enumeration without changing its result.
pub fn brute_force_query(pattern: &Pattern, snap: &Snapshot, cap: usize) -> Result<BTreeSet<Bindings>> {
    if snap.len() > cap {
        return Err(PatternError::CapExceeded { atoms: snap.len(), cap });
    }
    let domain: Vec<AtomId> = snap
        .atoms()
        .filter(|(_, a)| !a.is_variable())
        .map(|(id, _)| id)
        .collect();
    let vars: Vec<Variable> = pattern.variables().iter().cloned().collect();
    // clause i is checked once variable number check_at[i] is assigned
    let mut due: Vec<Vec<&AtomSpec>> = vec![Vec::new(); vars.len() + 1];
    for c in pattern.clauses() {
        let last = c
            .variables()
            .iter()
            .map(|v| vars.iter().position(|x| x == v).expect("pattern variable") + 1)
            .max()
            .unwrap_or(0);
        due[last].push(c);
    }
    let mut out = BTreeSet::new();
    let mut assignment: Vec<AtomId> = Vec::with_capacity(vars.len());
    enumerate(&vars, &domain, &due, &mut assignment, snap, &mut out);
    Ok(out)
}

fn enumerate(
    vars: &[Variable],
    domain: &[AtomId],
    due: &[Vec<&AtomSpec>],
    assignment: &mut Vec<AtomId>,
    snap: &Snapshot,
    out: &mut BTreeSet<Bindings>,
) {
    let depth = assignment.len();
    let holds = |c: &AtomSpec| ground_lookup(c, vars, assignment, snap).is_some();
    if !due[depth].iter().all(|c| holds(c)) {
        return;
    }
    if depth == vars.len() {
        out.insert(vars.iter().cloned().zip(assignment.iter().copied()).collect());
        return;
    }
    for &value in domain {
        assignment.push(value);
        enumerate(vars, domain, due, assignment, snap, out);
        assignment.pop();
    }
}

/// Substitutes the (partial) assignment and looks the result up by content.
fn ground_lookup(spec: &AtomSpec, vars: &[Variable], assignment: &[AtomId], snap: &Snapshot) -> Option<AtomId> {
    match spec {
        AtomSpec::Existing(id) => Some(*id),
        AtomSpec::Node { type_name, name } => match spec.as_variable() {
            Some(v) => {
                let i = vars.iter().position(|x| *x == v)?;
                assignment.get(i).copied()
            }
            None => snap.lookup(&AtomKey::Node {
                type_name: type_name.clone(),
                name: name.clone(),
            }),
        },
        AtomSpec::Link { type_name, targets } => {
            let targets = targets
                .iter()
                .map(|t| ground_lookup(t, vars, assignment, snap))
                .collect::<Option<Vec<_>>>()?;
            snap.lookup(&AtomKey::Link {
                type_name: type_name.clone(),
                targets,
            })
        }
    }
}
