use std::collections::{BTreeSet, HashSet, VecDeque};

use super::{apply_rule_at, Application, ChainOutcome, ChainTrace, Derived, Result, RewriteRule, TraceStep};
use crate::store::{AtomId, Committed, NewAtom, Snapshot, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Policy {
    /// Agenda of (rule, atom) pairs; atoms that change are re-enqueued. One pop per step.
    #[default]
    Fifo,
    /// Semi-naive rounds: every rule at every atom touched by the previous
    /// round, all results committed as one batch. One round per step.
    ExhaustiveToFixpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForwardConfig {
    pub max_steps: usize,
    pub policy: Policy,
    pub workers: usize,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self {
            max_steps: 1000,
            policy: Policy::Fifo,
            workers: 1,
        }
    }
}

pub fn forward_chain(store: &Store, rules: &[RewriteRule], cfg: ForwardConfig) -> Result<ChainTrace> {
    let initial_version = store.version();
    let mut trace = ChainTrace {
        steps: Vec::new(),
        initial_version,
        final_version: initial_version,
        steps_taken: 0,
        outcome: ChainOutcome::Fixpoint,
    };
    match cfg.policy {
        Policy::Fifo => fifo(store, rules, cfg.max_steps, &mut trace)?,
        Policy::ExhaustiveToFixpoint => exhaustive(store, rules, cfg, &mut trace)?,
    }
    trace.final_version = store.version();
    Ok(trace)
}

/// Commits `apps` in order on top of the current state and records the ones
/// that changed something. Retries when a concurrent writer conflicts; these
/// batches have no removals, so a retry can only fail on malformed input.
fn commit_apps(
    store: &Store,
    rules: &[RewriteRule],
    apps: &[(usize, Application)],
    trace: &mut ChainTrace,
) -> Result<Committed> {
    let additions: Vec<NewAtom> = apps
        .iter()
        .map(|(_, a)| NewAtom::with_tv(a.conclusion.clone(), a.tv.clone()))
        .collect();
    let snap = store.snapshot();
    let committed = loop {
        match store.commit(&store.snapshot(), &additions, &[]) {
            Ok(c) => break c,
            Err(e) if e.is_retryable() => continue,
            Err(e) => return Err(e.into()),
        }
    };
    let changed: HashSet<AtomId> = committed.created.iter().chain(&committed.revised).copied().collect();
    for ((rule, app), id) in apps.iter().zip(&committed.ids) {
        if !changed.contains(id) {
            continue;
        }
        trace.steps.push(TraceStep {
            rule: rules[*rule].atom(),
            bindings: app.bindings.clone(),
            derived: vec![Derived {
                spec: snap.expand(&app.conclusion)?,
                tv: app.tv.clone(),
                id: Some(*id),
            }],
        });
    }
    Ok(committed)
}

fn fifo(store: &Store, rules: &[RewriteRule], max_steps: usize, trace: &mut ChainTrace) -> Result<()> {
    let mut agenda: VecDeque<(usize, AtomId)> = VecDeque::new();
    let snap = store.snapshot();
    for id in snap.ids() {
        for r in 0..rules.len() {
            agenda.push_back((r, id));
        }
    }
    while let Some(&(r, locus)) = agenda.front() {
        if trace.steps_taken == max_steps {
            trace.outcome = ChainOutcome::NoProgressBudget;
            return Ok(());
        }
        agenda.pop_front();
        trace.steps_taken += 1;
        let snap = store.snapshot();
        if !snap.contains(locus) {
            continue;
        }
        let apps: Vec<(usize, Application)> = apply_rule_at(&rules[r], locus, &snap)?
            .into_iter()
            .map(|a| (r, a))
            .collect();
        if apps.is_empty() {
            continue;
        }
        let committed = commit_apps(store, rules, &apps, trace)?;
        // a revised atom can feed new conclusions too
        let touched: BTreeSet<AtomId> = committed.created.iter().chain(&committed.revised).copied().collect();
        for id in touched {
            for r in 0..rules.len() {
                agenda.push_back((r, id));
            }
        }
    }
    trace.outcome = ChainOutcome::Fixpoint;
    Ok(())
}

fn round(snap: &Snapshot, rules: &[RewriteRule], loci: &[AtomId], workers: usize) -> Result<Vec<(usize, Application)>> {
    let pairs: Vec<(usize, AtomId)> = (0..rules.len())
        .flat_map(|r| loci.iter().map(move |&l| (r, l)))
        .collect();
    let run = |part: &[(usize, AtomId)]| -> Result<Vec<(usize, Application)>> {
        let mut out = Vec::new();
        for &(r, locus) in part {
            out.extend(apply_rule_at(&rules[r], locus, snap)?.into_iter().map(|a| (r, a)));
        }
        Ok(out)
    };
    let mut apps = if workers <= 1 || pairs.len() < 2 {
        run(&pairs)?
    } else {
        let chunk = pairs.len().div_ceil(workers);
        let parts: Vec<Result<Vec<_>>> = std::thread::scope(|s| {
            let handles: Vec<_> = pairs.chunks(chunk).map(|part| s.spawn(move || run(part))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("chaining worker panicked"))
                .collect()
        });
        let mut all = Vec::new();
        for p in parts {
            all.extend(p?);
        }
        all
    };
    // the same application is found from every premise it touches
    apps.sort_by(|(ra, a), (rb, b)| (ra, &a.bindings).cmp(&(rb, &b.bindings)));
    apps.dedup_by(|(ra, a), (rb, b)| ra == rb && a.bindings == b.bindings);
    Ok(apps)
}

fn exhaustive(store: &Store, rules: &[RewriteRule], cfg: ForwardConfig, trace: &mut ChainTrace) -> Result<()> {
    let mut loci: Vec<AtomId> = store.snapshot().ids().collect();
    loop {
        if loci.is_empty() || rules.is_empty() {
            trace.outcome = ChainOutcome::Fixpoint;
            return Ok(());
        }
        if trace.steps_taken == cfg.max_steps {
            trace.outcome = ChainOutcome::NoProgressBudget;
            return Ok(());
        }
        trace.steps_taken += 1;
        let snap = store.snapshot();
        let apps = round(&snap, rules, &loci, cfg.workers)?;
        if apps.is_empty() {
            loci.clear();
            continue;
        }
        let committed = commit_apps(store, rules, &apps, trace)?;
        let next: BTreeSet<AtomId> = committed.created.iter().chain(&committed.revised).copied().collect();
        loci = next.into_iter().collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::TvFormula;
    use crate::store::AtomSpec;
    use crate::truth::TruthValue;

    fn concept(n: &str) -> AtomSpec {
        AtomSpec::node("Concept", n)
    }

    fn inh(a: AtomSpec, b: AtomSpec) -> AtomSpec {
        AtomSpec::link("Inheritance", vec![a, b])
    }

    fn chain_store(names: &[&str]) -> (Store, RewriteRule) {
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
        for w in names.windows(2) {
            store.add(inh(concept(w[0]), concept(w[1])).into()).unwrap();
        }
        (store, rule)
    }

    fn cfg(policy: Policy, workers: usize) -> ForwardConfig {
        ForwardConfig {
            max_steps: 10_000,
            policy,
            workers,
        }
    }

    #[test]
    fn transitive_closure_both_policies() {
        for policy in [Policy::Fifo, Policy::ExhaustiveToFixpoint] {
            let (store, rule) = chain_store(&["cat", "animal", "organism", "living"]);
            let before = store.snapshot().type_count("Inheritance");
            let trace = forward_chain(&store, &[rule], cfg(policy, 1)).unwrap();
            assert_eq!(trace.outcome, ChainOutcome::Fixpoint);
            let snap = store.snapshot();
            assert_eq!(snap.type_count("Inheritance") - before, 3, "{policy:?}");
            for (a, b) in [("cat", "organism"), ("animal", "living"), ("cat", "living")] {
                assert!(snap.lookup_spec(&inh(concept(a), concept(b))).is_some());
            }
        }
    }

    #[test]
    fn zero_budget_changes_nothing() {
        let (store, rule) = chain_store(&["a", "b", "c"]);
        let before = store.snapshot().dump();
        let trace = forward_chain(
            &store,
            &[rule],
            ForwardConfig {
                max_steps: 0,
                policy: Policy::ExhaustiveToFixpoint,
                workers: 1,
            },
        )
        .unwrap();
        assert!(trace.steps.is_empty());
        assert_eq!(trace.outcome, ChainOutcome::NoProgressBudget);
        assert_eq!(store.snapshot().dump(), before);
    }

    #[test]
    fn worker_count_does_not_change_the_result() {
        let names: Vec<String> = (0..12).map(|i| format!("n{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut dumps = Vec::new();
        let mut traces = Vec::new();
        for workers in [1, 2, 4, 8] {
            let (store, rule) = chain_store(&refs);
            let t = forward_chain(&store, &[rule], cfg(Policy::ExhaustiveToFixpoint, workers)).unwrap();
            traces.push(t.steps);
            dumps.push(store.snapshot().dump());
        }
        assert!(dumps.windows(2).all(|w| w[0] == w[1]));
        assert!(traces.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn trace_replays_to_the_same_dump() {
        for policy in [Policy::Fifo, Policy::ExhaustiveToFixpoint] {
            let (store, rule) = chain_store(&["a", "b", "c", "d", "e"]);
            let initial = store.snapshot();
            let trace = forward_chain(&store, &[rule], cfg(policy, 2)).unwrap();
            let replayed = trace.replay(&initial).unwrap();
            assert_eq!(replayed.snapshot().dump(), store.snapshot().dump());
        }
    }
}
