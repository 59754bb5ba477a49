use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::{One, Zero};
use rand::seq::index::sample;
use rand::Rng;

use super::gen::{
    corpus_signature, gen_dag, gen_linear_identity, gen_linear_violation, gen_pattern, gen_store, gen_term,
    gen_typed_term, typed_links,
};
use super::{CaseResult, GeneratorConfig, Report, Status, Suite, SuiteConfig, SuiteFailure};
use crate::lambda::{
    app, apps, cnst, declare_const, decode_term, encode_term, eval_distribution, eval_distribution_dfs, lam, pi,
    typecheck, typecheck_against, var, Distribution, IllReason, LambdaPlugin, Mult, Term,
};
use crate::pattern::{brute_force_query, query, query_parallel, Pattern, BRUTE_FORCE_CAP};
use crate::rewrite::{backward_chain, forward_chain, ChainOutcome, ForwardConfig, Policy, RewriteRule, TvFormula};
use crate::store::{AtomId, AtomSpec, NewAtom, Snapshot, Store};
use crate::truth::{ratio, TruthValue};
use crate::typesys::{TypeRegistry, TypeSystemId, TypeVerdict};

pub const BENCH_ATOMS: usize = 100_000;
pub const BENCH_CANDIDATES: usize = 50;

const ORACLE_STREAM: u64 = 6;
const GRADUAL_STREAM: u64 = 7;
const BENCH_STREAM: u64 = 8;

type CaseOutcome = Result<Vec<String>, String>;

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<Report, SuiteFailure> {
    let n = cfg.cases.max(1);
    let threads = cfg.workers.clamp(1, n);
    let case = |i: usize| {
        let mut c = *cfg;
        c.generator.seed = cfg.generator.seed.wrapping_add(i as u64);
        run_case(suite, &c)
    };
    // case i goes to thread i % threads; results are put back in seed order
    let mut slots: Vec<Option<CaseResult>> = vec![None; n];
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| s.spawn(move || (t..n).step_by(threads).map(|i| (i, case(i))).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("suite worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    let cases = slots.into_iter().map(|r| r.expect("every case ran")).collect();
    let report = Report { suite, cases };
    let first = report.cases.iter().find_map(|c| match &c.status {
        Status::Fail(why) => Some((c.seed, why.clone())),
        Status::Pass => None,
    });
    match first {
        Some((seed, message)) => Err(SuiteFailure {
            suite,
            seed,
            message,
            report,
        }),
        None => Ok(report),
    }
}

/// One case, fully determined by `cfg.generator.seed`.
pub fn run_case(suite: Suite, cfg: &SuiteConfig) -> CaseResult {
    let outcome = match suite {
        Suite::Oracle => oracle_case(cfg),
        Suite::Chaining => chaining_case(cfg),
        Suite::Lambda => lambda_case(cfg),
        Suite::Bench => bench_case(cfg),
    };
    let (status, notes) = match outcome {
        Ok(notes) => (Status::Pass, notes),
        Err(why) => (Status::Fail(why), Vec::new()),
    };
    CaseResult {
        seed: cfg.generator.seed,
        status,
        notes,
    }
}

fn show_pattern(p: &Pattern, snap: &Snapshot) -> String {
    p.clauses()
        .iter()
        .map(|c| snap.render_spec(c).unwrap_or_else(|_| format!("{c:?}")))
        .collect::<Vec<_>>()
        .join(" ")
}

fn oracle_case(cfg: &SuiteConfig) -> CaseOutcome {
    let g = cfg.generator;
    let mut rng = g.rng(ORACLE_STREAM);
    let sized = GeneratorConfig {
        atom_budget: rng.gen_range(1..=g.atom_budget.max(1)),
        variable_budget: rng.gen_range(0..=g.variable_budget),
        ..g
    };
    let store = gen_store(&sized);
    let snap = store.snapshot();
    let pattern = gen_pattern(&sized, &snap);
    let expected = brute_force_query(&pattern, &snap, BRUTE_FORCE_CAP).map_err(|e| e.to_string())?;
    let reversed: Vec<usize> = (0..pattern.clauses().len()).rev().collect();
    let attempts = [
        ("query", query(&pattern, &snap)),
        ("query_parallel", query_parallel(&pattern, &snap, cfg.workers.max(1))),
        ("reversed clauses", query(&pattern.permuted(&reversed), &snap)),
    ];
    for (what, got) in attempts {
        let got = got.map_err(|e| e.to_string())?;
        if got != expected {
            return Err(format!(
                "{what} found {} bindings, oracle {} on {} atoms; pattern {}",
                got.len(),
                expected.len(),
                snap.len(),
                show_pattern(&pattern, &snap)
            ));
        }
    }
    Ok(Vec::new())
}

/// `(Inheritance $x $y) (Inheritance $y $z) => (Inheritance $x $z)`.
pub fn deduction_rule(store: &Store) -> RewriteRule {
    let inh = |a: &str, b: &str| AtomSpec::link("Inheritance", vec![AtomSpec::var(a), AtomSpec::var(b)]);
    RewriteRule::store(
        store,
        vec![inh("$x", "$y"), inh("$y", "$z")],
        inh("$x", "$z"),
        TruthValue::certain(),
        TvFormula::Product,
    )
    .expect("deduction rule is well formed")
}

/// Reachability by depth-first search from every node.
pub fn transitive_closure(n: usize, edges: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in edges {
        succ[a].push(b);
    }
    let mut out = BTreeSet::new();
    for start in 0..n {
        let mut seen = vec![false; n];
        let mut stack = succ[start].clone();
        while let Some(v) = stack.pop() {
            if !std::mem::replace(&mut seen[v], true) {
                out.insert((start, v));
                stack.extend(&succ[v]);
            }
        }
    }
    out
}

fn dag_index(snap: &Snapshot, id: AtomId) -> Option<usize> {
    let a = snap.resolve(id).ok()?;
    if a.type_name() != "Concept" {
        return None;
    }
    a.name().strip_prefix('c')?.parse().ok()
}

fn inheritance_pairs(snap: &Snapshot) -> BTreeSet<(usize, usize)> {
    let links: Vec<AtomId> = snap.atoms_of_type("Inheritance").collect();
    links
        .into_iter()
        .filter_map(|l| match snap.resolve(l).ok()?.targets() {
            [a, b] => Some((dag_index(snap, *a)?, dag_index(snap, *b)?)),
            _ => None,
        })
        .collect()
}

fn exhaustive(workers: usize, max_steps: usize) -> ForwardConfig {
    ForwardConfig {
        max_steps,
        policy: Policy::ExhaustiveToFixpoint,
        workers,
    }
}

const AGREEMENT_DEPTHS: usize = 3;

fn chaining_case(cfg: &SuiteConfig) -> CaseOutcome {
    let g = GeneratorConfig {
        atom_budget: cfg.generator.atom_budget.min(100),
        ..cfg.generator
    };
    let (store, edges) = gen_dag(&g);
    let rule = deduction_rule(&store);
    let initial = store.snapshot();
    let n = initial.type_count("Concept");
    let closure = transitive_closure(n, &edges);

    let mut dumps = BTreeMap::new();
    let mut worker_counts: BTreeSet<usize> = [1, 2, 4, 8].into();
    worker_counts.insert(cfg.workers.max(1));
    for w in worker_counts {
        let s = Store::from_snapshot(&initial);
        let trace = forward_chain(&s, std::slice::from_ref(&rule), exhaustive(w, cfg.max_steps.max(64)))
            .map_err(|e| e.to_string())?;
        if trace.outcome != ChainOutcome::Fixpoint {
            return Err(format!("workers={w}: no fixpoint within the budget"));
        }
        let got = inheritance_pairs(&s.snapshot());
        if got != closure {
            return Err(format!(
                "workers={w}: forward chaining derived {} pairs, closure has {}",
                got.len(),
                closure.len()
            ));
        }
        dumps.insert(w, s.snapshot().dump());
    }
    if dumps.values().collect::<BTreeSet<_>>().len() != 1 {
        return Err(format!(
            "dumps differ across worker counts {:?}",
            dumps.keys().collect::<Vec<_>>()
        ));
    }

    let goal = Pattern::single(AtomSpec::link(
        "Inheritance",
        vec![AtomSpec::var("$a"), AtomSpec::var("$b")],
    ));
    for depth in 0..=AGREEMENT_DEPTHS {
        let s = Store::from_snapshot(&initial);
        forward_chain(&s, std::slice::from_ref(&rule), exhaustive(1, depth)).map_err(|e| e.to_string())?;
        let forward = inheritance_pairs(&s.snapshot());
        let proofs = backward_chain(&initial, &goal, std::slice::from_ref(&rule), depth).map_err(|e| e.to_string())?;
        let backward: BTreeSet<(usize, usize)> = proofs
            .iter()
            .filter_map(|p| {
                let a = p.bindings.iter().find(|(v, _)| v.name == "$a")?.1;
                let b = p.bindings.iter().find(|(v, _)| v.name == "$b")?.1;
                Some((dag_index(&initial, a)?, dag_index(&initial, b)?))
            })
            .collect();
        if forward != backward {
            return Err(format!(
                "depth {depth}: forward has {} pairs, backward {}",
                forward.len(),
                backward.len()
            ));
        }
    }

    interleavings(&initial, &edges).map(|()| Vec::new())
}

/// Two disjoint batches give the same store whichever commits first, also
/// when committed from two threads at once.
fn interleavings(initial: &Snapshot, edges: &[(usize, usize)]) -> Result<(), String> {
    let nodes: Vec<AtomId> = initial.atoms_of_type("Concept").collect();
    let edge_atoms = |part: &[(usize, usize)], tag: &str| -> Vec<NewAtom> {
        part.iter()
            .map(|&(a, b)| {
                NewAtom::new(AtomSpec::link(
                    "Similarity",
                    vec![
                        super::gen::dag_node(a),
                        super::gen::dag_node(b),
                        AtomSpec::node("Concept", tag),
                    ],
                ))
            })
            .collect()
    };
    let half = edges.len() / 2;
    let a = edge_atoms(&edges[..half], "left");
    let b = edge_atoms(&edges[half..], "right");
    let base = Store::new();
    for id in nodes {
        base.add(NewAtom::new(initial.spec_of(id).map_err(|e| e.to_string())?))
            .map_err(|e| e.to_string())?;
    }
    let start = base.snapshot();
    let run = |first: &[NewAtom], second: &[NewAtom]| -> Result<String, String> {
        let s = Store::from_snapshot(&start);
        s.commit(&start, first, &[]).map_err(|e| e.to_string())?;
        s.commit(&start, second, &[]).map_err(|e| e.to_string())?;
        Ok(s.snapshot().dump())
    };
    let ab = run(&a, &b)?;
    let ba = run(&b, &a)?;
    let concurrent = {
        let s = Arc::new(Store::from_snapshot(&start));
        std::thread::scope(|scope| {
            for batch in [&a, &b] {
                let s = s.clone();
                let start = &start;
                scope.spawn(move || s.commit(start, batch, &[]).map(|_| ()));
            }
        });
        s.snapshot().dump()
    };
    if ab != ba || ab != concurrent {
        return Err("disjoint batches produced different stores in different orders".into());
    }
    Ok(())
}

/// Exact distribution of `(app (lam (x many) (app pair x x)) (choice 1/2 a b))`.
pub fn cbv_discrimination() -> Distribution {
    let dup = lam("x", Mult::Many, None, apps(cnst("pair"), [var("x"), var("x")]));
    let t = app(dup, Term::Choice(ratio(1, 2), Box::new(cnst("a")), Box::new(cnst("b"))));
    eval_distribution(&t, 100)
}

/// Checker steps allowed for a term of this size.
pub fn typecheck_step_bound(t: &Term) -> usize {
    let n = t.size();
    8 * n * n + 64
}

fn lambda_case(cfg: &SuiteConfig) -> CaseOutcome {
    let g = cfg.generator;
    let t = gen_term(&g);
    if !t.is_closed() {
        return Err(format!("generated term `{t}` is open"));
    }
    let store = Store::new();
    let id = encode_term(&store, &t).map_err(|e| e.to_string())?;
    let back = decode_term(&store.snapshot(), id).map_err(|e| e.to_string())?;
    if back != t {
        return Err(format!("encode/decode changed `{t}` into `{back}`"));
    }

    let sig = corpus_signature();
    let steps = match typecheck(&sig, &t) {
        Ok(ty) => ty.steps,
        Err(ill) => ill.steps,
    };
    if steps > typecheck_step_bound(&t) {
        return Err(format!("typechecking `{t}` took {steps} steps"));
    }

    let bfs = eval_distribution(&t, cfg.max_steps);
    let dfs = eval_distribution_dfs(&t, cfg.max_steps);
    if bfs != dfs {
        return Err(format!("expansion orders disagree on `{t}`: {bfs} vs {dfs}"));
    }
    if !bfs.total().is_one() {
        return Err(format!("mass of `{t}` is {}", bfs.total()));
    }

    let cbv = cbv_discrimination();
    let half = ratio(1, 2);
    let pair = |x: &str, y: &str| apps(cnst("pair"), [cnst(x), cnst(y)]);
    if cbv.get(&pair("a", "a")) != half || cbv.get(&pair("b", "b")) != half || !cbv.get(&pair("a", "b")).is_zero() {
        return Err(format!("call-by-value discrimination gave {cbv}"));
    }

    let (bad, bad_ty) = gen_linear_violation(&g);
    match typecheck_against(&sig, &bad, &bad_ty) {
        Err(ill) if ill.reason == IllReason::LinearityViolation => {}
        other => return Err(format!("`{bad}` : `{bad_ty}` should violate linearity, got {other:?}")),
    }
    let (good, good_ty) = gen_linear_identity(&g);
    if let Err(ill) = typecheck_against(&sig, &good, &good_ty) {
        return Err(format!("`{good}` : `{good_ty}` rejected: {ill}"));
    }

    let case = gen_gradual_case(&g);
    let violations = gradual_violations(&case);
    if let Some(v) = violations.first() {
        return Err(format!("gradual guarantee: {v}"));
    }
    Ok(Vec::new())
}

/// A store of lambda constants and annotated terms, checked under the lambda system.
pub struct GradualCase {
    pub store: Store,
    pub types: TypeRegistry,
    pub system: TypeSystemId,
}

/// Declares a random subset of [`corpus_signature`] (at most one annotation
/// per constant) and annotates a few generated terms, some deliberately
/// with a wrong type.
pub fn gen_gradual_case(cfg: &GeneratorConfig) -> GradualCase {
    let mut rng = cfg.rng(GRADUAL_STREAM);
    let store = Store::new();
    let mut types = TypeRegistry::new();
    let system = types.register(&store, Arc::new(LambdaPlugin)).expect("fresh registry");
    for (name, ty) in corpus_signature().iter() {
        if rng.gen_bool(0.8) {
            declare_const(&store, &types, name, ty).expect("lambda system registered");
        }
    }
    let b = || cnst("Bool");
    let menu = [
        b(),
        cnst("BPair"),
        Term::Star,
        pi("x", Mult::One, b(), b()),
        pi("x", Mult::Many, b(), b()),
        pi("x", Mult::Zero, b(), b()),
    ];
    let n_terms = rng.gen_range(2..=6);
    for _ in 0..n_terms {
        let ty = menu[rng.gen_range(0..menu.len())].clone();
        let Some(t) = gen_typed_term(&mut rng, &ty, cfg.term_depth.min(3)) else {
            continue;
        };
        // a bare constant's annotations are its signature entry; a second one
        // would make it dynamic and stripping it would tighten the system
        if matches!(t, Term::Const(_)) {
            continue;
        }
        let term = encode_term(&store, &t).expect("encodable");
        let annotate = |ty: &Term| {
            let ty = encode_term(&store, ty).expect("encodable");
            types.annotate(&store, term, system, ty).expect("registered system");
        };
        if rng.gen_bool(0.2) {
            annotate(&menu[rng.gen_range(0..menu.len())]);
        } else {
            annotate(&ty);
        }
        if rng.gen_bool(0.15) {
            annotate(&menu[rng.gen_range(0..menu.len())]);
        }
    }
    GradualCase { store, types, system }
}

fn verdicts(case: &GradualCase, snap: &Snapshot) -> BTreeMap<AtomId, TypeVerdict> {
    typed_links(snap)
        .into_iter()
        .filter_map(|l| snap.resolve(l).ok()?.targets().first().copied())
        .map(|subject| {
            let v = case
                .types
                .check_atom(subject, case.system, snap)
                .unwrap_or(TypeVerdict::Unknown);
            (subject, v)
        })
        .collect()
}

/// Atoms whose verdict goes from accept to reject when some other atom's
/// annotation is removed. Empty when the gradual guarantee holds.
pub fn gradual_violations(case: &GradualCase) -> Vec<String> {
    let snap = case.store.snapshot();
    let before = verdicts(case, &snap);
    let mut out = Vec::new();
    for link in typed_links(&snap) {
        let stripped = snap.resolve(link).ok().and_then(|a| a.targets().first().copied());
        let copy = Store::from_snapshot(&snap);
        if copy.remove(link).is_err() {
            continue;
        }
        let after = verdicts(case, &copy.snapshot());
        for (subject, v) in &before {
            if Some(*subject) == stripped || *v != TypeVerdict::Accept {
                continue;
            }
            if after.get(subject) == Some(&TypeVerdict::Reject) {
                out.push(format!(
                    "removing {} flips {} to reject",
                    snap.render(link).unwrap_or_default(),
                    snap.render(*subject).unwrap_or_default()
                ));
            }
        }
    }
    out
}

/// `total` atoms: Concept nodes, List links chaining them, and exactly
/// `candidates` Inheritance links between random nodes.
pub fn bench_fixture(seed: u64, total: usize, candidates: usize) -> Store {
    let mut rng = GeneratorConfig::default().with_seed(seed).rng(BENCH_STREAM);
    let rest = total - candidates;
    let n_nodes = (rest * 3 / 5).max(candidates + 1);
    let n_lists = rest - n_nodes;
    let node = |i: usize| AtomSpec::node("Concept", format!("k{i}"));
    let mut batch: Vec<NewAtom> = (0..n_nodes).map(|i| NewAtom::new(node(i))).collect();
    batch.extend((0..n_lists).map(|i| NewAtom::new(AtomSpec::link("List", vec![node(i), node(i + 1)]))));
    // distinct sources make the links distinct
    for src in sample(&mut rng, n_nodes - 1, candidates) {
        let dst = rng.gen_range(0..n_nodes);
        batch.push(NewAtom::new(AtomSpec::link("Inheritance", vec![node(src), node(dst)])));
    }
    let store = Store::new();
    store.commit_current(&batch, &[]).expect("fixture is valid");
    store
}

fn bench_case(cfg: &SuiteConfig) -> CaseOutcome {
    let store = bench_fixture(cfg.generator.seed, BENCH_ATOMS, BENCH_CANDIDATES);
    let snap = store.snapshot();
    let typed = snap.type_count("Inheritance");
    let pattern = Pattern::single(AtomSpec::link(
        "Inheritance",
        vec![AtomSpec::var("$x"), AtomSpec::var("$y")],
    ));
    snap.stats().reset();
    let results = query(&pattern, &snap).map_err(|e| e.to_string())?;
    let inspected = snap.stats().index_inspections();
    let note = format!(
        "store {} atoms, {typed} Inheritance, {} results, {inspected} index inspections",
        snap.len(),
        results.len()
    );
    if snap.len() != BENCH_ATOMS || typed != BENCH_CANDIDATES || results.len() != typed || inspected != typed as u64 {
        return Err(note);
    }
    Ok(vec![note])
}
