//! Seeded generators. Every function is a pure function of its config.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::GeneratorConfig;
use crate::lambda::{ann, app, apps, cast_down, cast_up, cnst, lam, pi, var, Mult, Signature, Term};
use crate::pattern::Pattern;
use crate::store::{AtomId, AtomSpec, NewAtom, Snapshot, Store};
use crate::truth::{ratio, TruthValue};

// separate streams so that, say, the pattern for a seed does not depend on
// how many numbers the store generator drew
const STORE_STREAM: u64 = 1;
const PATTERN_STREAM: u64 = 2;
const TERM_STREAM: u64 = 3;
const DAG_STREAM: u64 = 4;
const CORPUS_STREAM: u64 = 5;

const NODE_TYPES: [&str; 2] = ["Concept", "Predicate"];
const LINK_TYPES: [(&str, usize, usize); 5] = [
    ("Inheritance", 2, 2),
    ("Similarity", 2, 2),
    ("Evaluation", 2, 2),
    ("Member", 2, 2),
    ("List", 1, 3),
];

fn random_tv(rng: &mut ChaCha8Rng) -> Option<TruthValue> {
    rng.gen_bool(0.3)
        .then(|| TruthValue::from_fractions((rng.gen_range(0..=4), 4), (rng.gen_range(1..=4), 4)))
}

/// Random metagraph with at most `atom_budget` atoms. Links may target links.
/// A budget of 1 yields a single node.
pub fn gen_store(cfg: &GeneratorConfig) -> Store {
    let mut rng = cfg.rng(STORE_STREAM);
    let budget = cfg.atom_budget.max(1);
    let store = Store::new();
    let n_nodes = if budget < 3 {
        1
    } else {
        rng.gen_range(2..=(budget / 3).max(2))
    };
    let mut ids: Vec<AtomId> = Vec::with_capacity(budget);
    for i in 0..n_nodes {
        let ty = NODE_TYPES[rng.gen_range(0..NODE_TYPES.len())];
        let id = store
            .add(NewAtom {
                spec: AtomSpec::node(ty, format!("n{i}")),
                tv: random_tv(&mut rng),
            })
            .expect("generated node is valid");
        ids.push(id);
    }
    let mut attempts = budget * 4;
    while store.len() < budget && attempts > 0 {
        attempts -= 1;
        let (ty, lo, hi) = LINK_TYPES[rng.gen_range(0..LINK_TYPES.len())];
        let arity = rng.gen_range(lo..=hi);
        // bias targets towards nodes so links stay shallow
        let targets: Vec<AtomSpec> = (0..arity)
            .map(|_| {
                let pool = if rng.gen_bool(0.75) { &ids[..n_nodes] } else { &ids[..] };
                AtomSpec::Existing(pool[rng.gen_range(0..pool.len())])
            })
            .collect();
        let before = store.len();
        let id = store
            .add(NewAtom {
                spec: AtomSpec::link(ty, targets),
                tv: random_tv(&mut rng),
            })
            .expect("generated link is valid");
        if store.len() > before {
            ids.push(id);
        }
    }
    store
}

/// The variables a generated pattern may use: `$v0 .. $v{k-1}`.
pub fn pattern_variables(cfg: &GeneratorConfig) -> Vec<AtomSpec> {
    (0..cfg.variable_budget)
        .map(|i| AtomSpec::var(format!("$v{i}")))
        .collect()
}

fn abstract_spec(spec: &AtomSpec, vars: &[AtomSpec], rng: &mut ChaCha8Rng, root: bool) -> AtomSpec {
    if !root && !vars.is_empty() && rng.gen_bool(0.4) {
        return vars[rng.gen_range(0..vars.len())].clone();
    }
    match spec {
        AtomSpec::Link { type_name, targets } => AtomSpec::link(
            type_name.clone(),
            targets.iter().map(|t| abstract_spec(t, vars, rng, false)).collect(),
        ),
        _ => spec.clone(),
    }
}

/// A conjunctive pattern of 1..=`clause_budget` clauses over
/// [`pattern_variables`]. Clause roots are always links. Most clauses are
/// stored links with random positions replaced by variables, so they tend to
/// match; the rest are random.
pub fn gen_pattern(cfg: &GeneratorConfig, snap: &Snapshot) -> Pattern {
    let mut rng = cfg.rng(PATTERN_STREAM);
    let vars = pattern_variables(cfg);
    let links: Vec<AtomId> = snap.atoms().filter(|(_, a)| a.is_link()).map(|(id, _)| id).collect();
    let nodes: Vec<AtomId> = snap.atoms().filter(|(_, a)| a.is_node()).map(|(id, _)| id).collect();
    let n_clauses = rng.gen_range(1..=cfg.clause_budget.max(1));
    let clauses = (0..n_clauses)
        .map(|_| {
            if !links.is_empty() && rng.gen_bool(0.75) {
                let link = links[rng.gen_range(0..links.len())];
                let spec = snap.spec_of(link).expect("listed atom resolves");
                abstract_spec(&spec, &vars, &mut rng, true)
            } else {
                let (ty, lo, hi) = LINK_TYPES[rng.gen_range(0..LINK_TYPES.len())];
                let arity = rng.gen_range(lo..=hi);
                let targets = (0..arity)
                    .map(|_| {
                        if !vars.is_empty() && (nodes.is_empty() || rng.gen_bool(0.6)) {
                            vars[rng.gen_range(0..vars.len())].clone()
                        } else if nodes.is_empty() {
                            AtomSpec::node("Concept", "absent")
                        } else {
                            snap.spec_of(nodes[rng.gen_range(0..nodes.len())])
                                .expect("listed atom resolves")
                        }
                    })
                    .collect();
                AtomSpec::link(ty, targets)
            }
        })
        .collect();
    Pattern::new(clauses).expect("at least one clause")
}

/// Inheritance DAG: edges only go from lower to higher node index.
/// Returns the store and the edge list over node indices.
pub fn gen_dag(cfg: &GeneratorConfig) -> (Store, Vec<(usize, usize)>) {
    let mut rng = cfg.rng(DAG_STREAM);
    let budget = cfg.atom_budget.max(2);
    let n = rng.gen_range(2..=(budget / 3).clamp(2, 30));
    let mut edges = Vec::new();
    let p = rng.gen_range(0.05..0.3);
    for i in 0..n {
        for j in (i + 1)..n {
            if n + edges.len() < budget && rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    edges.shuffle(&mut rng);
    let store = Store::new();
    let batch: Vec<NewAtom> = (0..n)
        .map(|i| NewAtom::new(dag_node(i)))
        .chain(edges.iter().map(|&(a, b)| {
            NewAtom::with_tv(
                AtomSpec::link("Inheritance", vec![dag_node(a), dag_node(b)]),
                TruthValue::from_fractions((rng.gen_range(2..=4), 4), (rng.gen_range(2..=4), 4)),
            )
        }))
        .collect();
    store.commit_current(&batch, &[]).expect("generated DAG is valid");
    (store, edges)
}

pub fn dag_node(i: usize) -> AtomSpec {
    AtomSpec::node("Concept", format!("c{i}"))
}

const PROBABILITIES: [(i64, i64); 5] = [(1, 2), (1, 3), (2, 3), (1, 4), (3, 4)];
const TERM_CONSTS: [&str; 6] = ["a", "b", "c", "tt", "ff", "pair"];

fn gen_mult(rng: &mut ChaCha8Rng) -> Mult {
    [Mult::Zero, Mult::One, Mult::Many][rng.gen_range(0..3)]
}

fn gen_type(rng: &mut ChaCha8Rng, depth: usize) -> Term {
    if depth == 0 || rng.gen_bool(0.6) {
        return [cnst("Bool"), cnst("BPair"), Term::Star][rng.gen_range(0..3)].clone();
    }
    pi("y", gen_mult(rng), gen_type(rng, depth - 1), gen_type(rng, depth - 1))
}

fn gen_term_at(rng: &mut ChaCha8Rng, depth: usize, scope: &mut Vec<String>) -> Term {
    if depth == 0 || rng.gen_bool(0.25) {
        return if !scope.is_empty() && rng.gen_bool(0.6) {
            var(&scope[rng.gen_range(0..scope.len())])
        } else {
            cnst(TERM_CONSTS[rng.gen_range(0..TERM_CONSTS.len())])
        };
    }
    match rng.gen_range(0..20) {
        0..=5 => {
            let x = format!("x{}", scope.len());
            let mult = gen_mult(rng);
            let annotation = rng.gen_bool(0.2).then(|| gen_type(rng, 1));
            scope.push(x.clone());
            let body = gen_term_at(rng, depth - 1, scope);
            scope.pop();
            lam(&x, mult, annotation, body)
        }
        6..=11 => app(gen_term_at(rng, depth - 1, scope), gen_term_at(rng, depth - 1, scope)),
        12..=15 => {
            let (n, d) = PROBABILITIES[rng.gen_range(0..PROBABILITIES.len())];
            Term::Choice(
                ratio(n, d),
                Box::new(gen_term_at(rng, depth - 1, scope)),
                Box::new(gen_term_at(rng, depth - 1, scope)),
            )
        }
        16 => ann(gen_term_at(rng, depth - 1, scope), gen_type(rng, 1)),
        17 => cast_up(gen_term_at(rng, depth - 1, scope)),
        18 => cast_down(gen_term_at(rng, depth - 1, scope)),
        _ => gen_type(rng, 2),
    }
}

/// A closed term of depth at most `term_depth`.
pub fn gen_term(cfg: &GeneratorConfig) -> Term {
    gen_term_at(&mut cfg.rng(TERM_STREAM), cfg.term_depth, &mut Vec::new())
}

/// Signature for the typed corpora: `Bool`, `BPair : *`, `tt ff : Bool`,
/// `pair : (a lin Bool) -> (b lin Bool) -> BPair`, `not : (x lin Bool) -> Bool`.
pub fn corpus_signature() -> Signature {
    let b = || cnst("Bool");
    Signature::new()
        .with("Bool", Term::Star)
        .with("BPair", Term::Star)
        .with("tt", b())
        .with("ff", b())
        .with("pair", pi("a", Mult::One, b(), pi("b", Mult::One, b(), cnst("BPair"))))
        .with("not", pi("x", Mult::One, b(), b()))
}

/// A Bool-typed expression with `holes` leaves marked `Var("?")`.
fn bool_shape(rng: &mut ChaCha8Rng, depth: usize) -> Term {
    if depth == 0 || rng.gen_bool(0.3) {
        return var("?");
    }
    match rng.gen_range(0..3) {
        0 => app(cnst("not"), bool_shape(rng, depth - 1)),
        1 => {
            let (n, d) = PROBABILITIES[rng.gen_range(0..PROBABILITIES.len())];
            Term::Choice(
                ratio(n, d),
                Box::new(bool_shape(rng, depth - 1)),
                Box::new(bool_shape(rng, depth - 1)),
            )
        }
        _ => app(
            lam("y", Mult::One, Some(cnst("Bool")), var("y")),
            bool_shape(rng, depth - 1),
        ),
    }
}

fn count_holes(t: &Term) -> usize {
    t.occurrences("?")
}

/// Replaces holes left to right, taking `x` where `pick` says so and a
/// boolean constant elsewhere.
fn fill(t: &Term, pick: &mut dyn FnMut() -> bool, x: &str) -> Term {
    match t {
        Term::Var(h) if h == "?" => {
            if pick() {
                var(x)
            } else {
                cnst("tt")
            }
        }
        Term::App(f, a) => app(fill(f, pick, x), fill(a, pick, x)),
        Term::Choice(p, l, r) => Term::Choice(p.clone(), Box::new(fill(l, pick, x)), Box::new(fill(r, pick, x))),
        Term::Lam {
            binder,
            mult,
            ann,
            body,
        } => Term::Lam {
            binder: binder.clone(),
            mult: *mult,
            ann: ann.clone(),
            body: Box::new(fill(body, pick, x)),
        },
        other => other.clone(),
    }
}

/// `(lam (x lin Bool) body)` whose body uses `x` at least twice, with its
/// intended type. Apart from the duplication the term is well typed.
/// Choice branches both count toward usage, so `x` in two branches counts twice.
pub fn gen_linear_violation(cfg: &GeneratorConfig) -> (Term, Term) {
    let mut rng = cfg.rng(CORPUS_STREAM);
    let depth = cfg.term_depth.clamp(1, 4);
    let (body, result) = if rng.gen_bool(0.5) {
        (
            apps(cnst("pair"), [bool_shape(&mut rng, depth), bool_shape(&mut rng, depth)]),
            cnst("BPair"),
        )
    } else {
        let mut b = bool_shape(&mut rng, depth);
        while count_holes(&b) < 2 {
            b = app(lam("y", Mult::One, Some(cnst("Bool")), var("y")), b);
            b = Term::Choice(ratio(1, 2), Box::new(b), Box::new(var("?")));
        }
        (b, cnst("Bool"))
    };
    let holes = count_holes(&body);
    let mut chosen: Vec<bool> = (0..holes).map(|_| rng.gen_bool(0.5)).collect();
    // at least two occurrences
    let mut idx: Vec<usize> = (0..holes).collect();
    idx.shuffle(&mut rng);
    for &i in idx.iter().take(2) {
        chosen[i] = true;
    }
    let mut it = chosen.into_iter();
    let body = fill(&body, &mut || it.next().unwrap_or(false), "x");
    (
        lam("x", Mult::One, Some(cnst("Bool")), body),
        pi("x", Mult::One, cnst("Bool"), result),
    )
}

/// Terms that use each linear binder exactly once, with their types.
pub fn gen_linear_identity(cfg: &GeneratorConfig) -> (Term, Term) {
    let mut rng = cfg.rng(CORPUS_STREAM);
    let ground = |rng: &mut ChaCha8Rng| {
        let mut t = [cnst("Bool"), cnst("BPair")][rng.gen_range(0..2)].clone();
        for _ in 0..rng.gen_range(0..3) {
            t = pi(
                "y",
                [Mult::One, Mult::Many][rng.gen_range(0..2)],
                [cnst("Bool"), cnst("BPair")][rng.gen_range(0..2)].clone(),
                t,
            );
        }
        t
    };
    match rng.gen_range(0..4) {
        0 => {
            let ty = ground(&mut rng);
            (lam("x", Mult::One, None, var("x")), pi("x", Mult::One, ty.clone(), ty))
        }
        1 => (
            lam("A", Mult::Zero, Some(Term::Star), lam("x", Mult::One, None, var("x"))),
            pi("A", Mult::Zero, Term::Star, pi("x", Mult::One, var("A"), var("A"))),
        ),
        2 => {
            // x threaded through a random tower of linear identities, used once
            let shape = bool_shape(&mut rng, cfg.term_depth.clamp(1, 4));
            let holes = count_holes(&shape);
            let target = rng.gen_range(0..holes.max(1));
            let mut i = 0;
            let body = fill(
                &shape,
                &mut || {
                    i += 1;
                    i - 1 == target
                },
                "x",
            );
            (
                lam("x", Mult::One, None, body),
                pi("x", Mult::One, cnst("Bool"), cnst("Bool")),
            )
        }
        _ => {
            let fty = pi("y", Mult::One, cnst("Bool"), cnst("Bool"));
            (
                lam("f", Mult::One, None, lam("z", Mult::One, None, app(var("f"), var("z")))),
                pi("f", Mult::One, fty, pi("z", Mult::One, cnst("Bool"), cnst("Bool"))),
            )
        }
    }
}

/// A term of type `ty` over [`corpus_signature`], when one is easy to build.
pub fn gen_typed_term(rng: &mut ChaCha8Rng, ty: &Term, depth: usize) -> Option<Term> {
    let boolean = |rng: &mut ChaCha8Rng| [cnst("tt"), cnst("ff")][rng.gen_range(0..2)].clone();
    match ty {
        Term::Const(c) if c == "Bool" => Some(if depth == 0 {
            boolean(rng)
        } else {
            match rng.gen_range(0..4) {
                0 => boolean(rng),
                1 => app(cnst("not"), gen_typed_term(rng, ty, depth - 1)?),
                2 => Term::Choice(
                    ratio(1, 2),
                    Box::new(gen_typed_term(rng, ty, depth - 1)?),
                    Box::new(gen_typed_term(rng, ty, depth - 1)?),
                ),
                _ => app(
                    lam("y", Mult::One, Some(cnst("Bool")), var("y")),
                    gen_typed_term(rng, ty, depth - 1)?,
                ),
            }
        }),
        Term::Const(c) if c == "BPair" => Some(apps(
            cnst("pair"),
            [
                gen_typed_term(rng, &cnst("Bool"), depth.saturating_sub(1))?,
                gen_typed_term(rng, &cnst("Bool"), depth.saturating_sub(1))?,
            ],
        )),
        Term::Star => Some([cnst("Bool"), cnst("BPair")][rng.gen_range(0..2)].clone()),
        Term::Pi { mult, dom, cod, .. } if **dom == cnst("Bool") && **cod == cnst("Bool") => {
            let body = match mult {
                Mult::Zero => gen_typed_term(rng, cod, depth.saturating_sub(1))?,
                Mult::One => app(cnst("not"), var("x")),
                Mult::Many => Term::Choice(ratio(1, 2), Box::new(var("x")), Box::new(app(cnst("not"), var("x")))),
            };
            Some(lam("x", *mult, Some(cnst("Bool")), body))
        }
        _ => None,
    }
}

/// Ids of every annotation (`Typed` link) in the snapshot, in id order.
pub fn typed_links(snap: &Snapshot) -> Vec<AtomId> {
    snap.atoms_of_type(crate::store::TYPED).collect()
}
