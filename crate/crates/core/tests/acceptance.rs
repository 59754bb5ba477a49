//! Acceptance criteria 1-9. Prints one line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use metagraph::harness::{
    bench_fixture, cbv_discrimination, deduction_rule, gen_dag, gen_gradual_case, gen_linear_identity,
    gen_linear_violation, gen_store, gen_term, gradual_violations, run_suite, typecheck_step_bound, GeneratorConfig,
    Suite, SuiteConfig, BENCH_ATOMS,
};
use metagraph::lambda::{
    ann, app, apps, cast_down, cast_up, cnst, decode_term, encode_term, eval_distribution, eval_distribution_dfs, lam,
    pi, typecheck, typecheck_against, var, IllReason, Mult, Signature, Term,
};
use metagraph::pattern::{query, Pattern};
use metagraph::rewrite::{forward_chain, ChainOutcome, ForwardConfig, Policy};
use metagraph::store::{AtomSpec, NewAtom, Store};
use metagraph::surface::{form, load_str, parse_bytes};
use metagraph::truth::ratio;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn suite(suite: Suite, cases: usize) -> Outcome {
    let cfg = SuiteConfig {
        cases,
        ..SuiteConfig::default()
    };
    run_suite(suite, &cfg)
        .map(|r| format!("{} cases", r.cases.len()))
        .map_err(|f| f.to_string())
}

fn oracle() -> Outcome {
    let start = Instant::now();
    let r = suite(Suite::Oracle, 1000)?;
    let took = start.elapsed();
    if took > Duration::from_secs(60) {
        return Err(format!("{r}, took {took:.1?}"));
    }
    Ok(format!("{r}, zero mismatches in {took:.1?}"))
}

fn chaining() -> Outcome {
    suite(Suite::Chaining, 100).map(|r| format!("{r}: closure and forward/backward agreement"))
}

fn determinism() -> Outcome {
    let mut checked = 0;
    for seed in 0..30 {
        let g = GeneratorConfig::default().with_seed(seed);
        let (store, _) = gen_dag(&g);
        let rule = deduction_rule(&store);
        let initial = store.snapshot();
        let mut dumps = BTreeSet::new();
        for workers in [1, 2, 4, 8] {
            let s = Store::from_snapshot(&initial);
            let cfg = ForwardConfig {
                max_steps: 64,
                policy: Policy::ExhaustiveToFixpoint,
                workers,
            };
            let trace = forward_chain(&s, std::slice::from_ref(&rule), cfg).map_err(|e| e.to_string())?;
            if trace.outcome != ChainOutcome::Fixpoint {
                return Err(format!("seed {seed} workers {workers}: no fixpoint"));
            }
            dumps.insert(s.snapshot().dump());
        }
        if dumps.len() != 1 {
            return Err(format!("seed {seed}: dumps differ across worker counts"));
        }

        // two disjoint batches over the same base
        let base = gen_store(&g).snapshot();
        let batch = |tag: &str| -> Vec<NewAtom> {
            (0..5)
                .map(|i| {
                    NewAtom::new(AtomSpec::link(
                        "Member",
                        vec![
                            AtomSpec::node("Concept", format!("{tag}{i}")),
                            AtomSpec::node("Concept", tag),
                        ],
                    ))
                })
                .collect()
        };
        let (a, b) = (batch("left"), batch("right"));
        let ordered = |x: &[NewAtom], y: &[NewAtom]| -> Result<String, String> {
            let s = Store::from_snapshot(&base);
            s.commit(&base, x, &[]).map_err(|e| e.to_string())?;
            s.commit(&base, y, &[]).map_err(|e| e.to_string())?;
            Ok(s.snapshot().dump())
        };
        let ab = ordered(&a, &b)?;
        let ba = ordered(&b, &a)?;
        let s = Arc::new(Store::from_snapshot(&base));
        std::thread::scope(|scope| {
            for x in [&a, &b] {
                let s = s.clone();
                let base = &base;
                scope.spawn(move || s.commit(base, x, &[]).expect("disjoint batches commit"));
            }
        });
        if ab != ba || ab != s.snapshot().dump() {
            return Err(format!("seed {seed}: commit order changed the store"));
        }
        checked += 1;
    }
    Ok(format!(
        "{checked} DAGs identical for workers 1,2,4,8; AB = BA = concurrent"
    ))
}

fn cast_signature() -> Signature {
    let b = || cnst("Bool");
    let redex = app(lam("A", Mult::Many, Some(Term::Star), var("A")), b());
    Signature::new()
        .with("Bool", Term::Star)
        .with("tt", b())
        .with("f", pi("x", Mult::Many, b(), b()))
        .with("r", redex)
}

fn iso_types() -> Outcome {
    let sig = cast_signature();
    let plain = app(cnst("f"), cnst("r"));
    match typecheck(&sig, &plain) {
        Err(ill) if ill.reason == IllReason::TypeMismatch => {}
        other => return Err(format!("no-cast application gave {other:?}")),
    }
    let down = app(cnst("f"), cast_down(cnst("r")));
    match typecheck(&sig, &down) {
        Ok(t) if t.ty == Some(cnst("Bool")) => {}
        other => return Err(format!("cast-down application gave {other:?}")),
    }
    let redex = sig.get("r").cloned().unwrap_or(Term::Star);
    if let Err(e) = typecheck(&sig, &ann(cast_up(cnst("tt")), redex)) {
        return Err(format!("cast-up annotation rejected: {e}"));
    }
    let mut worst = 0.0f64;
    for seed in 0..1000 {
        let t = gen_term(&GeneratorConfig::default().with_seed(seed));
        let steps = match typecheck(&metagraph::harness::corpus_signature(), &t) {
            Ok(ty) => ty.steps,
            Err(ill) => ill.steps,
        };
        let bound = typecheck_step_bound(&t);
        if steps > bound {
            return Err(format!("seed {seed}: {steps} steps over bound {bound}"));
        }
        worst = worst.max(steps as f64 / bound as f64);
    }
    Ok(format!(
        "cast triple holds; 1000 terms within bound (worst {:.0}% of it)",
        worst * 100.0
    ))
}

fn linearity() -> Outcome {
    let sig = metagraph::harness::corpus_signature();
    for seed in 0..1000 {
        let g = GeneratorConfig::default().with_seed(seed);
        let (bad, ty) = gen_linear_violation(&g);
        match typecheck_against(&sig, &bad, &ty) {
            Err(ill) if ill.reason == IllReason::LinearityViolation => {}
            other => return Err(format!("seed {seed}: `{bad}` gave {other:?}")),
        }
        let (good, ty) = gen_linear_identity(&g);
        if let Err(e) = typecheck_against(&sig, &good, &ty) {
            return Err(format!("seed {seed}: `{good}` rejected: {e}"));
        }
    }
    Ok("1000/1000 violations rejected, 1000/1000 identities accepted".into())
}

fn confluence() -> Outcome {
    for seed in 0..50 {
        let t = gen_term(&GeneratorConfig::default().with_seed(seed));
        let bfs = eval_distribution(&t, 64);
        let dfs = eval_distribution_dfs(&t, 64);
        if bfs != dfs {
            return Err(format!("seed {seed}: orders disagree on `{t}`"));
        }
        if !bfs.total().is_one() {
            return Err(format!("seed {seed}: mass {}", bfs.total()));
        }
    }
    let d = cbv_discrimination();
    let pair = |x: &str, y: &str| apps(cnst("pair"), [cnst(x), cnst(y)]);
    let half = ratio(1, 2);
    if d.get(&pair("a", "a")) != half || d.get(&pair("b", "b")) != half || !d.get(&pair("a", "b")).is_zero() {
        return Err(format!("call-by-value test gave {d}"));
    }
    Ok(format!("50 terms agree with exact mass 1; cbv gives {d}"))
}

fn gradual() -> Outcome {
    for seed in 0..500 {
        let case = gen_gradual_case(&GeneratorConfig::default().with_seed(seed));
        if let Some(v) = gradual_violations(&case).first() {
            return Err(format!("seed {seed}: {v}"));
        }
    }
    Ok("500 cases, no Accept flipped to Reject".into())
}

fn index_efficiency() -> Outcome {
    let store = bench_fixture(0, BENCH_ATOMS, 50);
    let snap = store.snapshot();
    let typed = snap.type_count("Inheritance");
    let p = Pattern::single(AtomSpec::link(
        "Inheritance",
        vec![AtomSpec::var("$x"), AtomSpec::var("$y")],
    ));
    snap.stats().reset();
    let hits = query(&p, &snap).map_err(|e| e.to_string())?.len();
    let inspected = snap.stats().index_inspections();
    let msg = format!(
        "{} atoms, {typed} typed, {hits} results, {inspected} inspections",
        snap.len()
    );
    if snap.len() == BENCH_ATOMS && inspected == typed as u64 && hits == typed {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn fixtures() -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .expect("fixtures directory")
        .filter_map(|e| {
            let p = e.ok()?.path();
            if p.extension()? != "scm" {
                return None;
            }
            Some((p.display().to_string(), std::fs::read_to_string(&p).ok()?))
        })
        .collect();
    out.sort();
    out
}

/// Parses and interprets `bytes` as far as it goes; only a panic is a failure.
fn read_everything(bytes: &[u8]) -> bool {
    catch_unwind(AssertUnwindSafe(|| {
        if let Ok(exprs) = parse_bytes(bytes) {
            let store = Store::new();
            for e in &exprs {
                let _ = form(e);
                let _ = metagraph::lambda::term_from_sexpr(e);
            }
            if let Ok(text) = std::str::from_utf8(bytes) {
                let _ = load_str(text, &store);
                let _ = store.snapshot().dump();
            }
        }
    }))
    .is_ok()
}

fn round_trips() -> Outcome {
    let files = fixtures();
    if files.is_empty() {
        return Err("no fixtures found".into());
    }
    for (name, text) in &files {
        let a = Store::new();
        load_str(text, &a).map_err(|e| format!("{name}: {e}"))?;
        let dump = a.snapshot().dump();
        let b = Store::new();
        load_str(&dump, &b).map_err(|e| format!("{name} dump: {e}"))?;
        if b.snapshot().dump() != dump {
            return Err(format!("{name}: dump differs after parsing it back"));
        }
    }
    for seed in 0..1000 {
        let t = gen_term(&GeneratorConfig::default().with_seed(seed));
        let s = Store::new();
        let id = encode_term(&s, &t).map_err(|e| e.to_string())?;
        let back = decode_term(&s.snapshot(), id).map_err(|e| e.to_string())?;
        if back != t {
            return Err(format!("seed {seed}: `{t}` decoded as `{back}`"));
        }
    }
    std::panic::set_hook(Box::new(|_| {}));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let alphabet = b"()\"\\$#;. \n\t-/0123456789abcXYZ";
    let corpus: Vec<&[u8]> = files.iter().map(|(_, t)| t.as_bytes()).collect();
    let mut crashes = 0;
    for i in 0..10_000 {
        let input: Vec<u8> = match i % 3 {
            0 => (0..rng.gen_range(0..64)).map(|_| rng.gen()).collect(),
            1 => (0..rng.gen_range(0..96))
                .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
                .collect(),
            _ => {
                let src = corpus[rng.gen_range(0..corpus.len())];
                let mut v = src[..rng.gen_range(0..=src.len())].to_vec();
                for _ in 0..rng.gen_range(0..4) {
                    if !v.is_empty() {
                        let at = rng.gen_range(0..v.len());
                        v[at] = rng.gen();
                    }
                }
                v
            }
        };
        if !read_everything(&input) {
            crashes += 1;
        }
    }
    let _ = std::panic::take_hook();
    if crashes > 0 {
        return Err(format!("reader panicked on {crashes} of 10000 inputs"));
    }
    Ok(format!(
        "{} fixtures byte-identical, 1000 terms decode, 10000 fuzz inputs without a crash",
        files.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle),
        ("chaining closure", chaining),
        ("determinism under parallelism", determinism),
        ("iso-type casts and termination", iso_types),
        ("linearity", linearity),
        ("probabilistic confluence", confluence),
        ("gradual guarantee", gradual),
        ("index efficiency", index_efficiency),
        ("round-trips", round_trips),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
