//! Procedures implemented in Rust and invoked explicitly from the graph.
//!
//! `(Execution (GroundedSchema "name") arg...)` runs a schema that returns an
//! atom specification; `(Evaluation (GroundedPredicate "name") arg...)` runs
//! a predicate that returns a truth value. Pattern matching never calls
//! these; only [`GroundedRegistry::execute`] does.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::store::{AtomId, AtomSpec, NewAtom, Snapshot, Store, StoreError};
use crate::truth::{format_ratio, parse_ratio, TruthValue};

pub const EXECUTION: &str = "Execution";
pub const EVALUATION: &str = "Evaluation";
pub const GROUNDED_SCHEMA: &str = "GroundedSchema";
pub const GROUNDED_PREDICATE: &str = "GroundedPredicate";
pub const NUMBER: &str = "Number";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundedError {
    #[error("grounded procedure `{0}` is already registered")]
    DuplicateName(String),
    #[error("unknown grounded procedure: {0}")]
    UnknownProcedure(String),
    #[error("`{name}` takes {expected} argument(s), got {got}")]
    ArityMismatch { name: String, expected: usize, got: usize },
    #[error("`{name}` failed: {message}")]
    CallbackFailure { name: String, message: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

pub type SchemaFn = dyn Fn(&Snapshot, &[AtomId]) -> Result<AtomSpec, String> + Send + Sync;
pub type PredicateFn = dyn Fn(&Snapshot, &[AtomId]) -> Result<TruthValue, String> + Send + Sync;

#[derive(Clone)]
pub enum Callback {
    Schema(Arc<SchemaFn>),
    Predicate(Arc<PredicateFn>),
}

#[derive(Clone)]
pub struct GroundedProcedure {
    pub name: String,
    pub arity: usize,
    pub callback: Callback,
    /// Impure results are meant to be committed; impure calls are serialized.
    pub pure: bool,
}

impl fmt::Debug for GroundedProcedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.callback {
            Callback::Schema(_) => "schema",
            Callback::Predicate(_) => "predicate",
        };
        write!(f, "{}/{} ({kind}, pure={})", self.name, self.arity, self.pure)
    }
}

impl GroundedProcedure {
    pub fn schema(
        name: &str,
        arity: usize,
        pure: bool,
        f: impl Fn(&Snapshot, &[AtomId]) -> Result<AtomSpec, String> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.to_string(),
            arity,
            callback: Callback::Schema(Arc::new(f)),
            pure,
        }
    }

    pub fn predicate(
        name: &str,
        arity: usize,
        pure: bool,
        f: impl Fn(&Snapshot, &[AtomId]) -> Result<TruthValue, String> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.to_string(),
            arity,
            callback: Callback::Predicate(Arc::new(f)),
            pure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroundedValue {
    Atom(AtomSpec),
    Truth(TruthValue),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub value: GroundedValue,
    /// Set for impure procedures: the caller should commit the value.
    pub commit: bool,
}

/// Append-only name → procedure table.
#[derive(Default)]
pub struct GroundedRegistry {
    procs: HashMap<String, GroundedProcedure>,
    impure: Mutex<()>,
    counter: Arc<AtomicU64>,
}

impl fmt::Debug for GroundedRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<&String> = self.procs.keys().collect();
        names.sort();
        f.debug_list().entries(names).finish()
    }
}

fn number_of(snap: &Snapshot, id: AtomId) -> Result<crate::truth::Ratio, String> {
    let atom = snap.resolve(id).map_err(|e| e.to_string())?;
    if atom.type_name() != NUMBER {
        return Err(format!(
            "expected a Number node, got {}",
            snap.render(id).unwrap_or_default()
        ));
    }
    parse_ratio(atom.name()).map_err(|e| e.to_string())
}

impl GroundedRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `num:add`, `num:mul`, `str:eq` and the impure `counter` hook.
    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        let binary = |name: &str, op: fn(&crate::truth::Ratio, &crate::truth::Ratio) -> crate::truth::Ratio| {
            GroundedProcedure::schema(name, 2, true, move |snap, args| {
                let a = number_of(snap, args[0])?;
                let b = number_of(snap, args[1])?;
                Ok(AtomSpec::node(NUMBER, format_ratio(&op(&a, &b))))
            })
        };
        let builtins = [
            binary("num:add", |a, b| a + b),
            binary("num:mul", |a, b| a * b),
            GroundedProcedure::predicate("str:eq", 2, true, |snap, args| {
                let a = snap.resolve(args[0]).map_err(|e| e.to_string())?;
                let b = snap.resolve(args[1]).map_err(|e| e.to_string())?;
                Ok(if a.name() == b.name() {
                    TruthValue::certain()
                } else {
                    TruthValue::falsehood()
                })
            }),
        ];
        for p in builtins {
            r.register(p).expect("builtin names are distinct");
        }
        let counter = r.counter.clone();
        r.register(GroundedProcedure::schema("counter", 0, false, move |_, _| {
            let n = counter.fetch_add(1, Ordering::SeqCst) + 1;
            Ok(AtomSpec::node(NUMBER, n.to_string()))
        }))
        .expect("builtin names are distinct");
        r
    }

    /// Calls made so far to the built-in `counter` hook.
    pub fn counter_value(&self) -> u64 {
        self.counter.load(Ordering::SeqCst)
    }

    pub fn register(&mut self, p: GroundedProcedure) -> Result<(), GroundedError> {
        if self.procs.contains_key(&p.name) {
            return Err(GroundedError::DuplicateName(p.name));
        }
        self.procs.insert(p.name.clone(), p);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&GroundedProcedure> {
        self.procs.get(name)
    }

    pub fn names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.procs.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    /// Runs the procedure named by an `Execution`/`Evaluation` link.
    pub fn execute(&self, call: AtomId, snap: &Snapshot) -> Result<Outcome, GroundedError> {
        let link = snap.resolve(call)?;
        let head_type = match link.type_name() {
            EXECUTION => GROUNDED_SCHEMA,
            EVALUATION => GROUNDED_PREDICATE,
            _ => {
                return Err(GroundedError::UnknownProcedure(format!(
                    "{} is not an Execution or Evaluation link",
                    snap.render(call)?
                )))
            }
        };
        let Some((&head, args)) = link.targets().split_first() else {
            return Err(GroundedError::UnknownProcedure(format!(
                "{} has no head",
                snap.render(call)?
            )));
        };
        let head = snap.resolve(head)?;
        if head.type_name() != head_type {
            return Err(GroundedError::UnknownProcedure(format!(
                "{} link must be headed by a {head_type} node",
                link.type_name()
            )));
        }
        let name = head.name();
        let proc = self
            .procs
            .get(name)
            .ok_or_else(|| GroundedError::UnknownProcedure(name.to_string()))?;
        if args.len() != proc.arity {
            return Err(GroundedError::ArityMismatch {
                name: name.to_string(),
                expected: proc.arity,
                got: args.len(),
            });
        }
        let _serial = (!proc.pure).then(|| self.impure.lock().unwrap_or_else(|e| e.into_inner()));
        let failure = |message: String| GroundedError::CallbackFailure {
            name: name.to_string(),
            message,
        };
        let value = match (&proc.callback, head_type) {
            (Callback::Schema(f), GROUNDED_SCHEMA) => GroundedValue::Atom(f(snap, args).map_err(failure)?),
            (Callback::Predicate(f), GROUNDED_PREDICATE) => GroundedValue::Truth(f(snap, args).map_err(failure)?),
            _ => {
                return Err(GroundedError::UnknownProcedure(format!(
                    "`{name}` is not a {}",
                    if head_type == GROUNDED_SCHEMA {
                        "schema"
                    } else {
                        "predicate"
                    }
                )))
            }
        };
        Ok(Outcome {
            value,
            commit: !proc.pure,
        })
    }

    /// Executes and, for impure procedures, commits the value while still
    /// holding the serialization lock: a schema result is added, a predicate
    /// result revises the call link's truth value.
    pub fn execute_and_commit(&self, call: AtomId, store: &Store) -> Result<Outcome, GroundedError> {
        let snap = store.snapshot();
        let outcome = self.execute(call, &snap)?;
        if outcome.commit {
            let _serial = self.impure.lock().unwrap_or_else(|e| e.into_inner());
            let addition = match &outcome.value {
                GroundedValue::Atom(spec) => NewAtom::new(spec.clone()),
                GroundedValue::Truth(tv) => NewAtom::with_tv(snap.spec_of(call)?, tv.clone()),
            };
            store.add(addition)?;
        }
        Ok(outcome)
    }
}
