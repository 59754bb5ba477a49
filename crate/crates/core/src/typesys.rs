//! Gradual typing over the metagraph.
//!
//! Type systems are plugins registered by name; each one is also described in
//! the store by a `(TypeSystem name)` node. Annotations are ordinary
//! `(Typed atom (TypeSystem name) typeExpr)` links, so type information lives
//! in the same metagraph as the atoms it describes. An atom with no annotation
//! under a system is dynamically typed there: checking it yields
//! [`TypeVerdict::Unknown`] and its absent type is consistent with every type.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::store::{AtomId, AtomKey, AtomSpec, NewAtom, Snapshot, Store, StoreError, TYPED, TYPE_SYSTEM};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("type system `{0}` is already registered")]
    DuplicateName(String),
    #[error("unknown type system {0}")]
    UnknownSystem(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeSystemId(u32);

impl fmt::Display for TypeSystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "system#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TypeVerdict {
    Accept,
    Reject,
    /// No annotation under the consulted system, or the system does not describe this atom.
    Unknown,
}

impl fmt::Display for TypeVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TypeVerdict::Accept => "accept",
            TypeVerdict::Reject => "reject",
            TypeVerdict::Unknown => "unknown",
        })
    }
}

/// A pluggable type checker.
///
/// Both methods must be pure functions of their arguments. `types_consistent`
/// must be reflexive and symmetric; it need not be transitive.
pub trait TypeSystemPlugin: Send + Sync {
    fn name(&self) -> &str;

    /// Verdict for `atom` against its annotations `types` (never empty).
    /// `Unknown` means the atom lies outside what this system describes.
    fn check(&self, snap: &Snapshot, atom: AtomId, types: &[AtomId]) -> TypeVerdict;

    fn types_consistent(&self, snap: &Snapshot, a: AtomId, b: AtomId) -> bool;
}

struct Registered {
    name: String,
    plugin: Arc<dyn TypeSystemPlugin>,
}

/// Append-only registry of type systems.
#[derive(Default)]
pub struct TypeRegistry {
    systems: Vec<Registered>,
    by_name: HashMap<String, TypeSystemId>,
}

impl fmt::Debug for TypeRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.systems.iter().map(|s| &s.name)).finish()
    }
}

fn system_node(name: &str) -> AtomSpec {
    AtomSpec::node(TYPE_SYSTEM, name)
}

impl TypeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a plugin and records its `(TypeSystem name)` node in `store`.
    pub fn register(&mut self, store: &Store, plugin: Arc<dyn TypeSystemPlugin>) -> Result<TypeSystemId, TypeError> {
        let name = plugin.name().to_string();
        if self.by_name.contains_key(&name) {
            return Err(TypeError::DuplicateName(name));
        }
        store.add(NewAtom::new(system_node(&name)))?;
        let id = TypeSystemId(self.systems.len() as u32);
        self.by_name.insert(name.clone(), id);
        self.systems.push(Registered { name, plugin });
        Ok(id)
    }

    pub fn id_of(&self, name: &str) -> Option<TypeSystemId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: TypeSystemId) -> Option<&str> {
        self.systems.get(id.0 as usize).map(|s| s.name.as_str())
    }

    pub fn ids(&self) -> impl Iterator<Item = TypeSystemId> + '_ {
        (0..self.systems.len() as u32).map(TypeSystemId)
    }

    fn get(&self, id: TypeSystemId) -> Result<&Registered, TypeError> {
        self.systems
            .get(id.0 as usize)
            .ok_or_else(|| TypeError::UnknownSystem(id.to_string()))
    }

    fn typed_link(&self, atom: AtomId, system: TypeSystemId, type_expr: AtomId) -> Result<AtomSpec, TypeError> {
        let sys = self.get(system)?;
        Ok(AtomSpec::link(
            TYPED,
            vec![
                AtomSpec::Existing(atom),
                system_node(&sys.name),
                AtomSpec::Existing(type_expr),
            ],
        ))
    }

    /// Records `atom : type_expr` under `system`. Returns the `Typed` link.
    pub fn annotate(
        &self,
        store: &Store,
        atom: AtomId,
        system: TypeSystemId,
        type_expr: AtomId,
    ) -> Result<AtomId, TypeError> {
        let spec = self.typed_link(atom, system, type_expr)?;
        Ok(store.add(NewAtom::new(spec))?)
    }

    /// Removes one annotation; a no-op when it is absent.
    pub fn unannotate(
        &self,
        store: &Store,
        atom: AtomId,
        system: TypeSystemId,
        type_expr: AtomId,
    ) -> Result<(), TypeError> {
        let spec = self.typed_link(atom, system, type_expr)?;
        if let Some(link) = store.snapshot().lookup_spec(&spec) {
            store.remove(link)?;
        }
        Ok(())
    }

    /// Type expressions annotating `atom` under `system` in `snap`.
    pub fn annotations(&self, snap: &Snapshot, atom: AtomId, system: TypeSystemId) -> Result<Vec<AtomId>, TypeError> {
        let sys = self.get(system)?;
        let Some(node) = snap.lookup(&AtomKey::Node {
            type_name: TYPE_SYSTEM.to_string(),
            name: sys.name.clone(),
        }) else {
            return Ok(Vec::new());
        };
        Ok(snap
            .annotations(atom)
            .into_iter()
            .filter(|(s, _)| *s == node)
            .map(|(_, t)| t)
            .collect())
    }

    /// Unknown when `atom` is unannotated under `system`; otherwise the plugin decides.
    pub fn check_atom(&self, atom: AtomId, system: TypeSystemId, snap: &Snapshot) -> Result<TypeVerdict, TypeError> {
        snap.resolve(atom)?;
        let sys = self.get(system)?;
        let types = self.annotations(snap, atom, system)?;
        if types.is_empty() {
            return Ok(TypeVerdict::Unknown);
        }
        Ok(sys.plugin.check(snap, atom, &types))
    }

    /// Gradual consistency: an absent type is consistent with everything.
    pub fn consistent(
        &self,
        a: Option<AtomId>,
        b: Option<AtomId>,
        system: TypeSystemId,
        snap: &Snapshot,
    ) -> Result<bool, TypeError> {
        let sys = self.get(system)?;
        for t in [a, b].into_iter().flatten() {
            snap.resolve(t)?;
        }
        Ok(match (a, b) {
            (Some(a), Some(b)) => sys.plugin.types_consistent(snap, a, b),
            _ => true,
        })
    }
}

/// Checks declared target counts per link type.
///
/// The annotation's type expression is not inspected; annotating an atom
/// under this system opts it into the arity check. Undeclared types pass.
#[derive(Debug, Clone, Default)]
pub struct SimpleArity {
    arities: HashMap<String, usize>,
}

impl SimpleArity {
    pub const NAME: &'static str = "simple-arity";

    pub fn new() -> Self {
        Self::default()
    }

    /// Inheritance, Similarity, Implication and Evaluation are binary.
    pub fn standard() -> Self {
        ["Inheritance", "Similarity", "Implication", "Evaluation"]
            .into_iter()
            .fold(Self::new(), |s, t| s.declare(t, 2))
    }

    pub fn declare(mut self, type_name: &str, arity: usize) -> Self {
        self.arities.insert(type_name.to_string(), arity);
        self
    }
}

impl TypeSystemPlugin for SimpleArity {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn check(&self, snap: &Snapshot, atom: AtomId, _types: &[AtomId]) -> TypeVerdict {
        let Ok(atom) = snap.resolve(atom) else {
            return TypeVerdict::Reject;
        };
        match self.arities.get(atom.type_name()) {
            Some(&n) if atom.is_link() && atom.targets().len() != n => TypeVerdict::Reject,
            _ => TypeVerdict::Accept,
        }
    }

    fn types_consistent(&self, _snap: &Snapshot, a: AtomId, b: AtomId) -> bool {
        a == b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Store, TypeRegistry, TypeSystemId) {
        let store = Store::new();
        let mut reg = TypeRegistry::new();
        let id = reg.register(&store, Arc::new(SimpleArity::standard())).unwrap();
        (store, reg, id)
    }

    #[test]
    fn registration_records_a_node() {
        let (store, mut reg, id) = setup();
        assert_eq!(reg.name(id), Some("simple-arity"));
        assert!(store
            .snapshot()
            .lookup_spec(&AtomSpec::node(TYPE_SYSTEM, "simple-arity"))
            .is_some());
        assert_eq!(
            reg.register(&store, Arc::new(SimpleArity::new())).unwrap_err(),
            TypeError::DuplicateName("simple-arity".into())
        );
    }

    struct Named(&'static str);

    impl TypeSystemPlugin for Named {
        fn name(&self) -> &str {
            self.0
        }
        fn check(&self, _: &Snapshot, _: AtomId, _: &[AtomId]) -> TypeVerdict {
            TypeVerdict::Accept
        }
        fn types_consistent(&self, _: &Snapshot, a: AtomId, b: AtomId) -> bool {
            a == b
        }
    }

    #[test]
    fn distinct_plugins_coexist() {
        let (store, mut reg, s1) = setup();
        let s2 = reg.register(&store, Arc::new(Named("other"))).unwrap();
        assert_ne!(s1, s2);
        let cat = store.add_node("Concept", "cat", None).unwrap();
        let t1 = store.add_node("ConceptType", "c", None).unwrap();
        let t2 = store.add_node("OtherType", "o", None).unwrap();
        reg.annotate(&store, cat, s1, t1).unwrap();
        reg.annotate(&store, cat, s2, t2).unwrap();
        let snap = store.snapshot();
        assert_eq!(reg.annotations(&snap, cat, s1).unwrap(), vec![t1]);
        assert_eq!(reg.annotations(&snap, cat, s2).unwrap(), vec![t2]);
        assert_eq!(reg.check_atom(cat, s1, &snap).unwrap(), TypeVerdict::Accept);
        assert_eq!(reg.check_atom(cat, s2, &snap).unwrap(), TypeVerdict::Accept);
    }

    #[test]
    fn unannotated_is_unknown_and_arity_decides_otherwise() {
        let (store, reg, sys) = setup();
        let cat = store.add_node("Concept", "cat", None).unwrap();
        let animal = store.add_node("Concept", "animal", None).unwrap();
        let good = store.add_link("Inheritance", &[cat, animal], None).unwrap();
        let bad = store.add_link("Inheritance", &[cat], None).unwrap();
        let ty = store.add_node("ArityType", "Inheritance", None).unwrap();
        assert_eq!(
            reg.check_atom(good, sys, &store.snapshot()).unwrap(),
            TypeVerdict::Unknown
        );
        reg.annotate(&store, good, sys, ty).unwrap();
        reg.annotate(&store, bad, sys, ty).unwrap();
        let snap = store.snapshot();
        assert_eq!(reg.check_atom(good, sys, &snap).unwrap(), TypeVerdict::Accept);
        assert_eq!(reg.check_atom(bad, sys, &snap).unwrap(), TypeVerdict::Reject);
        assert_eq!(reg.check_atom(cat, sys, &snap).unwrap(), TypeVerdict::Unknown);
    }

    #[test]
    fn old_snapshots_ignore_later_annotations() {
        let (store, reg, sys) = setup();
        let cat = store.add_node("Concept", "cat", None).unwrap();
        let ty = store.add_node("ConceptType", "c", None).unwrap();
        let before = store.snapshot();
        reg.annotate(&store, cat, sys, ty).unwrap();
        assert_eq!(reg.check_atom(cat, sys, &before).unwrap(), TypeVerdict::Unknown);
        assert_eq!(
            reg.check_atom(cat, sys, &store.snapshot()).unwrap(),
            TypeVerdict::Accept
        );
    }

    #[test]
    fn errors() {
        let (store, reg, sys) = setup();
        let cat = store.add_node("Concept", "cat", None).unwrap();
        let bogus = TypeSystemId(7);
        assert!(matches!(
            reg.annotate(&store, cat, bogus, cat),
            Err(TypeError::UnknownSystem(_))
        ));
        assert!(matches!(
            reg.annotate(&store, AtomId(500), sys, cat),
            Err(TypeError::Store(StoreError::UnknownAtom(_)))
        ));
        assert!(matches!(
            reg.check_atom(AtomId(500), sys, &store.snapshot()),
            Err(TypeError::Store(StoreError::UnknownAtom(_)))
        ));
        assert!(matches!(
            reg.consistent(None, None, bogus, &store.snapshot()),
            Err(TypeError::UnknownSystem(_))
        ));
    }

    #[test]
    fn consistency_is_gradual_and_not_transitive() {
        let (store, reg, sys) = setup();
        let a = store.add_node("ArityType", "A", None).unwrap();
        let b = store.add_node("ArityType", "B", None).unwrap();
        let snap = store.snapshot();
        assert!(reg.consistent(None, Some(a), sys, &snap).unwrap());
        assert!(reg.consistent(Some(b), None, sys, &snap).unwrap());
        assert!(reg.consistent(Some(a), Some(a), sys, &snap).unwrap());
        // A ~ ? and ? ~ B, yet A !~ B
        assert!(!reg.consistent(Some(a), Some(b), sys, &snap).unwrap());
        assert_eq!(
            reg.consistent(Some(a), Some(b), sys, &snap).unwrap(),
            reg.consistent(Some(b), Some(a), sys, &snap).unwrap()
        );
    }

    #[test]
    fn unannotating_restores_unknown() {
        let (store, reg, sys) = setup();
        let cat = store.add_node("Concept", "cat", None).unwrap();
        let ty = store.add_node("ConceptType", "c", None).unwrap();
        reg.annotate(&store, cat, sys, ty).unwrap();
        reg.unannotate(&store, cat, sys, ty).unwrap();
        assert_eq!(
            reg.check_atom(cat, sys, &store.snapshot()).unwrap(),
            TypeVerdict::Unknown
        );
        reg.unannotate(&store, cat, sys, ty).unwrap();
    }
}
