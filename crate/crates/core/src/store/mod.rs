//! RAM-resident metagraph store.
//!
//! Atoms are content addressed: adding a structurally identical atom twice
//! yields the same [`AtomId`]. Readers work on immutable [`Snapshot`]s while
//! every write goes through [`Store::commit`], which validates a whole batch
//! against the current state and applies it atomically.

mod atom;
mod dump;

pub use atom::{
    is_variable_type, Atom, AtomId, AtomKey, AtomKind, AtomSpec, NewAtom, Variable, SUBGRAPH_VARIABLE, TYPED,
    TYPE_SYSTEM, VARIABLE,
};
pub use dump::quote_string;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::truth::TruthValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("unknown atom {0}")]
    UnknownAtom(AtomId),
    #[error("atom {atom} still has {incoming} incoming link(s)")]
    HasIncoming { atom: AtomId, incoming: usize },
    #[error("commit conflict: {0}")]
    Conflict(String),
    #[error("invalid atom: {0}")]
    InvalidAtom(String),
}

impl StoreError {
    /// Conflicts are retryable against a fresh snapshot; everything else is a malformed request.
    pub fn is_retryable(&self) -> bool {
        matches!(self, StoreError::Conflict(_))
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// Work counters shared by a store and all of its snapshots.
#[derive(Debug, Default)]
pub struct StoreStats {
    index_inspections: AtomicU64,
    match_attempts: AtomicU64,
}

impl StoreStats {
    /// Records yielded by type-index scans since the last reset.
    pub fn index_inspections(&self) -> u64 {
        self.index_inspections.load(Ordering::Relaxed)
    }

    /// Anchored match attempts since the last reset.
    pub fn match_attempts(&self) -> u64 {
        self.match_attempts.load(Ordering::Relaxed)
    }

    pub fn record_match_attempt(&self) {
        self.match_attempts.fetch_add(1, Ordering::Relaxed);
    }

    pub fn reset(&self) {
        self.index_inspections.store(0, Ordering::Relaxed);
        self.match_attempts.store(0, Ordering::Relaxed);
    }
}

#[derive(Debug, Clone, Default)]
struct State {
    version: u64,
    next_id: u64,
    atoms: BTreeMap<AtomId, Atom>,
    by_key: HashMap<AtomKey, AtomId>,
    by_type: HashMap<String, BTreeSet<AtomId>>,
    incoming: HashMap<AtomId, BTreeSet<AtomId>>,
}

enum Undo {
    Created(AtomId),
    Revised(AtomId, Option<TruthValue>),
    Removed(AtomId, Atom),
}

static NO_ATOMS: BTreeSet<AtomId> = BTreeSet::new();

impl State {
    fn index(&mut self, id: AtomId, atom: Atom) {
        self.by_type.entry(atom.type_name().to_string()).or_default().insert(id);
        for t in atom.targets() {
            self.incoming.entry(*t).or_default().insert(id);
        }
        self.by_key.insert(atom.key.clone(), id);
        self.atoms.insert(id, atom);
    }

    fn unindex(&mut self, id: AtomId) -> Option<Atom> {
        let atom = self.atoms.remove(&id)?;
        self.by_key.remove(&atom.key);
        if let Some(set) = self.by_type.get_mut(atom.type_name()) {
            set.remove(&id);
            if set.is_empty() {
                self.by_type.remove(atom.type_name());
            }
        }
        for t in atom.targets() {
            if let Some(set) = self.incoming.get_mut(t) {
                set.remove(&id);
                if set.is_empty() {
                    self.incoming.remove(t);
                }
            }
        }
        self.incoming.remove(&id);
        Some(atom)
    }

    fn insert_key(&mut self, key: AtomKey, tv: Option<&TruthValue>, undo: &mut Vec<Undo>) -> AtomId {
        if let Some(&id) = self.by_key.get(&key) {
            if let Some(tv) = tv {
                let atom = self.atoms.get_mut(&id).expect("indexed atom present");
                let before = atom.tv.clone();
                let replaced = match &mut atom.tv {
                    Some(current) => current.revise(tv),
                    None => {
                        atom.tv = Some(tv.clone());
                        true
                    }
                };
                if replaced {
                    undo.push(Undo::Revised(id, before));
                }
            }
            return id;
        }
        let id = AtomId(self.next_id);
        self.next_id += 1;
        self.index(id, Atom { key, tv: tv.cloned() });
        undo.push(Undo::Created(id));
        id
    }

    fn insert_spec(
        &mut self,
        spec: &AtomSpec,
        tv: Option<&TruthValue>,
        base: Option<&State>,
        undo: &mut Vec<Undo>,
    ) -> Result<AtomId> {
        let key = match spec {
            AtomSpec::Existing(id) => {
                if !self.atoms.contains_key(id) {
                    return Err(if base.is_some_and(|b| b.atoms.contains_key(id)) {
                        StoreError::Conflict(format!("{id} was removed after the base snapshot"))
                    } else {
                        StoreError::UnknownAtom(*id)
                    });
                }
                let atom = &self.atoms[id];
                atom.key.clone()
            }
            AtomSpec::Node { type_name, name } => {
                if type_name.is_empty() || name.is_empty() {
                    return Err(StoreError::InvalidAtom(
                        "nodes need a nonempty type name and name".into(),
                    ));
                }
                AtomKey::Node {
                    type_name: type_name.clone(),
                    name: name.clone(),
                }
            }
            AtomSpec::Link { type_name, targets } => {
                if type_name.is_empty() {
                    return Err(StoreError::InvalidAtom("links need a nonempty type name".into()));
                }
                let targets = targets
                    .iter()
                    .map(|t| self.insert_spec(t, None, base, undo))
                    .collect::<Result<Vec<_>>>()?;
                AtomKey::Link {
                    type_name: type_name.clone(),
                    targets,
                }
            }
        };
        Ok(self.insert_key(key, tv, undo))
    }

    /// `base: None` means the batch was built against the current state.
    fn remove_checked(&mut self, id: AtomId, base: Option<&State>, undo: &mut Vec<Undo>) -> Result<()> {
        if !self.atoms.contains_key(&id) {
            return Err(if base.is_some_and(|b| b.atoms.contains_key(&id)) {
                StoreError::Conflict(format!("{id} no longer resolves"))
            } else {
                StoreError::UnknownAtom(id)
            });
        }
        if let Some(inc) = self.incoming.get(&id).filter(|s| !s.is_empty()) {
            let before = base.map_or(inc, |b| b.incoming.get(&id).unwrap_or(&NO_ATOMS));
            if inc.iter().any(|l| !before.contains(l)) {
                return Err(StoreError::Conflict(format!(
                    "{id} gained incoming links since the base snapshot"
                )));
            }
            return Err(StoreError::HasIncoming {
                atom: id,
                incoming: inc.len(),
            });
        }
        let atom = self.unindex(id).expect("checked above");
        undo.push(Undo::Removed(id, atom));
        Ok(())
    }

    fn rollback(&mut self, undo: Vec<Undo>, next_id: u64) {
        for step in undo.into_iter().rev() {
            match step {
                Undo::Created(id) => {
                    self.unindex(id);
                }
                Undo::Revised(id, tv) => {
                    if let Some(atom) = self.atoms.get_mut(&id) {
                        atom.tv = tv;
                    }
                }
                Undo::Removed(id, atom) => self.index(id, atom),
            }
        }
        self.next_id = next_id;
    }
}

/// Result of a successful commit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Committed {
    /// Store version after the commit.
    pub version: u64,
    /// Ids of the additions, parallel to the batch.
    pub ids: Vec<AtomId>,
    /// Atoms that did not exist before (including nested sub-atoms).
    pub created: Vec<AtomId>,
    /// Pre-existing atoms whose truth value was replaced by revision.
    pub revised: Vec<AtomId>,
    pub removed: usize,
}

impl Committed {
    pub fn changed(&self) -> bool {
        !self.created.is_empty() || !self.revised.is_empty() || self.removed > 0
    }
}

/// The mutable store. Cheap to share between threads by reference.
#[derive(Debug, Default)]
pub struct Store {
    state: RwLock<Arc<State>>,
    stats: Arc<StoreStats>,
}

impl Clone for Store {
    fn clone(&self) -> Self {
        Store::from_snapshot(&self.snapshot())
    }
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    /// A new independent store whose contents equal the snapshot.
    pub fn from_snapshot(snap: &Snapshot) -> Self {
        Self {
            state: RwLock::new(snap.state.clone()),
            stats: Arc::new(StoreStats::default()),
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            state: self.state.read().expect("store lock poisoned").clone(),
            stats: self.stats.clone(),
        }
    }

    pub fn stats(&self) -> &StoreStats {
        &self.stats
    }

    pub fn version(&self) -> u64 {
        self.state.read().expect("store lock poisoned").version
    }

    pub fn len(&self) -> usize {
        self.state.read().expect("store lock poisoned").atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Applies a batch atomically: additions in order, then removals in order.
    ///
    /// A stale `base` is fine as long as the batch still validates. The commit
    /// conflicts when a removal target vanished or gained incoming links since
    /// `base`, or when an addition references an atom removed since `base`.
    pub fn commit(&self, base: &Snapshot, additions: &[NewAtom], removals: &[AtomId]) -> Result<Committed> {
        self.apply(Some(&base.state), additions, removals)
    }

    /// Commit against the current state. Holding no snapshot lets the state
    /// be updated in place instead of copied.
    pub fn commit_current(&self, additions: &[NewAtom], removals: &[AtomId]) -> Result<Committed> {
        self.apply(None, additions, removals)
    }

    fn apply(&self, base: Option<&State>, additions: &[NewAtom], removals: &[AtomId]) -> Result<Committed> {
        let mut guard = self.state.write().expect("store lock poisoned");
        let state = Arc::make_mut(&mut guard);
        let next_id = state.next_id;
        let mut undo = Vec::new();
        let outcome = (|| {
            let mut ids = Vec::with_capacity(additions.len());
            for a in additions {
                ids.push(state.insert_spec(&a.spec, a.tv.as_ref(), base, &mut undo)?);
            }
            for &r in removals {
                state.remove_checked(r, base, &mut undo)?;
            }
            Ok(ids)
        })();
        match outcome {
            Ok(ids) => {
                let mut created = Vec::new();
                let mut revised = Vec::new();
                let mut removed = 0;
                for u in &undo {
                    match u {
                        Undo::Created(id) => created.push(*id),
                        Undo::Revised(id, _) => revised.push(*id),
                        Undo::Removed(..) => removed += 1,
                    }
                }
                // atoms created and removed inside one batch are not "created"
                created.retain(|id| state.atoms.contains_key(id));
                if !undo.is_empty() {
                    state.version += 1;
                }
                Ok(Committed {
                    version: state.version,
                    ids,
                    created,
                    revised,
                    removed,
                })
            }
            Err(e) => {
                state.rollback(undo, next_id);
                Err(e)
            }
        }
    }

    /// Single-addition commit against the current state.
    pub fn add(&self, atom: NewAtom) -> Result<AtomId> {
        Ok(self.commit_current(std::slice::from_ref(&atom), &[])?.ids[0])
    }

    pub fn add_node(&self, type_name: &str, name: &str, tv: Option<TruthValue>) -> Result<AtomId> {
        self.add(NewAtom {
            spec: AtomSpec::node(type_name, name),
            tv,
        })
    }

    pub fn add_link(&self, type_name: &str, targets: &[AtomId], tv: Option<TruthValue>) -> Result<AtomId> {
        let spec = AtomSpec::link(type_name, targets.iter().copied().map(AtomSpec::Existing).collect());
        self.add(NewAtom { spec, tv })
    }

    pub fn remove(&self, id: AtomId) -> Result<()> {
        self.commit_current(&[], &[id]).map(|_| ())
    }

    pub fn resolve(&self, id: AtomId) -> Result<Atom> {
        self.snapshot().resolve(id).cloned()
    }

    pub fn incoming(&self, id: AtomId) -> Result<BTreeSet<AtomId>> {
        Ok(self.snapshot().incoming(id)?.collect())
    }

    pub fn atoms_of_type(&self, type_name: &str) -> Vec<AtomId> {
        self.snapshot().atoms_of_type(type_name).collect()
    }
}

/// Immutable view of the store at one version.
#[derive(Debug, Clone)]
pub struct Snapshot {
    state: Arc<State>,
    stats: Arc<StoreStats>,
}

impl Snapshot {
    pub fn version(&self) -> u64 {
        self.state.version
    }

    pub fn stats(&self) -> &StoreStats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.state.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.atoms.is_empty()
    }

    pub fn contains(&self, id: AtomId) -> bool {
        self.state.atoms.contains_key(&id)
    }

    pub fn resolve(&self, id: AtomId) -> Result<&Atom> {
        self.state.atoms.get(&id).ok_or(StoreError::UnknownAtom(id))
    }

    pub fn is_variable(&self, id: AtomId) -> bool {
        self.state.atoms.get(&id).is_some_and(Atom::is_variable)
    }

    /// All atoms in id order.
    pub fn atoms(&self) -> impl Iterator<Item = (AtomId, &Atom)> + '_ {
        self.state.atoms.iter().map(|(id, a)| (*id, a))
    }

    pub fn ids(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.state.atoms.keys().copied()
    }

    /// Links whose target list contains `id`.
    pub fn incoming(&self, id: AtomId) -> Result<impl Iterator<Item = AtomId> + '_> {
        if !self.contains(id) {
            return Err(StoreError::UnknownAtom(id));
        }
        Ok(self.state.incoming.get(&id).unwrap_or(&NO_ATOMS).iter().copied())
    }

    pub fn incoming_count(&self, id: AtomId) -> usize {
        self.state.incoming.get(&id).map_or(0, BTreeSet::len)
    }

    /// Index-backed scan; every yielded record bumps the inspection counter.
    pub fn atoms_of_type<'a>(&'a self, type_name: &str) -> TypeScan<'a> {
        TypeScan {
            inner: self.state.by_type.get(type_name).unwrap_or(&NO_ATOMS).iter(),
            stats: &self.stats,
        }
    }

    /// Number of atoms of a type, without touching the inspection counter.
    pub fn type_count(&self, type_name: &str) -> usize {
        self.state.by_type.get(type_name).map_or(0, BTreeSet::len)
    }

    pub fn type_counts(&self) -> BTreeMap<String, usize> {
        self.state.by_type.iter().map(|(k, v)| (k.clone(), v.len())).collect()
    }

    pub fn lookup(&self, key: &AtomKey) -> Option<AtomId> {
        self.state.by_key.get(key).copied()
    }

    /// Id of the atom a specification denotes, if it is present.
    pub fn lookup_spec(&self, spec: &AtomSpec) -> Option<AtomId> {
        match spec {
            AtomSpec::Existing(id) => self.contains(*id).then_some(*id),
            AtomSpec::Node { type_name, name } => self.lookup(&AtomKey::Node {
                type_name: type_name.clone(),
                name: name.clone(),
            }),
            AtomSpec::Link { type_name, targets } => {
                let targets = targets
                    .iter()
                    .map(|t| self.lookup_spec(t))
                    .collect::<Option<Vec<_>>>()?;
                self.lookup(&AtomKey::Link {
                    type_name: type_name.clone(),
                    targets,
                })
            }
        }
    }

    /// Fully structural specification of a stored atom.
    pub fn spec_of(&self, id: AtomId) -> Result<AtomSpec> {
        let atom = self.resolve(id)?;
        Ok(match &atom.key {
            AtomKey::Node { type_name, name } => AtomSpec::node(type_name.clone(), name.clone()),
            AtomKey::Link { type_name, targets } => AtomSpec::link(
                type_name.clone(),
                targets.iter().map(|t| self.spec_of(*t)).collect::<Result<_>>()?,
            ),
        })
    }

    /// Replaces `Existing` leaves by their structure.
    pub fn expand(&self, spec: &AtomSpec) -> Result<AtomSpec> {
        match spec {
            AtomSpec::Existing(id) => self.spec_of(*id),
            AtomSpec::Node { .. } => Ok(spec.clone()),
            AtomSpec::Link { type_name, targets } => Ok(AtomSpec::link(
                type_name.clone(),
                targets.iter().map(|t| self.expand(t)).collect::<Result<_>>()?,
            )),
        }
    }

    /// `(system node, type expression)` pairs recorded for `id` via `Typed` links.
    pub fn annotations(&self, id: AtomId) -> Vec<(AtomId, AtomId)> {
        let Some(inc) = self.state.incoming.get(&id) else {
            return Vec::new();
        };
        inc.iter()
            .filter_map(|l| {
                let link = &self.state.atoms[l];
                match link.targets() {
                    [atom, sys, ty] if link.type_name() == TYPED && *atom == id => Some((*sys, *ty)),
                    _ => None,
                }
            })
            .collect()
    }
}

pub struct TypeScan<'a> {
    inner: std::collections::btree_set::Iter<'a, AtomId>,
    stats: &'a StoreStats,
}

impl Iterator for TypeScan<'_> {
    type Item = AtomId;

    fn next(&mut self) -> Option<AtomId> {
        let id = self.inner.next()?;
        self.stats.index_inspections.fetch_add(1, Ordering::Relaxed);
        Some(*id)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.inner.size_hint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tv(s: (i64, i64), c: (i64, i64)) -> TruthValue {
        TruthValue::from_fractions(s, c)
    }

    #[test]
    fn nodes_are_content_addressed() {
        let store = Store::new();
        let a = store.add_node("Concept", "cat", None).unwrap();
        let b = store.add_node("Concept", "cat", None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, store.add_node("Predicate", "cat", None).unwrap());
        assert_eq!(store.len(), 2);
    }

    #[test]
    fn duplicate_insert_revises_by_confidence() {
        let store = Store::new();
        let n = store.add_node("Concept", "cat", Some(tv((8, 10), (9, 10)))).unwrap();
        let again = store.add_node("Concept", "cat", Some(tv((9, 10), (1, 2)))).unwrap();
        assert_eq!(n, again);
        assert_eq!(store.resolve(n).unwrap().tv, Some(tv((8, 10), (9, 10))));
    }

    #[test]
    fn variables_are_ordinary_nodes() {
        let store = Store::new();
        let x = store.add_node(VARIABLE, "$x", None).unwrap();
        assert!(store.resolve(x).unwrap().is_variable());
        assert_eq!(store.atoms_of_type(VARIABLE), vec![x]);
    }

    #[test]
    fn links_dedupe_and_nest() {
        let store = Store::new();
        let cat = store.add_node("Concept", "cat", None).unwrap();
        let animal = store.add_node("Concept", "animal", None).unwrap();
        let l1 = store.add_link("Inheritance", &[cat, animal], None).unwrap();
        let l2 = store.add_link("Inheritance", &[cat, animal], None).unwrap();
        assert_eq!(l1, l2);

        let fish = store.add_node("Concept", "fish", None).unwrap();
        let likes = store.add_node("Predicate", "likes", None).unwrap();
        let list = store.add_link("List", &[cat, fish], None).unwrap();
        let eval = store.add_link("Evaluation", &[likes, list], None).unwrap();
        let atom = store.resolve(eval).unwrap();
        assert_eq!(atom.targets(), &[likes, list]);
        assert!(store.resolve(atom.targets()[1]).unwrap().is_link());
    }

    #[test]
    fn dangling_target_is_rejected() {
        let store = Store::new();
        let err = store.add_link("Inheritance", &[AtomId(99)], None).unwrap_err();
        assert_eq!(err, StoreError::UnknownAtom(AtomId(99)));
        assert!(store.is_empty());
    }

    #[test]
    fn resolve_preserves_target_order_and_duplicates() {
        let store = Store::new();
        let a = store.add_node("Concept", "a", None).unwrap();
        let b = store.add_node("Concept", "b", None).unwrap();
        let l = store.add_link("List", &[b, a, b], None).unwrap();
        assert_eq!(store.resolve(l).unwrap().targets(), &[b, a, b]);
        assert_eq!(store.incoming(b).unwrap().len(), 1);
        assert_ne!(l, store.add_link("List", &[a, b, b], None).unwrap());
    }

    #[test]
    fn incoming_index() {
        let store = Store::new();
        let cat = store.add_node("Concept", "cat", None).unwrap();
        let animal = store.add_node("Concept", "animal", None).unwrap();
        let pet = store.add_node("Concept", "pet", None).unwrap();
        let lone = store.add_node("Concept", "lone", None).unwrap();
        let l1 = store.add_link("Inheritance", &[cat, animal], None).unwrap();
        let l2 = store.add_link("Inheritance", &[cat, pet], None).unwrap();
        assert_eq!(store.incoming(animal).unwrap(), BTreeSet::from([l1]));
        assert_eq!(store.incoming(cat).unwrap(), BTreeSet::from([l1, l2]));
        assert!(store.incoming(lone).unwrap().is_empty());
        assert!(store.incoming(AtomId(1000)).is_err());
    }

    #[test]
    fn removal_requires_no_incoming() {
        let store = Store::new();
        let cat = store.add_node("Concept", "cat", None).unwrap();
        let animal = store.add_node("Concept", "animal", None).unwrap();
        let lone = store.add_node("Concept", "lone", None).unwrap();
        let l = store.add_link("Inheritance", &[cat, animal], None).unwrap();

        store.remove(lone).unwrap();
        assert_eq!(store.resolve(lone), Err(StoreError::UnknownAtom(lone)));
        assert_eq!(store.remove(lone), Err(StoreError::UnknownAtom(lone)));

        assert!(matches!(store.remove(animal), Err(StoreError::HasIncoming { .. })));
        store.remove(l).unwrap();
        store.remove(animal).unwrap();
        assert_eq!(store.atoms_of_type("Inheritance"), Vec::<AtomId>::new());
    }

    #[test]
    fn type_index_tracks_removals() {
        let store = Store::new();
        let mut links = Vec::new();
        for i in 0..3 {
            let a = store.add_node("Concept", &format!("a{i}"), None).unwrap();
            let b = store.add_node("Concept", &format!("b{i}"), None).unwrap();
            links.push(store.add_link("Inheritance", &[a, b], None).unwrap());
        }
        assert_eq!(store.atoms_of_type("Inheritance").len(), 3);
        assert!(store.atoms_of_type("NoSuchType").is_empty());
        store.remove(links[1]).unwrap();
        assert_eq!(store.atoms_of_type("Inheritance").len(), 2);
    }

    #[test]
    fn snapshots_are_isolated() {
        let store = Store::new();
        store.add_node("Concept", "a", None).unwrap();
        let s1 = store.snapshot();
        let s2 = store.snapshot();
        assert_eq!(s1.version(), s2.version());
        let b = store.add_node("Concept", "b", None).unwrap();
        assert!(!s1.contains(b));
        assert!(store.snapshot().version() > s1.version());
    }

    #[test]
    fn empty_batch_is_identity() {
        let store = Store::new();
        store.add_node("Concept", "a", None).unwrap();
        let before = store.snapshot();
        let c = store.commit(&before, &[], &[]).unwrap();
        assert!(!c.changed());
        assert_eq!(c.version, before.version());
        assert_eq!(store.snapshot().dump(), before.dump());
    }

    #[test]
    fn stale_base_without_conflict_commits() {
        let store = Store::new();
        let lone = store.add_node("Concept", "lone", None).unwrap();
        let base = store.snapshot();
        store.add_node("Concept", "other", None).unwrap();
        let c = store
            .commit(&base, &[NewAtom::new(AtomSpec::node("Concept", "x"))], &[lone])
            .unwrap();
        assert_eq!(c.removed, 1);
    }

    #[test]
    fn removal_conflicts_with_new_incoming() {
        let store = Store::new();
        let animal = store.add_node("Concept", "animal", None).unwrap();
        let base = store.snapshot();
        let cat = store.add_node("Concept", "cat", None).unwrap();
        store.add_link("Inheritance", &[cat, animal], None).unwrap();
        let err = store.commit(&base, &[], &[animal]).unwrap_err();
        assert!(err.is_retryable(), "{err}");
    }

    #[test]
    fn removal_conflicts_when_target_vanished() {
        let store = Store::new();
        let a = store.add_node("Concept", "a", None).unwrap();
        let base = store.snapshot();
        store.remove(a).unwrap();
        assert!(store.commit(&base, &[], &[a]).unwrap_err().is_retryable());
        let err = store
            .commit(
                &base,
                &[NewAtom::new(AtomSpec::link("List", vec![AtomSpec::Existing(a)]))],
                &[],
            )
            .unwrap_err();
        assert!(err.is_retryable());
    }

    #[test]
    fn failed_batch_leaves_no_trace() {
        let store = Store::new();
        let a = store.add_node("Concept", "a", None).unwrap();
        let b = store.add_node("Concept", "b", Some(tv((1, 2), (1, 2)))).unwrap();
        store.add_link("List", &[a], None).unwrap();
        let before = store.snapshot();
        let batch = vec![
            NewAtom::new(AtomSpec::node("Concept", "fresh")),
            NewAtom::with_tv(AtomSpec::node("Concept", "b"), tv((1, 1), (1, 1))),
        ];
        assert!(store.commit(&before, &batch, &[a]).is_err());
        let after = store.snapshot();
        assert_eq!(after.dump(), before.dump());
        assert_eq!(after.version(), before.version());
        assert_eq!(after.resolve(b).unwrap().tv, Some(tv((1, 2), (1, 2))));
        // ids are not burnt by the failed batch
        let next = store.add_node("Concept", "next", None).unwrap();
        assert_eq!(next.raw(), 3);
    }

    #[test]
    fn batch_removes_link_then_target() {
        let store = Store::new();
        let a = store.add_node("Concept", "a", None).unwrap();
        let l = store.add_link("List", &[a], None).unwrap();
        let base = store.snapshot();
        store.commit(&base, &[], &[l, a]).unwrap();
        assert!(store.is_empty());
    }

    #[test]
    fn lookup_spec_mixes_structure_and_ids() {
        let store = Store::new();
        let cat = store.add_node("Concept", "cat", None).unwrap();
        let animal = store.add_node("Concept", "animal", None).unwrap();
        let l = store.add_link("Inheritance", &[cat, animal], None).unwrap();
        let snap = store.snapshot();
        let spec = AtomSpec::link(
            "Inheritance",
            vec![AtomSpec::Existing(cat), AtomSpec::node("Concept", "animal")],
        );
        assert_eq!(snap.lookup_spec(&spec), Some(l));
        assert_eq!(snap.spec_of(l).unwrap(), snap.expand(&spec).unwrap());
        assert_eq!(snap.lookup_spec(&AtomSpec::node("Concept", "dog")), None);
    }
}
