use std::fmt;

use crate::truth::TruthValue;

/// Type name of ordinary pattern variables.
pub const VARIABLE: &str = "Variable";
/// Type name of subgraph variables; they currently bind exactly like [`VARIABLE`].
pub const SUBGRAPH_VARIABLE: &str = "SubgraphVariable";
/// Link type recording a type annotation: `(Typed atom (TypeSystem name) typeExpr)`.
pub const TYPED: &str = "Typed";
/// Node type naming a registered type system.
pub const TYPE_SYSTEM: &str = "TypeSystem";

pub fn is_variable_type(type_name: &str) -> bool {
    type_name == VARIABLE || type_name == SUBGRAPH_VARIABLE
}

/// Stable handle for an atom within one store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub(crate) u64);

impl AtomId {
    pub fn raw(self) -> u64 {
        self.0
    }
}

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Structural identity of an atom. Two atoms with equal keys are the same atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomKey {
    Node { type_name: String, name: String },
    Link { type_name: String, targets: Vec<AtomId> },
}

impl AtomKey {
    pub fn type_name(&self) -> &str {
        match self {
            AtomKey::Node { type_name, .. } | AtomKey::Link { type_name, .. } => type_name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomKind {
    Node,
    Link,
}

/// A stored atom: its structural key plus an optional truth value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub key: AtomKey,
    pub tv: Option<TruthValue>,
}

impl Atom {
    pub fn kind(&self) -> AtomKind {
        match self.key {
            AtomKey::Node { .. } => AtomKind::Node,
            AtomKey::Link { .. } => AtomKind::Link,
        }
    }

    pub fn type_name(&self) -> &str {
        self.key.type_name()
    }

    /// Node name; empty for links.
    pub fn name(&self) -> &str {
        match &self.key {
            AtomKey::Node { name, .. } => name,
            AtomKey::Link { .. } => "",
        }
    }

    /// Ordered targets; empty for nodes.
    pub fn targets(&self) -> &[AtomId] {
        match &self.key {
            AtomKey::Node { .. } => &[],
            AtomKey::Link { targets, .. } => targets,
        }
    }

    pub fn is_node(&self) -> bool {
        matches!(self.key, AtomKey::Node { .. })
    }

    pub fn is_link(&self) -> bool {
        !self.is_node()
    }

    pub fn is_variable(&self) -> bool {
        self.is_node() && is_variable_type(self.type_name())
    }
}

/// An atom described by structure rather than by id.
///
/// Specifications are how atoms enter the store, how pattern clauses are
/// written and what rule instantiation produces. `Existing` leaves refer to
/// atoms already in the store, e.g. the value a variable was bound to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomSpec {
    Node { type_name: String, name: String },
    Link { type_name: String, targets: Vec<AtomSpec> },
    Existing(AtomId),
}

impl AtomSpec {
    pub fn node(type_name: impl Into<String>, name: impl Into<String>) -> Self {
        AtomSpec::Node {
            type_name: type_name.into(),
            name: name.into(),
        }
    }

    pub fn link(type_name: impl Into<String>, targets: Vec<AtomSpec>) -> Self {
        AtomSpec::Link {
            type_name: type_name.into(),
            targets,
        }
    }

    pub fn var(name: impl Into<String>) -> Self {
        AtomSpec::node(VARIABLE, name)
    }

    /// The variable this spec denotes, if it is a variable node.
    pub fn as_variable(&self) -> Option<Variable> {
        match self {
            AtomSpec::Node { type_name, name } if is_variable_type(type_name) => Some(Variable {
                subgraph: type_name == SUBGRAPH_VARIABLE,
                name: name.clone(),
            }),
            _ => None,
        }
    }

    /// Collects every variable occurring anywhere in the spec.
    pub fn collect_variables(&self, out: &mut std::collections::BTreeSet<Variable>) {
        match self {
            AtomSpec::Node { .. } => out.extend(self.as_variable()),
            AtomSpec::Link { targets, .. } => {
                for t in targets {
                    t.collect_variables(out);
                }
            }
            AtomSpec::Existing(_) => {}
        }
    }

    pub fn variables(&self) -> std::collections::BTreeSet<Variable> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    pub fn is_ground(&self) -> bool {
        match self {
            AtomSpec::Node { .. } => self.as_variable().is_none(),
            AtomSpec::Link { targets, .. } => targets.iter().all(AtomSpec::is_ground),
            AtomSpec::Existing(_) => true,
        }
    }

    pub fn type_name(&self) -> Option<&str> {
        match self {
            AtomSpec::Node { type_name, .. } | AtomSpec::Link { type_name, .. } => Some(type_name),
            AtomSpec::Existing(_) => None,
        }
    }
}

/// A pattern variable, identified the same way its variable node is.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable {
    pub subgraph: bool,
    pub name: String,
}

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            subgraph: false,
            name: name.into(),
        }
    }

    pub fn to_spec(&self) -> AtomSpec {
        let ty = if self.subgraph { SUBGRAPH_VARIABLE } else { VARIABLE };
        AtomSpec::node(ty, self.name.clone())
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// An addition in a commit batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewAtom {
    pub spec: AtomSpec,
    pub tv: Option<TruthValue>,
}

impl NewAtom {
    pub fn new(spec: AtomSpec) -> Self {
        Self { spec, tv: None }
    }

    pub fn with_tv(spec: AtomSpec, tv: TruthValue) -> Self {
        Self { spec, tv: Some(tv) }
    }
}

impl From<AtomSpec> for NewAtom {
    fn from(spec: AtomSpec) -> Self {
        NewAtom::new(spec)
    }
}
