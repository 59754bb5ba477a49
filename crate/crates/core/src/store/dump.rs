//! Canonical textual dump: one S-expression per atom, sorted by
//! (type name, name, serialized targets).

use std::collections::HashMap;
use std::fmt::Write;

use super::{AtomId, AtomKey, AtomSpec, Result, Snapshot};

/// Quotes a node name with backslash escapes.
pub fn quote_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

struct Renderer<'a> {
    snap: &'a Snapshot,
    memo: HashMap<AtomId, String>,
}

impl Renderer<'_> {
    fn render(&mut self, id: AtomId) -> String {
        if let Some(s) = self.memo.get(&id) {
            return s.clone();
        }
        let atom = &self.snap.state.atoms[&id];
        let text = match &atom.key {
            AtomKey::Node { type_name, name } => format!("({type_name} {})", quote_string(name)),
            AtomKey::Link { type_name, targets } => {
                let mut s = format!("({type_name}");
                for t in targets {
                    s.push(' ');
                    s.push_str(&self.render(*t));
                }
                s.push(')');
                s
            }
        };
        self.memo.insert(id, text.clone());
        text
    }
}

impl Snapshot {
    /// S-expression of an atom without its truth value.
    pub fn render(&self, id: AtomId) -> Result<String> {
        self.resolve(id)?;
        Ok(Renderer {
            snap: self,
            memo: HashMap::new(),
        }
        .render(id))
    }

    /// Renders a specification; `Existing` leaves are expanded.
    pub fn render_spec(&self, spec: &AtomSpec) -> Result<String> {
        Ok(match spec {
            AtomSpec::Existing(id) => self.render(*id)?,
            AtomSpec::Node { type_name, name } => format!("({type_name} {})", quote_string(name)),
            AtomSpec::Link { type_name, targets } => {
                let mut s = format!("({type_name}");
                for t in targets {
                    s.push(' ');
                    s.push_str(&self.render_spec(t)?);
                }
                s.push(')');
                s
            }
        })
    }

    /// The canonical dump. Byte-identical for structurally equal stores.
    pub fn dump(&self) -> String {
        let mut r = Renderer {
            snap: self,
            memo: HashMap::with_capacity(self.len()),
        };
        let mut rows: Vec<(&str, &str, Vec<String>, AtomId)> = self
            .atoms()
            .map(|(id, atom)| {
                let targets = atom.targets().iter().map(|t| r.render(*t)).collect();
                (atom.type_name(), atom.name(), targets, id)
            })
            .collect();
        rows.sort();
        let mut out = String::new();
        for (_, _, _, id) in rows {
            let text = r.render(id);
            match &self.state.atoms[&id].tv {
                Some(tv) => {
                    let _ = writeln!(out, "{} {tv})", &text[..text.len() - 1]);
                }
                None => {
                    let _ = writeln!(out, "{text}");
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Store;
    use crate::truth::TruthValue;

    #[test]
    fn quoting_escapes() {
        assert_eq!(quote_string("a\"b\\c\n"), "\"a\\\"b\\\\c\\n\"");
    }

    #[test]
    fn dump_is_sorted_and_carries_truth_values() {
        let store = Store::new();
        let cat = store.add_node("Concept", "cat", None).unwrap();
        let animal = store
            .add_node("Concept", "animal", Some(TruthValue::from_fractions((1, 2), (3, 4))))
            .unwrap();
        store
            .add_link("Inheritance", &[cat, animal], Some(TruthValue::certain()))
            .unwrap();
        let dump = store.snapshot().dump();
        assert_eq!(
            dump,
            "(Concept \"animal\" (tv 1/2 3/4))\n\
             (Concept \"cat\")\n\
             (Inheritance (Concept \"cat\") (Concept \"animal\") (tv 1 1))\n"
        );
    }

    #[test]
    fn dump_independent_of_insertion_order() {
        let a = Store::new();
        let x = a.add_node("Concept", "x", None).unwrap();
        let y = a.add_node("Concept", "y", None).unwrap();
        a.add_link("List", &[x, y], None).unwrap();
        let b = Store::new();
        let y = b.add_node("Concept", "y", None).unwrap();
        let x = b.add_node("Concept", "x", None).unwrap();
        b.add_link("List", &[x, y], None).unwrap();
        assert_eq!(a.snapshot().dump(), b.snapshot().dump());
    }
}
