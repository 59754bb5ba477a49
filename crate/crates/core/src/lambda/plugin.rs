use super::encode::CONST;
use super::{decode_term, typecheck_against, Signature, Term};
use crate::store::{AtomId, AtomKey, Snapshot, TYPE_SYSTEM};
use crate::typesys::{TypeSystemPlugin, TypeVerdict};

/// The lambda layer as a type system over encoded terms.
///
/// The signature is read from the snapshot: every `LambdaConst` node with
/// exactly one annotation under this system has that type. Other constants
/// are dynamically typed.
#[derive(Debug, Clone, Copy, Default)]
pub struct LambdaPlugin;

impl LambdaPlugin {
    pub const NAME: &'static str = "lambda";

    pub fn signature(snap: &Snapshot) -> Signature {
        let mut sig = Signature::new();
        let Some(sys) = snap.lookup(&AtomKey::Node {
            type_name: TYPE_SYSTEM.to_string(),
            name: Self::NAME.to_string(),
        }) else {
            return sig;
        };
        let consts: Vec<AtomId> = snap.atoms_of_type(CONST).collect();
        for c in consts {
            let types: Vec<AtomId> = snap
                .annotations(c)
                .into_iter()
                .filter(|(s, _)| *s == sys)
                .map(|(_, t)| t)
                .collect();
            if let [ty] = types[..] {
                if let (Ok(atom), Ok(ty)) = (snap.resolve(c), decode_term(snap, ty)) {
                    sig.declare(atom.name(), ty);
                }
            }
        }
        sig
    }
}

impl TypeSystemPlugin for LambdaPlugin {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn check(&self, snap: &Snapshot, atom: AtomId, types: &[AtomId]) -> TypeVerdict {
        let Ok(term) = decode_term(snap, atom) else {
            return TypeVerdict::Unknown;
        };
        let sig = Self::signature(snap);
        let all_ok = types.iter().all(|ty| match decode_term(snap, *ty) {
            Ok(ty) => typecheck_against(&sig, &term, &ty).is_ok(),
            Err(_) => false,
        });
        if all_ok {
            TypeVerdict::Accept
        } else {
            TypeVerdict::Reject
        }
    }

    fn types_consistent(&self, snap: &Snapshot, a: AtomId, b: AtomId) -> bool {
        match (decode_term(snap, a), decode_term(snap, b)) {
            (Ok(x), Ok(y)) => x.alpha_eq(&y),
            _ => a == b,
        }
    }
}

/// Declares `name : ty` in the store's signature under the lambda system.
pub fn declare_const(
    store: &crate::store::Store,
    registry: &crate::typesys::TypeRegistry,
    name: &str,
    ty: &Term,
) -> Result<AtomId, crate::typesys::TypeError> {
    let sys = registry
        .id_of(LambdaPlugin::NAME)
        .ok_or_else(|| crate::typesys::TypeError::UnknownSystem(LambdaPlugin::NAME.into()))?;
    let c = store.add_node(CONST, name, None)?;
    let t = store.add(crate::store::NewAtom::new(super::term_spec(ty)))?;
    registry.annotate(store, c, sys, t)?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::{ann, app, cnst, encode_term, lam, pi, var, Mult};
    use crate::store::Store;
    use crate::typesys::TypeRegistry;
    use std::sync::Arc;

    fn setup() -> (Store, TypeRegistry, crate::typesys::TypeSystemId) {
        let store = Store::new();
        let mut reg = TypeRegistry::new();
        let sys = reg.register(&store, Arc::new(LambdaPlugin)).unwrap();
        declare_const(&store, &reg, "Bool", &Term::Star).unwrap();
        declare_const(&store, &reg, "tt", &cnst("Bool")).unwrap();
        declare_const(
            &store,
            &reg,
            "pair",
            &pi(
                "a",
                Mult::Many,
                cnst("Bool"),
                pi("b", Mult::Many, cnst("Bool"), cnst("Bool")),
            ),
        )
        .unwrap();
        (store, reg, sys)
    }

    #[test]
    fn verdicts() {
        let (store, reg, sys) = setup();
        let id_ty = pi("x", Mult::One, cnst("Bool"), cnst("Bool"));
        let good = encode_term(&store, &lam("x", Mult::One, None, var("x"))).unwrap();
        let ty = encode_term(&store, &id_ty).unwrap();
        reg.annotate(&store, good, sys, ty).unwrap();
        let dup = encode_term(
            &store,
            &lam("x", Mult::One, None, app(app(cnst("pair"), var("x")), var("x"))),
        )
        .unwrap();
        reg.annotate(&store, dup, sys, ty).unwrap();
        let cat = store.add_node("Concept", "cat", None).unwrap();
        let snap = store.snapshot();
        assert_eq!(reg.check_atom(good, sys, &snap).unwrap(), TypeVerdict::Accept);
        assert_eq!(reg.check_atom(dup, sys, &snap).unwrap(), TypeVerdict::Reject);
        assert_eq!(reg.check_atom(cat, sys, &snap).unwrap(), TypeVerdict::Unknown);
        // annotated but not a lambda term: still outside this system
        reg.annotate(&store, cat, sys, ty).unwrap();
        assert_eq!(
            reg.check_atom(cat, sys, &store.snapshot()).unwrap(),
            TypeVerdict::Unknown
        );
    }

    #[test]
    fn signature_comes_from_annotations() {
        let (store, _reg, _) = setup();
        let sig = LambdaPlugin::signature(&store.snapshot());
        assert_eq!(sig.get("tt"), Some(&cnst("Bool")));
        assert_eq!(sig.get("nope"), None);
        let term = ann(cnst("tt"), cnst("Bool"));
        crate::lambda::typecheck(&sig, &term).unwrap();
    }
}
