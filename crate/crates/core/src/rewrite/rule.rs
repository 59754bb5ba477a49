use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_traits::One;

use super::{Result, RewriteError};
use crate::store::{AtomId, AtomSpec, NewAtom, Snapshot, Store};
use crate::truth::{Ratio, TruthValue};

/// Link type of stored rules: `(Rule (And premise...) conclusion [(Formula name)])`.
pub const RULE: &str = "Rule";
const AND: &str = "And";
const FORMULA: &str = "Formula";

/// How a conclusion's truth value follows from the premises and the rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum TvFormula {
    /// strength = rule.s * prod(premise.s); confidence = rule.c * prod(premise.c)
    #[default]
    Product,
    /// strength = rule.s * min(premise.s); confidence = rule.c * min(premise.c)
    Minimum,
}

impl TvFormula {
    pub fn name(self) -> &'static str {
        match self {
            TvFormula::Product => "product",
            TvFormula::Minimum => "min",
        }
    }

    pub fn apply(self, rule: &TruthValue, premises: &[TruthValue]) -> TruthValue {
        let fold = |get: fn(&TruthValue) -> &Ratio| -> Ratio {
            match self {
                TvFormula::Product => premises.iter().map(get).fold(Ratio::one(), |acc, x| acc * x),
                TvFormula::Minimum => premises.iter().map(get).min().cloned().unwrap_or_else(Ratio::one),
            }
        };
        let s = rule.strength() * fold(TruthValue::strength);
        let c = rule.confidence() * fold(TruthValue::confidence);
        TruthValue::new(s, c).expect("products and minima of [0,1] values stay in [0,1]")
    }
}

impl fmt::Display for TvFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TvFormula {
    type Err = RewriteError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(TvFormula::Product),
            "min" => Ok(TvFormula::Minimum),
            other => Err(RewriteError::MalformedRule(format!("unknown formula `{other}`"))),
        }
    }
}

/// A premise pattern and a conclusion template, stored as a `Rule` link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    atom: AtomId,
    premises: Vec<AtomSpec>,
    conclusion: AtomSpec,
    tv: TruthValue,
    formula: TvFormula,
}

impl RewriteRule {
    /// Spec of the rule link, for storing it directly or inside a larger batch.
    pub fn spec(premises: &[AtomSpec], conclusion: &AtomSpec, formula: TvFormula) -> Result<AtomSpec> {
        if premises.is_empty() {
            return Err(RewriteError::MalformedRule("a rule needs at least one premise".into()));
        }
        let mut bound = BTreeSet::new();
        for p in premises {
            p.collect_variables(&mut bound);
        }
        if let Some(v) = conclusion.variables().into_iter().find(|v| !bound.contains(v)) {
            return Err(RewriteError::InventedVariable(v));
        }
        let mut targets = vec![AtomSpec::link(AND, premises.to_vec()), conclusion.clone()];
        if formula != TvFormula::Product {
            targets.push(AtomSpec::node(FORMULA, formula.name()));
        }
        Ok(AtomSpec::link(RULE, targets))
    }

    /// Validates the rule and adds it to the store.
    pub fn store(
        store: &Store,
        premises: Vec<AtomSpec>,
        conclusion: AtomSpec,
        tv: TruthValue,
        formula: TvFormula,
    ) -> Result<Self> {
        let spec = Self::spec(&premises, &conclusion, formula)?;
        let atom = store.add(NewAtom::with_tv(spec, tv))?;
        Self::from_atom(&store.snapshot(), atom)
    }

    /// Reads a rule back from its stored link.
    pub fn from_atom(snap: &Snapshot, atom: AtomId) -> Result<Self> {
        let link = snap.resolve(atom)?;
        let malformed = |why: &str| RewriteError::MalformedRule(format!("{atom}: {why}"));
        if link.type_name() != RULE {
            return Err(malformed("not a Rule link"));
        }
        let (premise, conclusion, formula) = match link.targets() {
            [p, c] => (*p, *c, TvFormula::Product),
            [p, c, f] => {
                let f = snap.resolve(*f)?;
                if f.type_name() != FORMULA {
                    return Err(malformed("third target must be a Formula node"));
                }
                (*p, *c, f.name().parse()?)
            }
            _ => return Err(malformed("expected premise and conclusion")),
        };
        let premise_link = snap.resolve(premise)?;
        if premise_link.type_name() != AND {
            return Err(malformed("premise must be an And link"));
        }
        let premises = premise_link
            .targets()
            .iter()
            .map(|t| snap.spec_of(*t))
            .collect::<Result<Vec<_>, _>>()?;
        let conclusion = snap.spec_of(conclusion)?;
        Self::spec(&premises, &conclusion, formula)?;
        Ok(Self {
            atom,
            premises,
            conclusion,
            tv: link.tv.clone().unwrap_or_else(TruthValue::certain),
            formula,
        })
    }

    pub fn atom(&self) -> AtomId {
        self.atom
    }

    pub fn premises(&self) -> &[AtomSpec] {
        &self.premises
    }

    pub fn conclusion(&self) -> &AtomSpec {
        &self.conclusion
    }

    pub fn tv(&self) -> &TruthValue {
        &self.tv
    }

    pub fn formula(&self) -> TvFormula {
        self.formula
    }
}

/// Every well-formed rule stored in the snapshot, in id order.
pub fn rules_in(snap: &Snapshot) -> Result<Vec<RewriteRule>> {
    let ids: Vec<AtomId> = snap.atoms_of_type(RULE).collect();
    ids.into_iter().map(|id| RewriteRule::from_atom(snap, id)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Variable;

    fn inh(a: AtomSpec, b: AtomSpec) -> AtomSpec {
        AtomSpec::link("Inheritance", vec![a, b])
    }

    #[test]
    fn invented_variables_are_rejected() {
        let store = Store::new();
        let err = RewriteRule::store(
            &store,
            vec![inh(AtomSpec::var("$x"), AtomSpec::var("$y"))],
            inh(AtomSpec::var("$x"), AtomSpec::var("$w")),
            TruthValue::certain(),
            TvFormula::Product,
        )
        .unwrap_err();
        assert_eq!(err, RewriteError::InventedVariable(Variable::new("$w")));
        assert!(store.is_empty());
    }

    #[test]
    fn rules_round_trip_through_the_store() {
        let store = Store::new();
        let tv = TruthValue::from_fractions((9, 10), (1, 2));
        let rule = RewriteRule::store(
            &store,
            vec![inh(AtomSpec::var("$x"), AtomSpec::var("$y"))],
            AtomSpec::link("Similarity", vec![AtomSpec::var("$y"), AtomSpec::var("$x")]),
            tv.clone(),
            TvFormula::Minimum,
        )
        .unwrap();
        let snap = store.snapshot();
        let all = rules_in(&snap).unwrap();
        assert_eq!(all, vec![rule.clone()]);
        assert_eq!(rule.tv(), &tv);
        assert_eq!(rule.formula(), TvFormula::Minimum);
        assert!(RewriteRule::from_atom(&snap, snap.lookup_spec(&AtomSpec::var("$x")).unwrap()).is_err());
    }

    #[test]
    fn formulas() {
        let rule = TruthValue::from_fractions((1, 2), (1, 1));
        let ps = [
            TruthValue::from_fractions((9, 10), (8, 10)),
            TruthValue::from_fractions((8, 10), (5, 10)),
        ];
        assert_eq!(
            TvFormula::Product.apply(&rule, &ps),
            TruthValue::from_fractions((36, 100), (4, 10))
        );
        assert_eq!(
            TvFormula::Minimum.apply(&rule, &ps),
            TruthValue::from_fractions((4, 10), (5, 10))
        );
    }
}
