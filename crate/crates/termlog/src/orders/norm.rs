//! Semi-linear norms and the term orders they induce.  A norm maps each
//! symbol to an offset plus the sum of the norms of a fixed subset of its
//! arguments; terms with variables get symbolic values, linear in the
//! (non-negative) norms of their variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::{wildcard_symbol, Atom, Symbol, Term};

use super::{Comparison, PositionFamily};

/// Norm contribution of one symbol: a constant offset plus the norms of the
/// counted argument positions.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct NormRule {
    pub offset: i64,
    pub counted: BTreeSet<usize>,
}

/// Rule applied to symbols without an explicit entry.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefaultRule {
    /// Offset 0, nothing counted.
    Zero,
    /// Offset 1, every position counted (term size).
    CountAll,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct NormDef {
    pub name: String,
    pub rules: BTreeMap<Symbol, NormRule>,
    pub default: DefaultRule,
}

impl NormDef {
    /// List-length norm: the list constructor counts its tail with offset 1,
    /// everything else has norm 0.
    pub fn list_length() -> NormDef {
        let mut rules = BTreeMap::new();
        rules.insert(
            crate::syntax::cons_symbol(),
            NormRule { offset: 1, counted: BTreeSet::from([2]) },
        );
        NormDef { name: "list_length".into(), rules, default: DefaultRule::Zero }
    }

    /// Term-size norm: every symbol contributes 1 and counts all arguments.
    pub fn term_size() -> NormDef {
        NormDef { name: "term_size".into(), rules: BTreeMap::new(), default: DefaultRule::CountAll }
    }

    pub fn rule_for(&self, sym: &Symbol) -> NormRule {
        if let Some(r) = self.rules.get(sym) {
            return r.clone();
        }
        match self.default {
            DefaultRule::Zero => NormRule { offset: 0, counted: BTreeSet::new() },
            DefaultRule::CountAll => {
                NormRule { offset: 1, counted: (1..=sym.arity).collect() }
            }
        }
    }

    pub fn counts(&self, sym: &Symbol, pos: usize) -> bool {
        self.rule_for(sym).counted.contains(&pos)
    }

    /// The order induced by the norm is monotone exactly at counted
    /// positions.
    pub fn monotone_at(&self, sym: &Symbol, pos: usize) -> bool {
        self.counts(sym, pos)
    }

    /// The order has the subterm property at counted positions of symbols
    /// with a positive offset.
    pub fn subterm_at(&self, sym: &Symbol, pos: usize) -> bool {
        let r = self.rule_for(sym);
        r.counted.contains(&pos) && r.offset >= 1
    }

    /// Counted positions of the given symbols, as a position family.
    pub fn counted_family_over<'a>(
        &self,
        syms: impl IntoIterator<Item = &'a Symbol>,
    ) -> PositionFamily {
        let mut fam = PositionFamily::new();
        for sym in syms {
            for pos in self.rule_for(sym).counted {
                fam.insert(sym.clone(), pos);
            }
        }
        fam
    }

    /// Subterm positions of the given symbols, as a position family.
    pub fn subterm_family_over<'a>(
        &self,
        syms: impl IntoIterator<Item = &'a Symbol>,
    ) -> PositionFamily {
        let mut fam = PositionFamily::new();
        for sym in syms {
            for pos in 1..=sym.arity {
                if self.subterm_at(sym, pos) {
                    fam.insert(sym.clone(), pos);
                }
            }
        }
        fam
    }

    /// Symbolic norm of a term.  Variables stand for their own (unknown,
    /// non-negative) norms; the wildcard marker has norm 0 and must only
    /// appear at uncounted positions.
    pub fn value(&self, t: &Term) -> LinExpr {
        match t {
            Term::Var(v) => LinExpr::var(v.clone()),
            Term::Comp(sym, args) => {
                if sym == &wildcard_symbol() {
                    return LinExpr::constant(0);
                }
                let rule = self.rule_for(sym);
                let mut acc = LinExpr::constant(rule.offset);
                for &i in &rule.counted {
                    acc = acc.add(&self.value(&args[i - 1]));
                }
                acc
            }
        }
    }

    /// Norm of an atom viewed as a term rooted at its predicate symbol.
    pub fn value_atom(&self, a: &Atom) -> LinExpr {
        self.value(&a.as_term())
    }

    /// Induced order: `a` is greater iff its norm exceeds `b`'s for every
    /// assignment of non-negative variable norms.
    pub fn compare(&self, a: &Term, b: &Term) -> Comparison {
        let diff = self.value(a).sub(&self.value(b));
        if diff.is_zero() {
            Comparison::EqualUnderOrder
        } else if diff.coeffs.values().all(|&c| c >= 0) && diff.constant >= 1 {
            Comparison::Greater
        } else if diff.coeffs.values().all(|&c| c <= 0) && diff.constant <= -1 {
            Comparison::Less
        } else {
            Comparison::Incomparable
        }
    }
}

/// Linear expression over variable norms: `constant + sum(coeff_i * X_i)`.
/// Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct LinExpr {
    pub constant: i64,
    pub coeffs: BTreeMap<String, i64>,
}

impl LinExpr {
    pub fn constant(c: i64) -> LinExpr {
        LinExpr { constant: c, coeffs: BTreeMap::new() }
    }

    pub fn var(v: String) -> LinExpr {
        LinExpr { constant: 0, coeffs: BTreeMap::from([(v, 1)]) }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0 && self.coeffs.is_empty()
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        self.combine(other, 1)
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.combine(other, -1)
    }

    fn combine(&self, other: &LinExpr, sign: i64) -> LinExpr {
        let mut out = self.clone();
        out.constant += sign * other.constant;
        for (v, c) in &other.coeffs {
            let e = out.coeffs.entry(v.clone()).or_insert(0);
            *e += sign * c;
        }
        out.coeffs.retain(|_, c| *c != 0);
        out
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if self.constant != 0 || self.coeffs.is_empty() {
            write!(f, "{}", self.constant)?;
            first = false;
        }
        for (v, c) in &self.coeffs {
            if !first {
                write!(f, "{}", if *c >= 0 { "+" } else { "-" })?;
            } else if *c < 0 {
                write!(f, "-")?;
            }
            first = false;
            if c.abs() != 1 {
                write!(f, "{}*", c.abs())?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
