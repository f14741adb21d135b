//! Term-ordering framework: characteristic functions over position
//! families, partial monotonicity and subterm machinery, concrete orders
//! (recursive path ordering and semi-linear norms), relevant-variable sets
//! and rigidity checks.

mod norm;
mod rpo;

pub use norm::{DefaultRule, LinExpr, NormDef, NormRule};
pub use rpo::{Precedence, RpoSpec, Status};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{Atom, Symbol, Term};

/// Outcome of comparing two terms under an order.  `EqualUnderOrder` is
/// equality under the order (not necessarily identity); `Incomparable`
/// means neither relation holds.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Comparison {
    Greater,
    EqualUnderOrder,
    Less,
    Incomparable,
}

/// A family of argument-position sets, one per symbol; absent symbols
/// default to the empty set.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct PositionFamily {
    pub sets: BTreeMap<Symbol, BTreeSet<usize>>,
}

impl PositionFamily {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, sym: Symbol, pos: usize) {
        assert!(pos >= 1 && pos <= sym.arity, "position {pos} out of range for {sym}");
        self.sets.entry(sym).or_default().insert(pos);
    }

    pub fn contains(&self, sym: &Symbol, pos: usize) -> bool {
        self.sets.get(sym).is_some_and(|s| s.contains(&pos))
    }

    pub fn positions(&self, sym: &Symbol) -> BTreeSet<usize> {
        self.sets.get(sym).cloned().unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.values().all(BTreeSet::is_empty)
    }

    /// Family that contains every position of every symbol in `syms`.
    pub fn all_positions(syms: impl IntoIterator<Item = Symbol>) -> Self {
        let mut fam = Self::new();
        for sym in syms {
            for i in 1..=sym.arity {
                fam.insert(sym.clone(), i);
            }
        }
        fam
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("path {0:?} does not address a subterm")]
    InvalidPath(Vec<usize>),
}

/// Characteristic function of a term along a path: 1 for the empty path,
/// 1 at variables and constants, and otherwise the product of the
/// position-membership indicators along the path.
pub fn char_fn(s: &Term, path: &[usize], fam: &PositionFamily) -> Result<u8, PathError> {
    if path.is_empty() {
        return Ok(1);
    }
    match s {
        Term::Var(_) => Err(PathError::InvalidPath(path.to_vec())),
        Term::Comp(sym, args) => {
            let i = path[0];
            if i < 1 || i > args.len() {
                return Err(PathError::InvalidPath(path.to_vec()));
            }
            let here = u8::from(fam.contains(sym, i));
            let below = char_fn(&args[i - 1], &path[1..], fam)?;
            Ok(here * below)
        }
    }
}

/// Predicate and functor argument positions the order is invariant on.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct IgnoredPositions {
    pub preds: PositionFamily,
    pub funs: PositionFamily,
}

impl IgnoredPositions {
    pub fn is_empty(&self) -> bool {
        self.preds.is_empty() && self.funs.is_empty()
    }
}

/// Delete the ignored argument slots of a term, reducing symbol arities.
/// Two terms are equal under the induced congruence iff their erasures are
/// syntactically equal.
pub fn erase_term(t: &Term, ignored: &PositionFamily) -> Term {
    match t {
        Term::Var(v) => Term::Var(v.clone()),
        Term::Comp(sym, args) => {
            let kept: Vec<Term> = args
                .iter()
                .enumerate()
                .filter(|(i, _)| !ignored.contains(sym, i + 1))
                .map(|(_, a)| erase_term(a, ignored))
                .collect();
            Term::Comp(Symbol::new(sym.name.clone(), kept.len()), kept)
        }
    }
}

/// Erase ignored positions of an atom viewed as a term.
pub fn erase_atom(a: &Atom, ignored: &IgnoredPositions) -> Term {
    let kept: Vec<Term> = a
        .args
        .iter()
        .enumerate()
        .filter(|(i, _)| !ignored.preds.contains(&a.pred, i + 1))
        .map(|(_, t)| erase_term(t, &ignored.funs))
        .collect();
    Term::Comp(Symbol::new(a.pred.name.clone(), kept.len()), kept)
}

/// A term-ordering description.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum OrderSpec {
    /// Order known only through its properties: ignored positions plus the
    /// monotone and subterm position families it must define.
    PropertyAbstract {
        ignored: IgnoredPositions,
        monotone: PositionFamily,
        subterm: PositionFamily,
    },
    /// Recursive path ordering induced by a precedence on symbol names.
    Rpo(RpoSpec),
    /// Order induced by a semi-linear norm.
    NormBased(NormDef),
}

impl OrderSpec {
    pub fn is_concrete(&self) -> bool {
        !matches!(self, OrderSpec::PropertyAbstract { .. })
    }

    /// Monotone-position family of the order, restricted to the given
    /// symbols (needed because a norm's default rule covers every symbol).
    pub fn monotone_family(&self, sig: &BTreeSet<Symbol>) -> PositionFamily {
        match self {
            OrderSpec::PropertyAbstract { monotone, .. } => monotone.clone(),
            OrderSpec::Rpo(_) => PositionFamily::all_positions(sig.iter().cloned()),
            OrderSpec::NormBased(n) => n.counted_family_over(sig),
        }
    }

    /// Subterm-position family of the order, restricted to the given symbols.
    pub fn subterm_family(&self, sig: &BTreeSet<Symbol>) -> PositionFamily {
        match self {
            OrderSpec::PropertyAbstract { subterm, .. } => subterm.clone(),
            OrderSpec::Rpo(_) => PositionFamily::all_positions(sig.iter().cloned()),
            OrderSpec::NormBased(n) => n.subterm_family_over(sig),
        }
    }

    pub fn fully_monotone(&self) -> bool {
        matches!(self, OrderSpec::Rpo(_))
    }
}

/// Compare two terms under a concrete order spec.
///
/// Panics if the spec is property-abstract; such specs are handled by
/// constraint entailment in the solver, not by direct comparison.
pub fn compare(spec: &OrderSpec, a: &Term, b: &Term) -> Comparison {
    match spec {
        OrderSpec::Rpo(r) => r.compare(a, b),
        OrderSpec::NormBased(n) => n.compare(a, b),
        OrderSpec::PropertyAbstract { .. } => {
            panic!("compare() requires a concrete order spec")
        }
    }
}

/// Relevant variable occurrences of `s`: paths whose replacement can change
/// the term's equivalence class under the order.
pub fn vrel(spec: &OrderSpec, s: &Term) -> BTreeSet<Vec<usize>> {
    match spec {
        OrderSpec::NormBased(n) => {
            let counted = n.counted_family_over(&term_symbols(s));
            s.var_occurrences()
                .into_iter()
                .filter(|(path, _)| char_fn(s, path, &counted) == Ok(1))
                .map(|(path, _)| path)
                .collect()
        }
        OrderSpec::PropertyAbstract { monotone, subterm, .. } => s
            .var_occurrences()
            .into_iter()
            .filter(|(path, _)| {
                char_fn(s, path, monotone) == Ok(1) || char_fn(s, path, subterm) == Ok(1)
            })
            .map(|(path, _)| path)
            .collect(),
        OrderSpec::Rpo(r) => {
            // Bounded brute force: exact VREL is undecidable for arbitrary
            // orders; replacements are drawn from a small canonical pool.
            let pool = replacement_pool(s);
            vrel_brute(|a, b| r.compare(a, b), s, &pool)
        }
    }
}

/// Brute-force VREL: a variable occurrence is relevant if replacing it by
/// some pool term moves the term out of its equivalence class.
pub fn vrel_brute(
    cmp: impl Fn(&Term, &Term) -> Comparison,
    s: &Term,
    pool: &[Term],
) -> BTreeSet<Vec<usize>> {
    let mut out = BTreeSet::new();
    for (path, _) in s.var_occurrences() {
        for t in pool {
            let replaced = s.replace_at(&path, t.clone()).expect("path valid");
            if replaced != *s && cmp(&replaced, s) != Comparison::EqualUnderOrder {
                out.insert(path.clone());
                break;
            }
        }
    }
    out
}

/// Small canonical pool of replacement terms built from the symbols of `s`
/// plus a fresh constant, up to size 3.
pub fn replacement_pool(s: &Term) -> Vec<Term> {
    let mut syms = term_symbols(s);
    syms.insert(Symbol::new("$c", 0));
    enumerate_terms(&syms.into_iter().collect::<Vec<_>>(), 3)
}

/// All symbols occurring in a term.
pub fn term_symbols(t: &Term) -> BTreeSet<Symbol> {
    let mut out = BTreeSet::new();
    fn walk(t: &Term, out: &mut BTreeSet<Symbol>) {
        if let Term::Comp(sym, args) = t {
            out.insert(sym.clone());
            for a in args {
                walk(a, out);
            }
        }
    }
    walk(t, &mut out);
    out
}

/// All ground terms over the signature with at most `max_size` symbol
/// occurrences, in a deterministic order.
pub fn enumerate_terms(signature: &[Symbol], max_size: usize) -> Vec<Term> {
    let mut by_size: Vec<Vec<Term>> = vec![Vec::new(); max_size + 1];
    for size in 1..=max_size {
        let mut level = Vec::new();
        for sym in signature {
            if sym.arity == 0 {
                if size == 1 {
                    level.push(Term::Comp(sym.clone(), vec![]));
                }
            } else if size >= 1 + sym.arity {
                let mut partial: Vec<Vec<Term>> = vec![vec![]];
                // distribute size-1 among arity arguments
                for k in 0..sym.arity {
                    let remaining_args = sym.arity - k - 1;
                    let mut next = Vec::new();
                    for p in &partial {
                        let used: usize = p.iter().map(Term::size).sum();
                        let budget = size - 1 - used;
                        for arg_size in 1..=budget.saturating_sub(remaining_args) {
                            for t in &by_size[arg_size] {
                                let mut q = p.clone();
                                q.push(t.clone());
                                next.push(q);
                            }
                        }
                    }
                    partial = next;
                }
                for args in partial {
                    let total: usize = 1 + args.iter().map(Term::size).sum::<usize>();
                    if total == size {
                        level.push(Term::Comp(sym.clone(), args));
                    }
                }
            }
        }
        by_size[size] = level;
    }
    by_size.into_iter().flatten().collect()
}

/// Variables all of whose occurrences have characteristic value 1 under the
/// order's monotone family.
pub fn m_set(spec: &OrderSpec, s: &Term) -> BTreeSet<String> {
    set_under_family(s, &spec.monotone_family(&term_symbols(s)))
}

/// Variables all of whose occurrences have characteristic value 1 under the
/// order's subterm family.
pub fn s_set(spec: &OrderSpec, s: &Term) -> BTreeSet<String> {
    set_under_family(s, &spec.subterm_family(&term_symbols(s)))
}

fn set_under_family(s: &Term, fam: &PositionFamily) -> BTreeSet<String> {
    let occs = s.var_occurrences();
    let mut by_var: BTreeMap<String, Vec<Vec<usize>>> = BTreeMap::new();
    for (path, v) in occs {
        by_var.entry(v).or_default().push(path);
    }
    by_var
        .into_iter()
        .filter(|(_, paths)| paths.iter().all(|p| char_fn(s, p, fam) == Ok(1)))
        .map(|(v, _)| v)
        .collect()
}

/// Rigidity: the term's equivalence class under the order is invariant
/// under every substitution.
pub fn is_rigid_term(spec: &OrderSpec, t: &Term) -> bool {
    match spec {
        OrderSpec::NormBased(n) => n.value(t).is_constant(),
        OrderSpec::Rpo(_) => t.is_ground(), // monotone + subterm: rigidity degenerates to groundness
        OrderSpec::PropertyAbstract { monotone, subterm, .. } => t
            .var_occurrences()
            .iter()
            .all(|(p, _)| char_fn(t, p, monotone) == Ok(0) && char_fn(t, p, subterm) == Ok(0)),
    }
}

/// Rigidity of an atom under an order extended to the Herbrand base,
/// taking the ignored positions into account.  Predicate symbols live in
/// the same position-family maps as functors, so the atom is checked as a
/// term rooted at its predicate.
pub fn is_rigid_atom(spec: &OrderSpec, ignored: &IgnoredPositions, a: &Atom) -> bool {
    match spec {
        OrderSpec::NormBased(n) => n.value_atom(a).is_constant(),
        OrderSpec::Rpo(_) => erase_atom(a, ignored).is_ground(),
        OrderSpec::PropertyAbstract { .. } => is_rigid_term(spec, &a.as_term()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Term;

    fn sig_example() -> (Term, PositionFamily) {
        // s = f(a, g(b, h(c, X))), I_f = {1,2}, I_g = {2}, I_h = {1}
        let s = Term::app(
            "f",
            vec![
                Term::constant("a"),
                Term::app(
                    "g",
                    vec![
                        Term::constant("b"),
                        Term::app("h", vec![Term::constant("c"), Term::var("X")]),
                    ],
                ),
            ],
        );
        let mut fam = PositionFamily::new();
        fam.insert(Symbol::new("f", 2), 1);
        fam.insert(Symbol::new("f", 2), 2);
        fam.insert(Symbol::new("g", 2), 2);
        fam.insert(Symbol::new("h", 2), 1);
        (s, fam)
    }

    #[test]
    fn char_fn_reproduces_branch_values() {
        let (s, fam) = sig_example();
        assert_eq!(char_fn(&s, &[1], &fam), Ok(1));
        assert_eq!(char_fn(&s, &[2, 1], &fam), Ok(0));
        assert_eq!(char_fn(&s, &[2, 2], &fam), Ok(1));
        assert_eq!(char_fn(&s, &[2, 2, 1], &fam), Ok(1));
        assert_eq!(char_fn(&s, &[2, 2, 2], &fam), Ok(0));
    }

    #[test]
    fn char_fn_empty_and_var() {
        let (s, fam) = sig_example();
        assert_eq!(char_fn(&s, &[], &fam), Ok(1));
        assert_eq!(char_fn(&Term::var("X"), &[], &fam), Ok(1));
        assert!(char_fn(&Term::var("X"), &[1], &fam).is_err());
        assert!(char_fn(&s, &[3], &fam).is_err());
    }

    #[test]
    fn erase_congruence() {
        let mut ignored = PositionFamily::new();
        ignored.insert(crate::syntax::cons_symbol(), 1);
        let a = Term::list(vec![Term::var("X"), Term::constant("5")]);
        let b = Term::list(vec![Term::constant("a"), Term::constant("b")]);
        assert_eq!(erase_term(&a, &ignored), erase_term(&b, &ignored));
    }

    #[test]
    fn enumerate_counts() {
        let sig = vec![
            Symbol::new("f", 2),
            Symbol::new("g", 1),
            Symbol::new("a", 0),
            Symbol::new("b", 0),
        ];
        let terms = enumerate_terms(&sig, 3);
        // size 1: a, b; size 2: g(a), g(b); size 3: g(g(a)), g(g(b)), f over 4 pairs
        assert_eq!(terms.len(), 2 + 2 + 2 + 4);
        assert!(terms.iter().all(|t| t.size() <= 3));
    }

    #[test]
    fn vrel_list_size_example() {
        // s = [X,5] under the list-size order: X's occurrence is irrelevant.
        let spec = OrderSpec::NormBased(NormDef::list_length());
        let s = Term::list(vec![Term::var("X"), Term::constant("5")]);
        assert!(vrel(&spec, &s).is_empty());
        // s = [X|T]: only T's occurrence is relevant.
        let s2 = Term::cons(Term::var("X"), Term::var("T"));
        let v = vrel(&spec, &s2);
        assert_eq!(v, BTreeSet::from([vec![2]]));
        // ground terms have no relevant occurrences
        assert!(vrel(&spec, &Term::list(vec![Term::constant("a")])).is_empty());
    }

    #[test]
    fn m_set_examples() {
        let spec = OrderSpec::NormBased(NormDef::list_length());
        let s = Term::cons(Term::var("X"), Term::var("T"));
        assert_eq!(m_set(&spec, &s), BTreeSet::from(["T".to_string()]));
        assert!(m_set(&spec, &Term::constant("a")).is_empty());
        // f(X,X) with M_f = {1}: second occurrence has characteristic 0
        let mut mono = PositionFamily::new();
        mono.insert(Symbol::new("f", 2), 1);
        let spec2 = OrderSpec::PropertyAbstract {
            ignored: IgnoredPositions::default(),
            monotone: mono,
            subterm: PositionFamily::new(),
        };
        let s2 = Term::app("f", vec![Term::var("X"), Term::var("X")]);
        assert!(m_set(&spec2, &s2).is_empty());
    }

    #[test]
    fn rigidity_examples() {
        let spec = OrderSpec::NormBased(NormDef::list_length());
        // [X,Y] is rigid under the list-length norm
        let s = Term::list(vec![Term::var("X"), Term::var("Y")]);
        assert!(is_rigid_term(&spec, &s));
        // [X|T] is not rigid: T -> [] vs T -> [a] gives norms 1 vs 2
        let s2 = Term::cons(Term::var("X"), Term::var("T"));
        assert!(!is_rigid_term(&spec, &s2));
        // ground terms are rigid under any order
        assert!(is_rigid_term(&spec, &Term::list(vec![Term::constant("a")])));
    }
}
