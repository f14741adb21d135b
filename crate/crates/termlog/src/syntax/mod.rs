//! Terms, atoms, clauses and programs of the pure-Prolog subset, together
//! with the elementary operations the rest of the pipeline is built on:
//! substitution, unification with occurs-check, variant checking, renaming
//! apart and predicate dependency analysis.

mod parser;

pub use parser::{parse_atom, parse_program, parse_term, ParseError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// A functor or predicate symbol.  `(name, arity)` uniquely identifies it;
/// constants are symbols of arity 0.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

// Serialized as "name/arity" so symbols can key JSON maps.
impl Serialize for Symbol {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(&format_args!("{}/{}", self.name, self.arity))
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let (name, arity) = s
            .rsplit_once('/')
            .ok_or_else(|| serde::de::Error::custom(format!("malformed symbol {s:?}")))?;
        let arity = arity
            .parse()
            .map_err(|_| serde::de::Error::custom(format!("malformed arity in {s:?}")))?;
        Ok(Symbol::new(name, arity))
    }
}

impl Symbol {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Symbol { name: name.into(), arity }
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// The list constructor `./2` and the empty list `[]/0`.
pub fn cons_symbol() -> Symbol {
    Symbol::new(".", 2)
}

pub fn nil_symbol() -> Symbol {
    Symbol::new("[]", 0)
}

/// Reserved symbol standing for "an arbitrary term" at an ignored argument
/// position; printed as `t`.
pub fn wildcard_symbol() -> Symbol {
    Symbol::new("$t", 0)
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Comp(Symbol, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn comp(sym: Symbol, args: Vec<Term>) -> Term {
        assert_eq!(sym.arity, args.len(), "arity mismatch for {sym}");
        Term::Comp(sym, args)
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::Comp(Symbol::new(name, 0), vec![])
    }

    pub fn app(name: impl Into<String>, args: Vec<Term>) -> Term {
        let name = name.into();
        let arity = args.len();
        Term::Comp(Symbol::new(name, arity), args)
    }

    pub fn nil() -> Term {
        Term::Comp(nil_symbol(), vec![])
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::Comp(cons_symbol(), vec![head, tail])
    }

    pub fn list(items: Vec<Term>) -> Term {
        items.into_iter().rev().fold(Term::nil(), |acc, t| Term::cons(t, acc))
    }

    /// Arbitrary-term marker used when wildcarding ignored positions.
    pub fn wildcard() -> Term {
        Term::Comp(wildcard_symbol(), vec![])
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Comp(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Comp(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    /// Number of symbol occurrences (variables count as 1).
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Comp(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => v == name,
            Term::Comp(_, args) => args.iter().any(|a| a.contains_var(name)),
        }
    }

    /// Is `sub` a subterm of `self` (including `self` itself)?
    pub fn contains(&self, sub: &Term) -> bool {
        if self == sub {
            return true;
        }
        match self {
            Term::Var(_) => false,
            Term::Comp(_, args) => args.iter().any(|a| a.contains(sub)),
        }
    }

    /// Subterm addressed by a 1-based path vector, if any.
    pub fn at_path(&self, path: &[usize]) -> Option<&Term> {
        let mut cur = self;
        for &i in path {
            match cur {
                Term::Comp(_, args) if i >= 1 && i <= args.len() => cur = &args[i - 1],
                _ => return None,
            }
        }
        Some(cur)
    }

    /// Replace the subterm at `path` by `new`, returning the modified term.
    pub fn replace_at(&self, path: &[usize], new: Term) -> Option<Term> {
        if path.is_empty() {
            return Some(new);
        }
        match self {
            Term::Var(_) => None,
            Term::Comp(sym, args) => {
                let i = path[0];
                if i < 1 || i > args.len() {
                    return None;
                }
                let mut args = args.clone();
                args[i - 1] = args[i - 1].replace_at(&path[1..], new)?;
                Some(Term::Comp(sym.clone(), args))
            }
        }
    }

    /// All paths to variable occurrences, in left-to-right order.
    pub fn var_occurrences(&self) -> Vec<(Vec<usize>, String)> {
        let mut out = Vec::new();
        self.walk_vars(&mut Vec::new(), &mut out);
        out
    }

    fn walk_vars(&self, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, String)>) {
        match self {
            Term::Var(v) => out.push((path.clone(), v.clone())),
            Term::Comp(_, args) => {
                for (i, a) in args.iter().enumerate() {
                    path.push(i + 1);
                    a.walk_vars(path, out);
                    path.pop();
                }
            }
        }
    }

    /// All paths to proper subterms (non-empty paths), paired with the subterm.
    pub fn subterm_paths(&self) -> Vec<(Vec<usize>, &Term)> {
        let mut out = Vec::new();
        self.walk_subterms(&mut Vec::new(), &mut out);
        out
    }

    fn walk_subterms<'a>(&'a self, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, &'a Term)>) {
        if !path.is_empty() {
            out.push((path.clone(), self));
        }
        if let Term::Comp(_, args) = self {
            for (i, a) in args.iter().enumerate() {
                path.push(i + 1);
                a.walk_subterms(path, out);
                path.pop();
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Comp(sym, args) => {
                if sym == &wildcard_symbol() {
                    return write!(f, "t");
                }
                if sym == &nil_symbol() {
                    return write!(f, "[]");
                }
                if sym == &cons_symbol() {
                    return fmt_list(f, &args[0], &args[1]);
                }
                if (sym.name == "+" || sym.name == "*") && sym.arity == 2 {
                    return write!(f, "{}{}{}", args[0], sym.name, args[1]);
                }
                if args.is_empty() {
                    write!(f, "{}", sym.name)
                } else {
                    write!(f, "{}(", sym.name)?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")
                }
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn fmt_list(f: &mut fmt::Formatter<'_>, head: &Term, tail: &Term) -> fmt::Result {
    write!(f, "[{head}")?;
    let mut cur = tail;
    loop {
        match cur {
            Term::Comp(sym, args) if sym == &cons_symbol() => {
                write!(f, ",{}", args[0])?;
                cur = &args[1];
            }
            Term::Comp(sym, _) if sym == &nil_symbol() => break,
            other => {
                write!(f, "|{other}")?;
                break;
            }
        }
    }
    write!(f, "]")
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub pred: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: Symbol, args: Vec<Term>) -> Atom {
        assert_eq!(pred.arity, args.len(), "arity mismatch for {pred}");
        Atom { pred, args }
    }

    /// View of the atom as a term rooted at the predicate symbol; the order
    /// machinery compares atoms this way.
    pub fn as_term(&self) -> Term {
        Term::Comp(self.pred.clone(), self.args.clone())
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.as_term().vars()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_term())
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Clause {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl Clause {
    pub fn vars(&self) -> BTreeSet<String> {
        let mut vs = self.head.vars();
        for b in &self.body {
            vs.extend(b.vars());
        }
        vs
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            write!(f, " :- ")?;
            for (i, b) in self.body.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{b}")?;
            }
        }
        write!(f, ".")
    }
}

/// Abstract argument shape used in `%% query:` directives.
#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgShape {
    Ground,
    Free,
    NilList,
    NilListGround,
    Any,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct QueryPattern {
    pub pred: Symbol,
    pub shapes: Vec<ArgShape>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    In,
    Out,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ModeDecl {
    pub pred: Symbol,
    pub modes: Vec<Mode>,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Program {
    pub clauses: Vec<Clause>,
    pub queries: Vec<QueryPattern>,
    pub modes: Vec<ModeDecl>,
}

impl Program {
    /// Predicates defined by at least one clause.
    pub fn defined_predicates(&self) -> BTreeSet<Symbol> {
        self.clauses.iter().map(|c| c.head.pred.clone()).collect()
    }

    /// Every predicate occurring in a head or body.
    pub fn predicates(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for c in &self.clauses {
            out.insert(c.head.pred.clone());
            for b in &c.body {
                out.insert(b.pred.clone());
            }
        }
        out
    }

    /// Every functor (non-predicate symbol) occurring in clause arguments.
    pub fn functors(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        fn walk(t: &Term, out: &mut BTreeSet<Symbol>) {
            if let Term::Comp(sym, args) = t {
                out.insert(sym.clone());
                for a in args {
                    walk(a, out);
                }
            }
        }
        for c in &self.clauses {
            for a in std::iter::once(&c.head).chain(&c.body) {
                for t in &a.args {
                    walk(t, &mut out);
                }
            }
        }
        out
    }

    pub fn clauses_for(&self, pred: &Symbol) -> Vec<(usize, &Clause)> {
        self.clauses
            .iter()
            .enumerate()
            .filter(|(_, c)| &c.head.pred == pred)
            .collect()
    }

    pub fn mode_for(&self, pred: &Symbol) -> Option<&ModeDecl> {
        self.modes.iter().find(|m| &m.pred == pred)
    }

    /// Render the program back in the surface syntax.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for q in &self.queries {
            out.push_str(&format!(
                "%% query: {}({}).\n",
                q.pred.name,
                q.shapes
                    .iter()
                    .map(|s| match s {
                        ArgShape::Ground => "ground",
                        ArgShape::Free => "free",
                        ArgShape::NilList => "nillist",
                        ArgShape::NilListGround => "nillist_ground",
                        ArgShape::Any => "any",
                    })
                    .collect::<Vec<_>>()
                    .join(",")
            ));
        }
        for m in &self.modes {
            out.push_str(&format!(
                "%% mode: {}({}).\n",
                m.pred.name,
                m.modes
                    .iter()
                    .map(|m| match m {
                        Mode::In => "in",
                        Mode::Out => "out",
                    })
                    .collect::<Vec<_>>()
                    .join(",")
            ));
        }
        for c in &self.clauses {
            out.push_str(&format!("{c}\n"));
        }
        out
    }
}

/// An idempotent substitution: no bound variable occurs in any binding's
/// range.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Subst {
    bindings: BTreeMap<String, Term>,
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    pub fn singleton(var: impl Into<String>, t: Term) -> Subst {
        let mut s = Subst::new();
        s.bindings.insert(var.into(), t);
        s
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn bindings(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.bindings.iter()
    }

    pub fn apply(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.bindings.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Comp(sym, args) => {
                Term::Comp(sym.clone(), args.iter().map(|a| self.apply(a)).collect())
            }
        }
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        Atom {
            pred: a.pred.clone(),
            args: a.args.iter().map(|t| self.apply(t)).collect(),
        }
    }

    /// Bind `var := t`, substituting into existing ranges to stay idempotent.
    fn extend(&mut self, var: String, t: Term) {
        let one = Subst::singleton(var.clone(), t.clone());
        for v in self.bindings.values_mut() {
            *v = one.apply(v);
        }
        self.bindings.insert(var, t);
    }

    /// `self` followed by `other` (composition), normalized idempotent.
    pub fn compose(&self, other: &Subst) -> Subst {
        let mut out = BTreeMap::new();
        for (v, t) in &self.bindings {
            out.insert(v.clone(), other.apply(t));
        }
        for (v, t) in &other.bindings {
            out.entry(v.clone()).or_insert_with(|| t.clone());
        }
        // drop trivial X -> X bindings
        out.retain(|v, t| !matches!(t, Term::Var(w) if w == v));
        Subst { bindings: out }
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}->{t}")?;
        }
        write!(f, "}}")
    }
}

/// Most general unifier of two terms, with occurs-check.  `None` means
/// non-unifiable.
pub fn mgu_terms(a: &Term, b: &Term) -> Option<Subst> {
    let mut subst = Subst::new();
    let mut stack = vec![(a.clone(), b.clone())];
    while let Some((s, t)) = stack.pop() {
        let s = subst.apply(&s);
        let t = subst.apply(&t);
        match (s, t) {
            (Term::Var(x), Term::Var(y)) if x == y => {}
            (Term::Var(x), t) => {
                if t.contains_var(&x) {
                    return None; // occurs-check
                }
                subst.extend(x, t);
            }
            (s, Term::Var(y)) => {
                if s.contains_var(&y) {
                    return None;
                }
                subst.extend(y, s);
            }
            (Term::Comp(f, fa), Term::Comp(g, ga)) => {
                if f != g {
                    return None;
                }
                for (x, y) in fa.into_iter().zip(ga) {
                    stack.push((x, y));
                }
            }
        }
    }
    Some(subst)
}

/// Most general unifier of two atoms.
pub fn mgu(a: &Atom, b: &Atom) -> Option<Subst> {
    if a.pred != b.pred {
        return None;
    }
    mgu_terms(&a.as_term(), &b.as_term())
}

fn canonicalize(t: &Term, map: &mut BTreeMap<String, usize>) -> Term {
    match t {
        Term::Var(v) => {
            let n = map.len();
            let id = *map.entry(v.clone()).or_insert(n);
            Term::Var(format!("#{id}"))
        }
        Term::Comp(sym, args) => Term::Comp(
            sym.clone(),
            args.iter().map(|a| canonicalize(a, map)).collect(),
        ),
    }
}

/// Equality up to a variable-renaming bijection.
pub fn variant_eq_terms(a: &Term, b: &Term) -> bool {
    let mut ma = BTreeMap::new();
    let mut mb = BTreeMap::new();
    canonicalize(a, &mut ma) == canonicalize(b, &mut mb)
}

pub fn variant_eq(a: &Atom, b: &Atom) -> bool {
    a.pred == b.pred && variant_eq_terms(&a.as_term(), &b.as_term())
}

/// Rename the clause so that it shares no variable with `avoid`.
pub fn rename_apart(c: &Clause, avoid: &BTreeSet<String>) -> Clause {
    let clause_vars = c.vars();
    let mut renaming = Subst::new();
    let mut taken: BTreeSet<String> = avoid.union(&clause_vars).cloned().collect();
    for v in &clause_vars {
        if avoid.contains(v) {
            let mut n = 1;
            let fresh = loop {
                let cand = format!("{v}_{n}");
                if !taken.contains(&cand) {
                    break cand;
                }
                n += 1;
            };
            taken.insert(fresh.clone());
            renaming.extend(v.clone(), Term::Var(fresh));
        }
    }
    Clause {
        head: renaming.apply_atom(&c.head),
        body: c.body.iter().map(|b| renaming.apply_atom(b)).collect(),
    }
}

/// Predicate dependency information: the refers-to relation, its
/// reflexive-transitive closure, and the mutual-recursion classes.
#[derive(Clone, Debug)]
pub struct DepGraph {
    pub refers: BTreeMap<Symbol, BTreeSet<Symbol>>,
    pub depends: BTreeMap<Symbol, BTreeSet<Symbol>>,
}

impl DepGraph {
    pub fn refers_to(&self, p: &Symbol, q: &Symbol) -> bool {
        self.refers.get(p).is_some_and(|s| s.contains(q))
    }

    /// p depends on q (reflexive-transitive closure of refers-to).
    pub fn depends_on(&self, p: &Symbol, q: &Symbol) -> bool {
        p == q || self.depends.get(p).is_some_and(|s| s.contains(q))
    }

    pub fn mutual(&self, p: &Symbol, q: &Symbol) -> bool {
        self.depends_on(p, q) && self.depends_on(q, p)
    }

    /// p strictly above q: depends on it but not conversely.
    pub fn strictly_above(&self, p: &Symbol, q: &Symbol) -> bool {
        self.depends_on(p, q) && !self.depends_on(q, p)
    }
}

pub fn dependency_graph(p: &Program) -> DepGraph {
    let preds: BTreeSet<Symbol> = p.predicates();
    let mut refers: BTreeMap<Symbol, BTreeSet<Symbol>> = BTreeMap::new();
    for pred in &preds {
        refers.insert(pred.clone(), BTreeSet::new());
    }
    for c in &p.clauses {
        let entry = refers.entry(c.head.pred.clone()).or_default();
        for b in &c.body {
            entry.insert(b.pred.clone());
        }
    }
    // reflexive-transitive closure
    let mut depends = refers.clone();
    for pred in &preds {
        depends.entry(pred.clone()).or_default().insert(pred.clone());
    }
    let pred_list: Vec<Symbol> = preds.iter().cloned().collect();
    for k in &pred_list {
        for i in &pred_list {
            if depends.get(i).is_some_and(|s| s.contains(k)) {
                let via: Vec<Symbol> = depends
                    .get(k)
                    .map(|s| s.iter().cloned().collect())
                    .unwrap_or_default();
                let entry = depends.entry(i.clone()).or_default();
                for q in via {
                    entry.insert(q);
                }
            }
        }
    }
    DepGraph { refers, depends }
}
