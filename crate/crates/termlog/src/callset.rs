//! Abstract interpretation of call patterns.  Starting from the declared
//! query patterns, a fixpoint computation over a small shape domain bounds
//! the set of atoms selected during any left-to-right derivation, and from
//! that bound derives the argument positions an ordering must be invariant
//! on for every selected atom to be rigid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orders::IgnoredPositions;
use crate::syntax::{cons_symbol, ArgShape, Program, Symbol, Term};

/// Abstract shape of an argument at call time.
///
/// `NilListGround` are nil-terminated lists of ground elements,
/// `NilListAny` nil-terminated lists of arbitrary terms.  The lattice is
/// `NilListGround <= Ground <= Any`, `NilListGround <= NilListAny <= Any`
/// and `Free <= Any`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbstractValue {
    NilListGround,
    Ground,
    NilListAny,
    Free,
    Any,
}

use AbstractValue::*;

impl AbstractValue {
    pub fn leq(self, other: AbstractValue) -> bool {
        self == other
            || other == Any
            || (self == NilListGround && (other == Ground || other == NilListAny))
    }

    pub fn join(self, other: AbstractValue) -> AbstractValue {
        if self.leq(other) {
            other
        } else if other.leq(self) {
            self
        } else {
            Any
        }
    }

    /// Greatest sound refinement of two abstractions known to hold for the
    /// same term (used when a call binding and a success abstraction meet).
    pub fn meet(self, other: AbstractValue) -> AbstractValue {
        if self.leq(other) {
            return self;
        }
        if other.leq(self) {
            return other;
        }
        match (self, other) {
            // a free variable unified with anything takes the other shape
            (Free, v) | (v, Free) => v,
            (Ground, NilListAny) | (NilListAny, Ground) => NilListGround,
            _ => Any,
        }
    }

    pub fn is_ground(self) -> bool {
        matches!(self, Ground | NilListGround)
    }

    pub fn from_shape(s: ArgShape) -> AbstractValue {
        match s {
            ArgShape::Ground => Ground,
            ArgShape::Free => Free,
            ArgShape::NilList => NilListAny,
            ArgShape::NilListGround => NilListGround,
            ArgShape::Any => Any,
        }
    }
}

/// One abstract atom per predicate: the join of all call (resp. answer)
/// patterns observed for it.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct CallSet {
    pub calls: BTreeMap<Symbol, Vec<AbstractValue>>,
    pub successes: BTreeMap<Symbol, Vec<AbstractValue>>,
}

impl CallSet {
    pub fn call_pattern(&self, pred: &Symbol) -> Option<&Vec<AbstractValue>> {
        self.calls.get(pred)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CallSetError {
    #[error("no query directive: the call set cannot be bounded")]
    MissingQuery,
    #[error("undefined predicate {0}")]
    UndefinedPredicate(Symbol),
    #[error("query directive arity mismatch for {0}")]
    ArityMismatch(Symbol),
}

/// Joins per call-set position before the value is widened to `Any`.
const WIDEN_AFTER: u32 = 3;

type Env = BTreeMap<String, AbstractValue>;

/// Bound the call set of the program from its query directives.
pub fn infer_call_set(program: &Program) -> Result<CallSet, CallSetError> {
    if program.queries.is_empty() {
        return Err(CallSetError::MissingQuery);
    }
    let defined = program.defined_predicates();
    for c in &program.clauses {
        for b in &c.body {
            if !defined.contains(&b.pred) {
                return Err(CallSetError::UndefinedPredicate(b.pred.clone()));
            }
        }
    }

    let mut cs = CallSet::default();
    let mut widen_calls: BTreeMap<(Symbol, usize), u32> = BTreeMap::new();
    let mut widen_succ: BTreeMap<(Symbol, usize), u32> = BTreeMap::new();

    for q in &program.queries {
        if !defined.contains(&q.pred) {
            return Err(CallSetError::UndefinedPredicate(q.pred.clone()));
        }
        if q.shapes.len() != q.pred.arity {
            return Err(CallSetError::ArityMismatch(q.pred.clone()));
        }
        let vals: Vec<AbstractValue> = q.shapes.iter().map(|&s| AbstractValue::from_shape(s)).collect();
        join_into(&mut cs.calls, &mut widen_calls, &q.pred, &vals);
    }

    loop {
        let before = cs.clone();
        let preds: Vec<Symbol> = cs.calls.keys().cloned().collect();
        for pred in preds {
            let call = cs.calls[&pred].clone();
            for (_, clause) in program.clauses_for(&pred) {
                let mut env = Env::new();
                let mut matched = true;
                for (arg, &val) in clause.head.args.iter().zip(&call) {
                    if !bind(arg, val, &mut env) {
                        matched = false;
                        break;
                    }
                }
                if !matched {
                    continue;
                }
                let mut body_succeeds = true;
                for b in &clause.body {
                    let vals: Vec<AbstractValue> =
                        b.args.iter().map(|t| eval(t, &env)).collect();
                    join_into(&mut cs.calls, &mut widen_calls, &b.pred, &vals);
                    // the next body atom is only selected once this one has
                    // an answer; without a success abstraction yet, stop
                    // here and let a later iteration continue
                    match cs.successes.get(&b.pred).cloned() {
                        Some(succ) => {
                            for (arg, &val) in b.args.iter().zip(&succ) {
                                bind(arg, val, &mut env);
                            }
                        }
                        None => {
                            body_succeeds = false;
                            break;
                        }
                    }
                }
                if body_succeeds {
                    let head_vals: Vec<AbstractValue> =
                        clause.head.args.iter().map(|t| eval(t, &env)).collect();
                    join_into(&mut cs.successes, &mut widen_succ, &pred, &head_vals);
                }
            }
        }
        if cs == before {
            return Ok(cs);
        }
    }
}

fn join_into(
    map: &mut BTreeMap<Symbol, Vec<AbstractValue>>,
    widen: &mut BTreeMap<(Symbol, usize), u32>,
    pred: &Symbol,
    vals: &[AbstractValue],
) {
    match map.get_mut(pred) {
        None => {
            map.insert(pred.clone(), vals.to_vec());
        }
        Some(cur) => {
            for (i, (c, &v)) in cur.iter_mut().zip(vals).enumerate() {
                let joined = c.join(v);
                if joined != *c {
                    let n = widen.entry((pred.clone(), i)).or_insert(0);
                    *n += 1;
                    *c = if *n >= WIDEN_AFTER { Any } else { joined };
                }
            }
        }
    }
}

/// Can some concrete call matching the abstraction unify with this head?
pub fn head_matches(head: &crate::syntax::Atom, vals: &[AbstractValue]) -> bool {
    let mut env = Env::new();
    head.args.iter().zip(vals).all(|(a, &v)| bind(a, v, &mut env))
}

/// Record what matching `term` against an incoming abstraction implies for
/// the term's variables.  Returns false if no concrete instance of the
/// abstraction can match the term.
fn bind(term: &Term, val: AbstractValue, env: &mut Env) -> bool {
    match term {
        Term::Var(v) => {
            let cur = env.get(v).copied().unwrap_or(Free);
            env.insert(v.clone(), cur.meet(val));
            true
        }
        Term::Comp(sym, args) => match val {
            Ground => {
                args.iter().all(|a| bind(a, Ground, env))
            }
            Free | Any => {
                // an unconstrained caller argument constrains nothing
                for a in args {
                    bind(a, if val == Free { Free } else { Any }, env);
                }
                true
            }
            NilListGround | NilListAny => {
                if *sym == crate::syntax::nil_symbol() {
                    true
                } else if *sym == cons_symbol() {
                    let elem = if val == NilListGround { Ground } else { Any };
                    bind(&args[0], elem, env) && bind(&args[1], val, env)
                } else {
                    false
                }
            }
        },
    }
}

/// Abstract value of a term under an environment; unbound variables are
/// free at call time.
fn eval(term: &Term, env: &Env) -> AbstractValue {
    match term {
        Term::Var(v) => env.get(v).copied().unwrap_or(Free),
        Term::Comp(sym, args) => {
            if *sym == crate::syntax::nil_symbol() {
                return NilListGround;
            }
            if *sym == cons_symbol() {
                let h = eval(&args[0], env);
                let t = eval(&args[1], env);
                return match (h, t) {
                    (Ground | NilListGround, NilListGround) => NilListGround,
                    (_, NilListGround | NilListAny) => NilListAny,
                    (h, t) if h.is_ground() && t.is_ground() => Ground,
                    _ => Any,
                };
            }
            if args.iter().all(|a| eval(a, env).is_ground()) {
                Ground
            } else {
                Any
            }
        }
    }
}

/// Argument positions an ordering must be invariant on so that every atom
/// in the call set is rigid: predicate positions whose call abstraction
/// admits non-ground terms, and the head position of the list constructor
/// whenever list-shaped abstractions occur (their elements are not tracked
/// by the list abstraction).
pub fn rigidity_requirements(cs: &CallSet) -> IgnoredPositions {
    let mut ignored = IgnoredPositions::default();
    let mut any_list = false;
    for (pred, vals) in &cs.calls {
        for (i, v) in vals.iter().enumerate() {
            match v {
                Free | Any => ignored.preds.insert(pred.clone(), i + 1),
                NilListGround | NilListAny => any_list = true,
                Ground => {}
            }
        }
    }
    if any_list {
        ignored.funs.insert(cons_symbol(), 1);
    }
    ignored
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    fn sym(n: &str, a: usize) -> Symbol {
        Symbol::new(n, a)
    }

    #[test]
    fn permute_call_set() {
        let p = parse_program(
            "%% query: permute(nillist_ground, free).\n\
             permute([],[]).\n\
             permute(L,[H|T]) :- delete(H,L,R), permute(R,T).\n\
             delete(X,[X|T],T).\n\
             delete(X,[H|T],[H|R]) :- delete(X,T,R).\n",
        )
        .unwrap();
        let cs = infer_call_set(&p).unwrap();
        assert_eq!(cs.calls[&sym("permute", 2)], vec![NilListGround, Free]);
        assert_eq!(cs.calls[&sym("delete", 3)], vec![Free, NilListGround, Free]);
        assert_eq!(
            cs.successes[&sym("delete", 3)],
            vec![Ground, NilListGround, NilListGround]
        );
        let ig = rigidity_requirements(&cs);
        assert!(ig.preds.contains(&sym("permute", 2), 2));
        assert!(!ig.preds.contains(&sym("permute", 2), 1));
        assert!(ig.preds.contains(&sym("delete", 3), 1));
        assert!(ig.preds.contains(&sym("delete", 3), 3));
        assert!(!ig.preds.contains(&sym("delete", 3), 2));
        assert!(ig.funs.contains(&cons_symbol(), 1));
        assert!(!ig.funs.contains(&cons_symbol(), 2));
    }

    #[test]
    fn ground_query_stays_ground() {
        let p = parse_program(
            "%% query: d(ground, free).\n\
             d(x,1).\n\
             d(u(A,B),u(DA,DB)) :- d(A,DA), d(B,DB).\n",
        )
        .unwrap();
        let cs = infer_call_set(&p).unwrap();
        assert_eq!(cs.calls[&sym("d", 2)], vec![Ground, Free]);
        let ig = rigidity_requirements(&cs);
        assert!(ig.preds.contains(&sym("d", 2), 2));
        assert!(!ig.preds.contains(&sym("d", 2), 1));
        assert!(ig.funs.is_empty());
    }

    #[test]
    fn swapped_arguments_join_to_any() {
        let p = parse_program(
            "%% query: r(ground, free).\n\
             r(a,b).\n\
             r(X,Y) :- r(Y,X).\n",
        )
        .unwrap();
        let cs = infer_call_set(&p).unwrap();
        assert_eq!(cs.calls[&sym("r", 2)], vec![Any, Any]);
    }

    #[test]
    fn missing_query_is_an_error() {
        let p = parse_program("p(a).\n").unwrap();
        assert_eq!(infer_call_set(&p), Err(CallSetError::MissingQuery));
    }

    #[test]
    fn undefined_predicate_is_an_error() {
        let p = parse_program("%% query: p(ground).\np(X) :- q(X).\n").unwrap();
        assert_eq!(
            infer_call_set(&p),
            Err(CallSetError::UndefinedPredicate(sym("q", 1)))
        );
    }

    #[test]
    fn growing_argument_widens() {
        // the recursive call grows its argument forever; widening must cap
        // the abstraction instead of looping
        let p = parse_program(
            "%% query: g(nillist_ground).\n\
             g([]).\n\
             g(L) :- g([Z|L]).\n",
        )
        .unwrap();
        let cs = infer_call_set(&p).unwrap();
        // [Z|L] has a free head, so the pattern must leave NilListGround
        assert!(cs.calls[&sym("g", 1)][0] != NilListGround);
    }
}
