//! Search for a concrete well-founded order satisfying a set of demands.
//!
//! Candidates are tried in a fixed, deterministic sequence: the list-length
//! norm, the term-size norm, then recursive path orderings over precedences
//! enumerated as linear extensions of the demand-derived seed pairs, in
//! lexicographic order relative to first symbol occurrence.  Conditional
//! decreases are checked by an assumption-aware entailment engine (bounded
//! transitivity through the premises for path orderings, non-negative
//! linear combination of premise differences for norms).

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

use crate::acceptability::{Demand, DecreasePair};
use crate::orders::{
    erase_term, DefaultRule, IgnoredPositions, NormDef, NormRule, OrderSpec, Precedence,
    PositionFamily, RpoSpec,
};
use crate::syntax::{Program, Term};

/// A concrete order: a base ordering plus the argument positions it is
/// invariant on (erased before comparison).
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ConcreteOrder {
    pub base: OrderSpec,
    pub ignored: IgnoredPositions,
}

impl ConcreteOrder {
    pub fn describe(&self) -> String {
        match &self.base {
            OrderSpec::NormBased(n) => format!("norm order ({})", n.name),
            OrderSpec::Rpo(r) => {
                let mut chain: Vec<&str> = Vec::new();
                // reconstruct a readable descending chain from the pairs
                let names: BTreeSet<&str> =
                    r.precedence.pairs().flat_map(|(a, b)| [a, b]).collect();
                let mut sorted: Vec<&str> = names.into_iter().collect();
                sorted.sort_by(|a, b| {
                    let above_a = r.precedence.pairs().filter(|(x, _)| x == a).count();
                    let above_b = r.precedence.pairs().filter(|(x, _)| x == b).count();
                    above_b.cmp(&above_a)
                });
                chain.extend(sorted);
                format!("recursive path ordering ({})", chain.join(" > "))
            }
            OrderSpec::PropertyAbstract { .. } => "abstract order".into(),
        }
    }

    /// All ignored positions merged into one family (predicate and functor
    /// symbols never collide by name).
    pub fn erasure_family(&self) -> PositionFamily {
        let mut fam = self.ignored.funs.clone();
        for (sym, set) in &self.ignored.preds.sets {
            for &p in set {
                fam.insert(sym.clone(), p);
            }
        }
        fam
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveResult {
    pub order: ConcreteOrder,
    /// Number of candidates examined before the first satisfying one.
    pub tried: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveFailure {
    #[error("demands are inconsistent: {0}")]
    Inconsistent(String),
    #[error("no candidate order satisfies the demands ({tried} tried)")]
    NoCandidate { tried: usize },
}

pub const DEFAULT_BUDGET: usize = 10_000;

/// Which candidate families the search may draw from.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CandidatePolicy {
    pub list_length: bool,
    pub term_size: bool,
    pub rpo: bool,
}

impl Default for CandidatePolicy {
    fn default() -> Self {
        CandidatePolicy { list_length: true, term_size: true, rpo: true }
    }
}

/// Search for a concrete order satisfying every demand.
pub fn solve(
    program: &Program,
    base_ignored: &IgnoredPositions,
    demands: &[Demand],
    budget: usize,
) -> Result<SolveResult, SolveFailure> {
    solve_with(program, base_ignored, demands, budget, CandidatePolicy::default())
}

pub fn solve_with(
    program: &Program,
    base_ignored: &IgnoredPositions,
    demands: &[Demand],
    budget: usize,
    policy: CandidatePolicy,
) -> Result<SolveResult, SolveFailure> {
    let preds = program.predicates();
    // fold position-drop demands into the ignored sets
    let mut ignored = base_ignored.clone();
    for d in demands {
        if let Demand::IgnoreAt(sym, pos) = d {
            if preds.contains(sym) {
                ignored.preds.insert(sym.clone(), *pos);
            } else {
                ignored.funs.insert(sym.clone(), *pos);
            }
        }
    }
    // consistency: a property demand at an invariant position is
    // unsatisfiable by construction
    for d in demands {
        let (sym, pos, what) = match d {
            Demand::SubtermAt(s, p) => (s, p, "subterm"),
            Demand::MonotoneAt(s, p) => (s, p, "monotonicity"),
            _ => continue,
        };
        if ignored.preds.contains(sym, *pos) || ignored.funs.contains(sym, *pos) {
            return Err(SolveFailure::Inconsistent(format!(
                "{what} demanded at {sym} position {pos}, which must stay invariant"
            )));
        }
    }

    let mut tried = 0;
    let mut norms = Vec::new();
    if policy.list_length {
        norms.push(NormDef::list_length());
    }
    if policy.term_size {
        norms.push(NormDef::term_size());
    }
    for norm in norms {
        tried += 1;
        let candidate = ConcreteOrder {
            base: OrderSpec::NormBased(with_ignore_rules(norm, program, &ignored)),
            ignored: ignored.clone(),
        };
        if check_candidate(&candidate, demands) {
            return Ok(SolveResult { order: candidate, tried });
        }
    }

    if !policy.rpo {
        return Err(SolveFailure::NoCandidate { tried });
    }
    let names = symbol_names_in_order(program);
    let seeds = precedence_seeds(demands);
    let mut found = None;
    enumerate_precedences(&names, &seeds, budget.saturating_sub(tried), &mut |chain| {
        tried += 1;
        let spec = RpoSpec::with_precedence(Precedence::from_descending(chain));
        let candidate =
            ConcreteOrder { base: OrderSpec::Rpo(spec), ignored: ignored.clone() };
        if check_candidate(&candidate, demands) {
            found = Some(candidate);
            false
        } else {
            true
        }
    });
    match found {
        Some(order) => Ok(SolveResult { order, tried }),
        None => Err(SolveFailure::NoCandidate { tried }),
    }
}

/// Give every predicate a norm rule over its non-ignored positions, and
/// replace the default rule on functors with ignored positions so the norm
/// never looks at them.
fn with_ignore_rules(mut norm: NormDef, program: &Program, ignored: &IgnoredPositions) -> NormDef {
    let pred_offset = match norm.default {
        DefaultRule::Zero => 0,
        DefaultRule::CountAll => 1,
    };
    for pred in program.predicates() {
        let counted: BTreeSet<usize> = (1..=pred.arity)
            .filter(|&p| !ignored.preds.contains(&pred, p))
            .collect();
        norm.rules.insert(pred, NormRule { offset: pred_offset, counted });
    }
    for (sym, set) in &ignored.funs.sets {
        let rule = norm.rule_for(sym);
        let counted: BTreeSet<usize> = rule.counted.difference(set).copied().collect();
        norm.rules.insert(sym.clone(), NormRule { offset: rule.offset, counted });
    }
    norm
}

/// Do all demands hold under the candidate?
pub fn check_candidate(order: &ConcreteOrder, demands: &[Demand]) -> bool {
    demands.iter().all(|d| check_demand(order, d))
}

pub fn check_demand(order: &ConcreteOrder, demand: &Demand) -> bool {
    match (&order.base, demand) {
        (_, Demand::IgnoreAt(sym, pos)) => match &order.base {
            // invariance holds by erasure for path orderings, and by the
            // position being uncounted for norms
            OrderSpec::Rpo(_) => {
                order.ignored.preds.contains(sym, *pos) || order.ignored.funs.contains(sym, *pos)
            }
            OrderSpec::NormBased(n) => !n.counts(sym, *pos),
            OrderSpec::PropertyAbstract { .. } => false,
        },
        (OrderSpec::NormBased(n), Demand::SubtermAt(sym, pos)) => n.subterm_at(sym, *pos),
        (OrderSpec::NormBased(n), Demand::MonotoneAt(sym, pos)) => n.monotone_at(sym, *pos),
        (OrderSpec::NormBased(n), Demand::Decrease { premises, lhs, rhs, strict }) => {
            entail_norm(n, premises, lhs, rhs, *strict)
        }
        (OrderSpec::Rpo(_), Demand::SubtermAt(sym, pos) | Demand::MonotoneAt(sym, pos)) => {
            // path orderings are monotone with the subterm property at
            // every position that survives erasure
            !order.ignored.preds.contains(sym, *pos) && !order.ignored.funs.contains(sym, *pos)
        }
        (OrderSpec::Rpo(spec), Demand::Decrease { premises, lhs, rhs, strict }) => {
            let fam = order.erasure_family();
            let e = |t: &Term| erase_term(t, &fam);
            let premises: Vec<(Term, Term, bool)> =
                premises.iter().map(|p| (e(&p.lhs), e(&p.rhs), p.strict)).collect();
            let engine = Entail { spec, assumptions: &premises };
            if *strict {
                engine.gt(&e(lhs), &e(rhs), ENTAIL_DEPTH)
            } else {
                engine.ge(&e(lhs), &e(rhs), ENTAIL_DEPTH)
            }
        }
        (OrderSpec::PropertyAbstract { .. }, _) => false,
    }
}

const ENTAIL_DEPTH: usize = 12;

/// Assumption-aware path-ordering entailment: the structural rules of the
/// ordering plus the premises as axioms, chained through a depth-bounded
/// transitivity rule.
struct Entail<'a> {
    spec: &'a RpoSpec,
    assumptions: &'a [(Term, Term, bool)],
}

impl<'a> Entail<'a> {
    fn ge(&self, s: &Term, t: &Term, d: usize) -> bool {
        s == t || self.gt(s, t, d)
    }

    fn gt(&self, s: &Term, t: &Term, d: usize) -> bool {
        if d == 0 {
            return false;
        }
        for (a, b, strict) in self.assumptions {
            if *strict && a == s && b == t {
                return true;
            }
        }
        // transitivity through an assumption
        for (a, b, strict) in self.assumptions {
            if *strict && self.ge(s, a, d - 1) && self.ge(b, t, d - 1) {
                return true;
            }
        }
        match (s, t) {
            (_, Term::Var(y)) => s != t && s.contains_var(y),
            (Term::Var(_), _) => false,
            (Term::Comp(f, ss), Term::Comp(g, ts)) => {
                if ss.iter().any(|si| self.ge(si, t, d - 1)) {
                    return true;
                }
                if self.spec.precedence.gt(&f.name, &g.name) {
                    return ts.iter().all(|tj| self.gt(s, tj, d - 1));
                }
                if f.name == g.name {
                    if !ts.iter().all(|tj| self.gt(s, tj, d - 1)) {
                        return false;
                    }
                    match self.spec.status_of(&f.name) {
                        crate::orders::Status::Lex => {
                            for (si, ti) in ss.iter().zip(ts) {
                                if si != ti {
                                    return self.gt(si, ti, d - 1);
                                }
                            }
                            ss.len() > ts.len()
                        }
                        crate::orders::Status::Multiset => {
                            let mut ss: Vec<&Term> = ss.iter().collect();
                            let mut ts: Vec<&Term> = ts.iter().collect();
                            let mut i = 0;
                            while i < ts.len() {
                                if let Some(j) = ss.iter().position(|x| *x == ts[i]) {
                                    ss.remove(j);
                                    ts.remove(i);
                                } else {
                                    i += 1;
                                }
                            }
                            !ss.is_empty()
                                && ts.iter().all(|t| ss.iter().any(|x| self.gt(x, t, d - 1)))
                        }
                    }
                } else {
                    false
                }
            }
        }
    }
}

/// Norm entailment: the conclusion difference must be a non-negative linear
/// combination (coefficients 0 or 1) of the premise differences plus a
/// non-negative remainder, strict through either a strict premise or the
/// remainder's constant.
fn entail_norm(
    norm: &NormDef,
    premises: &[DecreasePair],
    lhs: &Term,
    rhs: &Term,
    strict: bool,
) -> bool {
    let concl = norm.value(lhs).sub(&norm.value(rhs));
    let pdiffs: Vec<(crate::orders::LinExpr, bool)> = premises
        .iter()
        .map(|p| (norm.value(&p.lhs).sub(&norm.value(&p.rhs)), p.strict))
        .collect();
    let n = pdiffs.len();
    for mask in 0..(1u32 << n) {
        let mut rem = concl.clone();
        let mut strict_premises = 0i64;
        for (i, (diff, st)) in pdiffs.iter().enumerate() {
            if mask & (1 << i) != 0 {
                rem = rem.sub(diff);
                if *st {
                    strict_premises += 1;
                }
            }
        }
        let needed = if strict { 1 } else { 0 };
        if rem.coeffs.values().all(|&c| c >= 0) && rem.constant + strict_premises >= needed {
            return true;
        }
    }
    false
}

/// Symbol names in order of first occurrence across the program, predicates
/// and functors alike.
pub fn symbol_names_in_order(program: &Program) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    fn walk(t: &Term, seen: &mut BTreeSet<String>, out: &mut Vec<String>) {
        if let Term::Comp(sym, args) = t {
            if seen.insert(sym.name.clone()) {
                out.push(sym.name.clone());
            }
            for a in args {
                walk(a, seen, out);
            }
        }
    }
    for c in &program.clauses {
        for a in std::iter::once(&c.head).chain(&c.body) {
            if seen.insert(a.pred.name.clone()) {
                out.push(a.pred.name.clone());
            }
            for t in &a.args {
                walk(t, &mut seen, &mut out);
            }
        }
    }
    out
}

/// Precedence pairs suggested by the decrease demands: the left root must
/// dominate the right root whenever they differ.
pub fn precedence_seeds(demands: &[Demand]) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for d in demands {
        if let Demand::Decrease { lhs: Term::Comp(f, _), rhs: Term::Comp(g, _), .. } = d {
            if f.name != g.name {
                out.insert((f.name.clone(), g.name.clone()));
            }
        }
    }
    out
}

/// Enumerate descending chains (total precedences) consistent with the
/// seeds, lexicographically with respect to the given name order, calling
/// `f` for each until it returns false or the budget is exhausted.
fn enumerate_precedences(
    names: &[String],
    seeds: &BTreeSet<(String, String)>,
    budget: usize,
    f: &mut impl FnMut(&[String]) -> bool,
) {
    let mut chain: Vec<String> = Vec::new();
    let mut remaining: Vec<String> = names.to_vec();
    let mut left = budget;
    rec(&mut chain, &mut remaining, seeds, &mut left, f);
}

fn rec(
    chain: &mut Vec<String>,
    remaining: &mut Vec<String>,
    seeds: &BTreeSet<(String, String)>,
    budget: &mut usize,
    f: &mut impl FnMut(&[String]) -> bool,
) -> bool {
    if *budget == 0 {
        return false;
    }
    if remaining.is_empty() {
        *budget -= 1;
        return f(chain);
    }
    for i in 0..remaining.len() {
        let cand = remaining[i].clone();
        // cand may only be placed if nothing still unplaced must precede it
        let blocked = remaining
            .iter()
            .any(|r| r != &cand && seeds.contains(&(r.clone(), cand.clone())));
        if blocked {
            continue;
        }
        remaining.remove(i);
        chain.push(cand.clone());
        let go_on = rec(chain, remaining, seeds, budget, f);
        chain.pop();
        remaining.insert(i, cand);
        if !go_on {
            return false;
        }
    }
    true
}
