//! Decrease-constraint generation and demand-driven reduction.
//!
//! For a program to LD-terminate on its call set it suffices that, under
//! some well-founded order that is rigid on the call set, every clause head
//! strictly exceeds each mutually recursive body atom whenever the
//! preceding body atoms hold.  This module generates those constraints,
//! reduces them to elementary demands on the ordering (subterm and
//! monotonicity positions, conditional decreases), and synthesizes
//! interargument relations whose validity is discharged by showing the
//! relation is a model of the defining clauses.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::callset::{head_matches, CallSet};
use crate::orders::{IgnoredPositions, PositionFamily};
use crate::syntax::{
    dependency_graph, mgu, rename_apart, Atom, Clause, Mode, Program, Subst, Symbol, Term,
};

/// Elementary requirement on the ordering produced by reduction.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum Demand {
    /// The order must have the subterm property at this argument position.
    SubtermAt(Symbol, usize),
    /// The order must be monotone at this argument position.
    MonotoneAt(Symbol, usize),
    /// The order must be invariant at this argument position (the position
    /// is dropped from comparison altogether).
    IgnoreAt(Symbol, usize),
    /// `lhs > rhs` (or `>=` when not strict) must hold for every
    /// instantiation of the placeholder variables satisfying the premises.
    Decrease {
        premises: Vec<DecreasePair>,
        lhs: Term,
        rhs: Term,
        strict: bool,
    },
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct DecreasePair {
    pub lhs: Term,
    pub rhs: Term,
    pub strict: bool,
}

impl fmt::Display for Demand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Demand::SubtermAt(s, i) => write!(f, "subterm at {s} position {i}"),
            Demand::MonotoneAt(s, i) => write!(f, "monotone at {s} position {i}"),
            Demand::IgnoreAt(s, i) => write!(f, "invariant at {s} position {i}"),
            Demand::Decrease { premises, lhs, rhs, strict } => {
                for (i, p) in premises.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{} {} {}", p.lhs, if p.strict { ">" } else { ">=" }, p.rhs)?;
                }
                if !premises.is_empty() {
                    write!(f, " ==> ")?;
                }
                write!(f, "{} {} {}", lhs, if *strict { ">" } else { ">=" }, rhs)
            }
        }
    }
}

/// Interargument relation for a predicate: in every answer, the argument at
/// `greater` exceeds the one at `smaller` under the order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct ArgRelation {
    pub pred: Symbol,
    pub greater: usize,
    pub smaller: usize,
    pub strict: bool,
}

impl fmt::Display for ArgRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: arg{} {} arg{}",
            self.pred,
            self.greater,
            if self.strict { ">" } else { ">=" },
            self.smaller
        )
    }
}

/// A decrease over a conjunction of body atoms that no single atom's
/// relation captures; discharged by unfolding the conjunction one
/// resolution step.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct ConjunctionObligation {
    pub atoms: Vec<Atom>,
    /// (atom index, 1-based argument position) of the greater term.
    pub greater: (usize, usize),
    pub smaller: (usize, usize),
    pub strict: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// Head and body atom are mutually recursive: a strict decrease under
    /// the order is required.
    Mutual,
    /// The body atom's predicate sits strictly below the head's in the
    /// dependency order; no decrease is needed.
    Layered,
}

/// One decrease constraint: head exceeds the body atom whenever the
/// condition atoms hold.  Ignored argument positions are replaced by the
/// arbitrary-term marker.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct DecreaseConstraint {
    pub clause_idx: usize,
    pub head: Atom,
    pub body_atom: Atom,
    pub conditions: Vec<Atom>,
    pub kind: ConstraintKind,
}

impl fmt::Display for DecreaseConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.conditions.is_empty() {
            for (i, c) in self.conditions.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, " ==> ")?;
        }
        write!(f, "{} > {}", self.head, self.body_atom)
    }
}

/// Replace the arguments at ignored predicate positions by the
/// arbitrary-term marker.
fn wildcard_atom(a: &Atom, ignored: &PositionFamily) -> Atom {
    Atom {
        pred: a.pred.clone(),
        args: a
            .args
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if ignored.contains(&a.pred, i + 1) {
                    Term::wildcard()
                } else {
                    t.clone()
                }
            })
            .collect(),
    }
}

/// Generate the decrease constraints of the program.  With a call set,
/// clauses whose head cannot match any abstract call are skipped with a
/// warning.
pub fn generate_constraints(
    program: &Program,
    ignored: &IgnoredPositions,
    callset: Option<&CallSet>,
) -> (Vec<DecreaseConstraint>, Vec<String>) {
    let dep = dependency_graph(program);
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for (ci, clause) in program.clauses.iter().enumerate() {
        if let Some(cs) = callset {
            match cs.call_pattern(&clause.head.pred) {
                None => {
                    warnings.push(format!(
                        "clause {ci} ({}) is unreachable: predicate never called",
                        clause.head.pred
                    ));
                    continue;
                }
                Some(vals) => {
                    if !head_matches(&clause.head, vals) {
                        warnings.push(format!(
                            "clause {ci} ({}) is unreachable: head matches no abstract call",
                            clause.head
                        ));
                        continue;
                    }
                }
            }
        }
        for (bi, b) in clause.body.iter().enumerate() {
            let kind = if dep.mutual(&clause.head.pred, &b.pred) {
                ConstraintKind::Mutual
            } else {
                ConstraintKind::Layered
            };
            out.push(DecreaseConstraint {
                clause_idx: ci,
                head: wildcard_atom(&clause.head, &ignored.preds),
                body_atom: wildcard_atom(b, &ignored.preds),
                conditions: clause.body[..bi].to_vec(),
                kind,
            });
        }
    }
    (out, warnings)
}

/// Result of reducing one constraint.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct Reduction {
    pub demands: Vec<Demand>,
    pub relations: Vec<ArgRelation>,
    pub conjunctions: Vec<ConjunctionObligation>,
    pub justification: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReduceError {
    #[error("no reduction for {0} > {1}: {2}")]
    Unreducible(Term, Term, String),
}

/// Reduce a constraint to elementary demands.  Layered constraints reduce
/// to nothing; mutual ones must exhibit a strict decrease at some
/// non-ignored position (same predicate) or at the atom level (different,
/// mutually recursive predicates).
pub fn reduce_constraint(
    c: &DecreaseConstraint,
    ignored: &IgnoredPositions,
) -> Result<Reduction, ReduceError> {
    if c.kind == ConstraintKind::Layered {
        return Ok(Reduction { justification: "layering".into(), ..Default::default() });
    }
    if c.head.pred != c.body_atom.pred {
        // mutual recursion through different predicates: demand a decrease
        // between the atoms viewed as terms
        return Ok(Reduction {
            demands: vec![Demand::Decrease {
                premises: Vec::new(),
                lhs: c.head.as_term(),
                rhs: c.body_atom.as_term(),
                strict: true,
            }],
            justification: "atom-level decrease".into(),
            ..Default::default()
        });
    }
    let pred = &c.head.pred;
    let ctx = PairCtx { conditions: &c.conditions, ignored_funs: &ignored.funs };
    let mut red = Reduction::default();
    let mut strict_positions = Vec::new();
    let mut dropped = Vec::new();
    for pos in 1..=pred.arity {
        if ignored.preds.contains(pred, pos) {
            continue;
        }
        let s = &c.head.args[pos - 1];
        let t = &c.body_atom.args[pos - 1];
        match pair_demands(s, t, &ctx) {
            Some(PairOutcome::Equal) => {}
            Some(PairOutcome::Strict(mut partial)) => {
                red.demands.append(&mut partial.demands);
                red.relations.append(&mut partial.relations);
                red.conjunctions.append(&mut partial.conjunctions);
                // the argument decrease lifts to the atom only if the
                // order is monotone at this predicate position
                red.demands.push(Demand::MonotoneAt(pred.clone(), pos));
                strict_positions.push(pos);
            }
            None => {
                // last resort: require the order to be invariant here
                red.demands.push(Demand::IgnoreAt(pred.clone(), pos));
                dropped.push(pos);
            }
        }
    }
    if strict_positions.is_empty() {
        return Err(ReduceError::Unreducible(
            c.head.as_term(),
            c.body_atom.as_term(),
            "no argument position decreases strictly".into(),
        ));
    }
    red.justification = format!(
        "strict decrease at position{} {}{}",
        if strict_positions.len() > 1 { "s" } else { "" },
        strict_positions
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(","),
        if dropped.is_empty() {
            String::new()
        } else {
            format!(
                ", dropping position{} {}",
                if dropped.len() > 1 { "s" } else { "" },
                dropped.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
            )
        }
    );
    Ok(red)
}

struct PairCtx<'a> {
    conditions: &'a [Atom],
    ignored_funs: &'a PositionFamily,
}

enum PairOutcome {
    Equal,
    Strict(Reduction),
}

/// Demands making `s` strictly exceed `t` for every instantiation, or
/// `Equal` when they always coincide.
fn pair_demands(s: &Term, t: &Term, ctx: &PairCtx) -> Option<PairOutcome> {
    if s == t {
        return Some(PairOutcome::Equal);
    }
    // t a subterm of s along non-ignored positions: subterm-property demands
    if let Some(path) = subterm_path(s, t, ctx.ignored_funs) {
        let mut demands = Vec::new();
        let mut cur = s;
        for &i in &path {
            let Term::Comp(sym, args) = cur else { unreachable!() };
            demands.push(Demand::SubtermAt(sym.clone(), i));
            cur = &args[i - 1];
        }
        return Some(PairOutcome::Strict(Reduction { demands, ..Default::default() }));
    }
    // same root: recurse, requiring exactly one strictly decreasing
    // argument and equality elsewhere, under monotonicity at that position
    if let (Term::Comp(f, fs), Term::Comp(g, gs)) = (s, t) {
        if f == g {
            let mut strict: Option<(usize, Reduction)> = None;
            let mut ok = true;
            for (i, (a, b)) in fs.iter().zip(gs).enumerate() {
                match pair_demands(a, b, ctx) {
                    Some(PairOutcome::Equal) => {}
                    Some(PairOutcome::Strict(r)) if strict.is_none() => {
                        strict = Some((i + 1, r));
                    }
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                if let Some((pos, mut r)) = strict {
                    r.demands.push(Demand::MonotoneAt(f.clone(), pos));
                    return Some(PairOutcome::Strict(r));
                }
            }
        }
    }
    // interargument route: both terms appear as arguments of one condition
    for cond in ctx.conditions {
        for (a, sa) in cond.args.iter().enumerate() {
            for (b, tb) in cond.args.iter().enumerate() {
                if a != b && sa == s && tb == t {
                    let rel = ArgRelation {
                        pred: cond.pred.clone(),
                        greater: a + 1,
                        smaller: b + 1,
                        strict: true,
                    };
                    return Some(PairOutcome::Strict(Reduction {
                        relations: vec![rel],
                        ..Default::default()
                    }));
                }
            }
        }
    }
    // the pair spans two different conditions: conjunction obligation
    for (ai, ca) in ctx.conditions.iter().enumerate() {
        for (bi, cb) in ctx.conditions.iter().enumerate() {
            if ai == bi {
                continue;
            }
            for (a, sa) in ca.args.iter().enumerate() {
                for (b, tb) in cb.args.iter().enumerate() {
                    if sa == s && tb == t {
                        let ob = ConjunctionObligation {
                            atoms: ctx.conditions.to_vec(),
                            greater: (ai, a + 1),
                            smaller: (bi, b + 1),
                            strict: true,
                        };
                        return Some(PairOutcome::Strict(Reduction {
                            conjunctions: vec![ob],
                            ..Default::default()
                        }));
                    }
                }
            }
        }
    }
    // last resort: hand the pair to the order search as a direct decrease.
    // Sound for the orders tried, which are closed under substitution.
    if matches!((s, t), (Term::Comp(..), Term::Comp(..))) {
        return Some(PairOutcome::Strict(Reduction {
            demands: vec![Demand::Decrease {
                premises: Vec::new(),
                lhs: s.clone(),
                rhs: t.clone(),
                strict: true,
            }],
            ..Default::default()
        }));
    }
    None
}

/// Non-empty path from `s` to an occurrence of `t` avoiding ignored and
/// wildcard positions.
fn subterm_path(s: &Term, t: &Term, ignored: &PositionFamily) -> Option<Vec<usize>> {
    let Term::Comp(sym, args) = s else { return None };
    for (i, a) in args.iter().enumerate() {
        if ignored.contains(sym, i + 1) || a == &Term::wildcard() {
            continue;
        }
        if a == t {
            return Some(vec![i + 1]);
        }
        if let Some(mut rest) = subterm_path(a, t, ignored) {
            let mut path = vec![i + 1];
            path.append(&mut rest);
            return Some(path);
        }
    }
    None
}

/// Rename a clause's variables to the canonical placeholders t1, t2, ... in
/// order of first occurrence.
pub fn placeholder_clause(c: &Clause) -> Clause {
    let mut map: BTreeMap<String, usize> = BTreeMap::new();
    let mut order = Vec::new();
    for a in std::iter::once(&c.head).chain(&c.body) {
        for t in &a.args {
            for (_, v) in t.var_occurrences() {
                if !map.contains_key(&v) {
                    map.insert(v.clone(), order.len() + 1);
                    order.push(v);
                }
            }
        }
    }
    let mut sub = Subst::new();
    for (v, n) in &map {
        sub = sub.compose(&Subst::singleton(v.clone(), Term::var(format!("t{n}"))));
    }
    Clause {
        head: sub.apply_atom(&c.head),
        body: c.body.iter().map(|b| sub.apply_atom(b)).collect(),
    }
}

/// Validity demands for an interargument relation: the relation must be a
/// model of its predicate's clauses, i.e. each clause's conclusion must
/// follow from the premises the relation provides for its recursive body
/// atoms.  Body atoms of other predicates contribute nothing (their answer
/// sets are over-approximated by all ground atoms).
pub fn discharge_relation(rel: &ArgRelation, program: &Program) -> Vec<Demand> {
    let mut out = Vec::new();
    for (_, clause) in program.clauses_for(&rel.pred) {
        let c = placeholder_clause(clause);
        let premises: Vec<DecreasePair> = c
            .body
            .iter()
            .filter(|b| b.pred == rel.pred)
            .map(|b| DecreasePair {
                lhs: b.args[rel.greater - 1].clone(),
                rhs: b.args[rel.smaller - 1].clone(),
                strict: rel.strict,
            })
            .collect();
        out.push(Demand::Decrease {
            premises,
            lhs: c.head.args[rel.greater - 1].clone(),
            rhs: c.head.args[rel.smaller - 1].clone(),
            strict: rel.strict,
        });
    }
    out
}

/// A clause over a conjunction of atoms: the conjunction holds whenever the
/// body holds.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct GeneralizedClause {
    pub head: Vec<Atom>,
    pub body: Vec<Atom>,
}

impl fmt::Display for GeneralizedClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.head.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        if !self.body.is_empty() {
            write!(f, " :- ")?;
            for (i, a) in self.body.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
        }
        write!(f, ".")
    }
}

/// Resolve every atom of the conjunction one step against the program, in
/// all combinations; the results define the conjunction's answers
/// inductively.
pub fn unfold_conjunction(atoms: &[Atom], program: &Program) -> Vec<GeneralizedClause> {
    let mut results = vec![GeneralizedClause { head: atoms.to_vec(), body: Vec::new() }];
    for i in 0..atoms.len() {
        let mut next = Vec::new();
        for gc in &results {
            let mut avoid: std::collections::BTreeSet<String> = Default::default();
            for a in gc.head.iter().chain(&gc.body) {
                avoid.extend(a.vars());
            }
            for (_, clause) in program.clauses_for(&atoms[i].pred) {
                let renamed = rename_apart(clause, &avoid);
                let Some(theta) = mgu(&gc.head[i], &renamed.head) else { continue };
                let mut head: Vec<Atom> =
                    gc.head.iter().map(|a| theta.apply_atom(a)).collect();
                head[i] = theta.apply_atom(&renamed.head);
                let mut body: Vec<Atom> =
                    gc.body.iter().map(|a| theta.apply_atom(a)).collect();
                body.extend(renamed.body.iter().map(|b| theta.apply_atom(b)));
                next.push(GeneralizedClause { head, body });
            }
        }
        results = next;
    }
    results
}

/// Validity demands for a conjunction obligation, by induction over the
/// unfolded generalized clauses.
pub fn discharge_conjunction(
    ob: &ConjunctionObligation,
    program: &Program,
) -> Result<Vec<Demand>, ReduceError> {
    let gcs = unfold_conjunction(&ob.atoms, program);
    if gcs.is_empty() {
        // the conjunction has no answers; the obligation holds vacuously
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for gc in &gcs {
        let c = placeholder_generalized(gc);
        let lhs = c.head[ob.greater.0].args[ob.greater.1 - 1].clone();
        let rhs = c.head[ob.smaller.0].args[ob.smaller.1 - 1].clone();
        // premises: instances of the same conjunction inside the body,
        // paired positionally per predicate
        let occ = |pred: &Symbol| -> Vec<&Atom> {
            c.body.iter().filter(|b| &b.pred == pred).collect()
        };
        let g_occ = occ(&ob.atoms[ob.greater.0].pred);
        let s_occ = occ(&ob.atoms[ob.smaller.0].pred);
        let instances = g_occ.len().min(s_occ.len());
        let premises: Vec<DecreasePair> = (0..instances)
            .map(|k| DecreasePair {
                lhs: g_occ[k].args[ob.greater.1 - 1].clone(),
                rhs: s_occ[k].args[ob.smaller.1 - 1].clone(),
                strict: ob.strict,
            })
            .collect();
        out.push(Demand::Decrease { premises, lhs, rhs, strict: ob.strict });
    }
    Ok(out)
}

fn placeholder_generalized(gc: &GeneralizedClause) -> GeneralizedClause {
    let pseudo = Clause {
        head: gc.head[0].clone(),
        body: gc.head[1..].iter().chain(&gc.body).cloned().collect(),
    };
    let renamed = placeholder_clause(&pseudo);
    let n_head = gc.head.len();
    let mut head = vec![renamed.head];
    head.extend(renamed.body[..n_head - 1].iter().cloned());
    GeneralizedClause { head, body: renamed.body[n_head - 1..].to_vec() }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModeError {
    #[error("no mode declaration for {0}")]
    MissingMode(Symbol),
    #[error("clause {clause} is not well-moded: {detail}")]
    NotWellModed { clause: usize, detail: String },
}

fn mode_positions(program: &Program, pred: &Symbol, want: Mode) -> Result<Vec<usize>, ModeError> {
    let decl = program
        .mode_for(pred)
        .ok_or_else(|| ModeError::MissingMode(pred.clone()))?;
    Ok(decl
        .modes
        .iter()
        .enumerate()
        .filter(|(_, m)| **m == want)
        .map(|(i, _)| i + 1)
        .collect())
}

fn position_vars(a: &Atom, positions: &[usize]) -> std::collections::BTreeSet<String> {
    let mut out = std::collections::BTreeSet::new();
    for &p in positions {
        out.extend(a.args[p - 1].vars());
    }
    out
}

/// Check the standard well-modedness dataflow condition: every input of a
/// body atom is covered by the head's inputs and earlier outputs, and the
/// head's outputs by the head's inputs and all body outputs.
pub fn wellmoded_check(program: &Program) -> Result<(), ModeError> {
    for (ci, clause) in program.clauses.iter().enumerate() {
        let head_in = position_vars(&clause.head, &mode_positions(program, &clause.head.pred, Mode::In)?);
        let mut known = head_in.clone();
        for b in &clause.body {
            let b_in = position_vars(b, &mode_positions(program, &b.pred, Mode::In)?);
            if let Some(v) = b_in.difference(&known).next() {
                return Err(ModeError::NotWellModed {
                    clause: ci,
                    detail: format!("input variable {v} of {b} is not yet produced"),
                });
            }
            known.extend(position_vars(b, &mode_positions(program, &b.pred, Mode::Out)?));
        }
        let head_out =
            position_vars(&clause.head, &mode_positions(program, &clause.head.pred, Mode::Out)?);
        if let Some(v) = head_out.difference(&known).next() {
            return Err(ModeError::NotWellModed {
                clause: ci,
                detail: format!("output variable {v} of the head is never produced"),
            });
        }
    }
    Ok(())
}

/// Ignored positions for the well-moded analysis: the order must not look
/// at output positions, which are unbound at call time.
pub fn output_positions(program: &Program) -> Result<IgnoredPositions, ModeError> {
    let mut ignored = IgnoredPositions::default();
    for pred in program.predicates() {
        for p in mode_positions(program, &pred, Mode::Out)? {
            ignored.preds.insert(pred.clone(), p);
        }
    }
    Ok(ignored)
}
